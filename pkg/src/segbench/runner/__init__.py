from segbench.runner.config import ExperimentConfig, load_matrix
from segbench.runner.store import ResultsStore

__all__ = ["ExperimentConfig", "ResultsStore", "load_matrix"]
