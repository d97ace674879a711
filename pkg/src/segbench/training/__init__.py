from segbench.training.schedule import TrainSchedule, default_total_steps, poly_lr
from segbench.training.model import SegmentationModel, build_model
from segbench.training.results import RunResult
from segbench.training.loop import (
    accumulate_step,
    count_trainable_params,
    evaluate_model,
    run_training,
)

__all__ = [
    "RunResult",
    "SegmentationModel",
    "TrainSchedule",
    "accumulate_step",
    "build_model",
    "count_trainable_params",
    "default_total_steps",
    "evaluate_model",
    "poly_lr",
    "run_training",
]
