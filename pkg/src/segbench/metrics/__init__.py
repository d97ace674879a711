from segbench.metrics.confusion import ConfusionMatrix, accumulate_confusion, compute_miou
from segbench.metrics.sliding import sliding_window_logits, window_offsets

__all__ = [
    "ConfusionMatrix",
    "accumulate_confusion",
    "compute_miou",
    "sliding_window_logits",
    "window_offsets",
]
