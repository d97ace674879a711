"""Benchmark harness for fine-tuning ViT encoders on semantic segmentation.

Trains encoder/decoder combinations over a configurable settings matrix
(freezing, decoder type, model size, patch size, dataset, domain shift),
evaluates with mIoU, and quantifies how settings change the model
performance ranking via Kendall rank correlation.
"""

__version__ = "0.1.0"
