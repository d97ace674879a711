from segbench.data.types import DatasetSpec, EvalSample, SegmentationSample
from segbench.data.datasets import dataset_spec, load_dataset, registered_datasets
from segbench.data.label_tables import cityscapes_train_id_lut, map_labels
from segbench.data.transforms import augment_train, prepare_eval

__all__ = [
    "DatasetSpec",
    "EvalSample",
    "SegmentationSample",
    "augment_train",
    "cityscapes_train_id_lut",
    "dataset_spec",
    "load_dataset",
    "map_labels",
    "prepare_eval",
    "registered_datasets",
]
