from .adam import AdamState, adam_step
from .config import IMAGE_MODE, TEXT_MODE, TrainConfig
from .densify import DensifyReport, DensifyThresholds, densify_and_prune
from .losses import ReferenceInput, reference_loss, resize_bilinear
from .loop import TrainResult, train_stage1
from .sampling import elevation_bounds, sample_camera

__all__ = [
    "AdamState",
    "adam_step",
    "IMAGE_MODE",
    "TEXT_MODE",
    "TrainConfig",
    "DensifyReport",
    "DensifyThresholds",
    "densify_and_prune",
    "ReferenceInput",
    "reference_loss",
    "resize_bilinear",
    "TrainResult",
    "train_stage1",
    "elevation_bounds",
    "sample_camera",
]
