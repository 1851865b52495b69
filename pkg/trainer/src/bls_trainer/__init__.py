"""UNet++ lesion-segmentation trainer operating on cohort manifest files."""

__version__ = "0.1.0"

from .folds import FoldSplit, make_folds
from .losses import cross_entropy_loss, dice_loss, focal_loss, hybrid_loss
from .model import UNetPlusPlus
from .train import TrainConfig, train_folds

__all__ = [
    "__version__",
    "FoldSplit",
    "make_folds",
    "dice_loss",
    "focal_loss",
    "cross_entropy_loss",
    "hybrid_loss",
    "UNetPlusPlus",
    "TrainConfig",
    "train_folds",
]
