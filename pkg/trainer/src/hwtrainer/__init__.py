"""Character classifier trainer exporting HWNET1 weights."""

from .model import CharacterNet, embed_patches, export_weights, load_weights
from .train import TrainConfig, TrainResult, train

__all__ = [
    "CharacterNet",
    "TrainConfig",
    "TrainResult",
    "embed_patches",
    "export_weights",
    "load_weights",
    "train",
]
