"""Бэкбоны последовательностей и модель ранней классификации."""
from .checkpoint import CheckpointFormatError, decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint
from .configs import ConvShapeletConfig, LstmConfig, ModelConfig
from .conv_shapelet import ConvShapeletBackbone
from .heads import LinearHead, classify
from .lstm import LstmState, StackedLstmBackbone
from .model import EarlyClassifier, ModelOutput

__all__ = [
    "CheckpointFormatError", "decode_checkpoint", "encode_checkpoint", "load_checkpoint", "save_checkpoint",
    "ConvShapeletConfig", "LstmConfig", "ModelConfig", "ConvShapeletBackbone", "LinearHead", "classify",
    "LstmState", "StackedLstmBackbone", "EarlyClassifier", "ModelOutput",
]
