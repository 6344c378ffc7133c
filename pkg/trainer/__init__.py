"""Оптимизация, двухфазное обучение и выбор модели."""
from .adam import AdamState, NonFiniteGradientError, adam_step, clip_grad_norm
from .selection import CvRow, GridPoint, SelectionResult, default_grid, expand_grid, grid_search_cv, load_grid
from .train_log import EpochRecord, TrainingLog
from .training import (LSTM_CLIP_NORM, SnapshotPlan, TrainConfig, TrainingDivergenceError, finetune_config,
                       make_batches, snapshot_epochs, train_phase1, train_phase2, train_two_phase)

__all__ = [
    "AdamState", "NonFiniteGradientError", "adam_step", "clip_grad_norm",
    "CvRow", "GridPoint", "SelectionResult", "default_grid", "expand_grid", "grid_search_cv", "load_grid",
    "EpochRecord", "TrainingLog",
    "LSTM_CLIP_NORM", "SnapshotPlan", "TrainConfig", "TrainingDivergenceError", "finetune_config",
    "make_batches", "snapshot_epochs", "train_phase1", "train_phase2", "train_two_phase",
]
