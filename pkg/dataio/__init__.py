"""Загрузка рядов UCR, синтетические наборы и разбиения."""
from .series import Dataset, LabeledSeries, group_by_length, labels_of, looks_normalized, stack_values, z_normalize
from .splits import StratificationError, holdout_split, stratified_kfold
from .synthetic import pattern_window, synth_metadata, synth_pattern_dataset
from .ucr import UcrFormatError, find_ucr_files, load_ucr_dir, parse_ucr, write_ucr

__all__ = [
    "Dataset", "LabeledSeries", "group_by_length", "labels_of", "looks_normalized", "stack_values", "z_normalize",
    "StratificationError", "holdout_split", "stratified_kfold",
    "pattern_window", "synth_metadata", "synth_pattern_dataset",
    "UcrFormatError", "find_ucr_files", "load_ucr_dir", "parse_ucr", "write_ucr",
]
