"""Временные ряды с метками и наборы данных."""
from dataclasses import dataclass, field, replace
from typing import Dict, List, Sequence

import numpy as np

# Порог стандартного отклонения, ниже которого ряд только центрируется
STD_FLOOR = 1e-12


@dataclass(frozen=True)
class LabeledSeries:
    """Ряд наблюдений x_0..x_T формы [N, D] и индекс класса."""
    values: np.ndarray
    label: int
    original_label: str = ""

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] < 1:
            raise ValueError(f"Ряд должен иметь форму [N, D] с N >= 1, получено {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("Ряд содержит нечисловые значения")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def last_index(self) -> int:
        return self.values.shape[0] - 1

    @property
    def channels(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class Dataset:
    """Обучающая и тестовая выборки с общим отображением меток."""
    name: str
    train: List[LabeledSeries]
    test: List[LabeledSeries]
    num_classes: int
    label_map: Dict[str, int] = field(default_factory=dict)
    z_normalized: bool = False

    def __post_init__(self):
        for part in (self.train, self.test):
            for series in part:
                if not 0 <= series.label < self.num_classes:
                    raise ValueError(f"{self.name}: метка {series.label} вне [0, {self.num_classes - 1}]")

    @property
    def input_dim(self) -> int:
        return self.train[0].channels if self.train else 1

    def split(self, name: str) -> List[LabeledSeries]:
        if name not in ("train", "test"):
            raise ValueError(f"Неизвестная часть набора: {name}")
        return self.train if name == "train" else self.test

    def normalized(self) -> "Dataset":
        """Копия с z-нормализацией каждого ряда."""
        return replace(self, train=[z_normalize(s) for s in self.train],
                       test=[z_normalize(s) for s in self.test], z_normalized=True)


def z_normalize(series: LabeledSeries) -> LabeledSeries:
    """
    Нормализация по каждому каналу: среднее 0, стандартное отклонение 1.

    Каналы с std < 1e-12 только центрируются.
    """
    values = series.values
    centered = values - values.mean(axis=0, keepdims=True)
    std = values.std(axis=0, keepdims=True)
    scaled = np.where(std < STD_FLOOR, centered, centered / np.where(std < STD_FLOOR, 1.0, std))
    return replace(series, values=scaled)


def looks_normalized(series: Sequence[LabeledSeries], tolerance: float = 1e-3) -> bool:
    """Признак уже нормализованного архива: у каждого ряда среднее ≈ 0 и std ≈ 1 (или константа)."""
    for s in series:
        mean = s.values.mean(axis=0)
        std = s.values.std(axis=0)
        if np.any(np.abs(mean) > tolerance):
            return False
        if np.any((std > STD_FLOOR) & (np.abs(std - 1.0) > tolerance)):
            return False
    return True


def stack_values(series: Sequence[LabeledSeries]) -> np.ndarray:
    """Батч [B, N, D] из рядов одинаковой длины."""
    lengths = {s.length for s in series}
    if len(lengths) != 1:
        raise ValueError(f"Ряды батча имеют разную длину: {sorted(lengths)}")
    return np.stack([s.values for s in series])


def labels_of(series: Sequence[LabeledSeries]) -> np.ndarray:
    return np.array([s.label for s in series], dtype=np.int64)


def group_by_length(series: Sequence[LabeledSeries]) -> Dict[int, List[int]]:
    """Индексы рядов по длине, в порядке возрастания длины."""
    groups: Dict[int, List[int]] = {}
    for index, s in enumerate(series):
        groups.setdefault(s.length, []).append(index)
    return dict(sorted(groups.items()))
