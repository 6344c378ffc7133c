"""Стратифицированные разбиения обучающей выборки."""
from typing import List, Sequence, Tuple

import numpy as np

Fold = Tuple[np.ndarray, np.ndarray]


class StratificationError(ValueError):
    """Класс слишком мал для запрошенного разбиения."""


def _class_members(labels: np.ndarray, rng: np.random.Generator):
    for label in np.unique(labels):
        members = np.flatnonzero(labels == label)
        yield int(label), rng.permutation(members)


def stratified_kfold(labels: Sequence[int], k: int, seed: int) -> List[Fold]:
    """
    k пар (обучение, контроль) с сохранением долей классов.

    Внутри класса индексы перемешиваются генератором с заданным зерном и
    раздаются по фолдам по кругу; смещение переносится между классами,
    так что размеры фолдов различаются не более чем на единицу.

    Args:
        labels: Метки рядов
        k: Число фолдов (>= 2)
        seed: Зерно перемешивания

    Returns:
        List[Fold]: Непересекающиеся контрольные части, покрывающие все индексы
    """
    labels = np.asarray(labels, dtype=np.int64)
    if k < 2:
        raise ValueError(f"Число фолдов должно быть не меньше 2, получено {k}")
    counts = {int(label): int(count) for label, count in zip(*np.unique(labels, return_counts=True))}
    small = {label: count for label, count in counts.items() if count < k}
    if small:
        raise StratificationError(f"Классы с числом рядов меньше {k}: {small}")

    rng = np.random.default_rng(seed)
    assignment = np.empty(len(labels), dtype=np.int64)
    offset = 0
    for _, members in _class_members(labels, rng):
        assignment[members] = (offset + np.arange(len(members))) % k
        offset += len(members)

    everything = np.arange(len(labels))
    return [(everything[assignment != fold], everything[assignment == fold]) for fold in range(k)]


def holdout_split(labels: Sequence[int], fraction: float, seed: int) -> Fold:
    """Стратифицированное отделение доли fraction под валидацию (не меньше одного ряда на класс)."""
    labels = np.asarray(labels, dtype=np.int64)
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"Доля валидации должна лежать в (0, 1), получено {fraction}")
    rng = np.random.default_rng(seed)
    holdout = []
    for label, members in _class_members(labels, rng):
        if len(members) < 2:
            raise StratificationError(f"Класс {label}: нужно не меньше двух рядов для валидации")
        take = min(len(members) - 1, max(1, int(round(fraction * len(members)))))
        holdout.extend(members[:take].tolist())
    holdout = np.sort(np.array(holdout, dtype=np.int64))
    fit = np.setdiff1d(np.arange(len(labels)), holdout)
    return fit, holdout
