"""Синтетический набор: классы различаются коротким паттерном в известной позиции."""
from typing import Dict, List, Optional

import numpy as np
from loguru import logger

from .series import Dataset, LabeledSeries


def pattern_shape(length: int) -> np.ndarray:
    """Гладкий импульс sin(π(k + 0.5)/L), k = 0..L-1."""
    return np.sin(np.pi * (np.arange(length) + 0.5) / length)


def pattern_window(length: int, signal_pos: float) -> slice:
    """Окно паттерна: начало ⌊p·N⌋, длина max(1, N // 10)."""
    start = int(np.floor(signal_pos * length))
    return slice(start, start + max(1, length // 10))


def synth_pattern_dataset(n_per_class: int, length: int, signal_pos: float, noise: float, seed: int,
                          amplitude: float = 2.0, n_test_per_class: Optional[int] = None,
                          name: str = "SynthPattern") -> Dataset:
    """
    Два класса шума с паттерном вверх (класс 0) или вниз (класс 1).

    До момента ⌊p·N⌋ классы распределены одинаково, поэтому оптимальная
    остановка не может быть раньше этого момента.

    Args:
        n_per_class: Рядов каждого класса в обучающей выборке
        length: Длина ряда N
        signal_pos: Позиция паттерна p, доля длины из (0, 1)
        noise: Стандартное отклонение шума σ
        seed: Зерно генератора
        amplitude: Высота паттерна
        n_test_per_class: Рядов каждого класса в тестовой выборке (по умолчанию как train)
        name: Имя набора

    Returns:
        Dataset: Набор с метками "1" (вверх) и "2" (вниз)
    """
    if not 0.0 < signal_pos < 1.0:
        raise ValueError(f"Позиция паттерна должна лежать в (0, 1), получено {signal_pos}")
    if n_per_class < 1 or length < 2:
        raise ValueError("Нужен хотя бы один ряд на класс и длина ряда не меньше 2")
    if noise < 0:
        raise ValueError(f"Уровень шума не может быть отрицательным: {noise}")
    window = pattern_window(length, signal_pos)
    if window.stop > length:
        raise ValueError(f"Паттерн [{window.start}, {window.stop}) выходит за конец ряда длины {length}")

    rng = np.random.default_rng(seed)
    bump = amplitude * pattern_shape(window.stop - window.start)
    n_test = n_per_class if n_test_per_class is None else n_test_per_class

    def _split(count: int) -> List[LabeledSeries]:
        series = []
        for _ in range(count):
            for label, sign in ((0, 1.0), (1, -1.0)):
                values = noise * rng.standard_normal(length)
                values[window] += sign * bump
                series.append(LabeledSeries(values=values, label=label, original_label=str(label + 1)))
        return series

    train = _split(n_per_class)
    test = _split(n_test)
    logger.debug(f"Синтетический набор: N={length}, паттерн {window.start}..{window.stop - 1}, σ={noise}")
    return Dataset(name=name, train=train, test=test, num_classes=2, label_map={"1": 0, "2": 1})


def synth_metadata(n_per_class: int, length: int, signal_pos: float, noise: float, seed: int,
                   amplitude: float = 2.0, n_test_per_class: Optional[int] = None) -> Dict:
    """Параметры генератора для metadata.json; znorm=false, т.к. ряды уже в нужном масштабе."""
    window = pattern_window(length, signal_pos)
    return {
        "generator": "synth_pattern_dataset",
        "n_per_class": n_per_class,
        "n_test_per_class": n_per_class if n_test_per_class is None else n_test_per_class,
        "length": length,
        "signal_pos": signal_pos,
        "pattern_start": window.start,
        "pattern_length": window.stop - window.start,
        "noise": noise,
        "amplitude": amplitude,
        "seed": seed,
        "znorm": False,
    }
