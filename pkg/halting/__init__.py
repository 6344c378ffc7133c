"""Вероятностная остановка: δ_t, бюджет и распределение P(t)."""
from .distribution import (DELTA_FLOOR, LATE_BIAS, HaltingTrace, StopMode, halting_distribution, halting_weights,
                           init_late, sample_stop, sample_stops, stop_probability)

__all__ = [
    "DELTA_FLOOR", "LATE_BIAS", "HaltingTrace", "StopMode", "halting_distribution", "halting_weights",
    "init_late", "sample_stop", "sample_stops", "stop_probability",
]
