"""Оценка модели: точность, ранность и средняя стоимость решений."""
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import List, Optional, Protocol, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field

from dataio import LabeledSeries, group_by_length, stack_values
from halting import StopMode, halting_weights, sample_stops
from ndtensor import no_grad
from objective import DecisionOutcome, TradeOff, evaluation_cost

# Рядов одной длины в одном прогоне инференса
INFER_CHUNK = 256


class InferenceModel(Protocol):
    num_classes: int

    def infer(self, x) -> Tuple[np.ndarray, np.ndarray]:
        ...


class EvalRecord(BaseModel):
    """Сводные метрики одной пары (модель, набор) при заданном α."""
    dataset: str
    alpha: float = Field(..., ge=0.0, le=1.0)
    accuracy: float = Field(..., ge=0.0, le=1.0)
    earliness: float = Field(..., ge=0.0, le=1.0)
    mean_cost: float = Field(..., ge=0.0, le=1.0)
    stop_mode: StopMode
    seed: int
    num_series: int = Field(..., ge=1)


@dataclass(frozen=True)
class SeriesOutcome:
    """Решение по одному ряду."""
    index: int
    truth: int
    predicted: int
    t_stop: int
    last_index: int
    cost: float

    @property
    def earliness(self) -> float:
        return self.t_stop / self.last_index if self.last_index else 0.0


@dataclass
class EvaluationReport:
    record: EvalRecord
    outcomes: List[SeriesOutcome]

    def to_dict(self, with_outcomes: bool = False) -> dict:
        data = {"record": self.record.model_dump(mode="json")}
        if with_outcomes:
            data["outcomes"] = [asdict(o) for o in self.outcomes]
        return data

    def write(self, path: Union[str, Path], with_outcomes: bool = False) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(with_outcomes), indent=2, ensure_ascii=False), encoding="utf-8")
        logger.info(f"Отчет оценки записан: {path}")
        return path


def _check_classes(model: InferenceModel, series: Sequence[LabeledSeries]):
    if not series:
        raise ValueError("Нет рядов для оценки")
    top = max(s.label for s in series)
    if top >= model.num_classes:
        raise ValueError(f"Метка {top} в данных, модель различает {model.num_classes} классов")


def _infer_groups(model: InferenceModel, series: Sequence[LabeledSeries]):
    """Вероятности классов и δ каждого ряда, прогоняемые батчами одной длины."""
    probs: List[Optional[np.ndarray]] = [None] * len(series)
    deltas: List[Optional[np.ndarray]] = [None] * len(series)
    for indices in group_by_length(series).values():
        for start in range(0, len(indices), INFER_CHUNK):
            chunk = indices[start:start + INFER_CHUNK]
            batch_probs, batch_delta = model.infer(stack_values([series[i] for i in chunk]))
            for row, index in enumerate(chunk):
                probs[index], deltas[index] = batch_probs[row], batch_delta[row]
    return probs, deltas


def evaluate(model: InferenceModel, series: Sequence[LabeledSeries], alpha: float,
             stop_mode: Union[StopMode, str] = StopMode.BERNOULLI, seed: int = 0,
             dataset: str = "") -> EvaluationReport:
    """
    Решения модели по каждому ряду и сводные метрики.

    Для каждого ряда строится трасса остановки, выбирается t_stop и класс
    argmax ŷ_{t_stop}. Случайные остановки тянутся одним генератором в порядке
    индексов рядов.

    Args:
        model: Обученная модель (метод infer)
        series: Ряды для оценки
        alpha: Вес α стоимости
        stop_mode: bernoulli, threshold или expected
        seed: Зерно генератора остановок
        dataset: Имя набора для записи

    Returns:
        EvaluationReport: Сводка и решения по рядам
    """
    stop_mode = StopMode(stop_mode)
    tradeoff = TradeOff(alpha=alpha)
    _check_classes(model, series)
    probs, deltas = _infer_groups(model, series)
    rng = np.random.default_rng(seed)

    outcomes = []
    with no_grad():
        for index, s in enumerate(series):
            trace = halting_weights(deltas[index])
            t_stop = int(sample_stops(trace.delta.values, trace.halt_prob.values, stop_mode, rng)[0])
            predicted = int(np.argmax(probs[index][t_stop]))
            decision = DecisionOutcome(predicted=predicted, truth=s.label, t=t_stop, T=s.last_index)
            outcomes.append(SeriesOutcome(index=index, truth=s.label, predicted=predicted, t_stop=t_stop,
                                          last_index=s.last_index, cost=evaluation_cost(decision, tradeoff)))

    count = len(outcomes)
    record = EvalRecord(
        dataset=dataset, alpha=alpha, stop_mode=stop_mode, seed=seed, num_series=count,
        accuracy=math.fsum(o.predicted == o.truth for o in outcomes) / count,
        earliness=math.fsum(o.earliness for o in outcomes) / count,
        mean_cost=math.fsum(o.cost for o in outcomes) / count)
    logger.info(f"Оценка {dataset or 'набора'} (α={alpha}, {stop_mode.value}): точность {record.accuracy:.4f}, "
                f"ранность {record.earliness:.4f}, стоимость {record.mean_cost:.4f}")
    return EvaluationReport(record=record, outcomes=outcomes)


def final_step_accuracy(model: InferenceModel, series: Sequence[LabeledSeries]) -> float:
    """Точность классификации по полному ряду (момент T)."""
    _check_classes(model, series)
    probs, _ = _infer_groups(model, series)
    correct = [int(np.argmax(p[-1])) == s.label for p, s in zip(probs, series)]
    return math.fsum(correct) / len(correct)


def read_records(paths: Sequence[Union[str, Path]]) -> List[EvalRecord]:
    """Записи EvalRecord из JSON-отчетов команды eval."""
    records = []
    for path in paths:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        records.append(EvalRecord.model_validate(data.get("record", data)))
    return records
