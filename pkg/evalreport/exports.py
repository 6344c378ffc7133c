"""Выгрузка числовых данных для графиков в CSV."""
import csv
import math
from pathlib import Path
from typing import Dict, List, Sequence, Union

from loguru import logger

from dataio import LabeledSeries
from halting import halting_weights

from .competitors import CompetitorTable, competitor_cost
from .domination import ours_costs
from .evaluation import EvalRecord, InferenceModel

PathLike = Union[str, Path]
SCATTER_COLUMNS = ["dataset", "alpha", "metric", "ours", "theirs"]
TRADEOFF_COLUMNS = ["method", "alpha", "accuracy", "earliness"]
LOSS_CURVE_COLUMNS = ["p_true", "zero_one", "linear", "cross_entropy"]


def _write_rows(path: PathLike, columns: List[str], rows: Sequence[Dict]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return path


def trace_rows(model: InferenceModel, series: LabeledSeries) -> List[Dict]:
    """Строки трассы: t, x_t (первый канал), ŷ_t по классам, δ_t, B_t и P(t)."""
    probs, delta = model.infer(series.values[None])
    deltas, budget, halt_prob = halting_weights(delta[0]).arrays()
    rows = []
    for t in range(series.length):
        row = {"t": t, "x": float(series.values[t, 0])}
        row.update({f"yhat_{k}": float(probs[0, t, k]) for k in range(probs.shape[-1])})
        row.update({"delta": float(deltas[t]), "budget": float(budget[t]), "halt_prob": float(halt_prob[t])})
        rows.append(row)
    return rows


def export_trace(model: InferenceModel, series: LabeledSeries, path: PathLike) -> Path:
    rows = trace_rows(model, series)
    columns = list(rows[0])
    path = _write_rows(path, columns, rows)
    logger.debug(f"Трасса ряда ({series.length} точек) записана: {path}")
    return path


def _ours_metric(records: Sequence[EvalRecord], alpha: float, attribute: str) -> Dict[str, float]:
    grouped: Dict[str, List[float]] = {}
    for record in records:
        if math.isclose(record.alpha, alpha, abs_tol=1e-9):
            grouped.setdefault(record.dataset, []).append(getattr(record, attribute))
    return {d: math.fsum(v) / len(v) for d, v in grouped.items()}


def scatter_rows(ours: Sequence[EvalRecord], theirs: CompetitorTable) -> List[Dict]:
    rows = []
    for alpha in sorted({r.alpha for r in ours}):
        their_rows = theirs.at_alpha(alpha)
        metrics = {
            "accuracy": (_ours_metric(ours, alpha, "accuracy"), {d: r.accuracy for d, r in their_rows.items()}),
            "earliness": (_ours_metric(ours, alpha, "earliness"), {d: r.earliness for d, r in their_rows.items()}),
            "cost": (ours_costs(ours, alpha),
                     {d: competitor_cost(r.accuracy, r.earliness, alpha) for d, r in their_rows.items()}),
        }
        for dataset in sorted(set(metrics["cost"][0]) & set(their_rows)):
            for metric, (our_values, their_values) in metrics.items():
                rows.append({"dataset": dataset, "alpha": alpha, "metric": metric,
                             "ours": our_values[dataset], "theirs": their_values[dataset]})
    return rows


def export_scatter(ours: Sequence[EvalRecord], theirs: CompetitorTable, path: PathLike) -> Path:
    """Длинная таблица (набор, α, метрика, наше значение, их значение) для точности, ранности и стоимости."""
    rows = scatter_rows(ours, theirs)
    if not rows:
        logger.warning(f"Нет общих наборов с {theirs.method}: записан только заголовок")
    return _write_rows(path, SCATTER_COLUMNS, rows)


def export_tradeoff_curve(ours: Sequence[EvalRecord], theirs: CompetitorTable, dataset: str,
                          path: PathLike) -> Path:
    """Точность и ранность одного набора при разных α для нас и конкурента."""
    rows = []
    for alpha in sorted({r.alpha for r in ours if r.dataset == dataset}):
        rows.append({"method": "ours", "alpha": alpha,
                     "accuracy": _ours_metric(ours, alpha, "accuracy")[dataset],
                     "earliness": _ours_metric(ours, alpha, "earliness")[dataset]})
        row = theirs.at_alpha(alpha).get(dataset)
        if row is not None:
            rows.append({"method": theirs.method, "alpha": alpha, "accuracy": row.accuracy,
                         "earliness": row.earliness})
    if not rows:
        logger.warning(f"Нет записей для набора {dataset}")
    return _write_rows(path, TRADEOFF_COLUMNS, rows)


def export_loss_curves(rows: Sequence[Dict], path: PathLike) -> Path:
    return _write_rows(path, LOSS_CURVE_COLUMNS, rows)
