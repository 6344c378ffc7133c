"""Опубликованные результаты других методов ранней классификации."""
import csv
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Union

from loguru import logger

COLUMNS = ("method", "dataset", "param", "accuracy", "earliness")

# Параметр каждого метода, соответствующий весу α
METHOD_PARAMETERS: Dict[float, Dict[str, float]] = {
    0.6: {"SR2-CF2": 0.6, "RelClass": 0.001, "EDSC": 2.5, "ECTS": 0.1},
    0.7: {"SR2-CF2": 0.7, "RelClass": 0.1, "EDSC": 3.0, "ECTS": 0.2},
    0.8: {"SR2-CF2": 0.8, "RelClass": 0.5, "EDSC": 3.5, "ECTS": 0.4},
    0.9: {"SR2-CF2": 0.9, "RelClass": 0.9, "EDSC": 3.5, "ECTS": 0.8},
}


class ReferenceDataRequired(FileNotFoundError):
    """Нет файла с результатами конкурентов."""


@dataclass(frozen=True)
class CompetitorRow:
    dataset: str
    param: float
    accuracy: float
    earliness: float


@dataclass
class CompetitorTable:
    """Результаты одного метода: строка на пару (набор, параметр)."""
    method: str
    rows: List[CompetitorRow]

    def at_alpha(self, alpha: float) -> Dict[str, CompetitorRow]:
        """Строки по наборам для параметра, соответствующего α."""
        param = native_parameter(self.method, alpha)
        return {row.dataset: row for row in self.rows
                if math.isclose(row.param, param, rel_tol=1e-9, abs_tol=1e-12)}


def native_parameter(method: str, alpha: float) -> float:
    """Собственный параметр метода для веса α; для неизвестных пар - сам α."""
    for known_alpha, params in METHOD_PARAMETERS.items():
        if math.isclose(known_alpha, alpha, abs_tol=1e-9) and method in params:
            return params[method]
    return alpha


def competitor_cost(accuracy: float, earliness: float, alpha: float) -> float:
    """α·(1 - accuracy) + (1 - α)·earliness по опубликованным точности и ранности."""
    return alpha * (1.0 - accuracy) + (1.0 - alpha) * earliness


def load_competitors(path: Union[str, Path]) -> Dict[str, CompetitorTable]:
    """
    Читает CSV со столбцами method,dataset,param,accuracy,earliness.

    Args:
        path: Путь к файлу

    Returns:
        Dict[str, CompetitorTable]: Таблицы по методам

    Raises:
        ReferenceDataRequired: Файла нет
    """
    path = Path(path)
    if not path.exists():
        raise ReferenceDataRequired(f"Файл результатов конкурентов не найден: {path}")
    grouped: Dict[str, Dict[tuple, CompetitorRow]] = defaultdict(dict)
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        missing = set(COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"{path.name}: нет столбцов {sorted(missing)}")
        for number, raw in enumerate(reader, start=2):
            try:
                row = CompetitorRow(dataset=raw["dataset"].strip(), param=float(raw["param"]),
                                    accuracy=float(raw["accuracy"]), earliness=float(raw["earliness"]))
            except (TypeError, ValueError) as e:
                raise ValueError(f"{path.name}, строка {number}: {e}") from e
            key = (row.dataset, row.param)
            method = raw["method"].strip()
            if key in grouped[method]:
                logger.warning(f"{path.name}, строка {number}: повтор {method} {key}, оставлена последняя")
            grouped[method][key] = row
    tables = {method: CompetitorTable(method=method, rows=list(rows.values())) for method, rows in grouped.items()}
    logger.info(f"Загружены результаты методов: {', '.join(sorted(tables))}")
    return tables
