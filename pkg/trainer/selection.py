"""Выбор гиперпараметров: сетка из YAML и стратифицированная k-кратная кросс-валидация."""
import itertools
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import yaml
from joblib import Parallel, delayed
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from backbones import EarlyClassifier, ModelConfig
from dataio import LabeledSeries, labels_of, stratified_kfold
from evalreport.evaluation import final_step_accuracy

from .training import TrainConfig, train_phase1


class GridPoint(BaseModel):
    """Точка сетки: конфигурация бэкбона и шаг обучения."""
    model_config = ConfigDict(frozen=True)

    backbone: str
    params: Dict[str, Any] = Field(default_factory=dict)
    learning_rate: float = Field(0.01, gt=0.0)

    def model_config_for(self, num_classes: int, input_dim: int) -> ModelConfig:
        return ModelConfig.model_validate({
            "backbone": self.backbone,
            "num_classes": num_classes,
            self.backbone: {**self.params, "input_dim": input_dim},
        })

    def describe(self) -> str:
        params = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"{self.backbone}({params}), η={self.learning_rate}"


class CvRow(BaseModel):
    """Строка таблицы кросс-валидации."""
    index: int
    backbone: str
    params: Dict[str, Any]
    learning_rate: float
    fold_accuracies: List[float]
    mean_accuracy: float
    num_parameters: int


class SelectionResult(BaseModel):
    best: GridPoint
    best_model: ModelConfig
    table: List[CvRow]


def default_grid() -> Dict[str, Any]:
    """Небольшая сетка для настольных экспериментов."""
    return {
        "backbones": ["conv"],
        "learning_rate": [0.01],
        "conv": {"num_blocks": [2, 4], "kernels_per_block": [8], "width_step": [3]},
        "lstm": {"num_layers": [2], "hidden_dim": [32]},
        "folds": 3,
        "epochs": 30,
    }


def load_grid(path: Optional[Union[str, Path]] = None) -> Dict[str, Any]:
    """
    Загружает описание сетки из YAML.

    Без пути возвращает сетку по умолчанию. Явно заданный, но отсутствующий
    или испорченный файл - ошибка: другая сетка была бы другим экспериментом.
    """
    if path is None:
        logger.info("Файл сетки не задан, используем сетку по умолчанию")
        return default_grid()
    try:
        with open(path, "r", encoding="utf-8") as f:
            grid = yaml.safe_load(f)
    except FileNotFoundError:
        logger.error(f"Файл сетки {path} не найден")
        raise
    except yaml.YAMLError as e:
        logger.error(f"Ошибка разбора сетки {path}: {e}")
        raise ValueError(f"Файл сетки {path} не разбирается как YAML: {e}") from e
    if not isinstance(grid, dict):
        logger.error(f"Файл сетки {path} не содержит YAML-словарь")
        raise ValueError(f"Файл сетки {path}: ожидается YAML-словарь")
    logger.info(f"Сетка загружена из {path}")
    return grid


def _as_list(value) -> List[Any]:
    return list(value) if isinstance(value, (list, tuple)) else [value]


def expand_grid(grid: Dict[str, Any]) -> List[GridPoint]:
    """Декартово произведение значений в порядке бэкбонов и ключей файла."""
    points = []
    for backbone in _as_list(grid.get("backbones", ["conv"])):
        section = grid.get(backbone) or {}
        keys = list(section)
        for lr in _as_list(grid.get("learning_rate", [0.01])):
            for combo in itertools.product(*(_as_list(section[k]) for k in keys)):
                points.append(GridPoint(backbone=backbone, params=dict(zip(keys, combo)), learning_rate=float(lr)))
    if not points:
        raise ValueError("Сетка гиперпараметров пуста")
    return points


def _score_fold(point: GridPoint, series: Sequence[LabeledSeries], fit: np.ndarray, holdout: np.ndarray,
                num_classes: int, epochs: int, seed: int, batch_size: int) -> Tuple[float, int]:
    config = point.model_config_for(num_classes, series[0].channels)
    model = EarlyClassifier(config, seed=seed)
    cfg = TrainConfig(phase="classification", learning_rate=point.learning_rate, epochs=epochs,
                      batch_size=batch_size, seed=seed, record_wall_time=False)
    train_phase1(model, [series[i] for i in fit], cfg)
    return final_step_accuracy(model, [series[i] for i in holdout]), model.num_parameters()


def grid_search_cv(series: Sequence[LabeledSeries], num_classes: int, grid: Sequence[GridPoint], k: int = 3,
                   epochs: int = 30, seed: int = 0, batch_size: int = 32, n_jobs: int = 1) -> SelectionResult:
    """
    Выбор конфигурации по средней точности на k фолдах после фазы 1.

    Все модели инициализируются одним зерном, поэтому одинаковые точки
    сетки получают одинаковые оценки. При равной точности выбирается модель
    с меньшим числом параметров, затем более ранняя в сетке.

    Args:
        series: Обучающие ряды
        num_classes: Число классов
        grid: Точки сетки
        k: Число фолдов
        epochs: Эпох фазы 1 на каждый фолд
        seed: Зерно фолдов, инициализации и перемешивания
        batch_size: Размер батча
        n_jobs: Число параллельных задач joblib

    Returns:
        SelectionResult: Лучшая точка и полная таблица
    """
    if not grid:
        raise ValueError("Пустая сетка гиперпараметров")
    folds = stratified_kfold(labels_of(series), k, seed)
    logger.info(f"Кросс-валидация: {len(grid)} точек × {k} фолдов, {epochs} эпох, n_jobs={n_jobs}")

    tasks = [(p, f) for p in range(len(grid)) for f in range(k)]
    scores = Parallel(n_jobs=n_jobs)(
        delayed(_score_fold)(grid[p], series, folds[f][0], folds[f][1], num_classes, epochs, seed, batch_size)
        for p, f in tasks)

    table = []
    for index, point in enumerate(grid):
        accuracies = [scores[index * k + f][0] for f in range(k)]
        row = CvRow(index=index, backbone=point.backbone, params=point.params, learning_rate=point.learning_rate,
                    fold_accuracies=accuracies, mean_accuracy=math.fsum(accuracies) / k,
                    num_parameters=scores[index * k][1])
        logger.info(f"[{index}] {point.describe()}: точность {row.mean_accuracy:.4f}")
        table.append(row)

    winner = max(table, key=lambda r: (r.mean_accuracy, -r.num_parameters, -r.index))
    best = grid[winner.index]
    logger.info(f"Лучшая конфигурация: {best.describe()} (точность {winner.mean_accuracy:.4f})")
    return SelectionResult(best=best, best_model=best.model_config_for(num_classes, series[0].channels), table=table)
