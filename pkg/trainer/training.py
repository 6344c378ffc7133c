"""Двухфазное обучение: чистая классификация, затем дообучение с ожидаемой потерей."""
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Literal, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, model_validator

from backbones import EarlyClassifier
from dataio import LabeledSeries, group_by_length, labels_of, stack_values
from evalreport.evaluation import evaluate, final_step_accuracy
from evalreport.exports import export_trace
from halting import StopMode, halting_weights, init_late
from ndtensor import backward, softmax_rows, zero_grad
from objective import (ClassLoss, TradeOff, cross_entropy_loss, earliness_ramp, expected_loss_terms,
                       linear_class_loss, uniform_prefix_cross_entropy)

from .adam import AdamState, adam_step, clip_grad_norm
from .train_log import EpochRecord, Phase, TrainingLog

# Порог нормы градиента для LSTM
LSTM_CLIP_NORM = 10.0
# Множитель шага бэкбона LSTM в фазе 2; головы идут с полным η
LSTM_FINETUNE_BACKBONE_SCALE = 0.1


class TrainingDivergenceError(RuntimeError):
    """Потеря стала нечисловой."""


class TrainConfig(BaseModel):
    """Параметры одной фазы обучения."""
    model_config = ConfigDict(frozen=True)

    phase: Phase = "classification"
    alpha: Optional[float] = Field(None, ge=0.0, le=1.0)
    learning_rate: float = Field(0.01, gt=0.0)
    epochs: int = Field(30, ge=0)
    batch_size: int = Field(32, ge=1)
    seed: int = 0
    class_loss: ClassLoss = "linear"
    # None: 10 для LSTM, без ограничения для сверточной модели
    clip_norm: Optional[float] = Field(None, gt=0.0)
    # None: LSTM_FINETUNE_BACKBONE_SCALE для LSTM в фазе 2, иначе 1
    backbone_lr_scale: Optional[float] = Field(None, gt=0.0, le=1.0)
    init_late: bool = True
    eval_mode: StopMode = StopMode.EXPECTED
    record_wall_time: bool = True

    @model_validator(mode="after")
    def _alpha_matches_phase(self):
        if self.phase == "finetune" and self.alpha is None:
            raise ValueError("Для фазы finetune нужен alpha")
        if self.phase == "classification" and self.alpha is not None:
            raise ValueError("alpha задается только для фазы finetune")
        return self

    @property
    def tradeoff(self) -> TradeOff:
        return TradeOff(alpha=self.alpha)


@dataclass
class SnapshotPlan:
    """Выгрузка трассы P(t) одного ряда после выбранных эпох (0 - до первого шага)."""
    series: LabeledSeries
    directory: Path
    epochs: Tuple[int, ...]

    def path_for(self, epoch: int) -> Path:
        return Path(self.directory) / f"trace_epoch{epoch:03d}.csv"


class _EpochSums:
    """Взвешенные по размеру батча суммы метрик эпохи."""

    def __init__(self):
        self.count = 0
        self.parts: Dict[str, List[float]] = {}

    def add(self, size: int, **values: float):
        self.count += size
        for key, value in values.items():
            self.parts.setdefault(key, []).append(value * size)

    def mean(self, key: str) -> float:
        return math.fsum(self.parts[key]) / self.count


def make_batches(series: Sequence[LabeledSeries], batch_size: int, rng: np.random.Generator) -> List[np.ndarray]:
    """
    Батчи индексов из рядов одной длины, перемешанные генератором эпохи.

    Одиночный хвост группы присоединяется к предыдущему батчу той же длины.
    """
    batches = []
    for indices in group_by_length(series).values():
        order = rng.permutation(np.asarray(indices))
        chunks = [order[i:i + batch_size] for i in range(0, len(order), batch_size)]
        if len(chunks) > 1 and len(chunks[-1]) == 1:
            tail = chunks.pop()
            chunks[-1] = np.concatenate([chunks[-1], tail])
        batches.extend(chunks)
    return [batches[i] for i in rng.permutation(len(batches))]


def _spawn_generators(seed: int) -> Tuple[np.random.Generator, np.random.Generator]:
    shuffle_seq, dropout_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(shuffle_seq), np.random.default_rng(dropout_seq)


def _clip_norm_for(model: EarlyClassifier, cfg: TrainConfig) -> Optional[float]:
    if cfg.clip_norm is not None:
        return cfg.clip_norm
    return LSTM_CLIP_NORM if model.config.backbone == "lstm" else None


def _step_scales(model: EarlyClassifier, cfg: TrainConfig) -> Optional[Dict[str, float]]:
    scale = cfg.backbone_lr_scale
    if scale is None and cfg.phase == "finetune" and model.config.backbone == "lstm":
        scale = LSTM_FINETUNE_BACKBONE_SCALE
    if scale is None or scale == 1.0:
        return None
    return {name: scale for name in model.backbone.parameters()}


def _check_finite(value: float, epoch: int, phase: str):
    if not math.isfinite(value):
        logger.error(f"Потеря стала нечисловой на эпохе {epoch} ({phase})")
        raise TrainingDivergenceError(f"Расходимость обучения: потеря {value} на эпохе {epoch} ({phase})")


def _apply_gradients(params, state: AdamState, cfg: TrainConfig, clip_norm: Optional[float],
                     scales: Optional[Dict[str, float]] = None):
    grads = {name: node.grad for name, node in params.items()}
    if clip_norm is not None:
        norm = clip_grad_norm(grads, clip_norm)
        if norm > clip_norm:
            logger.debug(f"Норма градиента {norm:.3f} ограничена до {clip_norm}")
    adam_step(params, grads, state, cfg.learning_rate, scales)


def _optimizer_record(state: AdamState, cfg: TrainConfig, scales: Optional[Dict[str, float]]) -> Dict[str, float]:
    record = {**state.hyperparameters(), "learning_rate": cfg.learning_rate}
    if scales:
        record["backbone_lr_scale"] = next(iter(scales.values()))
    return record


def _elapsed_ms(started: float, cfg: TrainConfig) -> Optional[float]:
    return round((time.perf_counter() - started) * 1000.0, 3) if cfg.record_wall_time else None


def _require_data(train: Sequence[LabeledSeries], model: EarlyClassifier):
    if not train:
        raise ValueError("Пустая обучающая выборка")
    channels = {s.channels for s in train}
    if channels != {model.config.input_dim}:
        raise ValueError(f"Размерность рядов {sorted(channels)} не совпадает с input_dim={model.config.input_dim}")


def train_phase1(model: EarlyClassifier, train: Sequence[LabeledSeries], cfg: TrainConfig,
                 validation: Optional[Sequence[LabeledSeries]] = None) -> TrainingLog:
    """
    Фаза 1: cross-entropy, усредненная по всем префиксам (равномерный закон P(t)).

    Голова остановки в потерю не входит и не обновляется.

    Args:
        model: Модель
        train: Обучающие ряды
        cfg: Параметры с phase="classification"
        validation: Ряды для точности по последнему моменту

    Returns:
        TrainingLog: Записи по эпохам
    """
    if cfg.phase != "classification":
        raise ValueError(f"train_phase1 ожидает phase=classification, получено {cfg.phase}")
    _require_data(train, model)
    params = model.classification_parameters()
    state = AdamState()
    clip_norm = _clip_norm_for(model, cfg)
    scales = _step_scales(model, cfg)
    shuffle_rng, dropout_rng = _spawn_generators(cfg.seed)
    log = TrainingLog()
    logger.info(f"Фаза 1: {len(train)} рядов, {cfg.epochs} эпох, η={cfg.learning_rate}, {model.config.describe()}")

    for epoch in range(1, cfg.epochs + 1):
        started = time.perf_counter()
        sums = _EpochSums()
        for batch in make_batches(train, cfg.batch_size, shuffle_rng):
            chosen = [train[i] for i in batch]
            x, y = stack_values(chosen), labels_of(chosen)
            zero_grad(model.parameters().values())
            output = model.forward(x, training=True, rng=dropout_rng)
            loss = uniform_prefix_cross_entropy(output.logits, y)
            value = loss.item()
            _check_finite(value, epoch, "classification")
            backward(loss)
            _apply_gradients(params, state, cfg, clip_norm, scales)
            accuracy = float(np.mean(output.logits.values[:, -1].argmax(axis=-1) == y))
            sums.add(len(chosen), loss=value, cls_loss=value,
                     earliness_loss=float(earliness_ramp(x.shape[1]).mean()), train_acc=accuracy)

        log.append(EpochRecord(
            epoch=epoch, phase="classification", loss=sums.mean("loss"), cls_loss=sums.mean("cls_loss"),
            earliness_loss=sums.mean("earliness_loss"), train_acc=sums.mean("train_acc"),
            val_acc=final_step_accuracy(model, validation) if validation else None,
            wall_ms=_elapsed_ms(started, cfg), optimizer=_optimizer_record(state, cfg, scales)))
    return log


def _class_losses(output, y: np.ndarray, class_loss: ClassLoss):
    if class_loss == "cross_entropy":
        return cross_entropy_loss(output.logits, y)
    return linear_class_loss(softmax_rows(output.logits), y)


def _write_snapshot(model: EarlyClassifier, snapshots: Optional[SnapshotPlan], epoch: int):
    if snapshots is not None and epoch in snapshots.epochs:
        export_trace(model, snapshots.series, snapshots.path_for(epoch))


def train_phase2(model: EarlyClassifier, train: Sequence[LabeledSeries], cfg: TrainConfig,
                 validation: Optional[Sequence[LabeledSeries]] = None,
                 snapshots: Optional[SnapshotPlan] = None) -> TrainingLog:
    """
    Фаза 2: дообучение всех параметров, включая голову остановки, по ожиданию
    α·L_c + (1 - α)·L_e относительно P(t).

    Args:
        model: Модель после фазы 1
        train: Обучающие ряды
        cfg: Параметры с phase="finetune" и alpha
        validation: Ряды для точности, ранности и стоимости после каждой эпохи
        snapshots: Выгрузка трасс одного ряда по эпохам

    Returns:
        TrainingLog: Записи по эпохам; loss = α·cls_loss + (1 - α)·earliness_loss
    """
    if cfg.phase != "finetune":
        raise ValueError(f"train_phase2 ожидает phase=finetune, получено {cfg.phase}")
    _require_data(train, model)
    if cfg.init_late:
        init_late(model.stopping)
    params = model.parameters()
    state = AdamState()
    clip_norm = _clip_norm_for(model, cfg)
    scales = _step_scales(model, cfg)
    shuffle_rng, dropout_rng = _spawn_generators(cfg.seed)
    tradeoff = cfg.tradeoff
    alpha = tradeoff.alpha
    log = TrainingLog()
    logger.info(f"Фаза 2: α={alpha}, {len(train)} рядов, {cfg.epochs} эпох, η={cfg.learning_rate}, "
                f"потеря классификации: {cfg.class_loss}")
    _write_snapshot(model, snapshots, 0)

    for epoch in range(1, cfg.epochs + 1):
        started = time.perf_counter()
        sums = _EpochSums()
        for batch in make_batches(train, cfg.batch_size, shuffle_rng):
            chosen = [train[i] for i in batch]
            x, y = stack_values(chosen), labels_of(chosen)
            zero_grad(params.values())
            output = model.forward(x, training=True, rng=dropout_rng)
            trace = halting_weights(output.delta)
            terms = expected_loss_terms(_class_losses(output, y, cfg.class_loss), trace, tradeoff)
            values = terms.as_floats()
            _check_finite(values["loss"], epoch, "finetune")
            backward(terms.total)
            _apply_gradients(params, state, cfg, clip_norm, scales)
            correct = output.logits.values.argmax(axis=-1) == y[:, None]
            accuracy = float(np.mean((trace.halt_prob.values * correct).sum(axis=-1)))
            sums.add(len(chosen), cls_loss=values["cls_loss"], earliness_loss=values["earliness_loss"],
                     train_acc=accuracy)

        cls_part, earliness_part = sums.mean("cls_loss"), sums.mean("earliness_loss")
        record = EpochRecord(
            epoch=epoch, phase="finetune", loss=alpha * cls_part + (1.0 - alpha) * earliness_part,
            cls_loss=cls_part, earliness_loss=earliness_part, train_acc=sums.mean("train_acc"),
            wall_ms=_elapsed_ms(started, cfg), optimizer=_optimizer_record(state, cfg, scales))
        if validation:
            report = evaluate(model, validation, alpha, cfg.eval_mode, seed=cfg.seed, dataset="validation").record
            record = record.model_copy(update={"val_acc": report.accuracy, "val_earliness": report.earliness,
                                               "val_cost": report.mean_cost})
        log.append(record)
        _write_snapshot(model, snapshots, epoch)
    return log


def finetune_config(base: TrainConfig, alpha: float, epochs: int, learning_rate: Optional[float] = None,
                    **overrides) -> TrainConfig:
    """Параметры фазы 2 по параметрам фазы 1: η переиспользуется, если не задан отдельно."""
    values = base.model_dump()
    values.update(phase="finetune", alpha=alpha, epochs=epochs,
                  learning_rate=learning_rate if learning_rate is not None else base.learning_rate, **overrides)
    return TrainConfig(**values)


def train_two_phase(model: EarlyClassifier, train: Sequence[LabeledSeries], phase1: TrainConfig,
                    phase2: TrainConfig, validation: Optional[Sequence[LabeledSeries]] = None,
                    snapshots: Optional[SnapshotPlan] = None) -> TrainingLog:
    log = train_phase1(model, train, phase1, validation)
    log.extend(train_phase2(model, train, phase2, validation, snapshots))
    return log


def snapshot_epochs(values: Iterable[int]) -> Tuple[int, ...]:
    return tuple(sorted({int(v) for v in values if int(v) >= 0}))
