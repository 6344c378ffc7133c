"""Командная строка: обучение, оценка, выбор модели, трассы и сравнение с конкурентами."""
import functools
import glob
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import click
import numpy as np
from loguru import logger
from pydantic import ValidationError

from backbones import CheckpointFormatError, EarlyClassifier, ModelConfig, load_checkpoint, save_checkpoint
from config.settings import (DEFAULT_SEED, ENABLE_DEBUG, LOG_FILE, LOG_LEVEL, LOG_RETENTION, LOG_ROTATION,
                             LOG_WALL_TIME, N_JOBS, RUNS_DIR)
from dataio import (StratificationError, UcrFormatError, holdout_split, labels_of, load_ucr_dir, synth_metadata,
                    synth_pattern_dataset, write_ucr)
from evalreport import (ReferenceDataRequired, domination_matrix, evaluate, export_loss_curves, export_scatter,
                        export_trace, export_tradeoff_curve, load_competitors, read_records)
from ndtensor import ArgumentError, DimensionError, NumericError
from objective import loss_curves
from trainer import (NonFiniteGradientError, SnapshotPlan, TrainConfig, TrainingDivergenceError, TrainingLog,
                     expand_grid, finetune_config, grid_search_cv, load_grid, snapshot_epochs, train_phase1,
                     train_phase2)

EXIT_FAILURE = 1
EXIT_REFERENCE_DATA = 3

LIBRARY_ERRORS = (UcrFormatError, StratificationError, CheckpointFormatError, TrainingDivergenceError,
                  NonFiniteGradientError, ArgumentError, DimensionError, NumericError, ValidationError,
                  ValueError, OSError)


def setup_logging(debug: bool = ENABLE_DEBUG):
    """Консольный вывод с цветами и файл с ротацией."""
    logger.remove()
    logger.add(
        sys.stdout,
        level="DEBUG" if debug else LOG_LEVEL,
        format="<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | <cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - <level>{message}</level>"
    )
    logger.add(
        LOG_FILE,
        rotation=LOG_ROTATION,
        retention=LOG_RETENTION,
        level="INFO",
        format="{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function}:{line} - {message}"
    )


def handle_errors(command):
    """Ошибки библиотеки: запись в лог и ненулевой код выхода."""
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except ReferenceDataRequired as e:
            logger.error(f"Нужны эталонные данные: {e}")
            sys.exit(EXIT_REFERENCE_DATA)
        except LIBRARY_ERRORS as e:
            logger.error(f"Ошибка: {e}")
            sys.exit(EXIT_FAILURE)
    return wrapper


def _write_json(path: Path, data) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, ensure_ascii=False, sort_keys=True), encoding="utf-8")
    return path


def _split_validation(dataset, val_split: Optional[float], seed: int):
    if not val_split:
        return list(dataset.train), None
    fit, holdout = holdout_split(labels_of(dataset.train), val_split, seed)
    logger.info(f"Валидация: {len(holdout)} рядов из {len(dataset.train)}")
    return [dataset.train[i] for i in fit], [dataset.train[i] for i in holdout]


@click.group()
@click.option("--debug/--no-debug", default=ENABLE_DEBUG, help="Подробный вывод в консоль")
def cli(debug: bool):
    """Ранняя классификация временных рядов с обучаемой остановкой."""
    setup_logging(debug)


@cli.command()
@click.option("--data", "data_dir", required=True, type=click.Path(file_okay=False), help="Каталог набора UCR")
@click.option("--backbone", type=click.Choice(["conv", "lstm"]), default="conv", show_default=True)
@click.option("--phase", type=click.Choice(["1", "2"]), default="1", show_default=True)
@click.option("--alpha", type=float, default=None, help="Вес α (фаза 2)")
@click.option("--lr", type=float, default=0.01, show_default=True, help="Шаг η фазы 1")
@click.option("--lr2", type=float, default=None, help="Шаг фазы 2 (по умолчанию как --lr)")
@click.option("--backbone-lr-scale", type=float, default=None,
              help="Множитель шага бэкбона в фазе 2 (по умолчанию 0.1 для LSTM, 1 для conv)")
@click.option("--epochs", type=int, default=30, show_default=True)
@click.option("--pretrain-epochs", type=int, default=30, show_default=True,
              help="Эпохи фазы 1 перед фазой 2, если не задан --init")
@click.option("--batch-size", type=int, default=32, show_default=True)
@click.option("--class-loss", type=click.Choice(["linear", "cross_entropy"]), default="linear", show_default=True)
@click.option("--val-split", type=float, default=None, help="Доля обучающей выборки под валидацию")
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--init", "init_ckpt", type=click.Path(dir_okay=False), default=None, help="Чекпоинт фазы 1")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False), help="Файл чекпоинта")
@click.option("--log", "log_path", type=click.Path(dir_okay=False), default=None, help="Журнал JSONL")
@click.option("--snapshot-epochs", "snapshot_at", default="", help="Эпохи фазы 2 для выгрузки трасс, через запятую")
@click.option("--snapshot-index", type=int, default=0, show_default=True, help="Индекс тестового ряда для трасс")
@click.option("--wall-time/--no-wall-time", default=LOG_WALL_TIME, help="Записывать время эпох")
@handle_errors
def train(data_dir, backbone, phase, alpha, lr, lr2, backbone_lr_scale, epochs, pretrain_epochs, batch_size,
          class_loss, val_split, seed, init_ckpt, out_path, log_path, snapshot_at, snapshot_index, wall_time):
    """Обучение модели (фаза 1 или фаза 2)."""
    if phase == "2" and alpha is None:
        raise click.UsageError("Для --phase 2 нужен --alpha")
    if phase == "1" and (alpha is not None or backbone_lr_scale is not None):
        raise click.UsageError("--alpha и --backbone-lr-scale относятся только к --phase 2")
    dataset = load_ucr_dir(data_dir)
    train_series, validation = _split_validation(dataset, val_split, seed)
    base = TrainConfig(phase="classification", learning_rate=lr, epochs=epochs if phase == "1" else pretrain_epochs,
                       batch_size=batch_size, seed=seed, record_wall_time=wall_time)
    log = TrainingLog()

    if init_ckpt:
        model, _ = load_checkpoint(init_ckpt)
        if model.num_classes != dataset.num_classes:
            raise ValueError(f"Чекпоинт на {model.num_classes} классов, в наборе {dataset.num_classes}")
    else:
        model = EarlyClassifier(ModelConfig.model_validate(
            {"backbone": backbone, "num_classes": dataset.num_classes,
             backbone: {"input_dim": dataset.input_dim}}), seed=seed)
    if phase == "1" or not init_ckpt:
        log.extend(train_phase1(model, train_series, base, validation))

    meta = {"dataset": dataset.name, "phase": int(phase), "seed": seed, "z_normalized": dataset.z_normalized,
            "label_map": dataset.label_map, "learning_rate": lr}
    if phase == "2":
        cfg = finetune_config(base, alpha=alpha, epochs=epochs, learning_rate=lr2, class_loss=class_loss,
                               backbone_lr_scale=backbone_lr_scale)
        plan = None
        if snapshot_at:
            plan = SnapshotPlan(series=dataset.test[snapshot_index],
                                directory=Path(out_path).parent / f"{Path(out_path).stem}_traces",
                                epochs=snapshot_epochs(int(p) for p in snapshot_at.split(",") if p.strip()))
        log.extend(train_phase2(model, train_series, cfg, validation, plan))
        meta.update(alpha=alpha, learning_rate_finetune=cfg.learning_rate, class_loss=class_loss)

    save_checkpoint(model, out_path, meta)
    if log_path:
        log.write(log_path)


@cli.command("eval")
@click.option("--ckpt", required=True, type=click.Path(dir_okay=False))
@click.option("--data", "data_dir", required=True, type=click.Path(file_okay=False))
@click.option("--alpha", type=float, required=True)
@click.option("--mode", type=click.Choice(["bernoulli", "threshold", "expected"]), default="bernoulli",
              show_default=True)
@click.option("--split", type=click.Choice(["train", "test"]), default="test", show_default=True)
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--report", "report_path", required=True, type=click.Path(dir_okay=False))
@click.option("--outcomes/--no-outcomes", default=False, help="Добавить решения по каждому ряду")
@handle_errors
def eval_command(ckpt, data_dir, alpha, mode, split, seed, report_path, outcomes):
    """Оценка чекпоинта: точность, ранность и средняя стоимость."""
    model, meta = load_checkpoint(ckpt)
    dataset = load_ucr_dir(data_dir, znorm=meta.get("z_normalized"))
    report = evaluate(model, dataset.split(split), alpha, mode, seed=seed, dataset=dataset.name)
    report.write(report_path, with_outcomes=outcomes)


@cli.command()
@click.option("--data", "data_dir", required=True, type=click.Path(file_okay=False))
@click.option("--grid", "grid_path", type=click.Path(dir_okay=False), default=None, help="YAML-файл сетки")
@click.option("--folds", type=int, default=None, help="Число фолдов (по умолчанию из сетки или 3)")
@click.option("--epochs", type=int, default=None, help="Эпохи фазы 1 (по умолчанию из сетки или 30)")
@click.option("--batch-size", type=int, default=32, show_default=True)
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--n-jobs", type=int, default=N_JOBS, show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None, 
              help="JSON с таблицей (по умолчанию RUNS_DIR/sweep_<набор>.json)")
@handle_errors
def sweep(data_dir, grid_path, folds, epochs, batch_size, seed, n_jobs, out_path):
    """Выбор гиперпараметров кросс-валидацией после фазы 1."""
    dataset = load_ucr_dir(data_dir)
    grid = load_grid(grid_path)
    result = grid_search_cv(dataset.train, dataset.num_classes, expand_grid(grid),
                            k=folds or int(grid.get("folds", 3)), epochs=epochs or int(grid.get("epochs", 30)),
                            seed=seed, batch_size=batch_size, n_jobs=n_jobs)
    out_path = out_path or RUNS_DIR / f"sweep_{dataset.name}.json"
    _write_json(out_path, {"dataset": dataset.name, **result.model_dump(mode="json")})
    logger.info(f"Таблица кросс-валидации записана: {out_path}")


@cli.command()
@click.option("--ckpt", required=True, type=click.Path(dir_okay=False))
@click.option("--data", "data_dir", required=True, type=click.Path(file_okay=False))
@click.option("--split", type=click.Choice(["train", "test"]), default="test", show_default=True)
@click.option("--index", type=int, required=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@handle_errors
def trace(ckpt, data_dir, split, index, out_path):
    """Выгрузка δ_t, B_t, P(t) и ŷ_t одного ряда в CSV."""
    model, meta = load_checkpoint(ckpt)
    series = load_ucr_dir(data_dir, znorm=meta.get("z_normalized")).split(split)
    if not 0 <= index < len(series):
        raise ValueError(f"Индекс {index} вне [0, {len(series) - 1}]")
    export_trace(model, series[index], out_path)


@cli.command()
@click.option("--ours", "ours_glob", required=True, help="Шаблон путей к JSON-отчетам eval")
@click.option("--theirs", "theirs_path", required=True, type=click.Path(dir_okay=False))
@click.option("--alpha", "alphas", type=float, multiple=True, help="Веса α (по умолчанию из наших отчетов)")
@click.option("--method", "methods", multiple=True, help="Методы конкурентов (по умолчанию все)")
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None)
@click.option("--scatter", "scatter_dir", type=click.Path(file_okay=False), default=None,
              help="Каталог для CSV диаграмм рассеяния")
@click.option("--curve", "curve_datasets", multiple=True,
              help="Наборы для кривых точность-ранность по α (в каталог --scatter)")
@handle_errors
def compare(ours_glob, theirs_path, alphas, methods, report_path, scatter_dir, curve_datasets):
    """Таблицы доминирования против опубликованных результатов."""
    if curve_datasets and not scatter_dir:
        raise click.UsageError("--curve требует --scatter")
    tables = load_competitors(theirs_path)
    if methods:
        unknown = sorted(set(methods) - set(tables))
        if unknown:
            raise ValueError(f"Нет результатов методов: {unknown}")
        tables = {m: tables[m] for m in methods}
    paths = sorted(glob.glob(ours_glob))
    if not paths:
        raise ValueError(f"Нет отчетов по шаблону {ours_glob}")
    records = read_records(paths)
    alphas = sorted(set(alphas) or {r.alpha for r in records})
    results = domination_matrix(records, tables, alphas)
    for result in results:
        wins, losses, ties = result.counts
        click.echo(f"{result.method:<10} α={result.alpha:<4} {wins} / {losses} (ничьих {ties})")
    if report_path:
        _write_json(report_path, {"results": [r.to_dict() for r in results]})
    if scatter_dir:
        for method, table in tables.items():
            export_scatter(records, table, Path(scatter_dir) / f"scatter_{method}.csv")
            for dataset in curve_datasets:
                path = Path(scatter_dir) / f"tradeoff_{method}_{dataset}.csv"
                export_tradeoff_curve(records, table, dataset, path)


@cli.command()
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--n-per-class", type=int, default=200, show_default=True)
@click.option("--n-test-per-class", type=int, default=None)
@click.option("--length", type=int, default=100, show_default=True)
@click.option("--signal-pos", type=float, default=0.3, show_default=True)
@click.option("--noise", type=float, default=0.5, show_default=True)
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@handle_errors
def synth(out_dir, n_per_class, n_test_per_class, length, signal_pos, noise, seed):
    """Синтетический набор с паттерном в известной позиции."""
    dataset = synth_pattern_dataset(n_per_class, length, signal_pos, noise, seed, n_test_per_class=n_test_per_class)
    write_ucr(dataset, out_dir, metadata=synth_metadata(n_per_class, length, signal_pos, noise, seed,
                                                        n_test_per_class=n_test_per_class))


@cli.command()
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--points", type=int, default=101, show_default=True)
@handle_errors
def losscurve(out_path, points):
    """Потери 0-1, линейная и cross-entropy как функции ŷ⁺."""
    export_loss_curves(loss_curves(np.linspace(0.0, 1.0, points)), out_path)


def main(argv: Optional[Sequence[str]] = None):
    cli.main(args=argv, prog_name="earlyhalt")


if __name__ == "__main__":
    main()
