"""Загрузка и запись наборов в текстовом формате UCR (метка, затем значения ряда)."""
import csv
import json
import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from .series import Dataset, LabeledSeries, looks_normalized

PathLike = Union[str, Path]
METADATA_FILE = "metadata.json"


class UcrFormatError(ValueError):
    """Файл не соответствует формату UCR."""


def _sniff_delimiter(line: str) -> Optional[str]:
    if "\t" in line:
        return "\t"
    if "," in line:
        return ","
    return None


def _canonical_label(token: str) -> str:
    token = token.strip()
    try:
        number = float(token)
    except ValueError:
        return token
    if math.isfinite(number) and number == int(number):
        return str(int(number))
    return token


def _label_order(labels) -> List[str]:
    try:
        return sorted(labels, key=float)
    except ValueError:
        return sorted(labels)


def _parse_value(token: str, path: Path, row: int) -> float:
    token = token.strip()
    if token in ("", "?"):
        return float("nan")
    try:
        return float(token)
    except ValueError:
        raise UcrFormatError(f"{path.name}, строка {row}: не число '{token}'") from None


def _read_rows(path: Path, delimiter: Optional[str]) -> List[Tuple[str, np.ndarray]]:
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as e:
        raise UcrFormatError(f"Не удалось прочитать {path}: {e}") from e

    rows = []
    width = None
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        sep = delimiter if delimiter is not None else _sniff_delimiter(line)
        tokens = line.strip().split(sep) if sep is not None else line.split()
        if len(tokens) < 2:
            raise UcrFormatError(f"{path.name}, строка {number}: нет значений ряда")
        if width is None:
            width = len(tokens)
        elif len(tokens) != width:
            raise UcrFormatError(
                f"{path.name}, строка {number}: {len(tokens) - 1} значений вместо {width - 1}")
        values = np.array([_parse_value(t, path, number) for t in tokens[1:]])

        missing = np.isnan(values)
        if missing.all():
            raise UcrFormatError(f"{path.name}, строка {number}: ряд состоит только из пропусков")
        length = len(values) - int(np.argmin(missing[::-1]))
        if missing[:length].any():
            raise UcrFormatError(f"{path.name}, строка {number}: пропуск внутри ряда")
        if not np.all(np.isfinite(values[:length])):
            raise UcrFormatError(f"{path.name}, строка {number}: бесконечное значение")
        rows.append((_canonical_label(tokens[0]), values[:length]))
    if not rows:
        raise UcrFormatError(f"{path.name}: файл пуст")
    return rows


def _read_metadata(directory: Path) -> Dict:
    path = directory / METADATA_FILE
    if not path.exists():
        return {}
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        logger.warning(f"Не удалось прочитать {path}: {e}")
        return {}


def _dataset_name(train_path: Path) -> str:
    stem = train_path.stem
    return stem[:-len("_TRAIN")] if stem.upper().endswith("_TRAIN") else stem


def parse_ucr(train_path: PathLike, test_path: PathLike, delimiter: Optional[str] = None,
              znorm: Optional[bool] = None, name: Optional[str] = None) -> Dataset:
    """
    Разбор пары файлов UCR.

    Метки переводятся в 0..C-1 в порядке сортировки исходных меток
    (числовом, если все метки числа). Хвостовые NaN обрезаются, что дает ряды
    переменной длины; NaN внутри ряда - ошибка.

    Args:
        train_path: Файл обучающей выборки
        test_path: Файл тестовой выборки
        delimiter: Разделитель; по умолчанию табуляция, запятая или пробелы
        znorm: z-нормализация; None - по metadata.json или по самим данным
        name: Имя набора (по умолчанию из имени файла)

    Returns:
        Dataset: Набор с общим отображением меток
    """
    train_path, test_path = Path(train_path), Path(test_path)
    train_rows = _read_rows(train_path, delimiter)
    test_rows = _read_rows(test_path, delimiter)

    label_map = {raw: index for index, raw in enumerate(_label_order({raw for raw, _ in train_rows}))}
    unknown = sorted({raw for raw, _ in test_rows} - set(label_map))
    if unknown:
        raise UcrFormatError(f"{test_path.name}: метки {unknown} отсутствуют в обучающей выборке")
    if len(label_map) < 2:
        raise UcrFormatError(f"{train_path.name}: в обучающей выборке меньше двух классов")

    def _series(rows):
        return [LabeledSeries(values=values, label=label_map[raw], original_label=raw) for raw, values in rows]

    dataset = Dataset(name=name or _dataset_name(train_path), train=_series(train_rows), test=_series(test_rows),
                      num_classes=len(label_map), label_map=label_map)

    if znorm is None:
        hint = _read_metadata(train_path.parent).get("znorm")
        znorm = bool(hint) if hint is not None else not looks_normalized(dataset.train)
    if znorm:
        dataset = dataset.normalized()
    logger.info(f"Набор {dataset.name}: {len(dataset.train)} train / {len(dataset.test)} test, "
                f"{dataset.num_classes} классов, z-нормализация: {'да' if znorm else 'нет'}")
    return dataset


def find_ucr_files(directory: PathLike) -> Tuple[Path, Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise UcrFormatError(f"Каталог набора не найден: {directory}")

    def _one(tag: str) -> Path:
        found = sorted(directory.glob(f"*_{tag}.*"))
        if len(found) != 1:
            raise UcrFormatError(f"{directory}: ожидается ровно один файл *_{tag}.*, найдено {len(found)}")
        return found[0]

    return _one("TRAIN"), _one("TEST")


def load_ucr_dir(directory: PathLike, znorm: Optional[bool] = None) -> Dataset:
    """Загрузка набора из каталога с файлами *_TRAIN.* и *_TEST.*."""
    train_path, test_path = find_ucr_files(directory)
    return parse_ucr(train_path, test_path, znorm=znorm)


def _write_split(path: Path, series: Sequence[LabeledSeries], delimiter: str):
    if any(s.channels != 1 for s in series):
        raise ValueError("Формат UCR поддерживает только одномерные ряды")
    width = max(s.length for s in series)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, delimiter=delimiter, lineterminator="\n")
        for s in series:
            tail = ["NaN"] * (width - s.length)
            writer.writerow([s.original_label] + [repr(float(v)) for v in s.values[:, 0]] + tail)


def write_ucr(dataset: Dataset, directory: PathLike, delimiter: str = "\t",
              metadata: Optional[Dict] = None) -> Tuple[Path, Path]:
    """
    Запись набора в формате UCR; ряды разной длины дополняются NaN.

    Рядом всегда пишется metadata.json с znorm=false: значения записываются
    как есть и при повторной загрузке не нормализуются. Ключи metadata
    дополняют или переопределяют этот флаг.

    Returns:
        Tuple[Path, Path]: Пути к файлам TRAIN и TEST
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    suffix = "tsv" if delimiter == "\t" else "csv"
    train_path = directory / f"{dataset.name}_TRAIN.{suffix}"
    test_path = directory / f"{dataset.name}_TEST.{suffix}"
    _write_split(train_path, dataset.train, delimiter)
    _write_split(test_path, dataset.test, delimiter)
    meta = {"znorm": False, **(metadata or {})}
    (directory / METADATA_FILE).write_text(json.dumps(meta, indent=2, sort_keys=True, ensure_ascii=False),
                                           encoding="utf-8")
    logger.info(f"Набор {dataset.name} записан в {directory}")
    return train_path, test_path
