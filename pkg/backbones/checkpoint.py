"""Чекпоинты модели в формате EHALT1."""
import json
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
from loguru import logger

from .configs import ModelConfig
from .model import EarlyClassifier

MAGIC = b"EHALT1\n"
FORMAT_VERSION = 1


class CheckpointFormatError(ValueError):
    """Файл не является корректным чекпоинтом EHALT1."""


def _entries(arrays: Dict[str, np.ndarray], offset: int):
    entries = []
    for name, values in arrays.items():
        entries.append({"name": name, "shape": list(values.shape), "offset": offset, "count": int(values.size)})
        offset += int(values.size)
    return entries, offset


def encode_checkpoint(model: EarlyClassifier, meta: Optional[Dict[str, Any]] = None) -> bytes:
    """
    Сериализует модель: магическая строка, JSON-заголовок одной строкой, затем float64 little-endian.

    Байты детерминированы: ключи заголовка отсортированы, меток времени нет.
    """
    parameters = {name: node.values for name, node in model.parameters().items()}
    buffers = model.buffers()
    param_entries, offset = _entries(parameters, 0)
    buffer_entries, _ = _entries(buffers, offset)
    header = {
        "format": FORMAT_VERSION,
        "config": model.config.model_dump(mode="json"),
        "seed": model.seed,
        "parameters": param_entries,
        "buffers": buffer_entries,
        "meta": meta or {},
    }
    payload = np.concatenate([np.ravel(v) for v in list(parameters.values()) + list(buffers.values())])
    header_line = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8") + b"\n"
    return MAGIC + header_line + payload.astype("<f8").tobytes()


def save_checkpoint(model: EarlyClassifier, path: Union[str, Path], meta: Optional[Dict[str, Any]] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(model, meta))
    logger.info(f"Чекпоинт сохранен: {path} ({model.num_parameters()} параметров)")
    return path


def decode_checkpoint(data: bytes) -> Tuple[EarlyClassifier, Dict[str, Any]]:
    if not data.startswith(MAGIC):
        raise CheckpointFormatError("Нет заголовка EHALT1")
    end = data.find(b"\n", len(MAGIC))
    if end < 0:
        raise CheckpointFormatError("Оборван JSON-заголовок")
    try:
        header = json.loads(data[len(MAGIC):end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointFormatError(f"Поврежден JSON-заголовок: {e}") from e
    if header.get("format") != FORMAT_VERSION:
        raise CheckpointFormatError(f"Неподдерживаемая версия формата: {header.get('format')}")

    payload = np.frombuffer(data[end + 1:], dtype="<f8")
    expected = sum(e["count"] for e in header["parameters"] + header["buffers"])
    if payload.size != expected:
        raise CheckpointFormatError(f"Размер данных {payload.size} не совпадает с заголовком ({expected})")

    def _read(entries):
        return {e["name"]: payload[e["offset"]:e["offset"] + e["count"]].reshape(e["shape"]).astype(np.float64)
                for e in entries}

    model = EarlyClassifier(ModelConfig.model_validate(header["config"]), seed=header.get("seed", 0))
    try:
        model.load_state(_read(header["parameters"]), _read(header["buffers"]))
    except (KeyError, ValueError) as e:
        raise CheckpointFormatError(f"Состояние не соответствует конфигурации: {e}") from e
    return model, header.get("meta", {})


def load_checkpoint(path: Union[str, Path]) -> Tuple[EarlyClassifier, Dict[str, Any]]:
    """
    Загружает модель из файла EHALT1.

    Returns:
        Tuple[EarlyClassifier, Dict]: Модель и метаданные обучения
    """
    path = Path(path)
    model, meta = decode_checkpoint(path.read_bytes())
    logger.info(f"Загружен чекпоинт {path}: {model.config.describe()}")
    return model, meta
