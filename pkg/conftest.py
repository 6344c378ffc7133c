"""Общие фикстуры тестов."""
import sys
from pathlib import Path

import numpy as np
import pytest
from loguru import logger

# Добавляем корневую директорию в путь
sys.path.append(str(Path(__file__).parent))

from backbones import ConvShapeletConfig, EarlyClassifier, LstmConfig, ModelConfig  # noqa: E402
from dataio import synth_pattern_dataset  # noqa: E402

DATA_DIR = Path(__file__).parent / "tests" / "data"


@pytest.fixture(autouse=True)
def quiet_logs():
    logger.remove()
    yield


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def tiny_conv_config() -> ModelConfig:
    return ModelConfig(backbone="conv", num_classes=2,
                       conv=ConvShapeletConfig(num_blocks=2, kernels_per_block=3, width_step=2, dropout_rate=0.0))


@pytest.fixture
def tiny_lstm_config() -> ModelConfig:
    return ModelConfig(backbone="lstm", num_classes=2, lstm=LstmConfig(num_layers=2, hidden_dim=4))


@pytest.fixture
def tiny_conv_model(tiny_conv_config) -> EarlyClassifier:
    return EarlyClassifier(tiny_conv_config, seed=7)


@pytest.fixture
def tiny_lstm_model(tiny_lstm_config) -> EarlyClassifier:
    return EarlyClassifier(tiny_lstm_config, seed=7)


@pytest.fixture
def tiny_dataset():
    return synth_pattern_dataset(n_per_class=6, length=20, signal_pos=0.3, noise=0.3, seed=5)
