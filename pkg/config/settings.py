#!/usr/bin/env python3
"""Настройки приложения из переменных окружения (.env подхватывается автоматически)."""

import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

# Базовые пути
BASE_DIR = Path(__file__).parent.parent
RUNS_DIR = Path(os.getenv('EARLYHALT_RUNS_DIR', str(BASE_DIR / 'runs')))
LOGS_DIR = BASE_DIR / 'logs'

# Каталог логов создается сразу, RUNS_DIR - при первой записи
LOGS_DIR.mkdir(parents=True, exist_ok=True)

# Настройки логирования
LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')
LOG_FILE = os.getenv('LOG_FILE', str(LOGS_DIR / 'earlyhalt.log'))
LOG_ROTATION = os.getenv('LOG_ROTATION', '1 day')
LOG_RETENTION = os.getenv('LOG_RETENTION', '30 days')

# Настройки отладки
ENABLE_DEBUG = os.getenv('ENABLE_DEBUG', 'false').lower() == 'true'

# Настройки экспериментов
DEFAULT_SEED = int(os.getenv('DEFAULT_SEED', '0'))
N_JOBS = int(os.getenv('N_JOBS', '1'))
# Время эпохи в журнале обучения; false дает побайтно одинаковые журналы
LOG_WALL_TIME = os.getenv('LOG_WALL_TIME', 'true').lower() == 'true'
