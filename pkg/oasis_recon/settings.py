"""
Django settings for oasis_recon project.

Проєкт без бази даних і без веб-інтерфейсу: Django використовується як
каркас для налаштувань, логування та management-команд конвеєра реконструкції.
"""

from pathlib import Path
import math
import os

from dotenv import load_dotenv

# Build paths inside the project like this: BASE_DIR / "subdir".
BASE_DIR = Path(__file__).resolve().parent.parent

# Локальні перевизначення (.env у корені проєкту)
load_dotenv(BASE_DIR / ".env")

SECRET_KEY = os.environ.get("OASIS_SECRET_KEY", "oasis-insecure-local-key")

DEBUG = os.environ.get("OASIS_DEBUG", "False").lower() == "true"


# Application definition

INSTALLED_APPS = [
    "reconstruction",
]

# База даних не потрібна: всі артефакти зберігаються у файлах
DATABASES = {}


# Logging configuration
LOG_DIR = Path(os.environ.get("OASIS_LOG_DIR", BASE_DIR / "logs"))
LOG_DIR.mkdir(parents=True, exist_ok=True)
LOG_LEVEL = os.environ.get("OASIS_LOG_LEVEL", "INFO")

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "{levelname} {asctime} {module} {process:d} {thread:d} {message}",
            "style": "{",
        },
        "simple": {
            "format": "{levelname} {asctime} {message}",
            "style": "{",
        },
    },
    "handlers": {
        "file": {
            "level": "DEBUG",
            "class": "logging.handlers.RotatingFileHandler",
            "filename": LOG_DIR / "oasis.log",
            "maxBytes": 10 * 1024 * 1024,  # 10 MB
            "backupCount": 5,
            "formatter": "verbose",
        },
        "console": {
            "level": LOG_LEVEL,
            "class": "logging.StreamHandler",
            "formatter": "simple",
        },
    },
    "loggers": {
        "reconstruction": {
            "handlers": ["file", "console"],
            "level": LOG_LEVEL,
            "propagate": False,
        },
    },
}


# СЕНСОРИ - параметри за замовчуванням (Oculus M1200d у режимі 1.2 МГц)
OASIS_SONAR = {
    "n_beams": 512,
    "n_range_bins": 398,
    "hfov": math.radians(130.0),
    "vfov": math.radians(20.0),
    "min_range": 0.0,
    "max_range": 2.0,
}

# Оптична камера 1600x1200, модель pinhole без дисторсії
OASIS_CAMERA = {
    "fx": 1400.0,
    "fy": 1400.0,
    "cx": 799.5,
    "cy": 599.5,
    "width": 1600,
    "height": 1200,
}

# Камера нижче сонара на 5 см і піднята на 5 градусів (задано явно, апаратне значення невідоме)
OASIS_CAMERA_FROM_SONAR = {
    "translation": [0.0, 0.0, -0.05],
    "pitch_up": math.radians(5.0),
}

# ВОКСЕЛЬНЕ ВИРІЗАННЯ
OASIS_CARVE = {
    "t_r": 0.5,              # Поріг відношення occupied/observed
    "motion_gate": 0.01,     # Кадр обробляється лише після зсуву більше ніж на 1 см
    "voxel_size": 0.05,
    "min_voxel_ratio": 0.25, # Захист від вибуху шаблону: voxel_size >= 0.25 * dr
}

# ПОПЕРЕДНЯ ОБРОБКА СОНАРА
OASIS_PREPROCESSING = {
    "half_window": 5,        # Напівширина ковзного вікна в range bins
    "background_bins": 10,   # Перші 10 range bins вважаються порожніми
    "decimation": 1,         # Max-pool децимація (1 = вимкнено)
}

# Робоча зона маніпулятора (світова система, метри)
OASIS_WORKSPACE = {
    "min": [-1.2, -1.2, -0.1],
    "max": [1.2, 1.2, 1.6],
}

OASIS_MESHING = {
    "iso": 0.5,
    "smoothing_iterations": 3,
    "smoothing_lambda": 0.5,
}

OASIS_MASK = {
    "strategy": "color_threshold",
    "background_color": None,   # None = медіана кольору рамки кадру
    "threshold": 60.0,
}

OASIS_EXPORT = {
    "grid": "grid.oasis",
    "occupied": "occupied.ply",
    "mesh": "mesh.ply",
    "cloud": "cloud.ply",
    "timing": "timing.csv",
    "ascii": False,
}

# КОНВЕЄР
INGEST_QUEUE_SIZE = 8        # Розмір черги попереднього декодування кадрів (0 = однопотоково)
FUSION_MAX_WORKERS = 1       # Потоки для рендерингу глибини оптичних кадрів
TIMING_WARMUP_FRAMES = 5     # Кадри прогріву, що не входять до середніх значень
FOLLOW_POLL_SECONDS = 1.0    # Період опитування в режимі --follow
