# ⏱ НАЛАШТУВАННЯ ДЛЯ ЗАМІРІВ ПРОДУКТИВНОСТІ
# Використовувати: python manage.py bench --settings=oasis_recon.bench_settings

from .settings import *  # noqa: F401,F403

# Однопотокове декодування, щоб заміри не залежали від фонового потоку
INGEST_QUEUE_SIZE = 0
FUSION_MAX_WORKERS = 1

# Логування - лише попередження, щоб вивід не впливав на час кадру
LOGGING["handlers"]["console"]["level"] = "WARNING"  # noqa: F405
LOGGING["loggers"]["reconstruction"]["level"] = "WARNING"  # noqa: F405

TIMING_WARMUP_FRAMES = 5
