"""
Декоратори для етапів конвеєра: заміри часу, журналювання помилок, контроль пам'яті
"""
import functools
import logging
import time

import psutil

logger = logging.getLogger(__name__)


def timed_stage(name=None):
    """
    Декоратор для замірів тривалості етапу.
    Помилки журналюються з назвою етапу і прокидаються далі.
    """
    def decorator(func):
        stage = name or func.__name__

        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            started = time.perf_counter()
            try:
                return func(*args, **kwargs)
            except Exception as e:
                logger.error(f"Помилка на етапі {stage}: {e}")
                raise
            finally:
                logger.debug(f"Етап {stage}: {time.perf_counter() - started:.3f} с")
        return wrapper
    return decorator


def monitor_memory(func):
    """
    Декоратор для моніторингу пам'яті процесу до і після виклику
    """
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        process = psutil.Process()
        before = process.memory_info().rss
        logger.info(f"Початок {func.__name__}: пам'ять процесу {before // 1024 // 1024:,} MB")
        try:
            return func(*args, **kwargs)
        finally:
            after = process.memory_info().rss
            logger.info(
                f"Кінець {func.__name__}: пам'ять процесу {after // 1024 // 1024:,} MB "
                f"({(after - before) // 1024 // 1024:+,} MB)"
            )
            # Попередження якщо процес займає більше 80% доступної пам'яті
            if after > psutil.virtual_memory().total * 0.8:
                logger.warning(f"Високе використання пам'яті: {after // 1024 // 1024:,} MB")
    return wrapper
