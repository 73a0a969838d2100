"""
Спільна основа management-команд конвеєра: конфігурація та коди виходу
"""
import logging
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from reconstruction.exceptions import ConfigError, InputError, TemplateTooLargeError
from reconstruction.utils.config_loader import load_pipeline_config

logger = logging.getLogger(__name__)

# Коди виходу: 0 - успіх, 2 - помилка вхідних даних, 3 - помилка конфігурації
EXIT_INPUT_ERROR = 2
EXIT_CONFIG_ERROR = 3


class PipelineCommand(BaseCommand):
    """Базова команда: переводить винятки конвеєра у CommandError з потрібним кодом виходу"""

    config_overrides = True

    def add_config_arguments(self, parser):
        parser.add_argument("--config", type=str, help="YAML-файл конфігурації запуску")
        if not self.config_overrides:
            return
        parser.add_argument("--voxel-size", type=float, help="Розмір вокселя, м")
        parser.add_argument("--t-r", type=float, help="Поріг відношення зайнятості t_r")
        parser.add_argument("--half-window", type=int, help="Напівширина ковзного вікна, range bins")
        parser.add_argument("--decimation", type=int, help="Коефіцієнт max-pool децимації")

    def load_config(self, options, fallback=None):
        path = options.get("config")
        if not path and fallback and Path(fallback).exists():
            path = fallback
        overrides = {
            key: options.get(key)
            for key in ("voxel_size", "t_r", "half_window", "decimation")
        }
        return load_pipeline_config(path, overrides)

    def handle(self, *args, **options):
        try:
            return self.run(**options)
        except ConfigError as e:
            raise CommandError(f"Помилка конфігурації: {e}", returncode=EXIT_CONFIG_ERROR) from e
        except TemplateTooLargeError as e:
            raise CommandError(f"Помилка конфігурації: {e}", returncode=EXIT_CONFIG_ERROR) from e
        except InputError as e:
            raise CommandError(f"Помилка вхідних даних: {e}", returncode=EXIT_INPUT_ERROR) from e

    def run(self, **options):
        raise NotImplementedError

    def summary(self, title, lines):
        self.stdout.write("\n" + "=" * 60)
        self.stdout.write(self.style.SUCCESS(title))
        self.stdout.write("=" * 60)
        for line in lines:
            self.stdout.write(line)
