"""
Команда для генерації синтетичного набору даних (басейн, траєкторія сканування, оптичні знімки)
"""
import dataclasses

from django.core.management.base import CommandError

from reconstruction.management.base import EXIT_CONFIG_ERROR, PipelineCommand
from reconstruction.services.dataset_service import simulate
from reconstruction.simulator import SCENES


class Command(PipelineCommand):
    help = "Генерує синтетичний журнал кадрів сонара та камери з еталонним маніфестом"

    config_overrides = False

    def add_arguments(self, parser):
        parser.add_argument("--scene", type=str, default="tank", choices=sorted(SCENES), help="Сцена симуляції")
        parser.add_argument("--out", type=str, required=True, help="Каталог журналу кадрів")
        parser.add_argument("--seed", type=int, default=0, help="Зерно генератора випадкових чисел")
        parser.add_argument("--elevation-samples", type=int, default=24, help="Променів по елевації на промінь сонара")
        parser.add_argument("--closeups", type=int, default=2, help="Кількість оптичних знімків зблизька")
        parser.add_argument(
            "--camera-scale", type=float, default=1.0,
            help="Масштаб роздільності камери (наприклад 0.25 для швидкого набору)",
        )
        self.add_config_arguments(parser)

    def run(self, **options):
        config = self.load_config(options)
        if options["camera_scale"] <= 0:
            raise CommandError("--camera-scale має бути додатним", returncode=EXIT_CONFIG_ERROR)
        if options["camera_scale"] != 1.0:
            config = dataclasses.replace(config, camera=config.camera.scaled(options["camera_scale"]))

        self.stdout.write(f"🌊 Симуляція сцени '{options['scene']}' (seed={options['seed']})...")
        summary = simulate(
            options["out"],
            config,
            scene_name=options["scene"],
            seed=options["seed"],
            elevation_samples=options["elevation_samples"],
            closeups=options["closeups"],
        )
        self.summary("✅ НАБІР ДАНИХ ЗГЕНЕРОВАНО", [
            f"📁 Каталог: {summary.directory}",
            f"🔊 Кадрів сонара: {summary.sonar_frames}",
            f"📷 Оптичних кадрів: {summary.optical_frames}",
            f"🎲 Seed: {summary.seed}",
        ])
