"""
Команда для замірів часу обробки кадру залежно від розміру вокселя
"""
from django.core.management.base import CommandError

from reconstruction.management.base import EXIT_CONFIG_ERROR, PipelineCommand
from reconstruction.services.benchmark_service import run_bench


class Command(PipelineCommand):
    help = "Вимірює час preprocess + integrate на кадр для кількох розмірів вокселя"

    config_overrides = False

    def add_arguments(self, parser):
        parser.add_argument(
            "--voxel-sizes", type=str, default="0.05,0.04,0.03,0.02,0.01",
            help="Розміри вокселя через кому, м",
        )
        parser.add_argument("--frames", type=int, default=100, help="Кількість синтетичних кадрів")
        parser.add_argument("--csv", type=str, help="Файл CSV для таблиці результатів")
        parser.add_argument("--seed", type=int, default=0, help="Зерно генератора кадрів")
        parser.add_argument("--elevation-samples", type=int, default=24, help="Променів по елевації при рендерингу")
        self.add_config_arguments(parser)

    def run(self, **options):
        try:
            voxel_sizes = [float(v) for v in options["voxel_sizes"].split(",") if v.strip()]
        except ValueError as e:
            raise CommandError(f"Некоректний список розмірів вокселя: {e}", returncode=EXIT_CONFIG_ERROR)
        if len(voxel_sizes) < 2 or min(voxel_sizes) <= 0:
            raise CommandError("Потрібно щонайменше два додатні розміри вокселя", returncode=EXIT_CONFIG_ERROR)
        config = self.load_config(options)

        self.stdout.write(f"⏱ Заміри: {len(voxel_sizes)} розмірів вокселя, {options['frames']} кадрів...")
        try:
            report = run_bench(
                config, voxel_sizes, frames=options["frames"], seed=options["seed"],
                elevation_samples=options["elevation_samples"],
            )
        except ValueError as e:
            raise CommandError(str(e), returncode=EXIT_CONFIG_ERROR) from e

        host = report.host
        self.summary("📊 ЧАС ОБРОБКИ КАДРУ", [
            f"💻 {host['processor']}, {host['cpu_logical']} логічних ядер, "
            f"{host['cpu_mhz'] or '?'} MHz, {host['memory_gb']} GB",
            report.format_table(),
        ])
        if options["csv"]:
            path = report.write_csv(options["csv"])
            self.stdout.write(self.style.SUCCESS(f"💾 CSV: {path}"))
