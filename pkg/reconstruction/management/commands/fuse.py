"""
Команда для злиття оптичних кадрів з вирізаною сіткою
"""
from pathlib import Path

from reconstruction.management.base import PipelineCommand
from reconstruction.services.dataset_service import CONFIG_NAME
from reconstruction.services.pipeline_service import run_fuse, write_fusion_outputs
from reconstruction.utils.frame_log import FrameLog
from reconstruction.utils.grid_store import load_grid


class Command(PipelineCommand):
    help = "Будує сітку трикутників і кольорову хмару точок з оптичних кадрів"

    config_overrides = False

    def add_arguments(self, parser):
        parser.add_argument("--log", type=str, required=True, help="Каталог журналу кадрів")
        parser.add_argument("--grid", type=str, required=True, help="Файл сітки (результат reconstruct)")
        parser.add_argument("--out", type=str, required=True, help="Каталог результатів")
        parser.add_argument("--workers", type=int, default=None, help="Потоки рендерингу глибини")
        self.add_config_arguments(parser)

    def run(self, **options):
        log = FrameLog(options["log"])
        config = self.load_config(options, fallback=Path(options["log"]) / CONFIG_NAME)
        snapshot = load_grid(options["grid"])
        if snapshot.is_empty:
            self.stdout.write(self.style.WARNING("⚠️ Сітка не містить зайнятих вокселів"))

        self.stdout.write(f"🎨 Злиття оптичних кадрів журналу {log.directory}...")
        result = run_fuse(log, snapshot, config, max_workers=options["workers"])
        paths = write_fusion_outputs(result, config, options["out"])

        self.summary("✅ ЗЛИТТЯ ЗАВЕРШЕНО", [
            f"🔺 Сітка: {len(result.mesh.vertices):,} вершин, {len(result.mesh.triangles):,} трикутників",
            f"📷 Оптичних кадрів: {len(result.frame_points)}",
            f"🌈 Точок у хмарі: {len(result.cloud):,}",
            *(f"💾 {name}: {path}" for name, path in paths.items() if path),
        ])
        for index, message in result.skipped:
            self.stdout.write(self.style.WARNING(f"⚠️ Кадр #{index}: {message}"))
