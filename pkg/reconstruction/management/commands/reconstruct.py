"""
Команда для акустичної 3D реконструкції з журналу кадрів
"""
import signal
from pathlib import Path

from reconstruction.frame_monitor import FrameLogFollower
from reconstruction.management.base import PipelineCommand
from reconstruction.services.dataset_service import CONFIG_NAME
from reconstruction.services.pipeline_service import (
    ReconstructionSession,
    run_reconstruct,
    write_reconstruction_outputs,
)
from reconstruction.utils.frame_log import FrameLog


class Command(PipelineCommand):
    help = "Вирізає воксельну сітку зайнятості з кадрів сонара журналу"

    def add_arguments(self, parser):
        parser.add_argument("--log", type=str, required=True, help="Каталог журналу кадрів")
        parser.add_argument("--out", type=str, required=True, help="Каталог результатів")
        parser.add_argument("--follow", action="store_true", help="Слідкувати за журналом, що дописується")
        parser.add_argument(
            "--idle-polls", type=int, default=None,
            help="У режимі --follow: зупинитися після N порожніх опитувань поспіль",
        )
        parser.add_argument(
            "--queue-size", type=int, default=None,
            help="Розмір черги попереднього декодування (0 = однопотоково)",
        )
        self.add_config_arguments(parser)

    def run(self, **options):
        log = FrameLog(options["log"])
        config = self.load_config(options, fallback=Path(options["log"]) / CONFIG_NAME)
        out_dir = Path(options["out"])

        self.stdout.write(f"🔊 Реконструкція журналу {log.directory} (voxel_size={config.carve.voxel_size} м)...")
        if options["follow"]:
            result = self._follow(log, config, out_dir, options["idle_polls"])
        else:
            result = run_reconstruct(log, config, queue_size=options["queue_size"])
        paths = write_reconstruction_outputs(result, config, out_dir)

        report = result.report
        self.summary("✅ РЕКОНСТРУКЦІЮ ЗАВЕРШЕНО", [
            report.format_table(),
            f"🧊 Зайнятих вокселів: {result.snapshot.count:,}",
            *(f"💾 {name}: {path}" for name, path in paths.items() if path),
        ])
        for index, message in report.malformed:
            self.stdout.write(self.style.WARNING(f"⚠️ Кадр #{index}: {message}"))

    def _follow(self, log, config, out_dir, idle_polls):
        session = ReconstructionSession(config)
        follower = FrameLogFollower(
            log,
            session,
            on_batch=lambda s: write_reconstruction_outputs(s.result(), config, out_dir),
        )

        def stop(signum, frame):
            self.stdout.write(self.style.WARNING("\n⏹️ Зупинка моніторингу..."))
            follower.stop_event.set()

        signal.signal(signal.SIGINT, stop)
        signal.signal(signal.SIGTERM, stop)
        self.stdout.write("👀 Режим --follow: очікування нових кадрів (Ctrl+C для зупинки)")
        return follower.run(max_idle_polls=idle_polls)
