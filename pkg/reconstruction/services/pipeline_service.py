"""
Конвеєр реконструкції: читання журналу кадрів, фільтр руху, попередня обробка,
інтеграція в сітку; злиття оптичних кадрів з сіткою.
"""
import csv
import logging
import queue
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from django.conf import settings

from reconstruction.carving import VoxelGrid, build_template, integrate_frame, should_process
from reconstruction.exceptions import MalformedFrameError, MissingPoseError
from reconstruction.fusion import ColoredPointCloud, DepthRenderer, fuse_frame
from reconstruction.meshing import build_mesh
from reconstruction.preprocessing import preprocess
from reconstruction.utils.grid_store import save_grid
from reconstruction.utils.ply_export import write_colored_cloud, write_mesh, write_occupied_voxels
from reconstruction.utils.stage_decorators import timed_stage

logger = logging.getLogger(__name__)

INGEST_QUEUE_SIZE = getattr(settings, "INGEST_QUEUE_SIZE", 8)
TIMING_WARMUP_FRAMES = getattr(settings, "TIMING_WARMUP_FRAMES", 5)
FUSION_MAX_WORKERS = getattr(settings, "FUSION_MAX_WORKERS", 1)

_END = object()


@dataclass
class FrameTiming:
    index: int
    timestamp: float
    preprocess_s: float
    integrate_s: float

    @property
    def total_s(self):
        return self.preprocess_s + self.integrate_s


@dataclass
class ReconstructionReport:
    """Статистика запуску та час обробки кожного кадру (preprocess + integrate)"""
    warmup: int = TIMING_WARMUP_FRAMES
    processed: int = 0
    gated: int = 0
    optical: int = 0
    malformed: List[Tuple[int, str]] = field(default_factory=list)
    timings: List[FrameTiming] = field(default_factory=list)

    @property
    def measured(self):
        return self.timings[self.warmup:] if len(self.timings) > self.warmup else []

    @property
    def mean_seconds(self):
        measured = self.measured
        if not measured:
            return None
        return float(np.mean([t.total_s for t in measured]))

    @property
    def fps(self):
        mean = self.mean_seconds
        return 1.0 / mean if mean else None

    def write_csv(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["frame_index", "timestamp", "preprocess_s", "integrate_s", "total_s", "fps", "warmup"])
            for position, timing in enumerate(self.timings):
                total = timing.total_s
                writer.writerow([
                    timing.index,
                    f"{timing.timestamp:.6f}",
                    f"{timing.preprocess_s:.6f}",
                    f"{timing.integrate_s:.6f}",
                    f"{total:.6f}",
                    f"{1.0 / total:.3f}" if total > 0 else "",
                    int(position < self.warmup),
                ])
        return path

    def format_table(self):
        lines = [
            f"{'Оброблено кадрів':<24}{self.processed:>12}",
            f"{'Відкинуто фільтром руху':<24}{self.gated:>12}",
            f"{'Пошкоджених кадрів':<24}{len(self.malformed):>12}",
        ]
        if self.mean_seconds is not None:
            lines.append(f"{'Час на кадр, с':<24}{self.mean_seconds:>12.4f}")
            lines.append(f"{'Еквівалентний FPS':<24}{self.fps:>12.2f}")
        return "\n".join(lines)


@dataclass
class ReconstructionResult:
    snapshot: object
    report: ReconstructionReport


class ReconstructionSession:
    """
    Стан потокової реконструкції: шаблон, сітка, остання оброблена поза.
    Інтеграція виконується в одному потоці (єдиний записувач сітки).
    """

    def __init__(self, config, template=None, grid=None):
        self.config = config
        intrinsics = config.integration_intrinsics
        self.template = template or build_template(
            intrinsics, config.carve.voxel_size, config.carve.min_voxel_ratio
        )
        self.grid = grid or VoxelGrid.from_bounds(
            config.workspace.min, config.workspace.max, config.carve.voxel_size, config.carve.t_r
        )
        self.last_pose = None
        self.report = ReconstructionReport()

    def process_frame(self, frame, index=0):
        """Повертає True, якщо кадр інтегровано; False - якщо відкинуто фільтром руху"""
        if frame.pose is None:
            raise MissingPoseError(index)
        if not should_process(frame.pose, self.last_pose, self.config.carve.motion_gate):
            self.report.gated += 1
            return False

        params = self.config.preprocessing
        started = time.perf_counter()
        polar_map = preprocess(frame, params.half_window, params.background_bins, params.decimation)
        preprocessed = time.perf_counter()
        integrate_frame(self.grid, self.template, polar_map, frame.pose, self.config.carve)
        finished = time.perf_counter()

        self.last_pose = frame.pose
        self.report.processed += 1
        self.report.timings.append(
            FrameTiming(index, frame.timestamp, preprocessed - started, finished - preprocessed)
        )
        return True

    def process_records(self, log, records, queue_size=None):
        """Обробляє записи журналу в порядку журналу; оптичні записи лише рахуються"""
        sonar_records = []
        for record in records:
            if record.kind == "optical":
                self.report.optical += 1
                continue
            if record.pose is None:
                raise MissingPoseError(record.index)
            sonar_records.append(record)

        for record, item in prefetch_frames(log, sonar_records, self.config.sonar, queue_size):
            if isinstance(item, MalformedFrameError):
                self._skip(record, item)
                continue
            try:
                self.process_frame(item, record.index)
            except MalformedFrameError as e:
                self._skip(record, e)

    def _skip(self, record, error):
        logger.warning(f"Кадр #{record.index} пропущено: {error}")
        self.report.malformed.append((record.index, str(error)))

    def result(self):
        return ReconstructionResult(self.grid.snapshot(), self.report)


def prefetch_frames(log, records, intrinsics, queue_size=None):
    """
    Декодування кадрів з випередженням в окремому потоці через обмежену чергу.
    queue_size = 0 - повністю однопотоковий режим. Порядок кадрів зберігається.
    """
    queue_size = INGEST_QUEUE_SIZE if queue_size is None else queue_size

    def load(record):
        try:
            return log.load_sonar(record, intrinsics)
        except MalformedFrameError as e:
            return e

    if queue_size <= 0:
        for record in records:
            yield record, load(record)
        return

    frames = queue.Queue(maxsize=queue_size)
    stop = threading.Event()

    def worker():
        try:
            for record in records:
                if stop.is_set():
                    return
                item = (record, load(record))
                while not stop.is_set():
                    try:
                        frames.put(item, timeout=0.1)
                        break
                    except queue.Full:
                        continue
        finally:
            while not stop.is_set():
                try:
                    frames.put(_END, timeout=0.1)
                    break
                except queue.Full:
                    continue

    thread = threading.Thread(target=worker, name="oasis-prefetch", daemon=True)
    thread.start()
    try:
        while True:
            item = frames.get()
            if item is _END:
                break
            yield item
    finally:
        stop.set()
        thread.join(timeout=5)


@timed_stage("reconstruct")
def run_reconstruct(log, cfg, queue_size=None):
    """
    Повний прохід по журналу: фільтр руху -> попередня обробка -> інтеграція.
    Повертає знімок сітки та звіт з часом обробки кадрів.
    """
    session = ReconstructionSession(cfg)
    session.process_records(log, log.records(), queue_size)
    report = session.report
    logger.info(
        f"Реконструкція завершена: оброблено {report.processed}, відкинуто фільтром {report.gated}, "
        f"пошкоджених {len(report.malformed)}"
    )
    return session.result()


def write_reconstruction_outputs(result, cfg, out_dir):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    export = cfg.export
    paths = {
        "grid": save_grid(out_dir / export.grid, result.snapshot),
        "occupied": write_occupied_voxels(out_dir / export.occupied, result.snapshot, ascii=export.ascii),
        "timing": result.report.write_csv(out_dir / export.timing),
    }
    return paths


@dataclass
class FusionResult:
    mesh: object
    cloud: ColoredPointCloud
    frame_points: List[int] = field(default_factory=list)
    skipped: List[Tuple[int, str]] = field(default_factory=list)


def _load_optical(log, record, cfg):
    if record.pose is None:
        raise MissingPoseError(record.index)
    frame = log.load_optical(record, cfg.camera)
    external = log.load_mask(record) if cfg.mask.strategy == "external" else None
    if cfg.mask.strategy == "external" and external is None:
        raise MalformedFrameError(f"Кадр #{record.index}: для стратегії external потрібна маска", record.index)
    return frame, external


@timed_stage("fuse")
def run_fuse(log, snapshot, cfg, max_workers=None):
    """
    Сітка з вокселів (marching cubes + згладжування), далі для кожного оптичного кадру:
    глибина -> маски -> хмара точок. Хмари об'єднуються в порядку журналу.
    """
    meshing = cfg.meshing
    mesh = build_mesh(snapshot, meshing.iso, meshing.smoothing_iterations, meshing.smoothing_lambda)
    renderer = DepthRenderer(mesh)
    result = FusionResult(mesh=mesh, cloud=ColoredPointCloud.empty())

    loaded = []
    for record in log.records():
        if record.kind != "optical":
            continue
        try:
            loaded.append(_load_optical(log, record, cfg))
        except MalformedFrameError as e:
            logger.warning(f"Оптичний кадр #{record.index} пропущено: {e}")
            result.skipped.append((record.index, str(e)))

    if not loaded:
        logger.info("Оптичних кадрів немає - експортується лише сітка")
        return result

    workers = max(1, max_workers or FUSION_MAX_WORKERS)
    with ThreadPoolExecutor(max_workers=workers) as executor:
        clouds = list(executor.map(
            lambda item: fuse_frame(item[0], renderer, cfg.mask, item[1]),
            loaded,
        ))

    result.frame_points = [len(cloud) for cloud in clouds]
    result.cloud = ColoredPointCloud.concatenate(clouds)
    logger.info(f"Злиття завершено: {len(loaded)} кадрів, {len(result.cloud):,} точок")
    return result


def write_fusion_outputs(result, cfg, out_dir):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    export = cfg.export
    return {
        "mesh": write_mesh(out_dir / export.mesh, result.mesh, ascii=export.ascii),
        "cloud": write_colored_cloud(out_dir / export.cloud, result.cloud, ascii=export.ascii),
    }
