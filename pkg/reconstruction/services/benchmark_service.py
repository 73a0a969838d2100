"""
Заміри продуктивності: час попередньої обробки + інтеграції кадру залежно від розміру вокселя.
"""
import csv
import logging
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import List

import numpy as np
import psutil
from django.conf import settings

from reconstruction.carving import VoxelGrid, build_template, integrate_frame
from reconstruction.preprocessing import preprocess
from reconstruction.simulator import SCENES, TANK_NOISE, render_sonar
from reconstruction.trajectory import sweep_trajectory
from reconstruction.services.dataset_service import default_sweep
from reconstruction.utils.stage_decorators import monitor_memory

logger = logging.getLogger(__name__)

TIMING_WARMUP_FRAMES = getattr(settings, "TIMING_WARMUP_FRAMES", 5)


@dataclass
class BenchRow:
    voxel_size: float
    template_voxels: int
    template_seconds: float
    mean_seconds: float

    @property
    def fps(self):
        return 1.0 / self.mean_seconds if self.mean_seconds > 0 else float("inf")


@dataclass
class BenchReport:
    frames: int
    rows: List[BenchRow] = field(default_factory=list)
    host: dict = field(default_factory=dict)

    def scaling_slope(self):
        """Нахил log(час) від log(1 / voxel_size); для кубічного зростання ~3"""
        sizes = np.array([row.voxel_size for row in self.rows])
        times = np.array([row.mean_seconds for row in self.rows])
        if len(np.unique(sizes)) < 2:
            return None
        slope, _ = np.polyfit(np.log(1.0 / sizes), np.log(times), 1)
        return float(slope)

    def write_csv(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["voxel_size", "template_voxels", "mean_seconds_per_frame", "fps"])
            for row in self.rows:
                writer.writerow([row.voxel_size, row.template_voxels, f"{row.mean_seconds:.6f}", f"{row.fps:.3f}"])
        return path

    def format_table(self):
        header = f"{'Voxel size (m)':>15}{'Вокселів шаблону':>18}{'Час на кадр (с)':>17}{'FPS':>10}"
        lines = [header, "-" * len(header)]
        for row in self.rows:
            lines.append(
                f"{row.voxel_size:>15.3f}{row.template_voxels:>18,}{row.mean_seconds:>17.4f}{row.fps:>10.2f}"
            )
        slope = self.scaling_slope()
        if slope is not None:
            lines.append(f"Нахил log-log (час vs 1/voxel_size): {slope:.2f}")
        return "\n".join(lines)


def describe_host():
    """Опис машини для звіту: процесор, кількість ядер, частота, пам'ять"""
    frequency = psutil.cpu_freq()
    return {
        "processor": platform.processor() or platform.machine(),
        "python": platform.python_version(),
        "cpu_logical": psutil.cpu_count(logical=True),
        "cpu_physical": psutil.cpu_count(logical=False),
        "cpu_mhz": round(frequency.current, 1) if frequency else None,
        "memory_gb": round(psutil.virtual_memory().total / 1024 ** 3, 1),
    }


def render_bench_frames(cfg, frames, seed=0, elevation_samples=24, scene_name="tank"):
    """Фіксований набір синтетичних кадрів сонара вздовж траєкторії сканування"""
    scene = SCENES[scene_name]()
    trajectory = sweep_trajectory(default_sweep())
    rng = np.random.default_rng(seed)
    rendered = []
    for index in range(frames):
        timestamp, pose = trajectory[index % len(trajectory)]
        rendered.append(render_sonar(
            scene, pose, cfg.sonar, TANK_NOISE, elevation_samples, rng=rng, timestamp=timestamp,
        ))
    return rendered


def time_voxel_size(cfg, frames, voxel_size, warmup=TIMING_WARMUP_FRAMES):
    params = cfg.preprocessing
    started = time.perf_counter()
    template = build_template(cfg.integration_intrinsics, voxel_size, cfg.carve.min_voxel_ratio)
    template_seconds = time.perf_counter() - started
    grid = VoxelGrid.from_bounds(cfg.workspace.min, cfg.workspace.max, voxel_size, cfg.carve.t_r)

    durations = []
    for frame in frames:
        started = time.perf_counter()
        polar_map = preprocess(frame, params.half_window, params.background_bins, params.decimation)
        integrate_frame(grid, template, polar_map, frame.pose, cfg.carve)
        durations.append(time.perf_counter() - started)

    measured = durations[warmup:] if len(durations) > warmup else durations
    return BenchRow(
        voxel_size=float(voxel_size),
        template_voxels=len(template),
        template_seconds=template_seconds,
        mean_seconds=float(np.mean(measured)),
    )


@monitor_memory
def run_bench(cfg, voxel_sizes, frames=100, seed=0, elevation_samples=24, rendered=None):
    """
    Для кожного розміру вокселя: шаблон будується поза заміром, потім вимірюється
    середній час preprocess + integrate на одному й тому самому наборі кадрів.
    """
    voxel_sizes = [float(v) for v in voxel_sizes]
    if len(voxel_sizes) < 2:
        raise ValueError("Для замірів потрібно щонайменше два розміри вокселя")
    if frames < 1:
        raise ValueError("Кількість кадрів має бути >= 1")

    rendered = rendered or render_bench_frames(cfg, frames, seed, elevation_samples)
    report = BenchReport(frames=len(rendered), host=describe_host())
    for voxel_size in voxel_sizes:
        row = time_voxel_size(cfg, rendered, voxel_size)
        logger.info(
            f"voxel_size={voxel_size} м: {row.template_voxels:,} вокселів шаблону, "
            f"{row.mean_seconds:.4f} с/кадр ({row.fps:.1f} FPS)"
        )
        report.rows.append(row)
    return report
