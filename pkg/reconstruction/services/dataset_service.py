"""
Генерація синтетичних наборів даних: траєкторія сканування, кадри сонара, оптичні знімки
об'єктів зблизька, конфігурація запуску та маніфест з еталонними даними.
"""
import json
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from reconstruction.geometry import Pose, compose
from reconstruction.simulator import SCENES, TANK_NOISE, TankLayout, look_at, render_optical, render_sonar
from reconstruction.trajectory import SweepParams, sweep_trajectory
from reconstruction.utils.config_loader import save_pipeline_config
from reconstruction.utils.frame_log import FrameLogWriter
from reconstruction.utils.stage_decorators import timed_stage

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
CONFIG_NAME = "config.yaml"

# Вісь плеча маніпулятора у басейні
SWEEP_BASE = (-0.6, 0.0, 1.0)


def default_sweep(**overrides):
    params = {"base": Pose(np.eye(3), SWEEP_BASE)}
    params.update(overrides)
    return SweepParams(**params)


def closeup_poses(target, count, distance=0.7, elevation=math.radians(35.0), start=math.radians(200.0)):
    """Пози сонара навколо цілі для оптичних знімків зблизька"""
    target = np.asarray(target, dtype=np.float64)
    poses = []
    for k in range(count):
        heading = start + k * math.radians(40.0)
        offset = np.array([
            math.cos(heading) * math.cos(elevation),
            math.sin(heading) * math.cos(elevation),
            math.sin(elevation),
        ])
        poses.append(look_at(target + distance * offset, target))
    return poses


@dataclass
class SimulationSummary:
    directory: Path
    sonar_frames: int
    optical_frames: int
    seed: int


def _pose_record(pose):
    return {"translation": pose.translation.tolist(), "quaternion": pose.as_quaternion().tolist()}


@timed_stage("simulate")
def simulate(out_dir, cfg, scene_name="tank", seed=0, sweep=None, noise=TANK_NOISE,
             elevation_samples=24, closeups=2):
    """
    Записує журнал кадрів у out_dir разом з config.yaml і manifest.json.
    Усі випадкові процеси використовують один генератор з seed, тому результат відтворюваний.
    """
    if scene_name not in SCENES:
        raise ValueError(f"Невідома сцена: {scene_name}")
    out_dir = Path(out_dir)
    scene = SCENES[scene_name]()
    layout = TankLayout()
    sweep = sweep or default_sweep()
    rng = np.random.default_rng(seed)

    writer = FrameLogWriter(out_dir)
    frames = []
    trajectory = sweep_trajectory(sweep)
    for timestamp, pose in trajectory:
        frame = render_sonar(scene, pose, cfg.sonar, noise, elevation_samples, rng=rng, timestamp=timestamp)
        record = writer.append_sonar(frame)
        frames.append({"index": record.index, "kind": "sonar", "timestamp": timestamp, "pose": _pose_record(pose)})
    logger.info(f"Згенеровано {len(trajectory)} кадрів сонара")

    box = next(p for p in scene.primitives if p.name == "box")
    extrinsic = cfg.camera_extrinsic
    last_timestamp = trajectory[-1][0] if trajectory else 0.0
    for k, sonar_pose in enumerate(closeup_poses(box.pose.translation, closeups)):
        camera_pose = compose(sonar_pose, extrinsic)
        timestamp = last_timestamp + (k + 1) / sweep.rate
        frame, mask, _ = render_optical(scene, cfg.camera, camera_pose, timestamp=timestamp)
        record = writer.append_optical(frame, mask)
        frames.append({"index": record.index, "kind": "optical", "timestamp": timestamp, "pose": _pose_record(camera_pose)})
    logger.info(f"Згенеровано {closeups} оптичних кадрів")

    save_pipeline_config(cfg, out_dir / CONFIG_NAME)
    manifest = {
        "scene": scene_name,
        "seed": seed,
        "primitives": scene.describe(),
        "ground_truth": {
            "tank_inner_diameter": layout.diameter,
            "tank_depth": layout.depth,
            "box_size": [layout.box_size] * 3,
            "box_center": box.pose.translation.tolist(),
        },
        "sweep": {
            "yaw_deg": [math.degrees(sweep.yaw_min), math.degrees(sweep.yaw_max)],
            "pitch_deg": [math.degrees(p) for p in sweep.pitch_levels],
            "roll_deg": [math.degrees(r) for r in sweep.roll_pair],
            "base": _pose_record(sweep.base),
            "arm_radius": sweep.arm_radius,
            "step_deg": math.degrees(sweep.angular_step),
            "rate_hz": sweep.rate,
        },
        "noise": asdict(noise),
        "elevation_samples": elevation_samples,
        "frames": frames,
    }
    with open(out_dir / MANIFEST_NAME, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2)

    return SimulationSummary(out_dir, len(trajectory), closeups, seed)
