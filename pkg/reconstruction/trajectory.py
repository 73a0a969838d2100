"""
Траєкторія сканування: зустрічні проходи по рисканню на кількох рівнях тангажу
з протилежними кутами крену сенсора.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .geometry import Pose, compose

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SweepParams:
    """
    base - поза осі плеча (world <- base); сенсор рухається по колу радіуса arm_radius
    навколо осі z бази, mount_offset задано в системі сенсора.
    """
    yaw_min: float = math.radians(-70.0)
    yaw_max: float = math.radians(70.0)
    pitch_levels: Tuple[float, ...] = (math.radians(45.0), math.radians(30.0), math.radians(15.0))
    roll_pair: Tuple[float, float] = (math.radians(45.0), math.radians(-45.0))
    base: Pose = field(default_factory=Pose.identity)
    arm_radius: float = 0.3
    mount_offset: Tuple[float, float, float] = (0.0, 0.0, -0.05)
    angular_step: float = math.radians(3.0)
    rate: float = 10.0
    gate: float = 0.01

    def __post_init__(self):
        if not self.yaw_min < self.yaw_max:
            raise ValueError(f"yaw_min має бути меншим за yaw_max: {self.yaw_min} >= {self.yaw_max}")
        if len(self.pitch_levels) == 0:
            raise ValueError("Потрібен хоча б один рівень тангажу")
        if len(self.roll_pair) != 2:
            raise ValueError("roll_pair має містити два кути")
        if self.angular_step <= 0 or self.rate <= 0:
            raise ValueError("Крок та частота кадрів мають бути додатними")
        object.__setattr__(self, "pitch_levels", tuple(self.pitch_levels))
        object.__setattr__(self, "roll_pair", tuple(self.roll_pair))

    @property
    def yaw_count(self):
        return math.ceil((self.yaw_max - self.yaw_min) / self.angular_step - 1e-9) + 1


def sensor_pose(params, yaw, pitch, roll):
    """Поза сенсора у світовій системі для заданих кутів"""
    local = Pose.from_euler(yaw=yaw, pitch=pitch, roll=roll)
    arm = np.array([math.cos(yaw), math.sin(yaw), 0.0]) * params.arm_radius
    position = arm + local.rotation @ np.asarray(params.mount_offset, dtype=np.float64)
    return compose(params.base, Pose(local.rotation, position))


def sweep_angles(params):
    """Послідовність (yaw, pitch, roll) у порядку руху"""
    yaws = np.linspace(params.yaw_min, params.yaw_max, params.yaw_count)
    angles = []
    for pitch in params.pitch_levels:
        angles.extend((yaw, pitch, params.roll_pair[0]) for yaw in yaws)
        angles.extend((yaw, pitch, params.roll_pair[1]) for yaw in yaws[::-1])
    return angles


def sweep_trajectory(params):
    """
    Список (timestamp, Pose): для кожного рівня тангажу прохід yaw_min -> yaw_max при roll_pair[0],
    потім зворотний прохід при roll_pair[1].
    """
    trajectory = []
    previous = None
    for index, (yaw, pitch, roll) in enumerate(sweep_angles(params)):
        pose = sensor_pose(params, yaw, pitch, roll)
        if previous is not None and pose.distance_to(previous) <= params.gate:
            raise ValueError(
                f"Пози #{index - 1} і #{index} ближчі за поріг руху {params.gate} м; "
                f"збільшіть angular_step або arm_radius"
            )
        trajectory.append((index / params.rate, pose))
        previous = pose
    logger.info(
        f"Траєкторія: {len(trajectory)} поз, {2 * len(params.pitch_levels)} проходів, "
        f"{params.yaw_count} кроків рискання на прохід"
    )
    return trajectory


def frustum_coverage(trajectory, intrinsics, points):
    """Частка точок, що потрапили хоча б в одну зону огляду сонара траєкторії"""
    points = np.asarray(points, dtype=np.float64)
    covered = np.zeros(len(points), dtype=bool)
    for _, pose in trajectory:
        local = pose.inverse().transform_points(points[~covered])
        covered[np.flatnonzero(~covered)[intrinsics.contains_points(local)]] = True
        if covered.all():
            break
    return float(covered.mean()) if len(points) else 1.0
