"""
Базова геометрія: пози твердого тіла, внутрішні параметри сенсорів, перетворення систем координат.

Система координат сенсора: x - вперед, y - ліворуч, z - вгору.
Система координат камери: z - вперед, x - праворуч, y - вниз.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

logger = logging.getLogger(__name__)

# Допуск на ортонормованість матриці повороту
ROTATION_TOLERANCE = 1e-9


def _frozen(array):
    array = np.array(array, dtype=np.float64)
    array.setflags(write=False)
    return array


def _orthonormalize(rotation):
    """Найближча (за нормою Фробеніуса) матриця повороту через SVD"""
    u, _, vt = np.linalg.svd(rotation)
    fixed = u @ vt
    if np.linalg.det(fixed) < 0:
        u[:, -1] *= -1
        fixed = u @ vt
    return fixed


def _rotation_error(rotation):
    ortho = np.abs(rotation @ rotation.T - np.eye(3)).max()
    return max(ortho, abs(np.linalg.det(rotation) - 1.0))


@dataclass(frozen=True, eq=False)
class Pose:
    """
    Поза сенсора у світовій системі координат: p_world = R @ p_sensor + t.
    Незмінна після створення, тому безпечна для спільного використання потоками.
    """
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        rotation = np.asarray(self.rotation, dtype=np.float64)
        translation = np.asarray(self.translation, dtype=np.float64).reshape(-1)
        if rotation.shape != (3, 3):
            raise ValueError(f"Матриця повороту має бути 3x3, отримано {rotation.shape}")
        if translation.shape != (3,):
            raise ValueError(f"Зсув має бути 3-вектором, отримано {translation.shape}")
        if not np.all(np.isfinite(rotation)) or not np.all(np.isfinite(translation)):
            raise ValueError("Поза містить нескінченні значення")
        error = _rotation_error(rotation)
        if error > ROTATION_TOLERANCE:
            raise ValueError(f"Матриця повороту не ортонормована (похибка {error:.3e})")
        object.__setattr__(self, "rotation", _frozen(rotation))
        object.__setattr__(self, "translation", _frozen(translation))

    @classmethod
    def identity(cls):
        return cls()

    @classmethod
    def from_quaternion(cls, quaternion, translation=(0.0, 0.0, 0.0)):
        """Кватерніон у порядку (w, x, y, z); нормалізується перед перетворенням"""
        q = np.asarray(quaternion, dtype=np.float64).reshape(-1)
        if q.shape != (4,):
            raise ValueError(f"Кватерніон має містити 4 компоненти, отримано {q.shape}")
        norm = np.linalg.norm(q)
        if not np.isfinite(norm) or norm < 1e-12:
            raise ValueError("Кватерніон нульової довжини")
        w, x, y, z = q / norm
        rotation = Rotation.from_quat([x, y, z, w]).as_matrix()
        return cls(_orthonormalize(rotation), translation)

    @classmethod
    def from_euler(cls, yaw=0.0, pitch=0.0, roll=0.0, translation=(0.0, 0.0, 0.0)):
        """
        R = Rz(yaw) @ Ry(pitch) @ Rx(roll).
        Додатний pitch нахиляє вісь x сенсора вниз.
        """
        rotation = Rotation.from_euler("ZYX", [yaw, pitch, roll]).as_matrix()
        return cls(_orthonormalize(rotation), translation)

    @classmethod
    def from_matrix(cls, matrix):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.shape != (4, 4):
            raise ValueError(f"Очікувалась матриця 4x4, отримано {matrix.shape}")
        return cls(matrix[:3, :3], matrix[:3, 3])

    def as_quaternion(self):
        """(w, x, y, z) з w >= 0"""
        x, y, z, w = Rotation.from_matrix(self.rotation).as_quat()
        q = np.array([w, x, y, z])
        if q[0] < 0:
            q = -q
        return q

    def as_matrix(self):
        matrix = np.eye(4)
        matrix[:3, :3] = self.rotation
        matrix[:3, 3] = self.translation
        return matrix

    def inverse(self):
        rotation_t = self.rotation.T
        return Pose(rotation_t, -rotation_t @ self.translation)

    def orthonormalized(self):
        return Pose(_orthonormalize(self.rotation), self.translation)

    def compose(self, other):
        return compose(self, other)

    def __matmul__(self, other):
        return compose(self, other)

    def transform_point(self, point):
        return transform_point(self, point)

    def transform_points(self, points):
        """Пакетне перетворення масиву N x 3"""
        points = np.asarray(points, dtype=np.float64)
        return points @ self.rotation.T + self.translation

    def distance_to(self, other):
        return float(np.linalg.norm(self.translation - other.translation))

    def __repr__(self):
        t = ", ".join(f"{v:.4f}" for v in self.translation)
        q = ", ".join(f"{v:.4f}" for v in self.as_quaternion())
        return f"Pose(t=[{t}], q=[{q}])"


def compose(a, b):
    """(a ∘ b)(p) = a(b(p)); при накопиченні похибки поворот повторно ортонормується"""
    rotation = a.rotation @ b.rotation
    if _rotation_error(rotation) > ROTATION_TOLERANCE * 1e-3:
        rotation = _orthonormalize(rotation)
    return Pose(rotation, a.rotation @ b.translation + a.translation)


def transform_point(pose, point):
    point = np.asarray(point, dtype=np.float64)
    return pose.rotation @ point + pose.translation


def spherical_to_sensor(range_, azimuth, elevation):
    """
    Сферичні координати сонара -> декартові координати сенсора.
    Приймає скаляри або масиви однакової форми (broadcasting), повертає (..., 3).
    """
    r, az, el = np.broadcast_arrays(
        np.asarray(range_, dtype=np.float64),
        np.asarray(azimuth, dtype=np.float64),
        np.asarray(elevation, dtype=np.float64),
    )
    cos_el = np.cos(el)
    return np.stack([r * cos_el * np.cos(az), r * cos_el * np.sin(az), r * np.sin(el)], axis=-1)


def sensor_to_spherical(points):
    """Обернене перетворення: (range, azimuth, elevation) для масиву (..., 3)"""
    points = np.asarray(points, dtype=np.float64)
    x, y, z = points[..., 0], points[..., 1], points[..., 2]
    r = np.sqrt(x * x + y * y + z * z)
    az = np.arctan2(y, x)
    el = np.arctan2(z, np.hypot(x, y))
    return r, az, el


@dataclass(frozen=True)
class SonarIntrinsics:
    """
    Параметри багатопроменевого сонара.
    Рядки кадру - range bins (від ближнього до дальнього), стовпці - промені
    (азимут від -hfov/2 до +hfov/2).
    """
    n_beams: int
    n_range_bins: int
    hfov: float
    vfov: float
    max_range: float
    min_range: float = 0.0

    def __post_init__(self):
        if int(self.n_beams) < 1 or int(self.n_range_bins) < 1:
            raise ValueError("Кількість променів і range bins має бути >= 1")
        if not 0.0 < self.hfov < math.pi:
            raise ValueError(f"hfov поза межами (0, pi): {self.hfov}")
        if not 0.0 < self.vfov < math.pi:
            raise ValueError(f"vfov поза межами (0, pi): {self.vfov}")
        if self.min_range < 0.0 or not self.min_range < self.max_range:
            raise ValueError(f"Некоректний діапазон дальностей [{self.min_range}, {self.max_range}]")
        object.__setattr__(self, "n_beams", int(self.n_beams))
        object.__setattr__(self, "n_range_bins", int(self.n_range_bins))

    @property
    def shape(self):
        return (self.n_range_bins, self.n_beams)

    @property
    def range_resolution(self):
        return (self.max_range - self.min_range) / self.n_range_bins

    @property
    def beam_spacing(self):
        return self.hfov / self.n_beams

    def bin_center_range(self, range_bin):
        return self.min_range + (np.asarray(range_bin) + 0.5) * self.range_resolution

    def beam_azimuth(self, beam):
        return -self.hfov / 2.0 + (np.asarray(beam) + 0.5) * self.beam_spacing

    def range_bin_of(self, range_):
        return np.floor((np.asarray(range_) - self.min_range) / self.range_resolution).astype(np.int64)

    def beam_of(self, azimuth):
        return np.floor((np.asarray(azimuth) + self.hfov / 2.0) / self.beam_spacing).astype(np.int64)

    def contains_polar(self, range_, azimuth, elevation=0.0):
        """Чи лежить точка (r, az, el) всередині зони огляду сонара"""
        r = np.asarray(range_)
        return (
            (r >= self.min_range)
            & (r <= self.max_range)
            & (np.abs(azimuth) <= self.hfov / 2.0)
            & (np.abs(elevation) <= self.vfov / 2.0)
        )

    def contains_points(self, points):
        r, az, el = sensor_to_spherical(points)
        return self.contains_polar(r, az, el)

    def frustum_volume(self):
        """Аналітичний об'єм сферичного сектора зони огляду, м^3"""
        radial = (self.max_range ** 3 - self.min_range ** 3) / 3.0
        return radial * self.hfov * 2.0 * math.sin(self.vfov / 2.0)

    def decimated(self, factor):
        """
        Параметри після max-pool децимації: кількість bins/променів ділиться на factor
        (з округленням вгору), крок по дальності та азимуту зростає у factor разів.
        """
        factor = int(factor)
        if factor == 1:
            return self
        n_bins = -(-self.n_range_bins // factor)
        n_beams = -(-self.n_beams // factor)
        return SonarIntrinsics(
            n_beams=n_beams,
            n_range_bins=n_bins,
            hfov=n_beams * factor * self.beam_spacing,
            vfov=self.vfov,
            max_range=self.min_range + n_bins * factor * self.range_resolution,
            min_range=self.min_range,
        )

    def to_dict(self):
        return {
            "n_beams": self.n_beams,
            "n_range_bins": self.n_range_bins,
            "hfov_deg": math.degrees(self.hfov),
            "vfov_deg": math.degrees(self.vfov),
            "min_range": self.min_range,
            "max_range": self.max_range,
        }


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole-камера без дисторсії"""
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("Фокусні відстані мають бути додатними")
        if int(self.width) < 1 or int(self.height) < 1:
            raise ValueError("Розмір зображення має бути >= 1")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError(f"Головна точка ({self.cx}, {self.cy}) поза зображенням")
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))

    @property
    def shape(self):
        return (self.height, self.width)

    @property
    def matrix(self):
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    def pixel_rays(self):
        """Ненормовані напрямки ((u-cx)/fx, (v-cy)/fy, 1) для всіх пікселів, H x W x 3"""
        u = (np.arange(self.width, dtype=np.float64) - self.cx) / self.fx
        v = (np.arange(self.height, dtype=np.float64) - self.cy) / self.fy
        uu, vv = np.meshgrid(u, v)
        return np.stack([uu, vv, np.ones_like(uu)], axis=-1)

    def project(self, points_camera):
        """Точки в системі камери (N x 3) -> піксельні координати (N x 2)"""
        points_camera = np.asarray(points_camera, dtype=np.float64)
        z = points_camera[..., 2]
        u = self.fx * points_camera[..., 0] / z + self.cx
        v = self.fy * points_camera[..., 1] / z + self.cy
        return np.stack([u, v], axis=-1)

    def scaled(self, factor):
        """Камера зі зменшеною роздільністю (для швидких тестів і попереднього перегляду)"""
        width = max(1, int(round(self.width * factor)))
        height = max(1, int(round(self.height * factor)))
        return CameraIntrinsics(
            fx=self.fx * factor,
            fy=self.fy * factor,
            cx=min((self.cx + 0.5) * factor - 0.5, width - 1),
            cy=min((self.cy + 0.5) * factor - 0.5, height - 1),
            width=width,
            height=height,
        )

    def to_dict(self):
        return {
            "fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
            "width": self.width, "height": self.height,
        }


# Поворот, що переводить осі камери (z вперед, x праворуч, y вниз) в осі сенсора (x вперед, y ліворуч, z вгору)
SENSOR_FROM_CAMERA_AXES = np.array([
    [0.0, 0.0, 1.0],
    [-1.0, 0.0, 0.0],
    [0.0, -1.0, 0.0],
])


def camera_from_sonar_extrinsic(translation=(0.0, 0.0, -0.05), pitch_up=math.radians(5.0)):
    """
    Поза камери відносно сонара (sonar <- camera).
    Камера зміщена на translation і піднята на pitch_up відносно осі сонара.
    """
    tilt = Rotation.from_euler("Y", -pitch_up).as_matrix()
    return Pose(_orthonormalize(tilt @ SENSOR_FROM_CAMERA_AXES), translation)
