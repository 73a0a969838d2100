"""
Синтетичний симулятор сенсорів: сцени з примітивів зі знаковою функцією відстані (SDF),
sphere tracing для сонара та оптичної камери, артефакти сонара (дзвін, спекл, пропуски, фон).
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .fusion import NO_HIT, DepthImage, Mask, OpticalFrame
from .geometry import Pose, spherical_to_sensor
from .preprocessing import SonarFrame

logger = logging.getLogger(__name__)

TRACE_MAX_STEPS = 256
TRACE_EPSILON = 5e-4
NORMAL_STEP = 1e-4

# Кольори за замовчуванням
BACKGROUND_COLOR = (20, 40, 90)
AMBIENT = 0.25


def _as_color(color):
    return tuple(int(c) for c in color)


@dataclass(frozen=True, eq=False)
class Primitive:
    """Базовий примітив: поза (world <- local), відбивна здатність, колір RGB"""
    pose: Pose = field(default_factory=Pose.identity)
    reflectivity: float = 1.0
    color: Tuple[int, int, int] = (200, 200, 200)
    name: str = ""

    def __post_init__(self):
        if not 0.0 <= self.reflectivity <= 1.0:
            raise ValueError(f"Відбивна здатність поза межами [0, 1]: {self.reflectivity}")
        object.__setattr__(self, "color", _as_color(self.color))

    def distance(self, points):
        local = (np.asarray(points) - self.pose.translation) @ self.pose.rotation
        return self.local_distance(local)

    def local_distance(self, local):
        raise NotImplementedError

    def describe(self):
        return {
            "type": type(self).__name__.lower(),
            "name": self.name,
            "translation": self.pose.translation.tolist(),
            "quaternion": self.pose.as_quaternion().tolist(),
            "reflectivity": self.reflectivity,
            "color": list(self.color),
        }


@dataclass(frozen=True, eq=False)
class Sphere(Primitive):
    radius: float = 0.1

    def local_distance(self, local):
        return np.linalg.norm(local, axis=-1) - self.radius

    def describe(self):
        return {**super().describe(), "radius": self.radius}


@dataclass(frozen=True, eq=False)
class Box(Primitive):
    """Паралелепіпед з центром у початку локальної системи; size - повні розміри"""
    size: Tuple[float, float, float] = (0.1, 0.1, 0.1)

    def local_distance(self, local):
        q = np.abs(local) - np.asarray(self.size) / 2.0
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
        inside = np.minimum(q.max(axis=-1), 0.0)
        return outside + inside

    def describe(self):
        return {**super().describe(), "size": list(self.size)}


@dataclass(frozen=True, eq=False)
class Plane(Primitive):
    """Нескінченна площина z = 0 локальної системи, нормаль +z"""

    def local_distance(self, local):
        return local[..., 2]


@dataclass(frozen=True, eq=False)
class CylinderShell(Primitive):
    """Вертикальна циліндрична стінка: вісь - локальна z від 0 до height"""
    inner_radius: float = 1.0
    thickness: float = 0.02
    height: float = 1.0

    def local_distance(self, local):
        rho = np.hypot(local[..., 0], local[..., 1])
        radial = np.abs(rho - (self.inner_radius + self.thickness / 2.0)) - self.thickness / 2.0
        axial = np.abs(local[..., 2] - self.height / 2.0) - self.height / 2.0
        q = np.stack([radial, axial], axis=-1)
        return np.minimum(q.max(axis=-1), 0.0) + np.linalg.norm(np.maximum(q, 0.0), axis=-1)

    def describe(self):
        return {
            **super().describe(),
            "inner_radius": self.inner_radius,
            "thickness": self.thickness,
            "height": self.height,
        }


@dataclass(frozen=True, eq=False)
class Scene:
    primitives: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "primitives", tuple(self.primitives))

    @property
    def is_empty(self):
        return len(self.primitives) == 0

    def distance(self, points):
        """Мінімальна відстань по всіх примітивах та індекс найближчого"""
        points = np.asarray(points, dtype=np.float64)
        if self.is_empty:
            return np.full(points.shape[:-1], np.inf), np.full(points.shape[:-1], -1, dtype=np.int64)
        distances = np.stack([primitive.distance(points) for primitive in self.primitives])
        ids = distances.argmin(axis=0)
        return np.take_along_axis(distances, ids[None], axis=0)[0], ids

    def normals(self, points):
        offsets = np.eye(3) * NORMAL_STEP
        gradient = np.stack(
            [self.distance(points + offset)[0] - self.distance(points - offset)[0] for offset in offsets],
            axis=-1,
        )
        length = np.linalg.norm(gradient, axis=-1, keepdims=True)
        return np.divide(gradient, length, out=np.zeros_like(gradient), where=length > 0)

    def describe(self):
        return [primitive.describe() for primitive in self.primitives]


@dataclass(frozen=True)
class SonarNoiseModel:
    background_mean: float = 0.0
    background_sigma: float = 0.0
    ring_gain: float = 0.0
    speckle_sigma: float = 0.0
    dropout_prob: float = 0.0
    ring_bins: int = 3

    def __post_init__(self):
        values = (self.background_mean, self.background_sigma, self.ring_gain, self.speckle_sigma, self.ring_bins)
        if min(values) < 0:
            raise ValueError("Параметри шуму не можуть бути від'ємними")
        if not 0.0 <= self.dropout_prob <= 1.0:
            raise ValueError(f"dropout_prob поза межами [0, 1]: {self.dropout_prob}")

    @property
    def is_noiseless(self):
        return self.background_mean == 0 and self.background_sigma == 0 and self.speckle_sigma == 0 and self.dropout_prob == 0


# Типовий набір артефактів для тестового басейну
TANK_NOISE = SonarNoiseModel(
    background_mean=6.0,
    background_sigma=3.0,
    ring_gain=0.35,
    speckle_sigma=25.0,
    dropout_prob=0.02,
    ring_bins=3,
)


def sphere_trace(scene, origins, directions, max_distance):
    """
    Sphere tracing для пакета променів (напрямки нормовані).
    Повертає відстань до перетину (inf - немає перетину) та індекс примітива (-1).
    """
    directions = np.asarray(directions, dtype=np.float64)
    shape = directions.shape[:-1]
    origins = np.broadcast_to(np.asarray(origins, dtype=np.float64), directions.shape).reshape(-1, 3)
    directions = directions.reshape(-1, 3)
    n_rays = len(directions)

    t_hit = np.full(n_rays, np.inf)
    ids = np.full(n_rays, -1, dtype=np.int64)
    if scene.is_empty or n_rays == 0:
        return t_hit.reshape(shape), ids.reshape(shape)

    t = np.zeros(n_rays)
    active = np.arange(n_rays)
    for _ in range(TRACE_MAX_STEPS):
        if active.size == 0:
            break
        distance, nearest = scene.distance(origins[active] + t[active, None] * directions[active])
        hit = distance < TRACE_EPSILON
        t_hit[active[hit]] = t[active[hit]]
        ids[active[hit]] = nearest[hit]
        t[active] += np.maximum(distance, 0.0)
        keep = ~hit & (t[active] <= max_distance)
        active = active[keep]
    return t_hit.reshape(shape), ids.reshape(shape)


def _elevation_samples(vfov, count):
    """Рівномірні кути елевації з краями апертури; набір для 2n-1 містить набір для n"""
    if count < 1:
        raise ValueError(f"elevation_samples має бути >= 1, отримано {count}")
    if count == 1:
        return np.zeros(1)
    return np.linspace(-vfov / 2.0, vfov / 2.0, count)


def render_clean_sonar(scene, pose, intr, elevation_samples):
    """Кадр без шуму: max-комбінування інтенсивностей по променях елевації"""
    azimuths = intr.beam_azimuth(np.arange(intr.n_beams))
    elevations = _elevation_samples(intr.vfov, elevation_samples)
    az, el = np.meshgrid(azimuths, elevations)
    directions = spherical_to_sensor(1.0, az, el) @ pose.rotation.T

    t_hit, _ = sphere_trace(scene, pose.translation, directions, intr.max_range)
    frame = np.zeros(intr.shape, dtype=np.float64)
    valid = np.isfinite(t_hit) & (t_hit >= intr.min_range) & (t_hit < intr.max_range)
    if not valid.any():
        return frame

    points = pose.translation + t_hit[valid, None] * directions[valid]
    normals = scene.normals(points)
    incidence = np.abs(np.einsum("ij,ij->i", normals, directions[valid]))
    _, ids = scene.distance(points)
    reflectivity = np.array([p.reflectivity for p in scene.primitives])[ids]

    bins = np.minimum(intr.range_bin_of(t_hit[valid]), intr.n_range_bins - 1)
    beams = np.broadcast_to(np.arange(intr.n_beams), t_hit.shape)[valid]
    np.maximum.at(frame, (bins, beams), 255.0 * reflectivity * incidence)
    return frame


def _add_ringing(clean, noise):
    if noise.ring_gain <= 0 or noise.ring_bins < 1:
        return clean
    rung = clean.copy()
    for distance in range(1, noise.ring_bins + 1):
        gain = noise.ring_gain ** distance
        rung[distance:] = np.maximum(rung[distance:], clean[:-distance] * gain)
        rung[:-distance] = np.maximum(rung[:-distance], clean[distance:] * gain)
    return rung


def render_sonar(scene, pose, intr, noise=None, elevation_samples=24, rng=None, timestamp=0.0):
    """
    Синтетичний кадр сонара: sphere tracing по променях елевації кожного променя,
    потім дзвін (копії з послабленням ring_gain^d на сусідніх bins), спекл, фон, обрізання [0, 255].
    """
    noise = noise or SonarNoiseModel()
    rng = rng if rng is not None else np.random.default_rng(0)

    data = render_clean_sonar(scene, pose, intr, elevation_samples)
    if noise.dropout_prob > 0:
        data[rng.random(data.shape) < noise.dropout_prob] = 0.0
    data = _add_ringing(data, noise)
    if noise.speckle_sigma > 0:
        data = data * np.maximum(1.0 + (noise.speckle_sigma / 255.0) * rng.standard_normal(data.shape), 0.0)
    if noise.background_mean > 0 or noise.background_sigma > 0:
        data = data + noise.background_mean + noise.background_sigma * rng.standard_normal(data.shape)

    data = np.clip(np.rint(data), 0, 255).astype(np.uint8)
    return SonarFrame(data=data, intrinsics=intr, timestamp=timestamp, pose=pose)


def _trace_camera(scene, intr, pose):
    rays = intr.pixel_rays()
    directions_camera = rays / np.linalg.norm(rays, axis=-1, keepdims=True)
    directions = directions_camera @ pose.rotation.T
    t_hit, ids = sphere_trace(scene, pose.translation, directions, max_distance=50.0)
    return t_hit, ids, directions, directions_camera


def render_optical(scene, intr, pose, background_color=BACKGROUND_COLOR, ambient=AMBIENT, timestamp=0.0):
    """
    Оптичний рендер з освітленням від камери (Ламберт + ambient).
    Повертає (OpticalFrame, маска об'єктів, справжня карта глибини).
    """
    t_hit, ids, directions, directions_camera = _trace_camera(scene, intr, pose)
    hit = np.isfinite(t_hit)

    pixels = np.empty(intr.shape + (3,), dtype=np.float64)
    pixels[...] = np.asarray(background_color, dtype=np.float64)
    depths = np.full(intr.shape, NO_HIT)
    if hit.any():
        points = pose.translation + t_hit[hit, None] * directions[hit]
        normals = scene.normals(points)
        shade = ambient + (1.0 - ambient) * np.abs(np.einsum("ij,ij->i", normals, directions[hit]))
        colors = np.array([p.color for p in scene.primitives], dtype=np.float64)[ids[hit]]
        pixels[hit] = colors * shade[:, None]
        depths[hit] = t_hit[hit] * directions_camera[hit][:, 2]

    frame = OpticalFrame(
        pixels=np.clip(np.rint(pixels), 0, 255).astype(np.uint8),
        intrinsics=intr,
        pose=pose,
        timestamp=timestamp,
    )
    return frame, Mask(hit), DepthImage(depths, intr)


def render_labels(scene, intr, pose):
    """Індекс примітива для кожного пікселя (-1 - фон)"""
    _, ids, _, _ = _trace_camera(scene, intr, pose)
    return ids


def look_at(eye, target, up=(0.0, 0.0, 1.0)):
    """Поза сенсора з віссю x, спрямованою з eye на target, та z вгору"""
    eye = np.asarray(eye, dtype=np.float64)
    forward = np.asarray(target, dtype=np.float64) - eye
    forward /= np.linalg.norm(forward)
    left = np.cross(up, forward)
    if np.linalg.norm(left) < 1e-9:
        raise ValueError("Напрямок огляду паралельний вектору up")
    left /= np.linalg.norm(left)
    rotation = np.stack([forward, left, np.cross(forward, left)], axis=1)
    return Pose(rotation, eye)


@dataclass(frozen=True)
class TankLayout:
    """Параметри тестового басейну (м)"""
    diameter: float = 2.1
    depth: float = 1.5
    wall_thickness: float = 0.02
    box_size: float = 0.329
    box_center_xy: Tuple[float, float] = (0.3, 0.0)
    box_yaw: float = math.radians(15.0)


def tank_scene(layout=None):
    """Басейн: циліндрична стінка, дно та ящик на дні"""
    layout = layout or TankLayout()
    box_pose = Pose.from_euler(
        yaw=layout.box_yaw,
        translation=(layout.box_center_xy[0], layout.box_center_xy[1], layout.box_size / 2.0),
    )
    return Scene((
        CylinderShell(
            name="tank_wall",
            inner_radius=layout.diameter / 2.0,
            thickness=layout.wall_thickness,
            height=layout.depth,
            reflectivity=0.6,
            color=(170, 170, 160),
        ),
        Plane(name="floor", reflectivity=0.45, color=(120, 110, 90)),
        Box(
            name="box",
            pose=box_pose,
            size=(layout.box_size,) * 3,
            reflectivity=0.9,
            color=(200, 40, 40),
        ),
    ))


SCENES = {
    "tank": tank_scene,
}


def surface_voxels(scene, origin, dims, voxel_size):
    """Еталонна вокселізація: вокселі, через які проходить поверхня сцени"""
    origin = np.asarray(origin, dtype=np.float64)
    grid = np.indices(dims).reshape(3, -1).T
    centers = origin + (grid + 0.5) * voxel_size
    distance, _ = scene.distance(centers)
    inside = np.abs(distance) <= voxel_size * math.sqrt(3.0) / 2.0
    return grid[inside]
