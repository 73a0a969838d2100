"""
Оптичне злиття: рендеринг глибини віртуальною камерою по сітці, маски кадру,
зворотне проєціювання маскованих пікселів у кольорову хмару точок світової системи.
"""
import logging
import threading
from dataclasses import dataclass
from typing import Optional

import numpy as np
import open3d as o3d

from .geometry import CameraIntrinsics, Pose

logger = logging.getLogger(__name__)

# Значення глибини для пікселів без перетину
NO_HIT = 0.0


@dataclass(frozen=True, eq=False)
class OpticalFrame:
    pixels: np.ndarray
    intrinsics: CameraIntrinsics
    pose: Pose
    timestamp: float = 0.0

    def __post_init__(self):
        pixels = np.asarray(self.pixels)
        expected = (self.intrinsics.height, self.intrinsics.width, 3)
        if pixels.shape != expected:
            raise ValueError(f"Розмір кадру {pixels.shape} не відповідає параметрам камери {expected}")
        object.__setattr__(self, "pixels", np.ascontiguousarray(pixels, dtype=np.uint8))


@dataclass(frozen=True, eq=False)
class DepthImage:
    """Глибина вздовж осі z камери, м; NO_HIT там, де промінь нічого не перетнув"""
    depths: np.ndarray
    intrinsics: CameraIntrinsics

    def __post_init__(self):
        depths = np.asarray(self.depths, dtype=np.float64)
        if depths.shape != self.intrinsics.shape:
            raise ValueError(f"Розмір карти глибини {depths.shape} не відповідає камері {self.intrinsics.shape}")
        object.__setattr__(self, "depths", depths)


@dataclass(frozen=True, eq=False)
class Mask:
    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", np.asarray(self.data, dtype=bool))

    def __and__(self, other):
        if self.data.shape != other.data.shape:
            raise ValueError(f"Маски різного розміру: {self.data.shape} і {other.data.shape}")
        return Mask(self.data & other.data)

    def __invert__(self):
        return Mask(~self.data)

    @property
    def count(self):
        return int(np.count_nonzero(self.data))

    def iou(self, other):
        union = np.count_nonzero(self.data | other.data)
        if union == 0:
            return 1.0
        return np.count_nonzero(self.data & other.data) / union


@dataclass(frozen=True, eq=False)
class ColoredPointCloud:
    points: np.ndarray
    colors: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        colors = np.asarray(self.colors, dtype=np.uint8).reshape(-1, 3)
        if len(points) != len(colors):
            raise ValueError("Кількість точок і кольорів не збігається")
        if not np.all(np.isfinite(points)):
            raise ValueError("Хмара точок містить нескінченні координати")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "colors", colors)

    @classmethod
    def empty(cls):
        return cls(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.uint8))

    @classmethod
    def concatenate(cls, clouds):
        clouds = list(clouds)
        if not clouds:
            return cls.empty()
        return cls(
            np.concatenate([cloud.points for cloud in clouds]),
            np.concatenate([cloud.colors for cloud in clouds]),
        )

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class MaskParams:
    """
    strategy: color_threshold - відстань до кольору фону більша за threshold;
    external - готова маска для кадру; none - весь кадр.
    """
    strategy: str = "color_threshold"
    background_color: Optional[tuple] = None
    threshold: float = 60.0

    def __post_init__(self):
        if self.strategy not in MASK_STRATEGIES:
            raise ValueError(f"Невідома стратегія маски: {self.strategy}")
        if self.threshold < 0:
            raise ValueError(f"Поріг маски не може бути від'ємним: {self.threshold}")


class DepthRenderer:
    """
    Рендеринг карт глибини по сітці трикутників.
    Сцена трасування (BVH Open3D) створюється окремо для кожного потоку.
    """

    def __init__(self, mesh):
        self.mesh = mesh
        self._local = threading.local()

    def _scene(self):
        scene = getattr(self._local, "scene", None)
        if scene is None:
            scene = o3d.t.geometry.RaycastingScene()
            scene.add_triangles(
                o3d.core.Tensor(self.mesh.vertices.astype(np.float32)),
                o3d.core.Tensor(self.mesh.triangles.astype(np.uint32)),
            )
            self._local.scene = scene
        return scene

    def render(self, intr, pose):
        if self.mesh.is_empty:
            return DepthImage(np.full(intr.shape, NO_HIT), intr)

        rays_camera = intr.pixel_rays()
        directions_camera = rays_camera / np.linalg.norm(rays_camera, axis=-1, keepdims=True)
        directions = directions_camera @ pose.rotation.T
        origins = np.broadcast_to(pose.translation, directions.shape)
        rays = np.concatenate([origins, directions], axis=-1).astype(np.float32)

        result = self._scene().cast_rays(o3d.core.Tensor(rays))
        t_hit = result["t_hit"].numpy().astype(np.float64)
        depths = t_hit * directions_camera[..., 2]
        depths[~np.isfinite(depths) | (depths <= 0)] = NO_HIT
        return DepthImage(depths, intr)


def render_depth(mesh, intr, pose):
    return DepthRenderer(mesh).render(intr, pose)


def _border_median(pixels):
    border = np.concatenate([pixels[0], pixels[-1], pixels[1:-1, 0], pixels[1:-1, -1]])
    return np.median(border.astype(np.float64), axis=0)


def _color_threshold_mask(frame, params, external):
    background = (
        np.asarray(params.background_color, dtype=np.float64)
        if params.background_color is not None
        else _border_median(frame.pixels)
    )
    distance = np.linalg.norm(frame.pixels.astype(np.float64) - background, axis=-1)
    return Mask(distance > params.threshold)


def _external_mask(frame, params, external):
    if external is None:
        raise ValueError("Стратегія external потребує готової маски для кадру")
    if external.data.shape != frame.intrinsics.shape:
        raise ValueError(f"Розмір зовнішньої маски {external.data.shape} не відповідає кадру")
    return external


def _full_mask(frame, params, external):
    return Mask(np.ones(frame.intrinsics.shape, dtype=bool))


MASK_STRATEGIES = {
    "color_threshold": _color_threshold_mask,
    "external": _external_mask,
    "none": _full_mask,
}


def foreground_mask(frame, params=None, external=None):
    params = params or MaskParams()
    return MASK_STRATEGIES[params.strategy](frame, params, external)


def depth_validity_mask(depth):
    return Mask(np.isfinite(depth.depths) & (depth.depths > 0))


def project_pixels(frame, depth, mask):
    """
    Кожен піксель маски (u, v) з глибиною d -> d * ((u-cx)/fx, (v-cy)/fy, 1) у системі камери,
    далі у світову систему позою кадру; колір береться з пікселя.
    """
    if mask.data.shape != depth.depths.shape or depth.depths.shape != frame.intrinsics.shape:
        raise ValueError("Розміри кадру, карти глибини та маски не збігаються")
    selected = mask & depth_validity_mask(depth)
    v, u = np.nonzero(selected.data)
    if len(u) == 0:
        return ColoredPointCloud.empty()

    intr = frame.intrinsics
    d = depth.depths[v, u]
    camera_points = np.stack([d * (u - intr.cx) / intr.fx, d * (v - intr.cy) / intr.fy, d], axis=-1)
    return ColoredPointCloud(frame.pose.transform_points(camera_points), frame.pixels[v, u])


def fuse_frame(frame, renderer, params=None, external=None):
    """Повний ланцюжок для одного оптичного кадру: глибина -> маски -> хмара точок"""
    depth = renderer.render(frame.intrinsics, frame.pose)
    mask = foreground_mask(frame, params, external) & depth_validity_mask(depth)
    cloud = project_pixels(frame, depth, mask)
    logger.debug(f"Кадр t={frame.timestamp:.2f}: {mask.count:,} пікселів маски, {len(cloud):,} точок")
    return cloud
