"""
Воксельне вирізання: шаблон зони огляду сонара та інкрементальна інтеграція
бінарних карт у світову сітку зайнятості з порогом відношення t_r.
"""
import itertools
import logging
import math
import threading
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import TemplateTooLargeError

logger = logging.getLogger(__name__)

# 16-бітні лічильники з насиченням
COUNTER_MAX = np.iinfo(np.uint16).max


@dataclass(frozen=True)
class CarveConfig:
    t_r: float = 0.5
    motion_gate: float = 0.01
    voxel_size: float = 0.05
    min_voxel_ratio: float = 0.25

    def __post_init__(self):
        if not 0.0 <= self.t_r <= 1.0:
            raise ValueError(f"t_r має бути в межах [0, 1], отримано {self.t_r}")
        if self.motion_gate < 0:
            raise ValueError(f"motion_gate не може бути від'ємним: {self.motion_gate}")
        if self.voxel_size <= 0:
            raise ValueError(f"voxel_size має бути додатним: {self.voxel_size}")
        if self.min_voxel_ratio < 0:
            raise ValueError(f"min_voxel_ratio не може бути від'ємним: {self.min_voxel_ratio}")


@dataclass(frozen=True, eq=False)
class VoxelTemplate:
    """
    Вокселі в системі сенсора, що перетинають зону огляду сонара.

    Зв'язок воксель <-> піксель зберігається у форматі CSR, впорядкованому за пікселями:
    вокселі пікселя p - це pixel_voxels[pixel_offsets[p]:pixel_offsets[p + 1]].
    Піксель кодується лінійно: range_bin * n_beams + beam.
    """
    voxel_size: float
    intrinsics: object
    centers: np.ndarray
    pixel_offsets: np.ndarray
    pixel_voxels: np.ndarray

    def __len__(self):
        return len(self.centers)

    @property
    def n_pairs(self):
        return len(self.pixel_voxels)

    @cached_property
    def _voxel_major(self):
        n_pixels = len(self.pixel_offsets) - 1
        pixels = np.repeat(np.arange(n_pixels), np.diff(self.pixel_offsets))
        order = np.argsort(self.pixel_voxels, kind="stable")
        counts = np.bincount(self.pixel_voxels, minlength=len(self.centers))
        offsets = np.concatenate([[0], np.cumsum(counts)])
        return offsets, pixels[order]

    def pixel_refs(self, voxel):
        """(range_bin, beam) пікселів, чиї дуги по елевації перетинають воксель"""
        offsets, pixels = self._voxel_major
        linear = pixels[offsets[voxel]:offsets[voxel + 1]]
        return np.stack(np.divmod(linear, self.intrinsics.n_beams), axis=-1)

    def voxels_of_pixel(self, range_bin, beam):
        pixel = range_bin * self.intrinsics.n_beams + beam
        return self.pixel_voxels[self.pixel_offsets[pixel]:self.pixel_offsets[pixel + 1]]

    @property
    def entries(self):
        for voxel in range(len(self.centers)):
            yield self.centers[voxel], self.pixel_refs(voxel)

    def occupied_flags(self, polar_map):
        """Воксель зайнятий, якщо зайнятий будь-який з його пікселів (логічне АБО)"""
        flags = np.zeros(len(self.centers), dtype=bool)
        occupied_pixels = np.flatnonzero(polar_map.data.ravel())
        if occupied_pixels.size == 0:
            return flags
        starts = self.pixel_offsets[occupied_pixels]
        counts = self.pixel_offsets[occupied_pixels + 1] - starts
        total = int(counts.sum())
        if total == 0:
            return flags
        # Індекси всіх елементів CSR для зайнятих пікселів без циклу Python
        shift = np.repeat(starts - np.concatenate([[0], np.cumsum(counts)[:-1]]), counts)
        flags[self.pixel_voxels[shift + np.arange(total)]] = True
        return flags


# Точок дискретизації на довжину вокселя вздовж кожної осі комірки
SAMPLES_PER_VOXEL = 3


def _row_samples(intr, range_bin, voxel_size):
    """
    Точки дискретизації всіх пікселів одного range bin, включно з межами комірок.

    Повертає (samples x 3, піксель кожної точки, маска точок на межі зони огляду, reach),
    де reach - верхня межа відстані від будь-якої точки комірки до найближчої точки дискретизації.
    """
    dr = intr.range_resolution
    r_lo = intr.min_range + range_bin * dr
    r_hi = r_lo + dr
    d_az = intr.beam_spacing

    n_r = max(1, math.ceil(SAMPLES_PER_VOXEL * dr / voxel_size))
    n_az = max(1, math.ceil(SAMPLES_PER_VOXEL * r_hi * d_az / voxel_size))
    n_el = max(1, math.ceil(SAMPLES_PER_VOXEL * r_hi * intr.vfov / voxel_size))

    radii = np.linspace(r_lo, r_hi, n_r + 1)
    az_offsets = np.linspace(0.0, d_az, n_az + 1)
    elevations = np.linspace(-intr.vfov / 2.0, intr.vfov / 2.0, n_el + 1)

    beams = np.arange(intr.n_beams)
    azimuths = (-intr.hfov / 2.0 + beams[:, None] * d_az + az_offsets[None, :]).ravel()

    r, az, el = np.meshgrid(radii, azimuths, elevations, indexing="ij")
    cos_el = np.cos(el)
    points = np.stack([r * cos_el * np.cos(az), r * cos_el * np.sin(az), r * np.sin(el)], axis=-1)

    beam_of_sample = np.broadcast_to(
        np.repeat(beams, n_az + 1)[None, :, None], r.shape
    )
    pixels = range_bin * intr.n_beams + beam_of_sample

    r_edge = np.zeros(n_r + 1, dtype=bool)
    r_edge[0] = range_bin == 0
    r_edge[-1] = range_bin == intr.n_range_bins - 1
    az_edge = np.zeros(len(azimuths), dtype=bool)
    az_edge[[0, -1]] = True
    el_edge = np.zeros(n_el + 1, dtype=bool)
    el_edge[[0, -1]] = True
    boundary = r_edge[:, None, None] | az_edge[None, :, None] | el_edge[None, None, :]

    reach = 0.5 * (dr / n_r + r_hi * d_az / n_az + r_hi * intr.vfov / n_el)
    return points.reshape(-1, 3), pixels.ravel(), boundary.ravel(), reach


def _edge_samples(points, pixels, reach):
    """Межові точки, зсунуті у 8 кутів куба з півстороною reach"""
    corners = np.array(list(itertools.product((-reach, reach), repeat=3)))
    shifted = (points[:, None, :] + corners[None, :, :]).reshape(-1, 3)
    return shifted, np.repeat(pixels, len(corners))


def build_template(intr, voxel_size, min_voxel_ratio=0.25):
    """
    Будує шаблон вокселів зони огляду.

    Для кожного пікселя (range bin, промінь) його комірка дискретизується по дальності,
    азимуту та елевації (-vfov/2 .. +vfov/2), межі комірок включно, з кроком по дузі
    не більшим за voxel_size/3. Воксель, що лише краєм зачіпає зону огляду, може не містити
    жодної точки, тому точки на межі зони огляду додатково розширюються на reach.
    Точки розкладаються по вокселях, дублікати об'єднуються.
    """
    if voxel_size <= 0:
        raise ValueError(f"voxel_size має бути додатним: {voxel_size}")
    if voxel_size < min_voxel_ratio * intr.range_resolution:
        raise TemplateTooLargeError(
            f"voxel_size {voxel_size} м менший за {min_voxel_ratio} * dr ({intr.range_resolution:.5f} м)"
        )

    n_pixels = intr.n_range_bins * intr.n_beams
    half_span = math.ceil(intr.max_range / voxel_size) + 2
    span = 2 * half_span + 1

    def pair_keys(points, pixels):
        keys = np.floor(points / voxel_size).astype(np.int64) + half_span
        linear = (keys[:, 0] * span + keys[:, 1]) * span + keys[:, 2]
        return linear * n_pixels + pixels

    pair_chunks = []
    for range_bin in range(intr.n_range_bins):
        points, pixels, boundary, reach = _row_samples(intr, range_bin, voxel_size)
        edge_points, edge_pixels = _edge_samples(points[boundary], pixels[boundary], reach * (1.0 + 1e-9))
        pair_chunks.append(np.unique(np.concatenate([
            pair_keys(points, pixels),
            pair_keys(edge_points, edge_pixels),
        ])))

    pairs = np.concatenate(pair_chunks)
    voxel_keys, pixels = np.divmod(pairs, n_pixels)
    unique_keys, voxel_ids = np.unique(voxel_keys, return_inverse=True)

    kx, rest = np.divmod(unique_keys, span * span)
    ky, kz = np.divmod(rest, span)
    centers = (np.stack([kx, ky, kz], axis=-1) - half_span + 0.5) * voxel_size

    order = np.argsort(pixels, kind="stable")
    counts = np.bincount(pixels, minlength=n_pixels)
    pixel_offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)

    template = VoxelTemplate(
        voxel_size=float(voxel_size),
        intrinsics=intr,
        centers=centers,
        pixel_offsets=pixel_offsets,
        pixel_voxels=voxel_ids.ravel()[order].astype(np.int64),
    )
    logger.info(
        f"Шаблон вокселів побудовано: voxel_size={voxel_size} м, "
        f"{len(template):,} вокселів, {template.n_pairs:,} зв'язків воксель-піксель"
    )
    return template


def should_process(current, last_processed, gate):
    """Кадр обробляється, якщо сенсор зсунувся більше ніж на gate метрів (перший кадр - завжди)"""
    if last_processed is None:
        return True
    return current.distance_to(last_processed) > gate


@dataclass(frozen=True, eq=False)
class GridSnapshot:
    """Незмінна копія стану сітки на момент знімку"""
    origin: np.ndarray
    dims: tuple
    voxel_size: float
    t_r: float
    occupied: np.ndarray
    g_obs: np.ndarray
    g_occ: np.ndarray

    @property
    def count(self):
        return int(np.count_nonzero(self.occupied))

    @property
    def is_empty(self):
        return self.count == 0

    def occupied_indices(self):
        return np.argwhere(self.occupied)

    def occupied_centers(self):
        return self.origin + (self.occupied_indices() + 0.5) * self.voxel_size

    def voxel_set(self):
        return {tuple(index) for index in self.occupied_indices().tolist()}

    def occupancy(self, t_r):
        """Повторне порогування тих самих лічильників з іншим t_r"""
        return (self.g_obs > 0) & (self.g_occ > t_r * self.g_obs.astype(np.float64))


@dataclass
class IntegrationResult:
    touched: int = 0
    occupied_entries: int = 0
    out_of_bounds: int = 0


class VoxelGrid:
    """
    Світова сітка з лічильниками спостережень (g_obs) та зайнятих спостережень (g_occ).
    Межі фіксовані при створенні. Запис - один потік інтеграції, читачі отримують знімки.
    """

    def __init__(self, origin, dims, voxel_size, t_r=0.5):
        self.origin = np.asarray(origin, dtype=np.float64).reshape(3)
        self.dims = tuple(int(d) for d in dims)
        if len(self.dims) != 3 or min(self.dims) < 1:
            raise ValueError(f"Некоректні розміри сітки: {dims}")
        if voxel_size <= 0:
            raise ValueError(f"voxel_size має бути додатним: {voxel_size}")
        if not 0.0 <= t_r <= 1.0:
            raise ValueError(f"t_r має бути в межах [0, 1], отримано {t_r}")
        self.voxel_size = float(voxel_size)
        self.t_r = float(t_r)
        self.g_obs = np.zeros(self.dims, dtype=np.uint16)
        self.g_occ = np.zeros(self.dims, dtype=np.uint16)
        self.occupied = np.zeros(self.dims, dtype=bool)
        self.diagnostics = {"frames_integrated": 0, "skipped_out_of_bounds": 0, "saturated": 0}
        self._lock = threading.Lock()

    @classmethod
    def from_bounds(cls, lower, upper, voxel_size, t_r=0.5):
        lower = np.asarray(lower, dtype=np.float64)
        upper = np.asarray(upper, dtype=np.float64)
        if np.any(upper <= lower):
            raise ValueError(f"Некоректні межі робочої зони: {lower} .. {upper}")
        dims = np.ceil((upper - lower) / voxel_size - 1e-9).astype(int)
        return cls(lower, np.maximum(dims, 1), voxel_size, t_r)

    @property
    def upper(self):
        return self.origin + np.array(self.dims) * self.voxel_size

    def world_indices(self, points):
        """Індекси вокселів для точок у світовій системі та маска тих, що в межах сітки"""
        indices = np.floor((points - self.origin) / self.voxel_size).astype(np.int64)
        inside = np.all((indices >= 0) & (indices < np.array(self.dims)), axis=1)
        return indices, inside

    def set_threshold(self, t_r):
        with self._lock:
            self.t_r = float(t_r)
            self.occupied = (self.g_obs > 0) & (self.g_occ > self.t_r * self.g_obs.astype(np.float64))

    def integrate(self, template, polar_map, pose):
        """
        Інтеграція одного кадру. Кілька вокселів шаблону, що потрапили в один світовий воксель,
        рахуються як одне спостереження; воксель зайнятий, якщо зайнятий хоча б один з них.
        """
        if polar_map.data.shape != template.intrinsics.shape:
            raise ValueError(
                f"Розмір карти {polar_map.data.shape} не відповідає шаблону {template.intrinsics.shape}"
            )
        flags = template.occupied_flags(polar_map)
        world = pose.transform_points(template.centers)
        indices, inside = self.world_indices(world)
        out_of_bounds = int(len(inside) - np.count_nonzero(inside))

        linear = np.ravel_multi_index(indices[inside].T, self.dims)
        touched, inverse = np.unique(linear, return_inverse=True)
        touched_occupied = np.bincount(
            inverse.ravel(), weights=flags[inside].astype(np.float64), minlength=len(touched)
        ) > 0

        with self._lock:
            obs = self.g_obs.reshape(-1)
            occ = self.g_occ.reshape(-1)
            current = obs[touched]
            room = current < COUNTER_MAX
            obs[touched] = np.where(room, current + 1, current)
            hit = touched[touched_occupied & room]
            occ[hit] += 1
            self.occupied.reshape(-1)[touched] = occ[touched] > self.t_r * obs[touched].astype(np.float64)

            self.diagnostics["frames_integrated"] += 1
            self.diagnostics["skipped_out_of_bounds"] += out_of_bounds
            self.diagnostics["saturated"] += int(len(room) - np.count_nonzero(room))

        return IntegrationResult(
            touched=len(touched),
            occupied_entries=int(np.count_nonzero(touched_occupied)),
            out_of_bounds=out_of_bounds,
        )

    def occupancy(self, t_r=None):
        t_r = self.t_r if t_r is None else t_r
        with self._lock:
            return (self.g_obs > 0) & (self.g_occ > t_r * self.g_obs.astype(np.float64))

    def snapshot(self):
        with self._lock:
            arrays = [self.occupied.copy(), self.g_obs.copy(), self.g_occ.copy()]
            t_r = self.t_r
        for array in arrays:
            array.setflags(write=False)
        origin = self.origin.copy()
        origin.setflags(write=False)
        occupied, g_obs, g_occ = arrays
        return GridSnapshot(
            origin=origin, dims=self.dims, voxel_size=self.voxel_size, t_r=t_r,
            occupied=occupied, g_obs=g_obs, g_occ=g_occ,
        )

    @classmethod
    def from_snapshot(cls, snapshot):
        grid = cls(snapshot.origin, snapshot.dims, snapshot.voxel_size, snapshot.t_r)
        grid.g_obs[...] = snapshot.g_obs
        grid.g_occ[...] = snapshot.g_occ
        grid.occupied[...] = snapshot.occupied
        return grid


def integrate_frame(grid, tmpl, polar_map, pose, cfg):
    """Інтегрує бінарну карту кадру в сітку; повертає ту саму (оновлену) сітку"""
    if cfg.t_r != grid.t_r:
        grid.set_threshold(cfg.t_r)
    result = grid.integrate(tmpl, polar_map, pose)
    if result.out_of_bounds:
        logger.debug(f"Кадр: {result.out_of_bounds} вокселів шаблону поза межами сітки")
    return grid


def snapshot(grid):
    return grid.snapshot()
