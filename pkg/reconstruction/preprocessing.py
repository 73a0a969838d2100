"""
Попередня обробка кадрів сонара:
статистика фону, бінаризація ковзним вікном (придушення дзвону), max-pool децимація,
перетворення полярної карти в декартове зображення.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import MalformedFrameError
from .geometry import Pose, SonarIntrinsics

logger = logging.getLogger(__name__)

# Кількість перших range bins, які вважаються порожніми (~5 см)
DEFAULT_BACKGROUND_BINS = 10
DEFAULT_HALF_WINDOW = 5


def _readonly(array, dtype):
    array = np.ascontiguousarray(array, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class SonarFrame:
    """Сирий кадр сонара: n_range_bins x n_beams, 8-бітні інтенсивності"""
    data: np.ndarray
    intrinsics: SonarIntrinsics
    timestamp: float = 0.0
    pose: Optional[Pose] = None

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.shape != self.intrinsics.shape:
            raise MalformedFrameError(
                f"Розмір кадру {data.shape} не відповідає параметрам сонара {self.intrinsics.shape}"
            )
        if data.dtype != np.uint8:
            if data.size and (data.min() < 0 or data.max() > 255):
                raise MalformedFrameError("Інтенсивності кадру поза межами [0, 255]")
        object.__setattr__(self, "data", _readonly(data, np.uint8))


@dataclass(frozen=True)
class BackgroundStats:
    mu_bg: float
    sigma_bg: float

    def __post_init__(self):
        if self.sigma_bg < 0:
            raise ValueError("sigma_bg не може бути від'ємним")


@dataclass(frozen=True, eq=False)
class BinaryPolarMap:
    """Бінарна карта зайнятості в полярних координатах (рядки - range bins, стовпці - промені)"""
    data: np.ndarray
    intrinsics: SonarIntrinsics

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.shape != self.intrinsics.shape:
            raise ValueError(f"Розмір карти {data.shape} не відповідає параметрам сонара {self.intrinsics.shape}")
        object.__setattr__(self, "data", _readonly(data != 0, np.uint8))

    @property
    def occupied_count(self):
        return int(np.count_nonzero(self.data))


@dataclass(frozen=True, eq=False)
class CartesianOccupancyImage:
    """
    Декартове зображення зони огляду: рядки йдуть уздовж осі x сенсора, стовпці - уздовж осі y.
    origin - координати (x, y) центру пікселя (0, 0).
    """
    data: np.ndarray
    pixel_pitch: float
    origin: np.ndarray

    def pixel_centers(self):
        rows, cols = self.data.shape
        x = self.origin[0] + np.arange(rows) * self.pixel_pitch
        y = self.origin[1] + np.arange(cols) * self.pixel_pitch
        return np.meshgrid(x, y, indexing="ij")


def estimate_background(frame, n_bins=DEFAULT_BACKGROUND_BINS):
    """
    Середнє та стандартне відхилення (генеральне) по перших n_bins рядках, всіх променях
    """
    if n_bins < 1:
        raise ValueError(f"n_bins має бути >= 1, отримано {n_bins}")
    if frame.data.shape[0] < n_bins:
        raise MalformedFrameError(
            f"Кадр містить {frame.data.shape[0]} range bins, потрібно щонайменше {n_bins} для оцінки фону"
        )
    rows = frame.data[:n_bins].astype(np.float64)
    return BackgroundStats(mu_bg=float(rows.mean()), sigma_bg=float(rows.std()))


def binarize(frame, bg, half_window=DEFAULT_HALF_WINDOW):
    """
    Бінаризація ковзним вікном по рядках.

    Рядок r відкидається повністю, якщо його максимум < mu_bg + 2*sigma_bg. Інакше
    статистика рахується по рядках [r-w, r+w] (обрізаних межами кадру, всі промені),
    і піксель зайнятий тоді і тільки тоді, коли p > mu_W + sigma_W.

    Порівняння виконується в цілих числах: з n = кількість пікселів вікна,
    S1 = сума, S2 = сума квадратів, умова еквівалентна
    n*p - S1 > 0 і (n*p - S1)^2 > n*S2 - S1^2.
    """
    if half_window < 1:
        raise ValueError(f"half_window має бути >= 1, отримано {half_window}")

    data = frame.data.astype(np.int64)
    n_rows, n_beams = data.shape
    sigma_bg = bg.sigma_bg if bg.sigma_bg > 0 else 1.0

    row_gate = data.max(axis=1) >= bg.mu_bg + 2.0 * sigma_bg
    result = np.zeros(data.shape, dtype=np.uint8)
    if not row_gate.any():
        return BinaryPolarMap(result, frame.intrinsics)

    sums = np.concatenate([[0], np.cumsum(data.sum(axis=1))])
    squares = np.concatenate([[0], np.cumsum((data * data).sum(axis=1))])

    rows = np.flatnonzero(row_gate)
    lo = np.maximum(rows - half_window, 0)
    hi = np.minimum(rows + half_window, n_rows - 1) + 1
    n = (hi - lo) * n_beams
    s1 = sums[hi] - sums[lo]
    s2 = squares[hi] - squares[lo]
    spread = n * s2 - s1 * s1

    excess = n[:, None] * data[rows] - s1[:, None]
    result[rows] = (excess > 0) & (excess * excess > spread[:, None])
    return BinaryPolarMap(result, frame.intrinsics)


def _block_max(data, factor):
    n_rows, n_cols = data.shape
    pad_rows = -n_rows % factor
    pad_cols = -n_cols % factor
    if pad_rows or pad_cols:
        data = np.pad(data, ((0, pad_rows), (0, pad_cols)), constant_values=0)
    rows, cols = data.shape
    return data.reshape(rows // factor, factor, cols // factor, factor).max(axis=(1, 3))


def decimate_max(frame, factor):
    """
    Max-pool децимація: кожен вихідний піксель - максимум блоку factor x factor.
    Якщо розміри не діляться на factor, кадр доповнюється нулями.
    """
    factor = int(factor)
    if factor < 1:
        raise ValueError(f"Коефіцієнт децимації має бути >= 1, отримано {factor}")
    if factor == 1:
        return frame
    return SonarFrame(
        data=_block_max(frame.data, factor),
        intrinsics=frame.intrinsics.decimated(factor),
        timestamp=frame.timestamp,
        pose=frame.pose,
    )


def to_cartesian(polar_map, pixel_pitch):
    """
    Обернене відображення: для центру кожного декартового пікселя знаходимо (r, az)
    і копіюємо значення полярної комірки, що його містить. Поза зоною огляду - 0.
    """
    if pixel_pitch <= 0:
        raise ValueError(f"pixel_pitch має бути додатним, отримано {pixel_pitch}")

    intr = polar_map.intrinsics
    half_hfov = intr.hfov / 2.0
    half_width = intr.max_range * (math.sin(half_hfov) if half_hfov < math.pi / 2 else 1.0)
    n_rows = max(1, math.ceil(intr.max_range / pixel_pitch))
    n_cols = max(1, math.ceil(2.0 * half_width / pixel_pitch))
    origin = np.array([pixel_pitch / 2.0, -half_width + pixel_pitch / 2.0])

    x = origin[0] + np.arange(n_rows) * pixel_pitch
    y = origin[1] + np.arange(n_cols) * pixel_pitch
    xx, yy = np.meshgrid(x, y, indexing="ij")
    r = np.hypot(xx, yy)
    az = np.arctan2(yy, xx)

    inside = (r >= intr.min_range) & (r <= intr.max_range) & (np.abs(az) <= half_hfov)
    bins = np.clip(intr.range_bin_of(r), 0, intr.n_range_bins - 1)
    beams = np.clip(intr.beam_of(az), 0, intr.n_beams - 1)

    image = np.zeros((n_rows, n_cols), dtype=np.uint8)
    image[inside] = polar_map.data[bins[inside], beams[inside]]
    return CartesianOccupancyImage(data=image, pixel_pitch=float(pixel_pitch), origin=origin)


def preprocess(frame, half_window=DEFAULT_HALF_WINDOW, background_bins=DEFAULT_BACKGROUND_BINS, decimation=1):
    """Повний ланцюжок обробки кадру: децимація -> фон -> бінаризація"""
    frame = decimate_max(frame, decimation)
    background = estimate_background(frame, background_bins)
    return binarize(frame, background, half_window)
