"""
Збереження знімка сітки у двійковий файл.

Формат (little-endian):
    заголовок  - magic "OASISGRD", версія, origin (3 x f64), dims (3 x u32), voxel_size, t_r,
                 кількість серій RLE (u64), значення першої серії (u8)
    RLE        - довжини серій зайнятості (u64), порядок C (x, y, z)
    лічильники - g_obs і g_occ як uint16
"""
import logging
from pathlib import Path

import numpy as np

from reconstruction.carving import GridSnapshot
from reconstruction.exceptions import InputError

logger = logging.getLogger(__name__)

MAGIC = b"OASISGRD"
VERSION = 1

HEADER = np.dtype([
    ("magic", "S8"),
    ("version", "<u4"),
    ("origin", "<f8", (3,)),
    ("dims", "<u4", (3,)),
    ("voxel_size", "<f8"),
    ("t_r", "<f8"),
    ("n_runs", "<u8"),
    ("first", "u1"),
])


def encode_runs(occupied):
    """Повертає (значення першої серії, довжини серій)"""
    flat = np.asarray(occupied, dtype=np.uint8).ravel()
    if flat.size == 0:
        return 0, np.zeros(0, dtype=np.uint64)
    changes = np.flatnonzero(np.diff(flat)) + 1
    boundaries = np.concatenate([[0], changes, [flat.size]])
    return int(flat[0]), np.diff(boundaries).astype(np.uint64)


def decode_runs(first, runs, dims):
    values = (np.arange(len(runs)) + first) % 2
    flat = np.repeat(values.astype(bool), runs.astype(np.int64))
    if flat.size != int(np.prod(dims)):
        raise InputError(f"Довжина RLE {flat.size} не відповідає розмірам сітки {tuple(dims)}")
    return flat.reshape(dims)


def save_grid(path, snapshot):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    first, runs = encode_runs(snapshot.occupied)

    header = np.zeros(1, dtype=HEADER)
    header["magic"] = MAGIC
    header["version"] = VERSION
    header["origin"] = snapshot.origin
    header["dims"] = snapshot.dims
    header["voxel_size"] = snapshot.voxel_size
    header["t_r"] = snapshot.t_r
    header["n_runs"] = len(runs)
    header["first"] = first

    with open(path, "wb") as f:
        f.write(header.tobytes())
        f.write(runs.astype("<u8").tobytes())
        f.write(np.ascontiguousarray(snapshot.g_obs, dtype="<u2").tobytes())
        f.write(np.ascontiguousarray(snapshot.g_occ, dtype="<u2").tobytes())

    logger.info(f"Сітку {snapshot.dims} ({snapshot.count:,} зайнятих вокселів) збережено у {path}")
    return path


def load_grid(path):
    path = Path(path)
    if not path.exists():
        raise InputError(f"Файл сітки не знайдено: {path}")
    blob = path.read_bytes()
    if len(blob) < HEADER.itemsize:
        raise InputError(f"Файл сітки занадто короткий: {path}")

    header = np.frombuffer(blob, dtype=HEADER, count=1)[0]
    if header["magic"] != MAGIC:
        raise InputError(f"Файл {path} не є сіткою OASIS")
    if int(header["version"]) != VERSION:
        raise InputError(f"Непідтримувана версія формату сітки: {int(header['version'])}")

    dims = tuple(int(d) for d in header["dims"])
    n_voxels = int(np.prod(dims))
    n_runs = int(header["n_runs"])
    offset = HEADER.itemsize
    expected = offset + 8 * n_runs + 2 * 2 * n_voxels
    if len(blob) != expected:
        raise InputError(f"Розмір файлу сітки {len(blob)} байт, очікувалось {expected}")

    runs = np.frombuffer(blob, dtype="<u8", count=n_runs, offset=offset)
    offset += 8 * n_runs
    g_obs = np.frombuffer(blob, dtype="<u2", count=n_voxels, offset=offset).reshape(dims).astype(np.uint16)
    offset += 2 * n_voxels
    g_occ = np.frombuffer(blob, dtype="<u2", count=n_voxels, offset=offset).reshape(dims).astype(np.uint16)
    occupied = decode_runs(int(header["first"]), runs, dims)

    origin = np.array(header["origin"], dtype=np.float64)
    for array in (origin, occupied, g_obs, g_occ):
        array.setflags(write=False)
    return GridSnapshot(
        origin=origin,
        dims=dims,
        voxel_size=float(header["voxel_size"]),
        t_r=float(header["t_r"]),
        occupied=occupied,
        g_obs=g_obs,
        g_occ=g_occ,
    )
