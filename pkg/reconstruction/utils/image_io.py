"""
Читання та запис зображень кадрів: PGM (сонар), PNG/PPM (оптика), PNG (маски)
"""
import logging
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from reconstruction.exceptions import MalformedFrameError

logger = logging.getLogger(__name__)


def _open(path):
    try:
        with Image.open(path) as image:
            image.load()
            return image.copy()
    except (OSError, UnidentifiedImageError, ValueError) as e:
        raise MalformedFrameError(f"Не вдалося прочитати зображення {path}: {e}") from e


def read_gray(path):
    """8-бітне сіре зображення (рядки - range bins, стовпці - промені)"""
    image = _open(path)
    if image.mode not in ("L", "P", "1"):
        raise MalformedFrameError(f"Очікувалось 8-бітне сіре зображення, отримано режим {image.mode}: {path}")
    return np.asarray(image.convert("L"), dtype=np.uint8)


def read_rgb(path):
    image = _open(path)
    return np.asarray(image.convert("RGB"), dtype=np.uint8)


def read_mask(path):
    return read_gray(path) > 0


def write_gray(path, data):
    """Запис у двійковий PGM (P5) або PNG залежно від розширення"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    image = Image.fromarray(np.ascontiguousarray(data, dtype=np.uint8))
    image.save(path, format="PPM" if path.suffix.lower() in (".pgm", ".ppm") else "PNG")
    return path


def write_rgb(path, pixels):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    image = Image.fromarray(np.ascontiguousarray(pixels, dtype=np.uint8))
    image.save(path, format="PPM" if path.suffix.lower() == ".ppm" else "PNG")
    return path


def write_mask(path, mask):
    return write_gray(path, np.where(np.asarray(mask, dtype=bool), 255, 0))
