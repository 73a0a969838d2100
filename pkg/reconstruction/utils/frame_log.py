"""
Журнал кадрів: каталог з index.jsonl (один JSON-запис на кадр) та файлами зображень.

Запис:
    {"kind": "sonar", "timestamp": 0.1,
     "pose": {"translation": [x, y, z], "quaternion": [w, x, y, z]},
     "path": "sonar/000001.pgm", "mask": "masks/000002.png"}
"""
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from reconstruction.exceptions import FrameLogError, MalformedFrameError
from reconstruction.fusion import Mask, OpticalFrame
from reconstruction.geometry import Pose
from reconstruction.preprocessing import SonarFrame
from reconstruction.utils.image_io import read_gray, read_mask, read_rgb, write_gray, write_mask, write_rgb

logger = logging.getLogger(__name__)

INDEX_NAME = "index.jsonl"
FRAME_KINDS = ("sonar", "optical")


@dataclass(frozen=True)
class FrameRecord:
    index: int
    kind: str
    timestamp: float
    pose: Optional[Pose]
    path: str
    mask: Optional[str] = None

    def to_json(self):
        record = {"kind": self.kind, "timestamp": self.timestamp, "pose": None, "path": self.path}
        if self.pose is not None:
            record["pose"] = {
                "translation": [float(v) for v in self.pose.translation],
                "quaternion": [float(v) for v in self.pose.as_quaternion()],
            }
        if self.mask:
            record["mask"] = self.mask
        return json.dumps(record)


def parse_record(line, index):
    """Розбір одного рядка index.jsonl"""
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as e:
        raise FrameLogError(f"Рядок #{index} журналу не є коректним JSON: {e}") from e
    if not isinstance(raw, dict):
        raise FrameLogError(f"Рядок #{index} журналу має бути JSON-об'єктом")

    kind = raw.get("kind")
    if kind not in FRAME_KINDS:
        raise FrameLogError(f"Кадр #{index}: невідомий тип {kind!r}")
    if not raw.get("path"):
        raise FrameLogError(f"Кадр #{index}: відсутній шлях до файлу")
    try:
        timestamp = float(raw.get("timestamp"))
    except (TypeError, ValueError) as e:
        raise FrameLogError(f"Кадр #{index}: некоректна мітка часу") from e

    pose = None
    raw_pose = raw.get("pose")
    if raw_pose:
        try:
            pose = Pose.from_quaternion(raw_pose["quaternion"], raw_pose["translation"])
        except (KeyError, TypeError, ValueError) as e:
            raise FrameLogError(f"Кадр #{index}: некоректна поза: {e}") from e

    return FrameRecord(
        index=index,
        kind=kind,
        timestamp=timestamp,
        pose=pose,
        path=str(raw["path"]),
        mask=raw.get("mask"),
    )


class FrameLog:
    """Читання журналу кадрів із перевіркою монотонності міток часу"""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.index_path = self.directory / INDEX_NAME
        if not self.index_path.exists():
            raise FrameLogError(f"Журнал кадрів не знайдено: {self.index_path}")

    def records(self):
        return self.read_from(0)[0]

    def read_from(self, offset, first_index=0, last_timestamp=None):
        """
        Читає повні рядки починаючи з байтового зсуву offset.
        Повертає (записи, новий зсув) - незавершений останній рядок залишається на наступний раз.
        """
        records = []
        with open(self.index_path, "rb") as f:
            f.seek(offset)
            chunk = f.read()
        consumed = chunk.rfind(b"\n") + 1
        index = first_index
        for line in chunk[:consumed].decode("utf-8").splitlines():
            if not line.strip():
                continue
            record = parse_record(line, index)
            if last_timestamp is not None and record.timestamp < last_timestamp:
                raise FrameLogError(
                    f"Кадр #{index}: мітка часу {record.timestamp} менша за попередню {last_timestamp}"
                )
            last_timestamp = record.timestamp
            records.append(record)
            index += 1
        return records, offset + consumed

    def resolve(self, relative):
        return self.directory / relative

    def load_sonar(self, record, intrinsics):
        path = self.resolve(record.path)
        if not path.exists():
            raise MalformedFrameError(f"Кадр #{record.index}: файл {path} не знайдено", record.index)
        try:
            return SonarFrame(
                data=read_gray(path),
                intrinsics=intrinsics,
                timestamp=record.timestamp,
                pose=record.pose,
            )
        except MalformedFrameError as e:
            raise MalformedFrameError(f"Кадр #{record.index}: {e}", record.index) from e

    def load_optical(self, record, intrinsics):
        path = self.resolve(record.path)
        if not path.exists():
            raise MalformedFrameError(f"Кадр #{record.index}: файл {path} не знайдено", record.index)
        try:
            return OpticalFrame(
                pixels=read_rgb(path),
                intrinsics=intrinsics,
                pose=record.pose,
                timestamp=record.timestamp,
            )
        except (MalformedFrameError, ValueError) as e:
            raise MalformedFrameError(f"Кадр #{record.index}: {e}", record.index) from e

    def load_mask(self, record):
        if not record.mask:
            return None
        return Mask(read_mask(self.resolve(record.mask)))


class FrameLogWriter:
    """Дописування кадрів у журнал (використовується генератором синтетичних даних)"""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.index_path = self.directory / INDEX_NAME
        self.count = 0
        self.index_path.write_text("")

    def _append(self, record):
        with open(self.index_path, "a", encoding="utf-8") as f:
            f.write(record.to_json() + "\n")
        self.count += 1
        return record

    def append_sonar(self, frame):
        relative = f"sonar/{self.count:06d}.pgm"
        write_gray(self.directory / relative, frame.data)
        return self._append(FrameRecord(self.count, "sonar", frame.timestamp, frame.pose, relative))

    def append_optical(self, frame, mask=None):
        relative = f"optical/{self.count:06d}.png"
        write_rgb(self.directory / relative, frame.pixels)
        mask_relative = None
        if mask is not None:
            mask_relative = f"masks/{self.count:06d}.png"
            write_mask(self.directory / mask_relative, mask.data)
        return self._append(FrameRecord(self.count, "optical", frame.timestamp, frame.pose, relative, mask_relative))
