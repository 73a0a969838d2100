"""
Конфігурація конвеєра: значення за замовчуванням з settings, YAML-файл запуску, перевизначення з CLI.
"""
import copy
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import yaml
from django.conf import settings

from reconstruction.carving import CarveConfig
from reconstruction.exceptions import ConfigError
from reconstruction.fusion import MaskParams
from reconstruction.geometry import CameraIntrinsics, SonarIntrinsics, camera_from_sonar_extrinsic

logger = logging.getLogger(__name__)

SECTIONS = {
    "sonar": "OASIS_SONAR",
    "camera": "OASIS_CAMERA",
    "camera_from_sonar": "OASIS_CAMERA_FROM_SONAR",
    "carve": "OASIS_CARVE",
    "preprocessing": "OASIS_PREPROCESSING",
    "workspace": "OASIS_WORKSPACE",
    "meshing": "OASIS_MESHING",
    "mask": "OASIS_MASK",
    "export": "OASIS_EXPORT",
}

# Ключі в градусах у YAML -> ключі в радіанах усередині
DEGREE_KEYS = {"hfov_deg": "hfov", "vfov_deg": "vfov", "pitch_up_deg": "pitch_up"}

# Прапорці CLI -> (секція, ключ)
OVERRIDES = {
    "voxel_size": ("carve", "voxel_size"),
    "t_r": ("carve", "t_r"),
    "motion_gate": ("carve", "motion_gate"),
    "half_window": ("preprocessing", "half_window"),
    "decimation": ("preprocessing", "decimation"),
}


@dataclass(frozen=True)
class PreprocessingParams:
    half_window: int = 5
    background_bins: int = 10
    decimation: int = 1

    def __post_init__(self):
        if self.half_window < 1 or self.background_bins < 1 or self.decimation < 1:
            raise ValueError("half_window, background_bins і decimation мають бути >= 1")


@dataclass(frozen=True)
class WorkspaceBounds:
    min: tuple
    max: tuple

    def __post_init__(self):
        lower = tuple(float(v) for v in self.min)
        upper = tuple(float(v) for v in self.max)
        if len(lower) != 3 or len(upper) != 3 or any(u <= l for l, u in zip(lower, upper)):
            raise ValueError(f"Некоректні межі робочої зони: {self.min} .. {self.max}")
        object.__setattr__(self, "min", lower)
        object.__setattr__(self, "max", upper)


@dataclass(frozen=True)
class MeshingParams:
    iso: float = 0.5
    smoothing_iterations: int = 3
    smoothing_lambda: float = 0.5


@dataclass(frozen=True)
class ExportPaths:
    grid: str = "grid.oasis"
    occupied: str = "occupied.ply"
    mesh: str = "mesh.ply"
    cloud: str = "cloud.ply"
    timing: str = "timing.csv"
    ascii: bool = False


@dataclass(frozen=True)
class PipelineConfig:
    sonar: SonarIntrinsics
    camera: CameraIntrinsics
    camera_from_sonar: dict
    carve: CarveConfig
    preprocessing: PreprocessingParams
    workspace: WorkspaceBounds
    meshing: MeshingParams = field(default_factory=MeshingParams)
    mask: MaskParams = field(default_factory=MaskParams)
    export: ExportPaths = field(default_factory=ExportPaths)
    source: Optional[str] = None

    @property
    def camera_extrinsic(self):
        """Поза камери відносно сонара (sonar <- camera)"""
        return camera_from_sonar_extrinsic(
            translation=self.camera_from_sonar["translation"],
            pitch_up=self.camera_from_sonar["pitch_up"],
        )

    @property
    def integration_intrinsics(self):
        """Параметри сонара, для яких будується шаблон (з урахуванням децимації)"""
        return self.sonar.decimated(self.preprocessing.decimation)

    def to_dict(self):
        """Структура YAML-файлу запуску (кути в градусах)"""
        mask = asdict(self.mask)
        if mask["background_color"] is not None:
            mask["background_color"] = [int(c) for c in mask["background_color"]]
        return {
            "sonar": self.sonar.to_dict(),
            "camera": self.camera.to_dict(),
            "camera_from_sonar": {
                "translation": [float(v) for v in self.camera_from_sonar["translation"]],
                "pitch_up_deg": math.degrees(self.camera_from_sonar["pitch_up"]),
            },
            "carve": asdict(self.carve),
            "preprocessing": asdict(self.preprocessing),
            "workspace": {"min": list(self.workspace.min), "max": list(self.workspace.max)},
            "meshing": asdict(self.meshing),
            "mask": mask,
            "export": asdict(self.export),
        }


def _to_internal(section):
    """Перетворює ключі *_deg на радіани"""
    converted = {}
    for key, value in section.items():
        if key in DEGREE_KEYS:
            converted[DEGREE_KEYS[key]] = math.radians(float(value))
        else:
            converted[key] = value
    return converted


def default_sections():
    return {
        name: _to_internal(copy.deepcopy(getattr(settings, setting_name, {})))
        for name, setting_name in SECTIONS.items()
    }


def _read_yaml(path):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Файл конфігурації не знайдено: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"Помилка розбору YAML {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"Файл конфігурації {path} має містити словник секцій")
    unknown = set(data) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"Невідомі секції конфігурації: {', '.join(sorted(unknown))}")
    for name, section in data.items():
        if section is not None and not isinstance(section, dict):
            raise ConfigError(f"Секція {name} має бути словником")
    return data


def build_pipeline_config(sections, source=None):
    try:
        mask = dict(sections["mask"])
        if mask.get("background_color") is not None:
            mask["background_color"] = tuple(int(c) for c in mask["background_color"])
        extrinsic = dict(sections["camera_from_sonar"])
        extrinsic.setdefault("translation", [0.0, 0.0, 0.0])
        extrinsic.setdefault("pitch_up", 0.0)
        extrinsic["translation"] = [float(v) for v in extrinsic["translation"]]
        extrinsic["pitch_up"] = float(extrinsic["pitch_up"])

        return PipelineConfig(
            sonar=SonarIntrinsics(**sections["sonar"]),
            camera=CameraIntrinsics(**sections["camera"]),
            camera_from_sonar=extrinsic,
            carve=CarveConfig(**sections["carve"]),
            preprocessing=PreprocessingParams(**sections["preprocessing"]),
            workspace=WorkspaceBounds(**sections["workspace"]),
            meshing=MeshingParams(**sections["meshing"]),
            mask=MaskParams(**mask),
            export=ExportPaths(**sections["export"]),
            source=str(source) if source else None,
        )
    except (TypeError, ValueError, KeyError) as e:
        raise ConfigError(f"Некоректна конфігурація: {e}") from e


def load_pipeline_config(path=None, overrides=None):
    """
    Порядок пріоритету: settings -> YAML-файл -> перевизначення з командного рядка.
    """
    sections = default_sections()
    if path:
        for name, section in _read_yaml(path).items():
            sections[name].update(_to_internal(section or {}))

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in OVERRIDES:
            raise ConfigError(f"Невідомий параметр перевизначення: {key}")
        section, option = OVERRIDES[key]
        sections[section][option] = value

    config = build_pipeline_config(sections, source=path)
    logger.debug(f"Конфігурація завантажена ({path or 'settings'}): voxel_size={config.carve.voxel_size}")
    return config


def save_pipeline_config(config, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(config.to_dict(), f, sort_keys=False, allow_unicode=True)
    return path
