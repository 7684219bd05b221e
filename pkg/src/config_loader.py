"""
실행 설정 로더
==============
config/presets.yml 의 프리셋 섹션과 --config 파일(YAML 또는 JSON), 커맨드라인 오버라이드를 합쳐
검증된 RunConfig 를 만듭니다.

우선순위: 기본값 < 프리셋 < --config 파일 < 플래그 (플래그 우선)

  - 알 수 없는 키는 ConfigError
  - 문자열 값의 ${VAR} 는 환경변수로 치환
  - config_hash: 검증된 설정 트리의 정규 JSON SHA-256 (출력 디렉토리 제외)
"""

import hashlib
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Optional

import yaml

from .exceptions import ConfigError
from .models import VARIANTS
from .pdesim import INFLOW_KINDS

logger = logging.getLogger(__name__)

PRESETS_FILE = "presets.yml"


# ============================================
# 설정 섹션
# ============================================

@dataclass(frozen=True)
class SimulationSection:
    kind: str = "river"
    steps: int = 4000
    dt: float = 0.1
    nu: float = 0.0
    noise_sigma: float = 0.01
    slope: float = 0.01
    g_const: float = 9.81
    base: float = 1.0
    amplitude: float = 0.5
    period: float = 120.0
    inflow: str = "sine"
    extended: bool = False

    def validate(self):
        if self.kind not in ("river", "traffic"):
            raise ConfigError(f"simulation.kind 는 river / traffic 이어야 합니다: {self.kind}")
        if int(self.steps) < 1:
            raise ConfigError(f"simulation.steps 는 1 이상이어야 합니다: {self.steps}")
        if not self.dt > 0:
            raise ConfigError(f"simulation.dt 는 양수여야 합니다: {self.dt}")
        if self.nu < 0 or self.noise_sigma < 0:
            raise ConfigError("simulation.nu / noise_sigma 는 0 이상이어야 합니다.")
        if self.period <= 0:
            raise ConfigError(f"simulation.period 는 양수여야 합니다: {self.period}")
        if self.inflow not in INFLOW_KINDS:
            raise ConfigError(f"simulation.inflow 는 {' / '.join(INFLOW_KINDS)} 중 하나여야 합니다: {self.inflow}")


@dataclass(frozen=True)
class ModelSection:
    variant: str = "river"
    layers: int = 2
    hidden: int = 16
    window: int = 24
    horizon: int = 6
    edge_hidden: int = 8

    def validate(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"model.variant 는 {', '.join(VARIANTS)} 중 하나여야 합니다: {self.variant}")
        for name in ("layers", "hidden", "window", "horizon", "edge_hidden"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"model.{name} 는 1 이상이어야 합니다: {getattr(self, name)}")


@dataclass(frozen=True)
class TrainingSection:
    epochs: int = 60
    lr: float = 0.01
    batch_size: int = 32
    stride: int = 5
    fractions: tuple = (0.7, 0.15, 0.15)
    reverse: bool = False

    def validate(self):
        if int(self.epochs) < 0:
            raise ConfigError(f"training.epochs 는 0 이상이어야 합니다: {self.epochs}")
        if not self.lr > 0:
            raise ConfigError(f"training.lr 은 양수여야 합니다: {self.lr}")
        if int(self.batch_size) < 1 or int(self.stride) < 1:
            raise ConfigError("training.batch_size / stride 는 1 이상이어야 합니다.")
        if len(self.fractions) != 3 or abs(sum(self.fractions) - 1.0) > 1e-9 or min(self.fractions) < 0:
            raise ConfigError(f"training.fractions 는 합이 1인 비음수 3개여야 합니다: {list(self.fractions)}")


@dataclass(frozen=True)
class PerturbSection:
    node: Optional[str] = None
    delta: float = 0.5

    def validate(self):
        if not math.isfinite(self.delta):
            raise ConfigError(f"perturb.delta 는 유한한 실수여야 합니다: {self.delta}")


@dataclass(frozen=True)
class SpectrumSection:
    ring_size: int = 256
    alphas: tuple = (0.0, 0.5, 1.0)

    def validate(self):
        if int(self.ring_size) < 8:
            raise ConfigError(f"spectrum.ring_size 는 8 이상이어야 합니다: {self.ring_size}")


@dataclass(frozen=True)
class InverseDemoSection:
    ring_size: int = 64
    steps: int = 200
    cfl: float = 0.8
    sigma: float = 0.01

    def validate(self):
        if int(self.ring_size) < 8 or int(self.steps) < 1:
            raise ConfigError("inverse_demo.ring_size ≥ 8, steps ≥ 1 이어야 합니다.")
        if not 0 < self.cfl <= 1 or self.sigma < 0:
            raise ConfigError("inverse_demo.cfl ∈ (0, 1], sigma ≥ 0 이어야 합니다.")


@dataclass(frozen=True)
class SweepSection:
    horizons: tuple = (3, 6, 9)
    variants: tuple = ("river", "gcn")

    def validate(self):
        if not self.horizons or min(int(h) for h in self.horizons) < 1:
            raise ConfigError(f"sweep.horizons 는 1 이상의 정수 목록이어야 합니다: {list(self.horizons)}")


@dataclass(frozen=True)
class DataSection:
    dataset: Optional[str] = None
    checkpoint: Optional[str] = None
    reverse_checkpoint: Optional[str] = None
    reference_ds: Optional[float] = None
    run_dir: Optional[str] = None

    def validate(self):
        if self.reference_ds is not None and (isinstance(self.reference_ds, bool)
                                              or not isinstance(self.reference_ds, (int, float))):
            raise ConfigError(f"data.reference_ds 는 실수여야 합니다: {self.reference_ds!r}")


SECTIONS = {
    "simulation": SimulationSection,
    "model": ModelSection,
    "training": TrainingSection,
    "perturb": PerturbSection,
    "spectrum": SpectrumSection,
    "inverse_demo": InverseDemoSection,
    "sweep": SweepSection,
    "data": DataSection,
}


@dataclass(frozen=True)
class RunConfig:
    """검증된 실행 설정 트리"""
    preset: Optional[str] = None
    seed: int = 0
    out: str = "runs"
    simulation: SimulationSection = field(default_factory=SimulationSection)
    model: ModelSection = field(default_factory=ModelSection)
    training: TrainingSection = field(default_factory=TrainingSection)
    perturb: PerturbSection = field(default_factory=PerturbSection)
    spectrum: SpectrumSection = field(default_factory=SpectrumSection)
    inverse_demo: InverseDemoSection = field(default_factory=InverseDemoSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    data: DataSection = field(default_factory=DataSection)

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))

    @property
    def hash(self) -> str:
        tree = self.to_dict()
        tree.pop("out", None)
        return config_hash(tree)


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def config_hash(tree: dict) -> str:
    """정규 JSON (키 정렬) 의 SHA-256"""
    canonical = json.dumps(_jsonable(tree), sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def verify_manifest(manifest: dict) -> str:
    """manifest 의 config 트리를 다시 해시하여 기록된 config_hash 와 대조합니다."""
    if "config" not in manifest or "config_hash" not in manifest:
        raise ConfigError("manifest 에 config / config_hash 가 없습니다.")
    actual = config_hash(manifest["config"])
    if actual != manifest["config_hash"]:
        raise ConfigError(
            f"config_hash 불일치: 기록 {manifest['config_hash'][:12]}… ≠ 재계산 {actual[:12]}…"
        )
    return actual


# ============================================
# 로더
# ============================================

class ConfigLoader:
    """프리셋 + 실행 파일 + 오버라이드 기반 설정 로더"""

    def __init__(self, base_dir: str = None):
        """
        Args:
            base_dir: 프로젝트 루트 디렉토리 경로.
                      None이면 이 파일 기준 상위 2단계 (프로젝트 루트)를 사용.
        """
        if base_dir is None:
            base_dir = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
        self.base_dir = base_dir
        self.config_dir = os.path.join(base_dir, "config")

    def _load_yaml(self, filepath: str) -> dict:
        """YAML(JSON 포함) 파일을 읽어 딕셔너리로 반환"""
        if not os.path.exists(filepath):
            raise FileNotFoundError(f"설정 파일을 찾을 수 없습니다: {filepath}")

        with open(filepath, "r", encoding="utf-8") as f:
            try:
                data = yaml.safe_load(f)
            except yaml.YAMLError as e:
                raise ConfigError(f"설정 파일 파싱 실패: {filepath}: {e}") from e

        if data is None:
            return {}
        if not isinstance(data, dict):
            raise ConfigError(f"설정 파일 최상위는 매핑이어야 합니다: {filepath}")
        return data

    def load_presets(self) -> dict:
        return self._load_yaml(os.path.join(self.config_dir, PRESETS_FILE))

    def load_preset(self, name: str) -> dict:
        """
        프리셋 섹션을 로딩합니다.

        Args:
            name: river-small / traffic-small / ring
        """
        presets = self.load_presets()
        if name not in presets:
            raise ConfigError(f"프리셋 '{name}'이 {PRESETS_FILE}에 정의되어 있지 않습니다.")
        return presets[name] or {}

    def build(self, preset: Optional[str] = None, config_path: Optional[str] = None,
              overrides: Optional[dict] = None) -> RunConfig:
        """
        Args:
            preset: 프리셋 이름
            config_path: --config 파일 경로 (YAML / JSON)
            overrides: {"model.layers": 3, "seed": 1, ...} 형태의 플래그 값 (None 값은 무시)

        Returns:
            검증된 RunConfig
        """
        tree: dict = {}
        if preset:
            _merge(tree, self.load_preset(preset))
        if config_path:
            loaded = self._load_yaml(config_path)
            file_preset = loaded.pop("preset", None)
            if file_preset and not preset:
                preset = file_preset
                _merge(tree, self.load_preset(preset))
            _merge(tree, loaded)
        for key, value in (overrides or {}).items():
            if value is not None:
                _set_dotted(tree, key, value)

        tree = _substitute_env(tree)
        config = _to_run_config(tree, preset)
        logger.info("📂 설정 로딩: preset=%s, config=%s, hash=%s…",
                    preset or "-", config_path or "-", config.hash[:12])
        return config


def _merge(dst: dict, src: dict):
    for key, value in src.items():
        if isinstance(value, dict) and isinstance(dst.get(key), dict):
            _merge(dst[key], value)
        else:
            dst[key] = value


def _set_dotted(tree: dict, key: str, value: Any):
    parts = key.split(".")
    node = tree
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"'{key}' 경로가 섹션이 아닙니다.")
    node[parts[-1]] = value


def _substitute_env(value):
    """문자열 ${VAR} 를 환경변수로 치환합니다."""
    if isinstance(value, dict):
        return {k: _substitute_env(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_substitute_env(v) for v in value]
    if isinstance(value, str) and value.startswith("${") and value.endswith("}"):
        env_var = value[2:-1]
        env_value = os.environ.get(env_var)
        if env_value is None:
            raise ConfigError(f"환경변수 '{env_var}'가 설정되지 않았습니다.")
        return env_value
    return value


def _coerce(name: str, default, value):
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"'{name}' 는 목록이어야 합니다: {value!r}")
        return tuple(value)
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"'{name}' 는 true/false 여야 합니다: {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            if isinstance(value, float) and value.is_integer():
                return int(value)
            raise ConfigError(f"'{name}' 는 정수여야 합니다: {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"'{name}' 는 실수여야 합니다: {value!r}")
        return float(value)
    return value


def _build_section(name: str, cls, values: dict):
    if not isinstance(values, dict):
        raise ConfigError(f"'{name}' 섹션은 매핑이어야 합니다.")
    known = {f.name: f for f in fields(cls)}
    unknown = set(values) - set(known)
    if unknown:
        raise ConfigError(f"'{name}' 섹션의 알 수 없는 키: {sorted(unknown)}")
    defaults = cls()
    kwargs = {}
    for key, value in values.items():
        default = getattr(defaults, key)
        kwargs[key] = value if default is None else _coerce(f"{name}.{key}", default, value)
    section = cls(**kwargs)
    section.validate()
    return section


def _to_run_config(tree: dict, preset: Optional[str]) -> RunConfig:
    top_level = {"seed", "out", "preset"}
    unknown = set(tree) - set(SECTIONS) - top_level
    if unknown:
        raise ConfigError(f"알 수 없는 설정 키: {sorted(unknown)}")
    kwargs = {name: _build_section(name, cls, tree.get(name, {})) for name, cls in SECTIONS.items()}
    seed = _coerce("seed", 0, tree.get("seed", 0))
    out = str(tree.get("out", "runs"))
    return RunConfig(preset=preset, seed=seed, out=out, **kwargs)
