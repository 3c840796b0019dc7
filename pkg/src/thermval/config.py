"""Run configuration file and bundled demo data lookup."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path

import yaml

DEMO_FILES = {
    "demo_building": "demo_building.yaml",
    "demo_weather": "demo_weather.csv",
    "demo_shade": "demo_shade.yaml",
    "demo_factors": "demo_factors.yaml",
}


class ConfigError(ValueError):
    pass


def data_path(name: str) -> Path:
    """Path of a bundled data file, by file name or demo alias."""
    fname = DEMO_FILES.get(name, name)
    p = resources.files("thermval") / "data" / fname
    if not p.is_file():
        raise ConfigError(f"no bundled data file '{name}'")
    return Path(str(p))


def resolve_input(value: str | Path, base: Path | None = None) -> Path:
    """Demo alias, or a path (relative to ``base`` when given) that must exist."""
    if isinstance(value, str) and value in DEMO_FILES:
        return data_path(value)
    p = Path(value)
    if base is not None and not p.is_absolute():
        p = base / p
    if not p.is_file():
        raise ConfigError(f"file not found: {p}")
    return p


@dataclass
class SiteConfig:
    latitude_deg: float | None = None
    longitude_deg: float | None = None
    albedo: float | None = None


@dataclass
class SensitivityConfig:
    n_runs: int = 1024
    amplitude: float = 0.10
    order: int = 2
    workers: int = 1
    zone: str | None = None


@dataclass
class DspConfig:
    cutoff: float = 0.02
    filter_order: int = 4
    window_len: int = 48
    overlap: float = 0.75
    n_shifts: int = 199


@dataclass
class AcceptanceConfig:
    band: float = 0.5
    mode: str = "threshold"
    threshold: float = 0.95


@dataclass
class RunConfig:
    site: SiteConfig = field(default_factory=SiteConfig)
    # building, weather, factors, shade, measured, predicted
    paths: dict[str, Path] = field(default_factory=dict)
    sensitivity: SensitivityConfig = field(default_factory=SensitivityConfig)
    dsp: DspConfig = field(default_factory=DspConfig)
    acceptance: AcceptanceConfig = field(default_factory=AcceptanceConfig)
    seed: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["paths"] = {k: str(v) for k, v in self.paths.items()}
        return d


_SECTIONS = {"site": SiteConfig, "sensitivity": SensitivityConfig, "dsp": DspConfig,
             "acceptance": AcceptanceConfig}


def _section(name: str, cls, doc) -> object:
    if doc is None:
        return cls()
    if not isinstance(doc, dict):
        raise ConfigError(f"{name}: must be a mapping")
    known = {f.name for f in fields(cls)}
    extra = set(doc) - known
    if extra:
        raise ConfigError(f"{name}: unknown key(s) {', '.join(sorted(extra))}")
    return cls(**doc)


def load_config(path) -> RunConfig:
    """Parse a YAML run configuration; every referenced file must exist."""
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text()) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping")
    extra = set(doc) - set(_SECTIONS) - {"paths", "seed"}
    if extra:
        raise ConfigError(f"unknown config section(s): {', '.join(sorted(extra))}")
    kw = {name: _section(name, cls, doc.get(name)) for name, cls in _SECTIONS.items()}
    paths = {k: resolve_input(v, path.parent) for k, v in (doc.get("paths") or {}).items()}
    if kw["acceptance"].mode not in ("strict", "threshold"):
        raise ConfigError("acceptance.mode must be 'strict' or 'threshold'")
    return RunConfig(paths=paths, seed=int(doc.get("seed", 0)), **kw)
