"""Building description: zones, layered walls, windows and their shade assemblies.

The on-disk form is a YAML document mirroring these dataclasses. Angles are
kept in degrees (``*_deg`` fields) so documents round-trip exactly; the
radian properties are what the physics uses. An unbounded shade extent is
written as the literal token ``inf``.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .geometry import Fin, GeometryError, LowWall, ShadeAssembly, TopFlap, window_rect

EXTERIOR = "exterior"
ADIABATIC = "adiabatic"
AIR_RHO_CP = 1.2 * 1005.0


class ModelError(ValueError):
    """Invalid building description; ``path`` locates the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class _Oriented:
    @property
    def tilt(self) -> float:
        return math.radians(self.tilt_deg)

    @property
    def azimuth(self) -> float:
        return math.radians(self.azimuth_deg)


@dataclass
class Site:
    latitude_deg: float = -21.0
    longitude_deg: float = 55.0
    utc_offset_h: float = 4.0
    albedo: float = 0.2

    @property
    def latitude(self) -> float:
        return math.radians(self.latitude_deg)

    @property
    def longitude(self) -> float:
        return math.radians(self.longitude_deg)


@dataclass
class Material:
    conductivity: float
    density: float
    specific_heat: float


@dataclass
class Layer:
    material: str
    thickness: float


@dataclass
class Zone:
    name: str
    volume: float
    # J/K; defaults to the air volume's heat capacity
    capacitance: float | None = None
    # wall whose inside face receives the floor share of transmitted solar
    floor: str | None = None

    @property
    def air_capacitance(self) -> float:
        return self.capacitance if self.capacitance is not None else AIR_RHO_CP * self.volume


@dataclass
class Wall(_Oriented):
    name: str
    layers: list[Layer]
    area: float
    # (inside, outside): zone names, "exterior" or "adiabatic"; layers run inside -> outside
    sides: tuple[str, str]
    # outward normal of the outside face: tilt from horizontal, azimuth from south (west +)
    tilt_deg: float = 90.0
    azimuth_deg: float = 0.0
    absorptance: float = 0.6


@dataclass
class Window(_Oriented):
    name: str
    zone: str
    width: float
    height: float
    transmittance: float = 0.85
    tilt_deg: float = 90.0
    azimuth_deg: float = 0.0
    u_value: float = 5.8
    # element name -> TopFlap / Fin / LowWall
    shade: dict = field(default_factory=dict)
    # constant diffuse reduction; None means derive it from the shade geometry
    diffuse_reduction: float | None = None

    @property
    def area(self) -> float:
        return self.width * self.height

    def shade_assembly(self) -> ShadeAssembly:
        rect = window_rect(self.width, self.height, self.tilt, self.azimuth)
        return ShadeAssembly(rect, **self.shade)


@dataclass
class ThermalSettings:
    h_in: float = 8.0
    h_out: float = 17.0
    h_sky: float = 5.0
    floor_solar_fraction: float = 0.6
    subdivisions: int = 1
    warmup_tol: float = 0.01
    max_warmup_days: int = 1000


@dataclass
class BuildingModel:
    name: str
    zones: list[Zone]
    walls: list[Wall]
    windows: list[Window]
    materials: dict[str, Material]
    site: Site = field(default_factory=Site)
    settings: ThermalSettings = field(default_factory=ThermalSettings)

    def __post_init__(self):
        self.validate()

    def zone_index(self, name: str) -> int:
        return [z.name for z in self.zones].index(name)

    def zone_names(self) -> list[str]:
        return [z.name for z in self.zones]

    def validate(self) -> None:
        names = self.zone_names()
        if not names:
            raise ModelError("zones", "at least one zone is required")
        if len(set(names)) != len(names):
            raise ModelError("zones", "zone names must be unique")
        for z in (EXTERIOR, ADIABATIC):
            if z in names:
                raise ModelError("zones", f"'{z}' is reserved")
        for i, z in enumerate(self.zones):
            _positive(f"zones[{i}].volume", z.volume)
            if z.capacitance is not None:
                _positive(f"zones[{i}].capacitance", z.capacitance)
        for name, m in self.materials.items():
            for attr in ("conductivity", "density", "specific_heat"):
                _positive(f"materials.{name}.{attr}", getattr(m, attr))
        wall_names = [w.name for w in self.walls]
        for i, w in enumerate(self.walls):
            p = f"walls[{i}]"
            _positive(f"{p}.area", w.area)
            _unit(f"{p}.absorptance", w.absorptance)
            if not w.layers:
                raise ModelError(f"{p}.layers", "at least one layer is required")
            for j, layer in enumerate(w.layers):
                if layer.material not in self.materials:
                    raise ModelError(f"{p}.layers[{j}].material", f"unknown material '{layer.material}'")
                _positive(f"{p}.layers[{j}].thickness", layer.thickness)
            if len(w.sides) != 2:
                raise ModelError(f"{p}.sides", "exactly two sides are required")
            for k, side in enumerate(w.sides):
                if side not in names and side not in (EXTERIOR, ADIABATIC):
                    raise ModelError(f"{p}.sides[{k}]", f"wall '{w.name}' references unknown zone '{side}'")
            if w.sides[0] not in names:
                raise ModelError(f"{p}.sides[0]", "inside face must belong to a zone")
        for i, z in enumerate(self.zones):
            if z.floor is None:
                continue
            if z.floor not in wall_names:
                raise ModelError(f"zones[{i}].floor", f"unknown wall '{z.floor}'")
            if self.walls[wall_names.index(z.floor)].sides[0] != z.name:
                raise ModelError(f"zones[{i}].floor", "floor wall must face the zone on its inside")
        for i, w in enumerate(self.windows):
            p = f"windows[{i}]"
            if w.zone not in names:
                raise ModelError(f"{p}.zone", f"window '{w.name}' references unknown zone '{w.zone}'")
            _positive(f"{p}.width", w.width)
            _positive(f"{p}.height", w.height)
            _positive(f"{p}.u_value", w.u_value)
            _unit(f"{p}.transmittance", w.transmittance)
            if w.diffuse_reduction is not None:
                _unit(f"{p}.diffuse_reduction", w.diffuse_reduction)
            try:
                w.shade_assembly()
            except (GeometryError, TypeError) as exc:
                raise ModelError(f"{p}.shade", str(exc)) from None
        s = self.settings
        for attr in ("h_in", "h_out", "warmup_tol"):
            _positive(f"settings.{attr}", getattr(s, attr))
        if s.h_sky < 0:
            raise ModelError("settings.h_sky", "must be >= 0")
        _unit("settings.floor_solar_fraction", s.floor_solar_fraction)
        if int(s.subdivisions) < 1:
            raise ModelError("settings.subdivisions", "must be >= 1")
        _unit("site.albedo", self.site.albedo)

    # -- document form -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "site": dict(vars(self.site)),
            "settings": dict(vars(self.settings)),
            "materials": {k: dict(vars(m)) for k, m in self.materials.items()},
            "zones": [_drop_none({"name": z.name, "volume": z.volume,
                                  "capacitance": z.capacitance, "floor": z.floor})
                      for z in self.zones],
            "walls": [{
                "name": w.name,
                "sides": list(w.sides),
                "area": w.area,
                "tilt_deg": w.tilt_deg,
                "azimuth_deg": w.azimuth_deg,
                "absorptance": w.absorptance,
                "layers": [{"material": l.material, "thickness": l.thickness} for l in w.layers],
            } for w in self.walls],
            "windows": [_drop_none({
                "name": w.name,
                "zone": w.zone,
                "width": w.width,
                "height": w.height,
                "transmittance": w.transmittance,
                "u_value": w.u_value,
                "tilt_deg": w.tilt_deg,
                "azimuth_deg": w.azimuth_deg,
                "diffuse_reduction": w.diffuse_reduction,
                "shade": shade_to_dict(w.shade),
            }) for w in self.windows],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "BuildingModel":
        if not isinstance(doc, dict):
            raise ModelError("<root>", "building document must be a mapping")
        try:
            site = Site(**{k: float(v) for k, v in (doc.get("site") or {}).items()})
            settings = ThermalSettings(**(doc.get("settings") or {}))
            materials = {k: Material(**{a: float(x) for a, x in v.items()})
                         for k, v in (doc.get("materials") or {}).items()}
        except TypeError as exc:
            raise ModelError("<root>", str(exc)) from None
        zones = [_build(f"zones[{i}]", Zone, z) for i, z in enumerate(_list(doc, "zones"))]
        walls = []
        for i, w in enumerate(_list(doc, "walls")):
            w = dict(w)
            p = f"walls[{i}]"
            layers = [_build(f"{p}.layers[{j}]", Layer, l) for j, l in enumerate(w.pop("layers", []))]
            w["sides"] = tuple(w.get("sides", ()))
            walls.append(_build(p, Wall, w, layers=layers))
        windows = []
        for i, w in enumerate(_list(doc, "windows")):
            w = dict(w)
            p = f"windows[{i}]"
            shade = shade_from_dict(w.pop("shade", None) or {}, f"{p}.shade")
            windows.append(_build(p, Window, w, shade=shade))
        return cls(name=str(doc.get("name", "building")), zones=zones, walls=walls,
                   windows=windows, materials=materials, site=site, settings=settings)

    def copy(self) -> "BuildingModel":
        return copy.deepcopy(self)


_ELEMENT_TYPES = {"top_flap": TopFlap, "low_wall": LowWall, "left_fin": Fin, "right_fin": Fin}


def _inf_in(x):
    if isinstance(x, str) and x.strip().lower() in ("inf", "+inf", "infinity"):
        return math.inf
    return float(x)


def _inf_out(x: float):
    return "inf" if math.isinf(x) else x


def shade_from_dict(doc: dict, path: str = "shade") -> dict:
    out = {}
    for name, el in doc.items():
        where = f"{path}.{name}" if path else name
        if name not in _ELEMENT_TYPES:
            raise ModelError(where, "unknown shade element")
        if el is None:
            continue
        try:
            out[name] = _ELEMENT_TYPES[name](**{k: _inf_in(v) for k, v in el.items()})
        except (TypeError, ValueError) as exc:
            raise ModelError(where, str(exc)) from None
    return out


def shade_to_dict(shade: dict) -> dict:
    return {name: {k: _inf_out(v) for k, v in vars(el).items()} for name, el in shade.items()}


def _drop_none(d: dict) -> dict:
    return {k: v for k, v in d.items() if v is not None}


def _list(doc: dict, key: str) -> list:
    val = doc.get(key) or []
    if not isinstance(val, list):
        raise ModelError(key, "must be a list")
    return val


def _build(path: str, cls, d, **extra):
    if not isinstance(d, dict):
        raise ModelError(path, "must be a mapping")
    try:
        return cls(**d, **extra)
    except TypeError as exc:
        raise ModelError(path, str(exc)) from None


def _positive(path: str, x) -> None:
    if not (isinstance(x, (int, float)) and x > 0 and math.isfinite(x)):
        raise ModelError(path, f"must be a positive number, got {x!r}")


def _unit(path: str, x) -> None:
    if not (isinstance(x, (int, float)) and 0 <= x <= 1):
        raise ModelError(path, f"must lie in [0, 1], got {x!r}")


def load_building(path) -> BuildingModel:
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    return BuildingModel.from_dict(doc)


def dump_building(model: BuildingModel) -> str:
    return yaml.safe_dump(model.to_dict(), sort_keys=False)


def save_building(model: BuildingModel, path) -> None:
    Path(path).write_text(dump_building(model))


def shade_from_document(doc: dict) -> ShadeAssembly:
    """Stand-alone shade file: a ``window`` block plus element blocks."""
    if not isinstance(doc, dict) or "window" not in doc:
        raise ModelError("window", "shade document needs a 'window' block")
    w = dict(doc["window"])
    for key in ("width", "height"):
        if key not in w:
            raise ModelError(f"window.{key}", "missing")
        _positive(f"window.{key}", w[key])
    elements = shade_from_dict({k: v for k, v in doc.items() if k != "window"}, "")
    try:
        rect = window_rect(w["width"], w["height"], math.radians(w.get("tilt_deg", 90.0)),
                           math.radians(w.get("azimuth_deg", 0.0)))
        return ShadeAssembly(rect, **elements)
    except GeometryError as exc:
        raise ModelError("shade", str(exc)) from None


def load_shade(path) -> ShadeAssembly:
    with open(path) as fh:
        return shade_from_document(yaml.safe_load(fh))
