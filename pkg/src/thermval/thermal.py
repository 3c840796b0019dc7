"""Nodal (RC network) multi-zone thermal model with solar gains.

Every wall is meshed into slabs with a node at each slab boundary, so a
wall with ``m`` layers and ``s`` subdivisions contributes ``m*s + 1``
capacitive nodes, the two end nodes being its surfaces. Each zone adds one
air node. Time integration is backward Euler with a factorised system
matrix.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg
from scipy.sparse.csgraph import connected_components

from .building import ADIABATIC, EXTERIOR, BuildingModel, ModelError
from .geometry import ShadeAssembly, diffuse_blocked_fraction, sunlit_fraction
from .solar import (incidence_angle, solar_position, split_beam, tilt_irradiance_isotropic,
                    window_gain)
from .weather import WeatherSeries

log = logging.getLogger(__name__)


@dataclass
class NodalSystem:
    capacitance: np.ndarray  # (n,) J/K
    conductance: np.ndarray  # (n, n) W/K, includes boundary couplings on the diagonal
    boundary: np.ndarray  # (n, 2) W/K towards (outdoor air, sky)
    labels: list[str]
    zone_nodes: dict[str, int]
    wall_nodes: dict[str, list[int]]
    # (wall name, outside node, absorptance * area) for sunlit exterior faces
    wall_solar: list[tuple[str, int, float]] = field(default_factory=list)
    # window name -> (air node, floor node or None, floor fraction)
    window_nodes: dict[str, tuple[int, int | None, float]] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.capacitance)

    def sources(self, t_out, t_sky, gains) -> np.ndarray:
        """Right-hand side vector(s): boundary couplings plus direct heat input (W)."""
        tb = np.stack([np.asarray(t_out, float), np.asarray(t_sky, float)], axis=-1)
        return tb @ self.boundary.T + gains


def node_count(model: BuildingModel) -> int:
    s = int(model.settings.subdivisions)
    return len(model.zones) + sum(len(w.layers) * s + 1 for w in model.walls)


def build_network(model: BuildingModel) -> NodalSystem:
    st = model.settings
    sub = int(st.subdivisions)
    n = node_count(model)
    C = np.zeros(n)
    G = np.zeros((n, n))
    B = np.zeros((n, 2))
    labels: list[str] = []

    def couple(i, j, g):
        G[i, i] += g
        G[j, j] += g
        G[i, j] -= g
        G[j, i] -= g

    def to_boundary(i, g_air, g_sky=0.0):
        G[i, i] += g_air + g_sky
        B[i, 0] += g_air
        B[i, 1] += g_sky

    zone_nodes = {}
    for z in model.zones:
        zone_nodes[z.name] = len(labels)
        C[len(labels)] = z.air_capacitance
        labels.append(f"air:{z.name}")

    wall_nodes, wall_solar = {}, []
    for w in model.walls:
        first = len(labels)
        k = first
        for layer in w.layers:
            mat = model.materials[layer.material]
            dx = layer.thickness / sub
            g = mat.conductivity * w.area / dx
            c = mat.density * mat.specific_heat * dx * w.area
            for _ in range(sub):
                C[k] += c / 2
                C[k + 1] += c / 2
                couple(k, k + 1, g)
                k += 1
        idx = list(range(first, k + 1))
        labels.extend(f"wall:{w.name}:{i}" for i in range(len(idx)))
        wall_nodes[w.name] = idx
        for node, side in ((idx[0], w.sides[0]), (idx[-1], w.sides[1])):
            if side == EXTERIOR:
                to_boundary(node, st.h_out * w.area, st.h_sky * w.area)
            elif side != ADIABATIC:
                couple(node, zone_nodes[side], st.h_in * w.area)
        if w.sides[1] == EXTERIOR:
            wall_solar.append((w.name, idx[-1], w.absorptance * w.area))

    floors = {z.name: wall_nodes[z.floor][0] for z in model.zones if z.floor}
    window_nodes = {}
    for win in model.windows:
        air = zone_nodes[win.zone]
        to_boundary(air, win.u_value * win.area)
        floor = floors.get(win.zone)
        window_nodes[win.name] = (air, floor, st.floor_solar_fraction if floor is not None else 0.0)

    system = NodalSystem(C, G, B, labels, zone_nodes, wall_nodes, wall_solar, window_nodes)
    _check_connected(system, model)
    return system


def _check_connected(system: NodalSystem, model: BuildingModel) -> None:
    adj = (np.abs(system.conductance) > 0).astype(int)
    np.fill_diagonal(adj, 0)
    _, comp = connected_components(adj, directed=False)
    anchored = set(comp[np.abs(system.boundary).sum(axis=1) > 0])
    for name, i in system.zone_nodes.items():
        if comp[i] not in anchored:
            raise ModelError(f"zones[{model.zone_index(name)}]",
                             f"zone '{name}' has no thermal path to any boundary")


class Stepper:
    """Backward-Euler integrator with the system matrix factorised once."""

    def __init__(self, system: NodalSystem, dt: float):
        if not dt > 0:
            raise ValueError("dt must be positive")
        self.system = system
        self.dt = dt
        self.c_dt = system.capacitance / dt
        A = system.conductance + np.diag(self.c_dt)
        try:
            self.lu = scipy.linalg.lu_factor(A, check_finite=True)
        except (scipy.linalg.LinAlgError, ValueError) as exc:
            raise ModelError("<network>", f"singular system matrix ({exc})") from None
        if not np.all(np.isfinite(self.lu[0])) or np.any(np.diag(self.lu[0]) == 0):
            raise ModelError("<network>", "singular system matrix")

    def __call__(self, state: np.ndarray, source: np.ndarray) -> np.ndarray:
        return scipy.linalg.lu_solve(self.lu, self.c_dt * state + source, check_finite=False)

    def run(self, state: np.ndarray, sources: np.ndarray) -> np.ndarray:
        """States after each row of ``sources``; shape (len(sources), n)."""
        out = np.empty((len(sources), self.system.n))
        for i, s in enumerate(sources):
            state = self(state, s)
            out[i] = state
        return out

    def transition(self, steps: int) -> np.ndarray:
        """Matrix mapping a state to the state ``steps`` unforced steps later."""
        M = scipy.linalg.lu_solve(self.lu, np.diag(self.c_dt), check_finite=False)
        return np.linalg.matrix_power(M, steps)


def step(system: NodalSystem, state, t_out: float, t_sky: float, gains, dt: float) -> np.ndarray:
    """One backward-Euler step: (C/dt + G) T+ = (C/dt) T + S."""
    return Stepper(system, dt)(np.asarray(state, float), system.sources(t_out, t_sky, gains))


@dataclass
class SimulationResult:
    time: np.ndarray
    zone_temperature: dict[str, np.ndarray]
    # W/m2 on the glass after shading
    window_exterior_flux: dict[str, np.ndarray]
    # W/m2 on the glass with no shading
    window_incident_flux: dict[str, np.ndarray]
    # W/m2 of glass transmitted into the zone
    window_transmitted_flux: dict[str, np.ndarray]
    window_transmitted_power: dict[str, np.ndarray]
    window_blocked: dict[str, float]
    flags: dict[str, np.ndarray]
    node_temperature: np.ndarray
    warmup_days: int = 0


@lru_cache(maxsize=256)
def _blocked(shade: ShadeAssembly) -> float:
    return diffuse_blocked_fraction(shade)


@lru_cache(maxsize=256)
def _sunlit_cached(shade: ShadeAssembly, dirs_key: bytes) -> np.ndarray:
    dirs = np.frombuffer(dirs_key).reshape(-1, 3)
    out = np.array([sunlit_fraction(shade, d) if d[2] > 0 else 0.0 for d in dirs])
    out.setflags(write=False)
    return out


def _sunlit_series(shade: ShadeAssembly, sun_dirs: np.ndarray) -> np.ndarray:
    if not shade.elements():
        n = shade.frame[2]
        return np.where((sun_dirs @ n > 1e-12) & (sun_dirs[:, 2] > 0), 1.0, 0.0)
    return _sunlit_cached(shade, np.ascontiguousarray(sun_dirs, dtype=float).tobytes())


@dataclass
class SolarLoads:
    gains: np.ndarray  # (T, n) W into nodes
    exterior: dict[str, np.ndarray]
    incident: dict[str, np.ndarray]
    transmitted: dict[str, np.ndarray]
    power: dict[str, np.ndarray]
    blocked: dict[str, float]
    flags: dict[str, np.ndarray]


def solar_loads(model: BuildingModel, system: NodalSystem, weather: WeatherSeries) -> SolarLoads:
    site = model.site
    pos = solar_position(site.latitude, site.longitude, weather.time, site.utc_offset_h)
    beam_n, flags = split_beam(weather.global_h, weather.diffuse_h, pos.elevation)
    flags["inconsistent"] = flags["inconsistent"] | weather.flags
    dirs = pos.direction()
    gains = np.zeros((len(weather), system.n))

    def components(tilt, azimuth):
        inc = incidence_angle(pos, tilt, azimuth)
        return tilt_irradiance_isotropic(beam_n, weather.diffuse_h, weather.global_h,
                                         site.albedo, tilt, inc)

    walls = {w.name: w for w in model.walls}
    for name, node, alpha_area in system.wall_solar:
        w = walls[name]
        gains[:, node] += alpha_area * components(w.tilt, w.azimuth).total

    exterior, incident, transmitted, power, blocked = {}, {}, {}, {}, {}
    for win in model.windows:
        comps = components(win.tilt, win.azimuth)
        shade = win.shade_assembly()
        f = win.diffuse_reduction if win.diffuse_reduction is not None else _blocked(shade)
        sunlit = _sunlit_series(shade, dirs)
        ext, p = window_gain(comps, sunlit, f, win.transmittance, win.area)
        air, floor, frac = system.window_nodes[win.name]
        gains[:, air] += (1.0 - frac) * p
        if floor is not None:
            gains[:, floor] += frac * p
        exterior[win.name] = ext
        incident[win.name] = comps.total
        transmitted[win.name] = win.transmittance * ext
        power[win.name] = p
        blocked[win.name] = f
    return SolarLoads(gains, exterior, incident, transmitted, power, blocked, flags)


def simulate(model: BuildingModel, weather: WeatherSeries, warmup: bool = True) -> SimulationResult:
    """Run the model over ``weather``; temperatures are reported at each record."""
    dt = weather.step
    system = build_network(model)
    loads = solar_loads(model, system, weather)
    if np.any(loads.flags["inconsistent"]):
        log.warning("%d inconsistent weather records (diffuse > global); beam set to 0",
                    int(loads.flags["inconsistent"].sum()))
    S = system.sources(weather.t_out, weather.t_sky, loads.gains)
    stepper = Stepper(system, dt)
    state = np.full(system.n, float(weather.t_out[0]))
    days = 0
    if warmup:
        state, days = _warm_up(stepper, S, state, model.settings)
    states = stepper.run(state, S)
    temps = {name: states[:, i].copy() for name, i in system.zone_nodes.items()}
    return SimulationResult(
        time=weather.time.copy(), zone_temperature=temps,
        window_exterior_flux=loads.exterior, window_incident_flux=loads.incident,
        window_transmitted_flux=loads.transmitted, window_transmitted_power=loads.power,
        window_blocked=loads.blocked, flags=loads.flags, node_temperature=states,
        warmup_days=days,
    )


def _warm_up(stepper: Stepper, S: np.ndarray, state: np.ndarray, settings) -> tuple[np.ndarray, int]:
    """Repeat the first day until no node moves more than ``warmup_tol`` between repeats.

    A repeat is affine in the starting state, so each one is applied as a
    single matrix-vector product.
    """
    per_day = min(int(round(86400.0 / stepper.dt)), len(S))
    day = S[:per_day]
    P = stepper.transition(per_day)
    r = stepper.run(np.zeros(stepper.system.n), day)[-1]
    for k in range(1, int(settings.max_warmup_days) + 1):
        new = P @ state + r
        if np.max(np.abs(new - state)) < settings.warmup_tol:
            return new, k
        state = new
    raise ModelError("settings.max_warmup_days", "warm-up did not converge")
