"""Synthetic-twin validation experiment.

A reference run of the building, with every window's diffuse reduction set
from a Monte Carlo estimate of its shade, plays the part of the
measurements. The model under test first ignores diffuse shading (f = 0)
and then uses the closed-form blocked fraction; the residuals of both are
reported and diagnosed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .building import BuildingModel
from .geometry import mc_blocked_fraction
from .thermal import SimulationResult, simulate
from .validation import Diagnosis, ResidualReport, diagnose, report, residual
from .weather import WeatherSeries, daily_diffuse_fraction

DIAGNOSED_CHANNELS = ("direct_h", "diffuse_h", "global_h", "t_out", "t_sky", "rh", "wind_speed")


def with_diffuse_reduction(model: BuildingModel, values: dict[str, float | None]) -> BuildingModel:
    doc = model.to_dict()
    for w in doc["windows"]:
        if w["name"] in values:
            w["diffuse_reduction"] = values[w["name"]]
    return BuildingModel.from_dict(doc)


def reference_fractions(model: BuildingModel, n_rays: int = 400_000, seed: int = 0) -> dict[str, float]:
    """Monte Carlo blocked fraction per window (0 for unshaded windows)."""
    out = {}
    for i, win in enumerate(model.windows):
        shade = win.shade_assembly()
        out[win.name] = mc_blocked_fraction(shade, n_rays, seed + i).value if shade.elements() else 0.0
    return out


@dataclass
class TwinResult:
    zone: str
    window: str
    reference_f: dict[str, float]
    measured: np.ndarray
    initial: SimulationResult
    improved: SimulationResult
    reference: SimulationResult
    initial_report: ResidualReport
    improved_report: ResidualReport
    diagnosis: Diagnosis
    # per day: predicted / measured transmitted solar through ``window`` minus 1
    daily_overestimate: np.ndarray
    daily_diffuse_fraction: np.ndarray

    @property
    def initial_residual(self) -> np.ndarray:
        return residual(self.measured, self.initial.zone_temperature[self.zone])

    @property
    def improved_residual(self) -> np.ndarray:
        return residual(self.measured, self.improved.zone_temperature[self.zone])

    def summary(self) -> str:
        lines = [f"zone {self.zone}, window {self.window}"]
        lines.append("day  diffuse fraction  flux overestimate (f = 0)")
        for d, (kd, ov) in enumerate(zip(self.daily_diffuse_fraction, self.daily_overestimate), 1):
            lines.append(f"{d:>3}  {kd:16.2f}  {100 * ov:+8.1f} %")
        lines.append(f"initial model:  mean {self.initial_report.mean:+.3f} K, "
                     f"std {self.initial_report.std:.3f} K, {self.initial_report.verdict}")
        lines.append(f"improved model: mean {self.improved_report.mean:+.3f} K, "
                     f"std {self.improved_report.std:.3f} K, {self.improved_report.verdict}")
        return "\n".join(lines)


def run_twin(model: BuildingModel, weather: WeatherSeries, zone: str = "living",
             window: str | None = None, noise: float = 0.1, seed: int = 0,
             n_rays: int = 400_000, band: float = 0.5, threshold: float = 0.95) -> TwinResult:
    window = window or next(w.name for w in model.windows if w.zone == zone)
    f_ref = reference_fractions(model, n_rays, seed)
    reference = simulate(with_diffuse_reduction(model, f_ref), weather)
    rng = np.random.default_rng(seed)
    measured = reference.zone_temperature[zone] + noise * rng.standard_normal(len(weather))

    initial = simulate(with_diffuse_reduction(model, {w.name: 0.0 for w in model.windows}), weather)
    improved = simulate(with_diffuse_reduction(model, {w.name: None for w in model.windows}), weather)

    r0 = residual(measured, initial.zone_temperature[zone])
    r1 = residual(measured, improved.zone_temperature[zone])
    inputs = {c: weather.channel(c) for c in DIAGNOSED_CHANNELS}
    diag = diagnose(r0, inputs, seed=seed)

    day = np.arange(len(weather)) // int(round(86400 / weather.step))
    pred = initial.window_transmitted_power[window]
    meas = reference.window_transmitted_power[window]
    over = np.array([pred[day == d].sum() / meas[day == d].sum() - 1.0
                     if meas[day == d].sum() > 0 else np.nan for d in range(day.max() + 1)])
    return TwinResult(zone, window, f_ref, measured, initial, improved, reference,
                      report(r0, band, "threshold", threshold), report(r1, band, "threshold", threshold),
                      diag, over, daily_diffuse_fraction(weather))
