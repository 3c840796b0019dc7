"""Spectral sensitivity analysis over an ensemble of simulations.

Each factor is oscillated sinusoidally around its base value across the run
index, at its own integer frequency. The residual of every output sample
(run minus the unperturbed run 0) is Fourier transformed along the run
axis, and the power found at a factor's frequency and its harmonics is that
factor's share of the residual variance.
"""

from __future__ import annotations

import copy
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
import yaml

from .building import BuildingModel
from .thermal import simulate
from .weather import CHANNELS, WeatherSeries


class ConfigurationError(ValueError):
    pass


class CapacityError(ConfigurationError):
    def __init__(self, message: str, min_runs: int):
        super().__init__(message)
        self.min_runs = min_runs


@dataclass
class FactorSpec:
    name: str
    # "weather.<channel>" or a path into the building document
    target: str
    amplitude: float = 0.10
    frequency: int | None = None
    base: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.amplitude < 1.0:
            raise ConfigurationError(f"{self.name}: amplitude must lie in [0, 1)")

    @property
    def is_weather(self) -> bool:
        return self.target.startswith("weather.")

    def multiplier(self, k, n_runs: int):
        return 1.0 + self.amplitude * np.sin(2 * np.pi * self.frequency * np.asarray(k) / n_runs)


# ---------------------------------------------------------------------------
# frequencies


def _collides(f: int, chosen: Sequence[int], order: int) -> bool:
    return any(p * f == q * g for g in chosen
               for p in range(1, order + 1) for q in range(1, order + 1))


def _greedy(n_factors: int, order: int) -> list[int]:
    out: list[int] = []
    f = 0
    while len(out) < n_factors:
        f += 1
        if not _collides(f, out, order):
            out.append(f)
    return out


def assign_frequencies(n_factors: int, n_runs: int, order: int = 2) -> list[int]:
    """Smallest integers free of harmonic collisions up to ``order``.

    No ``p*f_i == q*f_j`` for ``i != j`` and ``p, q <= order``, and every
    harmonic stays below Nyquist (``order * f < n_runs / 2``).
    """
    if n_factors < 1 or order < 1:
        raise ConfigurationError("n_factors and order must be >= 1")
    freqs = _greedy(n_factors, order)
    need = 2 * order * max(freqs) + 1
    if n_runs < need:
        raise CapacityError(
            f"{n_factors} factors at order {order} need n_runs >= {need} (got {n_runs})", need)
    return freqs


def _with_frequencies(factors: Sequence[FactorSpec], n_runs: int, order: int) -> list[FactorSpec]:
    if all(f.frequency is not None for f in factors):
        freqs = [f.frequency for f in factors]
        if len(set(freqs)) != len(freqs) or min(freqs) < 1:
            raise ConfigurationError("factor frequencies must be distinct positive integers")
        if order * max(freqs) >= n_runs / 2:
            raise CapacityError("a factor harmonic reaches Nyquist", 2 * order * max(freqs) + 1)
        return list(factors)
    freqs = assign_frequencies(len(factors), n_runs, order)
    return [replace(f, frequency=q) for f, q in zip(factors, freqs)]


# ---------------------------------------------------------------------------
# ensemble


def design_matrix(factors: Sequence[FactorSpec], n_runs: int) -> np.ndarray:
    """Multipliers per run and factor, shape (n_runs, n_factors)."""
    k = np.arange(n_runs)
    return np.column_stack([f.multiplier(k, n_runs) for f in factors])


def ensemble(evaluate: Callable[[np.ndarray], np.ndarray], factors: Sequence[FactorSpec],
             n_runs: int = 1024, order: int = 2, workers: int = 1) -> tuple[np.ndarray, list[FactorSpec]]:
    """Evaluate ``evaluate(multipliers)`` for every run; returns (runs x outputs, factors).

    ``evaluate`` must be picklable when ``workers > 1``.
    """
    factors = _with_frequencies(factors, n_runs, order)
    X = design_matrix(factors, n_runs)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(evaluate, X, chunksize=max(1, n_runs // (4 * workers))))
    else:
        rows = [evaluate(x) for x in X]
    return np.array([np.atleast_1d(r) for r in rows], dtype=float), factors


_TOKEN = re.compile(r"^(?P<key>[^\[\]]+)(\[(?P<fk>[^=\]]+)=(?P<fv>[^\]]+)\])?$")


def resolve_path(doc, path: str) -> list[tuple[object, object]]:
    """(container, key) pairs addressed by a dotted path.

    ``*`` matches every element of a list or mapping; ``name[key=value]``
    keeps only list elements whose ``key`` equals ``value``.
    """
    nodes = [doc]
    parts = path.split(".")
    slots: list[tuple[object, object]] = []
    for i, token in enumerate(parts):
        m = _TOKEN.match(token)
        if not m:
            raise ConfigurationError(f"bad path token '{token}' in '{path}'")
        key, fk, fv = m.group("key"), m.group("fk"), m.group("fv")
        last = i == len(parts) - 1 and fk is None
        nxt, slots = [], []
        for node in nodes:
            if key == "*":
                items = list(node.items()) if isinstance(node, dict) else list(enumerate(node)) \
                    if isinstance(node, list) else []
            elif isinstance(node, dict) and key in node:
                items = [(key, node[key])]
            else:
                items = []
            for k, child in items:
                if fk is not None:
                    if isinstance(child, list):
                        nxt.extend(c for c in child if isinstance(c, dict) and str(c.get(fk)) == fv)
                elif last:
                    slots.append((node, k))
                else:
                    nxt.append(child)
        nodes = nxt
    if parts and _TOKEN.match(parts[-1]).group("fk") is not None:
        raise ConfigurationError(f"path '{path}' must end at a value, not a filter")
    return slots


def _check_targets(model: BuildingModel, weather: WeatherSeries, factors: Sequence[FactorSpec]) -> list[FactorSpec]:
    doc = model.to_dict()
    out = []
    for f in factors:
        if f.is_weather:
            ch = f.target.split(".", 1)[1]
            if ch not in CHANNELS:
                raise ConfigurationError(f"{f.name}: unknown weather channel '{ch}'")
            base = float(np.mean(weather.channel(ch)))
        else:
            slots = resolve_path(doc, f.target)
            if not slots:
                raise ConfigurationError(f"{f.name}: path '{f.target}' matches nothing in the model")
            vals = [c[k] for c, k in slots]
            if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals):
                raise ConfigurationError(f"{f.name}: path '{f.target}' does not address numbers")
            base = float(vals[0])
        out.append(f if f.base is not None else replace(f, base=base))
    return out


@dataclass
class BuildingEvaluator:
    """Picklable run function: scale the model and weather, return one zone's temperature."""

    doc: dict
    weather: WeatherSeries
    factors: list[FactorSpec]
    zone: str

    def model_for(self, multipliers) -> BuildingModel:
        doc = copy.deepcopy(self.doc)
        for f, m in zip(self.factors, multipliers):
            if not f.is_weather:
                for container, key in resolve_path(doc, f.target):
                    container[key] = container[key] * float(m)
        return BuildingModel.from_dict(doc)

    def weather_for(self, multipliers) -> WeatherSeries:
        w = self.weather
        for f, m in zip(self.factors, multipliers):
            if f.is_weather:
                w = w.scaled(f.target.split(".", 1)[1], float(m))
        return w

    def __call__(self, multipliers) -> np.ndarray:
        res = simulate(self.model_for(multipliers), self.weather_for(multipliers))
        return res.zone_temperature[self.zone]


def run_ensemble(model: BuildingModel, weather: WeatherSeries, factors: Sequence[FactorSpec],
                 n_runs: int = 1024, order: int = 2, zone: str | None = None,
                 workers: int = 1) -> tuple[np.ndarray, list[FactorSpec]]:
    """Zone temperature for every run, shape (n_runs, len(weather))."""
    zone = zone or model.zones[0].name
    if zone not in model.zone_names():
        raise ConfigurationError(f"unknown output zone '{zone}'")
    factors = _check_targets(model, weather, factors)
    factors = _with_frequencies(factors, n_runs, order)
    evaluator = BuildingEvaluator(model.to_dict(), weather, factors, zone)
    return ensemble(evaluator, factors, n_runs, order, workers)


# ---------------------------------------------------------------------------
# attribution


@dataclass
class SensitivityResult:
    names: list[str]
    frequencies: list[int]
    shares: np.ndarray  # (factors,)
    shares_per_time: np.ndarray  # (time, factors)
    variance: np.ndarray  # (time,) residual variance, K^2
    n_runs: int
    order: int
    parseval_error: float = field(default=0.0)

    @property
    def unattributed(self) -> float:
        return float(1.0 - self.shares.sum())

    def ranking(self) -> list[tuple[str, float]]:
        idx = np.argsort(-self.shares, kind="stable")
        return [(self.names[i], float(self.shares[i])) for i in idx]


def attribute_variance(outputs: np.ndarray, factors: Sequence[FactorSpec], order: int = 2) -> SensitivityResult:
    Y = np.asarray(outputs, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    n_runs = Y.shape[0]
    freqs = [f.frequency for f in factors]
    if any(q is None for q in freqs):
        raise ConfigurationError("factors need assigned frequencies")
    if n_runs < 2 or order * max(freqs) >= n_runs / 2:
        raise ConfigurationError(f"{n_runs} runs cannot resolve harmonics up to {order * max(freqs)}")

    R = Y - Y[0]
    X = np.fft.fft(R, axis=0) / n_runs
    power = np.abs(X) ** 2
    variance = R.var(axis=0)
    spectral_total = power[1:].sum(axis=0)
    scale = np.maximum(np.abs(variance), 1e-300)
    parseval = float(np.max(np.abs(spectral_total - variance) / scale)) if np.any(variance > 0) else 0.0

    attributed = np.zeros((Y.shape[1], len(factors)))
    for j, f in enumerate(freqs):
        for p in range(1, order + 1):
            attributed[:, j] += power[p * f] + power[n_runs - p * f]
    with np.errstate(invalid="ignore", divide="ignore"):
        per_time = np.where(variance[:, None] > 0, attributed / variance[:, None], 0.0)
    total = variance.sum()
    shares = attributed.sum(axis=0) / total if total > 0 else np.zeros(len(factors))
    return SensitivityResult([f.name for f in factors], freqs, shares, per_time, variance,
                             n_runs, order, parseval)


def load_factors(path, amplitude: float | None = None) -> list[FactorSpec]:
    """Factor list from YAML; ``amplitude`` fills entries that do not set one."""
    with open(path) as fh:
        doc = yaml.safe_load(fh) or {}
    items = doc.get("factors", doc) if isinstance(doc, dict) else doc
    if not isinstance(items, list):
        raise ConfigurationError("factor file must hold a list under 'factors'")
    out = []
    for i, item in enumerate(items):
        try:
            if amplitude is not None and "amplitude" not in item:
                item = {**item, "amplitude": amplitude}
            out.append(FactorSpec(**item))
        except TypeError as exc:
            raise ConfigurationError(f"factors[{i}]: {exc}") from None
    return out
