"""Half-hourly weather records: CSV format, validation and a synthetic generator."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .building import Site
from .solar import solar_position

COLUMNS = ("timestamp", "t_out", "t_sky", "rh", "global_h", "diffuse_h", "wind_speed", "wind_dir")
STEP_SECONDS = 1800
# channels that sensitivity factors may scale; direct_h is global_h - diffuse_h
CHANNELS = ("t_out", "t_sky", "rh", "global_h", "diffuse_h", "direct_h", "wind_speed")


class WeatherFormatError(ValueError):
    pass


@dataclass
class WeatherSeries:
    time: np.ndarray  # datetime64[s], local civil time
    t_out: np.ndarray
    t_sky: np.ndarray
    rh: np.ndarray
    global_h: np.ndarray
    diffuse_h: np.ndarray
    wind_speed: np.ndarray
    wind_dir: np.ndarray
    flags: np.ndarray = field(default=None)

    def __post_init__(self):
        self.time = np.asarray(self.time, dtype="datetime64[s]")
        for name in COLUMNS[1:]:
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        n = len(self.time)
        if any(len(getattr(self, c)) != n for c in COLUMNS[1:]):
            raise WeatherFormatError("all channels must have the same length")
        if self.flags is None:
            self.flags = self.diffuse_h > self.global_h
        if n > 1:
            steps = np.diff(self.time).astype(int)
            if np.any(steps != steps[0]):
                raise WeatherFormatError("non-uniform time step")

    def __len__(self) -> int:
        return len(self.time)

    @property
    def step(self) -> float:
        if len(self) < 2:
            return float(STEP_SECONDS)
        return float((self.time[1] - self.time[0]).astype(int))

    @property
    def direct_h(self) -> np.ndarray:
        return np.maximum(self.global_h - self.diffuse_h, 0.0)

    @property
    def hours(self) -> np.ndarray:
        """Elapsed hours since the first record."""
        return (self.time - self.time[0]).astype(float) / 3600.0

    def channel(self, name: str) -> np.ndarray:
        if name not in CHANNELS:
            raise KeyError(f"unknown weather channel '{name}'")
        return getattr(self, name)

    def scaled(self, name: str, factor: float) -> "WeatherSeries":
        """Copy with one channel multiplied by ``factor``.

        Scaling ``direct_h`` or ``diffuse_h`` keeps the other component fixed
        and rebuilds ``global_h``.
        """
        if name == "direct_h":
            return replace(self, global_h=self.diffuse_h + factor * self.direct_h, flags=self.flags)
        if name == "diffuse_h":
            return replace(self, diffuse_h=factor * self.diffuse_h,
                           global_h=self.direct_h + factor * self.diffuse_h, flags=self.flags)
        return replace(self, **{name: factor * self.channel(name)}, flags=self.flags)

    def slice(self, start: int, stop: int) -> "WeatherSeries":
        kw = {c: getattr(self, c)[start:stop] for c in COLUMNS[1:]}
        return WeatherSeries(time=self.time[start:stop], flags=self.flags[start:stop], **kw)


def load_weather(path) -> WeatherSeries:
    """Parse a weather CSV; records with diffuse > global are flagged, not rejected."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise WeatherFormatError(f"{path}: empty file") from None
        missing = [c for c in COLUMNS if c not in header]
        if missing:
            raise WeatherFormatError(f"{path}: missing column(s): {', '.join(missing)}")
        idx = [header.index(c) for c in COLUMNS]
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                vals = [row[i].strip() for i in idx]
                rows.append((np.datetime64(vals[0], "s"), *map(float, vals[1:])))
            except (IndexError, ValueError) as exc:
                raise WeatherFormatError(f"{path}:{lineno}: malformed row ({exc})") from None
    if not rows:
        raise WeatherFormatError(f"{path}: no records")
    cols = list(zip(*rows))
    series = WeatherSeries(np.array(cols[0], dtype="datetime64[s]"), *map(np.array, cols[1:]))
    if np.any((series.rh < 0) | (series.rh > 100)):
        raise WeatherFormatError(f"{path}: relative humidity outside [0, 100]")
    if np.any((series.global_h < 0) | (series.diffuse_h < 0)):
        raise WeatherFormatError(f"{path}: negative irradiance")
    return series


def save_weather(series: WeatherSeries, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for i in range(len(series)):
            w.writerow([str(series.time[i])] + [_fmt(getattr(series, c)[i]) for c in COLUMNS[1:]])


def _fmt(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# synthetic weather

PROFILES = ("clear", "overcast", "mixed")
_KD_CLEAR = 0.2
_MIXED_TARGET = 0.4


def _clear_sky_global(elevation: np.ndarray) -> np.ndarray:
    """Haurwitz clear-sky global horizontal irradiance."""
    cz = np.sin(elevation)
    with np.errstate(divide="ignore", over="ignore"):
        g = 1098.0 * cz * np.exp(-0.057 / cz)
    return np.where(cz > 0, g, 0.0)


def _cloudiness(kd: np.ndarray) -> np.ndarray:
    return np.clip((kd - _KD_CLEAR) / (1.0 - _KD_CLEAR), 0.0, 1.0)


def synth_weather(days: int, profile: str = "mixed", seed: int = 0, site: Site | None = None,
                  start: str = "1998-01-01T00:00") -> WeatherSeries:
    """Seeded, physically plausible half-hourly weather.

    Global irradiance is a clear-sky envelope reduced by cloud cover; the
    daily diffuse fraction is about 0.2 for ``clear``, exactly 1 for
    ``overcast``, and for ``mixed`` varies from day to day around an
    energy-weighted mean of 0.4.
    """
    if days < 1:
        raise ValueError("days must be >= 1")
    if profile not in PROFILES:
        raise ValueError(f"profile must be one of {PROFILES}")
    site = site or Site()
    rng = np.random.default_rng(seed)
    n = days * 48
    time = np.datetime64(start, "s") + np.arange(n) * np.timedelta64(STEP_SECONDS, "s")
    pos = solar_position(site.latitude, site.longitude, time, site.utc_offset_h)
    clear = _clear_sky_global(pos.elevation)
    day = np.arange(n) // 48
    hour = (np.arange(n) % 48) / 2.0

    # slow intraday cloud texture, smoothed white noise
    texture = np.convolve(rng.standard_normal(n + 8), np.ones(9) / 3.0, mode="valid")

    if profile == "clear":
        kd = np.full(n, _KD_CLEAR)
        modulation = np.ones(n)
    elif profile == "overcast":
        kd = np.ones(n)
        modulation = np.clip(1.0 + 0.08 * texture, 0.6, 1.4)
    else:
        raw = rng.uniform(-0.25, 0.35, days)
        modulation = np.clip(1.0 + 0.06 * texture, 0.7, 1.3)
        jitter = 0.04 * texture

        def build(shift):
            kd_ = np.clip(raw[day] + shift + jitter, 0.12, 1.0)
            g_ = clear * (1.0 - 0.75 * _cloudiness(kd_) ** 3.4) * modulation
            return kd_, g_

        lo, hi = -1.0, 1.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            kd, g = build(mid)
            if np.sum(kd * g) / np.sum(g) < _MIXED_TARGET:
                lo = mid
            else:
                hi = mid
        kd, _ = build(0.5 * (lo + hi))

    cloud = _cloudiness(kd)
    global_h = clear * (1.0 - 0.75 * cloud ** 3.4) * modulation
    diffuse_h = np.minimum(kd * global_h, global_h)
    if profile == "overcast":
        diffuse_h = global_h.copy()

    daily_cloud = np.array([cloud[day == d].mean() for d in range(days)])[day]
    amp = 3.5 * (1.0 - 0.6 * daily_cloud)
    t_out = (25.5 + 0.5 * rng.standard_normal(days)[day]
             + amp * np.sin(2 * np.pi * (hour - 9.0) / 24.0) + 0.15 * texture)
    t_sky = t_out - (6.0 + 12.0 * (1.0 - daily_cloud))
    rh = np.clip(75.0 - 2.5 * (t_out - 25.5) + 10.0 * daily_cloud, 30.0, 100.0)
    wind_speed = np.clip(3.0 + 1.5 * np.sin(2 * np.pi * (hour - 14.0) / 24.0)
                         + 0.5 * rng.standard_normal(n), 0.0, None)
    wind_dir = np.mod(110.0 + 20.0 * rng.standard_normal(n), 360.0)
    return WeatherSeries(time, np.round(t_out, 3), np.round(t_sky, 3), np.round(rh, 2),
                         np.round(global_h, 2), np.round(diffuse_h, 2),
                         np.round(wind_speed, 2), np.round(wind_dir, 1))


def daily_diffuse_fraction(series: WeatherSeries) -> np.ndarray:
    """Per-day ratio of diffuse to global horizontal irradiation."""
    day = (series.time.astype("datetime64[D]") - series.time[0].astype("datetime64[D]")).astype(int)
    out = []
    for d in range(day.max() + 1):
        g = series.global_h[day == d].sum()
        out.append(series.diffuse_h[day == d].sum() / g if g > 0 else math.nan)
    return np.array(out)
