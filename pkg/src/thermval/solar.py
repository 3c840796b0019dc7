"""Sun position, beam/diffuse split and isotropic-sky transposition.

Angles are radians throughout. Azimuths are measured from south, positive
towards west; surface tilt is measured from the horizontal (0 = roof facing
up, pi/2 = vertical wall).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ELEVATION_MIN = np.radians(3.0)
DEFAULT_ALBEDO = 0.2


@dataclass
class SolarPosition:
    declination: np.ndarray
    hour_angle: np.ndarray
    elevation: np.ndarray
    azimuth: np.ndarray

    def direction(self) -> np.ndarray:
        """Unit vectors towards the sun, shape (..., 3), x east / y north / z up."""
        ce = np.cos(self.elevation)
        return np.stack([-np.sin(self.azimuth) * ce,
                         -np.cos(self.azimuth) * ce,
                         np.sin(self.elevation)], axis=-1)


@dataclass
class IrradianceComponents:
    beam_on_surface: np.ndarray
    diffuse_sky: np.ndarray
    diffuse_ground: np.ndarray

    @property
    def diffuse(self):
        return self.diffuse_sky + self.diffuse_ground

    @property
    def total(self):
        return self.beam_on_surface + self.diffuse_sky + self.diffuse_ground


def _as_datetime64(timestamp) -> np.ndarray:
    return np.asarray(timestamp, dtype="datetime64[s]")


def day_of_year(timestamp) -> np.ndarray:
    t = _as_datetime64(timestamp)
    return (t.astype("datetime64[D]") - t.astype("datetime64[Y]")).astype(int) + 1


def declination(doy) -> np.ndarray:
    """Cooper's approximation."""
    return np.radians(23.45) * np.sin(2 * np.pi * (284 + np.asarray(doy)) / 365.0)


def equation_of_time(doy) -> np.ndarray:
    """Minutes; Spencer's series."""
    b = 2 * np.pi * (np.asarray(doy) - 1) / 365.0
    return 229.18 * (0.000075 + 0.001868 * np.cos(b) - 0.032077 * np.sin(b)
                     - 0.014615 * np.cos(2 * b) - 0.04089 * np.sin(2 * b))


def solar_position(latitude: float, longitude: float, timestamp, utc_offset: float = 0.0,
                   use_equation_of_time: bool = False) -> SolarPosition:
    """Sun position for civil local time(s) ``timestamp`` at UTC+``utc_offset`` hours.

    Longitude is east-positive. Solar time applies the longitude correction
    relative to the zone meridian; the equation of time is optional.
    """
    t = _as_datetime64(timestamp)
    doy = day_of_year(t)
    hours = (t - t.astype("datetime64[D]")).astype(float) / 3600.0
    solar_hours = hours + (np.degrees(longitude) - 15.0 * utc_offset) / 15.0
    if use_equation_of_time:
        solar_hours = solar_hours + equation_of_time(doy) / 60.0
    omega = np.radians(15.0 * (solar_hours - 12.0))
    delta = declination(doy)
    sin_el = (np.sin(latitude) * np.sin(delta)
              + np.cos(latitude) * np.cos(delta) * np.cos(omega))
    elevation = np.arcsin(np.clip(sin_el, -1.0, 1.0))
    azimuth = np.arctan2(np.cos(delta) * np.sin(omega) * np.cos(latitude),
                         sin_el * np.sin(latitude) - np.sin(delta))
    return SolarPosition(delta, omega, elevation, azimuth)


def surface_normal(tilt: float, azimuth: float) -> np.ndarray:
    return np.array([-np.sin(azimuth) * np.sin(tilt),
                     -np.cos(azimuth) * np.sin(tilt),
                     np.cos(tilt)])


def incidence_angle(pos: SolarPosition, tilt: float, azimuth: float) -> np.ndarray:
    cos_i = pos.direction() @ surface_normal(tilt, azimuth)
    return np.arccos(np.clip(cos_i, -1.0, 1.0))


def split_beam(global_h, diffuse_h, elevation, elevation_min: float = ELEVATION_MIN):
    """Beam normal irradiance from horizontal global and diffuse.

    Returns ``(beam_normal, flags)``. Records with diffuse > global are
    flagged ``inconsistent`` and records with the sun below
    ``elevation_min`` are flagged ``low_sun``; both get zero beam.
    """
    g = np.asarray(global_h, dtype=float)
    d = np.asarray(diffuse_h, dtype=float)
    el = np.asarray(elevation, dtype=float)
    inconsistent = d > g
    low_sun = el <= elevation_min
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        beam = (g - d) / np.sin(el)
    beam = np.where(inconsistent | low_sun, 0.0, np.maximum(beam, 0.0))
    flags = {"inconsistent": inconsistent, "low_sun": low_sun}
    if beam.ndim == 0:
        return float(beam), {k: bool(v) for k, v in flags.items()}
    return beam, flags


def tilt_irradiance_isotropic(beam_n, diffuse_h, global_h, albedo: float, tilt: float,
                              incidence) -> IrradianceComponents:
    if not 0.0 <= albedo <= 1.0:
        raise ValueError("albedo must lie in [0, 1]")
    beam = np.asarray(beam_n, dtype=float) * np.maximum(np.cos(incidence), 0.0)
    sky = np.asarray(diffuse_h, dtype=float) * (1.0 + np.cos(tilt)) / 2.0
    ground = albedo * np.asarray(global_h, dtype=float) * (1.0 - np.cos(tilt)) / 2.0
    return IrradianceComponents(beam, sky, ground)


def window_gain(components: IrradianceComponents, sunlit, blocked, transmittance, area):
    """Shaded exterior flux on the glass (W/m2) and power transmitted into the zone (W).

    The beam is scaled by the sunlit fraction; sky and ground diffuse by
    ``1 - blocked``.
    """
    for name, val in (("sunlit", sunlit), ("blocked", blocked), ("transmittance", transmittance)):
        a = np.asarray(val)
        if np.any(a < 0) or np.any(a > 1):
            raise ValueError(f"{name} must lie in [0, 1]")
    exterior = components.beam_on_surface * sunlit + components.diffuse * (1.0 - blocked)
    return exterior, transmittance * exterior * area
