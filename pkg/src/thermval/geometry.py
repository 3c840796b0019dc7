"""Radiative view factors between a window and its near shading elements.

Everything is built on a single closed form, the view factor between two
perpendicular rectangles sharing a common edge. Offsets along and away from
the plane-intersection line are handled by view-factor algebra (additivity
and reciprocity), so an arbitrary pair of axis-aligned perpendicular
rectangles costs at most 16 evaluations of that closed form.

A Monte Carlo ray caster is kept alongside as an independent oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import shapely
from shapely.geometry import MultiPoint, box

INF = math.inf

# guards ln(0) and 0/0 in the degenerate limits of the closed form
_TINY = 1e-300
# depths below this fraction of the assembly size are treated as zero
_NEGLIGIBLE = 1e-14
# change below which a finite substitute for an infinite extent counts as converged
_INF_TOL = 1e-6
_ALIGN_TOL = 1e-9


class GeometryError(ValueError):
    """Invalid or degenerate geometry."""


class UnsupportedConfiguration(GeometryError):
    """Geometry outside what the analytic route can handle."""


def _vec(x) -> tuple[float, float, float]:
    a = np.asarray(x, dtype=float).reshape(3)
    return (float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class Rect3:
    """Rectangle ``origin + s*edge_u + t*edge_v`` for s, t in [0, 1].

    The normal is ``edge_u x edge_v``; it only matters when the rectangle
    acts as an emitter.
    """

    origin: tuple[float, float, float]
    edge_u: tuple[float, float, float]
    edge_v: tuple[float, float, float]

    def __post_init__(self):
        object.__setattr__(self, "origin", _vec(self.origin))
        object.__setattr__(self, "edge_u", _vec(self.edge_u))
        object.__setattr__(self, "edge_v", _vec(self.edge_v))
        lu, lv = np.linalg.norm(self.edge_u), np.linalg.norm(self.edge_v)
        if not (lu > 0 and lv > 0) or not (np.isfinite(lu) and np.isfinite(lv)):
            raise GeometryError("rectangle edges must have finite, non-zero length")
        if abs(np.dot(self.edge_u, self.edge_v)) > _ALIGN_TOL * lu * lv:
            raise GeometryError("rectangle edges must be orthogonal")

    @property
    def area(self) -> float:
        return float(np.linalg.norm(self.edge_u) * np.linalg.norm(self.edge_v))

    @property
    def normal(self) -> np.ndarray:
        n = np.cross(self.edge_u, self.edge_v)
        return n / np.linalg.norm(n)

    def corners(self) -> np.ndarray:
        o, u, v = (np.asarray(a) for a in (self.origin, self.edge_u, self.edge_v))
        return np.array([o, o + u, o + u + v, o + v])


@dataclass(frozen=True)
class ViewFactor:
    value: float
    from_area: float
    to_area: float

    @property
    def reciprocal(self) -> float:
        """Factor in the opposite direction, from reciprocity."""
        return self.value * self.from_area / self.to_area


# ---------------------------------------------------------------------------
# closed form for perpendicular rectangles with a common edge


def _log_ratio(a: float, b: float) -> float:
    """ln(a^2 (1 + a^2 + b^2) / ((1 + a^2)(a^2 + b^2))), accurate at both extremes."""
    a2, b2 = a * a, b * b
    x = b2 / ((1.0 + a2) * (a2 + b2))
    if x < 0.5:
        # ratio is 1 - x; long sides (infinite-extent substitutes) land here
        return math.log1p(-x)
    return 2.0 * math.log(a) + math.log1p(a2 + b2) - math.log1p(a2) - math.log(a2 + b2)


def _common_edge_bracket(H: float, W: float) -> float:
    """Bracketed term of the common-edge formula; symmetric in H and W."""
    H = max(H, _TINY)
    W = max(W, _TINY)
    H2, W2 = H * H, W * W
    R2 = H2 + W2
    R = math.sqrt(R2)
    log_term = (math.log((1.0 + W2) * (1.0 + H2) / (1.0 + R2))
                + W2 * _log_ratio(W, H) + H2 * _log_ratio(H, W))
    return (W * math.atan(1.0 / W) + H * math.atan(1.0 / H)
            - R * math.atan(1.0 / R) + 0.25 * log_term)


def vf_perp_common_edge(h: float, w: float, l: float) -> float:
    """View factor from a rectangle of depth ``w`` to a perpendicular one of
    depth ``h``, both sharing an edge of length ``l``."""
    if not (h > 0 and w > 0 and l > 0):
        raise GeometryError(f"dimensions must be positive, got h={h}, w={w}, l={l}")
    H, W = h / l, w / l
    return _common_edge_bracket(H, W) / (math.pi * max(W, _TINY))


def _af_common_edge(length: float, y: float, z: float) -> float:
    """Area times view factor for an aligned common-edge pair; zero if degenerate."""
    if length <= 0 or y <= 0 or z <= 0:
        return 0.0
    return length * length * _common_edge_bracket(z / length, y / length) / math.pi


def _af_strips(length: float, y: tuple[float, float], z: tuple[float, float]) -> float:
    # emitter strip y in [y0, y1], receiver strip z in [z0, z1], both aligned over `length`
    return (_af_common_edge(length, y[1], z[1]) - _af_common_edge(length, y[0], z[1])
            - _af_common_edge(length, y[1], z[0]) + _af_common_edge(length, y[0], z[0]))


def _perp_af(xe, ye, xr, zr) -> float:
    """Area-weighted factor between perpendicular rectangles given in line coordinates.

    ``xe``/``xr`` are the intervals along the intersection line; ``ye`` and
    ``zr`` are the distance intervals from that line in each plane.
    """
    def phi(d):
        return _af_strips(abs(d), ye, zr)

    return 0.5 * (phi(xe[1] - xr[0]) + phi(xe[0] - xr[1])
                  - phi(xe[1] - xr[1]) - phi(xe[0] - xr[0]))


def _interval(values) -> tuple[float, float]:
    return float(np.min(values)), float(np.max(values))


def vf_perp_offset(emitter: Rect3, receiver: Rect3) -> ViewFactor:
    """View factor between rectangles in mutually perpendicular planes.

    Both rectangles must have their edges parallel or perpendicular to the
    line where the two planes meet. The emitter radiates from the side its
    normal points to; the receiver is two-sided.
    """
    ne, nr = emitter.normal, receiver.normal
    if abs(np.dot(ne, nr)) > _ALIGN_TOL:
        raise UnsupportedConfiguration("rectangles are not in perpendicular planes")
    d = np.cross(ne, nr)
    d /= np.linalg.norm(d)
    for rect in (emitter, receiver):
        cu = abs(np.dot(rect.edge_u, d)) / np.linalg.norm(rect.edge_u)
        cv = abs(np.dot(rect.edge_v, d)) / np.linalg.norm(rect.edge_v)
        if min(cu, cv) > _ALIGN_TOL:
            raise UnsupportedConfiguration("rectangle edges are not aligned with the plane intersection line")

    ce, cr = emitter.corners(), receiver.corners()
    e0, r0 = np.asarray(emitter.origin), np.asarray(receiver.origin)
    xe, xr = _interval(ce @ d), _interval(cr @ d)
    # distance of each rectangle from the other's plane, signed
    ye = _interval((ce - r0) @ nr)
    zr = _interval((cr - e0) @ ne)
    scale = max(emitter.area, receiver.area) ** 0.5
    eps = 1e-12 * scale
    if ye[0] < -eps and ye[1] > eps:
        raise GeometryError("emitter crosses the receiver plane")
    if zr[0] < -eps and zr[1] > eps:
        raise GeometryError("receiver crosses the emitter plane")
    if zr[1] <= eps:
        # receiver behind the emitter
        return ViewFactor(0.0, emitter.area, receiver.area)
    if ye[1] <= eps:
        ye = (-ye[1], -ye[0])
    ye = (max(ye[0], 0.0), ye[1])
    zr = (max(zr[0], 0.0), zr[1])
    af = _perp_af(xe, ye, xr, zr)
    value = min(max(af / emitter.area, 0.0), 1.0)
    return ViewFactor(value, emitter.area, receiver.area)


# ---------------------------------------------------------------------------
# Monte Carlo oracle


class MCEstimate(NamedTuple):
    value: float
    stderr: float
    n_rays: int


def _ray_hits(p: np.ndarray, dirs: np.ndarray, rect: Rect3) -> tuple[np.ndarray, np.ndarray]:
    """Hit mask and distance of rays against a (two-sided) rectangle."""
    o = np.asarray(rect.origin)
    u, v = np.asarray(rect.edge_u), np.asarray(rect.edge_v)
    n = np.cross(u, v)
    denom = dirs @ n
    with np.errstate(divide="ignore", invalid="ignore"):
        t = ((o - p) @ n) / denom
    q = p + t[:, None] * dirs - o
    a = (q @ u) / (u @ u)
    b = (q @ v) / (v @ v)
    hit = (np.abs(denom) > 1e-15) & (t > 1e-12) & (a >= 0) & (a <= 1) & (b >= 0) & (b <= 1)
    return hit, np.where(hit, t, np.inf)


def _cosine_rays(rect: Rect3, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    o = np.asarray(rect.origin)
    u, v = np.asarray(rect.edge_u), np.asarray(rect.edge_v)
    s, t = rng.random(n), rng.random(n)
    p = o + s[:, None] * u + t[:, None] * v
    r1, r2 = rng.random(n), rng.random(n)
    rad = np.sqrt(r1)
    phi = 2 * np.pi * r2
    uh = u / np.linalg.norm(u)
    vh = v / np.linalg.norm(v)
    nh = rect.normal
    dirs = (rad * np.cos(phi))[:, None] * uh + (rad * np.sin(phi))[:, None] * vh \
        + np.sqrt(1.0 - r1)[:, None] * nh
    return p, dirs


def _mc_fraction(emitter: Rect3, receivers: list[Rect3], n_rays: int, seed: int,
                 chunk: int = 1_000_000) -> MCEstimate:
    if n_rays < 1:
        raise ValueError("n_rays must be positive")
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < n_rays:
        m = min(chunk, n_rays - done)
        p, dirs = _cosine_rays(emitter, m, rng)
        any_hit = np.zeros(m, dtype=bool)
        for rect in receivers:
            any_hit |= _ray_hits(p, dirs, rect)[0]
        hits += int(any_hit.sum())
        done += m
    f = hits / n_rays
    return MCEstimate(f, math.sqrt(f * (1 - f) / n_rays), n_rays)


def mc_view_factor(emitter: Rect3, receiver: Rect3, n_rays: int = 1_000_000,
                   seed: int = 0) -> MCEstimate:
    """Cosine-weighted ray-cast estimate of the view factor emitter -> receiver."""
    return _mc_fraction(emitter, [receiver], n_rays, seed)


# ---------------------------------------------------------------------------
# shade assemblies


@dataclass(frozen=True)
class TopFlap:
    depth: float
    lateral_extent: float = INF
    vertical_offset: float = 0.0


@dataclass(frozen=True)
class LowWall:
    depth: float
    lateral_extent: float = INF
    vertical_offset: float = 0.0


@dataclass(frozen=True)
class Fin:
    depth: float
    vertical_extent: float = INF
    horizontal_offset: float = 0.0


def window_rect(width: float, height: float, tilt: float, azimuth: float,
                origin=(0.0, 0.0, 0.0)) -> Rect3:
    """Window rectangle from its size and orientation.

    World frame is x east, y north, z up; ``azimuth`` is the outward normal's
    azimuth (south = 0, west positive) and ``tilt`` its angle from zenith.
    ``edge_u`` runs left to right as seen from outside, ``edge_v`` upwards.
    """
    n = np.array([-math.sin(azimuth) * math.sin(tilt),
                  -math.cos(azimuth) * math.sin(tilt),
                  math.cos(tilt)])
    u = np.cross([0.0, 0.0, 1.0], n)
    if np.linalg.norm(u) < 1e-9:
        u = np.array([1.0, 0.0, 0.0])
    u /= np.linalg.norm(u)
    v = np.cross(n, u)
    return Rect3(origin, width * u, height * v)


@dataclass(frozen=True)
class ShadeAssembly:
    """A window plus up to four egg-crate elements attached to its wall.

    Extents along the wall are centred on the window; ``math.inf`` marks an
    extent treated as unbounded.
    """

    window: Rect3
    top_flap: TopFlap | None = None
    left_fin: Fin | None = None
    right_fin: Fin | None = None
    low_wall: LowWall | None = None

    def __post_init__(self):
        for name, el in self.elements().items():
            extent = el.vertical_extent if isinstance(el, Fin) else el.lateral_extent
            offset = el.horizontal_offset if isinstance(el, Fin) else el.vertical_offset
            if not el.depth >= 0 or not math.isfinite(el.depth):
                raise GeometryError(f"{name}: depth must be finite and >= 0")
            if not offset >= 0 or not math.isfinite(offset):
                raise GeometryError(f"{name}: offset must be finite and >= 0")
            if not extent > 0:
                raise GeometryError(f"{name}: extent must be > 0 or inf")

    def elements(self) -> dict:
        return {k: getattr(self, k) for k in ("top_flap", "left_fin", "right_fin", "low_wall")
                if getattr(self, k) is not None}

    @property
    def frame(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        u = np.asarray(self.window.edge_u)
        v = np.asarray(self.window.edge_v)
        u, v = u / np.linalg.norm(u), v / np.linalg.norm(v)
        return u, v, np.cross(u, v)

    @property
    def width(self) -> float:
        return float(np.linalg.norm(self.window.edge_u))

    @property
    def height(self) -> float:
        return float(np.linalg.norm(self.window.edge_v))

    def element_rect(self, name: str, big: float | None = None) -> Rect3 | None:
        """Rectangle for one element, with an infinite extent replaced by ``big``.

        Returns None for an element whose depth is negligible.
        """
        el = getattr(self, name)
        if el is None or el.depth <= _NEGLIGIBLE * self.scale():
            return None
        u, v, n = self.frame
        o = np.asarray(self.window.origin)
        W, H = self.width, self.height
        if isinstance(el, Fin):
            ext = el.vertical_extent if math.isfinite(el.vertical_extent) else big
            x = -el.horizontal_offset if name == "left_fin" else W + el.horizontal_offset
            return Rect3(o + x * u + (H - ext) / 2 * v, el.depth * n, ext * v)
        ext = el.lateral_extent if math.isfinite(el.lateral_extent) else big
        z = H + el.vertical_offset if name == "top_flap" else -el.vertical_offset
        return Rect3(o + (W - ext) / 2 * u + z * v, ext * u, el.depth * n)

    def is_infinite(self, name: str) -> bool:
        el = getattr(self, name)
        ext = el.vertical_extent if isinstance(el, Fin) else el.lateral_extent
        return not math.isfinite(ext)

    def scale(self) -> float:
        dims = [self.width, self.height]
        for el in self.elements().values():
            dims.append(el.depth)
            dims.append(el.horizontal_offset if isinstance(el, Fin) else el.vertical_offset)
        return max(dims)


def vf_perp_strips_2d(y: tuple[float, float], z: tuple[float, float]) -> float:
    """Factor between perpendicular strips infinite along their common line.

    ``y`` and ``z`` are the distance intervals of emitter and receiver from
    the line. Crossed-strings rule.
    """
    def d(a, b):
        return math.hypot(a, b)

    af = 0.5 * (d(y[0], z[1]) + d(y[1], z[0]) - d(y[0], z[0]) - d(y[1], z[1]))
    return af / (y[1] - y[0])


def _line_intervals(shade: ShadeAssembly, name: str) -> tuple[tuple[float, float], tuple[float, float]]:
    el = getattr(shade, name)
    if isinstance(el, Fin):
        off, span = el.horizontal_offset, shade.width
    else:
        off, span = el.vertical_offset, shade.height
    return (off, off + span), (0.0, el.depth)


def _element_factor(shade: ShadeAssembly, name: str) -> float:
    if getattr(shade, name).depth == 0:
        return 0.0
    if shade.is_infinite(name):
        # every window point sees the same cross-section, so the limit is two-dimensional
        return vf_perp_strips_2d(*_line_intervals(shade, name))
    rect = shade.element_rect(name)
    return 0.0 if rect is None else vf_perp_offset(shade.window, rect).value


def _element_factor_substituted(shade: ShadeAssembly, name: str, tol: float = _INF_TOL) -> float:
    """Infinite extent replaced by a length L, doubled until F moves less than ``tol``."""
    big = 10.0 * shade.scale()
    f = vf_perp_offset(shade.window, shade.element_rect(name, big)).value
    for _ in range(60):
        big *= 2.0
        f2 = vf_perp_offset(shade.window, shade.element_rect(name, big)).value
        if abs(f2 - f) < tol:
            return f2
        f = f2
    raise GeometryError(f"{name}: infinite-extent limit did not converge")


def element_view_factors(shade: ShadeAssembly) -> dict[str, float]:
    """View factor from the window to each shade element."""
    return {name: _element_factor(shade, name) for name in shade.elements()}


def diffuse_blocked_fraction(shade: ShadeAssembly) -> float:
    """Share of the window's hemisphere intercepted by the shade elements.

    Sum of window-to-element view factors, one rectangle per element.
    """
    f = sum(element_view_factors(shade).values())
    return min(max(f, 0.0), math.nextafter(1.0, 0.0))


def mc_blocked_fraction(shade: ShadeAssembly, n_rays: int = 1_000_000, seed: int = 0,
                        big: float | None = None) -> MCEstimate:
    """Hemisphere-occlusion oracle: share of cosine-weighted rays leaving the
    window that hit any element (mutual occlusion between elements included)."""
    big = big if big is not None else 1e4 * shade.scale()
    rects = [r for r in (shade.element_rect(k, big) for k in shade.elements()) if r is not None]
    if not rects:
        return MCEstimate(0.0, 0.0, n_rays)
    return _mc_fraction(shade.window, rects, n_rays, seed)


def sunlit_fraction(shade: ShadeAssembly, sun_dir) -> float:
    """Fraction of the window area reached by the direct beam.

    Each element is projected onto the window plane along the beam and the
    union of the shadows is clipped to the window.
    """
    s = np.asarray(sun_dir, dtype=float)
    u, v, n = shade.frame
    su, sv, sn = float(s @ u), float(s @ v), float(s @ n)
    if sn <= 1e-12:
        return 0.0
    W, H = shade.width, shade.height
    reach = (abs(su) + abs(sv)) / sn
    bound = 0.0
    for el in shade.elements().values():
        off = el.horizontal_offset if isinstance(el, Fin) else el.vertical_offset
        bound += off + el.depth * (1.0 + reach)
    big = 4.0 * (W + H + bound)
    o = np.asarray(shade.window.origin)
    shadows = []
    for name in shade.elements():
        rect = shade.element_rect(name, big)
        if rect is None:
            continue
        c = rect.corners() - o
        a, b, depth = c @ u, c @ v, c @ n
        pts = np.column_stack([a - su * depth / sn, b - sv * depth / sn])
        hull = MultiPoint([tuple(p) for p in pts]).convex_hull
        if hull.area > 0:
            shadows.append(hull)
    if not shadows:
        return 1.0
    win = box(0.0, 0.0, W, H)
    shaded = shapely.union_all(shadows).intersection(win).area
    return float(min(max(1.0 - shaded / (W * H), 0.0), 1.0))
