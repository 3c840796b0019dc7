import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermval.geometry import (INF, Fin, GeometryError, LowWall, Rect3, ShadeAssembly, TopFlap,
                               UnsupportedConfiguration, _element_factor_substituted,
                               diffuse_blocked_fraction, element_view_factors, mc_blocked_fraction,
                               mc_view_factor, sunlit_fraction, vf_perp_common_edge, vf_perp_offset,
                               vf_perp_strips_2d, window_rect)


def catalogue_common_edge(h, w, l):
    """Textbook form of the common-edge factor, written out independently."""
    H, W = h / l, w / l
    A = 1 + W * W
    B = 1 + H * H
    C = 1 + W * W + H * H
    D = W * W + H * H
    log_term = 0.25 * (math.log(A * B / C)
                       + W * W * math.log(W * W * C / (A * D))
                       + H * H * math.log(H * H * C / (B * D)))
    return (W * math.atan(1 / W) + H * math.atan(1 / H)
            - math.sqrt(D) * math.atan(1 / math.sqrt(D)) + log_term) / (math.pi * W)


def floor_and_wall(h, w, l):
    # emitter: floor strip of depth w in +y, receiver: wall of height h, common edge along x
    return Rect3((0, 0, 0), (l, 0, 0), (0, w, 0)), Rect3((0, 0, 0), (0, 0, h), (l, 0, 0))


class TestRect3:
    def test_area_and_normal(self):
        r = Rect3((0, 0, 0), (2, 0, 0), (0, 3, 0))
        assert r.area == pytest.approx(6.0)
        np.testing.assert_allclose(r.normal, [0, 0, 1])

    def test_non_orthogonal_edges_rejected(self):
        with pytest.raises(GeometryError):
            Rect3((0, 0, 0), (1, 0, 0), (1, 1, 0))

    def test_zero_edge_rejected(self):
        with pytest.raises(GeometryError):
            Rect3((0, 0, 0), (0, 0, 0), (0, 1, 0))


class TestCommonEdge:
    def test_unit_cube_faces(self):
        # Hottel's tabulated value for adjacent unit squares
        assert vf_perp_common_edge(1, 1, 1) == pytest.approx(0.200044, abs=1e-6)

    @pytest.mark.parametrize("h,w,l", [(1, 1, 1), (1, 2, 1), (0.3, 2.5, 4.0), (5, 0.2, 0.7), (1e-3, 2, 3)])
    def test_matches_catalogue_form(self, h, w, l):
        assert vf_perp_common_edge(h, w, l) == pytest.approx(catalogue_common_edge(h, w, l), rel=1e-12)

    def test_h1_w2_against_monte_carlo(self):
        e, r = floor_and_wall(1, 2, 1)
        est = mc_view_factor(e, r, 1_000_000, seed=4)
        assert abs(vf_perp_common_edge(1, 2, 1) - est.value) < 0.002

    def test_vanishing_emitter_sees_half_space(self):
        # a strip hugging the edge sees the wall over nearly half its hemisphere
        assert vf_perp_common_edge(1, 1e-9, 1) == pytest.approx(0.5, abs=1e-6)

    def test_vanishing_receiver(self):
        assert vf_perp_common_edge(1e-9, 1, 1) < 1e-8

    @pytest.mark.parametrize("args", [(0, 1, 1), (1, -1, 1), (1, 1, 0)])
    def test_non_positive_dimension(self, args):
        with pytest.raises(GeometryError):
            vf_perp_common_edge(*args)

    @given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
    def test_bounds_and_reciprocity(self, h, w, l):
        f = vf_perp_common_edge(h, w, l)
        g = vf_perp_common_edge(w, h, l)
        assert 0 < f < 0.5
        assert l * w * f == pytest.approx(l * h * g, rel=1e-12)


class TestOffset:
    def test_flush_reduces_to_common_edge(self):
        e, r = floor_and_wall(1.3, 0.7, 2.0)
        assert vf_perp_offset(e, r).value == pytest.approx(vf_perp_common_edge(1.3, 0.7, 2.0), rel=1e-13)

    def test_offset_along_line_against_monte_carlo(self):
        e = Rect3((0, 0, 0), (1, 0, 0), (0, 1, 0))
        r = Rect3((1, 0, 0), (0, 0, 1), (1, 0, 0))
        est = mc_view_factor(e, r, 1_000_000, seed=2)
        assert abs(vf_perp_offset(e, r).value - est.value) < 0.002

    def test_far_offset_vanishes(self):
        e = Rect3((0, 0, 0), (1, 0, 0), (0, 1, 0))
        vals = [vf_perp_offset(e, Rect3((d, 0, 0), (0, 0, 1), (1, 0, 0))).value for d in (1, 10, 100, 1000)]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 1e-9

    def test_parallel_planes_unsupported(self):
        e = Rect3((0, 0, 0), (1, 0, 0), (0, 1, 0))
        with pytest.raises(UnsupportedConfiguration):
            vf_perp_offset(e, Rect3((0, 0, 1), (1, 0, 0), (0, 1, 0)))

    def test_crossing_rejected(self):
        e = Rect3((0, 0, 0), (1, 0, 0), (0, 1, 0))
        with pytest.raises(GeometryError):
            vf_perp_offset(e, Rect3((0, 0.5, -1), (0, 0, 2), (1, 0, 0)))

    def test_receiver_behind_emitter(self):
        e = Rect3((0, 0, 0), (1, 0, 0), (0, 1, 0))
        assert vf_perp_offset(e, Rect3((0, 0, -1), (0, 0, 1), (1, 0, 0))).value == 0.0

    def test_reciprocal_attribute(self):
        e, r = floor_and_wall(2, 1, 1)
        vf = vf_perp_offset(e, r)
        assert vf.reciprocal * vf.to_area == pytest.approx(vf.value * vf.from_area)


def random_pair(rng):
    """Emitter in z=0 facing up, receiver in the plane y = const above it."""
    x0, y0 = rng.uniform(-1, 1, 2)
    e = Rect3((x0, y0, 0), (rng.uniform(0.2, 2), 0, 0), (0, rng.uniform(0.2, 2), 0))
    y_plane = y0 + rng.choice([-1, 1]) * rng.uniform(0, 1.5) if rng.random() < 0.5 else \
        (y0 if rng.random() < 0.5 else y0 + e.edge_v[1])
    r = Rect3((rng.uniform(-2, 2), y_plane, rng.uniform(0, 1.5)), (0, 0, rng.uniform(0.2, 2)),
              (rng.uniform(0.2, 2), 0, 0))
    return e, r


class TestRandomConfigurations:
    def test_reciprocity_fifty_cases(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            e, r = random_pair(rng)
            if r.origin[1] > e.origin[1] and r.origin[1] < e.origin[1] + e.edge_v[1]:
                continue
            back = vf_perp_offset(Rect3(r.origin, r.edge_v, r.edge_u) if np.dot(
                np.cross(r.edge_v, r.edge_u), np.subtract(e.corners().mean(0), r.origin)) > 0 else r, e)
            fwd = vf_perp_offset(e, r)
            assert fwd.value * e.area == pytest.approx(back.value * r.area, rel=1e-10, abs=1e-14)

    def test_additivity_fifty_cases(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            e, r = random_pair(rng)
            if r.origin[1] > e.origin[1] and r.origin[1] < e.origin[1] + e.edge_v[1]:
                continue
            s = rng.uniform(0.1, 0.9)
            u = np.asarray(r.edge_u)
            a = Rect3(r.origin, r.edge_u, tuple(s * np.asarray(r.edge_v)))
            b = Rect3(tuple(np.asarray(r.origin) + s * np.asarray(r.edge_v)), tuple(u), tuple((1 - s) * np.asarray(r.edge_v)))
            whole = vf_perp_offset(e, r).value
            assert vf_perp_offset(e, a).value + vf_perp_offset(e, b).value == pytest.approx(whole, rel=1e-10, abs=1e-15)

    def test_against_monte_carlo_fifty_cases(self):
        rng = np.random.default_rng(13)
        n = 0
        while n < 50:
            e, r = random_pair(rng)
            if r.origin[1] > e.origin[1] and r.origin[1] < e.origin[1] + e.edge_v[1]:
                continue
            est = mc_view_factor(e, r, 200_000, seed=n)
            f = vf_perp_offset(e, r).value
            assert abs(f - est.value) <= 3 * max(est.stderr, 1 / 200_000) + 1e-12, (n, f, est)
            n += 1


class TestMonteCarlo:
    def test_facing_away_is_zero(self):
        e = Rect3((0, 0, 0), (1, 0, 0), (0, 1, 0))
        r = Rect3((0, 0, -1), (1, 0, 0), (0, 1, 0))
        assert mc_view_factor(e, r, 10_000).value == 0.0

    def test_seeded(self):
        e, r = floor_and_wall(1, 1, 1)
        assert mc_view_factor(e, r, 20_000, seed=3) == mc_view_factor(e, r, 20_000, seed=3)

    def test_stderr_scales(self):
        e, r = floor_and_wall(1, 1, 1)
        a = mc_view_factor(e, r, 100_000, seed=1).stderr
        b = mc_view_factor(e, r, 200_000, seed=1).stderr
        assert b / a == pytest.approx(1 / math.sqrt(2), rel=0.02)


def egg_crate(top=1.0, fins=1.0, low=0.0, offset=0.0, size=2.0, extent=None):
    extent = extent if extent is not None else size
    return ShadeAssembly(
        window_rect(size, size, math.pi / 2, 0.0),
        top_flap=TopFlap(top, extent, offset) if top else None,
        left_fin=Fin(fins, extent, offset) if fins else None,
        right_fin=Fin(fins, extent, offset) if fins else None,
        low_wall=LowWall(low, extent, offset) if low else None,
    )


class TestBlockedFraction:
    def test_no_elements(self):
        assert diffuse_blocked_fraction(ShadeAssembly(window_rect(1, 1, math.pi / 2, 0))) == 0.0

    def test_egg_crate_against_monte_carlo(self):
        shade = egg_crate()
        est = mc_blocked_fraction(shade, 1_000_000, seed=5)
        assert abs(diffuse_blocked_fraction(shade) - est.value) < 0.005

    def test_infinite_overhang_limit(self):
        vals = [diffuse_blocked_fraction(ShadeAssembly(window_rect(1, 1, math.pi / 2, 0), top_flap=TopFlap(d)))
                for d in (0.5, 5, 50, 5000, 5e6)]
        assert all(a < b for a, b in zip(vals, vals[1:]))
        assert vals[-1] == pytest.approx(0.5, abs=1e-6)

    def test_infinite_extent_matches_substitution(self):
        shade = ShadeAssembly(window_rect(1.2, 1.5, math.pi / 2, 0.4), top_flap=TopFlap(0.8, INF, 0.2),
                              left_fin=Fin(0.5, INF, 0.1))
        exact = element_view_factors(shade)
        for name in exact:
            assert _element_factor_substituted(shade, name) == pytest.approx(exact[name], abs=2e-6)

    def test_strip_limit_is_half(self):
        assert vf_perp_strips_2d((0, 1), (0, 1e9)) == pytest.approx(0.5, abs=1e-8)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0, 3), st.floats(0, 3), st.floats(0, 1), st.floats(0, 0.5))
    def test_monotone_in_depth_and_offset(self, depth, extra, offset, extra_off):
        base = diffuse_blocked_fraction(egg_crate(top=depth, fins=depth, offset=offset, extent=3.0))
        deeper = diffuse_blocked_fraction(egg_crate(top=depth + extra, fins=depth + extra, offset=offset, extent=3.0))
        farther = diffuse_blocked_fraction(egg_crate(top=depth, fins=depth, offset=offset + extra_off, extent=3.0))
        assert deeper >= base - 1e-12
        assert farther <= base + 1e-12
        assert 0 <= base < 1

    def test_negative_depth_rejected(self):
        with pytest.raises(GeometryError):
            egg_crate(top=-1.0)


class TestSunlit:
    def test_normal_incidence_is_fully_lit(self):
        shade = egg_crate(top=1, fins=1, low=1)
        u, v, n = shade.frame
        assert sunlit_fraction(shade, n) == pytest.approx(1.0)

    def test_sun_behind_wall(self):
        shade = egg_crate()
        assert sunlit_fraction(shade, -shade.frame[2]) == 0.0

    def test_profile_45_covers_window(self):
        d = 1.5
        shade = ShadeAssembly(window_rect(2.0, d, math.pi / 2, 0.0), top_flap=TopFlap(d))
        u, v, n = shade.frame
        s = (n + v) / math.sqrt(2)
        assert sunlit_fraction(shade, s) == pytest.approx(0.0, abs=1e-12)

    def test_overhang_shadow_depth(self):
        shade = ShadeAssembly(window_rect(2.0, 2.0, math.pi / 2, 0.0), top_flap=TopFlap(0.5))
        u, v, n = shade.frame
        s = n * math.cos(math.radians(30)) + v * math.sin(math.radians(30))
        # shadow height 0.5 * tan(30)
        assert sunlit_fraction(shade, s) == pytest.approx(1 - 0.5 * math.tan(math.radians(30)) / 2.0, rel=1e-12)

    def test_oblique_fin_shadow_is_a_parallelogram(self):
        shade = ShadeAssembly(window_rect(2.0, 2.0, math.pi / 2, 0.0), left_fin=Fin(0.5, 1.0))
        u, v, n = shade.frame
        s = n - 0.5 * u + 0.5 * v
        s /= np.linalg.norm(s)
        # fin of height 1 centred on the window, shifted (+0.25, -0.25): parallelogram area 0.25
        assert sunlit_fraction(shade, s) == pytest.approx(1 - 0.25 / 4.0, rel=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.01, 1))
    def test_bounds_and_zero_depth(self, a, b, c):
        s = np.array([a, b, c]) / np.linalg.norm([a, b, c])
        flat = egg_crate(top=0.0, fins=0.0)
        lit = sunlit_fraction(egg_crate(top=1, fins=1, low=1), s)
        assert 0.0 <= lit <= 1.0
        w = flat.frame[2]
        expected = 1.0 if s @ w > 1e-12 else 0.0
        assert sunlit_fraction(ShadeAssembly(flat.window, top_flap=TopFlap(0.0)), s) == expected
