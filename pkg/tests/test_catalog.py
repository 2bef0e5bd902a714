import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curveflow.acceptance import RESIDUAL_CASES, residual_order
from curveflow.catalog import (
    FAMILIES,
    AngenentOval,
    AnisoSeparable,
    DVSlopeFamily,
    EllipticHomothetic,
    GrimReaper,
    PeriodicDecay,
    ShrinkingCircle,
    angenent_oval_branch,
    angenent_oval_diagnostics,
    aniso_separable_curve,
    aniso_separable_markers,
    aniso_separable_slope,
    dv_slope,
    elliptic_homothetic,
    grim_reaper,
    make_family,
    periodic_decay_amplitude,
    periodic_decay_y,
    residual_table,
    shrinking_circle,
    verify_residual,
)
from curveflow.diffusivity import Isotropic
from curveflow.errors import DomainError, ExtinctError
from curveflow.geometry import curvature_of_curve, diagnostics
from curveflow.specfun import jacobi_sn_cn_dn

mp.mp.dps = 30
LN5 = math.log(5.0)
# int_0^{pi/2} (cos s)^(-1/2) ds = Gamma(1/4) Gamma(1/2) / (2 Gamma(3/4))
HALF_COS_INTEGRAL = math.gamma(0.25) * math.gamma(0.5) / (2 * math.gamma(0.75))


class TestDVSlope:
    def test_k1(self):
        assert dv_slope(DVSlopeFamily(1), math.pi / 4, 0.0) == pytest.approx(1.0, abs=1e-15)

    def test_k2(self):
        assert dv_slope(DVSlopeFamily(2), 1.0, -1.0) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("t", [-0.1, -1.0, -5.0])
    def test_k6_vanishes_at_origin(self, t):
        assert dv_slope(DVSlopeFamily(6), 0.0, t) == 0.0

    def test_k4_excluded(self):
        with pytest.raises(DomainError):
            DVSlopeFamily(4)

    def test_sigma_nonzero(self):
        with pytest.raises(DomainError):
            DVSlopeFamily(1, sigma=0.0)

    def test_domain_error_names_inequality(self):
        with pytest.raises(DomainError) as info:
            dv_slope(DVSlopeFamily(6), 0.0, 0.5)
        assert "exp" in info.value.constraint or "cos" in info.value.constraint

    def test_shift_and_scale(self):
        fam = DVSlopeFamily(1, sigma=2.0, a=0.1, b=0.3)
        base = DVSlopeFamily(1)
        assert dv_slope(fam, 0.2, 0.1) == pytest.approx(dv_slope(base, 2 * 0.3, 4 * 0.4))


class TestGrimReaper:
    def test_origin(self):
        assert grim_reaper(1.0, 0.0, 0.0) == 0.0

    def test_ln2(self):
        assert abs(grim_reaper(1.0, math.pi / 3, 0.0) - math.log(2)) <= 1e-15

    def test_asymptote_spacing(self):
        assert GrimReaper(1.0).asymptote_spacing == pytest.approx(math.pi)
        assert GrimReaper(2.0).asymptote_spacing == pytest.approx(math.pi / 2)

    def test_domain(self):
        with pytest.raises(DomainError):
            grim_reaper(1.0, 1.6, 0.0)

    def test_translates(self):
        assert grim_reaper(1.0, 0.4, 2.5) - grim_reaper(1.0, 0.4, 0.0) == pytest.approx(2.5)


class TestCircle:
    def test_unit_radius(self):
        assert shrinking_circle(1.0, 0.5) == pytest.approx(1.0)

    def test_extinct(self):
        with pytest.raises(ExtinctError):
            shrinking_circle(1.0, 1.0)

    def test_tends_to_zero(self):
        assert shrinking_circle(1.0, 1.0 - 1e-12) < 2e-6

    @pytest.mark.parametrize("t", [-1.0, 0.0, 0.4])
    def test_radius_times_curvature(self, t):
        sol = ShrinkingCircle(0.5)
        k = curvature_of_curve(sol.curve(t, 512))
        assert np.max(np.abs(k * sol.radius(t) - 1)) < 1e-11


class TestOval:
    def test_tip_value(self):
        t = -LN5
        y = angenent_oval_branch(t, 0.0)
        assert y == pytest.approx(t - math.log(1 + math.sqrt(1 - math.exp(2 * t))), abs=1e-15)
        assert math.cosh(y) == pytest.approx(5.0, rel=1e-14)

    def test_upper_branch_mirrors(self):
        assert angenent_oval_branch(-1.0, 0.3, upper=True) == -angenent_oval_branch(-1.0, 0.3)

    def test_waist(self):
        t = -1.0
        xm = math.acos(math.exp(t))
        assert abs(angenent_oval_branch(t, xm * (1 - 1e-12))) < 1e-5

    def test_two_grim_reapers_early(self):
        t, x = -10.0, 0.3
        asymptote = t - math.log(math.cos(x)) - math.log(2)
        assert abs(angenent_oval_branch(t, x) - asymptote) < 1e-3

    def test_domain(self):
        with pytest.raises(DomainError):
            angenent_oval_branch(-1.0, 1.5)
        with pytest.raises(DomainError):
            angenent_oval_diagnostics(0.0)

    def test_diagnostics_ln5(self):
        d = angenent_oval_diagnostics(-LN5)
        assert d["kappa_max"] / d["kappa_min"] == pytest.approx(5.0, rel=1e-14)
        assert abs(d["x_max"] - 1.3694384) <= 1e-7
        assert abs(d["y_max"] - 2.2924317) <= 1e-7
        assert abs(d["x_max"] - float(mp.acos(mp.mpf(1) / 5))) <= 1e-15
        assert abs(d["y_max"] - float(mp.acosh(5))) <= 1e-15

    def test_small_time_eccentricity(self):
        eps = angenent_oval_diagnostics(-0.01)["eccentricity"]
        assert abs(eps - 0.08147) <= 1e-4
        assert abs(math.sqrt(0.02 / 3) - 0.0816497) <= 1e-7

    @given(st.floats(-8.0, -0.01), st.floats(-0.999, 0.999))
    def test_implicit_form(self, t, frac):
        x = frac * math.acos(math.exp(t))
        y = angenent_oval_branch(t, x)
        assert abs(math.cosh(y) - math.exp(-t) * math.cos(x)) <= 1e-12 * math.exp(-t)

    @given(st.floats(-20.0, -1e-3))
    def test_curvature_ratio_identity(self, t):
        d = angenent_oval_diagnostics(t)
        assert abs(d["kappa_max"] / d["kappa_min"] - math.exp(-t)) <= 1e-12 * math.exp(-t)

    def test_sampled_curve_matches_closed_forms(self):
        oval = AngenentOval()
        curve = oval.curve(-LN5, 1024)
        v = curve.vertices
        assert np.max(np.abs(np.cosh(v[:, 1]) - 5 * np.cos(v[:, 0]))) < 1e-11
        d = diagnostics(curve)
        assert d.kappa_max / d.kappa_min == pytest.approx(5.0, rel=2e-3)


class TestPeriodic:
    def test_zero_at_origin(self):
        p = PeriodicDecay(3)
        assert periodic_decay_y(p, 0.0, -0.4) == 0.0

    def test_crest_at_tau0(self):
        p = PeriodicDecay(1)
        ref = float(mp.log(1 + mp.sqrt(2)) / mp.pi)
        assert abs(abs(periodic_decay_y(p, 0.5, 0.0)) - ref) <= 1e-15
        assert abs(abs(periodic_decay_y(p, 0.5, 0.0)) - 0.2805499) <= 1e-7

    def test_early_regime(self):
        p = PeriodicDecay(5)
        K = p.K
        for gap in (0.05, 0.1, 0.2):
            a = periodic_decay_amplitude(p, -gap)
            assert abs(a["exact"] - a["early_approx"]) <= 2 * math.exp(-2 * K * K * gap) / K + 4e-16 * a["exact"]

    def test_fig3_bound(self):
        a = periodic_decay_amplitude(PeriodicDecay(5), -0.07)
        assert abs(a["early_approx"] - 1.1437) <= 1e-4
        assert abs(a["exact"] / a["early_approx"] - 1) <= 0.01

    def test_late_regime(self):
        p = PeriodicDecay(5)
        a = periodic_decay_amplitude(p, 3.0 / p.K**2)
        assert abs(a["exact"] / a["late_approx"] - 1) <= 0.02

    def test_decay_time(self):
        a = periodic_decay_amplitude(PeriodicDecay(5, tau0=0.2), 0.0)
        assert a["decay_time"] == pytest.approx(0.2 + math.log(2) / (25 * math.pi**2), rel=1e-15)

    def test_no_overflow_far_back(self):
        y = periodic_decay_y(PeriodicDecay(5), 0.1, -50.0)
        assert np.isfinite(y) and abs(abs(y) - periodic_decay_amplitude(PeriodicDecay(5), -50.0)["early_approx"]) < 1e-9

    @given(st.integers(1, 12), st.floats(-2.0, 2.0))
    def test_dirichlet_zeros(self, n, tau):
        p = PeriodicDecay(n)
        assert abs(periodic_decay_y(p, 0.0, tau)) <= 1e-14
        assert abs(periodic_decay_y(p, 1.0, tau)) <= 1e-14


class TestEllipse:
    def test_beta_one_is_circle(self):
        c = elliptic_homothetic(1.0, 1.0, 0.5, 256)
        assert np.allclose(np.hypot(c.x, c.y), 1.0, atol=1e-14)

    def test_semi_axes(self):
        assert EllipticHomothetic(2.0, 1.0).semi_axes(0.5) == pytest.approx((1.0, 0.5))

    def test_fine_residual(self):
        sol = EllipticHomothetic(2.0, 1.0)
        res = verify_residual(sol, np.linspace(-0.6, 0.6, 7), np.array([0.5]), 1e-4)
        assert res < 1e-8

    @given(st.floats(0.3, 4.0), st.floats(-3.0, 0.9))
    def test_axis_ratio(self, beta, t):
        a, b = EllipticHomothetic(beta, 1.0).semi_axes(t)
        assert b / a == pytest.approx(1 / beta, rel=1e-14)

    def test_extinct(self):
        with pytest.raises(ExtinctError):
            EllipticHomothetic(2.0, 1.0).semi_axes(1.0)


class TestAniso:
    def test_x0_zero_without_phase(self):
        assert AnisoSeparable(1.0, 0.0).x0 == 0.0

    def test_v_at_x0(self):
        s = AnisoSeparable(1.3, 0.4)
        assert s.v(s.x0) == pytest.approx(0.4, abs=1e-15)

    def test_slope_blows_up_at_time_zero(self):
        s = AnisoSeparable(1.0, 0.0)
        assert s.w(0.0) == pytest.approx(math.pi / 2)
        with pytest.raises(DomainError):
            aniso_separable_slope(s, 0.0, 0.0)

    def test_markers_at_zero(self):
        m = aniso_separable_markers(AnisoSeparable(1.0, 0.0), 0.0)
        assert m["x_u"] == 0.0
        assert abs(m["x_l"] + HALF_COS_INTEGRAL) <= 1e-12
        assert abs(m["x_l"] + 2.6220576) <= 1e-6

    def test_markers_steady_limit(self):
        m = aniso_separable_markers(AnisoSeparable(1.0, 0.0), -80.0)
        assert abs(m["x_l"]) < 1e-6 and abs(m["x_u"] - HALF_COS_INTEGRAL) < 1e-12

    def test_markers_domain(self):
        with pytest.raises(DomainError):
            aniso_separable_markers(AnisoSeparable(1.0, 0.0), 0.5)

    def test_markers_general_R_rescale(self):
        m1 = aniso_separable_markers(AnisoSeparable(1.0, 0.0), -1.0)
        m2 = aniso_separable_markers(AnisoSeparable(2.0, 0.0), -0.25)
        assert m2["x_l"] == pytest.approx(m1["x_l"] / 2, rel=1e-12)

    def test_slope_zero_at_lower_marker(self):
        s = AnisoSeparable(1.0, 0.0)
        for t in (-4.0, -1.0):
            assert abs(aniso_separable_slope(s, s.markers(t)["x_l"], t)) < 1e-12

    @given(st.floats(-3.0, 3.0))
    @settings(max_examples=30)
    def test_dv_identity(self, x):
        s = AnisoSeparable(1.2, 0.3)
        _, cn, _ = jacobi_sn_cn_dn(s.R * (x - s.x0) / math.sqrt(2), 0.5)
        assert abs(s.dv(x) - s.R * cn) <= 1e-10

    def test_symmetry_late_and_asymmetry_early(self):
        g = AnisoSeparable(1.0, 0.0, form="graph")

        def gap(t, d=0.5):
            xl = g.markers(t)["x_l"]
            y = g.height(np.array([xl - d, xl + d]), t)
            return abs(y[1] - y[0])

        assert gap(-8.0) < 1e-3
        assert gap(-2.0) > 1e-3

    def test_curve_patch(self):
        s = AnisoSeparable(1.0, 0.0, form="graph")
        xs = np.linspace(-2.0, 0.2, 221)
        patch = aniso_separable_curve(s, -2.5, xs)
        assert np.allclose(np.gradient(patch.ys, xs, edge_order=2), s.slope(xs, -2.5), atol=1e-4)


class TestResiduals:
    def test_straight_line_is_exact(self):
        xs = np.linspace(0, 1, 11)
        ts = np.linspace(0, 1, 5)
        vals = np.tile(2 * xs + 1, (5, 1))
        assert np.max(np.abs(residual_table(xs, ts, vals, Isotropic()))) < 1e-13

    def test_grim_reaper_example(self):
        res = verify_residual(GrimReaper(1.0), np.linspace(-1.2, 1.2, 25), np.array([0.0, 1.0]), 1e-3)
        assert res < 1e-5

    @pytest.mark.parametrize("name", sorted(RESIDUAL_CASES))
    def test_second_order(self, name):
        sol, xs, ts = RESIDUAL_CASES[name]
        res, order = residual_order(sol, xs, ts)
        assert res < 1e-5
        assert abs(order - 2) <= 0.5

    @pytest.mark.parametrize("k,xs,ts", [
        (1, (-1.0, 1.0), (0.0, 0.5)),
        (2, (-1.0, 1.0), (-2.0, -1.5)),
        (6, (-0.8, 0.8), (-3.0, -2.5)),
        (7, (-2.5, 2.5), (0.0, 0.5)),
    ])
    def test_graph_forms(self, k, xs, ts):
        sol = DVSlopeFamily(k, form="graph")
        res, order = residual_order(sol, np.linspace(*xs, 7), np.linspace(*ts, 3))
        assert res < 1e-5 and abs(order - 2) <= 0.5

    def test_guard_distance(self):
        with pytest.raises(DomainError):
            verify_residual(GrimReaper(1.0), np.array([1.565]), np.array([0.0]), 1e-3)


class TestRegistry:
    def test_all_families_constructible(self):
        defaults = {"dv_slope": {"k": 1}, "aniso": {"R": 1.0}}
        for name in FAMILIES:
            sol = make_family(name, **defaults.get(name, {}))
            d = sol.describe()
            assert set(d) >= {"kind", "parameters", "domain", "pde", "model"}
            assert d["domain"]

    def test_unknown_family(self):
        with pytest.raises(DomainError):
            make_family("spiral")
