import math

import numpy as np
import pytest
from scipy.special import erfc

from curveflow.catalog import AngenentOval, GrimReaper, PeriodicDecay
from curveflow.diffusivity import BetaScaled, Constant, Isotropic
from curveflow.errors import DomainError, ExtinctError, FlowError
from curveflow.evolve import (
    ClosedCurveFlowProblem,
    Dirichlet,
    FlowResult,
    GraphFlowProblem,
    Neumann,
    area_rate,
    detect_extinction,
    evolve_closed,
    evolve_graph,
    evolve_slope,
    measure_wave_speed,
)
from curveflow.geometry import GraphPatch, PlaneCurve, diagnostics
from curveflow.transforms import Rotation, transform_points


def ellipse(a, b, n, phase=0.0):
    th = phase + np.linspace(0, 2 * math.pi, n, endpoint=False)
    return PlaneCurve(np.column_stack([a * np.cos(th), b * np.sin(th)]))


def ratios(errors):
    return [errors[i] / errors[i + 1] for i in range(len(errors) - 1)]


# ---------------------------------------------------------------------------
# graph form


def periodic_error(cells, n=1, tau0=-0.07, span=0.05):
    sol = PeriodicDecay(n)
    xs = np.linspace(0, 1, cells + 1)
    h = xs[1]
    p = GraphFlowProblem(Isotropic(), GraphPatch(xs, sol.height(xs, tau0), time_stamp=tau0), dt=0.2 * h * h,
                         t_end=tau0 + span)
    return np.max(np.abs(evolve_graph(p).snapshots[-1].ys - sol.height(xs, tau0 + span)))


def grim_reaper_error(cells, scheme="semi-implicit"):
    g = GrimReaper(1.0)
    xs = np.linspace(-1.2, 1.2, cells + 1)
    h = xs[1] - xs[0]
    p = GraphFlowProblem(Isotropic(), GraphPatch(xs, g.height(xs, 0.0)), dt=0.2 * h * h, t_end=0.5,
                         left=Dirichlet(lambda t: float(g.height(-1.2, t))),
                         right=Dirichlet(lambda t: float(g.height(1.2, t))), scheme=scheme)
    return np.max(np.abs(evolve_graph(p).snapshots[-1].ys - g.height(xs, 0.5)))


class TestGraph:
    def test_line_is_steady(self):
        xs = np.linspace(0, 2, 41)
        p = GraphFlowProblem(Isotropic(), GraphPatch(xs, 3 * xs - 1), dt=1e-3, t_end=0.5,
                             left=Neumann(3.0), right=Neumann(3.0))
        assert np.max(np.abs(evolve_graph(p).snapshots[-1].ys - (3 * xs - 1))) < 1e-12

    def test_periodic_second_order(self):
        r = ratios([periodic_error(c) for c in (40, 80, 160)])
        assert all(3.5 <= q <= 4.5 for q in r)

    def test_periodic_steep_second_order(self):
        r = ratios([periodic_error(c, 5, -0.01, 0.01) for c in (100, 200, 400)])
        assert all(3.5 <= q <= 4.5 for q in r)

    @pytest.mark.parametrize("scheme", ["semi-implicit", "explicit"])
    def test_grim_reaper_second_order(self, scheme):
        r = ratios([grim_reaper_error(c, scheme) for c in (40, 80, 160)])
        assert all(3.5 <= q <= 4.5 for q in r)

    def test_schemes_agree(self):
        assert abs(grim_reaper_error(80, "explicit") - grim_reaper_error(80)) < 1e-5

    def test_grim_reaper_speed_between_walls(self):
        a = 1.4
        g = math.tan(a)
        xs = np.linspace(-a, a, 281)
        p = GraphFlowProblem(Isotropic(), GraphPatch(xs, g * xs**2 / (2 * a)), dt=1e-3, t_end=6.0,
                             left=Neumann(-g), right=Neumann(g), snapshots=61)
        assert abs(measure_wave_speed(evolve_graph(p))["speed"] - 1.0) <= 0.01

    def test_maximum_principle(self):
        sol = PeriodicDecay(2)
        xs = np.linspace(0, 1, 101)
        y0 = sol.height(xs, -0.05)
        r = evolve_graph(GraphFlowProblem(Isotropic(), GraphPatch(xs, y0, time_stamp=-0.05), dt=1e-4,
                                          t_end=0.05, snapshots=11))
        lo, hi = min(y0.min(), 0.0), max(y0.max(), 0.0)
        for s in r.snapshots:
            assert s.ys.min() >= lo - 1e-14 and s.ys.max() <= hi + 1e-14

    def test_clamped_ends_do_not_move(self):
        sol = PeriodicDecay(1)
        xs = np.linspace(0, 1, 51)
        r = evolve_graph(GraphFlowProblem(Isotropic(), GraphPatch(xs, sol.height(xs, 0.0)), dt=1e-3, t_end=0.1))
        assert r.snapshots[-1].ys[0] == 0.0 and r.snapshots[-1].ys[-1] == 0.0

    def test_explicit_step_limit_enforced(self):
        xs = np.linspace(0, 1, 51)
        p = GraphFlowProblem(Constant(1.0), GraphPatch(xs, np.sin(math.pi * xs)), dt=1e-3, t_end=0.01,
                             scheme="explicit")
        with pytest.raises(FlowError):
            evolve_graph(p)

    def test_slope_cap(self):
        xs = np.linspace(0, 1, 21)
        p = GraphFlowProblem(Isotropic(), GraphPatch(xs, 5 * xs**2), dt=1e-3, t_end=0.01, slope_cap=2.0)
        with pytest.raises(FlowError):
            evolve_graph(p)

    def test_validation(self):
        xs = np.linspace(0, 1, 11)
        with pytest.raises(DomainError):
            GraphFlowProblem(Isotropic(), GraphPatch(xs, xs), dt=0.0, t_end=1.0)
        with pytest.raises(DomainError):
            GraphFlowProblem(Isotropic(), GraphPatch(xs, xs), dt=0.1, t_end=0.0)
        with pytest.raises(DomainError):
            GraphFlowProblem(Isotropic(), GraphPatch(xs, xs), dt=0.1, t_end=1.0, scheme="leapfrog")

    def test_snapshot_times(self):
        xs = np.linspace(0, 1, 11)
        r = evolve_graph(GraphFlowProblem(Isotropic(), GraphPatch(xs, 0 * xs), dt=0.03, t_end=1.0, snapshots=5))
        assert np.allclose(r.times, [0, 0.25, 0.5, 0.75, 1.0])
        assert np.all(np.diff(r.times) > 0)


# ---------------------------------------------------------------------------
# slope form


def erfc_error(cells, L=10.0):
    xs = np.linspace(0, L, cells + 1)
    h = xs[1]
    p = GraphFlowProblem(Constant(1.0), GraphPatch(xs, erfc(xs / 2), time_stamp=1.0), dt=0.5 * h * h, t_end=2.0,
                         left=Dirichlet(1.0), right=Dirichlet(lambda t: float(erfc(L / (2 * math.sqrt(t))))))
    return np.max(np.abs(evolve_slope(p).snapshots[-1].ys - erfc(xs / (2 * math.sqrt(2)))))


class TestSlope:
    def test_constant_stays(self):
        xs = np.linspace(0, 1, 21)
        r = evolve_slope(GraphFlowProblem(Isotropic(), GraphPatch(xs, np.full(21, 0.7)), dt=1e-2, t_end=1.0,
                                          left=Neumann(0.0), right=Neumann(0.0)))
        assert np.max(np.abs(r.snapshots[-1].ys - 0.7)) < 1e-14

    def test_erfc_second_order(self):
        errs = [erfc_error(c) for c in (50, 100, 200)]
        assert errs[-1] < 1e-4
        assert all(3.5 <= q <= 4.5 for q in ratios(errs))

    @pytest.mark.parametrize("scheme", ["semi-implicit", "explicit"])
    def test_zero_flux_conserves_mass(self, scheme):
        xs = np.linspace(0, 2, 81)
        h = xs[1]
        u0 = 1 + np.exp(-8 * (xs - 0.7) ** 2) * 3
        p = GraphFlowProblem(BetaScaled(2.0), GraphPatch(xs, u0), dt=0.1 * h * h, t_end=1e4 * 0.1 * h * h,
                             left=Neumann(0.0), right=Neumann(0.0), scheme=scheme)
        r = evolve_slope(p)
        assert r.steps >= 10_000
        mass = lambda u: np.trapezoid(u, xs)  # noqa: E731
        assert abs(mass(r.snapshots[-1].ys) - mass(u0)) < 1e-10

    def test_groove_like_relaxation_is_monotone(self):
        xs = np.linspace(0, 8, 161)
        p = GraphFlowProblem(Isotropic(), GraphPatch(xs, np.where(xs == 0, 1.0, 0.0), time_stamp=0.0),
                             dt=1e-3, t_end=1.0, left=Dirichlet(1.0), right=Dirichlet(0.0), snapshots=5)
        final = evolve_slope(p).snapshots[-1].ys
        assert np.all(np.diff(final) <= 1e-14) and final[0] == 1.0


# ---------------------------------------------------------------------------
# closed curves


@pytest.fixture(scope="module")
def circle_run():
    return evolve_closed(ClosedCurveFlowProblem(ellipse(1.0, 1.0, 256)))


@pytest.fixture(scope="module")
def ellipse_run():
    return evolve_closed(ClosedCurveFlowProblem(ellipse(2.0, 1.0, 256)))


class TestClosed:
    def test_circle_radius(self, circle_run):
        for s in circle_run.snapshots:
            if s.time_stamp < 0.5 - 1e-3 / math.pi:
                r = np.mean(np.hypot(s.vertices[:, 0], s.vertices[:, 1]))
                assert abs(r / math.sqrt(1 - 2 * s.time_stamp) - 1) <= 0.005

    def test_circle_extinction(self, circle_run):
        assert abs(circle_run.extinction_time - 0.5) <= 0.005
        assert abs(detect_extinction(circle_run) - 0.5) <= 0.005

    def test_area_rate(self, circle_run, ellipse_run):
        for run in (circle_run, ellipse_run):
            assert abs(area_rate(run) / (-2 * math.pi) - 1) <= 0.02

    def test_arclength_decreasing(self, ellipse_run):
        assert np.all(np.diff(ellipse_run.history[:, 2]) < 0)

    def test_ellipse_rounds(self, ellipse_run):
        rr = [d.radius_ratio for d in ellipse_run.diagnostics]
        cr = [d.curvature_ratio for d in ellipse_run.diagnostics]
        assert all(b >= a - 1e-9 for a, b in zip(rr, rr[1:]))
        assert all(b >= a - 1e-9 for a, b in zip(cr, cr[1:]))
        assert rr[-1] > 0.99 and cr[-1] > 0.99

    def test_oval_tracks_closed_form(self):
        oval = AngenentOval()
        t0 = -math.log(5)
        r = evolve_closed(ClosedCurveFlowProblem(oval.curve(t0, 512), area_floor=1e-2, snapshots=20))
        # the oval's extinction is at t = 0, so the numeric clock is the catalog clock
        for s, d in zip(r.snapshots[1:], r.diagnostics[1:]):
            if s.time_stamp >= -1e-3:
                continue
            exact = oval.diagnostics(s.time_stamp)
            ratio = d.kappa_max / d.kappa_min
            assert abs(ratio / (exact["kappa_max"] / exact["kappa_min"]) - 1) < 0.01

    @pytest.mark.parametrize("a,b", [(1.0, 1.0), (2.0, 1.0)])
    def test_rotational_equivariance(self, a, b):
        alpha = 0.6
        base = ellipse(a, b, 128)
        turned = PlaneCurve(transform_points(base.vertices, Rotation(alpha)))
        r1 = evolve_closed(ClosedCurveFlowProblem(base, t_end=0.1))
        r2 = evolve_closed(ClosedCurveFlowProblem(turned, t_end=0.1))
        v1 = transform_points(r1.snapshots[-1].vertices, Rotation(alpha))
        assert np.max(np.abs(v1 - r2.snapshots[-1].vertices)) < 1e-6

    def test_unstable_step(self):
        with pytest.raises(FlowError):
            evolve_closed(ClosedCurveFlowProblem(ellipse(1.0, 1.0, 128), t_end=0.1, dt=0.1))

    def test_already_extinct(self):
        with pytest.raises(ExtinctError):
            evolve_closed(ClosedCurveFlowProblem(ellipse(0.01, 0.01, 64)))

    def test_validation(self):
        with pytest.raises(DomainError):
            ClosedCurveFlowProblem(ellipse(1.0, 1.0, 32))
        with pytest.raises(DomainError):
            ClosedCurveFlowProblem(PlaneCurve(ellipse(1.0, 1.0, 64).vertices, closed=False))
        with pytest.raises(DomainError):
            ClosedCurveFlowProblem(ellipse(1.0, 1.0, 64), redistribution="spiral")

    def test_diagnostics_recorded(self, ellipse_run):
        assert len(ellipse_run.diagnostics) == len(ellipse_run.snapshots)
        assert ellipse_run.diagnostics[0] == diagnostics(ellipse_run.snapshots[0])


# ---------------------------------------------------------------------------
# diagnostics on synthetic data


def wave_result(c, times=np.linspace(0, 2, 11)):
    g = GrimReaper(c)
    xs = np.linspace(-1.0, 1.0, 41) / c
    return FlowResult([GraphPatch(xs, g.height(xs, t), time_stamp=t) for t in times], times)


class TestDiagnostics:
    @pytest.mark.parametrize("c", [1.0, 2.0])
    def test_wave_speed(self, c):
        assert abs(measure_wave_speed(wave_result(c))["speed"] / c - 1) <= 0.01

    def test_stationary_line(self):
        xs = np.linspace(0, 1, 11)
        times = np.linspace(0, 1, 5)
        r = FlowResult([GraphPatch(xs, 2 * xs, time_stamp=t) for t in times], times)
        assert measure_wave_speed(r)["speed"] == pytest.approx(0.0, abs=1e-14)

    def test_non_steady(self):
        xs = np.linspace(0, 1, 11)
        times = np.linspace(0, 1, 9)
        r = FlowResult([GraphPatch(xs, 0 * xs + t**4, time_stamp=t) for t in times], times)
        with pytest.raises(FlowError):
            measure_wave_speed(r, start_fraction=0.0)

    def test_too_few_snapshots(self):
        with pytest.raises(FlowError):
            measure_wave_speed(wave_result(1.0, np.array([0.0, 1.0])))

    def test_insufficient_shrinkage(self):
        r = evolve_closed(ClosedCurveFlowProblem(ellipse(1.0, 1.0, 64), t_end=0.01))
        with pytest.raises(FlowError):
            detect_extinction(r)

    def test_times_must_increase(self):
        with pytest.raises(DomainError):
            FlowResult([], [0.0, 0.0])
