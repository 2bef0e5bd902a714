"""Direct numerical evolution of graphs, slopes and closed curves.

* :func:`evolve_graph` solves ``y_t = D(y_x) y_xx``;
* :func:`evolve_slope` solves ``u_t = (D(u) u_x)_x`` in conservative form;
* :func:`evolve_closed` moves polygon vertices with the discrete curvature
  vector and redistributes them uniformly in arclength after every step.

Both 1D solvers default to backward Euler with the diffusivity lagged one
step, so each step is one tridiagonal solve.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .diffusivity import DiffusivityModel
from .errors import DomainError, ExtinctError, FlowError
from .geometry import GraphPatch, PlaneCurve, diagnostics, resample_closed

__all__ = [
    "Dirichlet",
    "Neumann",
    "GraphFlowProblem",
    "ClosedCurveFlowProblem",
    "FlowResult",
    "evolve_graph",
    "evolve_slope",
    "evolve_closed",
    "measure_wave_speed",
    "detect_extinction",
    "curvature_vector",
    "area_rate",
]


@dataclass(frozen=True)
class Dirichlet:
    """Prescribed value (a number or a function of time)."""

    value: float | Callable[[float], float] = 0.0

    def at(self, t: float) -> float:
        return float(self.value(t)) if callable(self.value) else float(self.value)


@dataclass(frozen=True)
class Neumann:
    """Prescribed x-derivative; zero means no flux for :func:`evolve_slope`."""

    slope: float | Callable[[float], float] = 0.0

    def at(self, t: float) -> float:
        return float(self.slope(t)) if callable(self.slope) else float(self.slope)


Boundary = Dirichlet | Neumann


@dataclass(frozen=True)
class GraphFlowProblem:
    model: DiffusivityModel
    initial: GraphPatch
    dt: float
    t_end: float
    left: Boundary = field(default_factory=Dirichlet)
    right: Boundary = field(default_factory=Dirichlet)
    scheme: str = "semi-implicit"
    snapshots: int = 2
    slope_cap: float = 1e6

    def __post_init__(self):
        if not self.dt > 0:
            raise DomainError(f"time step must be positive, got {self.dt}", "dt > 0")
        if not self.t_end > self.initial.time_stamp:
            raise DomainError("t_end must exceed the initial time", "t_end > t_start")
        if self.scheme not in ("semi-implicit", "explicit"):
            raise DomainError(f"unknown scheme {self.scheme!r}", "scheme in {semi-implicit, explicit}")
        if self.snapshots < 2:
            raise DomainError("need at least two snapshots (initial and final)", "snapshots >= 2")

    @property
    def x_range(self) -> tuple[float, float]:
        return float(self.initial.xs[0]), float(self.initial.xs[-1])


@dataclass(frozen=True)
class ClosedCurveFlowProblem:
    initial: PlaneCurve
    t_end: float | None = None
    dt: float | None = None
    cfl: float = 0.4
    area_floor: float = 1e-3
    redistribution: str = "arclength"
    snapshots: int = 50
    max_steps: int = 2_000_000

    def __post_init__(self):
        if not self.initial.closed:
            raise DomainError("closed-curve flow needs a closed curve", "closed")
        if len(self.initial) < 64:
            raise DomainError(f"need at least 64 vertices, got {len(self.initial)}", "N >= 64")
        if self.redistribution not in ("arclength", "none"):
            raise DomainError(f"unknown redistribution {self.redistribution!r}")
        if self.dt is not None and not self.dt > 0:
            raise DomainError("time step must be positive", "dt > 0")


@dataclass
class FlowResult:
    snapshots: list
    times: np.ndarray
    wave_speed: float | None = None
    extinction_time: float | None = None
    diagnostics: list = field(default_factory=list)
    history: np.ndarray | None = None
    steps: int = 0

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if np.any(np.diff(self.times) <= 0):
            raise DomainError("snapshot times must be strictly increasing")


# ---------------------------------------------------------------------------
# 1D solvers


def _snapshot_times(t0: float, t1: float, k: int) -> np.ndarray:
    return np.linspace(t0, t1, k)


def _march(p: GraphFlowProblem, step: Callable, values: np.ndarray) -> FlowResult:
    xs = np.asarray(p.initial.xs, dtype=float)
    t = float(p.initial.time_stamp)
    targets = _snapshot_times(t, p.t_end, p.snapshots)
    snaps = [GraphPatch(xs, values.copy(), time_stamp=t)]
    steps = 0
    for target in targets[1:]:
        while t < target - 1e-12 * max(1.0, abs(target)):
            dt = min(p.dt, target - t)
            values = step(values, t, dt)
            t += dt
            steps += 1
            if not np.all(np.isfinite(values)):
                raise FlowError(f"non-finite values at t = {t}")
        t = float(target)
        snaps.append(GraphPatch(xs, values.copy(), time_stamp=t))
    return FlowResult(snaps, targets, steps=steps)


def _tridiag(lower, diag, upper, rhs):
    n = diag.size
    ab = np.zeros((3, n))
    ab[0, 1:] = upper
    ab[1] = diag
    ab[2, :-1] = lower
    return solve_banded((1, 1), ab, rhs)


def _graph_slopes(xs, y, left, right, t):
    h = np.diff(xs)
    u = np.empty_like(y)
    # nonuniform central difference, exact for quadratics
    hl, hr = h[:-1], h[1:]
    u[1:-1] = (hl**2 * y[2:] - hr**2 * y[:-2] + (hr**2 - hl**2) * y[1:-1]) / (hl * hr * (hl + hr))
    u[0] = left.at(t) if isinstance(left, Neumann) else (y[1] - y[0]) / h[0]
    u[-1] = right.at(t) if isinstance(right, Neumann) else (y[-1] - y[-2]) / h[-1]
    return u


def evolve_graph(p: GraphFlowProblem) -> FlowResult:
    """March ``y_t = D(y_x) y_xx`` from ``p.initial`` to ``p.t_end``."""
    xs = np.asarray(p.initial.xs, dtype=float)
    h = np.diff(xs)
    n = xs.size
    hl, hr = h[:-1], h[1:]
    # second-difference coefficients at interior nodes
    cl = 2.0 / (hl * (hl + hr))
    cr = 2.0 / (hr * (hl + hr))
    model = p.model

    def coefficients(y, t):
        u = _graph_slopes(xs, y, p.left, p.right, t)
        if np.max(np.abs(u)) > p.slope_cap:
            raise FlowError(f"slope exceeds cap {p.slope_cap:g} at t = {t}: approaching a vertical tangent")
        return np.asarray(model.D(u), dtype=float)

    def operator(d, t_new):
        lower = np.zeros(n - 1)
        diag = np.zeros(n)
        upper = np.zeros(n - 1)
        extra = np.zeros(n)
        lower[:-1] = d[1:-1] * cl
        diag[1:-1] = -d[1:-1] * (cl + cr)
        upper[1:] = d[1:-1] * cr
        for side, bc, hh in ((0, p.left, h[0]), (n - 1, p.right, h[-1])):
            if isinstance(bc, Neumann):
                # ghost node mirrored about the boundary with the prescribed slope
                g = bc.at(t_new)
                k = 2.0 * d[side] / (hh * hh)
                diag[side] = -k
                if side == 0:
                    upper[0] = k
                    extra[0] = -k * hh * g
                else:
                    lower[-1] = k
                    extra[-1] = k * hh * g
        return lower, diag, upper, extra

    def step_implicit(y, t, dt):
        d = coefficients(y, t)
        lower, diag, upper, extra = operator(d, t + dt)
        rhs = y + dt * extra
        a_l, a_d, a_u = -dt * lower, 1.0 - dt * diag, -dt * upper
        for side, bc in ((0, p.left), (n - 1, p.right)):
            if isinstance(bc, Dirichlet):
                a_d[side] = 1.0
                rhs[side] = bc.at(t + dt)
                if side == 0:
                    a_u[0] = 0.0
                else:
                    a_l[-1] = 0.0
        return _tridiag(a_l, a_d, a_u, rhs)

    def step_explicit(y, t, dt):
        d = coefficients(y, t)
        if dt > 0.4 * np.min(h) ** 2 / np.max(d):
            raise FlowError(f"explicit step {dt:g} exceeds the stability limit 0.4 h^2 / max D")
        lower, diag, upper, extra = operator(d, t)
        out = y + dt * (diag * y + extra)
        out[:-1] += dt * upper * y[1:]
        out[1:] += dt * lower * y[:-1]
        for side, bc in ((0, p.left), (n - 1, p.right)):
            if isinstance(bc, Dirichlet):
                out[side] = bc.at(t + dt)
        return out

    y0 = np.asarray(p.initial.ys, dtype=float).copy()
    for side, bc in ((0, p.left), (n - 1, p.right)):
        if isinstance(bc, Dirichlet):
            y0[side] = bc.at(p.initial.time_stamp)
    return _march(p, step_implicit if p.scheme == "semi-implicit" else step_explicit, y0)


def evolve_slope(p: GraphFlowProblem) -> FlowResult:
    """March ``u_t = (D(u) u_x)_x`` with a finite-volume flux balance.

    Nodes own the control volumes between neighbouring midpoints (half
    cells at the ends).  ``Neumann(0)`` means zero flux and conserves the
    trapezoid-rule integral of u; ``Dirichlet`` pins the end value.
    """
    xs = np.asarray(p.initial.xs, dtype=float)
    h = np.diff(xs)
    n = xs.size
    vol = np.empty(n)
    vol[1:-1] = 0.5 * (h[:-1] + h[1:])
    vol[0], vol[-1] = 0.5 * h[0], 0.5 * h[-1]
    model = p.model

    def conductances(u, t):
        if np.max(np.abs(u)) > p.slope_cap:
            raise FlowError(f"slope exceeds cap {p.slope_cap:g} at t = {t}")
        return np.asarray(model.D(0.5 * (u[1:] + u[:-1])), dtype=float) / h

    def boundary_flux(bc, u_end, t):
        # flux D u_x leaving through a Neumann end, with u_x prescribed
        return float(model.D(u_end)) * bc.at(t)

    def step_implicit(u, t, dt):
        c = conductances(u, t)
        diag = vol.copy()
        lower = np.zeros(n - 1)
        upper = np.zeros(n - 1)
        diag[:-1] += dt * c
        diag[1:] += dt * c
        upper[:] = -dt * c
        lower[:] = -dt * c
        rhs = vol * u
        if isinstance(p.left, Neumann):
            rhs[0] -= dt * boundary_flux(p.left, u[0], t + dt)
        if isinstance(p.right, Neumann):
            rhs[-1] += dt * boundary_flux(p.right, u[-1], t + dt)
        for side, bc in ((0, p.left), (n - 1, p.right)):
            if isinstance(bc, Dirichlet):
                diag[side] = 1.0
                rhs[side] = bc.at(t + dt)
                if side == 0:
                    upper[0] = 0.0
                else:
                    lower[-1] = 0.0
        return _tridiag(lower, diag, upper, rhs)

    def step_explicit(u, t, dt):
        c = conductances(u, t)
        if dt > 0.4 * np.min(h) / np.max(c):
            raise FlowError(f"explicit step {dt:g} exceeds the stability limit 0.4 h^2 / max D")
        flux = c * np.diff(u)
        div = np.zeros(n)
        div[:-1] += flux
        div[1:] -= flux
        if isinstance(p.left, Neumann):
            div[0] -= boundary_flux(p.left, u[0], t)
        if isinstance(p.right, Neumann):
            div[-1] += boundary_flux(p.right, u[-1], t)
        out = u + dt * div / vol
        for side, bc in ((0, p.left), (n - 1, p.right)):
            if isinstance(bc, Dirichlet):
                out[side] = bc.at(t + dt)
        return out

    u0 = np.asarray(p.initial.ys, dtype=float).copy()
    for side, bc in ((0, p.left), (n - 1, p.right)):
        if isinstance(bc, Dirichlet):
            u0[side] = bc.at(p.initial.time_stamp)
    return _march(p, step_implicit if p.scheme == "semi-implicit" else step_explicit, u0)


# ---------------------------------------------------------------------------
# closed curves


def _forward_edges(v: np.ndarray) -> np.ndarray:
    e = np.empty_like(v)
    e[:-1] = v[1:] - v[:-1]
    e[-1] = v[0] - v[-1]
    return e


def curvature_vector(v: np.ndarray) -> np.ndarray:
    """Discrete ``kappa n`` at the vertices of a closed polygon."""
    fwd = _forward_edges(v)
    lf = np.sqrt(fwd[:, 0] ** 2 + fwd[:, 1] ** 2)
    tf = fwd / lf[:, None]
    tb = np.empty_like(tf)
    tb[1:], tb[0] = tf[:-1], tf[-1]
    lb = np.empty_like(lf)
    lb[1:], lb[0] = lf[:-1], lf[-1]
    return 2.0 * (tf - tb) / (lf + lb)[:, None]


def _shoelace(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x[:-1], y[1:]) - np.dot(x[1:], y[:-1]) + x[-1] * y[0] - x[0] * y[-1])


def evolve_closed(p: ClosedCurveFlowProblem) -> FlowResult:
    """Explicit curvature flow until ``t_end`` or until the area drops below ``area_floor``."""
    v = np.asarray(p.initial.vertices, dtype=float).copy()
    n = v.shape[0]
    if _shoelace(v) < 0:
        v = v[::-1].copy()
    area0 = _shoelace(v)
    if area0 < p.area_floor:
        raise ExtinctError(f"initial area {area0:g} already below the floor {p.area_floor:g}", "area > area_floor")
    if p.redistribution == "arclength":
        v = resample_closed(v, n)
    t = float(p.initial.time_stamp)
    hist_t, hist_a, hist_l = [t], [_shoelace(v)], [_perimeter(v)]
    snaps = [PlaneCurve(v.copy(), time_stamp=t, check_simple=False)]
    diags = [diagnostics(snaps[0])]
    # snapshots are spaced evenly in log(area) so the late, fast stage is resolved
    levels = list(np.geomspace(area0, p.area_floor, p.snapshots)[1:-1])
    steps = 0
    method = "local"
    while True:
        seg = _forward_edges(v)
        hmin = math.sqrt(float(np.min(seg[:, 0] ** 2 + seg[:, 1] ** 2)))
        dt = p.dt if p.dt is not None else p.cfl * hmin * hmin
        if p.t_end is not None:
            dt = min(dt, p.t_end - t)
        if p.dt is not None and p.dt > 0.5 * hmin * hmin:
            raise FlowError(f"time step {p.dt:g} unstable for edge length {hmin:g}")
        # Heun's method: same stability interval as forward Euler, second order in time
        k1 = curvature_vector(v)
        k2 = curvature_vector(v + dt * k1)
        v = v + 0.5 * dt * (k1 + k2)
        t += dt
        steps += 1
        if p.redistribution == "arclength":
            v = resample_closed(v, n, method)
        area = _shoelace(v)
        if not np.all(np.isfinite(v)) or area <= 0:
            raise FlowError(f"curve collapsed or became unstable at t = {t}")
        hist_t.append(t)
        hist_a.append(area)
        hist_l.append(_perimeter(v))
        done = area < p.area_floor or (p.t_end is not None and t >= p.t_end - 1e-15) or steps >= p.max_steps
        if (levels and area <= levels[0]) or done:
            while levels and area <= levels[0]:
                levels.pop(0)
            curve = PlaneCurve(v.copy(), time_stamp=t, check_simple=False)
            snaps.append(curve)
            diags.append(diagnostics(curve))
        if done:
            break
    history = np.column_stack([hist_t, hist_a, hist_l])
    result = FlowResult(snaps, [s.time_stamp for s in snaps], diagnostics=diags, history=history, steps=steps)
    if area < p.area_floor:
        result.extinction_time = detect_extinction(result)
    return result


def _perimeter(v: np.ndarray) -> float:
    seg = _forward_edges(v)
    return float(np.sum(np.sqrt(seg[:, 0] ** 2 + seg[:, 1] ** 2)))


# ---------------------------------------------------------------------------
# diagnostics


def measure_wave_speed(result: FlowResult, x_ref: float | None = None, start_fraction: float = 0.5) -> dict:
    """Least-squares speed of the height at ``x_ref`` over the later snapshots."""
    snaps = [s for s in result.snapshots if isinstance(s, GraphPatch)]
    if len(snaps) < 3:
        raise FlowError("need at least three graph snapshots to measure a speed")
    times = np.array([s.time_stamp for s in snaps])
    keep = times >= times[0] + start_fraction * (times[-1] - times[0])
    if keep.sum() < 3:
        keep = np.zeros_like(keep)
        keep[-3:] = True
    if x_ref is None:
        x_ref = 0.5 * (snaps[0].xs[0] + snaps[0].xs[-1])
    ys = np.array([np.interp(x_ref, s.xs, s.ys) for s in snaps])[keep]
    ts = times[keep]
    speed, icpt = np.polyfit(ts, ys, 1)
    resid = float(np.max(np.abs(ys - (speed * ts + icpt))))
    disp = float(abs(ys[-1] - ys[0]))
    if resid > 0.05 * disp and resid > 1e-12:
        raise FlowError(f"motion is not steady: fit residual {resid:.3e} exceeds 5% of displacement {disp:.3e}")
    result.wave_speed = float(speed)
    return {"speed": float(speed), "residual": resid, "displacement": disp}


def detect_extinction(result: FlowResult, fit_fraction: float = 0.5) -> float:
    """Extrapolate the zero of the area from a linear fit of area against time."""
    if result.history is not None:
        t, a = result.history[:, 0], result.history[:, 1]
    else:
        curves = [s for s in result.snapshots if isinstance(s, PlaneCurve) and s.closed]
        t = np.array([c.time_stamp for c in curves])
        a = np.array([abs(_shoelace(np.asarray(c.vertices))) for c in curves])
    if t.size < 3:
        raise FlowError("need at least three area samples")
    if a[-1] > 0.9 * a[0]:
        raise FlowError("insufficient shrinkage to extrapolate an extinction time")
    keep = t >= t[0] + (1 - fit_fraction) * (t[-1] - t[0])
    slope, icpt = np.polyfit(t[keep], a[keep], 1)
    if slope >= 0:
        raise FlowError("area is not decreasing")
    return float(-icpt / slope)


def area_rate(result: FlowResult) -> float:
    """Least-squares ``dA/dt`` over the recorded history."""
    if result.history is None:
        raise FlowError("no area history recorded")
    slope, _ = np.polyfit(result.history[:, 0], result.history[:, 1], 1)
    return float(slope)

