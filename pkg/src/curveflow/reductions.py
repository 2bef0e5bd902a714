"""Similarity and travelling-wave reductions of the slope equation.

* grooves: ``u = F(x / sqrt t)`` with ``F(0) = m``, ``F(inf) = 0``;
* homothetic closed curves: ``u = F(x / sqrt(-t))`` with ``F(0) = 0`` and a
  vertical tangent at a finite ``rho0``;
* steady travelling waves: ``u = K^{-1}(c x + c2)`` with ``K(u) = int_0^u D``.
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson, solve_ivp
from scipy.optimize import brentq

from .diffusivity import DiffusivityModel
from .errors import DomainError, FitError, ShootingError
from .specfun import Tolerance, gauss_legendre, invert_monotone, quad_singular

__all__ = [
    "GrooveProblem",
    "SimilarityProfile",
    "HomotheticVerdict",
    "SteadyWave",
    "solve_groove",
    "groove_depth",
    "classify_homothetic",
    "solve_homothetic_profile",
    "steady_wave",
    "large_slope_exponent",
]

ODE_RTOL = 1e-12
ODE_ATOL = 1e-14


@dataclass(frozen=True)
class GrooveProblem:
    model: DiffusivityModel
    m: float = 1.0
    rho_max: float | None = None
    tol: Tolerance = field(default_factory=lambda: Tolerance(1e-10, 1e-10))

    def __post_init__(self):
        if not self.m > 0:
            raise DomainError(f"root slope m must be positive, got {self.m}", "m > 0")
        if self.rho_max is not None and not self.rho_max > 0:
            raise DomainError("rho_max must be positive", "rho_max > 0")


@dataclass(frozen=True)
class SimilarityProfile:
    """A tabulated similarity profile ``F(rho)`` with a dense interpolant."""

    kind: str
    rho: np.ndarray
    F: np.ndarray
    model: DiffusivityModel
    meta: dict
    dense: Callable | None = field(default=None, compare=False, repr=False)
    # full ODE state (F, second component) as a dense callable, when available
    state: Callable | None = field(default=None, compare=False, repr=False)

    def __call__(self, rho):
        rho = np.asarray(rho, dtype=float)
        if self.dense is None:
            return np.interp(rho, self.rho, self.F)
        lo, hi = self.rho[0], self.rho[-1]
        if np.any((rho < lo) | (rho > hi)):
            raise DomainError(f"rho outside the tabulated range [{lo}, {hi}]", "rho in table")
        out = self.dense(rho)
        return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# groove


def _groove_rhs(model):
    def rhs(rho, state):
        F, P = state
        d = float(model.D(F))
        return [P / d, -0.5 * rho * P / d]

    return rhs


def _groove_shot(model, m, P0, rho_max, dense=False):
    # overshooting trajectories can run off to -infinity; stop them at F = -m
    def undershoot(rho, state):
        return state[0] + m

    undershoot.terminal = True
    undershoot.direction = -1
    return solve_ivp(
        _groove_rhs(model), (0.0, rho_max), [m, P0], method="DOP853",
        rtol=ODE_RTOL, atol=ODE_ATOL, dense_output=dense, events=undershoot,
    )


def solve_groove(p: GrooveProblem) -> SimilarityProfile:
    """Shoot on the root flux ``P(0) = D(m) F'(0)`` until ``F(rho_max)`` changes sign."""
    model, m = p.model, p.m
    dmax = max(float(model.D(v)) for v in np.linspace(0.0, m, 33))
    rho_max = p.rho_max if p.rho_max is not None else max(12.0, 14.0 * math.sqrt(dmax))

    def far(P0):
        sol = _groove_shot(model, m, P0, rho_max)
        if sol.status == 1:
            return -m
        if sol.status != 0:
            raise ShootingError(f"groove integration failed at P(0) = {P0}: {sol.message}")
        return sol.y[0, -1]

    # F(rho_max) is increasing in P(0): very negative flux drives F below 0
    hi = 0.0
    lo = -m * math.sqrt(dmax)
    tried = []
    for _ in range(60):
        tried.append(lo)
        if far(lo) < 0:
            break
        lo *= 2.0
    else:
        raise ShootingError(f"no sign change of F(rho_max) for P(0) in [{tried[-1]}, 0]")
    if far(hi) <= 0:
        raise ShootingError(f"F(rho_max) not positive at P(0) = 0 (bracket [{lo}, {hi}])")
    P0 = brentq(far, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=400)
    sol = _groove_shot(model, m, P0, rho_max, dense=True)
    tail = sol.y[0, -1]
    if abs(tail) >= p.tol.bound(m):
        raise ShootingError(f"far field not converged: |F(rho_max)| = {abs(tail):.3e} >= tol", )
    rho = np.linspace(0.0, rho_max, 4001)
    F = sol.sol(rho)[0]
    F[0] = m
    significant = F > p.tol.bound(m)
    if np.any(np.diff(F[significant]) >= 0):
        raise ShootingError("groove profile is not monotone decreasing")
    d0 = float(model.D(m))
    meta = {
        "m": m,
        "root_flux": P0,
        "slope_at_root": P0 / d0,
        "rho_max": rho_max,
        "far_value": tail,
        "far_flux": sol.y[1, -1],
        "tol": p.tol.abs_tol,
    }
    return SimilarityProfile("groove", rho, F, model, meta, lambda r, s=sol: s.sol(r)[0], sol.sol)


def groove_depth(profile: SimilarityProfile, t: float = 1.0, tol: Tolerance | None = None) -> float:
    """``sqrt(t) int_0^inf F``: quadrature of the dense profile plus the exact tail identity."""
    if profile.kind != "groove":
        raise DomainError("depth is defined for groove profiles", "groove profile")
    if t < 0:
        raise DomainError("time must be non-negative", "t >= 0")
    tol = tol or Tolerance(1e-10, 1e-10)
    rho, F = profile.rho, profile.F
    if abs(F[-1]) >= tol.bound(profile.meta["m"]):
        raise ShootingError(f"tail not converged: F(rho_max) = {F[-1]:.3e}")
    if profile.dense is not None:
        body = quad_singular(profile.dense, float(rho[0]), float(rho[-1]), Tolerance(1e-13, 1e-13, 4000), "none")
    else:
        body = float(cumulative_simpson(F, x=rho)[-1])
    # int_R^inf F = -2 D(F_R) F'_R - R F_R, from integrating the ODE over (R, inf)
    R = rho[-1]
    tail = -2.0 * profile.meta["far_flux"] - R * profile.meta["far_value"]
    return math.sqrt(t) * (body + tail)


# ---------------------------------------------------------------------------
# homothetic closed curves


@dataclass(frozen=True)
class HomotheticVerdict:
    exists: bool
    n: float
    cases: list
    physical: bool
    coefficient: float | None = None

    def to_dict(self):
        return {
            "exists": self.exists, "n": self.n, "cases": self.cases,
            "physical": self.physical, "coefficient": self.coefficient,
        }


def large_slope_exponent(model: DiffusivityModel) -> tuple[float, float]:
    """``(n, coeff)`` with ``D ~ coeff u^n``: metadata if known, else a fit on [1e2, 1e4]."""
    meta = model.large_slope
    if meta is not None:
        return float(meta[0]), float(meta[1])
    u = np.geomspace(1e2, 1e4, 21)
    try:
        d = np.asarray(model.D(u), dtype=float)
    except DomainError as exc:
        raise FitError(f"diffusivity undefined at large slope: {exc}") from exc
    if not np.all(np.isfinite(d)) or np.any(d <= 0):
        raise FitError("diffusivity is not positive at large slope")
    slope, icpt = np.polyfit(np.log(u), np.log(d), 1)
    resid = np.log(d) - (slope * np.log(u) + icpt)
    if np.max(np.abs(resid)) > 1e-2:
        raise FitError(f"large-slope behaviour is not a power law (max log residual {np.max(np.abs(resid)):.2e})")
    if abs(slope - round(slope)) < 1e-3:
        slope = float(round(slope))
        icpt = float(np.mean(np.log(d) - slope * np.log(u)))
    return float(slope), float(math.exp(icpt))


def classify_homothetic(model: DiffusivityModel) -> HomotheticVerdict:
    """Leading-order balance at the blow-up point of ``F ~ A0 (rho0 - rho)^nu``.

    Case i balances the two derivative terms (``nu = 1/n``, needs ``n < -1``);
    case ii balances the drift against the nonlinear term (``nu = 1/(n + 1)``,
    needs ``n < -2``).  Only ``n = -2`` matches curve shortening flow.
    """
    n, coeff = large_slope_exponent(model)
    cases = []
    if n < -1:
        cases.append({"case": "i", "nu": 1.0 / n, "relation": "rho0 = -2 nu D0 A0^(1/nu)"})
    if n < -2:
        cases.append({"case": "ii", "nu": 1.0 / (n + 1.0), "relation": "drift balances nonlinear diffusion"})
    return HomotheticVerdict(bool(cases), n, cases, n == -2.0, coeff)


def _homothetic_rhs(model):
    def rhs(rho, state):
        F, G, _ = state
        d = float(model.D(F))
        dd = float(model.dD(F))
        return [G, (0.5 * rho * G - dd * G * G) / d, F]

    return rhs


def _blowup_event(cap):
    def ev(rho, state):
        return state[0] - cap

    ev.terminal = True
    ev.direction = 1
    return ev


def _homothetic_shot(model, s, rho_max, cap, nu, dense=False):
    """Integrate from F(0) = 0, F'(0) = s; returns (closure residual, rho0 estimate, solution)."""
    sol = solve_ivp(
        _homothetic_rhs(model), (0.0, rho_max), [0.0, s, 0.0], method="DOP853",
        rtol=ODE_RTOL, atol=ODE_ATOL, events=_blowup_event(cap), dense_output=dense,
    )
    if sol.status != 1:
        return None, None, sol
    rho_c, (F_c, G_c, I_c) = sol.t_events[0][0], sol.y_events[0][0]
    # F ~ A0 (rho0 - rho)^nu  =>  rho0 - rho = -nu F / F'
    gap = -nu * F_c / G_c
    tail = F_c * gap / (nu + 1.0)
    d0 = float(model.D(0.0))
    closure = -2.0 * d0 * s + I_c + tail
    return closure, rho_c + gap, sol


def solve_homothetic_profile(
    model: DiffusivityModel,
    tol: Tolerance | None = None,
    rho_max: float = 50.0,
    cap: float = 1e6,
    s_range: tuple[float, float] = (1e-3, 1e3),
    scan: int = 31,
) -> SimilarityProfile:
    """Shoot on ``F'(0)`` for a profile that blows up at ``rho0`` and closes the curve.

    With ``G = rho F - 2 D(F) F'`` one has ``G' = F``; the curve closes up
    exactly when ``G(rho0) = -2 D(0) F'(0) + int_0^rho0 F`` vanishes.  All
    sign changes found on a geometric scan of ``F'(0)`` are refined and
    reported; the first root is returned as the profile.
    """
    tol = tol or Tolerance(1e-10, 1e-10)
    verdict = classify_homothetic(model)
    case_i = [c for c in verdict.cases if c["case"] == "i"]
    if not case_i:
        raise ShootingError(f"no homothetic blow-up for large-slope exponent n = {verdict.n}")
    nu = case_i[0]["nu"]

    def closure(s):
        c, _, _ = _homothetic_shot(model, s, rho_max, cap, nu)
        return c

    grid = np.geomspace(s_range[0], s_range[1], scan)
    vals = [closure(s) for s in grid]
    if all(v is None for v in vals):
        raise ShootingError(f"no blow-up before rho = {rho_max} for F'(0) in {s_range}: profile stays bounded")
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa is None or fb is None or np.sign(fa) == np.sign(fb):
            continue
        roots.append(brentq(closure, a, b, xtol=1e-300, rtol=tol.rel_tol * 1e-3, maxiter=400))
    if not roots:
        raise ShootingError(f"closure residual has no sign change for F'(0) in {s_range}")
    s = roots[0]
    _, rho0, sol = _homothetic_shot(model, s, rho_max, cap, nu, dense=True)

    eps = np.geomspace(1e-6, 1e-3, 25)
    Fe = sol.sol(rho0 - eps)[0]
    nu_fit, logA = np.polyfit(np.log(eps), np.log(Fe), 1)
    A0 = math.exp(logA)
    coeff = verdict.coefficient
    relation = -2.0 * nu * coeff * A0 ** (1.0 / nu) if coeff is not None else float("nan")
    if abs(nu_fit - nu) > 0.05 * abs(nu):
        warnings.warn(f"blow-up exponent {nu_fit:.4f} deviates from {nu:.4f} by more than 5%", RuntimeWarning)
    rho_end = sol.t[-1]
    rho = np.linspace(0.0, rho_end, 2001)
    meta = {
        "rho0": rho0,
        "slope_at_origin": s,
        "roots": roots,
        "nu": nu,
        "nu_fit": float(nu_fit),
        "A0_fit": A0,
        "D_inf": coeff,
        "relation_rho0": relation,
        "F_cap": cap,
        "tol": tol.abs_tol,
    }
    return SimilarityProfile("homothetic", rho, sol.sol(rho)[0], model, meta, lambda r, so=sol: so.sol(r)[0])


# ---------------------------------------------------------------------------
# steady travelling waves


@dataclass(frozen=True)
class SteadyWave:
    """``u_s(x) = K^{-1}(c x + c2)`` tabulated in the angle ``theta = arctan u``."""

    model: DiffusivityModel
    c: float
    c2: float
    theta: np.ndarray = field(repr=False)
    K_table: np.ndarray = field(repr=False)
    Y_table: np.ndarray = field(repr=False)
    K_infinity: float
    K_minus_infinity: float
    asymptotes: tuple | None

    def K(self, u):
        """``int_0^u D(s) ds`` by the table plus Gauss-Legendre inside one cell."""
        th = np.arctan(np.asarray(u, dtype=float))
        return self._integral(th, self.K_table, lambda p: np.asarray(self.model.B(np.tan(p))))

    def _integral(self, th, table, integrand):
        th = np.asarray(th, dtype=float)
        idx = np.clip(np.searchsorted(self.theta, th) - 1, 0, self.theta.size - 2)
        start = self.theta[idx]
        out = table[idx] + gauss_legendre(integrand, start, th, 24)
        return float(out) if np.ndim(out) == 0 else out

    def K_inverse(self, k):
        """Slope u with K(u) = k; domain error outside (K(-inf), K(inf))."""
        k = np.asarray(k, dtype=float)
        if np.any((k <= self.K_minus_infinity) | (k >= self.K_infinity)):
            raise DomainError("value outside the range of K", "K(-inf) < k < K(inf)")
        tol = Tolerance(1e-15, 1e-15, 400)
        flat = []
        for v in k.ravel():
            j = int(np.clip(np.searchsorted(self.K_table, v) - 1, 0, self.theta.size - 2))
            # one extra cell on each side: table knots carry rounding in K
            lo, hi = self.theta[max(j - 1, 0)], self.theta[min(j + 2, self.theta.size - 1)]
            th = invert_monotone(lambda p: float(self._theta_K(p)), float(v), (lo, hi), tol)
            flat.append(math.tan(th))
        out = np.array(flat).reshape(k.shape)
        return float(out) if out.ndim == 0 else out

    def _theta_K(self, th):
        return self._integral(th, self.K_table, lambda p: np.asarray(self.model.B(np.tan(p))))

    def slope(self, x):
        return self.K_inverse(self.c * np.asarray(x, dtype=float) + self.c2)

    def height(self, x, t=0.0):
        """``c t + int u_s dx``, zero at the point where ``u_s = 0``."""
        u = np.asarray(self.slope(x))
        th = np.arctan(u)
        integrand = lambda p: np.tan(p) * np.asarray(self.model.B(np.tan(p)))
        return self.c * np.asarray(t) + np.asarray(self._integral(th, self.Y_table, integrand)) / self.c

    def to_dict(self):
        return {
            "model": self.model.to_dict(), "c": self.c, "c2": self.c2,
            "K_infinity": self.K_infinity, "K_minus_infinity": self.K_minus_infinity,
            "asymptotes": list(self.asymptotes) if self.asymptotes else None,
        }


def _k_limit(model, side: int) -> float:
    n, _ = large_slope_exponent(model)
    if n >= -1:
        return side * math.inf
    return quad_singular(lambda p: np.asarray(model.B(np.tan(p))), 0.0, side * 0.5 * math.pi, None, "right")


def steady_wave(model: DiffusivityModel, c: float, c2: float = 0.0, cells: int = 2000,
                theta_max: float = 0.5 * math.pi - 1e-6) -> SteadyWave:
    if c == 0:
        raise DomainError("wave speed must be nonzero", "c != 0")
    theta = np.linspace(-theta_max, theta_max, cells + 1)
    B = lambda p: np.asarray(model.B(np.tan(p)))
    TB = lambda p: np.tan(p) * np.asarray(model.B(np.tan(p)))
    pieces = gauss_legendre(B, theta[:-1], theta[1:], 24)
    ypieces = gauss_legendre(TB, theta[:-1], theta[1:], 24)
    mid = cells // 2
    K_table = np.concatenate([[0.0], np.cumsum(pieces)])
    K_table -= K_table[mid]
    Y_table = np.concatenate([[0.0], np.cumsum(ypieces)])
    Y_table -= Y_table[mid]
    kp, km = _k_limit(model, 1), _k_limit(model, -1)
    asym = None
    if math.isfinite(kp) and math.isfinite(km):
        asym = tuple(sorted(((kp - c2) / c, (km - c2) / c)))
    return SteadyWave(model, float(c), float(c2), theta, K_table, Y_table, kp, km, asym)
