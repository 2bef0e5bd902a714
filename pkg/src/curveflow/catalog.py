"""Closed-form solutions of the graph and slope forms of curve shortening flow.

Each family is an immutable value object with

* ``pde``: ``"graph"`` (``y_t = D(y_x) y_xx``) or ``"slope"``
  (``u_t = (D(u) u_x)_x``), the equation :meth:`evaluate` solves;
* ``model``: the :class:`~curveflow.diffusivity.DiffusivityModel`;
* ``evaluate(x, t)``, ``in_domain(x, t)``, ``interval(t)`` and ``describe()``.

:func:`verify_residual` substitutes any family into its PDE with central
differences; :func:`residual_table` applies the same kernel to tabulated data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .diffusivity import (
    BetaScaled,
    Constant,
    DiffusivityModel,
    DVCos,
    FunctionalDiffusivity,
    Isotropic,
    PowerLaw,
    eval_diffusivity,
    sec32_integral,
)
from .errors import DomainError, ExtinctError
from .geometry import GraphPatch, PlaneCurve, eccentricity, resample_closed
from .specfun import Tolerance, elliptic_f, elliptic_k, jacobi_sn_cn_dn, quad_singular

__all__ = [
    "DiffusivityModel",
    "Isotropic",
    "BetaScaled",
    "DVCos",
    "Constant",
    "PowerLaw",
    "FunctionalDiffusivity",
    "eval_diffusivity",
    "ExactSolution",
    "GrimReaper",
    "ShrinkingCircle",
    "AngenentOval",
    "DVSlopeFamily",
    "PeriodicDecay",
    "EllipticHomothetic",
    "AnisoSeparable",
    "FAMILIES",
    "make_family",
    "dv_slope",
    "grim_reaper",
    "shrinking_circle",
    "angenent_oval_branch",
    "angenent_oval_diagnostics",
    "periodic_decay_y",
    "periodic_decay_amplitude",
    "elliptic_homothetic",
    "aniso_separable_slope",
    "aniso_separable_markers",
    "aniso_separable_curve",
    "residual_kernel",
    "residual_table",
    "verify_residual",
]

HALF_PI = 0.5 * math.pi


def _check(mask, message: str, constraint: str) -> None:
    if not np.all(mask):
        raise DomainError(message, constraint)


def _out(v):
    v = np.asarray(v, dtype=float)
    return float(v) if v.ndim == 0 else v


class ExactSolution:
    pde: str = "graph"
    name: str = "solution"

    @property
    def model(self) -> DiffusivityModel:
        return Isotropic()

    def in_domain(self, x, t):
        raise NotImplementedError

    def interval(self, t: float) -> tuple[float, float]:
        raise NotImplementedError

    def domain_text(self) -> str:
        return ""

    def evaluate(self, x, t):
        return self.height(x, t) if self.pde == "graph" else self.slope(x, t)

    def height(self, x, t):
        raise NotImplementedError

    def slope(self, x, t):
        raise NotImplementedError

    def parameters(self) -> dict:
        return {}

    def describe(self) -> dict:
        return {
            "kind": self.name,
            "pde": self.pde,
            "parameters": self.parameters(),
            "model": self.model.to_dict(),
            "domain": self.domain_text(),
        }

    def patch(self, t: float, n: int = 201, margin: float = 0.02) -> GraphPatch:
        """Sample the graph on ``n`` nodes of :meth:`interval`, shrunk by ``margin``."""
        lo, hi = self.interval(t)
        pad = margin * (hi - lo)
        xs = np.linspace(lo + pad, hi - pad, n)
        return GraphPatch(xs, np.asarray(self.height(xs, t), dtype=float), time_stamp=t)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GrimReaper(ExactSolution):
    """Translating solution ``y = c t - log(cos(c x)) / c``."""

    c: float = 1.0
    name = "grim_reaper"

    def __post_init__(self):
        if self.c == 0:
            raise DomainError("speed c must be nonzero", "c != 0")

    def parameters(self):
        return {"c": self.c}

    def in_domain(self, x, t):
        return np.abs(self.c * np.asarray(x, dtype=float)) < HALF_PI + 0 * np.asarray(t)

    def interval(self, t):
        w = HALF_PI / abs(self.c)
        return -w, w

    def domain_text(self):
        return "|c x| < pi/2"

    @property
    def asymptote_spacing(self) -> float:
        return math.pi / abs(self.c)

    def height(self, x, t):
        x = np.asarray(x, dtype=float)
        _check(self.in_domain(x, t), "grim reaper evaluated at or beyond its asymptotes", "|c x| < pi/2")
        return _out(self.c * np.asarray(t) - np.log(np.cos(self.c * x)) / self.c)

    def slope(self, x, t):
        x = np.asarray(x, dtype=float)
        _check(self.in_domain(x, t), "grim reaper evaluated at or beyond its asymptotes", "|c x| < pi/2")
        return _out(np.tan(self.c * x) + 0 * np.asarray(t))


def grim_reaper(c: float, x, t):
    return GrimReaper(c).height(x, t)


@dataclass(frozen=True)
class ShrinkingCircle(ExactSolution):
    """Circle about the origin of radius ``sqrt(2 (t0 - t))``; graph = upper or lower half."""

    t0: float = 0.0
    branch: int = 1
    name = "circle"

    def parameters(self):
        return {"t0": self.t0, "branch": self.branch}

    def radius(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t >= self.t0):
            raise ExtinctError(f"circle is extinct at t >= t0 = {self.t0}", "t < t0")
        return _out(np.sqrt(2.0 * (self.t0 - t)))

    def in_domain(self, x, t):
        x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
        return (t < self.t0) & (x * x < 2.0 * (self.t0 - t))

    def interval(self, t):
        r = self.radius(t)
        return -r, r

    def domain_text(self):
        return "t < t0, x^2 < 2 (t0 - t)"

    def height(self, x, t):
        x = np.asarray(x, dtype=float)
        r = self.radius(t)
        _check(x * x < r * r, "abscissa outside the circle", "x^2 < 2 (t0 - t)")
        return _out(self.branch * np.sqrt(r * r - x * x))

    def slope(self, x, t):
        x = np.asarray(x, dtype=float)
        r = self.radius(t)
        _check(x * x < r * r, "abscissa outside the circle", "x^2 < 2 (t0 - t)")
        return _out(-self.branch * x / np.sqrt(r * r - x * x))

    def curve(self, t: float, n: int = 256) -> PlaneCurve:
        r = self.radius(t)
        th = np.linspace(0, 2 * math.pi, n, endpoint=False)
        return PlaneCurve(np.column_stack([r * np.cos(th), r * np.sin(th)]), time_stamp=t)


def shrinking_circle(t0: float, t: float) -> float:
    return ShrinkingCircle(t0).radius(t)


# ---------------------------------------------------------------------------


def _oval_time(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(t >= 0):
        raise ExtinctError("the oval is extinct for t >= 0", "t < 0")
    return t


@dataclass(frozen=True)
class AngenentOval(ExactSolution):
    """Closed solution ``cosh y = exp(-t) cos x``, extinct at t = 0.

    The explicit branch ``y = t - log(cos x + sqrt(cos^2 x - e^{2t}))`` is the
    half with ``y <= 0``; ``upper=True`` selects its mirror image.
    """

    upper: bool = False
    name = "oval"

    def parameters(self):
        return {"upper": self.upper}

    def half_width(self, t):
        t = _oval_time(t)
        # arccos(e^t) written to keep precision as t -> 0
        return _out(np.arctan2(np.sqrt(-np.expm1(2 * t)), np.exp(t)))

    def half_height(self, t):
        t = _oval_time(t)
        d = np.expm1(-t)
        return _out(np.log1p(d + np.sqrt(d * (2.0 + d))))

    def in_domain(self, x, t):
        x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
        ok = t < 0
        c = np.cos(x)
        return ok & (np.abs(x) < HALF_PI) & (c * c > np.exp(2 * np.where(ok, t, 0.0)))

    def interval(self, t):
        w = self.half_width(t)
        return -w, w

    def domain_text(self):
        return "t < 0, |x| < arccos(exp(t))"

    def height(self, x, t):
        x = np.asarray(x, dtype=float)
        t = _oval_time(t)
        _check(self.in_domain(x, t), "abscissa outside the oval", "|x| < arccos(exp(t))")
        c = np.cos(x)
        y = t - np.log(c + np.sqrt(c * c - np.exp(2 * t)))
        return _out(-y if self.upper else y)

    def slope(self, x, t):
        x = np.asarray(x, dtype=float)
        t = _oval_time(t)
        _check(self.in_domain(x, t), "abscissa outside the oval", "|x| < arccos(exp(t))")
        c = np.cos(x)
        u = np.sin(x) / np.sqrt(c * c - np.exp(2 * t))
        return _out(-u if self.upper else u)

    def curvature(self, x, t):
        """Curvature ``e^{-t} cos x / sqrt(e^{-2t} - 1)`` at abscissa x of either branch."""
        t = _oval_time(t)
        return _out(np.exp(-t) * np.cos(x) / np.sqrt(np.expm1(-2 * t)))

    def diagnostics(self, t: float) -> dict:
        t = float(_oval_time(t))
        root = math.sqrt(math.expm1(-2 * t))
        xm = self.half_width(t)
        ym = self.half_height(t)
        return {
            "x_max": xm,
            "y_max": ym,
            "kappa_max": math.exp(-t) / root,
            "kappa_min": 1.0 / root,
            "eccentricity": eccentricity(xm, ym),
        }

    def curve(self, t: float, n: int = 512) -> PlaneCurve:
        """Counterclockwise polygon on the oval, equally spaced in arclength."""
        t = float(_oval_time(t))
        xm, ym = self.half_width(t), self.half_height(t)
        th = np.linspace(0, 2 * math.pi, 4 * n, endpoint=False)
        c, s = np.cos(th), np.sin(th)
        with np.errstate(divide="ignore"):
            hi = np.minimum(np.where(c != 0, xm / np.abs(c), np.inf), np.where(s != 0, ym / np.abs(s), np.inf))
        lo = np.zeros_like(hi)
        et = math.exp(-t)
        # f = cosh(y) - e^{-t} cos(x) is < 0 inside and >= 0 on the bounding box
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            inside = np.cosh(mid * s) - et * np.cos(mid * c) < 0
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
        r = 0.5 * (lo + hi)
        pts = resample_closed(np.column_stack([r * c, r * s]), n)
        return PlaneCurve(pts, time_stamp=t)


def angenent_oval_branch(t: float, x, upper: bool = False):
    return AngenentOval(upper).height(x, t)


def angenent_oval_diagnostics(t: float) -> dict:
    return AngenentOval().diagnostics(t)


# ---------------------------------------------------------------------------
# Separable-family slopes: u = U_k(X, T), X = sigma (x + a), T = sigma^2 (t + b)

_DV_DOMAIN = {
    1: "cos X > 0",
    2: "X^2 + 2 T < 0",
    3: "X > T",
    5: "sinh^2 X < exp(-2 T)",
    6: "cos X > exp(T)",
    7: "|X| < pi",
}


def _dv_mask(k: int, X, T):
    if k == 1:
        return np.cos(X) > 0
    if k == 2:
        return -X * X - 2 * T > 0
    if k == 3:
        return X > T
    if k == 5:
        return np.sinh(X) ** 2 < np.exp(-2 * T)
    if k == 6:
        return np.cos(X) > np.exp(T)
    return np.abs(X) < math.pi


@dataclass(frozen=True)
class DVSlopeFamily(ExactSolution):
    """Explicit isotropic solutions ``u = U_k(sigma (x + a), sigma^2 (t + b))``.

    ``form="graph"`` evaluates the matching curve ``y = Y_k(X, T) / sigma``.
    ``sign`` flips u and y (k = 3 and 5 come in +/- pairs).
    """

    k: int
    sigma: float = 1.0
    a: float = 0.0
    b: float = 0.0
    sign: int = 1
    form: str = "slope"
    name = "dv_slope"

    def __post_init__(self):
        if self.k not in _DV_DOMAIN:
            raise DomainError(f"index k must be one of 1, 2, 3, 5, 6, 7; got {self.k}", "k in {1,2,3,5,6,7}")
        if self.sigma == 0:
            raise DomainError("sigma must be nonzero", "sigma != 0")
        if self.form not in ("slope", "graph"):
            raise DomainError(f"form must be 'slope' or 'graph', got {self.form!r}")

    @property
    def pde(self):
        return self.form

    def parameters(self):
        return {"k": self.k, "sigma": self.sigma, "a": self.a, "b": self.b, "sign": self.sign, "form": self.form}

    def domain_text(self):
        return f"{_DV_DOMAIN[self.k]} with X = sigma (x + a), T = sigma^2 (t + b)"

    def _scaled(self, x, t):
        X = self.sigma * (np.asarray(x, dtype=float) + self.a)
        T = self.sigma**2 * (np.asarray(t, dtype=float) + self.b)
        return np.broadcast_arrays(X, T)

    def in_domain(self, x, t):
        X, T = self._scaled(x, t)
        return _dv_mask(self.k, X, T)

    def interval(self, t):
        T = self.sigma**2 * (t + self.b)
        k = self.k
        if k == 1:
            lo, hi = -HALF_PI, HALF_PI
        elif k == 2:
            if T >= 0:
                raise DomainError("k = 2 needs T < 0", "T < 0")
            lo, hi = -math.sqrt(-2 * T), math.sqrt(-2 * T)
        elif k == 3:
            lo, hi = T, T + 4.0
        elif k == 5:
            w = math.asinh(math.exp(-T))
            lo, hi = -w, w
        elif k == 6:
            if T >= 0:
                raise DomainError("k = 6 needs T < 0", "T < 0")
            w = math.acos(math.exp(T))
            lo, hi = -w, w
        else:
            lo, hi = -math.pi, math.pi
        ends = sorted((lo / self.sigma - self.a, hi / self.sigma - self.a))
        return ends[0], ends[1]

    def _guard(self, x, t):
        X, T = self._scaled(x, t)
        _check(_dv_mask(self.k, X, T), f"(x, t) outside the real domain of U_{self.k}", _DV_DOMAIN[self.k])
        return X, T

    def slope(self, x, t):
        X, T = self._guard(x, t)
        k = self.k
        if k == 1:
            u = np.tan(X)
        elif k == 2:
            u = X / np.sqrt(-X * X - 2 * T)
        elif k == 3:
            u = 1.0 / np.sqrt(np.expm1(2 * (X - T)))
        elif k == 5:
            u = np.cosh(X) / np.sqrt(np.exp(-2 * T) - np.sinh(X) ** 2)
        elif k == 6:
            u = np.sin(X) / np.sqrt(np.cos(X) ** 2 - np.exp(2 * T))
        else:
            u = np.sin(X) / np.sqrt(np.cos(X) ** 2 + np.exp(2 * T))
        return _out(self.sign * u)

    def height(self, x, t):
        X, T = self._guard(x, t)
        k = self.k
        if k == 1:
            Y = T - np.log(np.cos(X))
        elif k == 2:
            Y = -np.sqrt(-X * X - 2 * T)
        elif k == 3:
            Y = np.arccos(np.exp(T - X))
        elif k == 5:
            Y = np.arcsin(np.exp(T) * np.sinh(X))
        elif k == 6:
            c = np.cos(X)
            Y = T - np.log(c + np.sqrt(c * c - np.exp(2 * T)))
        else:
            Y = -np.arcsinh(np.exp(-T) * np.cos(X))
        return _out(self.sign * Y / self.sigma)


def dv_slope(family: DVSlopeFamily, x, t):
    return family.slope(x, t)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PeriodicDecay(ExactSolution):
    """Decaying periodic graph ``Y = sign asinh(sin(K X) exp(-K^2 (tau - tau0))) / K``.

    Vanishes at multiples of ``ell / n``; ``K = n pi / ell``.  The evaluation
    variables are ``(X, tau)`` and the PDE is the isotropic graph equation.
    """

    n: int = 1
    ell: float = 1.0
    tau0: float = 0.0
    sign: int = -1
    name = "periodic"

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"mode number n must be a positive integer, got {self.n}", "n >= 1")
        if not self.ell > 0:
            raise DomainError(f"period length must be positive, got {self.ell}", "ell > 0")

    @property
    def K(self) -> float:
        return self.n * math.pi / self.ell

    def parameters(self):
        return {"n": self.n, "ell": self.ell, "tau0": self.tau0, "sign": self.sign, "K": self.K}

    def in_domain(self, x, t):
        x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
        return np.isfinite(x) & np.isfinite(t)

    def interval(self, t):
        return 0.0, self.ell

    def domain_text(self):
        return "all real X, tau"

    def _asinh_scaled(self, a, s):
        # asinh(a e^{-s}) without overflowing e^{-s}
        a, s = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(s, dtype=float))
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            logz = np.log(np.abs(a)) - s
            big = logz > 0
            direct = np.where(s > -700, a * np.exp(np.where(s > -700, -s, 0.0)), np.sign(a) * np.exp(logz))
            small_val = np.arcsinh(np.where(big, 0.0, direct))
            big_val = np.sign(a) * (logz + np.log1p(np.sqrt(1.0 + np.exp(-2.0 * np.where(big, logz, 0.0)))))
        return np.where(big, big_val, small_val)

    def _phase(self, x):
        # sin and cos of K x = pi z with z = n x / ell, exact at integer z
        z = self.n * np.asarray(x, dtype=float) / self.ell
        r = z - 2.0 * np.round(0.5 * z)  # in [-1, 1]
        folded = np.where(r > 0.5, 1.0 - r, np.where(r < -0.5, -1.0 - r, r))
        sn = np.sin(math.pi * folded)
        cs = np.where(np.abs(r) > 0.5, -1.0, 1.0) * np.cos(math.pi * folded)
        return sn, cs

    def height(self, x, t):
        K = self.K
        s = K * K * (np.asarray(t, dtype=float) - self.tau0)
        sn, _ = self._phase(x)
        return _out(self.sign * self._asinh_scaled(sn, s) / K)

    def slope(self, x, t):
        K = self.K
        s = K * K * (np.asarray(t, dtype=float) - self.tau0)
        sn, cs = self._phase(x)
        # d/dX asinh(sin(KX) e^{-s}) / K = cos(KX) / sqrt(e^{2s} + sin^2(KX))
        with np.errstate(over="ignore"):
            u = cs / np.sqrt(np.exp(2 * s) + sn * sn)
        return _out(self.sign * u)

    def amplitude(self, tau: float) -> dict:
        K = self.K
        s = K * K * (tau - self.tau0)
        exact = float(self._asinh_scaled(1.0, s)) / K
        return {
            "exact": exact,
            "early_approx": K * (self.tau0 - tau) + math.log(2.0) / K,
            "late_approx": math.exp(-s) / K if s > -700 else math.inf,
            "decay_time": self.tau0 + math.log(2.0) / (K * K),
        }


def periodic_decay_y(p: PeriodicDecay, X, tau):
    return p.height(X, tau)


def periodic_decay_amplitude(p: PeriodicDecay, tau: float) -> dict:
    return p.amplitude(tau)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EllipticHomothetic(ExactSolution):
    """Shrinking ellipse ``x^2 + beta^2 y^2 = 2 (t0 - t)`` for ``D = 1/(1 + (beta u)^2)``."""

    beta: float = 1.0
    t0: float = 0.0
    branch: int = 1
    name = "ellipse"

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError(f"beta must be positive, got {self.beta}", "beta > 0")

    @property
    def model(self):
        return BetaScaled(self.beta)

    def parameters(self):
        return {"beta": self.beta, "t0": self.t0, "branch": self.branch}

    def semi_axes(self, t) -> tuple[float, float]:
        t = float(t)
        if t >= self.t0:
            raise ExtinctError(f"ellipse is extinct at t >= t0 = {self.t0}", "t < t0")
        r = math.sqrt(2.0 * (self.t0 - t))
        return r, r / self.beta

    def in_domain(self, x, t):
        x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
        return (t < self.t0) & (x * x < 2.0 * (self.t0 - t))

    def interval(self, t):
        r, _ = self.semi_axes(t)
        return -r, r

    def domain_text(self):
        return "t < t0, x^2 < 2 (t0 - t)"

    def _root(self, x, t):
        x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
        if np.any(t >= self.t0):
            raise ExtinctError(f"ellipse is extinct at t >= t0 = {self.t0}", "t < t0")
        q = 2.0 * (self.t0 - t) - x * x
        _check(q > 0, "abscissa outside the ellipse", "x^2 < 2 (t0 - t)")
        return x, np.sqrt(q)

    def height(self, x, t):
        _, q = self._root(x, t)
        return _out(self.branch * q / self.beta)

    def slope(self, x, t):
        x, q = self._root(x, t)
        return _out(-self.branch * x / (self.beta * q))

    def curve(self, t: float, n: int = 256) -> PlaneCurve:
        ax, ay = self.semi_axes(t)
        th = np.linspace(0, 2 * math.pi, n, endpoint=False)
        return PlaneCurve(np.column_stack([ax * np.cos(th), ay * np.sin(th)]), time_stamp=t)


def elliptic_homothetic(beta: float, t0: float, t: float, n: int = 256) -> PlaneCurve:
    return EllipticHomothetic(beta, t0).curve(t, n)


# ---------------------------------------------------------------------------


def _half_lemniscate(theta):
    """``int_0^theta (cos s)^(-1/2) ds`` for ``|theta| <= pi/2`` via F(.|1/2)."""
    theta = np.asarray(theta, dtype=float)
    arg = np.clip(math.sqrt(2.0) * np.sin(0.5 * theta), -1.0, 1.0)
    return math.sqrt(2.0) * np.asarray(elliptic_f(np.arcsin(arg), 0.5))


_K_HALF = elliptic_k(0.5)


@dataclass(frozen=True)
class AnisoSeparable(ExactSolution):
    """Separable solution ``z = v(x) + w(t)`` of the slope equation for :class:`DVCos`.

    ``w = 2 arctan(exp(R^2 D0 t / 2)) - delta`` and
    ``v = 2 arcsin(sn(R (x - x0) / sqrt 2 | 1/2) / sqrt 2) + delta``; the slope is
    ``u = int_0^z (cos s)^(-3/2) ds / A``.  ``form="graph"`` integrates u in x
    from the fixed abscissa ``x_l(gauge_time)`` and adds the time integral of
    the flux there, which fixes the vertical translation.
    """

    R: float = 1.0
    delta: float = 0.0
    A: float = 1.0
    D0: float = 1.0
    gauge_time: float = 0.0
    form: str = "slope"
    name = "aniso"

    def __post_init__(self):
        if self.R == 0:
            raise DomainError("R must be nonzero", "R != 0")
        if self.form not in ("slope", "graph"):
            raise DomainError(f"form must be 'slope' or 'graph', got {self.form!r}")
        if not -HALF_PI < self.delta < HALF_PI:
            raise DomainError("delta must lie in (-pi/2, pi/2)", "|delta| < pi/2")

    @property
    def pde(self):
        return self.form

    @property
    def model(self):
        return DVCos(self.A, self.D0)

    def parameters(self):
        return {
            "R": self.R, "delta": self.delta, "A": self.A, "D0": self.D0,
            "gauge_time": self.gauge_time, "form": self.form,
        }

    def domain_text(self):
        return "|v(x) + w(t)| < pi/2 on the interval ending at the asymptote x_u(t)"

    @property
    def lam(self) -> float:
        return 0.5 * self.R**2 * math.sin(self.delta)

    @property
    def mu(self) -> float:
        return 0.5 * self.R**2 * math.cos(self.delta)

    @property
    def x0(self) -> float:
        return math.sqrt(2.0) / self.R * float(elliptic_f(math.asin(math.sqrt(2.0) * math.sin(0.5 * self.delta)), 0.5))

    def w(self, t):
        t = np.asarray(t, dtype=float)
        return _out(2.0 * np.arctan(np.exp(0.5 * self.R**2 * self.D0 * t)) - self.delta)

    def _scaled_x(self, x):
        return self.R * (np.asarray(x, dtype=float) - self.x0) / math.sqrt(2.0)

    def v(self, x):
        sn, _, _ = jacobi_sn_cn_dn(self._scaled_x(x), 0.5)
        return _out(2.0 * np.arcsin(np.asarray(sn) / math.sqrt(2.0)) + self.delta)

    def dv(self, x):
        _, cn, _ = jacobi_sn_cn_dn(self._scaled_x(x), 0.5)
        return _out(self.R * np.asarray(cn))

    def zbar(self, x, t):
        return _out(np.asarray(self.v(x)) + np.asarray(self.w(t)))

    def _omega(self, t):
        return np.asarray(self.w(t)) + self.delta

    def _gap_x(self, t):
        # X_u: where phi = v - delta reaches pi/2 - omega; empty interval if omega >= pi
        om = self._omega(t)
        if np.any(om >= math.pi):
            raise DomainError("w(t) + delta >= pi: no admissible x", "w + delta < pi")
        return _half_lemniscate(HALF_PI - om) / math.sqrt(2.0)

    def interval(self, t):
        Xu = float(self._gap_x(t))
        lo = -2.0 * _K_HALF - Xu
        sc = math.sqrt(2.0) / self.R
        ends = sorted((self.x0 + sc * lo, self.x0 + sc * Xu))
        return ends[0], ends[1]

    def in_domain(self, x, t):
        x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
        X = self._scaled_x(x) * np.sign(self.R)
        om = self._omega(t)
        ok = om < math.pi
        Xu = _half_lemniscate(HALF_PI - np.where(ok, om, 0.0)) / math.sqrt(2.0)
        return ok & (X < Xu) & (X > -2.0 * _K_HALF - Xu)

    def markers(self, t: float) -> dict:
        om = float(self._omega(t))
        if not 0.0 < om <= HALF_PI:
            raise DomainError(f"w(t) + delta = {om} outside (0, pi/2]", "0 < w + delta <= pi/2")
        if self.R < 0:
            raise DomainError("markers are defined for R > 0", "R > 0")
        xu = self.x0 + float(_half_lemniscate(HALF_PI - om)) / self.R
        xl = self.x0 - float(_half_lemniscate(om)) / self.R
        return {"x_u": xu, "x_l": xl}

    def slope(self, x, t):
        x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
        z = np.asarray(self.zbar(x, t))
        _check(np.abs(z) < HALF_PI, "slope blows up: |v + w| >= pi/2", "|v(x) + w(t)| < pi/2")
        _check(self.in_domain(x, t), "abscissa outside the interval bounded by the asymptotes", "x in domain(t)")
        return _out(np.asarray(sec32_integral(z)) / self.A)

    def flux(self, x, t):
        """``D(u) u_x = D0 v'(x) / (A sqrt(cos z))``."""
        z = np.asarray(self.zbar(x, t))
        return _out(self.D0 * np.asarray(self.dv(x)) / (self.A * np.sqrt(np.cos(z))))

    def _reference(self) -> float:
        om = float(self._omega(self.gauge_time))
        return self.x0 - float(_half_lemniscate(min(om, HALF_PI))) / self.R

    def _y_ref(self, t: float, tol: Tolerance) -> float:
        xr = self._reference()
        if t == self.gauge_time:
            return 0.0
        return quad_singular(lambda s: np.asarray(self.flux(xr, s)), self.gauge_time, t, tol, "none")

    def height(self, x, t, tol: Tolerance | None = None):
        tol = tol or Tolerance(1e-13, 1e-13, 4000)
        x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
        _check(self.in_domain(x, t), "abscissa outside the interval bounded by the asymptotes", "x in domain(t)")
        xr = self._reference()
        out = np.empty(x.shape)
        flat_x, flat_t, flat_o = x.ravel(), t.ravel(), out.reshape(-1)
        for tv in np.unique(flat_t):
            sel = np.nonzero(flat_t == tv)[0]
            base = self._y_ref(float(tv), tol)
            order = sel[np.argsort(flat_x[sel])]
            # integrate outward from the reference in consecutive pieces
            f = lambda s, tv=tv: np.asarray(sec32_integral(np.asarray(self.zbar(s, tv)))) / self.A
            right = [i for i in order if flat_x[i] >= xr]
            left = [i for i in order[::-1] if flat_x[i] < xr]
            for chain in (right, left):
                acc, prev = base, xr
                for i in chain:
                    acc += quad_singular(f, prev, float(flat_x[i]), tol, "none")
                    prev = float(flat_x[i])
                    flat_o[i] = acc
        return _out(out)

    def curve(self, t: float, grid) -> GraphPatch:
        grid = np.asarray(grid, dtype=float)
        return GraphPatch(grid, np.asarray(self.height(grid, t)), time_stamp=t)


def aniso_separable_slope(s: AnisoSeparable, x, t):
    return s.slope(x, t)


def aniso_separable_markers(s: AnisoSeparable, t: float) -> dict:
    return s.markers(t)


def aniso_separable_curve(s: AnisoSeparable, t: float, grid) -> GraphPatch:
    return s.curve(t, grid)


# ---------------------------------------------------------------------------

FAMILIES = {
    "grim_reaper": GrimReaper,
    "circle": ShrinkingCircle,
    "oval": AngenentOval,
    "dv_slope": DVSlopeFamily,
    "periodic": PeriodicDecay,
    "ellipse": EllipticHomothetic,
    "aniso": AnisoSeparable,
}


def make_family(name: str, **params) -> ExactSolution:
    try:
        cls = FAMILIES[name]
    except KeyError:
        raise DomainError(f"unknown family {name!r}; choose from {sorted(FAMILIES)}") from None
    return cls(**params)


# ---------------------------------------------------------------------------
# residuals


def residual_kernel(block, hx: float, ht: float, model: DiffusivityModel, pde: str):
    """PDE residual at the centre of 3x3 space-time blocks ``block[..., it, ix]``."""
    b = np.asarray(block, dtype=float)
    c = b[..., 1, 1]
    fx = (b[..., 1, 2] - b[..., 1, 0]) / (2 * hx)
    fxx = (b[..., 1, 2] - 2 * c + b[..., 1, 0]) / (hx * hx)
    ft = (b[..., 2, 1] - b[..., 0, 1]) / (2 * ht)
    if pde == "graph":
        return ft - np.asarray(model.D(fx)) * fxx
    if pde == "slope":
        return ft - (np.asarray(model.D(c)) * fxx + np.asarray(model.dD(c)) * fx * fx)
    raise DomainError(f"unknown pde {pde!r}", "pde in {graph, slope}")


def residual_table(xs, ts, values, model: DiffusivityModel, pde: str = "graph"):
    """Residual on the interior of uniformly spaced tabulated data ``values[it, ix]``."""
    xs = np.asarray(xs, dtype=float)
    ts = np.asarray(ts, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.shape != (ts.size, xs.size):
        raise DomainError("values must have shape (len(ts), len(xs))")
    if xs.size < 3 or ts.size < 3:
        raise DomainError("need at least 3 abscissae and 3 times", "n >= 3")
    hx, ht = np.diff(xs), np.diff(ts)
    for h, lab in ((hx, "x"), (ht, "t")):
        if np.any(h <= 0) or np.ptp(h) > 1e-9 * abs(h[0]):
            raise DomainError(f"{lab} samples must be uniformly increasing", f"uniform {lab} grid")
    blocks = np.lib.stride_tricks.sliding_window_view(values, (3, 3))
    return residual_kernel(blocks, float(hx.mean()), float(ht.mean()), model, pde)


def verify_residual(solution: ExactSolution, xs, ts, h: float, guard: float = 10.0) -> float:
    """Max PDE residual over the grid ``xs x ts`` with central differences of step h.

    Every grid point must lie at least ``guard * h`` inside the domain.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    X, T = np.meshgrid(xs, ts)
    for dx in (-guard * h, guard * h):
        for dt in (-h, 0.0, h):
            if not np.all(solution.in_domain(X + dx, T + dt)):
                raise DomainError(
                    "residual grid is closer than the guard distance to the domain boundary",
                    solution.domain_text() or "grid inside domain",
                )
    off = np.array([-h, 0.0, h])
    Xb = X[..., None, None] + off[None, None, None, :] + 0 * off[:, None]
    Tb = T[..., None, None] + off[None, None, :, None] + 0 * off[None, :]
    vals = np.asarray(solution.evaluate(Xb, Tb), dtype=float)
    return float(np.max(np.abs(residual_kernel(vals, h, h, solution.model, solution.pde))))
