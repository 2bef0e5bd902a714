"""Special functions and numerical primitives.

Error function, incomplete elliptic integral of the first kind, Jacobi
elliptic functions, adaptive quadrature for integrands with inverse-power
endpoint singularities, and bracketed inversion of monotone maps.

The elliptic routines use the arithmetic-geometric mean with the descending
Landen transformation (DLMF 19.8, 22.20), which keeps full double precision
uniformly in the amplitude, including close to the quarter period.
"""

from __future__ import annotations

import heapq
import math
from collections.abc import Callable
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .errors import BracketError, ConvergenceError, DomainError

__all__ = [
    "Tolerance",
    "EllipticArgs",
    "erf",
    "erfc",
    "elliptic_f",
    "elliptic_k",
    "jacobi_sn_cn_dn",
    "quad_singular",
    "gauss_legendre",
    "invert_monotone",
]

_EPS = np.finfo(float).eps
_SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class Tolerance:
    """Stopping criteria shared by the iterative routines.

    A result is accepted once its error estimate is below
    ``max(abs_tol, rel_tol * |value|)``.
    """

    abs_tol: float = 1e-12
    rel_tol: float = 1e-12
    max_iterations: int = 2000

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError(f"abs_tol must be positive, got {self.abs_tol}")
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")

    def bound(self, value: float) -> float:
        return max(self.abs_tol, self.rel_tol * abs(value))

    def halved(self) -> "Tolerance":
        return Tolerance(self.abs_tol / 2, self.rel_tol / 2, self.max_iterations)


DEFAULT_TOL = Tolerance()


@dataclass(frozen=True)
class EllipticArgs:
    """Amplitude ``phi`` (radians) and parameter ``m`` of F(phi | m)."""

    phi: float
    m: float


# ---------------------------------------------------------------------------
# error function


def _erf_series(x: float) -> float:
    # erf(x) = 2/sqrt(pi) exp(-x^2) sum_n (2x^2)^n x / (1*3*...*(2n+1));
    # all terms share the sign of x, so no cancellation.
    x2 = 2.0 * x * x
    term = x
    total = x
    n = 0
    while abs(term) > _EPS * abs(total) * 0.25:
        n += 1
        term *= x2 / (2 * n + 1)
        total += term
    return 2.0 / _SQRT_PI * math.exp(-x * x) * total


def _erfc_cf(x: float) -> float:
    # erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))),
    # evaluated with the modified Lentz algorithm; x > 0.
    tiny = 1e-300
    f = x
    c = f
    d = 0.0
    for k in range(1, 500):
        a = 0.5 * k
        d = x + a * d
        d = tiny if d == 0.0 else d
        d = 1.0 / d
        c = x + a / c
        c = tiny if c == 0.0 else c
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x * x) / (_SQRT_PI * f)


def _erf_scalar(x: float) -> float:
    if x == 0.0:
        return 0.0
    ax = abs(x)
    if ax <= 3.0:
        val = _erf_series(ax)
    else:
        val = 1.0 - _erfc_cf(ax)
    return math.copysign(val, x)


def _erfc_scalar(x: float) -> float:
    if x > 3.0:
        return _erfc_cf(x)
    if x < -3.0:
        return 2.0 - _erfc_cf(-x)
    return 1.0 - _erf_scalar(x)


def erf(x):
    """Error function; scalar or array input, absolute accuracy ~1e-16."""
    if np.ndim(x) == 0:
        return _erf_scalar(float(x))
    return np.vectorize(_erf_scalar, otypes=[float])(x)


def erfc(x):
    """Complementary error function, accurate in the far tail."""
    if np.ndim(x) == 0:
        return _erfc_scalar(float(x))
    return np.vectorize(_erfc_scalar, otypes=[float])(x)


# ---------------------------------------------------------------------------
# elliptic functions


def _check_parameter(m: float) -> None:
    if not (0.0 <= m < 1.0):
        raise DomainError(f"elliptic parameter m={m} outside [0, 1)", "0 <= m < 1")


@lru_cache(maxsize=64)
def _agm_sequence(m: float) -> tuple[tuple[float, ...], tuple[float, ...], tuple[float, ...]]:
    a, b, c = [1.0], [math.sqrt(1.0 - m)], [math.sqrt(m)]
    while abs(c[-1]) > _EPS * a[-1] and len(a) < 64:
        an, bn = a[-1], b[-1]
        a.append(0.5 * (an + bn))
        b.append(math.sqrt(an * bn))
        c.append(0.5 * (an - bn))
    return tuple(a), tuple(b), tuple(c)


def elliptic_k(m: float) -> float:
    """Complete elliptic integral K(m) = pi / (2 AGM(1, sqrt(1-m)))."""
    _check_parameter(m)
    a, _, _ = _agm_sequence(float(m))
    return math.pi / (2.0 * a[-1])


def elliptic_f(phi, m: float | None = None):
    """Incomplete elliptic integral of the first kind F(phi | m).

    Accepts either ``elliptic_f(EllipticArgs(phi, m))`` or ``elliptic_f(phi, m)``
    with ``phi`` a scalar or array, ``|phi| <= pi/2`` and ``0 <= m < 1``.
    """
    if isinstance(phi, EllipticArgs):
        phi, m = phi.phi, phi.m
    if m is None:
        raise TypeError("elliptic_f requires the parameter m")
    m = float(m)
    _check_parameter(m)
    ph = np.asarray(phi, dtype=float)
    if np.any(np.abs(ph) > 0.5 * math.pi * (1.0 + 4 * _EPS)):
        raise DomainError("amplitude outside [-pi/2, pi/2]", "|phi| <= pi/2")
    a, b, _ = _agm_sequence(m)
    # descending Landen: tan(phi_{n+1} - phi_n) = (b_n/a_n) tan(phi_n),
    # with the branch of phi_{n+1} - phi_n chosen continuous in phi_n
    for an, bn in zip(a[:-1], b[:-1]):
        theta = np.arctan2(bn * np.sin(ph), an * np.cos(ph))
        theta = theta + 2.0 * math.pi * np.round((ph - theta) / (2.0 * math.pi))
        ph = ph + theta
    n = len(a) - 1
    out = ph / (2.0**n * a[-1])
    return float(out) if out.ndim == 0 else out


def jacobi_sn_cn_dn(X, m: float):
    """Jacobi elliptic functions ``(sn, cn, dn)`` of argument X and parameter m.

    AGM descending recurrence (DLMF 22.20.1); ``dn`` is taken as the positive
    root of ``1 - m sn^2``, which holds for real X and m < 1.
    """
    m = float(m)
    _check_parameter(m)
    x = np.asarray(X, dtype=float)
    a, _, c = _agm_sequence(m)
    n = len(a) - 1
    ph = (2.0**n) * a[-1] * x
    for k in range(n, 0, -1):
        ph = 0.5 * (ph + np.arcsin(np.clip(c[k] / a[k] * np.sin(ph), -1.0, 1.0)))
    sn = np.sin(ph)
    cn = np.cos(ph)
    dn = np.sqrt(1.0 - m * sn * sn)
    if x.ndim == 0:
        return float(sn), float(cn), float(dn)
    return sn, cn, dn


# ---------------------------------------------------------------------------
# quadrature

# Gauss-Kronrod 7/15 abscissae and weights (QUADPACK qk15)
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KRONROD_W = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GAUSS_W = np.zeros(15)
_GAUSS_W[[1, 3, 5]] = _WG[:3]
_GAUSS_W[7] = _WG[3]
_GAUSS_W[[9, 11, 13]] = _WG[2::-1]


def _evaluate(f: Callable, x: np.ndarray) -> np.ndarray:
    try:
        y = np.asarray(f(x), dtype=float)
        if y.shape == x.shape:
            return y
    except (TypeError, ValueError):
        pass
    return np.array([float(f(xi)) for xi in x])


def _gk15(f: Callable, a: float, b: float) -> tuple[float, float]:
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    fx = _evaluate(f, mid + half * _NODES)
    if not np.all(np.isfinite(fx)):
        raise ConvergenceError(f"non-finite integrand on [{a}, {b}]")
    k = half * float(_KRONROD_W @ fx)
    g = half * float(_GAUSS_W @ fx)
    return k, abs(k - g)


def _adaptive(f: Callable, a: float, b: float, tol: Tolerance) -> float:
    val, err = _gk15(f, a, b)
    heap = [(-err, a, b, val)]
    total, total_err = val, err
    iterations = 0
    while total_err > tol.bound(total):
        iterations += 1
        if iterations > tol.max_iterations:
            raise ConvergenceError(
                f"quadrature did not converge after {tol.max_iterations} subdivisions "
                f"(estimate {total:.6g}, error {total_err:.3g}); integrand may be divergent"
            )
        neg_err, lo, hi, v = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not (lo < mid < hi):
            raise ConvergenceError("quadrature interval underflow; integrand may be divergent")
        v1, e1 = _gk15(f, lo, mid)
        v2, e2 = _gk15(f, mid, hi)
        total += v1 + v2 - v
        total_err += e1 + e2 + neg_err
        heapq.heappush(heap, (-e1, lo, mid, v1))
        heapq.heappush(heap, (-e2, mid, hi, v2))
        if iterations % 64 == 0:
            # refresh the running sums against drift
            total = math.fsum(item[3] for item in heap)
            total_err = math.fsum(-item[0] for item in heap)
    return math.fsum(item[3] for item in heap)


def quad_singular(
    f: Callable,
    a: float,
    b: float,
    tol: Tolerance | None = None,
    endpoints: str = "both",
) -> float:
    """Integrate ``f`` over ``[a, b]`` allowing inverse-power endpoint singularities.

    Each half of the interval is mapped by ``s = a + w**2`` (left) or
    ``s = b - w**2`` (right), which turns an ``|s - end|**(-1/2)`` singularity
    into a smooth integrand, before adaptive Gauss-Kronrod refinement.
    ``endpoints`` selects which ends get the substitution: ``"both"``,
    ``"left"``, ``"right"`` or ``"none"``.

    ``f`` is called with numpy arrays when it supports them and elementwise
    otherwise. Raises :class:`ConvergenceError` when the subdivision budget is
    exhausted, which is how divergent integrands manifest.
    """
    tol = tol or DEFAULT_TOL
    a, b = float(a), float(b)
    if a == b:
        return 0.0
    if b < a:
        return -quad_singular(f, b, a, tol, {"left": "right", "right": "left"}.get(endpoints, endpoints))
    if endpoints not in ("both", "left", "right", "none"):
        raise ValueError(f"unknown endpoints option {endpoints!r}")
    c = 0.5 * (a + b)
    sub = Tolerance(tol.abs_tol / 2, tol.rel_tol, tol.max_iterations)

    if endpoints in ("both", "left"):
        def left(w):
            return 2.0 * w * _evaluate(f, a + w * w)
        lval = _adaptive(left, 0.0, math.sqrt(c - a), sub)
    else:
        lval = _adaptive(lambda s: _evaluate(f, s), a, c, sub)

    if endpoints in ("both", "right"):
        def right(w):
            return 2.0 * w * _evaluate(f, b - w * w)
        rval = _adaptive(right, 0.0, math.sqrt(b - c), sub)
    else:
        rval = _adaptive(lambda s: _evaluate(f, s), c, b, sub)
    return lval + rval


@lru_cache(maxsize=8)
def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def gauss_legendre(f: Callable, a, b, n: int = 32):
    """Fixed n-point Gauss-Legendre rule, vectorized over arrays of limits.

    ``f`` must accept an array of shape ``limits.shape + (n,)``.
    """
    x, w = _leggauss(n)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)[..., None]
    mid = 0.5 * (a + b)[..., None]
    vals = f(mid + half * x)
    out = np.sum(vals * w, axis=-1) * half[..., 0]
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# inversion


def invert_monotone(
    g: Callable[[float], float],
    target: float,
    bracket: tuple[float, float],
    tol: Tolerance | None = None,
) -> float:
    """Solve ``g(x) = target`` for ``g`` strictly monotone on ``bracket``.

    Uses Brent's bracketed bisection/secant/inverse-quadratic hybrid iterated
    to adjacent floating-point numbers, then checks the residual against
    ``tol``. Raises :class:`BracketError` if the target is not enclosed.
    """
    tol = tol or DEFAULT_TOL
    lo, hi = float(bracket[0]), float(bracket[1])
    glo, ghi = g(lo) - target, g(hi) - target
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    if np.sign(glo) == np.sign(ghi):
        raise BracketError(
            f"target {target!r} not enclosed by g on [{lo}, {hi}] "
            f"(g - target = {glo:.6g}, {ghi:.6g})"
        )
    # a bracket straddling zero may hold a root at exactly zero, which rtol
    # alone would chase down to 1e-300; elsewhere rtol governs
    xtol = 1e-3 * _EPS * (hi - lo) if lo < 0.0 < hi else 1e-300
    x = brentq(lambda s: g(s) - target, lo, hi, xtol=xtol, rtol=4 * _EPS,
               maxiter=max(tol.max_iterations, 200))
    resid = abs(g(x) - target)
    if resid > tol.bound(target):
        # the root is pinned to adjacent floats; accept the better neighbour
        cands = [x, np.nextafter(x, lo), np.nextafter(x, hi)]
        x = min(cands, key=lambda s: abs(g(s) - target))
        resid = abs(g(x) - target)
        if resid > tol.bound(target):
            raise ConvergenceError(
                f"inversion residual {resid:.3g} exceeds tolerance {tol.bound(target):.3g}"
            )
    return float(x)
