"""Equivalence transformations of diffusivities and of curves.

Linear maps of the plane (rotations, diagonal scalings, reflections) send
solutions of ``y_t = D(y_x) y_xx`` to solutions of the same equation with a
transformed diffusivity; the reciprocal map ``u -> 1/u`` exchanges the roles
of x and y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson

from .catalog import ExactSolution
from .diffusivity import (
    Constant,
    DiffusivityModel,
    FunctionalDiffusivity,
    Isotropic,
    PowerLaw,
    canonical,
)
from .errors import DomainError
from .geometry import GraphPatch, PlaneCurve, graph_derivatives
from .specfun import Tolerance, invert_monotone

__all__ = [
    "Rotation",
    "DiagonalScale",
    "Reflection",
    "EquivalenceTransform",
    "ReciprocalImage",
    "reciprocal_diffusivity",
    "rotate_diffusivity",
    "rescale_diffusivity",
    "reflect_diffusivity",
    "transform_diffusivity",
    "transform_curve",
    "transform_points",
    "reciprocal_map",
    "TransformedSolution",
    "canonical",
]


@dataclass(frozen=True)
class Rotation:
    """Counterclockwise rotation of the plane by ``alpha`` radians."""

    alpha: float

    def label(self):
        return f"rotate(alpha={self.alpha!r})"


@dataclass(frozen=True)
class DiagonalScale:
    """``(x, y) -> (a1 x, a2 y)``."""

    a1: float
    a2: float

    def __post_init__(self):
        if not (self.a1 > 0 and self.a2 > 0):
            raise DomainError("scale factors must be positive", "a1 > 0, a2 > 0")

    def label(self):
        return f"rescale(a1={self.a1!r}, a2={self.a2!r})"


@dataclass(frozen=True)
class Reflection:
    """Reflection in the x axis, the y axis, or the diagonal y = x."""

    axis: str = "x"

    def __post_init__(self):
        if self.axis not in ("x", "y", "diagonal"):
            raise DomainError(f"unknown reflection axis {self.axis!r}", "axis in {x, y, diagonal}")

    def label(self):
        return f"reflect(axis={self.axis})"


EquivalenceTransform = Rotation | DiagonalScale | Reflection


def _chain(model: DiffusivityModel) -> tuple:
    if isinstance(model, FunctionalDiffusivity):
        return model.chain
    return (model.description,)


def _asymptote(model):
    try:
        return model.large_slope
    except Exception:
        return None


def _value_at(model, u) -> float:
    """D(u) with the analytic zero limit for functional models."""
    return float(model.D(u))


def reciprocal_diffusivity(model: DiffusivityModel) -> DiffusivityModel:
    """``D'(s) = D(1/s) / s^2``; closed forms for isotropic, constant and power-law models."""
    if isinstance(model, Isotropic):
        return Isotropic()
    if isinstance(model, Constant):
        return PowerLaw(model.value, -2.0)
    if isinstance(model, PowerLaw):
        n = -float(model.n) - 2.0
        return Constant(model.D0) if n == 0 else PowerLaw(model.D0, n)
    asym = _asymptote(model)
    at_zero = asym[1] if asym is not None and asym[0] == -2.0 else None
    try:
        d0 = _value_at(model, 0.0)
        new_asym = (-2.0, d0) if math.isfinite(d0) and d0 > 0 else None
    except DomainError:
        new_asym = None

    def func(s, model=model):
        s = np.asarray(s, dtype=float)
        if np.any(s == 0):
            raise DomainError("reciprocal diffusivity has no finite value at s = 0", "s != 0")
        return np.asarray(model.D(1.0 / s)) / (s * s)

    return FunctionalDiffusivity(func, _chain(model) + ("reciprocal",), new_asym, at_zero)


def rotate_diffusivity(model: DiffusivityModel, alpha: float) -> FunctionalDiffusivity:
    """Diffusivity seen after rotating solution curves by ``alpha``."""
    ca, sa = math.cos(alpha), math.sin(alpha)
    base = _asymptote(model)
    # at the pole u -> infinity; D ~ coeff u^-2 makes the singularity removable
    removable = base is not None and base[0] == -2.0

    def func(s, model=model):
        s = np.asarray(s, dtype=float)
        q = s * sa + ca
        num = s * ca - sa
        pole = np.abs(q) <= 1e-15 * (1 + np.abs(s))
        if np.any(pole):
            if not removable:
                raise DomainError("rotated diffusivity has a pole at s sin(alpha) + cos(alpha) = 0",
                                  "s sin(alpha) + cos(alpha) != 0")
            qs = np.where(pole, 1.0, q)
            val = np.asarray(model.D(num / qs)) / (qs * qs)
            out = np.where(pole, base[1] / (num * num), val)
            return float(out) if out.ndim == 0 else out
        return np.asarray(model.D(num / q)) / (q * q)

    asym = None
    at_zero = None
    if abs(sa) > 1e-15:
        try:
            asym = (-2.0, _value_at(model, ca / sa) / (sa * sa))
        except DomainError:
            asym = None
    if abs(ca) <= 1e-15 and removable:
        at_zero = base[1]
    return FunctionalDiffusivity(func, _chain(model) + (Rotation(alpha).label(),), asym, at_zero)


def rescale_diffusivity(model: DiffusivityModel, a1: float, a2: float) -> FunctionalDiffusivity:
    """``a1^2 D(a1 s / a2)``: the diffusivity after ``(x, y) -> (a1 x, a2 y)``."""
    DiagonalScale(a1, a2)
    ratio = a1 / a2

    def func(s, model=model):
        return a1 * a1 * np.asarray(model.D(ratio * np.asarray(s, dtype=float)))

    base = _asymptote(model)
    asym = None if base is None else (base[0], a1 * a1 * base[1] * ratio ** base[0])
    at_zero = None
    if isinstance(model, FunctionalDiffusivity) and model.at_zero is not None:
        at_zero = a1 * a1 * model.at_zero
    return FunctionalDiffusivity(func, _chain(model) + (DiagonalScale(a1, a2).label(),), asym, at_zero)


def reflect_diffusivity(model: DiffusivityModel, axis: str = "x") -> DiffusivityModel:
    """``D(-s)`` for the axis reflections, the reciprocal for the diagonal."""
    if Reflection(axis).axis == "diagonal":
        return reciprocal_diffusivity(model)

    def func(s, model=model):
        return np.asarray(model.D(-np.asarray(s, dtype=float)))

    at_zero = model.at_zero if isinstance(model, FunctionalDiffusivity) else None
    return FunctionalDiffusivity(func, _chain(model) + (Reflection(axis).label(),), _asymptote(model), at_zero)


def transform_diffusivity(model: DiffusivityModel, T: EquivalenceTransform) -> DiffusivityModel:
    if isinstance(T, Rotation):
        return rotate_diffusivity(model, T.alpha)
    if isinstance(T, DiagonalScale):
        return rescale_diffusivity(model, T.a1, T.a2)
    if isinstance(T, Reflection):
        return reflect_diffusivity(model, T.axis)
    raise DomainError(f"unsupported transform {T!r}")


# ---------------------------------------------------------------------------
# curves


def transform_points(points, T: EquivalenceTransform) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    x, y = p[..., 0], p[..., 1]
    if isinstance(T, Rotation):
        c, s = math.cos(T.alpha), math.sin(T.alpha)
        return np.stack([c * x - s * y, s * x + c * y], axis=-1)
    if isinstance(T, DiagonalScale):
        return np.stack([T.a1 * x, T.a2 * y], axis=-1)
    if isinstance(T, Reflection):
        if T.axis == "x":
            return np.stack([x, -y], axis=-1)
        if T.axis == "y":
            return np.stack([-x, y], axis=-1)
        return np.stack([y, x], axis=-1)
    raise DomainError(f"unsupported transform {T!r}")


def transform_curve(curve: PlaneCurve | GraphPatch, T: EquivalenceTransform):
    """Map every vertex; a graph stays a :class:`GraphPatch` while its abscissae stay monotone."""
    if isinstance(curve, GraphPatch):
        pts = transform_points(np.column_stack([curve.xs, curve.ys]), T)
        dx = np.diff(pts[:, 0])
        if np.all(dx < 0):
            pts = pts[::-1]
            dx = -dx[::-1]
        if np.all(dx > 0):
            return GraphPatch(pts[:, 0], pts[:, 1], time_stamp=curve.time_stamp)
        return PlaneCurve(pts, closed=False, time_stamp=curve.time_stamp, check_simple=False)
    pts = transform_points(curve.vertices, T)
    return PlaneCurve(pts, closed=curve.closed, time_stamp=curve.time_stamp, check_simple=False)


class TransformedSolution(ExactSolution):
    """A graph-form catalog solution viewed through an equivalence transform.

    The image is evaluated pointwise by inverting the abscissa map, so it can
    be fed to :func:`~curveflow.catalog.verify_residual` together with the
    transformed diffusivity.
    """

    name = "transformed"
    pde = "graph"

    def __init__(
        self,
        base: ExactSolution,
        transform: EquivalenceTransform,
        margin: float = 1e-3,
        window: tuple[float, float] | None = None,
    ):
        if base.pde != "graph":
            raise DomainError("only graph-form solutions can be transformed pointwise", "pde == graph")
        self.base = base
        self.transform = transform
        self.margin = margin
        self.window = window
        self._model = transform_diffusivity(base.model, transform)

    @property
    def model(self):
        return self._model

    def parameters(self):
        return {"base": self.base.describe(), "transform": self.transform.label()}

    def domain_text(self):
        return f"image of ({self.base.domain_text()}) under {self.transform.label()}"

    def _param_map(self, x, t):
        pts = transform_points(np.stack([x, np.asarray(self.base.height(x, t))], axis=-1), self.transform)
        return pts[..., 0], pts[..., 1]

    def _base_range(self, t):
        if self.window is not None:
            return self.window
        lo, hi = self.base.interval(t)
        pad = self.margin * (hi - lo)
        return lo + pad, hi - pad

    def interval(self, t):
        lo, hi = self._base_range(t)
        xs = np.linspace(lo, hi, 2001)
        X, _ = self._param_map(xs, t)
        d = np.diff(X)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise DomainError("transformed curve is not a graph over x", "monotone abscissa")
        return float(X.min()), float(X.max())

    def in_domain(self, x, t):
        x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
        out = np.zeros(x.shape, dtype=bool)
        for tv in np.unique(t):
            try:
                lo, hi = self.interval(float(tv))
            except DomainError:
                continue
            sel = t == tv
            out[sel] = (x[sel] > lo) & (x[sel] < hi)
        return out

    def height(self, x, t):
        x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
        out = np.empty(x.shape)
        tol = Tolerance(1e-15, 4e-16, 400)
        for idx in np.ndindex(x.shape):
            tv = float(t[idx])
            lo, hi = self._base_range(tv)
            g = lambda s, tv=tv: float(self._param_map(np.asarray(s), tv)[0])
            g_lo, g_hi = g(lo), g(hi)
            if g_lo > g_hi:
                s = invert_monotone(lambda v: -g(v), -float(x[idx]), (lo, hi), tol)
            else:
                s = invert_monotone(g, float(x[idx]), (lo, hi), tol)
            out[idx] = float(self._param_map(np.asarray(s), tv)[1])
        return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# reciprocal map


@dataclass(frozen=True)
class ReciprocalImage:
    """Samples of the reciprocal image at one time: abscissae ``x'`` and slopes ``u' = 1/u``."""

    x_prime: np.ndarray
    u_prime: np.ndarray
    gauge: float
    time_stamp: float = 0.0

    def reconstruct(self) -> np.ndarray:
        """Heights ``y'(x')`` by integrating ``u'`` over ``x'`` (zero at the first sample)."""
        order = np.argsort(self.x_prime)
        xp, up = self.x_prime[order], self.u_prime[order]
        y = np.empty_like(xp)
        y[0] = 0.0
        y[1:] = cumulative_simpson(up, x=xp)
        out = np.empty_like(y)
        out[order] = y
        return out


def reciprocal_map(
    patches: GraphPatch | list[GraphPatch],
    model: DiffusivityModel,
    gauge: float | None = None,
    x_ref: float | None = None,
) -> list[ReciprocalImage]:
    """Apply ``x' = y(x, t) - y(x_ref, t_first) + gauge``, ``u' = 1/u`` to slope snapshots.

    ``patches`` hold slopes ``u`` (``ys`` field).  Within a snapshot
    ``y(x) - y(x_ref)`` is the integral of u; between snapshots the height at
    ``x_ref`` moves with the flux ``D(u) u_x`` there.
    """
    if isinstance(patches, GraphPatch):
        patches = [patches]
    if not patches:
        raise DomainError("need at least one snapshot")
    xr = float(patches[0].xs[0]) if x_ref is None else float(x_ref)
    gauge = 0.0 if gauge is None else float(gauge)
    images = []
    shift = 0.0
    prev = None
    for p in patches:
        u = np.asarray(p.ys, dtype=float)
        if not (np.all(u > 0) or np.all(u < 0)):
            raise DomainError("slope changes sign: the reciprocal map is not single-valued", "u != 0 on the patch")
        if not p.xs[0] <= xr <= p.xs[-1]:
            raise DomainError("reference abscissa outside the snapshot", "x_ref inside the patch")
        h = np.zeros_like(u)
        h[1:] = cumulative_simpson(u, x=p.xs)
        h_ref = float(np.interp(xr, p.xs, h))
        d1, _ = graph_derivatives(p.xs, u)
        flux = float(np.interp(xr, p.xs, np.asarray(model.D(u)) * d1))
        if prev is not None:
            shift += 0.5 * (flux + prev[1]) * (p.time_stamp - prev[0])
        prev = (p.time_stamp, flux)
        images.append(ReciprocalImage(h - h_ref + shift + gauge, 1.0 / u, gauge, p.time_stamp))
    return images
