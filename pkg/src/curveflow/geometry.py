"""Curve representations and differential-geometric diagnostics.

Two sampled representations are used throughout the package:

* :class:`GraphPatch` - a graph ``y(x)`` on a strictly increasing x-grid;
* :class:`PlaneCurve` - an ordered vertex list, open or closed.

Signed curvature is positive for a counterclockwise convex curve. The
inscribed/circumscribed radii reported by :func:`diagnostics` are the minimum
and maximum distance from the area centroid to the polyline. For a nearly
round curve this proxy converges to the true in/circumradius ratio, which is
all the roundness checks need; it is not a medial-axis computation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainError, GeometryError, OpenCurveError

__all__ = [
    "GraphPatch",
    "PlaneCurve",
    "CurveDiagnostics",
    "curvature_of_graph",
    "curvature_of_curve",
    "diagnostics",
    "eccentricity",
    "arclength",
    "signed_area",
    "centroid",
    "fd_weights",
    "resample_closed",
]

_COLLINEAR_TOL = 1e-12


@dataclass(frozen=True)
class GraphPatch:
    """Sampled graph ``y(x)`` at a single time."""

    xs: np.ndarray
    ys: np.ndarray
    time_stamp: float = 0.0

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape:
            raise GeometryError("xs and ys must be 1-D arrays of equal length")
        if xs.size < 3:
            raise GeometryError(f"a graph patch needs at least 3 nodes, got {xs.size}")
        if not np.all(np.diff(xs) > 0):
            raise GeometryError("xs must be strictly increasing")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    def __len__(self):
        return self.xs.size

    def to_curve(self) -> "PlaneCurve":
        return PlaneCurve(np.column_stack([self.xs, self.ys]), closed=False,
                          time_stamp=self.time_stamp)


@dataclass(frozen=True)
class PlaneCurve:
    """Ordered polyline; when ``closed`` the last vertex connects to the first.

    Construction validates the invariants: no coincident consecutive vertices,
    and for closed curves at least 8 vertices and no self-intersection
    (``check_simple=False`` skips the latter for trusted internal use).
    """

    vertices: np.ndarray
    closed: bool = True
    time_stamp: float = 0.0
    check_simple: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2:
            raise GeometryError("vertices must have shape (n, 2)")
        if self.closed and v.shape[0] < 8:
            raise GeometryError(f"a closed curve needs at least 8 vertices, got {v.shape[0]}")
        if v.shape[0] < 2:
            raise GeometryError("a curve needs at least 2 vertices")
        seg = np.roll(v, -1, axis=0) - v if self.closed else np.diff(v, axis=0)
        if np.any(np.all(seg == 0.0, axis=1)):
            raise GeometryError("consecutive vertices coincide")
        object.__setattr__(self, "vertices", v)
        if self.closed and self.check_simple and _self_intersects(v):
            raise GeometryError("closed curve is not simple (segments intersect)")

    def __len__(self):
        return self.vertices.shape[0]

    @property
    def x(self) -> np.ndarray:
        return self.vertices[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.vertices[:, 1]

    def segments(self) -> np.ndarray:
        v = self.vertices
        return (np.roll(v, -1, axis=0) - v) if self.closed else np.diff(v, axis=0)


@dataclass(frozen=True)
class CurveDiagnostics:
    kappa_max: float
    kappa_min: float
    eccentricity: float
    inradius: float
    circumradius: float
    arclength: float
    enclosed_area: float

    @property
    def radius_ratio(self) -> float:
        return self.inradius / self.circumradius

    @property
    def curvature_ratio(self) -> float:
        """kappa_min / kappa_max (tends to 1 as the curve rounds off)."""
        return self.kappa_min / self.kappa_max

    def as_dict(self) -> dict:
        return {
            "kappa_max": self.kappa_max,
            "kappa_min": self.kappa_min,
            "eccentricity": self.eccentricity,
            "inradius": self.inradius,
            "circumradius": self.circumradius,
            "arclength": self.arclength,
            "enclosed_area": self.enclosed_area,
        }


def _self_intersects(v: np.ndarray) -> bool:
    """Segment-intersection sweep over x-sorted segments of a closed polyline."""
    n = v.shape[0]
    p = v
    q = np.roll(v, -1, axis=0)
    xmin = np.minimum(p[:, 0], q[:, 0])
    xmax = np.maximum(p[:, 0], q[:, 0])
    ymin = np.minimum(p[:, 1], q[:, 1])
    ymax = np.maximum(p[:, 1], q[:, 1])
    order = np.argsort(xmin, kind="stable")
    xmin_sorted = xmin[order]
    for rank, i in enumerate(order):
        stop = np.searchsorted(xmin_sorted, xmax[i], side="right")
        cand = order[rank + 1:stop]
        if cand.size == 0:
            continue
        # neighbouring segments share a vertex by construction
        cand = cand[(cand != (i + 1) % n) & (cand != (i - 1) % n)]
        cand = cand[(ymin[cand] <= ymax[i]) & (ymax[cand] >= ymin[i])]
        if cand.size == 0:
            continue
        if np.any(_segments_cross(p[i], q[i], p[cand], q[cand])):
            return True
    return False


def _orient(a, b, c):
    return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])


def _segments_cross(a, b, c, d) -> np.ndarray:
    d1 = _orient(c, d, a)
    d2 = _orient(c, d, b)
    d3 = _orient(a, b, c)
    d4 = _orient(a, b, d)
    return (d1 * d2 < 0) & (d3 * d4 < 0)


# ---------------------------------------------------------------------------
# finite differences


def fd_weights(z: float, x: np.ndarray, m: int) -> np.ndarray:
    """Finite-difference weights for derivatives 0..m at ``z`` on nodes ``x``.

    Fornberg's recursion; returns an array of shape ``(m + 1, len(x))``.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    c = np.zeros((m + 1, n))
    c1 = 1.0
    c4 = x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k, i] = c1 * (k * c[k - 1, i - 1] - c5 * c[k, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2
            for k in range(mn, 0, -1):
                c[k, j] = (c4 * c[k, j] - k * c[k - 1, j]) / c3
            c[0, j] = c4 * c[0, j] / c3
        c1 = c2
    return c


def graph_derivatives(xs: np.ndarray, ys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """First and second derivatives of sampled ``y(x)``.

    Three-point central stencils in the interior (valid on non-uniform
    grids); second-order one-sided stencils at the two boundary nodes.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    n = xs.size
    if n < 3:
        raise GeometryError(f"need at least 3 nodes, got {n}")
    d1 = np.empty(n)
    d2 = np.empty(n)
    hl = xs[1:-1] - xs[:-2]
    hr = xs[2:] - xs[1:-1]
    yl, yc, yr = ys[:-2], ys[1:-1], ys[2:]
    d1[1:-1] = (-hr / (hl * (hl + hr))) * yl + ((hr - hl) / (hl * hr)) * yc + (hl / (hr * (hl + hr))) * yr
    d2[1:-1] = 2.0 * (yl / (hl * (hl + hr)) - yc / (hl * hr) + yr / (hr * (hl + hr)))
    k = min(n, 4)
    for idx, sl in ((0, slice(0, k)), (n - 1, slice(n - k, n))):
        d2[idx] = fd_weights(xs[idx], xs[sl], 2)[2] @ ys[sl]
        sl3 = slice(0, 3) if idx == 0 else slice(n - 3, n)
        d1[idx] = fd_weights(xs[idx], xs[sl3], 1)[1] @ ys[sl3]
    return d1, d2


def curvature_of_graph(patch: GraphPatch) -> np.ndarray:
    """Signed curvature ``y_xx / (1 + y_x^2)^(3/2)`` at every node of the patch."""
    d1, d2 = graph_derivatives(patch.xs, patch.ys)
    return d2 / (1.0 + d1 * d1) ** 1.5


def curvature_of_curve(curve: PlaneCurve, return_flags: bool = False):
    """Discrete (Menger) curvature through consecutive vertex triples.

    ``kappa = 2 cross(p1 - p0, p2 - p1) / (|p1 - p0| |p2 - p1| |p2 - p0|)``,
    positive at left turns. Collinear triples give 0 and are flagged. For
    open curves the two end vertices have no triple and are set to NaN.
    """
    v = curve.vertices
    if curve.closed:
        p0, p1, p2 = np.roll(v, 1, axis=0), v, np.roll(v, -1, axis=0)
    else:
        p0, p1, p2 = v[:-2], v[1:-1], v[2:]
    e1 = p1 - p0
    e2 = p2 - p1
    e3 = p2 - p0
    cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    l1 = np.hypot(e1[:, 0], e1[:, 1])
    l2 = np.hypot(e2[:, 0], e2[:, 1])
    l3 = np.hypot(e3[:, 0], e3[:, 1])
    flat = np.abs(cross) <= _COLLINEAR_TOL * l1 * l2
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = np.where(flat, 0.0, 2.0 * cross / (l1 * l2 * l3))
    if not curve.closed:
        kappa = np.concatenate([[np.nan], kappa, [np.nan]])
        flat = np.concatenate([[False], flat, [False]])
    if return_flags:
        return kappa, flat
    return kappa


def arclength(curve: PlaneCurve) -> float:
    seg = curve.segments()
    return float(np.sum(np.hypot(seg[:, 0], seg[:, 1])))


def signed_area(curve: PlaneCurve) -> float:
    """Shoelace area; positive for counterclockwise orientation."""
    if not curve.closed:
        raise OpenCurveError("enclosed area is undefined for an open curve")
    x, y = curve.x, curve.y
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def centroid(curve: PlaneCurve) -> np.ndarray:
    """Area centroid of the region bounded by a closed curve."""
    if not curve.closed:
        raise OpenCurveError("area centroid is undefined for an open curve")
    x, y = curve.x, curve.y
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cr = x * yn - xn * y
    a = 0.5 * np.sum(cr)
    return np.array([np.sum((x + xn) * cr), np.sum((y + yn) * cr)]) / (6.0 * a)


def _point_polyline_distances(point: np.ndarray, curve: PlaneCurve) -> np.ndarray:
    p = curve.vertices
    seg = curve.segments()
    rel = point - p
    l2 = np.sum(seg * seg, axis=1)
    s = np.clip(np.sum(rel * seg, axis=1) / l2, 0.0, 1.0)
    closest = p + s[:, None] * seg
    d = closest - point
    return np.hypot(d[:, 0], d[:, 1])


def eccentricity(x_max: float, y_max: float) -> float:
    """``sqrt(1 - (x_max / y_max)^2)`` with the major half-axis along y."""
    if not (0 < x_max <= y_max):
        raise DomainError(
            f"eccentricity needs 0 < x_max <= y_max, got x_max={x_max}, y_max={y_max}",
            "0 < x_max <= y_max",
        )
    if x_max == y_max:
        return 0.0
    # (1 - r)(1 + r) avoids cancellation when r is close to 1
    r = x_max / y_max
    return math.sqrt((y_max - x_max) / y_max * (1.0 + r))


def diagnostics(curve: PlaneCurve) -> CurveDiagnostics:
    """Curvature extrema, eccentricity, radii, arclength and area of a closed curve."""
    if not curve.closed:
        raise OpenCurveError("diagnostics require a closed curve")
    kappa = curvature_of_curve(curve)
    c = centroid(curve)
    dist = _point_polyline_distances(c, curve)
    half_x = 0.5 * float(np.ptp(curve.x))
    half_y = 0.5 * float(np.ptp(curve.y))
    return CurveDiagnostics(
        kappa_max=float(np.max(kappa)),
        kappa_min=float(np.min(kappa)),
        eccentricity=eccentricity(min(half_x, half_y), max(half_x, half_y)),
        inradius=float(np.min(dist)),
        circumradius=float(np.max(np.hypot(*(curve.vertices - c).T))),
        arclength=arclength(curve),
        enclosed_area=abs(signed_area(curve)),
    )


def resample_closed(vertices: np.ndarray, n: int | None = None, method: str = "spline") -> np.ndarray:
    """Redistribute vertices of a closed polyline uniformly in arclength.

    Parametrizes by cumulative chord length and evaluates at ``n`` equally
    spaced parameter values starting from the first vertex.  ``"spline"``
    uses a periodic cubic spline; ``"local"`` uses the cubic through the four
    nearest vertices, which is much cheaper and also moves the curve only by
    O(h^4) in the normal direction.
    """
    v = np.asarray(vertices, dtype=float)
    n = n or v.shape[0]
    closed = np.vstack([v, v[:1]])
    seg = np.hypot(*np.diff(closed, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    targets = np.linspace(0.0, total, n, endpoint=False)
    if method == "spline":
        spline = CubicSpline(s, closed, bc_type="periodic", axis=0)
        return spline(targets)
    if method != "local":
        raise ValueError(f"unknown resampling method {method!r}")
    m = v.shape[0]
    # extended knots for vertex indices -1 .. m + 1
    s_ext = np.concatenate([[s[-2] - total], s, [s[1] + total]])
    v_ext = np.vstack([v[-1:], v, v[:2]])
    idx = np.clip(np.searchsorted(s, targets, side="right") - 1, 0, m - 1)
    out = np.zeros((n, 2))
    knots = [s_ext[idx + j] for j in range(4)]
    for j in range(4):
        w = np.ones(n)
        for k in range(4):
            if k != j:
                w *= (targets - knots[k]) / (knots[j] - knots[k])
        out += w[:, None] * v_ext[idx + j]
    return out
