"""``curveflow`` command line.

Verbs and subverbs::

    catalog   list | sample | describe
    evolve    graph | slope | closed
    reduce    groove | homothetic | wave | classify
    transform reciprocal | rotate | rescale | reflect
    verify    acceptance | residual

Exit codes: 0 success, 1 internal error, 2 domain error, 64 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .catalog import FAMILIES, ExactSolution, PeriodicDecay, make_family, residual_table, verify_residual
from .diffusivity import (
    BetaScaled,
    Constant,
    DiffusivityModel,
    DVCos,
    Isotropic,
    PowerLaw,
    eval_diffusivity,
)
from .errors import CurveflowError, DomainError
from .evolve import (
    ClosedCurveFlowProblem,
    Dirichlet,
    GraphFlowProblem,
    Neumann,
    area_rate,
    evolve_closed,
    evolve_graph,
    evolve_slope,
    measure_wave_speed,
)
from .geometry import GraphPatch, PlaneCurve, diagnostics
from .reductions import (
    GrooveProblem,
    classify_homothetic,
    groove_depth,
    solve_groove,
    solve_homothetic_profile,
    steady_wave,
)
from .specfun import Tolerance
from .transforms import (
    DiagonalScale,
    Reflection,
    Rotation,
    reciprocal_diffusivity,
    reciprocal_map,
    transform_diffusivity,
    transform_points,
)

EXIT_OK, EXIT_INTERNAL, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2, 64

FAMILY_ALIASES = {
    "grim_reaper": "grim_reaper",
    "circle": "circle",
    "shrinking_circle": "circle",
    "oval": "oval",
    "angenent_oval": "oval",
    "dv_slope": "dv_slope",
    "dv": "dv_slope",
    "periodic": "periodic",
    "periodic_decay": "periodic",
    "ellipse": "ellipse",
    "beta_ellipse": "ellipse",
    "elliptic_homothetic": "ellipse",
    "aniso": "aniso",
    "aniso_separable": "aniso",
}
CLOSED_FAMILIES = ("circle", "oval", "ellipse")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: usage error: {message}\n")
        raise SystemExit(EXIT_USAGE)


# ---------------------------------------------------------------------------
# parsing helpers


def parse_model(spec: str) -> DiffusivityModel:
    """``isotropic | beta:<b> | dvcos:<A>,<D0> | const:<D> | powerlaw:<D0>,<n>``."""
    text = spec.strip()
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    arity = {"isotropic": 0, "beta": 1, "dvcos": 2, "const": 1, "powerlaw": 2}
    if kind not in arity:
        raise UsageError(f"unknown diffusivity kind {kind!r} in model spec {spec!r}")
    tokens = [t.strip() for t in rest.split(",")] if rest.strip() else []
    if kind == "isotropic" and (rest or ":" in text):
        raise UsageError(f"'isotropic' takes no parameters, got {rest!r}")
    if len(tokens) != arity[kind]:
        raise UsageError(f"{kind!r} expects {arity[kind]} parameter(s), got {len(tokens)} in {spec!r}")
    values = []
    for tok in tokens:
        try:
            values.append(float(tok))
        except ValueError:
            raise UsageError(f"model parameter {tok!r} is not a number") from None
    if kind == "isotropic":
        return Isotropic()
    if kind == "beta":
        return BetaScaled(values[0])
    if kind == "dvcos":
        return DVCos(values[0], values[1])
    if kind == "const":
        return Constant(values[0])
    return PowerLaw(values[0], values[1])


def family_name(name: str) -> str:
    key = name.strip().lower().replace("-", "_")
    if key not in FAMILY_ALIASES:
        raise UsageError(f"unknown family {name!r}; choose from {sorted(set(FAMILY_ALIASES))}")
    return FAMILY_ALIASES[key]


def _schema(cls) -> list[dict]:
    out = []
    for f in dataclasses.fields(cls):
        if not f.init:
            continue
        entry = {"name": f.name, "type": str(f.type)}
        if f.default is not dataclasses.MISSING:
            entry["default"] = f.default
        else:
            entry["required"] = True
        out.append(entry)
    return out


def _convert(value: str, type_name: str, key: str):
    try:
        if type_name == "int":
            return int(value)
        if type_name == "float":
            return float(value)
        if type_name == "bool":
            low = value.lower()
            if low not in ("true", "false", "1", "0"):
                raise ValueError(value)
            return low in ("true", "1")
    except ValueError:
        raise UsageError(f"parameter {key}={value!r} is not a valid {type_name}") from None
    return value


def build_family(name: str, params: list[str] | None) -> ExactSolution:
    key = family_name(name)
    cls = FAMILIES[key]
    types = {f.name: str(f.type) for f in dataclasses.fields(cls) if f.init}
    kwargs = {}
    for item in params or []:
        k, sep, v = item.partition("=")
        k = k.strip()
        if not sep:
            raise UsageError(f"parameter {item!r} must look like key=value")
        if k not in types:
            raise UsageError(f"family {key!r} has no parameter {k!r}; known: {sorted(types)}")
        kwargs[k] = _convert(v.strip(), types[k], k)
    try:
        return make_family(key, **kwargs)
    except TypeError as exc:
        raise UsageError(f"family {key!r}: {exc}") from None


def default_tolerance() -> Tolerance:
    raw = os.environ.get("CURVEFLOW_TOL")
    if raw is None or raw.strip() == "":
        return Tolerance(1e-10, 1e-10)
    try:
        tol = float(raw)
    except ValueError:
        raise UsageError(f"CURVEFLOW_TOL={raw!r} is not a number") from None
    if not (tol > 0 and math.isfinite(tol)):
        raise UsageError(f"CURVEFLOW_TOL must be positive and finite, got {raw!r}")
    return Tolerance(tol, tol)


def _boundary(spec: str | None, side: str, family: ExactSolution | None, x_end: float, form: str):
    if spec is None:
        spec = "exact" if family is not None else "dirichlet"
    kind, _, val = spec.partition(":")
    kind = kind.strip().lower()
    if kind == "exact":
        if family is None:
            raise UsageError(f"--bc-{side} exact needs --init-family")
        fn = family.height if form == "graph" else family.slope
        return Dirichlet(lambda t, fn=fn: float(fn(x_end, t)))
    if kind in ("dirichlet", "neumann"):
        if val.strip() == "" and kind == "dirichlet":
            return None  # filled in from the initial data
        try:
            number = float(val) if val.strip() else 0.0
        except ValueError:
            raise UsageError(f"--bc-{side}: {val!r} is not a number") from None
        return Dirichlet(number) if kind == "dirichlet" else Neumann(number)
    raise UsageError(f"--bc-{side}: unknown boundary kind {kind!r} (dirichlet:V, neumann:S or exact)")


def _emit(text: str, out: str | None):
    if out:
        io.write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _fmt_from(args, default: str) -> str:
    if getattr(args, "format", None):
        return args.format
    out = getattr(args, "out", None)
    if out:
        suffix = Path(out).suffix.lower().lstrip(".")
        if suffix in ("csv", "json", "svg"):
            return suffix
    return default


def _x_grid(sol: ExactSolution, t_values, n: int, x_range, margin: float = 0.02) -> np.ndarray:
    if x_range is not None:
        lo, hi = x_range
        if not hi > lo:
            raise UsageError("--x-range needs LO < HI")
        return np.linspace(lo, hi, n)
    lo, hi = -math.inf, math.inf
    for t in t_values:
        a, b = sol.interval(t)
        lo, hi = max(lo, a), min(hi, b)
    if not hi > lo:
        raise DomainError("the validity intervals of the requested times do not overlap", "common x-interval")
    pad = margin * (hi - lo)
    return np.linspace(lo + pad, hi - pad, n)


def _times(args) -> list[float]:
    if getattr(args, "t_range", None) is not None:
        t0, t1, k = args.t_range
        k = int(k)
        if k < 1 or k != args.t_range[2]:
            raise UsageError("--t-range count must be a positive integer")
        return list(np.linspace(t0, t1, k))
    if args.t is None:
        raise UsageError("give --t or --t-range")
    return list(args.t)


# ---------------------------------------------------------------------------
# catalog


def cmd_catalog_list(args) -> int:
    entries = [
        {"family": name.replace("_", "-"), "kind": cls.name, "parameters": _schema(cls)}
        for name, cls in FAMILIES.items()
    ]
    if _fmt_from(args, "json") == "csv":
        rows = [[e["family"], e["kind"], ";".join(p["name"] for p in e["parameters"])] for e in entries]
        _emit(io.csv_text(["family", "kind", "parameters"], rows), args.out)
    else:
        _emit(io.json_text(entries), args.out)
    return EXIT_OK


def cmd_catalog_describe(args) -> int:
    sol = build_family(args.family, args.param)
    d = sol.describe()
    d["schema"] = _schema(type(sol))
    _emit(io.json_text(d), args.out)
    return EXIT_OK


def sample_rows(sol: ExactSolution, times, n: int, x_range=None, form: str | None = None):
    """Rows and header of ``catalog sample``; also returns the drawn snapshots."""
    key = next((k for k, c in FAMILIES.items() if isinstance(sol, c)), None)
    if form is None:
        form = "curve" if key in CLOSED_FAMILIES else "graph"
    rows, snaps = [], []
    if form == "curve":
        if not hasattr(sol, "curve") or key not in CLOSED_FAMILIES:
            raise UsageError(f"--form curve needs a closed family ({', '.join(CLOSED_FAMILIES)})")
        for t in times:
            c = sol.curve(t, n)
            snaps.append(c)
            rows += [[x, y, t] for x, y in c.vertices]
        return ["x", "y", "t"], rows, snaps
    xs = _x_grid(sol, times, n, x_range)
    for t in times:
        ys = np.asarray(sol.height(xs, t), dtype=float)
        us = np.asarray(sol.slope(xs, t), dtype=float)
        snaps.append(GraphPatch(xs, ys, time_stamp=t))
        rows += [[x, y, u, t] for x, y, u in zip(xs, ys, us)]
    return ["x", "y", "u", "t"], rows, snaps


def _guide_lines(sol, snaps) -> list[tuple[float, float, float, float]]:
    """Dashed early-time amplitude bounds for the periodic family, one pair per snapshot."""
    if not isinstance(sol, PeriodicDecay):
        return []
    lines = []
    for s in snaps:
        level = sol.amplitude(s.time_stamp)["early_approx"]
        lo, hi = float(s.xs[0]), float(s.xs[-1])
        lines += [(lo, sign * level, hi, sign * level) for sign in (1.0, -1.0)]
    return lines


def cmd_catalog_sample(args) -> int:
    sol = build_family(args.family, args.param)
    times = _times(args)
    header, rows, snaps = sample_rows(sol, times, args.n, args.x_range, args.form)
    fmt = _fmt_from(args, "csv")
    if fmt == "svg":
        _emit(io.svg_text(snaps, _guide_lines(sol, snaps)), args.out)
    elif fmt == "json":
        _emit(io.json_text({"family": sol.describe(), "snapshots": [io.curve_to_dict(s) for s in snaps]}),
              args.out)
    else:
        meta = {"family": sol.name, "parameters": json.dumps(io._jsonable(sol.parameters()), sort_keys=True)}
        _emit(io.csv_text(header, rows, meta), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# evolve


def _initial_graph(args, form: str):
    family = build_family(args.init_family, args.param) if args.init_family else None
    if family is not None:
        if family.pde != form and form == "slope" and family.pde == "graph":
            pass  # the slope of a graph solution is a valid slope-equation datum
        t0 = args.t0
        xs = _x_grid(family, [t0, args.t_end], args.n, args.x_range)
        vals = family.height(xs, t0) if form == "graph" else family.slope(xs, t0)
        return family, GraphPatch(xs, np.asarray(vals, dtype=float), time_stamp=t0)
    if args.init_csv:
        _, header, data = io.read_csv(args.init_csv)
        if form == "slope" and header[:2] == ["rho", "F"]:
            # similarity profile: u(x, t0) = F(x / sqrt(t0))
            if not args.t0 > 0:
                raise DomainError("a similarity profile needs --t0 > 0", "t0 > 0")
            return None, GraphPatch(data[:, 0] * math.sqrt(args.t0), data[:, 1], time_stamp=args.t0)
        col = "y" if form == "graph" else "u"
        if "x" not in header or col not in header:
            raise DomainError(f"{args.init_csv}: need columns x and {col}", f"columns x, {col}")
        xs, vals = data[:, header.index("x")], data[:, header.index(col)]
        t0 = float(data[0, header.index("t")]) if "t" in header else args.t0
        return None, GraphPatch(xs, vals, time_stamp=t0)
    raise UsageError("give --init-family or --init-csv")


def _evolve_line(args, form: str) -> int:
    model = parse_model(args.model)
    family, init = _initial_graph(args, form)
    if family is not None and args.model_from_family:
        model = family.model
    left = _boundary(args.bc_left, "left", family, float(init.xs[0]), form) or Dirichlet(float(init.ys[0]))
    right = _boundary(args.bc_right, "right", family, float(init.xs[-1]), form) or Dirichlet(float(init.ys[-1]))
    dt = args.dt if args.dt is not None else 0.5 * float(np.min(np.diff(init.xs))) ** 2
    prob = GraphFlowProblem(model, init, dt, args.t_end, left, right, args.scheme, args.snapshots)
    result = evolve_graph(prob) if form == "graph" else evolve_slope(prob)
    summary = {"steps": result.steps, "times": result.times, "dt": dt, "model": model.to_dict()}
    if family is not None:
        final = result.snapshots[-1]
        exact = family.height(final.xs, final.time_stamp) if form == "graph" else family.slope(final.xs,
                                                                                               final.time_stamp)
        summary["max_error_vs_exact"] = float(np.max(np.abs(final.ys - exact)))
    if args.speed:
        summary["wave_speed"] = measure_wave_speed(result)["speed"]
    _write_snapshots(args, result.snapshots, ["x", "y" if form == "graph" else "u", "t"])
    sys.stdout.write(io.json_text(summary))
    return EXIT_OK


def _write_snapshots(args, snaps, header):
    if not args.out:
        return
    fmt = _fmt_from(args, "csv")
    if fmt == "svg":
        io.emit_svg(args.out, snaps)
    elif fmt == "json":
        io.write_json(args.out, [io.curve_to_dict(s) for s in snaps])
    else:
        rows = []
        for s in snaps:
            pts = np.column_stack([s.xs, s.ys]) if isinstance(s, GraphPatch) else s.vertices
            rows += [[x, y, s.time_stamp] for x, y in pts]
        io.write_csv(args.out, header, rows)


def cmd_evolve_graph(args) -> int:
    return _evolve_line(args, "graph")


def cmd_evolve_slope(args) -> int:
    return _evolve_line(args, "slope")


def cmd_evolve_closed(args) -> int:
    if args.init_family:
        fam = build_family(args.init_family, args.param)
        if not hasattr(fam, "curve") or not isinstance(fam, tuple(FAMILIES[k] for k in CLOSED_FAMILIES)):
            raise UsageError(f"--init-family must be one of {', '.join(CLOSED_FAMILIES)}")
        init = fam.curve(args.t0, args.n)
    elif args.init_csv:
        _, header, data = io.read_csv(args.init_csv)
        if "x" not in header or "y" not in header:
            raise DomainError(f"{args.init_csv}: need columns x and y", "columns x, y")
        pts = data[:, [header.index("x"), header.index("y")]]
        if "t" in header:
            tcol = data[:, header.index("t")]
            pts = pts[tcol == tcol[0]]
        init = PlaneCurve(pts, closed=True, time_stamp=args.t0)
    else:
        a, b = args.init_ellipse
        th = np.linspace(0.0, 2.0 * math.pi, args.n, endpoint=False)
        init = PlaneCurve(np.column_stack([a * np.cos(th), b * np.sin(th)]), time_stamp=args.t0)
    prob = ClosedCurveFlowProblem(init, t_end=args.t_end, dt=args.dt, area_floor=args.area_floor,
                                  snapshots=args.snapshots)
    result = evolve_closed(prob)
    last = diagnostics(result.snapshots[-1])
    summary = {
        "steps": result.steps,
        "extinction_time": result.extinction_time,
        "area_rate": area_rate(result) if result.history is not None and len(result.history) > 1 else None,
        "final_time": float(result.times[-1]),
        "final_radius_ratio": last.radius_ratio,
        "final_curvature_ratio": last.curvature_ratio,
        "snapshots": len(result.snapshots),
    }
    _write_snapshots(args, result.snapshots, ["x", "y", "t"])
    sys.stdout.write(io.json_text(summary))
    return EXIT_OK


# ---------------------------------------------------------------------------
# reduce


def _groove_job(job):
    model_spec, m, rho_max, tol = job
    prof = solve_groove(GrooveProblem(parse_model(model_spec), m, rho_max, tol))
    # plain arrays only: the dense interpolant does not pickle across processes
    return prof.rho, prof.F, prof.meta, groove_depth(prof, 1.0, tol)


def _profile_csv(path, rho, F, meta: dict, model_spec: str, extra: dict):
    io.write_csv(path, ["rho", "F"], zip(rho, F), {"model": model_spec, "tol": meta.get("tol"), **extra})


def _groove_snapshots(rho, F, times=(1.0, 4.0)) -> list[GraphPatch]:
    """Mirrored groove height ``-sqrt(t) int_rho^inf F`` at the given times."""
    rho = np.asarray(rho)
    tail = np.concatenate([[0.0], np.cumsum(0.5 * (F[1:] + F[:-1]) * np.diff(rho))])
    tail = tail[-1] - tail
    half = rho[-1] / 2
    xs = np.linspace(-half, half, 401)
    return [GraphPatch(xs, -math.sqrt(t) * np.interp(np.abs(xs) / math.sqrt(t), rho, tail), time_stamp=t)
            for t in times]


def _write_profile(path, rho, F, meta: dict, model_spec: str, extra: dict, svg_snaps):
    if Path(path).suffix.lower() == ".svg":
        io.emit_svg(path, svg_snaps)
    else:
        _profile_csv(path, rho, F, meta, model_spec, extra)


def cmd_reduce_groove(args) -> int:
    parse_model(args.model)  # validate before forking
    tol = default_tolerance()
    jobs = [(args.model, float(m), args.rho_max, tol) for m in args.m]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_groove_job, jobs))
    else:
        results = [_groove_job(j) for j in jobs]
    summary = []
    for (_, m, _, _), (rho, F, meta, depth) in zip(jobs, results):
        summary.append({"m": m, "depth_coefficient": depth, "root_flux": meta["root_flux"],
                        "rho_max": meta["rho_max"]})
        if args.out:
            path = Path(args.out)
            if len(jobs) > 1:
                path = path.with_name(f"{path.stem}_m{m:g}{path.suffix}")
            _write_profile(path, rho, F, meta, args.model, {"m": m}, _groove_snapshots(rho, F))
    sys.stdout.write(io.json_text(summary))
    return EXIT_OK


def cmd_reduce_homothetic(args) -> int:
    model = parse_model(args.model)
    prof = solve_homothetic_profile(model, default_tolerance(), rho_max=args.rho_max)
    if args.out:
        _write_profile(args.out, prof.rho, prof.F, prof.meta, args.model, {"rho0": prof.meta["rho0"]},
                       [GraphPatch(prof.rho, prof.F)])
    keep = ("rho0", "slope_at_origin", "roots", "nu", "nu_fit", "A0_fit", "D_inf", "relation_rho0")
    sys.stdout.write(io.json_text({k: prof.meta[k] for k in keep}))
    return EXIT_OK


def cmd_reduce_wave(args) -> int:
    model = parse_model(args.model)
    wave = steady_wave(model, args.c, args.c2)
    if args.x_range is not None:
        lo, hi = args.x_range
    elif wave.asymptotes is not None:
        a, b = sorted(wave.asymptotes)
        pad = 0.02 * (b - a)
        lo, hi = a + pad, b - pad
    else:
        lo, hi = -5.0, 5.0
    xs = np.linspace(lo, hi, args.n)
    us = wave.slope(xs)
    ys = wave.height(xs, 0.0)
    if args.out:
        fmt = _fmt_from(args, "csv")
        if fmt == "svg":
            bounds = [(a, float(np.min(ys)), a, float(np.max(ys))) for a in (wave.asymptotes or ())]
            io.emit_svg(args.out, [GraphPatch(xs, ys)], bounds)
        else:
            io.write_csv(args.out, ["x", "u", "y"], zip(xs, us, ys), {"model": args.model, "c": args.c})
    sys.stdout.write(io.json_text(wave.to_dict()))
    return EXIT_OK


def cmd_reduce_classify(args) -> int:
    sys.stdout.write(io.json_text(classify_homothetic(parse_model(args.model)).to_dict()))
    return EXIT_OK


# ---------------------------------------------------------------------------
# transform


def _transform_of(args):
    if args.subverb == "rotate":
        return Rotation(args.alpha)
    if args.subverb == "rescale":
        return DiagonalScale(args.a1, args.a2)
    if args.subverb == "reflect":
        return Reflection(args.axis)
    return None


def cmd_transform(args) -> int:
    model = parse_model(args.model)
    T = _transform_of(args)
    if args.input:
        _, header, data = io.read_csv(args.input)
        if T is None:
            return _reciprocal_file(args, model, header, data)
        if "x" not in header or "y" not in header:
            raise DomainError(f"{args.input}: need columns x and y", "columns x, y")
        pts = transform_points(data[:, [header.index("x"), header.index("y")]], T)
        rest = [c for c in header if c not in ("x", "y")]
        rows = [list(p) + [row[header.index(c)] for c in rest] for p, row in zip(pts, data)]
        _emit(io.csv_text(["x", "y"] + rest, rows, {"transform": T.label()}), args.out)
        return EXIT_OK
    derived = reciprocal_diffusivity(model) if T is None else transform_diffusivity(model, T)
    label = "reciprocal" if T is None else T.label()
    chain = [model.description, label]
    u = np.linspace(args.u_range[0], args.u_range[1], args.n)
    if T is None:
        u = u[u != 0.0]
    D, B = eval_diffusivity(derived, u)
    doc = {
        "base": model.to_dict(),
        "transform": label,
        "chain": chain,
        "derived": derived.to_dict(),
        "samples": {"u": u, "D": np.atleast_1d(D), "B": np.atleast_1d(B)},
    }
    _emit(io.json_text(doc), args.out)
    return EXIT_OK


def _reciprocal_file(args, model, header, data) -> int:
    if "x" not in header or "u" not in header:
        raise DomainError(f"{args.input}: need columns x and u", "columns x, u")
    tcol = data[:, header.index("t")] if "t" in header else np.zeros(len(data))
    patches = []
    for t in np.unique(tcol):
        sel = tcol == t
        patches.append(GraphPatch(data[sel, header.index("x")], data[sel, header.index("u")], time_stamp=float(t)))
    images = reciprocal_map(patches, model, x_ref=args.x_ref)
    rows = []
    for img in images:
        yp = img.reconstruct()
        rows += [[a, b, c, img.time_stamp] for a, b, c in zip(img.x_prime, img.u_prime, yp)]
    derived = reciprocal_diffusivity(model)
    _emit(io.csv_text(["x_prime", "u_prime", "y_prime", "t"], rows,
                      {"chain": f"{model.description} . reciprocal", "derived": derived.description}), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def cmd_verify_acceptance(args) -> int:
    from .acceptance import CHECKS, format_table, run_all

    numbers = args.only or sorted(CHECKS)
    bad = [k for k in numbers if k not in CHECKS]
    if bad:
        raise UsageError(f"unknown criterion number(s) {bad}; valid: 1..{max(CHECKS)}")
    results = run_all(numbers)
    sys.stdout.write(format_table(results) + "\n")
    if args.out:
        io.write_json(args.out, [dataclasses.asdict(r) for r in results])
    return EXIT_OK if all(r.passed for r in results) else EXIT_INTERNAL


def table_from_long(header, data, column: str):
    """Pivot long-format rows ``(x, ..., t)`` to ``(xs, ts, values[it, ix])``."""
    for c in ("x", "t", column):
        if c not in header:
            raise DomainError(f"input needs column {c!r}", f"column {c} present")
    x, t, v = (data[:, header.index(c)] for c in ("x", "t", column))
    ts = np.unique(t)
    xs = np.unique(x)
    if xs.size * ts.size != len(data):
        raise DomainError("samples do not form a full x-t grid", "rectangular grid")
    values = np.full((ts.size, xs.size), np.nan)
    values[np.searchsorted(ts, t), np.searchsorted(xs, x)] = v
    if np.any(np.isnan(values)):
        raise DomainError("samples do not form a full x-t grid", "rectangular grid")
    return xs, ts, values


def cmd_verify_residual(args) -> int:
    model = parse_model(args.model)
    if args.input:
        _, header, data = io.read_csv(args.input)
        column = args.column or ("y" if args.pde == "graph" else "u")
        xs, ts, values = table_from_long(header, data, column)
        res = residual_table(xs, ts, values, model, args.pde)
        doc = {"max_residual": float(np.max(np.abs(res))), "nx": xs.size, "nt": ts.size, "pde": args.pde,
               "model": model.to_dict()}
    elif args.family:
        sol = build_family(args.family, args.param)
        times = _times(args)
        xs = _x_grid(sol, times, args.n, args.x_range, margin=0.05)
        res = verify_residual(sol, xs, times, args.h)
        doc = {"max_residual": res, "h": args.h, "family": sol.describe()}
    else:
        raise UsageError("give --input or --family")
    _emit(io.json_text(doc), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_family(p, required=True):
    p.add_argument("--family", required=required, help="family name, e.g. grim-reaper, angenent-oval")
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="family parameter (repeatable)")


def _add_times(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--t", type=float, nargs="+", help="sample times")
    g.add_argument("--t-range", type=float, nargs=3, metavar=("T0", "T1", "COUNT"))


def _add_out(p, formats=("csv", "json", "svg")):
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--format", choices=formats)


def build_parser() -> argparse.ArgumentParser:
    root = _Parser(prog="curveflow", description="Exact solutions, reductions and evolvers for curve shortening.")
    verbs = root.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    cat = verbs.add_parser("catalog", help="closed-form solution families")
    cs = cat.add_subparsers(dest="subverb", required=True, parser_class=_Parser)
    p = cs.add_parser("list")
    _add_out(p, ("json", "csv"))
    p.set_defaults(func=cmd_catalog_list)
    p = cs.add_parser("describe")
    _add_family(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_catalog_describe)
    p = cs.add_parser("sample")
    _add_family(p)
    _add_times(p)
    p.add_argument("--n", type=int, default=201)
    p.add_argument("--x-range", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--form", choices=("graph", "curve"))
    _add_out(p)
    p.set_defaults(func=cmd_catalog_sample)

    ev = verbs.add_parser("evolve", help="numerical flows")
    es = ev.add_subparsers(dest="subverb", required=True, parser_class=_Parser)
    for name, fn in (("graph", cmd_evolve_graph), ("slope", cmd_evolve_slope)):
        p = es.add_parser(name)
        p.add_argument("--model", default="isotropic")
        p.add_argument("--model-from-family", action="store_true", help="use the family's own diffusivity")
        src = p.add_mutually_exclusive_group()
        src.add_argument("--init-family")
        src.add_argument("--init-csv")
        p.add_argument("--param", action="append", metavar="KEY=VALUE")
        p.add_argument("--t0", type=float, default=0.0)
        p.add_argument("--t-end", type=float, required=True)
        p.add_argument("--dt", type=float)
        p.add_argument("--n", type=int, default=201)
        p.add_argument("--x-range", type=float, nargs=2, metavar=("LO", "HI"))
        p.add_argument("--bc-left", help="dirichlet:V | neumann:S | exact")
        p.add_argument("--bc-right", help="dirichlet:V | neumann:S | exact")
        p.add_argument("--scheme", choices=("semi-implicit", "explicit"), default="semi-implicit")
        p.add_argument("--snapshots", type=int, default=5)
        p.add_argument("--speed", action="store_true", help="report the measured wave speed")
        _add_out(p)
        p.set_defaults(func=fn)
    p = es.add_parser("closed")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--init-family")
    src.add_argument("--init-csv")
    src.add_argument("--init-ellipse", type=float, nargs=2, metavar=("A", "B"), default=(2.0, 1.0))
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t-end", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--area-floor", type=float, default=1e-3)
    p.add_argument("--snapshots", type=int, default=12)
    _add_out(p)
    p.set_defaults(func=cmd_evolve_closed)

    red = verbs.add_parser("reduce", help="similarity reductions")
    rs = red.add_subparsers(dest="subverb", required=True, parser_class=_Parser)
    p = rs.add_parser("groove")
    p.add_argument("--model", default="isotropic")
    p.add_argument("--m", type=float, nargs="+", default=[1.0])
    p.add_argument("--rho-max", type=float)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_reduce_groove)
    p = rs.add_parser("homothetic")
    p.add_argument("--model", default="isotropic")
    p.add_argument("--rho-max", type=float, default=50.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_reduce_homothetic)
    p = rs.add_parser("wave")
    p.add_argument("--model", default="isotropic")
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--c2", type=float, default=0.0)
    p.add_argument("--n", type=int, default=201)
    p.add_argument("--x-range", type=float, nargs=2, metavar=("LO", "HI"))
    _add_out(p, ("csv", "svg"))
    p.set_defaults(func=cmd_reduce_wave)
    p = rs.add_parser("classify")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_reduce_classify)

    tr = verbs.add_parser("transform", help="equivalence and reciprocal transformations")
    ts = tr.add_subparsers(dest="subverb", required=True, parser_class=_Parser)
    for name in ("reciprocal", "rotate", "rescale", "reflect"):
        p = ts.add_parser(name)
        p.add_argument("--model", default="isotropic")
        p.add_argument("--input", help="CSV to map: (x, u[, t]) for reciprocal, (x, y, ...) otherwise")
        p.add_argument("--u-range", type=float, nargs=2, default=(-10.0, 10.0), metavar=("LO", "HI"))
        p.add_argument("--n", type=int, default=41)
        p.add_argument("--out")
        if name == "rotate":
            p.add_argument("--alpha", type=float, required=True)
        elif name == "rescale":
            p.add_argument("--a1", type=float, required=True)
            p.add_argument("--a2", type=float, required=True)
        elif name == "reflect":
            p.add_argument("--axis", choices=("x", "y", "diagonal"), required=True)
        else:
            p.add_argument("--x-ref", type=float)
        p.set_defaults(func=cmd_transform)

    ver = verbs.add_parser("verify", help="self-checks")
    vs = ver.add_subparsers(dest="subverb", required=True, parser_class=_Parser)
    p = vs.add_parser("acceptance")
    p.add_argument("--only", type=int, nargs="+", help="criterion numbers to run")
    p.add_argument("--out", help="JSON report")
    p.set_defaults(func=cmd_verify_acceptance)
    p = vs.add_parser("residual")
    p.add_argument("--model", default="isotropic")
    p.add_argument("--pde", choices=("graph", "slope"), default="graph")
    p.add_argument("--input")
    p.add_argument("--column")
    _add_family(p, required=False)
    _add_times(p)
    p.add_argument("--n", type=int, default=9)
    p.add_argument("--x-range", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--h", type=float, default=1e-3)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify_residual)
    return root


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"curveflow: usage error: {exc}\n")
        return EXIT_USAGE
    except CurveflowError as exc:
        constraint = getattr(exc, "constraint", None)
        sys.stderr.write(f"curveflow: {type(exc).__name__}: {exc}\n")
        if constraint:
            sys.stderr.write(f"violated constraint: {constraint}\n")
        return EXIT_DOMAIN
    except Exception:
        sys.stderr.write("curveflow: internal error\n")
        traceback.print_exc(file=sys.stderr)
        return EXIT_INTERNAL


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
