"""Command-line front end: JSON in, JSON or CSV out.

Exit codes: 0 success, 1 input or parse error, 2 numerical failure; on
failure stderr carries one line starting with E_INPUT or E_NUMERIC.  All
floats are printed with 17 significant digits so equal inputs produce
byte-identical outputs.

Random sampling uses a 64-bit xorshift* generator with the published
recurrence x ^= x >> 12; x ^= x << 25; x ^= x >> 27; output
(x * 0x2545F4914F6CDD1D) >> 11 taken as a 53-bit mantissa, so seeded runs
reproduce across platforms and implementations.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import algebra, hypersurface, projection, transport, uncertainty
from .algebra import AlgebraElement, DotConfig, PhysConstants, State
from .errors import (
    DimensionError,
    DomainError,
    EvaluationError,
    HermiticityError,
    OpgeomError,
    OrderTooLargeError,
)

__all__ = ["run", "main", "report", "XorShift64Star"]

_MASK = (1 << 64) - 1
_DEFAULT_SEED_STATE = 0x9E3779B97F4A7C15
REPORT_SAMPLE_COUNT = 20

SUBCOMMANDS = (
    "gram", "project", "orthonormalize", "uncertainty", "energy-bound",
    "metric", "christoffel", "curvature", "geodesic", "holonomy", "stokes",
    "bianchi", "volume", "killing", "report",
)


class XorShift64Star:
    """Deterministic 64-bit xorshift* generator (see module docstring)."""

    def __init__(self, seed: int):
        self.x = (int(seed) ^ _DEFAULT_SEED_STATE) & _MASK
        if self.x == 0:
            self.x = _DEFAULT_SEED_STATE

    def next_u64(self) -> int:
        x = self.x
        x ^= (x >> 12)
        x ^= (x << 25) & _MASK
        x ^= (x >> 27)
        self.x = x
        return (x * 0x2545F4914F6CDD1D) & _MASK

    def random(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) / float(1 << 53)

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()


class _InputError(Exception):
    """Bad command line, unreadable file, or malformed JSON."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _InputError(message)


# ---------------------------------------------------------------------------
# deterministic serialization

def _fmt_float(x: float) -> str:
    if not np.isfinite(x):
        raise ValueError(f"non-finite value {x!r} in output")
    return format(float(x), ".17g")


def _emit_json(obj, indent: int = 0) -> str:
    pad = "  " * indent
    pad_in = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad_in}{json.dumps(str(k))}: {_emit_json(v, indent + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        seq = list(obj)
        if not seq:
            return "[]"
        flat = all(isinstance(v, (bool, int, float)) for v in seq)
        if flat:
            return "[" + ", ".join(_emit_json(v) for v in seq) + "]"
        items = [pad_in + _emit_json(v, indent + 1) for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _listify(arr) -> list:
    arr = np.asarray(arr)
    if arr.ndim == 1:
        return [float(v) for v in arr]
    return [_listify(a) for a in arr]


def _write_output(text: str, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# input loading

def _parse_csv_floats(text: str, name: str) -> np.ndarray:
    try:
        vals = np.array([float(tok) for tok in text.split(",")], dtype=float)
    except ValueError as exc:
        raise _InputError(f"--{name} must be comma-separated reals: {exc}") from exc
    if vals.size == 0:
        raise _InputError(f"--{name} is empty")
    return vals


def _load_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise _InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise _InputError(f"invalid JSON in {path}: {exc}") from exc


def _load_chart(path) -> hypersurface.Chart:
    obj = _load_json(path)
    if not isinstance(obj, dict):
        raise _InputError(f"chart file {path} must hold a JSON object")
    env = os.environ.get("OPGEOM_FD_STEP")
    if env is not None and "fd_step" not in obj:
        try:
            obj = dict(obj, fd_step=float(env))
        except ValueError as exc:
            raise _InputError(f"OPGEOM_FD_STEP is not a real number: {exc}") from exc
    try:
        return hypersurface.chart_from_json(obj)
    except (ValueError, KeyError, TypeError) as exc:
        raise _InputError(f"bad chart file {path}: {exc}") from exc


def _load_state_arg(path) -> State:
    obj = _load_json(path)
    try:
        return algebra.state_from_json(obj)
    except (ValueError, KeyError, TypeError) as exc:
        raise _InputError(f"bad state file {path}: {exc}") from exc


def _load_matrices(paths) -> list:
    if not paths:
        raise _InputError("at least one --matrix file is required")
    out = []
    for path in paths:
        obj = _load_json(path)
        try:
            out.append(algebra.matrix_from_json(obj))
        except (ValueError, KeyError, TypeError) as exc:
            raise _InputError(f"bad matrix file {path}: {exc}") from exc
    return out


def _state_or_default(args, default: State) -> State:
    return _load_state_arg(args.state) if args.state else default


def _need(args, flag: str):
    value = getattr(args, flag.replace("-", "_"))
    if value is None:
        raise _InputError(f"--{flag} is required for this subcommand")
    return value


def _chart_point(args):
    chart = _load_chart(_need(args, "chart"))
    u = _parse_csv_floats(_need(args, "point"), "point")
    if u.size != chart.p:
        raise _InputError(f"--point needs {chart.p} components for chart '{chart.id}'")
    phi = _state_or_default(args, chart.default_state())
    return chart, u, phi, DotConfig()


# ---------------------------------------------------------------------------
# subcommand handlers (each returns the output text)

def _cmd_gram(args):
    phi = _state_or_default(args, State.normalized_trace())
    bs = _load_matrices(args.matrix)
    gm = projection.gram(phi, DotConfig(), bs)
    doc = {
        "m": _listify(gm.m),
        "det": float(gm.det),
        "full_rank": bool(gm.is_full_rank),
        "rank_tol": float(gm.rank_tol),
    }
    return _emit_json(doc) + "\n"


def _cmd_project(args):
    phi = _state_or_default(args, State.normalized_trace())
    mats = _load_matrices(args.matrix)
    if len(mats) < 2:
        raise _InputError("project needs the target matrix plus a reference set")
    res = projection.project(phi, DotConfig(), mats[0], mats[1:])
    doc = {
        "coefficients": [float(c) for c in res.coefficients],
        "norm_sq_parallel": float(res.norm_sq_parallel),
        "residual": float(res.residual),
        "parallel": algebra.matrix_to_json(res.parallel),
        "perpendicular": algebra.matrix_to_json(res.perpendicular),
    }
    return _emit_json(doc) + "\n"


def _cmd_orthonormalize(args):
    phi = _state_or_default(args, State.normalized_trace())
    mats = _load_matrices(args.matrix)
    _, onb = projection.gram_schmidt(phi, DotConfig(), mats)
    doc = {"orthonormal": [algebra.matrix_to_json(o) for o in onb]}
    return _emit_json(doc) + "\n"


def _bound_doc(rep) -> dict:
    return {
        "lhs": float(rep.lhs),
        "rhs": float(rep.rhs),
        "margin": float(rep.margin),
        "satisfied": bool(rep.satisfied),
    }


def _cmd_uncertainty(args):
    phi = _state_or_default(args, State.normalized_trace())
    mats = _load_matrices(args.matrix)
    if len(mats) != 2:
        raise _InputError("uncertainty needs exactly two matrices (a, b)")
    rep = uncertainty.pair_product_bound(phi, mats[0], mats[1])
    doc = _bound_doc(rep)
    doc["commutator_abs"] = float(rep.extra["commutator_abs"])
    return _emit_json(doc) + "\n"


def _cmd_energy_bound(args):
    phi = _state_or_default(args, State.normalized_trace())
    mats = _load_matrices(args.matrix)
    if len(mats) < 2:
        raise _InputError("energy-bound needs the hamiltonian plus reference matrices")
    raw, fluct = uncertainty.energy_bound(PhysConstants(), phi, mats[0], mats[1:])
    doc = {"raw": _bound_doc(raw), "fluctuation": _bound_doc(fluct)}
    return _emit_json(doc) + "\n"


def _cmd_metric(args):
    chart, u, phi, cfg = _chart_point(args)
    mf = hypersurface.metric(chart, phi, cfg, u)
    doc = {"g": _listify(mf.g), "g_inv": _listify(mf.g_inv), "det": float(mf.det)}
    return _emit_json(doc) + "\n"


def _cmd_christoffel(args):
    chart, u, phi, cfg = _chart_point(args)
    cf = hypersurface.christoffel(chart, phi, cfg, u, method=args.method)
    doc = {"method": args.method, "gamma": _listify(cf.gamma)}
    return _emit_json(doc) + "\n"


def _cmd_curvature(args):
    chart, u, phi, cfg = _chart_point(args)
    mf = hypersurface.metric(chart, phi, cfg, u)
    cf = hypersurface.curvature(chart, phi, cfg, u)
    doc = {"riemann": _listify(cf.riemann)}
    if chart.p == 2:
        r_low = mf.g[0, :] @ cf.riemann[:, 1, 0, 1]
        doc["gauss_curvature"] = float(r_low / mf.det)
    return _emit_json(doc) + "\n"


def _cmd_geodesic(args):
    chart = _load_chart(_need(args, "chart"))
    u0 = _parse_csv_floats(_need(args, "u0"), "u0")
    v0 = _parse_csv_floats(_need(args, "v0"), "v0")
    tau = float(_need(args, "tau"))
    step = float(_need(args, "step"))
    if u0.size != chart.p or v0.size != chart.p:
        raise _InputError(f"--u0/--v0 need {chart.p} components for chart '{chart.id}'")
    phi = _state_or_default(args, chart.default_state())
    result = hypersurface.geodesic(chart, phi, DotConfig(), u0, v0, tau, step)
    p = chart.p
    header = "tau," + ",".join(f"u{i+1}" for i in range(p)) + "," + \
        ",".join(f"du{i+1}" for i in range(p))
    lines = [header]
    for st in result:
        row = [st.tau, *st.u, *st.udot]
        lines.append(",".join(_fmt_float(v) for v in row))
    if result.left_domain:
        print("W_LEFT_DOMAIN trajectory truncated at the chart boundary",
              file=sys.stderr)
    return "\n".join(lines) + "\n"


def _cmd_holonomy(args):
    tau = float(args.tau) if args.tau is not None else 1.0
    step = float(args.step) if args.step is not None else 1e-3
    if tau <= 0 or step <= 0:
        raise _InputError("--tau and --step must be positive")
    n_steps = max(1, int(round(tau / step)))
    if args.matrix:
        mats = _load_matrices(args.matrix)
        if len(mats) != 2:
            raise _InputError("holonomy takes two matrices X, Y for A(s) = s X + Y")
        x_m, y_m = mats[0].m, mats[1].m
        if x_m.shape != y_m.shape:
            raise DimensionError("X and Y must have equal dimension")
        path = transport.ConnectionPath(
            A=lambda s: s * x_m + y_m, s_range=(0.0, tau), n_steps=n_steps)
    else:
        path = transport.ConnectionPath(
            A=transport.stored_test_path().A, s_range=(0.0, tau), n_steps=n_steps)
    f = transport.product_integral(path)
    doc = {
        "s_range": [0.0, tau],
        "n_steps": n_steps,
        "transport": algebra.matrix_to_json(AlgebraElement(f)),
    }
    return _emit_json(doc) + "\n"


def _cmd_stokes(args):
    base = (_parse_csv_floats(args.point, "point")
            if args.point else np.array([0.2, 0.3]))
    if base.size != 2:
        raise _InputError("--point needs 2 components for stokes")
    eps = float(args.step) if args.step is not None else 0.05
    if eps <= 0:
        raise _InputError("--step (loop side length) must be positive")
    loop = transport.LoopSpec(base=tuple(base), dirs=((1.0, 0.0), (0.0, 1.0)),
                              epsilon=eps)
    half = transport.LoopSpec(base=tuple(base), dirs=((1.0, 0.0), (0.0, 1.0)),
                              epsilon=eps / 2.0)
    r_full = transport.stokes_residual(transport.stored_su2_field, loop)
    r_half = transport.stokes_residual(transport.stored_su2_field, half)
    doc = {
        "epsilon": eps,
        "residual": float(r_full),
        "residual_half": float(r_half),
        "ratio": float(r_full / r_half) if r_half > 0 else float("inf"),
    }
    return _emit_json(doc) + "\n"


def _cmd_bianchi(args):
    chart, u, phi, cfg = _chart_point(args)
    res = transport.bianchi_residual(chart, phi, cfg, u)
    doc = {"residual": float(res)}
    return _emit_json(doc) + "\n"


def _cmd_volume(args):
    mats = _load_matrices(args.matrix)
    vecs = []
    for m in mats:
        diag = np.diagonal(m.m)
        off = m.m - np.diag(diag)
        if np.abs(off).max() > 1e-12 or np.abs(diag.imag).max() > 1e-12:
            raise _InputError("volume expects diagonally embedded real vectors")
        vecs.append(diag.real)
    normalized = True
    if args.state:
        kind = _load_state_arg(args.state).kind
        if kind not in ("trace", "sum"):
            raise _InputError("volume supports only the trace and sum states")
        normalized = kind == "trace"
    vol = projection.parallelepiped_volume(vecs, normalized=normalized)
    doc = {"volume_sq": float(vol), "count": len(vecs)}
    return _emit_json(doc) + "\n"


def _cmd_killing(args):
    paths = args.matrix
    if len(paths) != 1:
        raise _InputError("killing needs one structure-constants file")
    obj = _load_json(paths[0])
    try:
        d = int(obj["d"])
        f = np.asarray(obj["f"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise _InputError(f"bad structure constants file: {exc}") from exc
    if f.size == d ** 3:
        f = f.reshape(d, d, d)
    g = hypersurface.killing_metric(f, d)
    return _emit_json({"g": _listify(g)}) + "\n"


def report(chart: hypersurface.Chart, phi: State, cfg: DotConfig,
           sample_count: int, seed: int = 0) -> dict:
    """Batch min/max/mean statistics over seeded sample points of a chart."""
    rng = XorShift64Star(seed)
    lo, hi = chart.sample_box
    points = []
    for _ in range(sample_count):
        points.append(np.array([rng.uniform(float(lo[k]), float(hi[k]))
                                for k in range(chart.p)]))
    dets, gammas, riems, gausses, bianchis = [], [], [], [], []
    for u in points:
        mf = hypersurface.metric(chart, phi, cfg, u)
        cf = hypersurface.curvature(chart, phi, cfg, u)
        dets.append(mf.det)
        gammas.append(float(np.abs(hypersurface.christoffel(
            chart, phi, cfg, u).gamma).max()))
        riems.append(float(np.abs(cf.riemann).max()))
        if chart.p == 2:
            gausses.append(float(mf.g[0, :] @ cf.riemann[:, 1, 0, 1] / mf.det))
        bianchis.append(transport.bianchi_residual(chart, phi, cfg, u))

    def stats(vals):
        arr = np.asarray(vals, dtype=float)
        return {"min": float(arr.min()), "max": float(arr.max()),
                "mean": float(arr.mean())}

    doc = {
        "chart": hypersurface.chart_to_json(chart),
        "state": phi.kind,
        "seed": int(seed),
        "count": int(sample_count),
        "points": [_listify(u) for u in points],
        "stats": {
            "metric_det": stats(dets),
            "christoffel_max_abs": stats(gammas),
            "riemann_max_abs": stats(riems),
            "bianchi_residual": stats(bianchis),
        },
    }
    if gausses:
        doc["stats"]["gauss_curvature"] = stats(gausses)
    return doc


def _cmd_report(args):
    chart = _load_chart(_need(args, "chart"))
    phi = _state_or_default(args, chart.default_state())
    seed = int(args.seed) if args.seed is not None else 0
    doc = report(chart, phi, DotConfig(), REPORT_SAMPLE_COUNT, seed)
    return _emit_json(doc) + "\n"


_HANDLERS = {
    "gram": _cmd_gram,
    "project": _cmd_project,
    "orthonormalize": _cmd_orthonormalize,
    "uncertainty": _cmd_uncertainty,
    "energy-bound": _cmd_energy_bound,
    "metric": _cmd_metric,
    "christoffel": _cmd_christoffel,
    "curvature": _cmd_curvature,
    "geodesic": _cmd_geodesic,
    "holonomy": _cmd_holonomy,
    "stokes": _cmd_stokes,
    "bianchi": _cmd_bianchi,
    "volume": _cmd_volume,
    "killing": _cmd_killing,
    "report": _cmd_report,
}


def _build_parser() -> _Parser:
    parser = _Parser(prog="opgeom",
                     description="State-induced geometry toolkit")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--chart", help="chart JSON file")
    parser.add_argument("--state", help="state JSON file")
    parser.add_argument("--matrix", action="append", default=[],
                        help="matrix JSON file (repeatable)")
    parser.add_argument("--point", help="comma-separated parameter point")
    parser.add_argument("--u0", help="geodesic start point (CSV)")
    parser.add_argument("--v0", help="geodesic start velocity (CSV)")
    parser.add_argument("--tau", type=float, help="integration length")
    parser.add_argument("--step", type=float,
                        help="integrator step / loop side length")
    parser.add_argument("--seed", type=int, help="sampling seed")
    parser.add_argument("--method", choices=("direct", "metric"),
                        default="direct", help="christoffel route")
    parser.add_argument("--out", help="output file (default stdout)")
    return parser


def run(argv) -> int:
    """Parse argv (no program name) and execute; returns the exit code."""
    try:
        args = _build_parser().parse_args(argv)
        text = _HANDLERS[args.subcommand](args)
        _write_output(text, args.out)
        return 0
    except (_InputError, OSError, ValueError, KeyError, TypeError,
            DimensionError, HermiticityError, DomainError, EvaluationError,
            OrderTooLargeError) as exc:
        print(f"E_INPUT {exc}", file=sys.stderr)
        return 1
    except OpgeomError as exc:
        print(f"E_NUMERIC {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
