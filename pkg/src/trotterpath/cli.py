"""Command-line front end.

Exit codes: 0 on success, 1 for usage, configuration and domain errors, 2
when a numerical routine fails.  Errors are reported as one JSON object on
stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import evaluate as ev
from .exceptions import DomainError, NumericalError, TrotterError
from .gridpath import (
    LatticePath,
    deviation_sum,
    enumerate_paths,
    error_triplet,
    path_weight_sum,
)
from .linalg import MODELS, HamiltonianSpec, build_model, load_matrices
from .planners import METHODS, path_shape_factors, plan, plan_2D, plan_2O

FIGURES = ("fig2b", "fig3a", "fig7a", "fig7b", "fig7c")


class UsageError(DomainError):
    """Bad command line or configuration file."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- helpers -----------------------------------------------------------------


def _targets(args) -> tuple[int, ...]:
    if args.p is None or args.q is None:
        raise UsageError("-p and -q are required")
    return (args.p, args.q) if args.r is None else (args.p, args.q, args.r)


def _methods(args, default: str) -> list[str]:
    raw = args.method or default
    out = [m.strip() for m in raw.split(",") if m.strip()]
    bad = [m for m in out if m not in METHODS]
    if bad or not out:
        raise UsageError(f"unknown method(s) {bad}; choose from {', '.join(METHODS)}")
    return out


def _model(args, weights) -> HamiltonianSpec:
    model = args.model
    if model is None:
        model = "tfi2" if len(weights) == 2 else "tfi-lz3"
    if model.startswith("file:"):
        mats = load_matrices(model[5:])
        return HamiltonianSpec(kind="matrices", model=model, matrices=mats, weights=weights)
    if model not in MODELS:
        raise UsageError(f"unknown model {model!r}; use one of {MODELS} or file:PATH")
    return HamiltonianSpec(model=model, n_spins=args.spins, weights=weights)


def _t_grid(args):
    if args.t_points < 1:
        raise UsageError("the time grid is empty (--t-points must be >= 1)")
    if not 0 < args.t_min <= args.t_max:
        raise UsageError("need 0 < --t-min <= --t-max")
    if args.t_points == 1:
        return np.array([args.t_min])
    return np.geomspace(args.t_min, args.t_max, args.t_points)


def _frac(x: Fraction) -> str:
    return str(Fraction(x))


def _triplet_dict(path: LatticePath) -> dict:
    t = error_triplet(path)
    return {"e2": _frac(t.e2), "e3a": _frac(t.e3a), "e3b": _frac(t.e3b), "scaled": list(t.scaled())}


def _emit(args, name: str, text: str) -> None:
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# -- SVG --------------------------------------------------------------------

_COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def curves_to_svg(curves, width: int = 640, height: int = 420, title: str = "") -> str:
    """Log-fidelity against ``log10 t`` as a bare SVG line plot."""
    pad = 50
    xs = [np.log10(c.t) for c in curves]
    ys = [np.asarray(c.F_l) for c in curves]
    x0, x1 = min(x.min() for x in xs), max(x.max() for x in xs)
    y0, y1 = min(y.min() for y in ys), max(y.max() for y in ys)
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1

    def sx(v):
        return pad + (v - x0) / (x1 - x0) * (width - 2 * pad)

    def sy(v):
        return height - pad - (v - y0) / (y1 - y0) * (height - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width / 2:.0f}" y="{height - 12}" text-anchor="middle">log10 t</text>',
        f'<text x="14" y="{height / 2:.0f}" transform="rotate(-90 14 {height / 2:.0f})" '
        'text-anchor="middle">F_l</text>',
    ]
    if title:
        parts.append(f'<text x="{width / 2:.0f}" y="24" text-anchor="middle">{title}</text>')
    for k, (c, x, y) in enumerate(zip(curves, xs, ys)):
        colour = _COLOURS[k % len(_COLOURS)]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y))
        parts.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{pts}"/>')
        parts.append(
            f'<text x="{width - pad + 4}" y="{pad + 16 * k}" fill="{colour}">{c.method}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# -- commands -----------------------------------------------------------------


def cmd_plan(args) -> int:
    targets = _targets(args)
    out = []
    for method in _methods(args, "2D"):
        opts = {"reduce": True} if method == "2T" and args.reduce else {}
        seq = plan(method, targets, args.n, **opts)
        entry = {"sequence": seq.to_dict()}
        if seq.dims == 2 and seq.integral:
            entry["triplet"] = _triplet_dict(seq.lattice_path())
        out.append(entry)
    _emit(args, "plan.json", _dump(out[0] if len(out) == 1 else out))
    return 0


def cmd_error(args) -> int:
    if args.steps:
        path = LatticePath.from_string(args.steps)
    else:
        method = _methods(args, "2D")[0]
        seq = plan(method, _targets(args), args.n)
        path = seq.lattice_path()
    out = {"steps": str(path), "targets": list(path.targets)}
    if path.dims == 2:
        C, D, f = path_shape_factors(path)
        out.update(
            triplet=_triplet_dict(path),
            weight_sum=list(path_weight_sum(path)),
            deviation_sum=deviation_sum(path),
            shape={"C": _frac(C), "D": _frac(D), "f": _frac(f)},
        )
    _emit(args, "error.json", _dump(out))
    return 0


def _figure_config(name: str):
    if name == "fig2b":
        return dict(weights=(12, 8), methods=["2O", "2D", "2T"], n=1, model="tfi2",
                    t=np.geomspace(1e-3, 1.0, 61), fit=(10**-2.5, 10**-1.5))
    if name == "fig7c":
        return dict(weights=(6, 7), methods=["1T", "2D", "ruth"], n=24, model="tfi2",
                    t=np.geomspace(1e-2, 10.0, 61), fit=None)
    raise UsageError(f"unknown curve figure {name!r}")


def _pair_table(total, n, t, methods, model, spins, dims=2):
    """Log-fidelity at fixed ``t`` for every composition of ``total``."""
    if dims == 2:
        combos = [(p, total - p) for p in range(1, total)]
    else:
        combos = [(p, q, total - p - q) for p in range(1, total - 1) for q in range(1, total - p)]
    rows = []
    for w in combos:
        spec = HamiltonianSpec(model=model, n_spins=spins, weights=w)
        row = {"targets": "-".join(map(str, w))}
        valid = [m for m in methods if not (m == "2T" and all(x % 2 for x in w))]
        curves = ev.sweep_time(valid, spec, [t], n, options={"1T": {"reduce": False}})
        for m in methods:
            c = next((c for c in curves if c.method == m), None)
            row[m] = "" if c is None else format(float(c.F_l[0]), ".17g")
        rows.append(row)
    return rows


def _table_csv(rows, columns, header, schema="trotterpath-table/1") -> str:
    lines = [f"# schema={schema} {header}", ",".join(columns)]
    lines += [",".join(str(r[c]) for c in columns) for r in rows]
    return "\n".join(lines) + "\n"


def cmd_sweep(args) -> int:
    fig = args.figure
    if fig in ("fig7a", "fig3a"):
        dims = 2 if fig == "fig7a" else 3
        total = args.total or (10 if dims == 2 else 12)
        methods = ["2D", "2T", "1T", "ruth"] if dims == 2 else ["2D", "1T"]
        model = "tfi2" if dims == 2 else "tfi-lz3"
        rows = _pair_table(total, args.n if args.n_given else 10, args.t, methods, model, args.spins, dims)
        text = _table_csv(rows, ["targets"] + methods, f"figure={fig} t={args.t}")
        _emit(args, f"{fig}.csv", text)
        return 0
    if fig == "fig7b":
        total = args.total or 100
        rows = []
        for n in (5, 10, 20, 40):
            table = _pair_table(total, n, args.t, ["2D", "1T", "ruth"], "tfi2", args.spins)
            row = {"n": n}
            for m in ("2D", "1T", "ruth"):
                row[m] = format(float(np.mean([float(r[m]) for r in table])), ".17g")
            rows.append(row)
        _emit(args, "fig7b.csv", _table_csv(rows, ["n", "2D", "1T", "ruth"], f"figure=fig7b total={total}"))
        return 0

    if fig:
        cfg = _figure_config(fig)
        spec = HamiltonianSpec(model=cfg["model"], n_spins=args.spins, weights=cfg["weights"])
        methods, n, t, fit = cfg["methods"], cfg["n"], cfg["t"], cfg["fit"]
    else:
        weights = _targets(args)
        spec = _model(args, weights)
        methods, n, t, fit = _methods(args, "2D"), args.n, _t_grid(args), None
    opts = {"2T": {"reduce": True}} if args.reduce else {}
    curves = ev.sweep_time(methods, spec, t, n, options=opts)
    name = fig or "sweep"
    csv_text = ev.curves_to_csv(curves, {"model": spec.model, "n": n})
    if args.format == "svg":
        _emit(args, f"{name}.svg", curves_to_svg(curves, title=name))
        if args.out:
            _emit(args, f"{name}.csv", csv_text)
        return 0
    if args.format == "json" or fig:
        slopes = {}
        for c in curves:
            try:
                slopes[c.method] = ev.fit_slope(c, fit)._asdict()
            except (NumericalError, DomainError) as exc:
                slopes[c.method] = {"error": str(exc)}
        if args.format == "json":
            _emit(args, f"{name}.json", _dump({"slopes": slopes}))
            if args.out:
                _emit(args, f"{name}.csv", csv_text)
            return 0
        if args.out:
            _emit(args, f"{name}_slopes.json", _dump({"slopes": slopes}))
    _emit(args, f"{name}.csv", csv_text)
    return 0


def cmd_histogram(args) -> int:
    if args.samples < 1:
        raise UsageError("--samples must be >= 1")
    p = args.p if args.p is not None else 12
    q = args.q if args.q is not None else 8
    stats = ev.crossover_histogram(p, q, args.n, args.samples, args.seed)
    _emit(args, "histogram.json", ev.stats_to_json(stats))
    if args.out:
        lines = [f"# schema={ev.STATS_SCHEMA} p={p} q={q} n={args.n} seed={args.seed}",
                 "bin_lo,bin_hi,count"]
        for lo, hi, c in zip(stats.bin_edges, stats.bin_edges[1:], stats.bin_counts):
            lines.append(f"{lo:.17g},{hi:.17g},{c}")
        _emit(args, "histogram_bins.csv", "\n".join(lines) + "\n")
    return 0


def cmd_resources(args) -> int:
    weights = _targets(args)
    spec = _model(args, weights)
    hams = build_model(spec)
    rows = []
    for target in args.fidelity:
        for method in _methods(args, "2D,2T"):
            opts = {"reduce": True} if method == "2T" else {}
            res = ev.count_resources(method, target, hams, args.t, weights, n_cap=args.n_cap, **opts)
            seq = plan(method, weights, res.n, **opts)
            steps = str(seq.lattice_path()) if seq.integral else ""
            rows.append({"target_F": target, "method": method, "n": res.n,
                         "switchings": res.switchings, "trotter_steps": res.trotter_steps,
                         "fidelity": format(res.fidelity, ".17g"), "ordering": steps})
    cols = ["target_F", "method", "n", "switchings", "trotter_steps", "fidelity", "ordering"]
    _emit(args, "resources.csv", _table_csv(rows, cols, f"t={args.t}", ev.RESOURCE_SCHEMA))
    return 0


def run_oracle(max_total: int = 12) -> dict:
    """Brute-force checks of the planners on every coprime pair up to ``max_total``."""
    failures = []
    checked = 0
    for total in range(2, max_total + 1):
        for p in range(1, total):
            q = total - p
            if math.gcd(p, q) != 1:
                continue
            checked += 1
            paths = list(enumerate_paths(p, q, max_total=max_total))
            g2d = plan_2D((p, q))
            if deviation_sum(g2d) != min(deviation_sum(x) for x in paths):
                failures.append({"check": "2D-distance", "p": p, "q": q})
            if (p * q) % 2 == 0:
                best = min(error_triplet(x).moment_objective for x in paths if error_triplet(x).e2 == 0)
                if error_triplet(plan_2O(p, q)).moment_objective != best:
                    failures.append({"check": "2O-moment", "p": p, "q": q})
            seq = plan("2D", (p, q))
            path = seq.lattice_path(2 if seq.meta.get("symmetrized") else 1)
            P, Q = path.targets
            _, _, f = path_shape_factors(path)
            if f > min(P * P + 4 * Q * Q, Q * Q + 4 * P * P):
                failures.append({"check": "2D-bound", "p": p, "q": q})
            for x in paths:
                t = error_triplet(x)
                if path_weight_sum(x) != t.scaled():
                    failures.append({"check": "edge-weights", "steps": str(x)})
                    break
    return {"pairs": checked, "max_total": max_total, "failures": failures}


def cmd_oracle(args) -> int:
    report = run_oracle(args.max_total)
    _emit(args, "oracle.json", _dump(report))
    if report["failures"]:
        raise NumericalError(f"{len(report['failures'])} oracle checks failed")
    return 0


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="trotterpath", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="flat JSON file with option defaults")
        sp.add_argument("-p", type=int)
        sp.add_argument("-q", type=int)
        sp.add_argument("-r", type=int)
        sp.add_argument("--n", type=int)
        sp.add_argument("--method", help=f"comma-separated subset of {','.join(METHODS)}")
        sp.add_argument("--model", help="tfi2, tfi-lz3 or file:PATH")
        sp.add_argument("--spins", type=int, default=2)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", help="output directory (default: stdout)")
        sp.add_argument("--format", choices=("csv", "json", "svg"), default="csv")
        sp.add_argument("--reduce", action="store_true", help="gcd-reduce symmetric Trotter")
        return sp

    common(sub.add_parser("plan", help="print gate sequences as JSON"))
    sp = common(sub.add_parser("error", help="geometric error of a path"))
    sp.add_argument("--steps", help="explicit step string such as ABBA")
    sp = common(sub.add_parser("sweep", help="fidelity against time"))
    sp.add_argument("--figure", choices=FIGURES)
    sp.add_argument("--t-min", type=float, default=1e-3)
    sp.add_argument("--t-max", type=float, default=1.0)
    sp.add_argument("--t-points", type=int, default=31)
    sp.add_argument("--t", type=float, default=1.0, help="fixed time for table figures")
    sp.add_argument("--total", type=int, help="p+q(+r) for table figures")
    sp = common(sub.add_parser("histogram", help="crossover statistics on random pairs"))
    sp.add_argument("--samples", type=int, default=1000)
    sp = common(sub.add_parser("resources", help="Trotter number needed for target fidelities"))
    sp.add_argument("--fidelity", type=float, nargs="+", default=[0.99, 0.999, 0.9999])
    sp.add_argument("--t", type=float, default=1.0)
    sp.add_argument("--n-cap", type=int, default=1 << 14)
    sp = common(sub.add_parser("oracle", help="brute-force property checks"))
    sp.add_argument("--max-total", type=int, default=12)
    return parser


COMMANDS = {
    "plan": cmd_plan,
    "error": cmd_error,
    "sweep": cmd_sweep,
    "histogram": cmd_histogram,
    "resources": cmd_resources,
    "oracle": cmd_oracle,
}


def _subparser(parser, name):
    for action in parser._subparsers._group_actions:
        if name in action.choices:
            return action.choices[name]
    raise UsageError(f"unknown command {name!r}")


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        raise UsageError(f"a command is required: {', '.join(COMMANDS)}")
    if args.config:
        sp = _subparser(parser, args.command)
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config must be a flat JSON object")
        known = {a.dest for a in sp._actions} - {"help", "config"}
        unknown = sorted(set(k.replace("-", "_") for k in cfg) - known)
        if unknown:
            raise UsageError(f"unknown config keys: {unknown}")
        sp.set_defaults(**{k.replace("-", "_"): v for k, v in cfg.items()})
        args = parser.parse_args(argv)
    args.n_given = args.n is not None
    args.n = 1 if args.n is None else args.n
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    return args


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except NumericalError as exc:
        code, exc_ = 2, exc
    except (TrotterError, ValueError, OSError, KeyError) as exc:
        code, exc_ = 1, exc
    sys.stderr.write(json.dumps({"error": type(exc_).__name__, "message": str(exc_), "exit": code}) + "\n")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
