"""Fidelity metrics, time sweeps, slope fits, crossovers and resource counts."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .exceptions import DomainError, EmptyStatsError, NumericalError
from .gridpath import LatticePath
from .linalg import (
    HamiltonianSpec,
    HermitianExp,
    build_model,
    random_hermitian,
    sequence_to_unitary,
)
from .planners import GateSequence, plan

FL_CAP = 14.0
INFIDELITY_FLOOR = 10.0 ** -FL_CAP
CSV_SCHEMA = "trotterpath-sweep/1"
STATS_SCHEMA = "trotterpath-crossover/1"
RESOURCE_SCHEMA = "trotterpath-resources/1"
THREADS_ENV = "TROTTER_PLANNER_THREADS"


def _pair(U1, U2) -> tuple[np.ndarray, np.ndarray]:
    U1, U2 = np.asarray(U1, dtype=complex), np.asarray(U2, dtype=complex)
    if U1.shape != U2.shape or U1.ndim < 2 or U1.shape[-1] != U1.shape[-2]:
        raise DomainError(f"need square matrices of equal shape, got {U1.shape} and {U2.shape}")
    return U1, U2


def _overlap(U1, U2):
    return np.einsum("...ij,...ij->...", U1.conj(), U2)


def fidelity(U1, U2):
    """``|Tr(U1^dag U2)| / Tr(U1^dag U1)``, clamped to ``[0, 1]``.

    Works on single matrices and on stacks sharing the leading axes.
    """
    U1, U2 = _pair(U1, U2)
    norm = _overlap(U1, U1).real
    F = np.abs(_overlap(U1, U2)) / norm
    if np.any(F > 1 + 1e-12):
        raise NumericalError(f"fidelity {np.max(F)} exceeds 1; inputs are not unitary")
    F = np.clip(F, 0.0, 1.0)
    return float(F) if F.ndim == 0 else F


def infidelity(U1, U2):
    """``1 - F`` without cancellation, valid for unitary inputs.

    Uses ``1 - F = ||U2 - e^{i phi} U1||_F^2 / (2 d)`` with ``phi`` the phase
    of ``Tr(U1^dag U2)``, so values far below machine epsilon stay accurate.
    """
    U1, U2 = _pair(U1, U2)
    tr = _overlap(U1, U2)
    mag = np.abs(tr)
    phase = np.where(mag > 0, tr / np.where(mag > 0, mag, 1), 1.0)
    diff = U2 - phase[..., None, None] * U1
    out = np.sum(np.abs(diff) ** 2, axis=(-2, -1)) / (2 * U1.shape[-1])
    return float(out) if out.ndim == 0 else out


def log_fidelity(U1, U2):
    """``(F_l, capped)`` with ``F_l = -log10(1 - F)`` capped at :data:`FL_CAP`."""
    return _cap(np.asarray(infidelity(U1, U2)))


def _cap(infid: np.ndarray):
    capped = infid < INFIDELITY_FLOOR
    with np.errstate(divide="ignore"):
        fl = np.where(capped, FL_CAP, -np.log10(np.maximum(infid, INFIDELITY_FLOOR)))
    if fl.ndim == 0:
        return float(fl), bool(capped)
    return fl, capped


def frobenius_error(U1, U2) -> float:
    U1, U2 = _pair(U1, U2)
    out = np.sqrt(np.sum(np.abs(U1 - U2) ** 2, axis=(-2, -1)))
    return float(out) if out.ndim == 0 else out


# -- curves -----------------------------------------------------------------


@dataclass
class FidelityCurve:
    """Fidelity of one schedule against the exact propagator on a time grid."""

    method: str
    targets: tuple[int, ...]
    n: int
    t: np.ndarray
    F: np.ndarray
    F_l: np.ndarray
    capped: np.ndarray
    infidelity: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        if self.t.ndim != 1 or np.any(np.diff(self.t) <= 0):
            raise DomainError("time grid must be one-dimensional and strictly increasing")

    @property
    def samples(self) -> list[tuple[float, float, float]]:
        return [(float(a), float(b), float(c)) for a, b, c in zip(self.t, self.F, self.F_l)]


def _time_grid(t_grid) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if t.size == 0:
        raise DomainError("time grid is empty")
    if t.ndim != 1 or np.any(~np.isfinite(t)) or np.any(t <= 0) or np.any(np.diff(t) <= 0):
        raise DomainError("time grid must be positive, finite and strictly increasing")
    return t


def _as_sequence(method, weights, n, options) -> GateSequence:
    if isinstance(method, GateSequence):
        return method
    if isinstance(method, LatticePath):
        return GateSequence.from_path(method, "path", n, weights)
    return plan(method, weights, n, **options.get(method, {}))


def curve_for(
    seq: GateSequence,
    hams: Sequence[np.ndarray],
    t_grid,
    exps: Sequence[HermitianExp] | None = None,
    label: str | None = None,
    meta: dict | None = None,
) -> FidelityCurve:
    """Evaluate one schedule on ``t_grid`` (all times in one batched pass)."""
    t = _time_grid(t_grid)
    if exps is None:
        exps = [HermitianExp(H) for H in hams]
    H = sum(w * np.asarray(h) for w, h in zip(seq.targets, hams))
    U1 = HermitianExp(H)(t)
    U2 = sequence_to_unitary(seq, hams, t, exps=exps)
    infid = np.asarray(infidelity(U1, U2))
    fl, capped = _cap(infid)
    return FidelityCurve(
        method=label or seq.method,
        targets=seq.targets,
        n=seq.n,
        t=t,
        F=np.clip(1.0 - infid, 0.0, 1.0),
        F_l=fl,
        capped=capped,
        infidelity=infid,
        meta=dict(meta or {}),
    )


def sweep_time(
    methods: Iterable,
    spec: HamiltonianSpec,
    t_grid,
    n: int = 1,
    options: dict | None = None,
) -> list[FidelityCurve]:
    """One :class:`FidelityCurve` per method on the model described by ``spec``.

    ``methods`` holds method names, ready-made :class:`GateSequence` objects or
    lattice paths.  ``options`` maps a method name to planner keyword
    arguments, e.g. ``{"2T": {"reduce": True}}``.
    """
    hams = build_model(spec)
    exps = [HermitianExp(H) for H in hams]
    weights = tuple(spec.weights)
    options = options or {}
    curves = []
    for m in methods:
        seq = _as_sequence(m, weights, n, options)
        if seq.targets != weights:
            raise DomainError(f"sequence targets {seq.targets} differ from model weights {weights}")
        curves.append(curve_for(seq, hams, t_grid, exps, meta={"model": spec.model, **spec.meta}))
    return curves


# -- slope fits -------------------------------------------------------------


class SlopeFit(NamedTuple):
    a: float
    b: float
    residual: float
    t_min: float
    t_max: float
    count: int


def _local_slopes(logt, fl):
    return -np.diff(fl) / np.diff(logt)


def auto_window(curve: FidelityCurve, tolerance: float = 0.05, min_points: int = 4):
    """Widest run of uncapped samples whose local slopes agree within ``tolerance``."""
    keep = ~np.asarray(curve.capped)
    logt, fl = np.log10(curve.t[keep]), np.asarray(curve.F_l)[keep]
    slopes = _local_slopes(logt, fl)
    best = None
    for i in range(len(slopes)):
        for j in range(i + min_points - 1, len(slopes) + 1):
            seg = slopes[i:j]
            centre = abs(float(np.median(seg)))
            if centre == 0 or np.ptp(seg) > tolerance * centre:
                break
            if best is None or j - i > best[1] - best[0]:
                best = (i, j)
    if best is None:
        raise NumericalError("no window with a stable local slope")
    t = curve.t[keep]
    return float(t[best[0]]), float(t[best[1]])


def fit_slope(
    curve: FidelityCurve,
    window: tuple[float, float] | None = None,
    strict: bool = False,
    min_points: int = 4,
) -> SlopeFit:
    """Least-squares fit ``F_l = -a log10 t + b`` over ``window``.

    Capped samples are dropped; with ``strict=True`` their presence inside the
    window is an error instead.  Without a window the widest stable one is
    chosen by :func:`auto_window`.
    """
    if window is None:
        window = auto_window(curve, min_points=min_points)
    lo, hi = window
    if not lo < hi:
        raise DomainError(f"empty fit window {window}")
    inside = (curve.t >= lo * (1 - 1e-12)) & (curve.t <= hi * (1 + 1e-12))
    capped = np.asarray(curve.capped) & inside
    if strict and np.any(capped):
        raise NumericalError(f"{int(capped.sum())} capped samples inside the fit window")
    use = inside & ~np.asarray(curve.capped)
    if use.sum() < min_points:
        raise NumericalError(
            f"need at least {min_points} uncapped samples in [{lo:g}, {hi:g}], got {int(use.sum())}"
        )
    x = np.log10(curve.t[use])
    y = np.asarray(curve.F_l)[use]
    (slope, intercept), *_ = np.linalg.lstsq(np.vstack([x, np.ones_like(x)]).T, y, rcond=None)
    residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return SlopeFit(float(-slope), float(intercept), residual, float(10 ** x.min()), float(10 ** x.max()), int(use.sum()))


# -- crossovers ---------------------------------------------------------------


def _first_sign_change(d: np.ndarray, valid: np.ndarray):
    last = None
    for k in range(len(d)):
        if not valid[k] or d[k] == 0:
            continue
        if last is not None and np.sign(d[k]) != np.sign(d[last]):
            return last, k
        last = k
    return None


def find_crossover(
    curve_a: FidelityCurve,
    curve_b: FidelityCurve,
    diff: Callable[[float], float] | None = None,
    scale: float = 1.0,
    rtol: float = 1e-3,
) -> float | None:
    """First upward-in-``t`` sign change of ``F_l(a) - F_l(b)``.

    The bracket is refined by bisection in ``log t`` on ``diff(t)`` (which
    should recompute the difference at arbitrary ``t``) or, without it, by
    linear interpolation in ``log t``.  The result is ``t * scale``; pass
    ``scale = ||A|| / n`` to get normalised units.  ``None`` means the curves
    do not cross on the grid.
    """
    if curve_a.t.shape != curve_b.t.shape or np.any(curve_a.t != curve_b.t):
        raise DomainError("curves must share one time grid")
    d = np.asarray(curve_a.F_l) - np.asarray(curve_b.F_l)
    valid = ~(np.asarray(curve_a.capped) & np.asarray(curve_b.capped))
    bracket = _first_sign_change(d, valid)
    if bracket is None:
        return None
    i, j = bracket
    lo, hi = math.log(curve_a.t[i]), math.log(curve_a.t[j])
    if diff is None:
        x = lo + (hi - lo) * d[i] / (d[i] - d[j])
        return math.exp(x) * scale
    d_lo = d[i]
    while hi - lo > rtol:
        mid = 0.5 * (lo + hi)
        d_mid = diff(math.exp(mid))
        if d_mid == 0:
            lo = hi = mid
            break
        if np.sign(d_mid) == np.sign(d_lo):
            lo, d_lo = mid, d_mid
        else:
            hi = mid
    return math.exp(0.5 * (lo + hi)) * scale


def operator_norm(H) -> float:
    """Frobenius norm used to normalise times as ``t ||A|| / n``."""
    return float(np.linalg.norm(np.asarray(H)))


def crossover_point(
    hams: Sequence[np.ndarray],
    p: int,
    q: int,
    n: int = 1,
    x_range: tuple[float, float] = (0.01, 1.0),
    points: int = 200,
    rtol: float = 1e-3,
    first: str = "2O",
    second: str = "2D",
) -> float | None:
    """Normalised time where the ``second`` ordering overtakes the ``first``."""
    if points < 2:
        raise DomainError("need at least two scan points")
    exps = [HermitianExp(H) for H in hams]
    seq_a, seq_b = plan(first, (p, q), n), plan(second, (p, q), n)
    scale = operator_norm(hams[0]) / n
    t = np.geomspace(x_range[0], x_range[1], points) / scale
    exact = HermitianExp(p * np.asarray(hams[0]) + q * np.asarray(hams[1]))

    def fl(seq, tt):
        return _cap(np.asarray(infidelity(exact(tt), sequence_to_unitary(seq, hams, tt, exps=exps))))

    (fa, ca), (fb, cb) = fl(seq_a, t), fl(seq_b, t)
    curve_a = FidelityCurve(first, (p, q), n, t, 1 - 10.0 ** -fa, fa, ca, 10.0 ** -fa)
    curve_b = FidelityCurve(second, (p, q), n, t, 1 - 10.0 ** -fb, fb, cb, 10.0 ** -fb)

    def diff(tt):
        return fl(seq_a, tt)[0] - fl(seq_b, tt)[0]

    return find_crossover(curve_a, curve_b, diff=diff, scale=scale, rtol=rtol)


@dataclass
class CrossoverStats:
    values: tuple[float, ...]
    skipped: int
    samples: int
    mean: float
    variance: float
    std: float
    bin_edges: tuple[float, ...]
    bin_counts: tuple[int, ...]
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema": STATS_SCHEMA,
            "samples": self.samples,
            "found": len(self.values),
            "skipped": self.skipped,
            "mean": self.mean,
            "variance": self.variance,
            "std": self.std,
            "bin_edges": list(self.bin_edges),
            "bin_counts": list(self.bin_counts),
            "values": list(self.values),
            "meta": self.meta,
        }


def worker_count(default: int = 1) -> int:
    """Thread cap from ``TROTTER_PLANNER_THREADS`` (at least 1)."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise DomainError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(1, value)


def _histogram_sample(child: np.random.SeedSequence, p, q, n, dim, x_range, points, rtol):
    s1, s2 = child.spawn(2)
    hams = [random_hermitian(dim, s1), random_hermitian(dim, s2)]
    return crossover_point(hams, p, q, n, x_range, points, rtol)


def crossover_histogram(
    p: int = 12,
    q: int = 8,
    n: int = 1,
    samples: int = 1000,
    seed: int = 0,
    dim: int = 4,
    bins: int = 20,
    x_range: tuple[float, float] = (0.01, 1.0),
    points: int = 200,
    rtol: float = 1e-3,
    workers: int | None = None,
) -> CrossoverStats:
    """Crossover statistics over seeded random Hermitian pairs.

    Sample ``k`` draws its two matrices from the ``k``-th child of
    ``SeedSequence(seed)``, so results do not depend on ``workers``.
    """
    if int(samples) != samples or samples < 1:
        raise DomainError(f"samples must be a positive integer, got {samples!r}")
    children = np.random.SeedSequence(seed).spawn(int(samples))
    workers = worker_count() if workers is None else max(1, int(workers))
    args = (p, q, n, dim, x_range, points, rtol)
    if workers == 1:
        results = [_histogram_sample(c, *args) for c in children]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda c: _histogram_sample(c, *args), children))
    values = [r for r in results if r is not None]
    if not values:
        raise EmptyStatsError(f"no crossover found in any of {samples} samples")
    arr = np.asarray(values)
    counts, edges = np.histogram(arr, bins=bins)
    return CrossoverStats(
        values=tuple(float(v) for v in values),
        skipped=len(results) - len(values),
        samples=int(samples),
        mean=float(arr.mean()),
        variance=float(arr.var()),
        std=float(arr.std()),
        bin_edges=tuple(float(e) for e in edges),
        bin_counts=tuple(int(c) for c in counts),
        meta={"p": p, "q": q, "n": n, "seed": seed, "dim": dim},
    )


# -- resources ----------------------------------------------------------------


class Resources(NamedTuple):
    switchings: int
    trotter_steps: int
    n: int
    fidelity: float


def count_resources(
    method,
    target_F: float,
    hams: Sequence[np.ndarray],
    t: float,
    targets: Sequence[int] | None = None,
    n_cap: int = 1 << 14,
    **options,
) -> Resources:
    """Smallest Trotter number reaching ``F >= target_F``, with its costs.

    ``method`` is a method name (planned on ``targets``) or a callable
    ``n -> GateSequence``.  The search doubles ``n`` until the target is met
    and then bisects the last interval, which assumes fidelity grows with
    ``n`` there.
    """
    if not 0 < target_F < 1:
        raise DomainError(f"target fidelity must lie in (0, 1), got {target_F}")
    if callable(method):
        build = method
    else:
        if targets is None:
            raise DomainError("targets are required when planning by method name")
        build = lambda m: plan(method, targets, m, **options)  # noqa: E731
    exps = [HermitianExp(H) for H in hams]
    cache: dict[int, tuple[GateSequence, float]] = {}

    def evaluate(m):
        if m not in cache:
            seq = build(m)
            U1 = HermitianExp(sum(w * np.asarray(h) for w, h in zip(seq.targets, hams)))(t)
            F = 1.0 - infidelity(U1, sequence_to_unitary(seq, hams, t, exps=exps))
            cache[m] = (seq, F)
        return cache[m]

    hi = 1
    while evaluate(hi)[1] < target_F:
        if hi >= n_cap:
            raise NumericalError(
                f"fidelity {target_F} not reached within n <= {n_cap} "
                f"(best {max(f for _, f in cache.values()):.6g})"
            )
        hi = min(2 * hi, n_cap)
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if evaluate(mid)[1] >= target_F:
            hi = mid
        else:
            lo = mid
    seq, F = evaluate(hi)
    return Resources(seq.switchings, seq.trotter_steps, hi, float(F))


# -- output -----------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def curves_to_csv(curves: Sequence[FidelityCurve], extra: dict | None = None) -> str:
    """Long-format CSV with a versioned comment header."""
    buf = io.StringIO()
    header = f"# schema={CSV_SCHEMA}"
    if extra:
        header += " " + " ".join(f"{k}={v}" for k, v in sorted(extra.items()))
    buf.write(header + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["method", "targets", "n", "t", "F", "F_l", "capped"])
    for c in curves:
        tag = "-".join(map(str, c.targets))
        for t, F, fl, cap in zip(c.t, c.F, c.F_l, c.capped):
            writer.writerow([c.method, tag, c.n, _fmt(t), _fmt(F), _fmt(fl), int(cap)])
    return buf.getvalue()


def read_curves_csv(text: str) -> list[FidelityCurve]:
    """Inverse of :func:`curves_to_csv` (infidelity is rebuilt from ``F``)."""
    lines = text.splitlines()
    if not lines or not lines[0].startswith(f"# schema={CSV_SCHEMA}"):
        raise DomainError("missing or unsupported CSV schema header")
    rows = list(csv.DictReader(lines[1:]))
    grouped: dict[tuple, list[dict]] = {}
    for r in rows:
        grouped.setdefault((r["method"], r["targets"], r["n"]), []).append(r)
    out = []
    for (method, tag, n), rs in grouped.items():
        F = np.array([float(r["F"]) for r in rs])
        out.append(
            FidelityCurve(
                method, tuple(int(x) for x in tag.split("-")), int(n),
                np.array([float(r["t"]) for r in rs]), F,
                np.array([float(r["F_l"]) for r in rs]),
                np.array([r["capped"] == "1" for r in rs]), 1 - F,
            )
        )
    return out


def stats_to_json(stats: CrossoverStats) -> str:
    return json.dumps(stats.to_dict(), indent=2, sort_keys=True) + "\n"
