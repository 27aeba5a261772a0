"""Construction of product-formula orderings.

Lattice orderings (2-Diagonal greedy, 2-Optimal dynamic programming, naive
alternation) come back as :class:`~trotterpath.gridpath.LatticePath` objects
on the full ``(p n) x (q n)`` grid.  Formulas that need fractional or
negative exponents (Ruth, continuous symmetric Trotter) and the standard
baselines come back as :class:`GateSequence` schedules.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Sequence

from .exceptions import (
    BudgetExceededError,
    DomainError,
    NoZeroAreaPathError,
    NotRepresentableError,
    UnsupportedDimensionError,
)
from .gridpath import ALPHABET, LatticePath, diagonal_distance_sq, edge_weight

METHODS = ("1T", "2T", "2D", "2O", "ruth", "naive", "cont2T")

DEFAULT_2O_BUDGET = 4096


def _check_targets(targets: Sequence[int], dims: int | None = None) -> tuple[int, ...]:
    try:
        out = tuple(int(t) for t in targets)
    except TypeError:
        raise DomainError(f"targets must be a sequence of integers, got {targets!r}") from None
    if any(o != t for o, t in zip(out, targets)):
        raise DomainError(f"targets must be integers, got {targets!r}")
    if len(out) < 2:
        raise DomainError("need at least two operator weights")
    if dims is not None and len(out) != dims:
        raise UnsupportedDimensionError(f"expected {dims} weights, got {len(out)}")
    if any(t < 1 for t in out):
        raise DomainError(f"every weight must be >= 1, got {out}")
    return out


def _check_n(n: int) -> int:
    if int(n) != n or n < 1:
        raise DomainError(f"Trotter number must be a positive integer, got {n!r}")
    return int(n)


def _gcd(values: Sequence[int]) -> int:
    return reduce(math.gcd, values)


@dataclass(frozen=True)
class GateSequence:
    """Executable schedule of exponentials, stored as one repeated unit.

    Entry ``(k, c)`` of the unit stands for ``exp(-i H_k c w_k t / reps)``,
    where ``w_k = targets[k]``.  Coefficients of each term sum to one over
    the unit, so the whole schedule reproduces ``exp(-i t sum_k w_k H_k)`` at
    first order.  ``n`` fixes the resolution: the shortest implementable gate
    is ``exp(-i H_k t / n)``.
    """

    method: str
    targets: tuple[int, ...]
    n: int
    entries: tuple[tuple[int, Fraction], ...]
    reps: int = 1
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        targets = _check_targets(self.targets)
        entries = tuple((int(k), Fraction(c)) for k, c in self.entries)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "n", _check_n(self.n))
        if int(self.reps) != self.reps or self.reps < 1:
            raise DomainError(f"reps must be a positive integer, got {self.reps!r}")
        object.__setattr__(self, "reps", int(self.reps))

        sums = [Fraction(0)] * len(targets)
        for k, c in entries:
            if not 0 <= k < len(targets):
                raise DomainError(f"term index {k} out of range for {len(targets)} terms")
            sums[k] += c
        if any(s != 1 for s in sums):
            raise DomainError(f"per-term coefficients must sum to 1, got {[str(s) for s in sums]}")

    @property
    def dims(self) -> int:
        return len(self.targets)

    def step_counts(self, resolution: int | None = None) -> list[Fraction]:
        """Length of every unit entry in minimum gates at ``resolution``."""
        m = self.n if resolution is None else resolution
        return [c * self.targets[k] * m / self.reps for k, c in self.entries]

    @property
    def integral(self) -> bool:
        """True when every entry is a non-negative whole number of minimum gates."""
        return all(s.denominator == 1 and s >= 0 for s in self.step_counts())

    def lattice_path(self, resolution: int | None = None) -> LatticePath:
        """Expand into unit steps on the ``targets * resolution`` grid."""
        m = self.n if resolution is None else _check_n(resolution)
        steps: list[int] = []
        for (k, _), count in zip(self.entries, self.step_counts(m)):
            if count.denominator != 1 or count < 0:
                raise NotRepresentableError(
                    f"{self.method} entry for term {ALPHABET[k]} spans {count} gates "
                    f"at resolution {m}; not a lattice path"
                )
            steps.extend([k] * int(count))
        unit_targets = tuple(t * m // self.reps for t in self.targets)
        return LatticePath(unit_targets, tuple(steps)).repeat(self.reps)

    def unrolled_terms(self) -> list[int]:
        return [k for k, _ in self.entries] * self.reps

    @property
    def switchings(self) -> int:
        """Adjacent pairs of gates generated by different terms."""
        terms = self.unrolled_terms()
        return sum(1 for a, b in zip(terms, terms[1:]) if a != b)

    @property
    def trotter_steps(self) -> int:
        return sum(self.targets) * self.n

    @classmethod
    def from_path(
        cls,
        path: LatticePath,
        method: str = "path",
        n: int = 1,
        weights: Sequence[int] | None = None,
    ) -> "GateSequence":
        """Wrap a lattice path covering the full ``weights * n`` grid."""
        n = _check_n(n)
        if weights is None:
            if any(t % n for t in path.targets):
                raise DomainError(f"path targets {path.targets} are not multiples of n={n}")
            weights = tuple(t // n for t in path.targets)
        weights = _check_targets(weights, path.dims)
        if tuple(w * n for w in weights) != path.targets:
            raise DomainError(f"path targets {path.targets} != weights {weights} * n={n}")
        entries = tuple(
            (k, Fraction(length, weights[k] * n)) for k, length in path.runs()
        )
        return cls(method, weights, n, entries, 1)

    def to_dict(self) -> dict:
        out = {
            "method": self.method,
            "targets": list(self.targets),
            "n": self.n,
            "reps": self.reps,
            "entries": [
                {"term": k, "coeff_num": c.numerator, "coeff_den": c.denominator}
                for k, c in self.entries
            ],
        }
        if self.integral:
            out["steps"] = str(self.lattice_path())
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "GateSequence":
        entries = tuple(
            (e["term"], Fraction(e["coeff_num"], e["coeff_den"])) for e in data["entries"]
        )
        seq = cls(data["method"], tuple(data["targets"]), data["n"], entries, data.get("reps", 1))
        if "steps" in data and str(seq.lattice_path()) != data["steps"]:
            raise DomainError("steps field disagrees with entries")
        return seq

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "GateSequence":
        return cls.from_dict(json.loads(text))


# -- 2-Diagonal -------------------------------------------------------------


def _greedy_unit(unit: tuple[int, ...], tie_break: str) -> LatticePath:
    d = len(unit)
    pos = [0] * d
    steps = []
    for _ in range(sum(unit)):
        best = None
        for k in range(d):
            if pos[k] >= unit[k]:
                continue
            pos[k] += 1
            dist = diagonal_distance_sq(pos, unit)
            pos[k] -= 1
            if tie_break == "deficit":
                key = (dist, -(unit[k] - pos[k]), k)
            else:
                key = (dist, k)
            if best is None or key < best[0]:
                best = (key, k)
        k = best[1]
        pos[k] += 1
        steps.append(k)
    return LatticePath(unit, tuple(steps))


def plan_2D(targets: Sequence[int], n: int = 1, tie_break: str = "index") -> LatticePath:
    """Greedy ordering that keeps every node closest to the diagonal.

    The weights are reduced by their gcd ``g``; the greedy unit path is then
    repeated ``g * n`` times.  Equidistant candidates go to the lower axis
    index (``tie_break="index"``), or first to the axis with more steps left
    (``"deficit"``).
    """
    if tie_break not in ("deficit", "index"):
        raise DomainError(f"unknown tie-break policy {tie_break!r}")
    targets = _check_targets(targets)
    n = _check_n(n)
    g = _gcd(targets)
    unit = tuple(t // g for t in targets)
    return _greedy_unit(unit, tie_break).repeat(g * n)


def symmetrize_2D(targets: Sequence[int], n: int = 1) -> GateSequence:
    """Second-order 2-Diagonal schedule for two odd weights.

    The greedy unit for the reduced weights is followed by its reverse; the
    combined unit covers ``(2p, 2q)`` and has zero signed area.  When
    ``g * n`` is even the unit runs at full resolution ``g n / 2`` times,
    otherwise it runs ``g n`` times with half-length gates.
    """
    targets = _check_targets(targets, 2)
    n = _check_n(n)
    g = _gcd(targets)
    p, q = (t // g for t in targets)
    if p % 2 == 0 or q % 2 == 0:
        raise NotRepresentableError(
            f"reduced weights ({p}, {q}) include an even one; plan_2D already cancels "
            "the second-order error"
        )
    half = _greedy_unit((p, q), "index")
    unit = half.concat(half.reversed())
    entries = tuple((k, Fraction(length, 2 * (p, q)[k])) for k, length in unit.runs())
    reps = g * n // 2 if (g * n) % 2 == 0 else g * n
    return GateSequence("2D", targets, n, entries, reps, meta={"symmetrized": True})


# -- 2-Optimal --------------------------------------------------------------


def _remaining_area_bounds(P: int, Q: int):
    """Min and max of the summed first weight over all paths from each node to (P, Q)."""
    lo = [[0] * (Q + 1) for _ in range(P + 1)]
    hi = [[0] * (Q + 1) for _ in range(P + 1)]
    for i in range(P, -1, -1):
        for j in range(Q, -1, -1):
            if i == P and j == Q:
                continue
            options = []
            if i < P:
                w = edge_weight(i + 1, j, "right")[0]
                options.append((w + lo[i + 1][j], w + hi[i + 1][j]))
            if j < Q:
                w = edge_weight(i, j + 1, "up")[0]
                options.append((w + lo[i][j + 1], w + hi[i][j + 1]))
            lo[i][j] = min(o[0] for o in options)
            hi[i][j] = max(o[1] for o in options)
    return lo, hi


def plan_2O(
    p: int,
    q: int,
    n: int = 1,
    budget: int = DEFAULT_2O_BUDGET,
    allow_large: bool = False,
) -> LatticePath:
    """Zero-area ordering with the least third-order moment, by dynamic programming.

    Every node keeps the set of accumulated integer weight triples reachable
    from the origin.  Triples whose first component can no longer return to
    zero are dropped.  At the corner, the zero-area triple with the smallest
    ``|w2| + |w3|`` wins; ties go to the lexicographically smallest step
    string.  Each triple carries the smallest prefix reaching it, encoded as
    an integer with ``A = 0``, ``B = 1`` and the first step most significant,
    so no separate traceback table is needed.

    The optimisation runs over the whole ``(p n) x (q n)`` grid.  Work grows
    roughly like ``O(N^10)`` in the grid side, so grids with more than
    ``budget`` nodes are refused unless ``allow_large`` is set.
    """
    p, q = _check_targets((p, q), 2)
    n = _check_n(n)
    P, Q = p * n, q * n
    if P * Q > budget and not allow_large:
        raise BudgetExceededError(
            f"2O on a {P}x{Q} grid ({P * Q} nodes) exceeds the budget of {budget} nodes; "
            "the error table grows like O(n^10) (pass allow_large=True to override)"
        )
    if (P * Q) % 2:
        raise NoZeroAreaPathError(
            f"both {P} and {Q} are odd, so it is not possible to cancel the second-order "
            f"error on this grid; optimise on the doubled ({2 * P}, {2 * Q}) grid instead"
        )

    lo, hi = _remaining_area_bounds(P, Q)

    def admissible(w1, i, j):
        return w1 + lo[i][j] <= 0 <= w1 + hi[i][j]

    prev_row: list[dict] = []
    for i in range(P + 1):
        row: list[dict] = []
        for j in range(Q + 1):
            if i == 0 and j == 0:
                row.append({(0, 0, 0): 0})
                continue
            cell: dict = {}
            sources = []
            if i > 0:
                sources.append((prev_row[j], edge_weight(i, j, "right"), 0))
            if j > 0:
                sources.append((row[j - 1], edge_weight(i, j, "up"), 1))
            for table, (e1, e2, e3), bit in sources:
                for (w1, w2, w3), prefix in table.items():
                    key = (w1 + e1, w2 + e2, w3 + e3)
                    if not admissible(key[0], i, j):
                        continue
                    code = prefix | (bit << (i + j - 1))
                    old = cell.get(key)
                    if old is None or code < old:
                        cell[key] = code
            row.append(cell)
        prev_row = row

    final = prev_row[Q]
    best = min(
        ((abs(w2) + abs(w3), code) for (w1, w2, w3), code in final.items() if w1 == 0),
        default=None,
    )
    if best is None:  # pragma: no cover - excluded by the parity check above
        raise NoZeroAreaPathError(f"no zero-area path on the {P}x{Q} grid")
    code = best[1]
    length = P + Q
    steps = tuple((code >> k) & 1 for k in range(length))
    return LatticePath((P, Q), steps)


# -- baselines --------------------------------------------------------------


def _two_t_entries(outer: int) -> tuple[tuple[int, Fraction], ...]:
    inner = 1 - outer
    return ((outer, Fraction(1, 2)), (inner, Fraction(1)), (outer, Fraction(1, 2)))


def plan_2T(p: int, q: int, n: int = 1, reduce: bool = False) -> GateSequence:
    """Symmetric second-order Trotter ``(e^{pA/2n} e^{qB/n} e^{pA/2n})^n``.

    The ``A``-outside form needs ``p`` even; otherwise the mirrored
    ``B``-outside form is used when ``q`` is even.  With ``reduce=True`` the
    weights are first divided by the largest divisor of their gcd that keeps
    one of them even, and the unit is repeated correspondingly more often.
    """
    p, q = _check_targets((p, q), 2)
    n = _check_n(n)
    div = 1
    if reduce:
        g = math.gcd(p, q)
        for cand in range(g, 0, -1):
            if g % cand == 0 and ((p // cand) % 2 == 0 or (q // cand) % 2 == 0):
                div = cand
                break
    pu, qu = p // div, q // div
    if pu % 2 == 0:
        outer = 0
    elif qu % 2 == 0:
        outer = 1
    else:
        raise NotRepresentableError(f"2T needs an even weight, but p={p} and q={q} are both odd")
    return GateSequence("2T", (p, q), n, _two_t_entries(outer), n * div)


def plan_1T(targets: Sequence[int], n: int = 1, reduce: bool = True) -> GateSequence:
    """First-order product ``(e^{pA/n} e^{qB/n} ...)^n``.

    With ``reduce=True`` the weights are divided by their gcd ``g`` first and
    the unit is repeated ``g n`` times, which halves the error of e.g.
    ``(2, 2)``.  ``reduce=False`` gives the literal product with ``n`` units.
    """
    targets = _check_targets(targets)
    n = _check_n(n)
    g = _gcd(targets) if reduce else 1
    entries = tuple((k, Fraction(1)) for k in range(len(targets)))
    seq = GateSequence("1T", targets, n, entries, g * n)
    if not seq.integral:  # pragma: no cover - always integral for integer weights
        warnings.warn("first-order sequence is not integral at the base step", stacklevel=2)
    return seq


def plan_naive_alternation(p: int, q: int, n: int = 1) -> LatticePath:
    """Alternate ``A, B, A, B, ...`` until one runs out, then append the rest; repeat ``n`` times."""
    p, q = _check_targets((p, q), 2)
    n = _check_n(n)
    m = min(p, q)
    steps = [0, 1] * m + [0] * (p - m) + [1] * (q - m)
    return LatticePath((p, q), tuple(steps)).repeat(n)


RUTH_COEFFICIENTS = (
    (0, Fraction(7, 24)),
    (1, Fraction(2, 3)),
    (0, Fraction(3, 4)),
    (1, Fraction(-2, 3)),
    (0, Fraction(-1, 24)),
    (1, Fraction(1)),
)


def plan_ruth(p: int, q: int, n: int = 1) -> GateSequence:
    """Ruth's third-order formula; contains negative (backward) steps."""
    p, q = _check_targets((p, q), 2)
    return GateSequence("ruth", (p, q), _check_n(n), RUTH_COEFFICIENTS, n)


def continuous_2T_region(p: int, q: int) -> str:
    """Region label: a (p >= 2q), b (q <= p < 2q), c (q/2 <= p < q), d (p < q/2)."""
    if p >= 2 * q:
        return "a"
    if p >= q:
        return "b"
    if 2 * p >= q:
        return "c"
    return "d"


def plan_best_continuous_2T(p: int, q: int, n: int = 1) -> GateSequence:
    """Symmetric Trotter with unrestricted time resolution, better of the two forms.

    The ``A``-outside form has third-order norm proportional to ``p^2 + 4 q^2``
    and the ``B``-outside form to ``q^2 + 4 p^2``; the smaller one is used
    (``A`` outside in regions a and b, ``B`` outside in c and d).
    """
    p, q = _check_targets((p, q), 2)
    n = _check_n(n)
    outer = 0 if p * p + 4 * q * q <= q * q + 4 * p * p else 1
    return GateSequence(
        "cont2T", (p, q), n, _two_t_entries(outer), n,
        meta={"region": continuous_2T_region(p, q)},
    )


# -- nested symmetric forms -------------------------------------------------


@dataclass(frozen=True)
class SplitCoefficients:
    """Nested symmetric split ``a_{M+1}/2, b_M/2, ..., b_1/2, a_1, b_1/2, ..., a_{M+1}/2``.

    ``a`` has ``M + 1`` entries and ``b`` has ``M``; both are non-negative and
    sum to one.
    """

    a: tuple[Fraction, ...]
    b: tuple[Fraction, ...]

    def __post_init__(self):
        a = tuple(Fraction(x) for x in self.a)
        b = tuple(Fraction(x) for x in self.b)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if len(a) != len(b) + 1:
            raise DomainError(f"need len(a) == len(b) + 1, got {len(a)} and {len(b)}")
        if any(x < 0 for x in a + b):
            raise DomainError("split coefficients must be non-negative")
        if sum(a) != 1 or sum(b) != 1:
            raise DomainError(f"split coefficients must sum to 1, got {sum(a)} and {sum(b)}")


def compute_CD(split: SplitCoefficients, p: int, q: int) -> tuple[Fraction, Fraction, Fraction]:
    """Third-order shape factors of a nested split and ``f = p^2 C^2 + q^2 D^2``.

    The third-order error of the split is ``(pq/24) (p C [A,[A,B]] + q D [B,[A,B]])``.
    """
    a, b = split.a, split.b
    M = len(b)
    A_pre = [Fraction(0)]
    B_pre = [Fraction(0)]
    for k in range(M + 1):
        A_pre.append(A_pre[-1] + a[k])
    for k in range(M):
        B_pre.append(B_pre[-1] + b[k])
    C = Fraction(0)
    D = Fraction(0)
    for k in range(1, M + 1):
        Ak, Bk, Bk1 = A_pre[k], B_pre[k], B_pre[k - 1]
        bk, ak1 = b[k - 1], a[k]
        C += 2 * Ak * Ak * bk - ak1 * Bk * (ak1 + 2 * Ak)
        D += Ak * bk * (bk + 2 * Bk1) - 2 * ak1 * Bk * Bk
    return C, D, p * p * C * C + q * q * D * D


def split_from_path(path: LatticePath) -> SplitCoefficients:
    """Read the nested split off a palindromic two-operator path."""
    if path.dims != 2:
        raise UnsupportedDimensionError("nested splits are defined for two operators")
    if path.steps != path.steps[::-1]:
        raise DomainError(f"path {path} is not symmetric")
    p, q = path.targets
    runs = path.runs()
    centre = len(runs) // 2
    a: list[Fraction] = []
    b: list[Fraction] = []
    axis, length = runs[centre]
    if axis == 0:
        a.append(Fraction(length, p))
    else:
        a.append(Fraction(0))
        b.append(Fraction(length, q))
    for axis, length in runs[centre + 1:]:
        share = Fraction(2 * length, path.targets[axis])
        (a if axis == 0 else b).append(share)
    if len(a) == len(b):
        a.append(Fraction(0))
    return SplitCoefficients(tuple(a), tuple(b))


def path_shape_factors(path: LatticePath) -> tuple[Fraction, Fraction, Fraction]:
    """``(C, D, f)`` computed from the exact moments of a two-operator path."""
    from .gridpath import error_triplet

    p, q = path.targets
    t = error_triplet(path)
    C = 24 * t.e3a / (p * p * q)
    D = 24 * t.e3b / (p * q * q)
    return C, D, p * p * C * C + q * q * D * D


# -- dispatch ---------------------------------------------------------------


def plan(method: str, targets: Sequence[int], n: int = 1, **options) -> GateSequence:
    """Build any supported ordering as a :class:`GateSequence`.

    ``"2D"`` is symmetrized automatically when both reduced weights of a
    two-operator target are odd.
    """
    targets = _check_targets(targets)
    n = _check_n(n)
    if method == "2D":
        if len(targets) == 2:
            g = _gcd(targets)
            if (targets[0] // g) % 2 and (targets[1] // g) % 2:
                return symmetrize_2D(targets, n)
        return GateSequence.from_path(plan_2D(targets, n, **options), "2D", n, targets)
    if method == "1T":
        return plan_1T(targets, n, **options)
    if len(targets) != 2:
        raise UnsupportedDimensionError(f"method {method} is defined for two operators")
    p, q = targets
    if method == "2O":
        return GateSequence.from_path(plan_2O(p, q, n, **options), "2O", n, targets)
    if method == "2T":
        return plan_2T(p, q, n, **options)
    if method == "naive":
        return GateSequence.from_path(plan_naive_alternation(p, q, n), "naive", n, targets)
    if method == "ruth":
        return plan_ruth(p, q, n)
    if method == "cont2T":
        return plan_best_continuous_2T(p, q, n)
    raise DomainError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")
