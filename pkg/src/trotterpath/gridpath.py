"""Orderings of product formulas as monotone lattice paths.

A product ``e^{X_1} e^{X_2} ... e^{X_L}`` of elementary exponentials is drawn
as a path on the integer grid: the factor written first (leftmost) is the
first unit step, axis 0 stands for the first operator ``A``, axis 1 for ``B``
and so on.  With that reading, the product times the inverse exact
propagator expands as::

    U_path U_exact^{-1} = 1 + e2 [A,B] + e3a [A,[A,B]] + e3b [B,[A,B]] + O(4)

where ``e2`` is the signed area between the path and the diagonal (regions
below the diagonal count positive) and ``e3a``, ``e3b`` are its first moments
about the two axes.  All geometric quantities are exact rationals.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from .exceptions import BudgetExceededError, DomainError, UnsupportedDimensionError

ALPHABET = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"

RIGHT = 0
UP = 1


@dataclass(frozen=True)
class LatticePath:
    """Directed unit-step path from the origin to ``targets``.

    ``steps[k]`` is the axis index of the k-th step.  The path is validated on
    construction: it must end exactly at ``targets``.
    """

    targets: tuple[int, ...]
    steps: tuple[int, ...]

    def __post_init__(self):
        targets = tuple(int(t) for t in self.targets)
        steps = tuple(int(s) for s in self.steps)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "steps", steps)

        d = len(targets)
        if d < 2:
            raise DomainError(f"need at least two operator types, got {d}")
        if d > len(ALPHABET):
            raise DomainError(f"at most {len(ALPHABET)} operator types are supported")
        if any(t < 1 for t in targets):
            raise DomainError(f"all targets must be >= 1, got {targets}")
        counts = [0] * d
        for s in steps:
            if not 0 <= s < d:
                raise DomainError(f"step axis {s} outside [0, {d})")
            counts[s] += 1
        if tuple(counts) != targets:
            raise DomainError(f"path ends at {tuple(counts)}, not at targets {targets}")

    @classmethod
    def from_string(cls, text: str, targets: Sequence[int] | None = None) -> "LatticePath":
        """Parse ``"ABBA"``-style text; targets default to the letter counts."""
        text = text.strip().upper()
        try:
            steps = tuple(ALPHABET.index(ch) for ch in text)
        except ValueError:
            raise DomainError(f"invalid step string {text!r}") from None
        if targets is None:
            d = max(2, max(steps, default=0) + 1)
            targets = tuple(steps.count(k) for k in range(d))
        return cls(tuple(targets), steps)

    @property
    def dims(self) -> int:
        return len(self.targets)

    def __len__(self) -> int:
        return len(self.steps)

    def __str__(self) -> str:
        return "".join(ALPHABET[s] for s in self.steps)

    def points(self) -> list[tuple[int, ...]]:
        """Every node visited, origin included."""
        pos = [0] * self.dims
        out = [tuple(pos)]
        for s in self.steps:
            pos[s] += 1
            out.append(tuple(pos))
        return out

    def runs(self) -> list[tuple[int, int]]:
        """Maximal blocks of equal steps as ``(axis, length)`` pairs."""
        return [(k, len(list(g))) for k, g in itertools.groupby(self.steps)]

    def reversed(self) -> "LatticePath":
        return LatticePath(self.targets, self.steps[::-1])

    def swapped(self, i: int = 0, j: int = 1) -> "LatticePath":
        """Exchange the roles of axes ``i`` and ``j``."""
        perm = list(range(self.dims))
        perm[i], perm[j] = perm[j], perm[i]
        targets = list(self.targets)
        targets[i], targets[j] = targets[j], targets[i]
        return LatticePath(tuple(targets), tuple(perm[s] for s in self.steps))

    def concat(self, other: "LatticePath") -> "LatticePath":
        if other.dims != self.dims:
            raise DomainError("cannot concatenate paths of different dimension")
        targets = tuple(a + b for a, b in zip(self.targets, other.targets))
        return LatticePath(targets, self.steps + other.steps)

    def repeat(self, times: int) -> "LatticePath":
        if times < 1:
            raise DomainError(f"repeat count must be >= 1, got {times}")
        return LatticePath(tuple(t * times for t in self.targets), self.steps * times)

    def to_dict(self) -> dict:
        return {"targets": list(self.targets), "steps": str(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "LatticePath":
        return cls.from_string(data["steps"], data["targets"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "LatticePath":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class ErrorTriplet:
    """Exact coefficients of ``[A,B]``, ``[A,[A,B]]`` and ``[B,[A,B]]``."""

    e2: Fraction
    e3a: Fraction
    e3b: Fraction

    def scaled(self) -> tuple[int, int, int]:
        """Integer form ``(2 e2, 6 e3a, 6 e3b)`` used by the error table."""
        out = (2 * self.e2, 6 * self.e3a, 6 * self.e3b)
        assert all(v.denominator == 1 for v in out)
        return tuple(int(v) for v in out)

    @property
    def moment_objective(self) -> Fraction:
        return abs(self.e3a) + abs(self.e3b)

    def normalized(self, n: int) -> "ErrorTriplet":
        """Rescale from grid units (steps of ``A/n``) to units of ``A``."""
        return ErrorTriplet(self.e2 / n**2, self.e3a / n**3, self.e3b / n**3)

    def __add__(self, other: "ErrorTriplet") -> "ErrorTriplet":
        return ErrorTriplet(self.e2 + other.e2, self.e3a + other.e3a, self.e3b + other.e3b)


def _require_2d(path: LatticePath) -> None:
    if path.dims != 2:
        raise UnsupportedDimensionError(
            f"third-order geometry is defined for two operators, got {path.dims}"
        )


def _segment_integrals(a, b) -> tuple[Fraction, Fraction, Fraction]:
    # along x = a + s (b - a): x1 dx2 - x2 dx1 = (a1 d2 - a2 d1) ds
    d1, d2 = b[0] - a[0], b[1] - a[1]
    c = Fraction(a[0] * d2 - a[1] * d1)
    return c, c * (a[0] + Fraction(d1, 2)), c * (a[1] + Fraction(d2, 2))


def error_triplet(path: LatticePath) -> ErrorTriplet:
    """Signed area and moments of ``path``, summed edge by edge.

    Each edge contributes its share of the loop integrals
    ``1/2 ∮ (x1 dx2 - x2 dx1)`` and ``1/3 ∮ x_k (x1 dx2 - x2 dx1)``; the
    closing segment along the diagonal contributes nothing.
    """
    _require_2d(path)
    w1 = w2 = w3 = Fraction(0)
    pts = path.points()
    for a, b in zip(pts, pts[1:]):
        c, cx1, cx2 = _segment_integrals(a, b)
        w1 += c
        w2 += cx1
        w3 += cx2
    return ErrorTriplet(w1 / 2, w2 / 3, w3 / 3)


def signed_area(path: LatticePath) -> Fraction:
    """Area between path and diagonal, positive below the diagonal."""
    return error_triplet(path).e2


def third_moments(path: LatticePath) -> tuple[Fraction, Fraction]:
    """First moments ``(∬ x1, ∬ x2)`` of the signed region."""
    t = error_triplet(path)
    return t.e3a, t.e3b


def edge_weight(i: int, j: int, direction: int | str) -> tuple[int, int, int]:
    """Integer weight triple of the edge ending at node ``(i, j)``.

    ``direction`` is ``"right"`` (edge from ``(i-1, j)``) or ``"up"`` (edge
    from ``(i, j-1)``).  Summed over a path these give
    ``(2 e2, 6 e3a, 6 e3b)``.
    """
    if i < 0 or j < 0:
        raise DomainError(f"node indices must be non-negative, got ({i}, {j})")
    if direction in (RIGHT, "right", "r", "A"):
        return (-j, -j * (i * i - (i - 1) ** 2), -2 * j * j)
    if direction in (UP, "up", "u", "B"):
        return (i, 2 * i * i, i * (j * j - (j - 1) ** 2))
    raise DomainError(f"unknown direction {direction!r}")


def path_weight_sum(path: LatticePath) -> tuple[int, int, int]:
    """Sum of :func:`edge_weight` along ``path``."""
    _require_2d(path)
    total = [0, 0, 0]
    i = j = 0
    for s in path.steps:
        if s == RIGHT:
            i += 1
        else:
            j += 1
        for k, w in enumerate(edge_weight(i, j, s)):
            total[k] += w
    return tuple(total)


def enumerate_paths(p: int, q: int, max_total: int = 16) -> Iterator[LatticePath]:
    """Yield every monotone path from ``(0, 0)`` to ``(p, q)`` once.

    Paths come in lexicographic order of their step strings.  The count is
    ``C(p+q, p)``, so ``p + q`` is capped by ``max_total``.
    """
    if p < 1 or q < 1:
        raise DomainError(f"targets must be >= 1, got ({p}, {q})")
    if p + q > max_total:
        raise BudgetExceededError(
            f"enumerating C({p + q}, {p}) paths exceeds the bound p+q <= {max_total}"
        )
    length = p + q
    for right_positions in itertools.combinations(range(length), p):
        steps = [UP] * length
        for k in right_positions:
            steps[k] = RIGHT
        yield LatticePath((p, q), tuple(steps))


def diagonal_distance_sq(point: Sequence[int], targets: Sequence[int]) -> Fraction:
    """Squared Euclidean distance from ``point`` to the line through 0 and ``targets``."""
    dot = sum(x * t for x, t in zip(point, targets))
    norm = sum(t * t for t in targets)
    return sum(Fraction(x * x) for x in point) - Fraction(dot * dot, norm)


def total_diagonal_distance(path: LatticePath) -> float:
    """Sum over nodes of the Euclidean distance to the diagonal."""
    return math.fsum(
        math.sqrt(diagonal_distance_sq(pt, path.targets)) for pt in path.points()
    )


def deviation_sum(path: LatticePath) -> int:
    """Exact two-operator version of :func:`total_diagonal_distance`.

    Returns ``sum |q x1 - p x2|`` over the nodes, which equals the total
    distance times ``sqrt(p^2 + q^2)``.
    """
    _require_2d(path)
    p, q = path.targets
    return sum(abs(q * x - p * y) for x, y in path.points())
