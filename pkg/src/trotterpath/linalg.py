"""Dense Hermitian models, exact exponentials and schedule propagators."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np
import scipy.linalg

from .exceptions import DomainError, NumericalError
from .gridpath import LatticePath
from .planners import GateSequence

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

MODELS = ("tfi2", "tfi-lz3")


def site_operator(ops: dict[int, np.ndarray], n_spins: int) -> np.ndarray:
    """Kronecker product with ``ops[k]`` on site ``k`` and identities elsewhere."""
    factors = [ops.get(k, IDENTITY) for k in range(n_spins)]
    return reduce(np.kron, factors)


def _field(pauli, n_spins):
    return sum(site_operator({k: pauli}, n_spins) for k in range(n_spins))


def _bonds(pauli, n_spins):
    dim = 2**n_spins
    out = np.zeros((dim, dim), dtype=complex)
    for k in range(n_spins - 1):
        out += site_operator({k: pauli, k + 1: pauli}, n_spins)
    return out


def tfi_two_term(n_spins: int = 2) -> list[np.ndarray]:
    """``H1 = 1/2 sum_k Z_k`` and ``H2 = sum_k X_k X_{k+1}`` on an open chain."""
    return [0.5 * _field(SIGMA_Z, n_spins), _bonds(SIGMA_X, n_spins)]


def tfi_three_term(n_spins: int = 2) -> list[np.ndarray]:
    """``H1 = sum Z_k Z_{k+1}``, ``H2 = 1/2 sum Z_k``, ``H3 = 1/2 sum X_k``."""
    return [_bonds(SIGMA_Z, n_spins), 0.5 * _field(SIGMA_Z, n_spins), 0.5 * _field(SIGMA_X, n_spins)]


def check_hermitian(H: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {H.shape}")
    residual = np.max(np.abs(H - H.conj().T)) if H.size else 0.0
    if residual > tol:
        raise DomainError(f"matrix is not Hermitian (max |H - H^dag| = {residual:.3g})")
    return H


@dataclass
class HamiltonianSpec:
    """Named spin model or explicit Hermitian terms, plus integer weights.

    ``kind`` is ``"model"`` (then ``model`` names one of :data:`MODELS`) or
    ``"matrices"`` (then ``matrices`` holds the terms).
    """

    kind: str = "model"
    model: str | None = "tfi2"
    n_spins: int = 2
    matrices: list | None = None
    weights: tuple[int, ...] = (1, 1)
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        if self.kind == "model":
            return 2**self.n_spins
        return int(np.asarray(self.matrices[0]).shape[0])


def build_model(spec: HamiltonianSpec) -> list[np.ndarray]:
    """Materialise the Hermitian terms of ``spec``."""
    if spec.kind == "model":
        if spec.n_spins < 1:
            raise DomainError(f"need at least one spin, got {spec.n_spins}")
        if spec.model == "tfi2":
            hams = tfi_two_term(spec.n_spins)
        elif spec.model == "tfi-lz3":
            hams = tfi_three_term(spec.n_spins)
        else:
            raise DomainError(f"unknown model {spec.model!r}; expected one of {MODELS}")
    elif spec.kind == "matrices":
        if not spec.matrices:
            raise DomainError("explicit Hamiltonian spec without matrices")
        hams = [check_hermitian(H) for H in spec.matrices]
        if len({H.shape for H in hams}) != 1:
            raise DomainError("all terms must share one dimension")
    else:
        raise DomainError(f"unknown Hamiltonian kind {spec.kind!r}")
    if len(spec.weights) != len(hams):
        raise DomainError(f"{len(hams)} terms but {len(spec.weights)} weights")
    return hams


def random_hermitian(dim: int, seed) -> np.ndarray:
    """GUE-style draw ``(M + M^dag) / 2`` with standard complex Gaussian ``M``.

    ``seed`` is anything :func:`numpy.random.default_rng` accepts, including a
    :class:`numpy.random.SeedSequence`; equal seeds give identical matrices.
    """
    if dim < 2:
        raise DomainError(f"dimension must be >= 2, got {dim}")
    rng = np.random.default_rng(seed)
    M = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    return (M + M.conj().T) / 2


class HermitianExp:
    """Cached eigendecomposition of ``H`` for repeated ``exp(-i s H)``."""

    def __init__(self, H: np.ndarray):
        H = check_hermitian(H)
        try:
            self.eigvals, self.eigvecs = np.linalg.eigh(H)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"eigendecomposition failed: {exc}") from exc
        self._vh = self.eigvecs.conj().T

    def __call__(self, s) -> np.ndarray:
        """``exp(-i s H)`` for scalar ``s`` or a 1-d array of ``s`` (stacked)."""
        s = np.asarray(s, dtype=float)
        if not np.all(np.isfinite(s)):
            raise DomainError("exponent scale must be finite")
        phases = np.exp(-1j * np.multiply.outer(s, self.eigvals))
        return (self.eigvecs * phases[..., None, :]) @ self._vh


def expm_hermitian_generator(H: np.ndarray, s) -> np.ndarray:
    """``exp(-i s H)`` through the Hermitian eigendecomposition."""
    return HermitianExp(H)(s)


def commutator(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    A, B = np.asarray(A), np.asarray(B)
    if A.shape != B.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError(f"need square matrices of equal shape, got {A.shape} and {B.shape}")
    return A @ B - B @ A


def nested_commutators(A: np.ndarray, B: np.ndarray):
    """``([A,B], [A,[A,B]], [B,[A,B]])``."""
    AB = commutator(A, B)
    return AB, commutator(A, AB), commutator(B, AB)


def _chain(factors: list[np.ndarray]) -> np.ndarray:
    return reduce(np.matmul, factors)


def sequence_to_unitary(
    seq: GateSequence | LatticePath,
    hams: Sequence[np.ndarray],
    t,
    weights: Sequence[int] | None = None,
    n: int = 1,
    exps: Sequence[HermitianExp] | None = None,
) -> np.ndarray:
    """Propagator of a schedule at time ``t`` (scalar or 1-d array).

    Factors are multiplied in the order they are listed: entry 0 is the
    leftmost factor.  A lattice step along axis ``k`` is ``exp(-i H_k t / n)``;
    the path is repeated until it covers ``weights * n`` (``weights`` default
    to the path's own targets).  For a :class:`GateSequence` the weights and
    repetition count are taken from the sequence itself.
    """
    if exps is None:
        exps = [HermitianExp(H) for H in hams]
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise DomainError("time must be finite")

    if isinstance(seq, LatticePath):
        if len(exps) != seq.dims:
            raise DomainError(f"path has {seq.dims} axes but {len(exps)} Hamiltonian terms")
        if weights is None:
            weights = seq.targets
        grid = [w * n for w in weights]
        if any(g % s for g, s in zip(grid, seq.targets)):
            raise DomainError(f"path {seq.targets} does not tile the grid {tuple(grid)}")
        reps = {g // s for g, s in zip(grid, seq.targets)}
        if len(reps) != 1:
            raise DomainError(f"path {seq.targets} does not tile the grid {tuple(grid)}")
        reps = reps.pop()
        factors = [exps[k](length * t / n) for k, length in seq.runs()]
    else:
        if len(exps) != seq.dims:
            raise DomainError(f"sequence has {seq.dims} terms but {len(exps)} Hamiltonians")
        reps = seq.reps
        factors = [
            exps[k](float(c) * seq.targets[k] * t / seq.reps) for k, c in seq.entries
        ]
    unit = _chain(factors)
    return unit if reps == 1 else np.linalg.matrix_power(unit, reps)


def exact_unitary(hams: Sequence[np.ndarray], weights: Sequence[float], t) -> np.ndarray:
    """``exp(-i t sum_k w_k H_k)``."""
    H = sum(w * np.asarray(h) for w, h in zip(weights, hams))
    return HermitianExp(H)(t)


def unitarity_residual(U: np.ndarray) -> float:
    U = np.asarray(U)
    eye = np.eye(U.shape[-1])
    return float(np.max(np.abs(np.swapaxes(U.conj(), -1, -2) @ U - eye)))


def error_generator(U_path: np.ndarray, U_exact: np.ndarray) -> np.ndarray:
    """Principal logarithm of ``U_path U_exact^{-1}``."""
    W = U_path @ U_exact.conj().T
    L = scipy.linalg.logm(W)
    if not np.all(np.isfinite(L)):
        raise NumericalError("matrix logarithm did not converge")
    return L


def fit_error_coefficients(L: np.ndarray, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Least-squares coefficients of ``L`` on ``[A,B]``, ``[A,[A,B]]``, ``[B,[A,B]]``."""
    basis = np.stack([M.ravel() for M in nested_commutators(A, B)], axis=1)
    # complex basis, real coefficients: stack real and imaginary parts
    lhs = np.concatenate([basis.real, basis.imag])
    rhs = np.concatenate([L.ravel().real, L.ravel().imag])
    coef, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    return coef


def matrix_to_json(M: np.ndarray) -> list:
    """Row-major nested lists of ``[re, im]`` pairs."""
    M = np.asarray(M, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def matrix_from_json(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise DomainError("matrix JSON must be rows of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def load_matrices(path) -> list[np.ndarray]:
    """Read ``{"matrices": [...]}`` or a bare list of matrices from a JSON file."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = data["matrices"]
    return [check_hermitian(matrix_from_json(m)) for m in data]
