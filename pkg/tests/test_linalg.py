import json

import numpy as np
import pytest
import scipy.linalg

from trotterpath.exceptions import DomainError
from trotterpath.gridpath import LatticePath, error_triplet
from trotterpath.linalg import (
    SIGMA_X,
    SIGMA_Z,
    HamiltonianSpec,
    HermitianExp,
    build_model,
    check_hermitian,
    commutator,
    error_generator,
    exact_unitary,
    fit_error_coefficients,
    load_matrices,
    matrix_from_json,
    matrix_to_json,
    random_hermitian,
    sequence_to_unitary,
    site_operator,
    tfi_three_term,
    tfi_two_term,
    unitarity_residual,
)
from trotterpath.planners import plan


def test_site_operator_places_pauli():
    op = site_operator({1: SIGMA_Z}, 2)
    assert np.allclose(op, np.kron(np.eye(2), SIGMA_Z))


def test_tfi_models_are_hermitian_and_sized():
    for hams in (tfi_two_term(3), tfi_three_term(3)):
        for H in hams:
            check_hermitian(H)
            assert H.shape == (8, 8)
    H1, H2 = tfi_two_term(2)
    assert np.allclose(H1, 0.5 * np.diag([2, 0, 0, -2]))
    assert np.allclose(H2, np.kron(SIGMA_X, SIGMA_X))


def test_check_hermitian_rejects():
    with pytest.raises(DomainError):
        check_hermitian(np.array([[0, 1], [0, 0]]))
    with pytest.raises(DomainError):
        check_hermitian(np.ones((2, 3)))


def test_build_model_errors():
    with pytest.raises(DomainError):
        build_model(HamiltonianSpec(model="heisenberg"))
    with pytest.raises(DomainError):
        build_model(HamiltonianSpec(weights=(1, 2, 3)))
    spec = HamiltonianSpec(kind="matrices", matrices=[np.eye(2), SIGMA_X], weights=(1, 1))
    assert len(build_model(spec)) == 2
    assert spec.dim == 2


def test_random_hermitian_seeded():
    a = random_hermitian(4, np.random.SeedSequence(7))
    b = random_hermitian(4, np.random.SeedSequence(7))
    c = random_hermitian(4, np.random.SeedSequence(8))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    check_hermitian(a)
    with pytest.raises(DomainError):
        random_hermitian(1, 0)


def test_hermitian_exp_matches_scipy():
    H = random_hermitian(4, 3)
    for s in (0.0, 0.3, -2.0):
        assert np.allclose(HermitianExp(H)(s), scipy.linalg.expm(-1j * s * H), atol=1e-12)


def test_hermitian_exp_batched():
    H = random_hermitian(4, 5)
    batch = HermitianExp(H)(np.array([0.1, 0.2]))
    assert batch.shape == (2, 4, 4)
    assert np.allclose(batch[1], scipy.linalg.expm(-0.2j * H))
    with pytest.raises(DomainError):
        HermitianExp(H)(np.inf)


def test_pauli_rotation_closed_form():
    theta = 0.7
    U = HermitianExp(SIGMA_Z)(theta)
    assert np.allclose(U, np.diag([np.exp(-1j * theta), np.exp(1j * theta)]))


def test_sequence_matches_explicit_product():
    H1, H2 = random_hermitian(4, 1), random_hermitian(4, 2)
    t = 0.37
    e = lambda H, s: scipy.linalg.expm(-1j * s * H)  # noqa: E731
    expected = e(H2, t) @ e(H1, 3 * t) @ e(H2, 2 * t) @ e(H1, t)
    path = LatticePath.from_string("BAAABBA")
    assert np.allclose(sequence_to_unitary(path, [H1, H2], t), expected, atol=1e-12)
    seq = plan("2O", (4, 3))
    assert np.allclose(sequence_to_unitary(seq, [H1, H2], t), expected, atol=1e-12)


def test_path_tiling_with_n():
    H1, H2 = random_hermitian(2, 1), random_hermitian(2, 2)
    unit = LatticePath.from_string("AB")
    U = sequence_to_unitary(unit, [H1, H2], 1.0, weights=(1, 1), n=3)
    step = HermitianExp(H1)(1 / 3) @ HermitianExp(H2)(1 / 3)
    assert np.allclose(U, np.linalg.matrix_power(step, 3))
    with pytest.raises(DomainError):
        sequence_to_unitary(unit, [H1, H2], 1.0, weights=(2, 1))


def test_ruth_is_unitary_and_accurate():
    hams = tfi_two_term(2)
    seq = plan("ruth", (6, 7), 24)
    U = sequence_to_unitary(seq, hams, 0.1)
    assert unitarity_residual(U) < 1e-12
    assert np.allclose(U, exact_unitary(hams, (6, 7), 0.1), atol=1e-8)


def test_commutator_shape_check():
    with pytest.raises(DomainError):
        commutator(np.eye(2), np.eye(3))


def test_matrix_json_round_trip(tmp_path):
    H = random_hermitian(3, 11)
    assert np.array_equal(matrix_from_json(matrix_to_json(H)), H)
    f = tmp_path / "m.json"
    f.write_text(json.dumps({"matrices": [matrix_to_json(H), matrix_to_json(-H)]}))
    loaded = load_matrices(f)
    assert np.array_equal(loaded[1], -H)
    with pytest.raises(DomainError):
        matrix_from_json([[1, 2], [3, 4]])


def test_error_generator_recovers_area():
    H1, H2 = random_hermitian(4, 21), random_hermitian(4, 22)
    tau = 1e-3
    path = LatticePath.from_string("AAB")
    L = error_generator(sequence_to_unitary(path, [H1, H2], tau), exact_unitary([H1, H2], (2, 1), tau))
    coef = fit_error_coefficients(L, -1j * tau * H1, -1j * tau * H2)
    t = error_triplet(path)
    assert np.allclose(coef, [float(t.e2), float(t.e3a), float(t.e3b)], rtol=1e-2)
