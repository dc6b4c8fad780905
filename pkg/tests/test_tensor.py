import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qlstm.tensor import (
    BipartiteSplit,
    DimensionError,
    InvalidStateError,
    apply_unitary,
    as_state,
    check_density,
    hermitian_eig,
    kron,
    outer_product,
    partial_trace,
    random_state,
    random_unitary,
    reduced_from_state,
)

s2 = 1 / np.sqrt(2)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
seeds = st.integers(0, 2**32 - 1)


def test_kron_examples():
    np.testing.assert_allclose(kron([1, 0], [1, 0]), [1, 0, 0, 0])
    np.testing.assert_allclose(kron(np.eye(2), np.eye(2)), np.eye(4))
    np.testing.assert_allclose(kron([s2, s2], [0, 1]), [0, s2, 0, s2])


def test_kron_refuses_oversized_register():
    with pytest.raises(DimensionError):
        kron(np.ones(2**12), np.ones(2))


def test_apply_unitary_examples():
    s = np.array([0.6, 0.8j])
    np.testing.assert_allclose(apply_unitary(np.eye(2), s), s)
    np.testing.assert_allclose(apply_unitary([[0, 1], [1, 0]], [1, 0]), [0, 1])
    np.testing.assert_allclose(apply_unitary(CNOT, [s2, 0, s2, 0]), [s2, 0, 0, s2])
    with pytest.raises(DimensionError):
        apply_unitary(np.eye(4), [1, 0])


def test_outer_product_examples():
    np.testing.assert_allclose(outer_product([1, 0]), [[1, 0], [0, 0]])
    np.testing.assert_allclose(outer_product([s2, s2]), np.full((2, 2), 0.5))
    np.testing.assert_allclose(outer_product([s2, 1j * s2]), [[0.5, -0.5j], [0.5j, 0.5]])


def test_partial_trace_examples():
    sp = BipartiteSplit(2, 2)
    rho = np.kron(np.diag([1, 0]), np.diag([0, 1]))
    np.testing.assert_allclose(partial_trace(rho, sp, "A"), np.diag([1, 0]))
    bell = outer_product([s2, 0, 0, s2])
    np.testing.assert_allclose(partial_trace(bell, sp, "A"), np.eye(2) / 2)
    psi = [np.sqrt(0.8), 0, 0, np.sqrt(0.2)]
    np.testing.assert_allclose(partial_trace(outer_product(psi), sp, "B"), np.diag([0.8, 0.2]), atol=1e-15)
    with pytest.raises(DimensionError):
        partial_trace(np.eye(8) / 8, sp)


def test_hermitian_eig_examples():
    vals, _ = hermitian_eig(np.diag([0.2, 0.8]))
    np.testing.assert_allclose(vals, [0.8, 0.2])
    np.testing.assert_allclose(hermitian_eig(np.eye(2) / 2)[0], [0.5, 0.5])
    np.testing.assert_allclose(hermitian_eig(np.full((2, 2), 0.5))[0], [1, 0], atol=1e-15)
    with pytest.raises(InvalidStateError):
        hermitian_eig([[0, 1], [0, 0]])


def test_norm_drift_policy():
    s = np.array([1.0, 0.0]) * (1 + 1e-10)
    assert np.linalg.norm(as_state(s)) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(InvalidStateError):
        as_state([1.0 + 1e-6, 0.0])
    with pytest.raises(InvalidStateError):
        as_state([np.nan, 1.0])


def test_split_rejects_non_power_of_two():
    with pytest.raises(DimensionError):
        BipartiteSplit(3, 2)


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(1, 3), st.integers(1, 3))
def test_partial_trace_yields_density_matrices(seed, na, nb):
    rng = np.random.default_rng(seed)
    sp = BipartiteSplit.from_qubits(na, nb)
    rho = outer_product(random_state(sp.dim, rng))
    for keep in "AB":
        check_density(partial_trace(rho, sp, keep))


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(1, 3), st.integers(1, 3))
def test_marginal_spectra_agree(seed, na, nb):
    rng = np.random.default_rng(seed)
    sp = BipartiteSplit.from_qubits(na, nb)
    psi = random_state(sp.dim, rng)
    la = np.linalg.eigvalsh(reduced_from_state(psi, sp, "A"))[::-1]
    lb = np.linalg.eigvalsh(reduced_from_state(psi, sp, "B"))[::-1]
    k = min(la.size, lb.size)
    np.testing.assert_allclose(la[:k], lb[:k], atol=1e-9)
    assert np.all(np.abs(la[k:]) < 1e-9) and np.all(np.abs(lb[k:]) < 1e-9)
    # fast path agrees with the projector path
    np.testing.assert_allclose(reduced_from_state(psi, sp, "B"), partial_trace(outer_product(psi), sp, "B"), atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(1, 4))
def test_unitaries_preserve_inner_products(seed, n):
    rng = np.random.default_rng(seed)
    u = random_unitary(2**n, rng)
    a, b = random_state(2**n, rng), random_state(2**n, rng)
    assert abs(np.vdot(apply_unitary(u, a), apply_unitary(u, b)) - np.vdot(a, b)) < 1e-10
    assert abs(np.linalg.norm(apply_unitary(u, a)) - 1) < 1e-10


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 4))
def test_hermitian_eig_reconstructs(seed, n):
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((2**n, 2**n)) + 1j * rng.standard_normal((2**n, 2**n))
    m = z + z.conj().T
    vals, vecs = hermitian_eig(m)
    assert np.all(np.diff(vals) <= 0)
    assert np.linalg.norm(m - vecs @ np.diag(vals) @ vecs.conj().T) <= 1e-8
