import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qlstm.entanglement import (
    KrausSet,
    PowerConfig,
    apply_channel,
    entropy_change_stats,
    estimate_disentangling_power,
    estimate_entangling_power,
    fidelity,
    kraus_from_unitary,
    pure_state_entropy,
    schmidt,
    unitary_blocks,
    von_neumann_entropy,
)
from qlstm.tensor import (
    BipartiteSplit,
    InvalidStateError,
    outer_product,
    partial_trace,
    random_state,
    random_unitary,
)

s2 = 1 / np.sqrt(2)
CNOT = np.eye(4)[[0, 1, 3, 2]]
SWAP = np.eye(4)[[0, 2, 1, 3]]
X = np.array([[0, 1], [1, 0]])
ONE_ONE = BipartiteSplit(2, 2)
FAST = PowerConfig(restarts=8, steps=300)


def random_density(dim, rng, rank=None):
    rank = rank or dim
    z = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = z @ z.conj().T
    return rho / np.trace(rho)


def test_entropy_examples():
    assert von_neumann_entropy(np.diag([1, 0])) == 0.0
    assert von_neumann_entropy(np.eye(2) / 2) == pytest.approx(1.0, abs=1e-12)
    expected = -(0.8 * math.log2(0.8) + 0.2 * math.log2(0.2))
    assert von_neumann_entropy(np.diag([0.8, 0.2])) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.721928, abs=1e-6)


def test_entropy_rejects_invalid_matrix():
    with pytest.raises(InvalidStateError):
        von_neumann_entropy(np.diag([0.7, 0.7]))


def test_schmidt_examples():
    d = schmidt([0, 1, 0, 0], ONE_ONE)
    np.testing.assert_allclose(d.coefficients, [1.0])
    d = schmidt([s2, 0, 0, s2], ONE_ONE)
    np.testing.assert_allclose(d.coefficients, [s2, s2])
    d = schmidt([np.sqrt(0.8), 0, 0, np.sqrt(0.2)], ONE_ONE)
    np.testing.assert_allclose(d.coefficients, [np.sqrt(0.8), np.sqrt(0.2)])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 3))
def test_schmidt_reconstructs_and_matches_marginal_entropy(seed, na, nb):
    rng = np.random.default_rng(seed)
    sp = BipartiteSplit.from_qubits(na, nb)
    psi = random_state(sp.dim, rng)
    d = schmidt(psi, sp)
    assert abs(d.spectrum.sum() - 1) < 1e-9
    assert np.linalg.norm(d.reconstruct() - psi) < 1e-8
    rho = outer_product(psi)
    for keep in "AB":
        assert abs(d.entropy() - von_neumann_entropy(partial_trace(rho, sp, keep))) < 1e-9


def test_bipartition_entropy_equality(rng):
    sp = BipartiteSplit(4, 4)
    for _ in range(100):
        rho = outer_product(random_state(16, rng))
        s_sys = von_neumann_entropy(partial_trace(rho, sp, "A"))
        s_anc = von_neumann_entropy(partial_trace(rho, sp, "B"))
        assert abs(s_sys - s_anc) <= 1e-9


def test_fidelity_examples():
    p0, p1 = np.diag([1, 0]), np.diag([0, 1])
    assert fidelity(p0, p0) == pytest.approx(1.0, abs=1e-12)
    assert fidelity(p0, p1) == pytest.approx(0.0, abs=1e-12)
    assert fidelity(p0, np.eye(2) / 2) == pytest.approx(0.5, abs=1e-12)


def test_fidelity_properties(rng):
    for _ in range(30):
        rho, sigma = random_density(4, rng), random_density(4, rng, rank=2)
        f = fidelity(rho, sigma)
        assert 0.0 <= f <= 1.0
        assert abs(f - fidelity(sigma, rho)) < 1e-9
        assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-9)
        a, b = random_state(4, rng), random_state(4, rng)
        assert fidelity(outer_product(a), outer_product(b)) == pytest.approx(abs(np.vdot(a, b)) ** 2, abs=1e-9)


def test_entangling_power_reference_gates():
    assert estimate_entangling_power(np.eye(4), ONE_ONE).value == 0.0
    cnot = estimate_entangling_power(CNOT, ONE_ONE)
    assert cnot.value == pytest.approx(1.0, abs=1e-3)
    # the maximizer should be a product input mapped to a maximally entangled output
    assert pure_state_entropy(cnot.argmax_state, ONE_ONE) < 1e-3
    assert estimate_entangling_power(SWAP, ONE_ONE).value <= 1e-6


def test_disentangling_power_reference_gates():
    assert estimate_disentangling_power(np.eye(4), ONE_ONE).value == 0.0
    assert estimate_disentangling_power(CNOT, ONE_ONE).value == pytest.approx(1.0, abs=1e-3)


def test_disentangling_delegates_to_adjoint(rng):
    u = random_unitary(4, rng)
    down = estimate_disentangling_power(u, ONE_ONE, FAST)
    up_adj = estimate_entangling_power(u.conj().T, ONE_ONE, FAST)
    assert down.value == up_adj.value
    np.testing.assert_array_equal(down.argmax_state, up_adj.argmax_state)


def test_two_qubit_powers_agree(rng):
    for _ in range(3):
        u = random_unitary(4, rng)
        up = estimate_entangling_power(u, ONE_ONE).value
        down = estimate_disentangling_power(u, ONE_ONE).value
        assert abs(up - down) <= 0.02


def test_power_is_bounded_by_smaller_register(rng):
    sp = BipartiteSplit(2, 4)
    est = estimate_entangling_power(random_unitary(8, rng), sp, FAST)
    assert 0.0 <= est.value <= 1.0 + 1e-12
    assert est.restarts_used == FAST.restarts


def test_unitary_blocks_of_cnot():
    b = unitary_blocks(CNOT, ONE_ONE)
    np.testing.assert_allclose(b[0, 0], np.eye(2))
    np.testing.assert_allclose(b[1, 1], X)
    np.testing.assert_allclose(b[0, 1], 0)
    np.testing.assert_allclose(b[1, 0], 0)


def test_kraus_examples(rng):
    k = kraus_from_unitary(np.eye(4), ONE_ONE)
    np.testing.assert_allclose(k.operators[0], np.eye(2))
    np.testing.assert_allclose(k.operators[1], 0)
    k = kraus_from_unitary(CNOT, ONE_ONE, system_state=[0, 1])
    np.testing.assert_allclose(k.operators[0], 0)
    np.testing.assert_allclose(k.operators[1], X)
    k = kraus_from_unitary(CNOT, ONE_ONE, system_state=[s2, s2])
    np.testing.assert_allclose(k.operators, [np.eye(2) * s2, X * s2])
    sp = BipartiteSplit(4, 4)
    for _ in range(5):
        k = kraus_from_unitary(random_unitary(16, rng), sp, random_state(4, rng))
        assert k.completeness_error() <= 1e-10


def test_incomplete_kraus_set_is_rejected():
    with pytest.raises(InvalidStateError):
        KrausSet(np.array([np.eye(2), np.eye(2)]))


def test_apply_channel_examples(rng):
    ident = kraus_from_unitary(np.eye(4), ONE_ONE)
    rho = random_density(2, rng)
    np.testing.assert_allclose(apply_channel(ident, rho), rho, atol=1e-15)
    k = kraus_from_unitary(CNOT, ONE_ONE, system_state=[s2, s2])
    np.testing.assert_allclose(apply_channel(k, np.diag([1, 0])), np.eye(2) / 2, atol=1e-15)
    sp = BipartiteSplit(4, 4)
    k = kraus_from_unitary(random_unitary(16, rng), sp, random_state(4, rng))
    assert np.trace(apply_channel(k, random_density(4, rng))).real == pytest.approx(1.0, abs=1e-12)


def test_apply_channel_matches_partial_trace_route(rng):
    sp = BipartiteSplit(4, 4)
    u = random_unitary(16, rng)
    psi_x = random_state(4, rng)
    rho = random_density(4, rng)
    joint = u @ np.kron(outer_product(psi_x), rho) @ u.conj().T
    np.testing.assert_allclose(
        apply_channel(kraus_from_unitary(u, sp, psi_x), rho), partial_trace(joint, sp, "B"), atol=1e-10
    )


def test_entropy_change_stats_examples(rng):
    st_ = entropy_change_stats(np.eye(4), ONE_ONE, 50, seed=1)
    assert st_.mean == st_.min == st_.max == 0.0
    assert entropy_change_stats(CNOT, ONE_ONE, 200, seed=2).max <= 1 + 1e-6
    u = random_unitary(4, rng)
    up = estimate_entangling_power(u, ONE_ONE).value
    down = estimate_disentangling_power(u, ONE_ONE).value
    ds = entropy_change_stats(u, ONE_ONE, 200, seed=3).samples
    assert ds.min() >= -down - 1e-6 and ds.max() <= up + 1e-6
    with pytest.raises(ValueError):
        entropy_change_stats(u, ONE_ONE, 0)
