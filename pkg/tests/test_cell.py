from functools import reduce

import numpy as np
import pytest

from qlstm.cell import (
    CellAnsatz,
    DegenerateEncodingError,
    EncoderParameters,
    HiddenState,
    QLstmParameters,
    branch_probabilities,
    cell_forward,
    encode_input,
    initial_hidden,
    readout_expectation,
    sequence_forward,
)
from qlstm.entanglement import von_neumann_entropy
from qlstm.tensor import BipartiteSplit, outer_product, partial_trace

s2 = 1 / np.sqrt(2)
I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]])


def cnot(n, c, t):
    """CNOT as an explicit basis permutation (qubit 0 = most significant bit)."""
    m = np.zeros((2**n, 2**n))
    for i in range(2**n):
        bits = [(i >> (n - 1 - q)) & 1 for q in range(n)]
        bits[t] ^= bits[c]
        m[int("".join(map(str, bits)), 2), i] = 1
    return m


def rx_layer_matrix(angles):
    rx = [np.cos(a / 2) * I2 - 1j * np.sin(a / 2) * X for a in angles]
    n = len(angles)
    ring = reduce(lambda acc, q: cnot(n, q, (q + 1) % n) @ acc, range(n), np.eye(2**n))
    return ring @ reduce(np.kron, rx)


def oracle_unitary(theta_en, theta_dis, n=4):
    u = np.eye(2**n)
    for th in (theta_en, theta_dis):
        for layer in np.reshape(th, (-1, n)):
            u = rx_layer_matrix(layer) @ u
    return u


def params(ansatz, rng, mode="diagonal", **kw):
    return ansatz.init_params(rng, hidden_mode=mode, **kw)


def unitary_mapping(a, b):
    """Some unitary with U a = b (Householder-style completion)."""
    d = a.size
    ma = np.linalg.qr(np.column_stack([a, np.eye(d)]))[0]
    mb = np.linalg.qr(np.column_stack([b, np.eye(d)]))[0]
    # fix the phases so the first columns are exactly a and b
    ma[:, 0], mb[:, 0] = a, b
    ma = np.linalg.qr(ma)[0] * np.vdot(np.linalg.qr(ma)[0][:, 0], a)
    u = mb @ ma.conj().T
    assert np.allclose(u @ a, b)
    return u


def test_encode_input_examples():
    e = EncoderParameters([1, 0, 0, 0], [0, 0, 0, 0])
    np.testing.assert_allclose(encode_input(5.0, e), [1, 0, 0, 0])
    e = EncoderParameters([1, 1, 0, 0], [0, 0, 0, 0])
    np.testing.assert_allclose(encode_input(1.0, e), [s2, s2, 0, 0])
    e = EncoderParameters([1, 0, 0, 0], [0, 1, 0, 0])
    np.testing.assert_allclose(encode_input(1.0, e), [s2, s2, 0, 0])
    with pytest.raises(DegenerateEncodingError):
        encode_input(0.0, EncoderParameters([1, 0, 0, 0], [0, 0, 0, 0]))


def test_initial_hidden():
    np.testing.assert_allclose(initial_hidden(2).vector, [1, 0, 0, 0])
    np.testing.assert_allclose(initial_hidden(1).vector, [1, 0])
    assert np.linalg.norm(initial_hidden(3).vector) == 1.0


def test_readout_examples():
    assert readout_expectation(np.eye(16)[0], 0) == 1.0
    plus_rest = np.kron([s2, s2], np.eye(8)[3])
    assert readout_expectation(plus_rest, 0) == pytest.approx(0.0, abs=1e-15)
    assert readout_expectation([s2, 0, 0, s2], 0) == pytest.approx(0.0, abs=1e-15)
    assert readout_expectation([0, 1, 0, 0], 1) == -1.0
    with pytest.raises(IndexError):
        readout_expectation([1, 0], 1)


def test_parameter_validation(rng):
    an = CellAnsatz()
    with pytest.raises(ValueError):
        params(an, rng, readout_qubit=2)
    with pytest.raises(ValueError):
        params(an, rng, mode="sampled")


@pytest.mark.parametrize("mode", ["collapsed", "diagonal"])
def test_zero_angle_cell_matches_explicit_matrix(mode, rng):
    an = CellAnsatz()
    p = params(an, rng, mode)
    p.theta_en[:] = 0
    p.theta_dis[:] = 0
    np.testing.assert_allclose(an.unitary(p), oracle_unitary(p.theta_en, p.theta_dis), atol=1e-12)

    h = HiddenState(np.array([0.6, 0, 0.8j, 0]))
    out = cell_forward(0.37, h, p, an)
    psi = oracle_unitary(p.theta_en, p.theta_dis) @ np.kron(encode_input(0.37, p.encoder), h.vector)
    np.testing.assert_allclose(out.state, psi, atol=1e-12)
    z0 = np.kron(np.diag([1, -1]), np.eye(8))
    assert out.y == pytest.approx(np.vdot(psi, z0 @ psi).real, abs=1e-12)


@pytest.mark.parametrize("mode", ["collapsed", "diagonal"])
def test_random_cell_matches_explicit_matrix(mode, rng):
    an = CellAnsatz()
    p = params(an, rng, mode)
    h = initial_hidden(2)
    out = cell_forward(-0.5, h, p, an)
    psi = oracle_unitary(p.theta_en, p.theta_dis) @ np.kron(encode_input(-0.5, p.encoder), h.vector)
    np.testing.assert_allclose(out.state, psi, atol=1e-10)
    branches = psi.reshape(4, 4)
    probs = np.sum(np.abs(branches) ** 2, axis=1)
    np.testing.assert_allclose(out.probabilities, probs, atol=1e-12)
    if mode == "collapsed":
        i = int(np.argmax(probs))
        assert out.selected_index == i
        np.testing.assert_allclose(out.hidden.vector, branches[i] / np.linalg.norm(branches[i]), atol=1e-12)
    else:
        diag = np.sum(np.abs(branches) ** 2, axis=0)
        np.testing.assert_allclose(out.hidden.vector, diag / np.linalg.norm(diag), atol=1e-12)
        assert np.all(out.hidden.vector.real >= 0) and np.all(out.hidden.vector.imag == 0)


@pytest.mark.parametrize("mode", ["collapsed", "diagonal"])
def test_identity_circuit_keeps_hidden_state(mode, rng):
    an = CellAnsatz(layers_en=0, layers_dis=0)
    p = params(an, rng, mode)
    h0 = initial_hidden(2)
    out = cell_forward(0.2, h0, p, an)
    psi_x = encode_input(0.2, p.encoder)
    z0 = np.kron(np.diag([1, -1]), I2)
    assert out.y == pytest.approx(np.vdot(psi_x, z0 @ psi_x).real, abs=1e-12)
    np.testing.assert_allclose(out.hidden.vector, h0.vector, atol=1e-12)
    seq = sequence_forward([0.1, -0.4, 0.7, 0.3], p, an)
    for h in seq.hidden_trace:
        np.testing.assert_allclose(h.vector, h0.vector, atol=1e-12)


def test_separable_output_gives_pure_ancilla(rng):
    an = CellAnsatz()
    p = params(an, rng, "collapsed")
    h = initial_hidden(2)
    psi_in = np.kron(encode_input(0.3, p.encoder), h.vector)
    phi = np.eye(4)[1]
    target = np.kron(np.eye(4)[2], phi)
    u = unitary_mapping(psi_in, target)
    hidden = {}
    for mode in ("collapsed", "diagonal"):
        p.hidden_mode = mode
        out = cell_forward(0.3, h, p, an, unitary=u)
        assert out.entropy_anc == pytest.approx(0.0, abs=1e-9)
        assert out.probabilities[2] == pytest.approx(1.0, abs=1e-12)
        hidden[mode] = out.hidden.vector
        np.testing.assert_allclose(np.abs(out.hidden.vector), phi, atol=1e-9)
    # separable with a basis-state ancilla factor: both update rules agree
    np.testing.assert_allclose(np.abs(hidden["collapsed"]), hidden["diagonal"].real, atol=1e-9)


def test_update_rules_differ_on_entangled_output(rng):
    an = CellAnsatz()
    p = params(an, rng, "collapsed")
    out_c = cell_forward(0.3, initial_hidden(2), p, an)
    p.hidden_mode = "diagonal"
    out_d = cell_forward(0.3, initial_hidden(2), p, an)
    assert out_c.entropy_anc > 1e-3
    assert not np.allclose(np.abs(out_c.hidden.vector), out_d.hidden.vector.real, atol=1e-6)


def test_cell_invariants(rng):
    an = CellAnsatz()
    sp = BipartiteSplit(4, 4)
    for mode in ("collapsed", "diagonal"):
        p = params(an, rng, mode)
        h = initial_hidden(2)
        for x in rng.uniform(-1, 1, 15):
            out = cell_forward(x, h, p, an)
            assert abs(out.probabilities.sum() - 1) < 1e-9
            np.testing.assert_allclose(out.probabilities, branch_probabilities(out.state, sp), atol=1e-12)
            rho = outer_product(out.state)
            rho_anc = partial_trace(rho, sp, "B")
            phis = out.state.reshape(4, 4)
            np.testing.assert_allclose(np.diag(rho_anc).real, np.sum(phis * phis.conj(), axis=0).real, atol=1e-10)
            assert abs(out.entropy_anc - von_neumann_entropy(partial_trace(rho, sp, "A"))) < 1e-9
            assert -1 <= out.y <= 1
            assert abs(np.linalg.norm(out.hidden.vector) - 1) < 1e-10
            again = cell_forward(x, h, p, an)
            assert again.y == out.y
            np.testing.assert_array_equal(again.hidden.vector, out.hidden.vector)
            h = out.hidden


def test_sequence_forward_matches_manual_loop(rng):
    an = CellAnsatz()
    p = params(an, rng, "collapsed")
    xs = [0.5, -0.2, 0.9]
    seq = sequence_forward(xs, p, an)
    h = initial_hidden(2)
    for t, x in enumerate(xs):
        o = cell_forward(x, h, p, an)
        assert seq.ys[t] == o.y
        np.testing.assert_array_equal(seq.hidden_trace[t].vector, o.hidden.vector)
        h = o.hidden
    single = sequence_forward([0.5], p, an)
    assert len(single.hidden_trace) == 1 and single.ys.size == 1


def test_sequence_errors_name_the_step(rng):
    an = CellAnsatz()
    p = params(an, rng)
    p.encoder = EncoderParameters([1, 0, 0, 0], [-1, 0, 0, 0])
    with pytest.raises(DegenerateEncodingError, match="step 1"):
        sequence_forward([0.5, 1.0, 0.2], p, an)
    with pytest.raises(ValueError):
        sequence_forward([], p, an)


def test_unequal_registers(rng):
    an = CellAnsatz(n_sys=1, n_anc=3)
    p = an.init_params(rng)
    out = cell_forward(0.4, initial_hidden(3), p, an)
    assert out.probabilities.shape == (2,)
    assert out.hidden.vector.shape == (8,)
