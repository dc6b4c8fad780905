"""The recurrent cell: system register for the input, ancilla register as memory.

One step encodes ``x`` into the system register, joins it with the hidden
ancilla state, applies ``U_dis @ U_en`` and reads out Pauli-Z on one system
qubit. The next hidden state is either the most probable collapsed ancilla
branch ("collapsed") or the renormalized diagonal of the ancilla marginal
("diagonal").
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .circuit import LayeredAnsatz, build_unitary, check_params
from .entanglement import _entropy_rows
from .tensor import BipartiteSplit, DimensionError, as_state, num_qubits

HIDDEN_MODES = ("collapsed", "diagonal")
MIN_ENCODING_NORM = 1e-12


class DegenerateEncodingError(ValueError):
    """The affine encoder mapped an input to (nearly) the zero vector."""


@dataclass
class EncoderParameters:
    w: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.w.shape != self.b.shape or self.w.ndim != 1:
            raise ValueError("encoder weight and bias must be vectors of equal length")
        num_qubits(self.w.size)
        if not (np.all(np.isfinite(self.w)) and np.all(np.isfinite(self.b))):
            raise ValueError("encoder parameters must be finite")

    @property
    def n_qubits(self) -> int:
        return num_qubits(self.w.size)

    @classmethod
    def init(cls, n_sys: int, rng: np.random.Generator) -> "EncoderParameters":
        d = 2**n_sys
        return cls(rng.uniform(-1.0, 1.0, d), rng.uniform(0.1, 0.2, d))


@dataclass
class QLstmParameters:
    encoder: EncoderParameters
    theta_en: np.ndarray
    theta_dis: np.ndarray
    readout_qubit: int = 0
    hidden_mode: str = "diagonal"

    def __post_init__(self):
        self.theta_en = np.asarray(self.theta_en, dtype=float)
        self.theta_dis = np.asarray(self.theta_dis, dtype=float)
        if self.hidden_mode not in HIDDEN_MODES:
            raise ValueError(f"hidden_mode must be one of {HIDDEN_MODES}")
        if not 0 <= self.readout_qubit < self.n_sys:
            raise ValueError(
                f"readout_qubit {self.readout_qubit} is not a system qubit (n_sys={self.n_sys})"
            )

    @property
    def n_sys(self) -> int:
        return self.encoder.n_qubits

    @classmethod
    def init(
        cls,
        n_sys: int,
        en: LayeredAnsatz,
        dis: LayeredAnsatz,
        rng: np.random.Generator,
        readout_qubit: int = 0,
        hidden_mode: str = "diagonal",
    ) -> "QLstmParameters":
        enc = EncoderParameters.init(n_sys, rng)
        return cls(enc, en.init_params(rng), dis.init_params(rng), readout_qubit, hidden_mode)

    def copy(self) -> "QLstmParameters":
        return replace(
            self,
            encoder=EncoderParameters(self.encoder.w.copy(), self.encoder.b.copy()),
            theta_en=self.theta_en.copy(),
            theta_dis=self.theta_dis.copy(),
        )

    # flat views used by the optimizers
    def circuit_vector(self) -> np.ndarray:
        return np.concatenate([self.theta_en, self.theta_dis])

    def encoder_vector(self) -> np.ndarray:
        return np.concatenate([self.encoder.w, self.encoder.b])

    def with_vectors(self, circuit=None, encoder=None) -> "QLstmParameters":
        p = self.copy()
        if circuit is not None:
            k = self.theta_en.size
            p.theta_en = np.array(circuit[:k], dtype=float)
            p.theta_dis = np.array(circuit[k:], dtype=float)
        if encoder is not None:
            d = self.encoder.w.size
            p.encoder = EncoderParameters(encoder[:d], encoder[d:])
        return p


@dataclass(frozen=True)
class CellAnsatz:
    """Structures of U_en and U_dis over the joint system + ancilla register."""

    n_sys: int = 2
    n_anc: int = 2
    layers_en: int = 2
    layers_dis: int = 2
    rotation_kind: str = "RX"

    @property
    def n_qubits(self) -> int:
        return self.n_sys + self.n_anc

    @property
    def split(self) -> BipartiteSplit:
        return BipartiteSplit.from_qubits(self.n_sys, self.n_anc)

    @property
    def en(self) -> LayeredAnsatz:
        return LayeredAnsatz(self.n_qubits, self.layers_en, self.rotation_kind)

    @property
    def dis(self) -> LayeredAnsatz:
        return LayeredAnsatz(self.n_qubits, self.layers_dis, self.rotation_kind)

    def unitary(self, params: QLstmParameters) -> np.ndarray:
        """Full cell evolution U_dis @ U_en."""
        self.check(params)
        return build_unitary(self.dis, params.theta_dis) @ build_unitary(self.en, params.theta_en)

    def check(self, params: QLstmParameters) -> None:
        if params.n_sys != self.n_sys:
            raise DimensionError(
                f"encoder targets {params.n_sys} system qubits, ansatz has {self.n_sys}"
            )
        check_params(self.en, params.theta_en)
        check_params(self.dis, params.theta_dis)

    def init_params(self, rng: np.random.Generator, **kw) -> QLstmParameters:
        return QLstmParameters.init(self.n_sys, self.en, self.dis, rng, **kw)


@dataclass(frozen=True)
class HiddenState:
    vector: np.ndarray
    mode_tag: str = "collapsed"


@dataclass(frozen=True)
class CellOutput:
    y: float
    hidden: HiddenState
    entropy_anc: float
    probabilities: np.ndarray
    selected_index: Optional[int] = None
    state: np.ndarray = field(default=None, repr=False)


def encode_input(x: float, enc: EncoderParameters) -> np.ndarray:
    """Real-amplitude system state (w * x + b) / |w * x + b|."""
    a = enc.w * x + enc.b
    norm = np.linalg.norm(a)
    if not norm > MIN_ENCODING_NORM:
        raise DegenerateEncodingError(f"encoder output has norm {norm:.3e} at x={x!r}")
    return (a / norm).astype(complex)


def initial_hidden(n_anc: int) -> HiddenState:
    if n_anc < 1:
        raise ValueError("n_anc must be >= 1")
    h = np.zeros(2**n_anc, dtype=complex)
    h[0] = 1.0
    return HiddenState(h, "collapsed")


def readout_expectation(s, qubit: int) -> float:
    """<Z> on ``qubit`` (qubit 0 = most significant bit)."""
    s = np.asarray(s, dtype=complex)
    n = num_qubits(s.size)
    if not 0 <= qubit < n:
        raise IndexError(f"qubit {qubit} out of range for {n} qubits")
    probs = np.abs(s.reshape((2,) * n)) ** 2
    marg = probs.sum(axis=tuple(a for a in range(n) if a != qubit))
    return float(marg[0] - marg[1])


def branch_probabilities(s, split: BipartiteSplit) -> np.ndarray:
    """p(i) = |phi_i|^2 for the system basis slices of a joint state."""
    m = np.asarray(s).reshape(split.dim_a, split.dim_b)
    return np.sum(np.abs(m) ** 2, axis=1)


def cell_forward(
    x: float,
    h_prev: HiddenState,
    params: QLstmParameters,
    ansatz: CellAnsatz,
    unitary: Optional[np.ndarray] = None,
) -> CellOutput:
    """One recurrent step.

    ``unitary`` may carry a precomputed ``ansatz.unitary(params)`` so a
    sequence does not rebuild it at every step.
    """
    split = ansatz.split
    if unitary is None:
        unitary = ansatz.unitary(params)
    h = np.asarray(h_prev.vector, dtype=complex)
    if h.size != split.dim_b:
        raise DimensionError(f"hidden state has length {h.size}, ancilla needs {split.dim_b}")

    psi_x = encode_input(x, params.encoder)
    out = as_state(unitary @ np.kron(psi_x, h))
    y = readout_expectation(out, params.readout_qubit)

    branches = out.reshape(split.dim_a, split.dim_b)
    probs = np.sum(np.abs(branches) ** 2, axis=1)
    rho_anc = branches.T @ branches.conj()
    entropy = float(_entropy_rows(np.linalg.eigvalsh(rho_anc)))

    if params.hidden_mode == "collapsed":
        i_star = int(np.argmax(probs))
        phi = branches[i_star]
        hidden = HiddenState(phi / np.linalg.norm(phi), "collapsed")
    else:
        i_star = None
        diag = np.real(np.diag(rho_anc))
        hidden = HiddenState((diag / np.linalg.norm(diag)).astype(complex), "diagonal")
    return CellOutput(y, hidden, entropy, probs, i_star, out)


@dataclass(frozen=True)
class SequenceOutput:
    ys: np.ndarray
    hidden_trace: list
    outputs: list

    @property
    def prediction(self) -> float:
        return float(self.ys[-1])


def sequence_forward(
    xs: Sequence[float],
    params: QLstmParameters,
    ansatz: CellAnsatz,
    unitary: Optional[np.ndarray] = None,
) -> SequenceOutput:
    """Chain ``cell_forward`` over ``xs`` starting from |0...0> on the ancilla."""
    xs = np.asarray(xs, dtype=float)
    if xs.size == 0:
        raise ValueError("input sequence is empty")
    if unitary is None:
        unitary = ansatz.unitary(params)
    h = initial_hidden(ansatz.n_anc)
    outputs = []
    for t, x in enumerate(xs):
        try:
            o = cell_forward(x, h, params, ansatz, unitary)
        except ValueError as exc:
            raise type(exc)(f"step {t}: {exc}") from exc
        outputs.append(o)
        h = o.hidden
    return SequenceOutput(
        np.array([o.y for o in outputs]), [o.hidden for o in outputs], outputs
    )
