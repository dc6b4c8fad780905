"""Gates and the layered rotation + CNOT-ring ansatz used for U_en and U_dis."""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Optional

import numpy as np

from .tensor import MAX_QUBITS, DimensionError, as_state

ROTATIONS = ("RX", "RY", "RZ")
FIXED_GATES = ("CNOT", "PauliX", "PauliZ", "Hadamard")

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)

_PAULI = {"RX": _X, "RY": _Y, "RZ": _Z}
_FIXED_1Q = {"PauliX": _X, "PauliZ": _Z, "Hadamard": _H}


@dataclass(frozen=True)
class Gate:
    kind: str
    target: int
    control: Optional[int] = None
    angle_index: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ROTATIONS + FIXED_GATES:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if (self.kind == "CNOT") != (self.control is not None):
            raise ValueError("control qubit is required for CNOT and only for CNOT")
        if self.control is not None and self.control == self.target:
            raise ValueError("control and target must differ")
        if (self.kind in ROTATIONS) != (self.angle_index is not None):
            raise ValueError("angle_index is required for rotations and only for rotations")


def rotation_matrix(kind: str, angle: float) -> np.ndarray:
    """Single-qubit rotation exp(-i * angle * P / 2) for P in {X, Y, Z}."""
    if kind not in _PAULI:
        raise ValueError(f"not a rotation: {kind!r}")
    if not np.isfinite(angle):
        raise ValueError("rotation angle must be finite")
    return np.cos(angle / 2) * _I2 - 1j * np.sin(angle / 2) * _PAULI[kind]


@dataclass(frozen=True)
class LayeredAnsatz:
    """``num_layers`` repetitions of (one rotation per qubit, then a CNOT ring).

    Parameter ``l * num_qubits + q`` drives the rotation on qubit ``q`` in
    layer ``l``. The ring links q -> (q + 1) mod n and is dropped for n = 1;
    for n = 2 it is the pair CNOT(0->1), CNOT(1->0).
    """

    num_qubits: int
    num_layers: int = 2
    rotation_kind: str = "RX"

    def __post_init__(self):
        if not 1 <= self.num_qubits <= MAX_QUBITS:
            raise ValueError(f"num_qubits must be in [1, {MAX_QUBITS}]")
        if self.num_layers < 0:
            raise ValueError("num_layers must be non-negative")
        if self.rotation_kind not in ROTATIONS:
            raise ValueError(f"rotation_kind must be one of {ROTATIONS}")

    @property
    def num_params(self) -> int:
        return self.num_layers * self.num_qubits

    @property
    def gates(self) -> tuple[Gate, ...]:
        n = self.num_qubits
        out = []
        for layer in range(self.num_layers):
            for q in range(n):
                out.append(Gate(self.rotation_kind, q, angle_index=layer * n + q))
            if n > 1:
                for q in range(n):
                    out.append(Gate("CNOT", (q + 1) % n, control=q))
        return tuple(out)

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(0.0, 2 * np.pi, self.num_params)

    def to_dict(self) -> dict:
        return {
            "num_qubits": self.num_qubits,
            "num_layers": self.num_layers,
            "rotation_kind": self.rotation_kind,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LayeredAnsatz":
        return cls(int(d["num_qubits"]), int(d["num_layers"]), str(d["rotation_kind"]))


def check_params(ansatz: LayeredAnsatz, params) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    if params.shape != (ansatz.num_params,):
        raise ValueError(
            f"ansatz expects {ansatz.num_params} parameters, got shape {params.shape}"
        )
    if not np.all(np.isfinite(params)):
        raise ValueError("parameters must be finite")
    return params


def _single_qubit_matrix(gate: Gate, params: np.ndarray) -> np.ndarray:
    if gate.kind in ROTATIONS:
        return rotation_matrix(gate.kind, params[gate.angle_index])
    return _FIXED_1Q[gate.kind]


def gate_matrix(gate: Gate, n: int, params=None) -> np.ndarray:
    """Full 2^n x 2^n matrix of one gate (qubit 0 is the leading tensor factor)."""
    if gate.kind == "CNOT":
        dim = 2**n
        cbit = 1 << (n - 1 - gate.control)
        tbit = 1 << (n - 1 - gate.target)
        m = np.zeros((dim, dim), dtype=complex)
        for i in range(dim):
            m[i ^ tbit if i & cbit else i, i] = 1.0
        return m
    factors = [_I2] * n
    factors[gate.target] = _single_qubit_matrix(gate, params)
    return reduce(np.kron, factors)


def build_unitary(ansatz: LayeredAnsatz, params) -> np.ndarray:
    params = check_params(ansatz, params)
    n = ansatz.num_qubits
    u = np.eye(2**n, dtype=complex)
    for gate in ansatz.gates:
        u = gate_matrix(gate, n, params) @ u
    return u


def _apply_gate(psi: np.ndarray, gate: Gate, params: np.ndarray) -> np.ndarray:
    # psi has shape (2,) * n
    if gate.kind == "CNOT":
        out = psi.copy()
        idx = [slice(None)] * psi.ndim
        idx[gate.control] = 1
        sub = out[tuple(idx)]
        # target axis shifts left by one once the control axis is removed
        t = gate.target - (gate.target > gate.control)
        out[tuple(idx)] = np.flip(sub, axis=t)
        return out
    m = _single_qubit_matrix(gate, params)
    psi = np.tensordot(m, psi, axes=([1], [gate.target]))
    return np.moveaxis(psi, 0, gate.target)


def apply_ansatz(ansatz: LayeredAnsatz, params, s) -> np.ndarray:
    """Run the ansatz on ``s`` gate by gate, never forming the full matrix."""
    params = check_params(ansatz, params)
    s = as_state(s)
    n = ansatz.num_qubits
    if s.size != 2**n:
        raise DimensionError(f"ansatz acts on {n} qubits, state has length {s.size}")
    psi = s.reshape((2,) * n)
    for gate in ansatz.gates:
        psi = _apply_gate(psi, gate, params)
    return as_state(psi.reshape(-1))


def shifted_params(params, index: int, shift: float = np.pi / 2) -> np.ndarray:
    params = np.array(params, dtype=float)
    if not 0 <= index < params.size:
        raise IndexError(f"parameter index {index} out of range for {params.size} parameters")
    params[index] += shift
    return params


def shifted_unitaries(ansatz: LayeredAnsatz, params, shift: float) -> np.ndarray:
    """Stack of ``build_unitary(ansatz, shifted_params(params, k, shift))`` for every k.

    Uses prefix/suffix products over the gate list, so each gate matrix is
    built once.
    """
    params = check_params(ansatz, params)
    n = ansatz.num_qubits
    dim = 2**n
    gates = ansatz.gates
    mats = [gate_matrix(g, n, params) for g in gates]
    # before[i] = G_{i-1} ... G_0, after[i] = G_last ... G_{i+1}
    before = [np.eye(dim, dtype=complex)]
    for m in mats[:-1]:
        before.append(m @ before[-1])
    after = [np.eye(dim, dtype=complex)] * len(mats)
    for i in range(len(mats) - 2, -1, -1):
        after[i] = after[i + 1] @ mats[i + 1]
    out = np.empty((ansatz.num_params, dim, dim), dtype=complex)
    for i, g in enumerate(gates):
        if g.angle_index is not None:
            rot = gate_matrix(g, n, shifted_params(params, g.angle_index, shift))
            out[g.angle_index] = after[i] @ rot @ before[i]
    return out
