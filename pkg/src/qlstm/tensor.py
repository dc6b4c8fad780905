"""Dense complex linear algebra for small qubit registers.

States are plain 1-D complex numpy arrays, operators and density matrices are
2-D complex arrays. Qubit 0 is the most significant bit of a basis index and,
in a joint register, system qubits come before ancilla qubits.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_QUBITS = 12
MAX_DIM = 2**MAX_QUBITS

ATOL = 1e-10
# norm drift below RENORM_TOL is left alone, up to DRIFT_TOL it is corrected
RENORM_TOL = 1e-12
DRIFT_TOL = 1e-8


class DimensionError(ValueError):
    """Operand shapes are incompatible or exceed the simulator limit."""


class InvalidStateError(ValueError):
    """A state or density matrix violates its defining invariants."""


@dataclass(frozen=True)
class BipartiteSplit:
    """Sizes of the two factors of a joint Hilbert space (A = system, B = ancilla)."""

    dim_a: int
    dim_b: int

    def __post_init__(self):
        for d in (self.dim_a, self.dim_b):
            if d < 1 or d & (d - 1):
                raise DimensionError(f"subsystem dimension {d} is not a power of two")
        if self.dim_a * self.dim_b > MAX_DIM:
            raise DimensionError(
                f"joint dimension {self.dim_a * self.dim_b} exceeds {MAX_DIM}"
            )

    @classmethod
    def from_qubits(cls, n_a: int, n_b: int) -> "BipartiteSplit":
        return cls(2**n_a, 2**n_b)

    @property
    def dim(self) -> int:
        return self.dim_a * self.dim_b

    @property
    def n_a(self) -> int:
        return self.dim_a.bit_length() - 1

    @property
    def n_b(self) -> int:
        return self.dim_b.bit_length() - 1

    def check(self, dim: int) -> None:
        if dim != self.dim:
            raise DimensionError(
                f"split {self.dim_a}x{self.dim_b} does not match dimension {dim}"
            )


def num_qubits(dim: int) -> int:
    """Number of qubits for a register of dimension ``dim`` (a power of two)."""
    if dim < 2 or dim & (dim - 1):
        raise DimensionError(f"dimension {dim} is not a power of two >= 2")
    return dim.bit_length() - 1


def _finite(a: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(a)):
        raise InvalidStateError(f"{what} has non-finite entries")


def as_state(vec, *, renormalize: bool = True) -> np.ndarray:
    """Validate ``vec`` as a normalized statevector and return it as complex array.

    Float drift in the norm up to 1e-8 is corrected by renormalizing; a larger
    deviation means the vector was never a state and raises.
    """
    s = np.asarray(vec, dtype=complex)
    if s.ndim != 1:
        raise DimensionError(f"statevector must be 1-D, got shape {s.shape}")
    num_qubits(s.size)
    _finite(s, "statevector")
    drift = abs(np.linalg.norm(s) - 1.0)
    if drift > DRIFT_TOL:
        raise InvalidStateError(f"statevector norm off by {drift:.3e}")
    if renormalize and drift > RENORM_TOL:
        s = s / np.linalg.norm(s)
    return s


def check_unitary(u, atol: float = ATOL) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise DimensionError(f"unitary must be square, got shape {u.shape}")
    _finite(u, "unitary")
    err = np.linalg.norm(u @ u.conj().T - np.eye(u.shape[0]))
    if err > atol:
        raise InvalidStateError(f"matrix is not unitary (|UU^+ - I|_F = {err:.3e})")
    return u


def check_density(rho, atol: float = ATOL) -> np.ndarray:
    """Validate Hermiticity, unit trace and positivity of ``rho``."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"density matrix must be square, got shape {rho.shape}")
    _finite(rho, "density matrix")
    if np.max(np.abs(rho - rho.conj().T)) > atol:
        raise InvalidStateError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > atol:
        raise InvalidStateError(f"density matrix has trace {np.trace(rho).real:.12g}")
    if np.linalg.eigvalsh(rho)[0] < -atol:
        raise InvalidStateError("density matrix has a negative eigenvalue")
    return rho


def kron(a, b) -> np.ndarray:
    """Kronecker product of two vectors or two matrices, capped at ``MAX_DIM``."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim != b.ndim or a.ndim not in (1, 2):
        raise DimensionError("kron expects two vectors or two matrices")
    if a.shape[0] * b.shape[0] > MAX_DIM:
        raise DimensionError(
            f"product dimension {a.shape[0] * b.shape[0]} exceeds {MAX_DIM} "
            f"({MAX_QUBITS} qubits)"
        )
    return np.kron(a, b)


def apply_unitary(u, s) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    s = np.asarray(s, dtype=complex)
    if u.ndim != 2 or u.shape != (s.size, s.size):
        raise DimensionError(f"cannot apply {u.shape} operator to length-{s.size} state")
    return as_state(u @ s)


def outer_product(s) -> np.ndarray:
    """Projector ``|s><s|``."""
    s = as_state(s)
    return np.outer(s, s.conj())


def partial_trace(rho, split: BipartiteSplit, keep: str = "A") -> np.ndarray:
    """Reduced density matrix of subsystem ``keep`` ("A" or "B").

    Accepts a stack of matrices with shape ``(..., d, d)`` as well.
    """
    rho = np.asarray(rho, dtype=complex)
    split.check(rho.shape[-1])
    lead = rho.shape[:-2]
    r = rho.reshape(lead + (split.dim_a, split.dim_b, split.dim_a, split.dim_b))
    if keep == "A":
        return np.einsum("...ijkj->...ik", r)
    if keep == "B":
        return np.einsum("...ijil->...jl", r)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def reduced_from_state(s, split: BipartiteSplit, keep: str = "A") -> np.ndarray:
    """Marginal of a pure joint state without forming the full projector."""
    s = np.asarray(s, dtype=complex)
    split.check(s.shape[-1])
    m = s.reshape(s.shape[:-1] + (split.dim_a, split.dim_b))
    if keep == "A":
        return m @ np.swapaxes(m.conj(), -1, -2)
    if keep == "B":
        return np.swapaxes(m, -1, -2) @ m.conj()
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def hermitian_eig(m, atol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and matching eigenvector columns of Hermitian ``m``."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    if np.max(np.abs(m - m.conj().T), initial=0.0) > atol:
        raise InvalidStateError("matrix is not Hermitian")
    vals, vecs = np.linalg.eigh((m + m.conj().T) / 2)
    return vals[::-1].copy(), vecs[:, ::-1].copy()


def random_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random pure state from normalized complex Gaussian amplitudes."""
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return z / np.linalg.norm(z)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Gaussian matrix with phase fix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
