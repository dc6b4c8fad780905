"""Entanglement diagnostics for bipartite system/ancilla registers.

Entropies are in ebits (log base 2). Entangling and disentangling powers are
estimated numerically by maximizing the entropy change over pure inputs, so
the returned values are lower bounds on the true suprema.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import (
    BipartiteSplit,
    DimensionError,
    InvalidStateError,
    as_state,
    check_density,
    check_unitary,
    hermitian_eig,
    random_state,
    reduced_from_state,
)

EIG_CLAMP = 1e-12


def entropy_from_spectrum(lams) -> float:
    lams = np.asarray(lams, dtype=float)
    lams = lams[lams > EIG_CLAMP]
    # an eigenvalue a hair above 1 would give -1e-16
    s = float(-np.sum(lams * np.log2(lams)))
    return s if s > 0 else 0.0


def _entropy_rows(lams: np.ndarray) -> np.ndarray:
    # entropy of every row of a stack of spectra
    safe = np.where(lams > EIG_CLAMP, lams, 1.0)
    s = -np.sum(np.where(lams > EIG_CLAMP, lams * np.log2(safe), 0.0), axis=-1)
    return np.where(s > 0, s, 0.0)


def von_neumann_entropy(rho) -> float:
    """S(rho) = -Tr(rho log2 rho), ignoring eigenvalues below 1e-12.

    >>> von_neumann_entropy(np.eye(2) / 2)
    1.0
    """
    rho = check_density(rho)
    lams, _ = hermitian_eig(rho)
    return entropy_from_spectrum(lams)


def pure_state_entropy(states, split: BipartiteSplit) -> np.ndarray:
    """Entanglement entropy of one or many pure joint states (last axis = amplitudes)."""
    states = np.asarray(states, dtype=complex)
    keep = "A" if split.dim_a <= split.dim_b else "B"
    rho = reduced_from_state(states, split, keep)
    return _entropy_rows(np.linalg.eigvalsh(rho))


@dataclass(frozen=True)
class SchmidtDecomposition:
    coefficients: np.ndarray  # sqrt(lambda_i), descending
    basis_a: np.ndarray  # columns |i_A>
    basis_b: np.ndarray  # columns |i_B>

    @property
    def spectrum(self) -> np.ndarray:
        return self.coefficients**2

    def entropy(self) -> float:
        return entropy_from_spectrum(self.spectrum)

    def reconstruct(self) -> np.ndarray:
        return np.einsum("i,ai,bi->ab", self.coefficients, self.basis_a, self.basis_b).reshape(-1)


def schmidt(s, split: BipartiteSplit, cutoff: float = 1e-12) -> SchmidtDecomposition:
    """Schmidt form of a pure joint state from the SVD of its amplitude matrix.

    Coefficients below ``cutoff`` are dropped together with their vectors.
    """
    s = as_state(s)
    split.check(s.size)
    u, sv, vh = np.linalg.svd(s.reshape(split.dim_a, split.dim_b), full_matrices=False)
    keep = sv > cutoff
    return SchmidtDecomposition(sv[keep], u[:, keep], vh[keep].T)


# eigh round-off on unit-trace matrices; sqrt would inflate 1e-17 noise to 1e-8
SQRT_CLAMP = 1e-14


def _psd_sqrt(rho: np.ndarray) -> np.ndarray:
    lams, vecs = hermitian_eig(rho)
    return (vecs * np.sqrt(np.where(lams > SQRT_CLAMP, lams, 0.0))) @ vecs.conj().T


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2, clipped to [0, 1]."""
    rho = check_density(rho)
    sigma = check_density(sigma)
    if rho.shape != sigma.shape:
        raise DimensionError(f"shape mismatch {rho.shape} vs {sigma.shape}")
    r = _psd_sqrt(rho)
    inner = r @ sigma @ r
    lams, _ = hermitian_eig((inner + inner.conj().T) / 2)
    f = float(np.sum(np.sqrt(np.where(lams > SQRT_CLAMP, lams, 0.0))) ** 2)
    return min(max(f, 0.0), 1.0)


# ---------------------------------------------------------------------------
# entangling / disentangling power


@dataclass(frozen=True)
class PowerConfig:
    restarts: int = 32
    steps: int = 500
    tolerance: float = 1e-9
    fd_step: float = 1e-5
    warm_samples: int = 16  # random candidates screened per restart
    seed: int = 0


@dataclass(frozen=True)
class PowerEstimate:
    value: float
    argmax_state: np.ndarray
    restarts_used: int
    converged: bool


def _to_states(x: np.ndarray, d: int) -> np.ndarray:
    z = x[..., :d] + 1j * x[..., d:]
    return z / np.linalg.norm(z, axis=-1, keepdims=True)


def _entropy_gain(u: np.ndarray, x: np.ndarray, split: BipartiteSplit) -> np.ndarray:
    psi = _to_states(x, split.dim)
    return pure_state_entropy(psi @ u.T, split) - pure_state_entropy(psi, split)


def estimate_entangling_power(
    u, split: BipartiteSplit, config: PowerConfig = PowerConfig()
) -> PowerEstimate:
    """Lower-bound estimate of max over pure inputs of S(out) - S(in).

    Each restart starts from the best of ``warm_samples`` Haar-random inputs
    and climbs with central finite-difference gradients and an adaptive step
    (grown on success, halved on failure). A restart stops once an accepted
    step gains less than ``tolerance``. The best restart wins; ties go to the
    lowest restart index.
    """
    u = check_unitary(u)
    split.check(u.shape[0])
    d = split.dim
    n = 2 * d
    rng = np.random.default_rng(config.seed)
    r = config.restarts

    cand = rng.standard_normal((r, config.warm_samples, n))
    cand /= np.linalg.norm(cand, axis=-1, keepdims=True)
    vals = _entropy_gain(u, cand, split)
    pick = np.argmax(vals, axis=1)
    x = cand[np.arange(r), pick]
    f = vals[np.arange(r), pick]

    eye = np.eye(n) * config.fd_step
    step = np.full(r, 0.1)
    active = np.ones(r, dtype=bool)
    converged = np.zeros(r, dtype=bool)
    for _ in range(config.steps):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        xa = x[idx]
        probes = np.concatenate([xa[:, None, :] + eye, xa[:, None, :] - eye], axis=1)
        g = _entropy_gain(u, probes, split)
        grad = (g[:, :n] - g[:, n:]) / (2 * config.fd_step)
        # only the tangential part moves the state; radial scaling is a gauge
        grad -= np.sum(grad * xa, axis=1, keepdims=True) * xa
        gnorm = np.linalg.norm(grad, axis=1)
        flat = gnorm < 1e-14
        converged[idx[flat]] = True
        active[idx[flat]] = False
        grad = grad / np.where(flat, 1.0, gnorm)[:, None]

        trial = xa + step[idx, None] * grad
        trial /= np.linalg.norm(trial, axis=1, keepdims=True)
        ft = _entropy_gain(u, trial, split)
        gain = ft - f[idx]
        ok = (gain > 0) & ~flat
        x[idx[ok]] = trial[ok]
        f[idx[ok]] = ft[ok]
        step[idx[ok]] *= 1.2
        step[idx[~ok]] *= 0.5
        done = (ok & (gain < config.tolerance)) | (step[idx] < 1e-12)
        converged[idx[done]] = True
        active[idx[done]] = False

    best = int(np.argmax(f))
    return PowerEstimate(
        value=max(float(f[best]), 0.0),
        argmax_state=_to_states(x[best], d),
        restarts_used=r,
        converged=bool(converged[best]),
    )


def estimate_disentangling_power(
    u, split: BipartiteSplit, config: PowerConfig = PowerConfig()
) -> PowerEstimate:
    """E_down(U) computed as E_up(U^dagger)."""
    u = np.asarray(u, dtype=complex)
    return estimate_entangling_power(u.conj().T, split, config)


@dataclass(frozen=True)
class EntropyChange:
    mean: float
    min: float
    max: float
    samples: np.ndarray


def entropy_change_stats(u, split: BipartiteSplit, sample_count: int, seed: int = 0) -> EntropyChange:
    """Statistics of S(rho_anc_out) - S(rho_anc_in) over Haar-random pure inputs."""
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    u = check_unitary(u)
    split.check(u.shape[0])
    rng = np.random.default_rng(seed)
    psi = np.stack([random_state(split.dim, rng) for _ in range(sample_count)])
    out = psi @ u.T
    ds = _entropy_rows(np.linalg.eigvalsh(reduced_from_state(out, split, "B"))) - _entropy_rows(
        np.linalg.eigvalsh(reduced_from_state(psi, split, "B"))
    )
    return EntropyChange(float(ds.mean()), float(ds.min()), float(ds.max()), ds)


# ---------------------------------------------------------------------------
# Kraus form of the ancilla update


def unitary_blocks(u, split: BipartiteSplit) -> np.ndarray:
    """Blocks ``<i|_sys U |j>_sys`` as an array indexed ``[i, j]`` of dim_b x dim_b matrices."""
    u = np.asarray(u, dtype=complex)
    split.check(u.shape[0])
    a, b = split.dim_a, split.dim_b
    return u.reshape(a, b, a, b).transpose(0, 2, 1, 3)


@dataclass(frozen=True)
class KrausSet:
    operators: np.ndarray  # shape (k, dim_b, dim_b)

    def __post_init__(self):
        err = self.completeness_error()
        if err > 1e-10:
            raise InvalidStateError(f"Kraus operators are not complete (error {err:.3e})")

    def completeness_error(self) -> float:
        k = self.operators
        total = np.einsum("kji,kjl->il", k.conj(), k)
        return float(np.linalg.norm(total - np.eye(k.shape[-1])))


def kraus_from_unitary(u, split: BipartiteSplit, system_state=None) -> KrausSet:
    """Kraus operators K_i = (<i| x I) U (|psi_sys> x I) of the ancilla channel.

    ``system_state`` is the system-register input; it defaults to |0...0>.
    """
    u = check_unitary(u)
    split.check(u.shape[0])
    if system_state is None:
        system_state = np.zeros(split.dim_a, dtype=complex)
        system_state[0] = 1.0
    system_state = np.asarray(system_state, dtype=complex)
    if system_state.shape != (split.dim_a,):
        raise DimensionError("system state does not match the system register")
    blocks = unitary_blocks(u, split)
    return KrausSet(np.einsum("ijab,j->iab", blocks, system_state))


def apply_channel(kraus: KrausSet, rho) -> np.ndarray:
    rho = check_density(rho)
    k = kraus.operators
    if rho.shape != k.shape[1:]:
        raise DimensionError(f"channel acts on {k.shape[1:]}, got {rho.shape}")
    return np.einsum("kab,bc,kdc->ad", k, rho, k.conj())
