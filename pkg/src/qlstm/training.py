"""Loss, gradients and the mini-batch training loop.

Circuit angles get parameter-shift gradients, the classical encoder gets
central finite differences. Each window's prediction is the readout of the
last cell in the chain and the loss is the mean squared error against the
value that follows the window.

The shift rule is exact for quantities linear in the evolved state, such as
the output density matrix of one cell. The training loss is not linear in
it (squared error, hidden-state renormalization, several cells sharing the
same angles), so ``circuit_gradient`` applies the rule to every occurrence
of an angle, i.e. to each cell's output density matrix, and pushes those
exact derivatives forward through the classical steps of the chain.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .cell import (
    MIN_ENCODING_NORM,
    CellAnsatz,
    DegenerateEncodingError,
    EncoderParameters,
    QLstmParameters,
    sequence_forward,
)
from .circuit import build_unitary, shifted_params, shifted_unitaries
from .data import TimeSeriesDataset

SHIFT = np.pi / 2


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss."""


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    batch_size: int = 5
    epochs: int = 100
    optimizer: str = "adam"
    seed: int = 0
    grad_mode: str = "parameter_shift"
    fd_step: float = 1e-5

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError("optimizer must be 'sgd' or 'adam'")
        if self.grad_mode not in ("parameter_shift", "finite_difference"):
            raise ValueError("grad_mode must be 'parameter_shift' or 'finite_difference'")
        if not self.fd_step > 0:
            raise ValueError("fd_step must be > 0")


@dataclass
class GradientBundle:
    d_theta_en: np.ndarray
    d_theta_dis: np.ndarray
    d_w: np.ndarray
    d_b: np.ndarray

    @property
    def circuit(self) -> np.ndarray:
        return np.concatenate([self.d_theta_en, self.d_theta_dis])

    @property
    def encoder(self) -> np.ndarray:
        return np.concatenate([self.d_w, self.d_b])

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.circuit**2) + np.sum(self.encoder**2)))


@dataclass(frozen=True)
class TrainRecord:
    epoch: int
    train_loss: float
    grad_norm: float
    wall_ms: float


def mse_loss(pred, target) -> float:
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {target.shape}")
    if pred.size == 0:
        raise ValueError("mse of empty sequences")
    return float(np.mean((pred - target) ** 2))


def circuit_gradient_ps(loss_fn: Callable[[np.ndarray], float], params, index: int) -> float:
    """Two-term shift rule (L(theta_k + pi/2) - L(theta_k - pi/2)) / 2.

    Exact when ``loss_fn`` is an expectation value of a circuit in which
    ``theta_k`` enters one gate of the form exp(-i theta G / 2), G^2 = I.
    """
    return 0.5 * (
        loss_fn(shifted_params(params, index, SHIFT)) - loss_fn(shifted_params(params, index, -SHIFT))
    )


def central_difference(loss_fn: Callable[[np.ndarray], float], vec, step: float) -> np.ndarray:
    vec = np.asarray(vec, dtype=float)
    grad = np.empty_like(vec)
    for k in range(vec.size):
        grad[k] = (loss_fn(shifted_params(vec, k, step)) - loss_fn(shifted_params(vec, k, -step))) / (
            2 * step
        )
    return grad


def encoder_gradient_fd(
    loss_fn: Callable[[EncoderParameters], float], enc: EncoderParameters, fd_step: float = 1e-5
) -> tuple[np.ndarray, np.ndarray]:
    if not fd_step > 0:
        raise ValueError("fd_step must be > 0")
    d = enc.w.size

    def flat_loss(v):
        return loss_fn(EncoderParameters(v[:d], v[d:]))

    g = central_difference(flat_loss, np.concatenate([enc.w, enc.b]), fd_step)
    return g[:d], g[d:]


# ---------------------------------------------------------------------------
# batched forward passes


def _encode_batch(xs: np.ndarray, enc: EncoderParameters) -> np.ndarray:
    a = xs[:, None] * enc.w + enc.b
    norm = np.linalg.norm(a, axis=1, keepdims=True)
    if np.any(norm <= MIN_ENCODING_NORM):
        raise DegenerateEncodingError("encoder output has (near) zero norm")
    return a / norm


def _z_signs(ansatz: CellAnsatz, qubit: int) -> np.ndarray:
    n = ansatz.n_qubits
    bits = (np.arange(2**n) >> (n - 1 - qubit)) & 1
    return 1.0 - 2.0 * bits


def batch_predictions(
    windows: np.ndarray, params: QLstmParameters, ansatz: CellAnsatz, unitary=None
) -> np.ndarray:
    """Last-step readout for each row of ``windows`` (statevector path, vectorized)."""
    windows = np.atleast_2d(np.asarray(windows, dtype=float))
    if unitary is None:
        unitary = ansatz.unitary(params)
    da, db = 2**ansatz.n_sys, 2**ansatz.n_anc
    nb = windows.shape[0]
    zs = _z_signs(ansatz, params.readout_qubit)
    h = np.zeros((nb, db), dtype=complex)
    h[:, 0] = 1.0
    y = None
    for t in range(windows.shape[1]):
        psi = _encode_batch(windows[:, t], params.encoder)
        out = np.einsum("ba,bj->baj", psi, h).reshape(nb, -1) @ unitary.T
        amp2 = np.abs(out) ** 2
        y = amp2 @ zs
        branches = out.reshape(nb, da, db)
        if params.hidden_mode == "collapsed":
            i_star = np.argmax(np.sum(np.abs(branches) ** 2, axis=2), axis=1)
            phi = branches[np.arange(nb), i_star]
            h = phi / np.linalg.norm(phi, axis=1, keepdims=True)
        else:
            p = np.sum(np.abs(branches) ** 2, axis=1)
            h = (p / np.linalg.norm(p, axis=1, keepdims=True)).astype(complex)
    return y


def batch_loss(windows, targets, params: QLstmParameters, ansatz: CellAnsatz, unitary=None) -> float:
    return mse_loss(batch_predictions(windows, params, ansatz, unitary), targets)


def _shifted_unitaries(params: QLstmParameters, ansatz: CellAnsatz, shift: float) -> np.ndarray:
    u_en = build_unitary(ansatz.en, params.theta_en)
    u_dis = build_unitary(ansatz.dis, params.theta_dis)
    return np.concatenate(
        [
            u_dis @ shifted_unitaries(ansatz.en, params.theta_en, shift),
            shifted_unitaries(ansatz.dis, params.theta_dis, shift) @ u_en,
        ]
    )


def circuit_gradient(
    windows, targets, params: QLstmParameters, ansatz: CellAnsatz
) -> tuple[float, np.ndarray]:
    """Batch loss and its exact gradient w.r.t. (theta_en, theta_dis).

    Forward-mode propagation on density matrices. For cell output
    rho_out = U rho_in U^+, the tangent along angle k is
    U d(rho_in) U^+ + (rho_k+ - rho_k-) / 2, the second term being the
    shift rule applied at this step's occurrence of the angle. The
    collapsed-mode branch index is held fixed (it is piecewise constant).
    """
    windows = np.atleast_2d(np.asarray(windows, dtype=float))
    targets = np.asarray(targets, dtype=float)
    u = ansatz.unitary(params)
    up = _shifted_unitaries(params, ansatz, SHIFT)
    um = _shifted_unitaries(params, ansatz, -SHIFT)
    da, db = 2**ansatz.n_sys, 2**ansatz.n_anc
    nb, npar = windows.shape[0], up.shape[0]
    zs = _z_signs(ansatz, params.readout_qubit)

    r = np.zeros((nb, db, db), dtype=complex)
    r[:, 0, 0] = 1.0
    dr = np.zeros((nb, npar, db, db), dtype=complex)
    y = dy = None
    for t in range(windows.shape[1]):
        psi = _encode_batch(windows[:, t], params.encoder).astype(complex)
        px = np.einsum("ba,bc->bac", psi, psi.conj())
        rho_in = np.einsum("bac,bjk->bajck", px, r).reshape(nb, da * db, da * db)
        drho_in = np.einsum("bac,bpjk->bpajck", px, dr).reshape(nb, npar, da * db, da * db)

        rho = u @ rho_in @ u.conj().T
        drho = u @ drho_in @ u.conj().T
        drho += 0.5 * (
            up[None] @ rho_in[:, None] @ np.swapaxes(up.conj(), -1, -2)[None]
            - um[None] @ rho_in[:, None] @ np.swapaxes(um.conj(), -1, -2)[None]
        )

        y = np.real(np.einsum("bii,i->b", rho, zs))
        dy = np.real(np.einsum("bpii,i->bp", drho, zs))

        blocks = rho.reshape(nb, da, db, da, db)
        dblocks = drho.reshape(nb, npar, da, db, da, db)
        if params.hidden_mode == "collapsed":
            probs = np.real(np.einsum("bijij->bi", blocks))
            i_star = np.argmax(probs, axis=1)
            sel = np.arange(nb)
            blk = blocks[sel, i_star, :, i_star, :]
            dblk = dblocks[sel, :, i_star, :, i_star, :]
            tr = np.real(np.einsum("bjj->b", blk))
            dtr = np.real(np.einsum("bpjj->bp", dblk))
            r = blk / tr[:, None, None]
            dr = (dblk - r[:, None] * dtr[:, :, None, None]) / tr[:, None, None, None]
        else:
            p = np.real(np.einsum("bijij->bj", blocks))
            dp = np.real(np.einsum("bpijij->bpj", dblocks))
            norm = np.linalg.norm(p, axis=1)
            h = p / norm[:, None]
            dh = (dp - h[:, None, :] * np.einsum("bj,bpj->bp", h, dp)[:, :, None]) / norm[:, None, None]
            r = np.einsum("bj,bk->bjk", h, h).astype(complex)
            dr = (np.einsum("bpj,bk->bpjk", dh, h) + np.einsum("bj,bpk->bpjk", h, dh)).astype(complex)

    resid = y - targets
    loss = float(np.mean(resid**2))
    grad = np.mean(2 * resid[:, None] * dy, axis=0)
    return loss, grad


def batch_gradient(
    windows, targets, params: QLstmParameters, ansatz: CellAnsatz, cfg: TrainConfig
) -> tuple[float, GradientBundle]:
    """Mean loss over the batch and the gradient of that mean."""
    windows = np.atleast_2d(np.asarray(windows, dtype=float))
    u = ansatz.unitary(params)
    if cfg.grad_mode == "parameter_shift":
        loss, g_circ = circuit_gradient(windows, targets, params, ansatz)
    else:
        loss = batch_loss(windows, targets, params, ansatz, u)
        g_circ = central_difference(
            lambda v: batch_loss(windows, targets, params.with_vectors(circuit=v), ansatz),
            params.circuit_vector(),
            cfg.fd_step,
        )

    def enc_loss(enc):
        p = params.copy()
        p.encoder = enc
        return batch_loss(windows, targets, p, ansatz, u)

    d_w, d_b = encoder_gradient_fd(enc_loss, params.encoder, cfg.fd_step)
    k = params.theta_en.size
    return loss, GradientBundle(g_circ[:k], g_circ[k:], d_w, d_b)


class SGD:
    def __init__(self, lr: float):
        self.lr = lr

    def step(self, x: np.ndarray, g: np.ndarray) -> np.ndarray:
        return x - self.lr * g


class Adam:
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = self.v = None
        self.t = 0

    def step(self, x: np.ndarray, g: np.ndarray) -> np.ndarray:
        if self.m is None:
            self.m = np.zeros_like(x)
            self.v = np.zeros_like(x)
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * g
        self.v = self.beta2 * self.v + (1 - self.beta2) * g**2
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return x - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def make_optimizer(name: str, lr: float):
    return Adam(lr) if name == "adam" else SGD(lr)


def train(
    dataset: TimeSeriesDataset,
    params: QLstmParameters,
    ansatz: CellAnsatz,
    cfg: TrainConfig,
    log: Optional[Callable[[TrainRecord], None]] = None,
) -> tuple[QLstmParameters, list[TrainRecord]]:
    """Mini-batch training on the train partition; returns new params and per-epoch records.

    ``train_loss`` of an epoch is the sample-weighted mean of the batch losses
    seen during that epoch (each measured before its update).
    """
    ansatz.check(params)
    idx = np.sort(dataset.partition("train"))
    if idx.size == 0:
        raise ValueError("train partition is empty")
    rng = np.random.default_rng(cfg.seed)
    opt = make_optimizer(cfg.optimizer, cfg.learning_rate)
    params = params.copy()
    k = params.circuit_vector().size
    records: list[TrainRecord] = []
    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        order = rng.permutation(idx)
        total = 0.0
        norms = []
        for start in range(0, order.size, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            loss, grad = batch_gradient(
                dataset.inputs[batch], dataset.targets[batch], params, ansatz, cfg
            )
            if not np.isfinite(loss) or not np.all(np.isfinite(grad.circuit)):
                raise DivergenceError(f"non-finite loss or gradient in epoch {epoch}")
            total += loss * batch.size
            norms.append(grad.norm())
            flat = np.concatenate([params.circuit_vector(), params.encoder_vector()])
            flat = opt.step(flat, np.concatenate([grad.circuit, grad.encoder]))
            params = params.with_vectors(circuit=flat[:k], encoder=flat[k:])
        rec = TrainRecord(
            epoch, total / order.size, float(np.mean(norms)), (time.perf_counter() - t0) * 1e3
        )
        if not np.isfinite(rec.train_loss):
            raise DivergenceError(f"non-finite loss in epoch {epoch}")
        records.append(rec)
        if log is not None:
            log(rec)
    return params, records


@dataclass(frozen=True)
class EvalResult:
    mse: float
    rows: list  # (index, true, predicted)


def evaluate(
    dataset: TimeSeriesDataset, partition, params: QLstmParameters, ansatz: CellAnsatz
) -> EvalResult:
    """Forward-only predictions for a partition name or explicit window indices.

    Row indices are positions of the targets in the underlying series.
    """
    idx = dataset.partition(partition) if isinstance(partition, str) else np.asarray(partition)
    idx = np.sort(idx)
    if idx.size == 0:
        raise ValueError("partition is empty")
    u = ansatz.unitary(params)
    preds = np.array([sequence_forward(dataset.inputs[i], params, ansatz, u).prediction for i in idx])
    true = dataset.targets[idx]
    rows = [(int(dataset.target_positions[i]), float(t), float(p)) for i, t, p in zip(idx, true, preds)]
    return EvalResult(mse_loss(preds, true), rows)
