"""Reduced states, entropy and Schmidt coefficients of a few joint states."""
# %%
import numpy as np

from qlstm import tensor as T
from qlstm.entanglement import fidelity, schmidt, von_neumann_entropy

split = T.BipartiteSplit.from_qubits(1, 1)
bell = T.as_state(np.array([1, 0, 0, 1]) / np.sqrt(2))
product = np.kron([1, 0], [0.6, 0.8])

# %% A Bell pair has a maximally mixed marginal: one ebit.
for name, s in [("bell", bell), ("product", product)]:
    rho = T.outer_product(s)
    rho_b = T.partial_trace(rho, split, keep="B")
    print(name, "rho_B =\n", np.round(rho_b, 3))
    print("  S =", von_neumann_entropy(rho_b), " schmidt =", schmidt(s, split).coefficients)

# %% Random 2|2 states: both marginals always share their spectrum.
rng = np.random.default_rng(0)
split22 = T.BipartiteSplit.from_qubits(2, 2)
for _ in range(3):
    s = T.random_state(16, rng)
    rho = T.outer_product(s)
    a = von_neumann_entropy(T.partial_trace(rho, split22, "A"))
    b = von_neumann_entropy(T.partial_trace(rho, split22, "B"))
    print(f"S_sys={a:.6f}  S_anc={b:.6f}")

# %% Fidelity between the Bell marginal and a slightly biased qubit
mixed = np.eye(2) / 2
biased = np.diag([0.6, 0.4])
print("F =", fidelity(mixed, biased))
