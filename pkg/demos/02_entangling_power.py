"""How much entanglement can a gate create or destroy?

E_up maximises the gain in ancilla entropy over pure inputs, E_down the loss.
Both are numerical lower bounds.
"""
# %%
import numpy as np

from qlstm.entanglement import (
    PowerConfig,
    entropy_change_stats,
    estimate_disentangling_power,
    estimate_entangling_power,
)
from qlstm.tensor import BipartiteSplit, random_unitary

split = BipartiteSplit.from_qubits(1, 1)
gates = {
    "identity": np.eye(4),
    "cnot": np.eye(4)[[0, 1, 3, 2]],
    "swap": np.eye(4)[[0, 2, 1, 3]],
    "cz": np.diag([1, 1, 1, -1]),
}
for name, u in gates.items():
    up = estimate_entangling_power(u, split)
    print(f"{name:9s} E_up={up.value:.6f} converged={up.converged}")

# %% Two-qubit gates are symmetric: E_up(U) == E_down(U)
rng = np.random.default_rng(1)
u = random_unitary(4, rng)
print("random 1|1:", estimate_entangling_power(u, split).value, estimate_disentangling_power(u, split).value)

# %% On 2|2 registers the powers bound every realised entropy change.
split22 = BipartiteSplit.from_qubits(2, 2)
u = random_unitary(16, rng)
cfg = PowerConfig(restarts=8, steps=300)
up = estimate_entangling_power(u, split22, cfg).value
down = estimate_disentangling_power(u, split22, cfg).value
stats = entropy_change_stats(u, split22, 500)
print(f"-E_down={-down:.3f} <= min dS={stats.min:.3f}  max dS={stats.max:.3f} <= E_up={up:.3f}")
