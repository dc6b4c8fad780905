"""The ancilla update seen as a quantum channel.

With the system register prepared in a fixed state, tracing it out after the
joint unitary leaves a CPTP map on the ancilla with Kraus operators
K_i = (<i| x I) U (|phi> x I).
"""
# %%
import numpy as np

from qlstm.entanglement import apply_channel, fidelity, kraus_from_unitary, von_neumann_entropy
from qlstm.tensor import BipartiteSplit, kron, outer_product, partial_trace, random_state, random_unitary

rng = np.random.default_rng(5)
split = BipartiteSplit.from_qubits(2, 2)
u = random_unitary(16, rng)
phi = random_state(4, rng)

ks = kraus_from_unitary(u, split, phi)
print("number of Kraus operators:", len(ks.operators))
print("completeness error:", ks.completeness_error())

# %% Same output either way
rho = outer_product(random_state(4, rng))
via_kraus = apply_channel(ks, rho)
via_trace = partial_trace(u @ kron(outer_product(phi), rho) @ u.conj().T, split, "B")
print("max difference:", np.abs(via_kraus - via_trace).max())

# %% A pure ancilla usually comes out mixed
print("S(in) =", von_neumann_entropy(rho), " S(out) =", von_neumann_entropy(via_kraus))
print("F(in, out) =", fidelity(rho, via_kraus))
