"""One recurrent cell step by step, then a short sequence.

The input value is encoded on the system qubits, the hidden state lives on
the ancilla qubits, and the joint register goes through U = U_dis U_en.
"""
# %%
import numpy as np

from qlstm import CellAnsatz, cell_forward, sequence_forward
from qlstm.cell import encode_input, initial_hidden

ansatz = CellAnsatz(n_sys=2, n_anc=2)
rng = np.random.default_rng(42)

# %%
for mode in ("collapsed", "diagonal"):
    params = ansatz.init_params(rng, hidden_mode=mode)
    h = initial_hidden(2)
    print(f"--- {mode}")
    print("encoded x=0.3:", np.round(encode_input(0.3, params.encoder), 3))
    out = cell_forward(0.3, h, params, ansatz)
    print("y =", round(out.y, 4), " branch probabilities", np.round(out.probabilities, 3))
    print("ancilla entropy", round(out.entropy_anc, 4), " new hidden", np.round(out.hidden.vector, 3))

    # a window of four values; the last readout is the forecast
    seq = sequence_forward([0.1, 0.4, 0.7, 0.5], params, ansatz)
    print("readouts", np.round(seq.ys, 4), "-> prediction", round(seq.prediction, 4))
