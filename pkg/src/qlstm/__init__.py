"""Quantum LSTM with an ancilla register as recurrent memory, plus entanglement diagnostics."""
from .cell import (
    CellAnsatz,
    CellOutput,
    EncoderParameters,
    HiddenState,
    QLstmParameters,
    cell_forward,
    encode_input,
    initial_hidden,
    readout_expectation,
    sequence_forward,
)
from .circuit import LayeredAnsatz, apply_ansatz, build_unitary, rotation_matrix, shifted_params
from .data import (
    RawSeries,
    ScalingSpec,
    TimeSeriesDataset,
    fit_apply_scaling,
    generate_noisy_sine,
    load_csv,
    make_windows,
)
from .entanglement import (
    KrausSet,
    PowerConfig,
    PowerEstimate,
    apply_channel,
    entropy_change_stats,
    estimate_disentangling_power,
    estimate_entangling_power,
    fidelity,
    kraus_from_unitary,
    schmidt,
    von_neumann_entropy,
)
from .tensor import (
    BipartiteSplit,
    apply_unitary,
    hermitian_eig,
    kron,
    outer_product,
    partial_trace,
)
from .training import TrainConfig, evaluate, mse_loss, train

__version__ = "0.1.0"
