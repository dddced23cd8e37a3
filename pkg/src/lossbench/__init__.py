"""Simulation and analysis toolkit for randomized loss-rate characterization.

Simulates random-gate-sequence experiments on small quantum systems under
trace-non-increasing noise, fits the resulting decay curves, and checks the
worst-case-vs-average loss bound, detector efficiency, and Markovianity
diagnostics.
"""

__version__ = "0.1.0"

from .analysis import (
    BoundReport,
    DecayFit,
    DetectorEfficiency,
    MarkovReport,
    PlateauReport,
    RBFit,
    average_response,
    average_survival,
    detector_efficiency,
    fit_loss_decay,
    fit_rb_decay,
    markovianity_tests,
    plateau_test,
    prop1_check,
    state_survival,
    worst_case_loss,
)
from .config import ConfigError, RunConfig, parse_config
from .core import (
    DensityMatrix,
    MeasurementOperator,
    QuantumChannel,
    Violation,
    apply_channel,
    basis_state,
    expectation,
    maximally_mixed,
    sample_clicks,
    stream,
    survival_operator,
    validate_state,
)
from .gates import (
    GateSet,
    clifford_gateset,
    compose_sequence,
    embed_gateset,
    embed_in_qutrit,
    inverse_gate,
    pad_to_qutrit,
    pauli_gateset,
    twirl,
)
from .noise import (
    DetectorSpec,
    LeakageModelSpec,
    LossModelSpec,
    basis_loss_channel,
    coherent_leakage_error,
    depolarizing_channel,
    detector_model,
    random_lossy_channel,
    random_orthonormal_basis,
)
from .protocol import (
    DecayDataset,
    ProtocolConfig,
    SequenceOutcome,
    exact_sequence_average,
    execute_sequence,
    read_decay_csv,
    run_protocol,
    sample_sequence,
)

__all__ = [
    "__version__",
    "BoundReport",
    "ConfigError",
    "DecayDataset",
    "DecayFit",
    "DensityMatrix",
    "DetectorEfficiency",
    "DetectorSpec",
    "GateSet",
    "LeakageModelSpec",
    "LossModelSpec",
    "MarkovReport",
    "MeasurementOperator",
    "PlateauReport",
    "ProtocolConfig",
    "QuantumChannel",
    "RBFit",
    "RunConfig",
    "SequenceOutcome",
    "Violation",
    "apply_channel",
    "average_response",
    "average_survival",
    "basis_loss_channel",
    "basis_state",
    "clifford_gateset",
    "coherent_leakage_error",
    "compose_sequence",
    "depolarizing_channel",
    "detector_efficiency",
    "detector_model",
    "embed_gateset",
    "embed_in_qutrit",
    "exact_sequence_average",
    "execute_sequence",
    "expectation",
    "fit_loss_decay",
    "fit_rb_decay",
    "inverse_gate",
    "markovianity_tests",
    "maximally_mixed",
    "pad_to_qutrit",
    "parse_config",
    "pauli_gateset",
    "plateau_test",
    "prop1_check",
    "random_lossy_channel",
    "random_orthonormal_basis",
    "read_decay_csv",
    "run_protocol",
    "sample_clicks",
    "sample_sequence",
    "state_survival",
    "stream",
    "survival_operator",
    "twirl",
    "validate_state",
    "worst_case_loss",
]
