"""Simulator for memory-assisted one-way quantum computing on a four-qubit
hyperentangled photon-memory cluster state.

Subpackages: qcore (dense qubit linear algebra), cluster (state preparation
and the stabilizer witness), noise (storage dephasing and calibration),
measure (projective measurement and count sampling), tomo (maximum-likelihood
reconstruction), mbqc (the feedforward rotation protocol), timing (latency
budgets), cli (scenario runner).
"""

from .qcore import (
    DensityMatrix,
    ObservableOperator,
    QuantumChannel,
    StateVector,
    Tolerances,
    UnitaryOperator,
    apply_channel,
    apply_unitary,
    density,
    expectation,
    fidelity,
    partial_trace,
    pauli_string,
    permute_qubits,
    rotation_gate,
    tensor,
)
from .cluster import (
    EncodingMap,
    IDEAL_PREP,
    PreparationParams,
    WitnessReport,
    cluster_statevector,
    evaluate_witness,
    hyper_statevector,
    prepare_cluster,
    prepare_hyper,
    witness_operator,
    witness_stabilizer_terms,
)
from .noise import (
    CalibrationError,
    CalibrationResult,
    LifetimePoint,
    StorageNoiseParams,
    calibrate,
    coherence_retention,
    lifetime_curve,
    storage_channel,
)
from .measure import (
    CountTable,
    MeasurementBasis,
    MeasurementSetting,
    RandomSource,
    measure_qubit,
    pauli_settings,
    projectors,
    sample_counts,
)
from .tomo import (
    IncompleteSettingsError,
    MLConfig,
    TomographyReport,
    reconstruct,
    reduced_fidelities,
)
from .mbqc import (
    Lin3State,
    RotationNoise,
    RotationRequest,
    RotationResult,
    branch_verify,
    run_rotation,
    sweep,
    to_lin3,
)
from .timing import LatencyBudget, cycle_time, max_steps

__version__ = "0.1.0"
