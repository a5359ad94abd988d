"""Quantum-kernel support vector regression for disability inception rates."""

__version__ = "0.1.0"

from .errors import ConvergenceError, IngestionError, UndefinedStatisticError
from .evaluation import LoocvResult, loocv, weighted_r2
from .feature_map import Covariate, embedding_circuit, kernel_circuit
from .inception import (
    CohortRecord,
    Dataset,
    Scenario,
    inverse_logit,
    logit_target,
    read_dataset,
    sample_weights,
    synth_dataset,
    to_covariate,
    write_dataset,
)
from .kernels import (
    KernelMatrix,
    KernelSpec,
    classical_kernel,
    exact_quantum_kernel,
    kernel_matrix,
    kernel_vector,
    psd_diagnostics,
    sampled_quantum_kernel,
)
from .statevector import (
    Circuit,
    Gate,
    GateKind,
    StateVector,
    adjoint,
    apply_circuit,
    apply_gate,
    ground_state,
    outcome_probability,
    sample_outcomes,
)
from .svr import SvrConfig, SvrModel, kkt_report, predict, solve_dual
