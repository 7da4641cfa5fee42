"""Estimate the error loss of noisy circuits by sampling random Clifford gates."""

from .circuit import Circuit, GateAssignment, Observable, experimental_circuit, standard_circuit, validate
from .noise import NoiseModel, build_noise
from .sampling import (
    CLIFFORD,
    UNITARY,
    LossEstimate,
    SamplingMode,
    enumerate_clifford_loss,
    estimate_fidelity_loss,
    estimate_loss_hybrid_combined,
    estimate_loss_mean_value,
    estimate_loss_single_run,
    histogram,
    moments,
)

__all__ = [
    "CLIFFORD",
    "UNITARY",
    "Circuit",
    "GateAssignment",
    "LossEstimate",
    "NoiseModel",
    "Observable",
    "SamplingMode",
    "build_noise",
    "enumerate_clifford_loss",
    "estimate_fidelity_loss",
    "estimate_loss_hybrid_combined",
    "estimate_loss_mean_value",
    "estimate_loss_single_run",
    "experimental_circuit",
    "histogram",
    "moments",
    "standard_circuit",
    "validate",
]
