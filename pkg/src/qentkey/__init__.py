"""Simulated entanglement-ranked key distribution over modeled qubit devices."""

from .sim import (
    Circuit,
    Counts,
    DensityMatrix,
    GateOp,
    StateVector,
    apply_gate,
    exact_density_evolution,
    partial_trace,
    reduced_density_matrix,
    run_circuit,
    sample_measurements,
    state_fidelity,
    trace_distance,
)

__version__ = "0.1.0"

__all__ = [
    "Circuit",
    "Counts",
    "DensityMatrix",
    "GateOp",
    "StateVector",
    "apply_gate",
    "exact_density_evolution",
    "partial_trace",
    "reduced_density_matrix",
    "run_circuit",
    "sample_measurements",
    "state_fidelity",
    "trace_distance",
    "__version__",
]
