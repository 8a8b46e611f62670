"""Problem encoding, Trotter circuits and the annealing driver."""

from .circuit import AnnealConfig, Gate, TrotterCircuit, trotter_circuit
from .driver import RunReport, estimate_fidelity, load_report, round_readout, run_gtqa, write_report
from .problem import (
    ProblemInstance,
    cut_value,
    load_instance,
    maxcut_instance,
    objective,
    random_qubo,
    save_instance,
    score,
)

__all__ = [
    "AnnealConfig",
    "Gate",
    "ProblemInstance",
    "RunReport",
    "TrotterCircuit",
    "cut_value",
    "estimate_fidelity",
    "load_instance",
    "load_report",
    "maxcut_instance",
    "objective",
    "random_qubo",
    "round_readout",
    "run_gtqa",
    "save_instance",
    "score",
    "trotter_circuit",
    "write_report",
]
