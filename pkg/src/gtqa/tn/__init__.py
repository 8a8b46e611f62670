"""Graph tensor networks: states, belief propagation, gauging and gates."""

from .bp import MessageSet, reduced_density_matrices, reduced_density_matrix, run_bp, warm_start_messages
from .gates import apply_1q, apply_2q
from .gauge import RegaugeInfo, approx_entropy, regauge, to_vidal, truncate_edge, vidal_residual
from .io import load_state, save_state
from .state import SymmetricState, VidalState, product_state, to_symmetric

__all__ = [
    "MessageSet",
    "RegaugeInfo",
    "SymmetricState",
    "VidalState",
    "apply_1q",
    "apply_2q",
    "approx_entropy",
    "load_state",
    "product_state",
    "reduced_density_matrices",
    "reduced_density_matrix",
    "regauge",
    "run_bp",
    "save_state",
    "to_symmetric",
    "to_vidal",
    "truncate_edge",
    "vidal_residual",
    "warm_start_messages",
]
