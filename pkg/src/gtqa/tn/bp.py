"""Belief propagation on graph tensor networks.

A message ``m[(a, b)]`` is the environment that the branch behind ``a``
presents to ``b`` across edge ``{a, b}``; its first index pairs with the ket
layer and its second with the bra layer. Messages are kept Hermitian with
unit trace.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateError, DomainError
from ..tensors import random_density_matrix, trace_norm
from .state import SymmetricState, VidalState, absorb

logger = logging.getLogger(__name__)

__all__ = [
    "MessageSet",
    "run_bp",
    "message_update",
    "reduced_density_matrix",
    "reduced_density_matrices",
    "warm_start_messages",
]


@dataclass
class MessageSet:
    messages: dict[tuple[int, int], np.ndarray]
    iterations: int = 0
    converged: bool = True
    distance: float = 0.0
    history: list[float] = field(default_factory=list)

    def __getitem__(self, key: tuple[int, int]) -> np.ndarray:
        return self.messages[key]

    def copy(self) -> "MessageSet":
        return MessageSet(dict(self.messages), self.iterations, self.converged, self.distance, list(self.history))


def _normalize(m: np.ndarray) -> np.ndarray:
    m = 0.5 * (m + m.conj().T)
    tr = np.trace(m).real
    if not tr > 0:
        raise DegenerateError("message with non-positive trace")
    return m / tr


def message_update(state: SymmetricState, messages: dict, a: int, b: int) -> np.ndarray:
    """Unnormalized ``m_{a->b}`` from ``T_a``, ``T_a^*`` and the messages into ``a`` except from ``b``."""
    g = state.graph
    t = state.tensors[a]
    x = t
    for c in g.adjacency[a]:
        if c != b:
            x = absorb(x, g.bond_axis[(a, c)], messages[(c, a)])
    ax = g.bond_axis[(a, b)]
    d = t.shape[ax]
    xm = x.swapaxes(ax, -1).reshape(-1, d)
    tm = t.swapaxes(ax, -1).reshape(-1, d)
    return xm.T @ tm.conj()


def warm_start_messages(state: VidalState) -> MessageSet:
    """Diagonal messages ``diag(lambda) / sum(lambda)`` read off the Vidal lambdas.

    For a state that satisfies local orthogonality exactly these are a fixed
    point of the message update for the symmetric form of the state.
    """
    g = state.graph
    msgs = {}
    for i, (a, b) in enumerate(g.edges):
        lam = state.lambdas[i]
        m = np.diag(lam / lam.sum()).astype(complex)
        msgs[(a, b)] = m
        msgs[(b, a)] = m
    return MessageSet(msgs, iterations=0, converged=False, distance=float("nan"))


def random_messages(state: SymmetricState, rng: np.random.Generator) -> dict:
    g = state.graph
    msgs = {}
    for a, b in g.edges:
        d = state.bond_dim(a, b)
        msgs[(a, b)] = random_density_matrix(d, rng)
        msgs[(b, a)] = random_density_matrix(d, rng)
    return msgs


def run_bp(
    state: SymmetricState,
    eps: float = 1e-8,
    max_iters: int = 100,
    init: MessageSet | None = None,
    rng: np.random.Generator | None = None,
    damping: float = 0.0,
) -> MessageSet:
    """Sequential (Gauss-Seidel) BP sweeps in canonical edge order.

    A sweep updates both directions of every edge, replacing messages
    immediately. The sweep distance is the summed trace-norm change of all
    unit-trace messages; iteration stops once ``distance / |E| < eps`` or
    after ``max_iters`` sweeps. Non-convergence is reported, not raised.
    """
    if not eps > 0:
        raise DomainError("eps must be positive")
    if max_iters < 1:
        raise DomainError("max_iters must be positive")
    if not 0.0 <= damping < 1.0:
        raise DomainError("damping must lie in [0, 1)")
    g = state.graph
    if init is not None:
        msgs = dict(init.messages)
    else:
        msgs = random_messages(state, rng if rng is not None else np.random.default_rng(0))
    if g.num_edges == 0:
        return MessageSet(msgs, 0, True, 0.0)

    history = []
    converged = False
    dist = float("inf")
    it = 0
    for it in range(1, max_iters + 1):
        dist = 0.0
        for a, b in g.edges:
            new_ab = _normalize(message_update(state, msgs, a, b))
            new_ba = _normalize(message_update(state, msgs, b, a))
            old_ab, old_ba = msgs[(a, b)], msgs[(b, a)]
            if damping:
                new_ab = _normalize((1 - damping) * new_ab + damping * old_ab)
                new_ba = _normalize((1 - damping) * new_ba + damping * old_ba)
            dist += trace_norm(new_ab - old_ab, hermitian=True) + trace_norm(new_ba - old_ba, hermitian=True)
            msgs[(a, b)] = new_ab
            msgs[(b, a)] = new_ba
        dist /= g.num_edges
        history.append(dist)
        if dist < eps:
            converged = True
            break
    if not converged:
        logger.debug("BP not converged after %d sweeps (distance %.3e)", it, dist)
    return MessageSet(msgs, it, converged, dist, history)


def reduced_density_matrix(state: SymmetricState, messages: MessageSet | dict, a: int) -> np.ndarray:
    """Single-qubit reduced density matrix of vertex ``a`` with the environment
    approximated by the product of incoming messages; unit trace."""
    msgs = messages.messages if isinstance(messages, MessageSet) else messages
    g = state.graph
    t = state.tensors[a]
    x = t
    for c in g.adjacency[a]:
        x = absorb(x, g.bond_axis[(a, c)], msgs[(c, a)])
    rho = x.reshape(2, -1) @ t.reshape(2, -1).conj().T
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if not tr > 1e-300:
        raise DegenerateError(f"reduced density matrix of qubit {a} has zero trace")
    return rho / tr


def reduced_density_matrices(state: SymmetricState, messages: MessageSet | dict) -> np.ndarray:
    """All single-qubit reductions stacked as an ``(n, 2, 2)`` array."""
    return np.stack([reduced_density_matrix(state, messages, a) for a in range(state.graph.n)])
