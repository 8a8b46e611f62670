"""Graph tensor-network states in the symmetric and Vidal gauges.

Tensor layout: vertex ``a`` owns an array whose axis 0 is the physical index
(``|0>`` first) followed by one bond axis per neighbor in ascending neighbor
order; ``graph.bond_axis[(a, b)]`` gives the axis of the bond to ``b``.
Per-edge data (lambda vectors) is stored in canonical edge order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import DomainError
from ..graphs import ConnectivityGraph

PLUS = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)


def scale_axis(t: np.ndarray, axis: int, vec: np.ndarray) -> np.ndarray:
    """Multiply ``t`` by ``vec`` broadcast along ``axis``."""
    shape = [1] * t.ndim
    shape[axis] = vec.shape[0]
    return t * vec.reshape(shape)


def absorb(t: np.ndarray, axis: int, m: np.ndarray) -> np.ndarray:
    """``t[..., j, ...] -> sum_j t[..., j, ...] m[j, k]`` keeping the axis position."""
    moved = np.ascontiguousarray(t.swapaxes(axis, -1))
    return (moved @ m).swapaxes(axis, -1)


def pinv_vector(vec: np.ndarray, rcond: float) -> np.ndarray:
    top = vec.max(initial=0.0)
    out = np.zeros_like(vec)
    keep = vec > rcond * top
    out[keep] = 1.0 / vec[keep]
    return out


@dataclass
class SymmetricState:
    """Plain graph tensor network: one tensor ``T_a`` per vertex."""

    graph: ConnectivityGraph
    tensors: list[np.ndarray]

    def bond_dim(self, a: int, b: int) -> int:
        return self.tensors[a].shape[self.graph.bond_axis[(a, b)]]

    @property
    def bond_dims(self) -> dict[tuple[int, int], int]:
        return {e: self.bond_dim(*e) for e in self.graph.edges}


@dataclass
class VidalState:
    """Vidal-gauge network: vertex tensors ``gammas`` and per-edge ``lambdas``.

    Lambda vectors are nonnegative, sorted in descending order and carry
    unit 2-norm. Operations never modify arrays in place, so copies made with
    :meth:`copy` are cheap and independent.
    """

    graph: ConnectivityGraph
    gammas: list[np.ndarray]
    lambdas: list[np.ndarray]

    def copy(self) -> "VidalState":
        return VidalState(self.graph, list(self.gammas), list(self.lambdas))

    def lam(self, a: int, b: int) -> np.ndarray:
        return self.lambdas[self.graph.index_of(a, b)]

    def bond_dim(self, a: int, b: int) -> int:
        return self.lam(a, b).shape[0]

    @property
    def max_bond_dim(self) -> int:
        return max((lam.shape[0] for lam in self.lambdas), default=1)

    def nbytes(self) -> int:
        return sum(g.nbytes for g in self.gammas) + sum(lam.nbytes for lam in self.lambdas)


def product_state(graph: ConnectivityGraph, amplitudes: Sequence[Sequence[complex]] | np.ndarray | None = None) -> VidalState:
    """Product state with bond dimension 1 everywhere (``|+>`` on every qubit by default)."""
    if amplitudes is None:
        amps = np.tile(PLUS, (graph.n, 1))
    else:
        amps = np.asarray(amplitudes, dtype=complex)
        if amps.shape != (graph.n, 2):
            raise DomainError(f"expected amplitudes of shape ({graph.n}, 2), got {amps.shape}")
    norms = np.linalg.norm(amps, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-12):
        bad = int(np.argmax(np.abs(norms - 1.0)))
        raise DomainError(f"amplitude vector of qubit {bad} has norm {norms[bad]:.15f}")
    gammas = [amps[a].reshape((2,) + (1,) * graph.degree(a)).copy() for a in range(graph.n)]
    lambdas = [np.ones(1) for _ in graph.edges]
    return VidalState(graph, gammas, lambdas)


def to_symmetric(state: VidalState) -> SymmetricState:
    """Split every lambda as ``sqrt(lambda)`` into both endpoint tensors."""
    g = state.graph
    roots = [np.sqrt(lam) for lam in state.lambdas]
    tensors = []
    for a in range(g.n):
        t = state.gammas[a]
        for b in g.adjacency[a]:
            t = scale_axis(t, g.bond_axis[(a, b)], roots[g.edge_index[(a, b)]])
        tensors.append(t)
    return SymmetricState(g, tensors)
