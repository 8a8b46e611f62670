"""Symmetric-to-Vidal gauge conversion, residuals, truncation and entropies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateError, DomainError, NumericalError
from ..graphs import Bipartition
from ..tensors import DEFAULT_RCOND, check_hermitian, svd, trace_norm
from .bp import MessageSet, run_bp, warm_start_messages
from .state import SymmetricState, VidalState, absorb, scale_axis, to_symmetric

__all__ = [
    "to_vidal",
    "vidal_residual",
    "regauge",
    "RegaugeInfo",
    "truncate_edge",
    "approx_entropy",
]


def _sqrt_pair(m: np.ndarray, rcond: float) -> tuple[np.ndarray, np.ndarray]:
    """``(m^{1/2}, pinv(m^{1/2}))`` from a single eigendecomposition."""
    m = check_hermitian(m, rtol=1e-10)
    try:
        w, v = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolve failed: {exc}") from exc
    top = w.max(initial=0.0)
    if top <= 0:
        raise DegenerateError("message has no positive eigenvalue")
    # eigenvalues at roundoff level would survive the square root as ~1e-8
    # and leak into lambda, so drop them from both factors
    keep = w > rcond * top
    root = np.where(keep, np.sqrt(np.clip(w, 0.0, None)), 0.0)
    inv = np.zeros_like(root)
    inv[keep] = 1.0 / root[keep]
    vh = v.conj().T
    return (v * root) @ vh, (v * inv) @ vh


def to_vidal(state: SymmetricState, messages: MessageSet | dict, rcond: float = DEFAULT_RCOND) -> VidalState:
    """Convert a symmetric network plus converged messages to the Vidal gauge.

    For each edge the bond is rotated by the square roots of the two messages
    and an SVD of ``sqrt(m_ab)^T sqrt(m_ba)`` yields the new lambda; singular
    values at or below ``rcond * max`` are dropped. Each vertex tensor is then
    rescaled so that its weighted norm ``sum |Gamma|^2 prod lambda^2`` is one.
    """
    msgs = messages.messages if isinstance(messages, MessageSet) else messages
    g = state.graph
    gammas = list(state.tensors)
    lambdas: list[np.ndarray] = []
    for a, b in g.edges:
        sa, ia = _sqrt_pair(msgs[(a, b)], rcond)
        sb, ib = _sqrt_pair(msgs[(b, a)], rcond)
        u, s, vh = svd(sa.T @ sb)
        if s.size == 0 or not s[0] > 0:
            raise DegenerateError(f"edge ({a}, {b}) carries no weight")
        k = int(np.count_nonzero(s > rcond * s[0]))
        pa = ia.T @ u[:, :k]
        pb = ib.T @ vh[:k].T
        gammas[a] = absorb(gammas[a], g.bond_axis[(a, b)], pa)
        gammas[b] = absorb(gammas[b], g.bond_axis[(b, a)], pb)
        lam = s[:k]
        lambdas.append(lam / np.linalg.norm(lam))
    for a in range(g.n):
        weight = np.abs(gammas[a]) ** 2
        for b in g.adjacency[a]:
            weight = scale_axis(weight, g.bond_axis[(a, b)], lambdas[g.edge_index[(a, b)]] ** 2)
        w = weight.sum()
        if not w > 0:
            raise DegenerateError(f"vertex {a} tensor vanished during regauging")
        gammas[a] = gammas[a] / np.sqrt(w)
    return VidalState(g, gammas, lambdas)


def orthogonality_matrix(state: VidalState, a: int, b: int) -> np.ndarray:
    """``sum Gamma_a Gamma_a^* prod_{c != b} lambda_ac^2`` as a matrix on the ``(a, b)`` bond."""
    g = state.graph
    gam = state.gammas[a]
    x = gam
    for c in g.adjacency[a]:
        if c != b:
            x = scale_axis(x, g.bond_axis[(a, c)], state.lambdas[g.edge_index[(a, c)]] ** 2)
    ax = g.bond_axis[(a, b)]
    d = gam.shape[ax]
    xm = x.swapaxes(ax, -1).reshape(-1, d)
    gm = gam.swapaxes(ax, -1).reshape(-1, d)
    return xm.T @ gm.conj()


def vidal_residual(state: VidalState) -> float:
    """Mean trace-norm deviation of the orthogonality matrices from identity,
    averaged over the ``2|E|`` directed edges (0 for an exact Vidal gauge)."""
    g = state.graph
    if g.num_edges == 0:
        return 0.0
    total = 0.0
    for a in range(g.n):
        for b in g.adjacency[a]:
            m = orthogonality_matrix(state, a, b)
            total += trace_norm(np.eye(m.shape[0]) - 0.5 * (m + m.conj().T), hermitian=True)
    return total / (2 * g.num_edges)


@dataclass
class RegaugeInfo:
    messages: MessageSet
    symmetric: SymmetricState
    iterations: int
    converged: bool
    residual: float | None


def regauge(
    state: VidalState,
    eps: float = 1e-8,
    max_iters: int = 100,
    rcond: float = DEFAULT_RCOND,
    damping: float = 0.0,
    compute_residual: bool = True,
) -> tuple[VidalState, RegaugeInfo]:
    """Restore the Vidal gauge by BP warm-started from the current lambdas."""
    sym = to_symmetric(state)
    msgs = run_bp(sym, eps=eps, max_iters=max_iters, init=warm_start_messages(state), damping=damping)
    new = to_vidal(sym, msgs, rcond=rcond)
    res = vidal_residual(new) if compute_residual else None
    return new, RegaugeInfo(msgs, sym, msgs.iterations, msgs.converged, res)


def truncate_edge(state: VidalState, edge: tuple[int, int], chi: int) -> tuple[VidalState, float]:
    """Keep the ``chi`` largest lambdas of ``edge``.

    Returns the new state and the discarded weight
    ``sqrt(sum_{j >= chi} lambda_j^2)`` measured before renormalization.
    """
    if chi < 1:
        raise DomainError("chi must be at least 1")
    g = state.graph
    a, b = edge
    i = g.index_of(a, b)
    lam = state.lambdas[i]
    if lam.shape[0] <= chi:
        return state.copy(), 0.0
    err = float(np.sqrt(np.sum(lam[chi:] ** 2)))
    new = state.copy()
    kept = lam[:chi]
    new.lambdas[i] = kept / np.linalg.norm(kept)
    for u, v in ((a, b), (b, a)):
        ax = g.bond_axis[(u, v)]
        idx = [slice(None)] * new.gammas[u].ndim
        idx[ax] = slice(0, chi)
        new.gammas[u] = new.gammas[u][tuple(idx)]
    return new, err


def approx_entropy(state: VidalState, cut: Bipartition) -> float:
    """Sum of the bond entanglement entropies ``-sum lambda^2 ln lambda^2`` over the cut edges."""
    total = 0.0
    for a, b in cut.cut_edges:
        p = state.lam(a, b) ** 2
        p = p[p > 0]
        total -= float(np.sum(p * np.log(p)))
    return total
