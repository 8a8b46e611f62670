"""Gate application on Vidal-gauge states (simple update)."""

from __future__ import annotations

import numpy as np

from ..errors import DomainError, ShapeError
from ..tensors import DEFAULT_RCOND, svd
from .state import VidalState, pinv_vector, scale_axis

__all__ = ["apply_1q", "apply_2q", "UNITARY_ATOL"]

UNITARY_ATOL = 1e-12


def _check_unitary(w: np.ndarray, dim: int) -> np.ndarray:
    w = np.asarray(w, dtype=complex)
    if dim == 4 and w.shape == (2, 2, 2, 2):
        w = w.reshape(4, 4)
    if w.shape != (dim, dim):
        raise ShapeError(f"expected a {dim}x{dim} gate, got shape {w.shape}")
    if np.abs(w.conj().T @ w - np.eye(dim)).max() > UNITARY_ATOL:
        raise DomainError("gate is not unitary")
    return w


def apply_1q(state: VidalState, a: int, w: np.ndarray, check: bool = True) -> VidalState:
    """Apply a single-qubit unitary to vertex ``a``; no lambda changes."""
    if not 0 <= a < state.graph.n:
        raise DomainError(f"vertex {a} out of range")
    if check:
        w = _check_unitary(w, 2)
    new = state.copy()
    new.gammas[a] = np.tensordot(w, state.gammas[a], axes=([1], [0]))
    return new


def apply_2q(
    state: VidalState,
    edge: tuple[int, int],
    w: np.ndarray,
    chi: int,
    rcond: float = DEFAULT_RCOND,
    check: bool = True,
    inplace: bool = False,
) -> tuple[VidalState, float]:
    """Apply a two-qubit unitary across ``edge`` and truncate to ``chi``.

    ``w`` is indexed ``[(i_a, i_b), (i_a', i_b')]`` with ``a = edge[0]``.
    Neighboring lambdas are absorbed, the two tensors are QR-reduced to their
    bond-facing parts, the gate is applied and the result split by SVD. The
    returned gate fidelity is ``(sum_{kept} lambda_j^2)^2`` over the
    normalized full spectrum. With ``inplace`` the input state object is
    updated and returned instead of a copy.
    """
    if chi < 1:
        raise DomainError("chi must be at least 1")
    g = state.graph
    a, b = edge
    i = g.index_of(a, b)
    if check:
        w = _check_unitary(w, 4)
    else:
        w = np.asarray(w).reshape(4, 4)
    lam = state.lambdas
    ax_a = g.bond_axis[(a, b)]
    ax_b = g.bond_axis[(b, a)]

    ga = state.gammas[a]
    env_a = [(g.bond_axis[(a, c)], lam[g.edge_index[(a, c)]]) for c in g.adjacency[a] if c != b]
    for ax, l in env_a:
        ga = scale_axis(ga, ax, l)
    gb = state.gammas[b]
    env_b = [(g.bond_axis[(b, c)], lam[g.edge_index[(b, c)]]) for c in g.adjacency[b] if c != a]
    for ax, l in env_b:
        gb = scale_axis(gb, ax, l)

    d = ga.shape[ax_a]
    # A: (rest_a, phys, bond) and B: (bond, phys, rest_b)
    A = np.moveaxis(ga, [0, ax_a], [-2, -1])
    rest_a = A.shape[:-2]
    am = A.reshape(-1, 2 * d)
    qa = None
    if am.shape[0] > 2 * d:
        qa, am = np.linalg.qr(am)
    B = np.moveaxis(gb, [ax_b, 0], [0, 1])
    rest_b = B.shape[2:]
    bm = B.reshape(2 * d, -1)
    qb = None
    if bm.shape[1] > 2 * d:
        q, r = np.linalg.qr(bm.T)
        qb, bm = q.T, r.T
    ka, kb = am.shape[0], bm.shape[1]

    ra = am.reshape(ka, 2, d) * lam[i][None, None, :]
    lb = bm.reshape(d, 2, kb)
    theta = np.tensordot(ra, lb, axes=([2], [0]))  # (ka, i_a', i_b', kb)
    theta = np.einsum("xyzw,kzwl->kxyl", w.reshape(2, 2, 2, 2), theta)
    u, s, vh = svd(theta.reshape(2 * ka, 2 * kb))
    total = np.sqrt(np.sum(s ** 2))
    if not total > 0:
        raise DomainError("gate annihilated the state")
    full = s / total
    nz = int(np.count_nonzero(s > rcond * s[0]))
    keep = max(1, min(nz, chi))
    kept_weight = float(np.sum(full[:keep] ** 2))
    fidelity = min(kept_weight, 1.0) ** 2
    new_lam = full[:keep] / np.sqrt(kept_weight)

    ua = u[:, :keep].reshape(ka, 2, keep)
    if qa is not None:
        ua = np.tensordot(qa, ua, axes=([1], [0]))
    ua = np.moveaxis(ua.reshape(*rest_a, 2, keep), [-2, -1], [0, ax_a])
    for ax, l in env_a:
        ua = scale_axis(ua, ax, pinv_vector(l, rcond))
    vb = vh[:keep].reshape(keep, 2, kb)
    if qb is not None:
        vb = np.tensordot(vb, qb, axes=([2], [0]))
    vb = np.moveaxis(vb.reshape(keep, 2, *rest_b), [0, 1], [ax_b, 0])
    for ax, l in env_b:
        vb = scale_axis(vb, ax, pinv_vector(l, rcond))

    new = state if inplace else state.copy()
    new.gammas[a] = ua
    new.gammas[b] = vb
    new.lambdas[i] = new_lam
    return new, fidelity
