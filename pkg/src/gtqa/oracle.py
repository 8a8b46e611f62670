"""Exact reference computations on dense state vectors.

State vectors use qubit 0 as the most significant bit, and the basis state
with bit 0 on qubit ``a`` has ``Z_a = +1`` (``x_a = +1``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import CapacityError, DomainError, ShapeError
from .graphs import Bipartition
from .anneal.circuit import AnnealConfig, trotter_circuit
from .anneal.problem import ProblemInstance, score
from .tensors import DenseTensor, contract
from .tn.state import VidalState, to_symmetric

__all__ = [
    "MAX_DENSE_QUBITS",
    "ExactRun",
    "plus_state",
    "ising_diagonal",
    "exact_layer",
    "exact_evolve",
    "exact_rdm",
    "exact_rdms",
    "exact_schmidt",
    "exact_entropy",
    "trace_distance_error",
    "entropy_rel_error",
    "brute_force_optimum",
    "tn_to_dense",
    "fidelity_vs_exact",
]

MAX_DENSE_QUBITS = 26
MAX_SCHMIDT_SIDE = 13
MAX_BRUTE_FORCE = 30
MAX_CONTRACTION_SIZE = 1 << 26


def _check_dense(n: int) -> None:
    if n > MAX_DENSE_QUBITS:
        raise CapacityError(f"{n} qubits exceed the dense limit of {MAX_DENSE_QUBITS}")


def _num_qubits(psi: np.ndarray) -> int:
    n = int(psi.size).bit_length() - 1
    if psi.ndim != 1 or psi.size != 1 << n:
        raise ShapeError(f"state vector length {psi.size} is not a power of two")
    return n


def plus_state(n: int) -> np.ndarray:
    _check_dense(n)
    return np.full(1 << n, 2.0 ** (-n / 2), dtype=complex)


def _z_patterns(n: int) -> np.ndarray:
    """``(n, 2^n)`` array of ``Z_a`` eigenvalues."""
    idx = np.arange(1 << n, dtype=np.int64)
    return np.stack([1.0 - 2.0 * ((idx >> (n - 1 - a)) & 1) for a in range(n)])


def ising_diagonal(instance: ProblemInstance) -> np.ndarray:
    """Diagonal of ``sum J_ab Z_a Z_b + sum h_a Z_a``, i.e. ``E(x)`` for every basis state."""
    n = instance.n
    _check_dense(n)
    idx = np.arange(1 << n, dtype=np.int64)

    def z(a: int) -> np.ndarray:
        return 1.0 - 2.0 * ((idx >> (n - 1 - a)) & 1)

    diag = np.zeros(1 << n)
    for a in range(n):
        if instance.h[a] != 0:
            diag += instance.h[a] * z(a)
    for (a, b), j in zip(instance.graph.edges, instance.J):
        diag += j * (z(a) * z(b))
    return diag


def _rotate_x(psi: np.ndarray, n: int, theta: float, block: int = 5) -> np.ndarray:
    """Apply ``exp(-i theta X)`` to every qubit.

    Qubits are grouped into blocks whose joint rotation (a Kronecker power of
    the single-qubit gate) is applied with one batched matrix product.
    """
    c, s = np.cos(theta), -1j * np.sin(theta)
    r1 = np.array([[c, s], [s, c]])
    out = psi
    start = 0
    while start < n:
        m = min(block, n - start)
        r = r1
        for _ in range(m - 1):
            r = np.kron(r, r1)
        v = out.reshape(1 << start, 1 << m, -1)
        out = np.matmul(r, v).reshape(-1)
        start += m
    return out


def exact_layer(psi: np.ndarray, diag: np.ndarray, t_int: float, theta: float) -> np.ndarray:
    """One Trotter layer on a dense vector: diagonal phases, then X rotations.

    The interaction gates of a layer commute, so their product is applied as a
    single diagonal phase ``exp(-i t_int E(x))``.
    """
    n = _num_qubits(psi)
    out = psi * np.exp(-1j * t_int * diag)
    if theta != 0.0:
        out = _rotate_x(out, n, theta)
    return out


def _rdm_from(psi: np.ndarray, prob: np.ndarray, a: int) -> np.ndarray:
    v = psi.reshape(1 << a, 2, -1)
    pv = prob.reshape(1 << a, 2, -1)
    r00 = pv[:, 0, :].sum()
    r11 = pv[:, 1, :].sum()
    r01 = np.einsum("ik,ik->", v[:, 0, :], v[:, 1, :].conj())
    rho = np.array([[r00, r01], [np.conj(r01), r11]])
    return rho / (r00 + r11)


def exact_rdm(psi: np.ndarray, a: int) -> np.ndarray:
    """Single-qubit reduced density matrix of ``a`` (trace normalized)."""
    n = _num_qubits(psi)
    if not 0 <= a < n:
        raise DomainError(f"qubit {a} out of range")
    return _rdm_from(psi, np.abs(psi) ** 2, a)


def exact_rdms(psi: np.ndarray) -> np.ndarray:
    """All single-qubit reduced density matrices as an ``(n, 2, 2)`` array."""
    n = _num_qubits(psi)
    prob = psi.real ** 2 + psi.imag ** 2
    return np.stack([_rdm_from(psi, prob, a) for a in range(n)])


def _bipartite_matrix(psi: np.ndarray, cut: Bipartition) -> np.ndarray:
    n = _num_qubits(psi)
    part_a, part_b = list(cut.part_a), list(cut.part_b)
    if sorted(part_a + part_b) != list(range(n)):
        raise ShapeError("bipartition does not match the number of qubits")
    if min(len(part_a), len(part_b)) > MAX_SCHMIDT_SIDE:
        raise CapacityError(f"smaller side of the cut exceeds {MAX_SCHMIDT_SIDE} qubits")
    t = psi.reshape((2,) * n).transpose(part_a + part_b)
    return t.reshape(1 << len(part_a), 1 << len(part_b))


def exact_schmidt(psi: np.ndarray, cut: Bipartition) -> np.ndarray:
    """Schmidt coefficients across ``cut`` (descending, unit 2-norm)."""
    # a direct SVD keeps small coefficients accurate to machine precision;
    # square roots of Gram eigenvalues would only give ~1e-8
    s = np.linalg.svd(_bipartite_matrix(psi, cut), compute_uv=False)
    return s / np.linalg.norm(s)


def exact_entropy(psi: np.ndarray, cut: Bipartition) -> float:
    """Entanglement entropy ``-sum s^2 ln s^2`` (natural log)."""
    p = exact_schmidt(psi, cut) ** 2
    p = p[p > 1e-300]
    return float(-np.sum(p * np.log(p)))


@dataclass
class ExactRun:
    n: int
    z: np.ndarray
    rdms: np.ndarray | None
    entropies: np.ndarray | None
    final_state: np.ndarray
    norms: np.ndarray
    states: list[np.ndarray] | None = field(default=None, repr=False)


def exact_evolve(
    instance: ProblemInstance,
    config: AnnealConfig,
    cut: Bipartition | None = None,
    record_rdms: bool = True,
    keep_states: bool = False,
    callback: Callable[[int, np.ndarray], None] | None = None,
) -> ExactRun:
    """Dense simulation of the same Trotter gate stream the tensor network sees.

    Per-layer observables are accumulated on the fly; full snapshots are only
    kept with ``keep_states``.
    """
    n = instance.n
    _check_dense(n)
    circuit = trotter_circuit(instance, config)
    diag = ising_diagonal(instance)
    psi = plus_state(n)
    K = circuit.num_layers
    rdms = np.empty((K, n, 2, 2), dtype=complex) if record_rdms else None
    ent = np.empty(K) if cut is not None else None
    norms = np.empty(K)
    states = [] if keep_states else None
    for k in range(1, K + 1):
        psi = exact_layer(psi, diag, circuit.interaction_time(k), circuit.mixing_angle(k))
        norms[k - 1] = np.linalg.norm(psi)
        if rdms is not None:
            rdms[k - 1] = exact_rdms(psi)
        if ent is not None:
            ent[k - 1] = exact_entropy(psi, cut)
        if states is not None:
            states.append(psi.copy())
        if callback is not None:
            callback(k, psi)
    z = (rdms[:, :, 0, 0] - rdms[:, :, 1, 1]).real if rdms is not None else np.empty((K, 0))
    return ExactRun(n, z, rdms, ent, psi, norms, states)


def _trace_norm_2x2(d: np.ndarray) -> np.ndarray:
    """Trace norms of a stack of Hermitian 2x2 matrices."""
    half_tr = 0.5 * (d[..., 0, 0] + d[..., 1, 1]).real
    rad = np.sqrt((0.5 * (d[..., 0, 0] - d[..., 1, 1]).real) ** 2 + np.abs(d[..., 0, 1]) ** 2)
    return np.abs(half_tr + rad) + np.abs(half_tr - rad)


def trace_distance_error(exact_rdms_: np.ndarray, approx_rdms: np.ndarray, dt: float, T: float) -> float:
    """``dt / (2 T N) * sum_k sum_a ||rho_exact - rho_approx||_1`` over ``(K, N, 2, 2)`` stacks."""
    e = np.asarray(exact_rdms_)
    b = np.asarray(approx_rdms)
    if e.shape != b.shape or e.ndim != 4 or e.shape[2:] != (2, 2):
        raise ShapeError(f"mismatched RDM trajectories {e.shape} vs {b.shape}")
    n = e.shape[1]
    if n == 0:
        raise ShapeError("empty RDM trajectories")
    return float(dt / (2.0 * T * n) * _trace_norm_2x2(e - b).sum())


def entropy_rel_error(exact: np.ndarray, approx: np.ndarray) -> float:
    """``||S_exact - S_approx||_2 / ||S_exact||_2`` over time-indexed traces."""
    e = np.asarray(exact, dtype=float)
    a = np.asarray(approx, dtype=float)
    if e.shape != a.shape:
        raise ShapeError(f"trace lengths differ: {e.shape} vs {a.shape}")
    den = np.linalg.norm(e)
    if not den > 0:
        raise DomainError("exact entropy trace is identically zero; relative error undefined")
    return float(np.linalg.norm(e - a) / den)


def brute_force_optimum(instance: ProblemInstance) -> tuple[np.ndarray, float, int]:
    """Exhaustive maximization.

    Returns ``(x, value, degeneracy)`` where ``value`` is the cut size for
    MaxCut and ``E(x)`` otherwise, and ``x`` is the maximizer with the
    smallest basis index (qubit 0 most significant, ``+1`` as bit 0).
    The high qubits are enumerated in Gray-code order with incremental
    updates; the low qubits are handled as one vectorized block.
    """
    n = instance.n
    if n > MAX_BRUTE_FORCE:
        raise CapacityError(f"{n} spins exceed the brute-force limit of {MAX_BRUTE_FORCE}")
    L = min(n, 16)
    H = n - L
    J = np.zeros((n, n))
    for (a, b), j in zip(instance.graph.edges, instance.J):
        J[a, b] += j
        J[b, a] += j
    h = instance.h

    zl = _z_patterns(L)  # (L, 2^L), low qubit j is qubit H + j
    e_low = h[H:] @ zl
    for (a, b), j in zip(instance.graph.edges, instance.J):
        if a >= H and b >= H:
            e_low += j * zl[a - H] * zl[b - H]
    cols = J[:H, H:] @ zl  # (H, 2^L): field of each high spin on the low block

    zh = np.ones(H)
    cross = cols.sum(axis=0) if H else np.zeros(1 << L)
    e_high = 0.5 * zh @ J[:H, :H] @ zh + h[:H] @ zh

    # tolerance for counting degenerate maxima of a continuous objective
    scale = max(1.0, float(np.abs(instance.J).sum() + np.abs(h).sum()))
    tol = 1e-9 * scale
    best = -np.inf
    count = 0
    best_idx = 0
    for step in range(1 << H):
        hi = step ^ (step >> 1)
        total = e_low + cross
        m = float(total.max()) + e_high
        if m > best + tol:
            mask = total >= m - e_high - tol
            best, count = m, int(mask.sum())
            best_idx = (hi << L) + int(np.argmax(mask))
        elif m >= best - tol:
            mask = total >= best - e_high - tol
            count += int(mask.sum())
            best_idx = min(best_idx, (hi << L) + int(np.argmax(mask)))
        if step + 1 < (1 << H):
            p = ((step + 1) & -(step + 1)).bit_length() - 1
            q = H - 1 - p
            zh[q] = -zh[q]
            cross += 2.0 * zh[q] * cols[q]
            e_high += 2.0 * zh[q] * (J[q, :H] @ zh - J[q, q] * zh[q] + h[q])

    bits = (best_idx >> (n - 1 - np.arange(n))) & 1
    x = (1 - 2 * bits).astype(np.int8)
    # report the value re-evaluated from the string to avoid drift from the incremental sums
    value = score(instance, x)
    return x, value, count


def tn_to_dense(state: VidalState) -> np.ndarray:
    """Contract a graph tensor network into a state vector.

    Vertices are absorbed one at a time, always picking the vertex whose
    absorption yields the smallest intermediate tensor.
    """
    g = state.graph
    _check_dense(g.n)
    sym = to_symmetric(state)

    def labels(a):
        return (("p", a),) + tuple(("e", g.edge_index[(a, b)]) for b in g.adjacency[a])

    tensors = {a: DenseTensor(sym.tensors[a], labels(a)) for a in range(g.n)}
    merged = tensors.pop(0)
    while tensors:
        best = None
        for a, t in tensors.items():
            shared = set(merged.labels) & set(t.labels)
            size = np.prod([d for lab, d in merged.axes if lab not in shared], dtype=float) * np.prod(
                [d for lab, d in t.axes if lab not in shared], dtype=float
            )
            key = (size, a)
            if best is None or key < best[0]:
                best = (key, a)
        if best[0][0] > MAX_CONTRACTION_SIZE:
            raise CapacityError("dense contraction would exceed the memory limit")
        t = tensors.pop(best[1])
        shared = [lab for lab in merged.labels if lab in t.labels]
        merged = contract(merged, t, [(lab, lab) for lab in shared])
    merged = merged.transpose([("p", a) for a in range(g.n)])
    return merged.data.reshape(-1)


def fidelity_vs_exact(psi: np.ndarray, state: VidalState) -> float:
    """``|<psi|psi_TN>|^2`` with both vectors normalized."""
    phi = tn_to_dense(state)
    if phi.shape != psi.shape:
        raise ShapeError(f"state sizes differ: {psi.shape} vs {phi.shape}")
    num = abs(np.vdot(psi, phi)) ** 2
    den = np.vdot(psi, psi).real * np.vdot(phi, phi).real
    if not den > 0:
        raise DomainError("zero state vector")
    return float(min(1.0, num / den))
