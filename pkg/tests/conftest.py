"""Shared helpers: independent dense references for small networks."""

from __future__ import annotations

import functools

import numpy as np
import pytest
from scipy.linalg import expm

from gtqa.graphs import ConnectivityGraph
from gtqa.tn import product_state, regauge, to_symmetric
from gtqa.tn.state import SymmetricState, VidalState

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
I2 = np.eye(2, dtype=complex)


def dense_vector(state: VidalState | SymmetricState) -> np.ndarray:
    """Contract the whole network with one einsum (qubit 0 is the slowest index)."""
    sym = to_symmetric(state) if isinstance(state, VidalState) else state
    g = sym.graph
    ops = []
    for a in range(g.n):
        idx = [a] + [g.n + g.edge_index[(a, b)] for b in g.adjacency[a]]
        ops += [sym.tensors[a], idx]
    return np.einsum(*ops, list(range(g.n)), optimize=True).reshape(-1)


def dense_rdm(psi: np.ndarray, n: int, a: int) -> np.ndarray:
    t = np.moveaxis(psi.reshape([2] * n), a, 0).reshape(2, -1)
    rho = t @ t.conj().T
    return rho / np.trace(rho)


def op_on(n: int, ops: dict[int, np.ndarray]) -> np.ndarray:
    return functools.reduce(np.kron, [ops.get(q, I2) for q in range(n)])


def random_unitary(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return expm(-1j * scale * (a + a.conj().T) / 2)


def random_symmetric_state(g: ConnectivityGraph, rng: np.random.Generator, max_bond: int = 4) -> SymmetricState:
    dims = {e: int(rng.integers(1, max_bond + 1)) for e in g.edges}
    tensors = []
    for a in range(g.n):
        shape = [2] + [dims[(min(a, b), max(a, b))] for b in g.adjacency[a]]
        tensors.append(rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return SymmetricState(g, tensors)


def random_vidal_state(g: ConnectivityGraph, rng: np.random.Generator, depth: int = 2, chi: int = 4) -> VidalState:
    """Product state driven by random two-qubit unitaries on every edge."""
    from gtqa.tn import apply_2q

    st = product_state(g)
    for _ in range(depth):
        for e in g.edges:
            st, _ = apply_2q(st, e, random_unitary(4, rng, 0.7), chi=chi)
    st, _ = regauge(st, eps=1e-13, max_iters=500)
    return st


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance
    except ImportError:
        return
    if not test_acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(test_acceptance.RESULTS):
        ok, detail = test_acceptance.RESULTS[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
