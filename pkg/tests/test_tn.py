import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import dense_rdm, dense_vector, random_symmetric_state, random_unitary, random_vidal_state
from gtqa.errors import DegenerateError, DomainError, SchemaError, ShapeError
from gtqa.graphs import ConnectivityGraph, cycle_graph, make_bipartition, path_graph, random_regular, random_tree
from gtqa.tn import (
    apply_1q,
    apply_2q,
    approx_entropy,
    load_state,
    product_state,
    reduced_density_matrices,
    regauge,
    run_bp,
    save_state,
    to_symmetric,
    to_vidal,
    truncate_edge,
    vidal_residual,
    warm_start_messages,
)
from gtqa.tn.io import state_from_dict, state_to_dict


def apply_dense(psi, n, qubits, w):
    """Apply a k-qubit matrix to the listed qubits of a dense vector."""
    k = len(qubits)
    t = np.moveaxis(psi.reshape([2] * n), qubits, range(k))
    shape = t.shape
    t = (w @ t.reshape(2**k, -1)).reshape(shape)
    return np.moveaxis(t, range(k), qubits).reshape(-1)


def overlap(u, v):
    return abs(np.vdot(u, v)) / (np.linalg.norm(u) * np.linalg.norm(v))


def test_product_state_dense():
    g = path_graph(3)
    amps = [[1, 0], [0, 1], [1 / np.sqrt(2), 1j / np.sqrt(2)]]
    psi = dense_vector(product_state(g, amps))
    ref = np.kron(np.kron([1, 0], [0, 1]), np.array([1, 1j]) / np.sqrt(2))
    np.testing.assert_allclose(psi, ref, atol=1e-14)
    plus = dense_vector(product_state(g))
    np.testing.assert_allclose(plus, np.full(8, 1 / np.sqrt(8)), atol=1e-14)


def test_product_state_rejects_unnormalized():
    with pytest.raises(DomainError):
        product_state(path_graph(2), [[1, 1], [1, 0]])
    with pytest.raises(DomainError):
        product_state(path_graph(2), [[1, 0]])


@pytest.mark.parametrize("graph,rounds", [(random_tree(7, 2), 2), (cycle_graph(5), 2), (random_regular(8, 3, seed=1), 1)])
def test_gates_match_dense_evolution(graph, rounds, rng):
    n = graph.n
    st_ = product_state(graph)
    psi = dense_vector(st_)
    for rep in range(rounds):
        for a, b in graph.edges:
            w = random_unitary(4, rng, 0.5)
            if rep:
                a, b = b, a  # exercise the reversed orientation
            st_, fid = apply_2q(st_, (a, b), w, chi=64)
            assert fid == pytest.approx(1.0, abs=1e-12)
            psi = apply_dense(psi, n, [a, b], w)
        q = int(rng.integers(n))
        w1 = random_unitary(2, rng)
        st_ = apply_1q(st_, q, w1)
        psi = apply_dense(psi, n, [q], w1)
    assert overlap(dense_vector(st_), psi) == pytest.approx(1.0, abs=1e-10)


def test_apply_2q_does_not_modify_input(rng):
    g = cycle_graph(4)
    s0 = random_vidal_state(g, rng)
    before = [t.copy() for t in s0.gammas]
    apply_2q(s0, (0, 1), random_unitary(4, rng), chi=4)
    for t0, t1 in zip(before, s0.gammas):
        np.testing.assert_array_equal(t0, t1)


def test_apply_2q_truncation_fidelity(rng):
    g = path_graph(2)
    st_ = product_state(g)
    # CNOT after Hadamard-like |+> gives a Bell state: two equal Schmidt values
    cnot = np.eye(4)[[0, 1, 3, 2]]
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    st_ = apply_1q(st_, 1, h)  # qubit 1 back to |0>
    full, fid = apply_2q(st_, (0, 1), cnot, chi=2)
    assert fid == pytest.approx(1.0)
    np.testing.assert_allclose(full.lambdas[0], [1 / np.sqrt(2)] * 2)
    cut, fid = apply_2q(st_, (0, 1), cnot, chi=1)
    assert fid == pytest.approx(0.25)
    assert cut.lambdas[0].shape == (1,)


def test_gate_validation(rng):
    st_ = product_state(path_graph(2))
    with pytest.raises(DomainError):
        apply_1q(st_, 0, np.ones((2, 2)))
    with pytest.raises(ShapeError):
        apply_1q(st_, 0, np.eye(3))
    with pytest.raises(DomainError):
        apply_1q(st_, 5, np.eye(2))
    with pytest.raises(DomainError):
        apply_2q(st_, (0, 1), np.eye(4), chi=0)
    with pytest.raises(Exception):
        apply_2q(product_state(path_graph(3)), (0, 2), np.eye(4), chi=2)
    # rank-4 tensor form is accepted
    out, _ = apply_2q(st_, (0, 1), np.eye(4).reshape(2, 2, 2, 2), chi=2)
    assert out.lambdas[0].shape == (1,)


@given(st.integers(2, 9), st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_bp_exact_on_trees(n, seed):
    rng = np.random.default_rng(seed)
    g = random_tree(n, seed)
    sym = random_symmetric_state(g, rng, max_bond=3)
    psi = dense_vector(sym)
    msgs = run_bp(sym, eps=1e-13, max_iters=200)
    assert msgs.converged
    rhos = reduced_density_matrices(sym, msgs)
    for a in range(n):
        np.testing.assert_allclose(rhos[a], dense_rdm(psi, n, a), atol=1e-10)


def test_bp_random_init_reaches_same_fixed_point(rng):
    g = random_tree(6, 4)
    sym = random_symmetric_state(g, rng)
    a = reduced_density_matrices(sym, run_bp(sym, eps=1e-13, max_iters=200))
    b = reduced_density_matrices(sym, run_bp(sym, eps=1e-13, max_iters=200, rng=np.random.default_rng(9)))
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_bp_reports_history_and_nonconvergence(rng):
    g = random_regular(8, 3, seed=0)
    sym = to_symmetric(random_vidal_state(g, rng))
    m = run_bp(sym, eps=1e-300, max_iters=3)
    assert not m.converged and m.iterations == 3 and len(m.history) == 3


def test_bp_on_loopy_state_close_to_exact(rng):
    # weakly entangled loopy state: BP RDMs approximate the dense ones
    g = random_regular(8, 3, seed=2)
    st_ = product_state(g)
    for e in g.edges:
        st_, _ = apply_2q(st_, e, random_unitary(4, rng, 0.1), chi=4)
    st_, info = regauge(st_, eps=1e-12, max_iters=500)
    psi = dense_vector(st_)
    rhos = reduced_density_matrices(info.symmetric, info.messages)
    err = max(np.abs(rhos[a] - dense_rdm(psi, 8, a)).max() for a in range(8))
    assert err < 1e-2


def test_warm_start_is_fixed_point(rng):
    st_ = random_vidal_state(random_tree(8, 3), rng)
    sym = to_symmetric(st_)
    one = run_bp(sym, eps=1e-300, max_iters=1, init=warm_start_messages(st_))
    assert one.distance < 1e-12


@pytest.mark.parametrize("seed", range(4))
def test_to_vidal_on_tree_gives_schmidt_values(seed):
    rng = np.random.default_rng(seed)
    g = random_tree(7, seed)
    sym = random_symmetric_state(g, rng)
    psi = dense_vector(sym)
    v = to_vidal(sym, run_bp(sym, eps=1e-14, max_iters=300))
    assert vidal_residual(v) < 1e-9
    assert overlap(dense_vector(v), psi) == pytest.approx(1.0, abs=1e-12)
    for (a, b), lam in zip(g.edges, v.lambdas):
        # the side of a when the edge is removed
        side = _component_without(g, a, b)
        m = np.moveaxis(psi.reshape([2] * g.n), side, range(len(side))).reshape(2 ** len(side), -1)
        s = np.linalg.svd(m, compute_uv=False)
        s = s / np.linalg.norm(s)
        np.testing.assert_allclose(lam, s[: lam.size], atol=1e-9)
        assert np.sum(s[lam.size:] ** 2) < 1e-18


def _component_without(g, a, b):
    seen, stack = {a}, [a]
    while stack:
        v = stack.pop()
        for w in g.adjacency[v]:
            if {v, w} == {a, b} or w in seen:
                continue
            seen.add(w)
            stack.append(w)
    return sorted(seen)


@pytest.mark.parametrize("seed", range(3))
def test_regauge_reduces_residual_on_loopy_graph(seed):
    rng = np.random.default_rng(seed)
    g = random_regular(10, 3, seed=seed)
    st_ = product_state(g)
    for _ in range(3):
        for e in g.edges:
            st_, _ = apply_2q(st_, e, random_unitary(4, rng, 0.6), chi=4)
    before = vidal_residual(st_)
    assert before > 1e-6
    after, info = regauge(st_, eps=1e-12, max_iters=500)
    assert info.residual == pytest.approx(vidal_residual(after))
    assert info.residual < before
    assert overlap(dense_vector(after), dense_vector(st_)) == pytest.approx(1.0, abs=1e-10)


def test_truncate_edge(rng):
    st_ = random_vidal_state(random_tree(6, 1), rng, chi=4)
    e = max(st_.graph.edges, key=lambda e: st_.lam(*e).size)
    lam = st_.lam(*e)
    assert lam.size > 1
    out, err = truncate_edge(st_, e, 1)
    assert err == pytest.approx(np.sqrt(np.sum(lam[1:] ** 2)))
    assert out.lam(*e).tolist() == [1.0]
    same, err0 = truncate_edge(st_, e, 64)
    assert err0 == 0.0 and same.lam(*e).size == lam.size
    with pytest.raises(DomainError):
        truncate_edge(st_, e, 0)


def test_approx_entropy_exact_on_tree_single_cut(rng):
    g = random_tree(8, 5)
    st_ = random_vidal_state(g, rng, chi=8)
    a, b = g.edges[0]
    side = _component_without(g, a, b)
    cut = make_bipartition(g, side)
    assert cut.cut_edges == ((a, b),)
    psi = dense_vector(st_)
    m = np.moveaxis(psi.reshape([2] * 8), side, range(len(side))).reshape(2 ** len(side), -1)
    p = np.linalg.svd(m, compute_uv=False) ** 2
    p = p[p > 1e-300] / p.sum()
    assert approx_entropy(st_, cut) == pytest.approx(-np.sum(p * np.log(p)), abs=1e-10)


def test_residual_zero_for_product_state():
    assert vidal_residual(product_state(random_regular(6, 3, seed=0))) < 1e-14
    assert vidal_residual(product_state(ConnectivityGraph(3, ()))) == 0.0


def test_degenerate_messages():
    g = path_graph(2)
    sym = to_symmetric(product_state(g))
    sym.tensors[0] = np.zeros_like(sym.tensors[0])
    with pytest.raises(DegenerateError):
        run_bp(sym)


def test_state_io_round_trip(tmp_path, rng):
    st_ = random_vidal_state(random_regular(6, 3, seed=1), rng)
    path = tmp_path / "s.json"
    save_state(st_, path)
    back = load_state(path)
    assert back.graph == st_.graph
    for x, y in zip(back.gammas + back.lambdas, st_.gammas + st_.lambdas):
        np.testing.assert_array_equal(x, y)
    d = state_to_dict(st_)
    d["version"] = "9.0"
    with pytest.raises(SchemaError):
        state_from_dict(d)
    d = state_to_dict(st_)
    d["format"] = "something-else"
    with pytest.raises(SchemaError):
        state_from_dict(d)
