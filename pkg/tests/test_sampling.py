import itertools
import json

import numpy as np
import pytest

from conftest import dense_vector, random_vidal_state
from gtqa.anneal.problem import maxcut_instance, random_qubo, score
from gtqa.errors import DomainError, ImpossibleOutcomeError, ShapeError
from gtqa.graphs import path_graph, random_regular, random_tree
from gtqa.sampling import (
    bitstring_probability,
    measure_qubit,
    sample_bitstring,
    sample_many,
    write_samples,
)
from gtqa.tn import product_state


def basis_index(x):
    bits = [(1 - int(v)) // 2 for v in x]
    return int("".join(map(str, bits)), 2)


def dense_probs(state):
    psi = dense_vector(state)
    p = np.abs(psi) ** 2
    return p / p.sum()


def test_product_state_samples_are_identical():
    g = random_tree(6, 0)
    st_ = product_state(g, np.tile([1.0, 0.0], (6, 1)))
    traces = sample_many(st_, 5, rng=np.random.default_rng(0))
    assert len(traces) == 5
    for t in traces:
        np.testing.assert_array_equal(t.bitstring, np.ones(6))
        assert t.log_probability == pytest.approx(0.0)


def test_measure_qubit_marginal_and_collapse(rng):
    g = random_tree(5, 2)
    st_ = random_vidal_state(g, rng)
    psi = dense_vector(st_).reshape([2] * 5)
    p0 = float(np.sum(np.abs(psi[:, :, 0]) ** 2) / np.sum(np.abs(psi) ** 2))
    new, outcome, p = measure_qubit(st_, 2, forced=1)
    assert outcome == 1 and p == pytest.approx(p0, abs=1e-10)
    proj = np.zeros_like(psi)
    proj[:, :, 0] = psi[:, :, 0]
    phi = dense_vector(new)
    ov = abs(np.vdot(proj.reshape(-1), phi)) / (np.linalg.norm(proj) * np.linalg.norm(phi))
    assert ov == pytest.approx(1.0, abs=1e-10)
    assert np.linalg.norm(phi) == pytest.approx(1.0, abs=1e-8)


def test_measure_qubit_arguments(rng):
    st_ = product_state(path_graph(2))
    with pytest.raises(DomainError):
        measure_qubit(st_, 0)
    with pytest.raises(DomainError):
        measure_qubit(st_, 0, rng=rng, forced=1)
    with pytest.raises(DomainError):
        measure_qubit(st_, 3, rng=rng)
    with pytest.raises(DomainError):
        measure_qubit(st_, 0, forced=0)
    zero = product_state(path_graph(2), [[1, 0], [1, 0]])
    with pytest.raises(ImpossibleOutcomeError):
        measure_qubit(zero, 0, forced=-1)


@pytest.mark.parametrize("seed", range(3))
def test_bitstring_probability_exact_on_trees(seed):
    rng = np.random.default_rng(seed)
    st_ = random_vidal_state(random_tree(6, seed), rng)
    p = dense_probs(st_)
    for x in itertools.islice(itertools.product((1, -1), repeat=6), 0, 64, 7):
        assert bitstring_probability(st_, x) == pytest.approx(p[basis_index(x)], abs=1e-10)
    x = (1, -1, -1, 1, 1, -1)
    assert bitstring_probability(st_, x, order=[5, 3, 1, 0, 2, 4]) == pytest.approx(p[basis_index(x)], abs=1e-10)


def test_bitstring_probability_impossible_and_invalid():
    zero = product_state(path_graph(3), [[1, 0]] * 3)
    assert bitstring_probability(zero, [1, 1, 1]) == pytest.approx(1.0)
    assert bitstring_probability(zero, [1, -1, 1]) == 0.0
    with pytest.raises(ShapeError):
        bitstring_probability(zero, [1, 1])
    with pytest.raises(DomainError):
        bitstring_probability(zero, [1, 0, 1])
    with pytest.raises(DomainError):
        bitstring_probability(zero, [1, 1, 1], order=[0, 0, 1])


def test_sample_many_distribution(rng):
    st_ = random_vidal_state(random_tree(4, 1), rng)
    p = dense_probs(st_)
    traces = sample_many(st_, 4000, rng=np.random.default_rng(3))
    counts = np.bincount([basis_index(t.bitstring) for t in traces], minlength=16)
    # every sample's recorded probability is the chain-rule product
    for t in traces[:20]:
        assert np.exp(t.log_probability) == pytest.approx(p[basis_index(t.bitstring)], abs=1e-9)
    expected = 4000 * p
    mask = expected > 5
    chi2 = float(np.sum((counts[mask] - expected[mask]) ** 2 / expected[mask]))
    # 16 cells: the 0.999 quantile of chi-square with 15 dof is about 37.7
    assert chi2 < 37.7
    assert counts[~mask].sum() <= 40


def test_sample_bitstring_reproducible(rng):
    st_ = random_vidal_state(random_regular(6, 3, seed=0), rng)
    a = sample_bitstring(st_, rng=np.random.default_rng(7))
    b = sample_bitstring(st_, rng=np.random.default_rng(7))
    np.testing.assert_array_equal(a.bitstring, b.bitstring)
    assert a.log_probability == b.log_probability
    assert len(a.residuals) == 6 and all(r < 1e-6 for r in a.residuals)


def test_tail_brute_force_optimizes_last_bits(rng):
    inst = random_qubo(random_regular(8, 3, seed=5), seed=5)
    st_ = random_vidal_state(inst.graph, rng, depth=1)
    order = [3, 0, 6, 1, 7, 2, 4, 5]
    t = sample_bitstring(st_, order=order, rng=np.random.default_rng(1), instance=inst, tail_brute_force=4)
    tail = order[4:]
    best = -np.inf
    for combo in itertools.product((1, -1), repeat=4):
        x = t.bitstring.copy()
        x[tail] = combo
        best = max(best, score(inst, x))
    assert t.value == pytest.approx(best)
    assert np.all(np.isnan(t.probabilities[tail]))
    with pytest.raises(DomainError):
        sample_bitstring(st_, tail_brute_force=2)


def test_sample_many_with_instance_reports_values(rng):
    inst = maxcut_instance(random_regular(6, 3, seed=1))
    st_ = random_vidal_state(inst.graph, rng, depth=1)
    traces = sample_many(st_, 10, rng=np.random.default_rng(0), instance=inst, tail_brute_force=2)
    assert len(traces) == 10
    for t in traces:
        assert t.value == score(inst, t.bitstring)
    assert sample_many(st_, 0) == []
    with pytest.raises(DomainError):
        sample_many(st_, -1)


def test_write_samples(tmp_path, rng):
    st_ = product_state(path_graph(3))
    traces = sample_many(st_, 3, rng=rng)
    path = tmp_path / "s.jsonl"
    write_samples(traces, path)
    lines = path.read_text().splitlines()
    head = json.loads(lines[0])
    assert head["format"] == "gtqa-samples" and head["count"] == 3
    assert len(lines) == 4
    assert set(json.loads(lines[1])["bitstring"]) <= {1, -1}
