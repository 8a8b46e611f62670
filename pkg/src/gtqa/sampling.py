"""Computational-basis measurement of graph tensor-network states.

Qubits are measured one at a time: the single-qubit reduced density matrix
comes from BP messages, an outcome is drawn (or forced), the vertex tensor
is projected and the whole network is regauged before the next qubit.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .anneal.problem import ProblemInstance, score, score_batch
from .errors import DomainError, ImpossibleOutcomeError, ShapeError
from .tn.bp import reduced_density_matrix
from .tn.gauge import RegaugeInfo, regauge
from .tn.state import VidalState

__all__ = [
    "SampleTrace",
    "SamplingOptions",
    "measure_qubit",
    "sample_bitstring",
    "sample_many",
    "bitstring_probability",
    "write_samples",
    "IMPOSSIBLE_P",
]

IMPOSSIBLE_P = 1e-12
SAMPLES_FORMAT = "gtqa-samples"
SAMPLES_VERSION = "1.0"


@dataclass
class SamplingOptions:
    eps: float = 1e-8
    max_iters: int = 100
    rcond: float = 1e-12


@dataclass
class SampleTrace:
    """One sampled bitstring with its measurement history.

    ``probabilities[a]`` is the probability of the outcome realized on qubit
    ``a`` when it was measured (``nan`` for qubits fixed by the brute-force
    tail). ``residuals`` and ``bp_iterations`` follow the measurement order.
    """

    bitstring: np.ndarray
    probabilities: np.ndarray
    log_probability: float
    order: tuple[int, ...]
    residuals: list[float] = field(default_factory=list)
    bp_iterations: list[int] = field(default_factory=list)
    converged: list[bool] = field(default_factory=list)
    value: float | None = None

    def to_dict(self) -> dict:
        return {
            "bitstring": [int(v) for v in self.bitstring],
            "logProbability": self.log_probability,
            "objective": self.value,
            "order": list(self.order),
            "residuals": [float(r) for r in self.residuals],
            "bp_iterations": list(self.bp_iterations),
        }


def _check_order(order: Sequence[int] | None, n: int) -> tuple[int, ...]:
    if order is None:
        return tuple(range(n))
    order = tuple(int(v) for v in order)
    if sorted(order) != list(range(n)):
        raise DomainError("order must be a permutation of the vertices")
    return order


def _prob_zero(info: RegaugeInfo, a: int) -> float:
    rho = reduced_density_matrix(info.symmetric, info.messages, a)
    return float(min(1.0, max(0.0, rho[0, 0].real)))


def _project(state: VidalState, a: int, outcome: int, p: float) -> VidalState:
    new = state.copy()
    gam = np.zeros_like(state.gammas[a])
    i = 0 if outcome == 1 else 1
    gam[i] = state.gammas[a][i] / math.sqrt(p)
    new.gammas[a] = gam
    return new


def _step(
    state: VidalState,
    info: RegaugeInfo | None,
    a: int,
    outcome: int,
    p: float,
    opts: SamplingOptions,
) -> tuple[VidalState, RegaugeInfo]:
    projected = _project(state, a, outcome, p)
    return regauge(projected, eps=opts.eps, max_iters=opts.max_iters, rcond=opts.rcond)


def _ensure_info(state: VidalState, info: RegaugeInfo | None, opts: SamplingOptions) -> tuple[VidalState, RegaugeInfo]:
    if info is not None:
        return state, info
    return regauge(state, eps=opts.eps, max_iters=opts.max_iters, rcond=opts.rcond)


def measure_qubit(
    state: VidalState,
    a: int,
    rng: np.random.Generator | None = None,
    forced: int | None = None,
    options: SamplingOptions | None = None,
) -> tuple[VidalState, int, float]:
    """Measure qubit ``a`` in the computational basis.

    Exactly one of ``rng`` and ``forced`` must be given. Returns the
    projected and regauged state, the outcome (``+1`` for ``|0>``) and the
    probability the outcome had before projection.
    """
    new, outcome, p, _ = _measure(state, None, a, rng, forced, options or SamplingOptions())
    return new, outcome, p


def _measure(state, info, a, rng, forced, opts):
    if not 0 <= a < state.graph.n:
        raise DomainError(f"vertex {a} out of range")
    if (rng is None) == (forced is None):
        raise DomainError("pass either rng or forced")
    state, info = _ensure_info(state, info, opts)
    p0 = _prob_zero(info, a)
    if forced is not None:
        if forced not in (1, -1):
            raise DomainError("forced outcome must be +1 or -1")
        outcome = int(forced)
    else:
        outcome = 1 if rng.random() < p0 else -1
    p = p0 if outcome == 1 else 1.0 - p0
    if p < IMPOSSIBLE_P:
        raise ImpossibleOutcomeError(f"outcome {outcome:+d} on qubit {a} has probability {p:.3e}")
    new, new_info = _step(state, info, a, outcome, p, opts)
    return new, outcome, p, new_info


def _tail_completion(instance: ProblemInstance, x: np.ndarray, tail: Sequence[int]) -> np.ndarray:
    """Best assignment of the ``tail`` spins with the others held fixed."""
    k = len(tail)
    combos = np.array(list(itertools.product((1, -1), repeat=k)), dtype=float)
    xs = np.repeat(x[None, :].astype(float), combos.shape[0], axis=0)
    xs[:, list(tail)] = combos
    vals = score_batch(instance, xs)
    # first maximizer in the +1-first enumeration
    return xs[int(np.argmax(vals))].astype(np.int8)


def sample_bitstring(
    state: VidalState,
    order: Sequence[int] | None = None,
    rng: np.random.Generator | None = None,
    instance: ProblemInstance | None = None,
    tail_brute_force: int = 0,
    options: SamplingOptions | None = None,
) -> SampleTrace:
    """Sample one bitstring by sequential measurement along ``order``.

    The input state is not modified. With ``tail_brute_force = k`` the last
    ``k`` qubits of the order are not measured but chosen to maximize the
    objective of ``instance`` given the measured ones.
    """
    opts = options or SamplingOptions()
    n = state.graph.n
    order = _check_order(order, n)
    rng = rng if rng is not None else np.random.default_rng(0)
    if tail_brute_force:
        if instance is None:
            raise DomainError("tail brute force needs the problem instance")
        if not 0 <= tail_brute_force <= n:
            raise DomainError("tail_brute_force must lie in [0, n]")
    measured = order[: n - tail_brute_force]
    x = np.ones(n, dtype=np.int8)
    probs = np.full(n, np.nan)
    trace = SampleTrace(x, probs, 0.0, order)
    info = None
    cur = state
    for a in measured:
        cur, outcome, p, info = _measure(cur, info, a, rng, None, opts)
        x[a] = outcome
        probs[a] = p
        trace.residuals.append(info.residual if info.residual is not None else float("nan"))
        trace.bp_iterations.append(info.iterations)
        trace.converged.append(info.converged)
    if tail_brute_force:
        x = _tail_completion(instance, x, order[n - tail_brute_force:])
        trace.bitstring = x
    trace.log_probability = float(np.sum(np.log(probs[list(measured)]))) if measured else 0.0
    if instance is not None:
        trace.value = score(instance, x)
    return trace


def sample_many(
    state: VidalState,
    count: int,
    order: Sequence[int] | None = None,
    rng: np.random.Generator | None = None,
    instance: ProblemInstance | None = None,
    tail_brute_force: int = 0,
    options: SamplingOptions | None = None,
) -> list[SampleTrace]:
    """Draw ``count`` samples, sharing work between samples with a common prefix.

    Samples are generated as an outcome tree: at each measured qubit the
    number of samples taking each branch is drawn from a binomial
    distribution, and every branch is projected and regauged only once. The
    resulting samples have the same distribution as ``count`` independent
    calls of :func:`sample_bitstring`.
    """
    if count < 0:
        raise DomainError("count must be nonnegative")
    opts = options or SamplingOptions()
    n = state.graph.n
    order = _check_order(order, n)
    rng = rng if rng is not None else np.random.default_rng(0)
    if tail_brute_force and instance is None:
        raise DomainError("tail brute force needs the problem instance")
    if not 0 <= tail_brute_force <= n:
        raise DomainError("tail_brute_force must lie in [0, n]")
    depth_max = n - tail_brute_force
    out: list[SampleTrace] = []

    def visit(cur, info, depth, c, x, probs, residuals, iters, conv):
        if depth == depth_max:
            xx = x.copy()
            if tail_brute_force:
                xx = _tail_completion(instance, xx, order[depth_max:])
            measured = list(order[:depth_max])
            logp = float(np.sum(np.log(probs[measured]))) if measured else 0.0
            value = score(instance, xx) if instance is not None else None
            for _ in range(c):
                out.append(SampleTrace(xx.copy(), probs.copy(), logp, order,
                                       list(residuals), list(iters), list(conv), value))
            return
        a = order[depth]
        cur, info = _ensure_info(cur, info, opts)
        p0 = _prob_zero(info, a)
        c0 = int(rng.binomial(c, p0))
        for outcome, cnt, p in ((1, c0, p0), (-1, c - c0, 1.0 - p0)):
            if cnt == 0:
                continue
            nxt, nxt_info = _step(cur, info, a, outcome, p, opts)
            x[a] = outcome
            probs[a] = p
            visit(nxt, nxt_info, depth + 1, cnt, x, probs,
                  residuals + [nxt_info.residual], iters + [nxt_info.iterations], conv + [nxt_info.converged])
        probs[a] = np.nan
        x[a] = 1

    if count:
        visit(state, None, 0, count, np.ones(n, dtype=np.int8), np.full(n, np.nan), [], [], [])
    return out


def bitstring_probability(
    state: VidalState,
    x: Sequence[int],
    order: Sequence[int] | None = None,
    options: SamplingOptions | None = None,
) -> float:
    """Chain-rule probability of ``x`` (exact on trees); 0 for impossible strings."""
    opts = options or SamplingOptions()
    n = state.graph.n
    x = np.asarray(x)
    if x.shape != (n,):
        raise ShapeError(f"expected a bitstring of length {n}")
    if not np.all((x == 1) | (x == -1)):
        raise DomainError("bitstring entries must be +1 or -1")
    order = _check_order(order, n)
    logp = 0.0
    cur, info = state, None
    for a in order:
        try:
            cur, _, p, info = _measure(cur, info, a, None, int(x[a]), opts)
        except ImpossibleOutcomeError:
            return 0.0
        logp += math.log(p)
    return math.exp(logp)


def write_samples(traces: Sequence[SampleTrace], path: str | Path) -> None:
    """JSON lines: a header record followed by one record per sample."""
    with open(path, "w") as fh:
        fh.write(json.dumps({"format": SAMPLES_FORMAT, "version": SAMPLES_VERSION, "count": len(traces)}) + "\n")
        for t in traces:
            fh.write(json.dumps(t.to_dict()) + "\n")
