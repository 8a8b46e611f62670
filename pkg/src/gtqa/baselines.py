"""Simulated annealing reference solver."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .anneal.problem import ProblemInstance, score, score_batch
from .errors import ConfigError, DomainError

__all__ = ["SAConfig", "simulated_annealing", "approximation_ratio"]

_CHUNK = 64  # sweeps of random numbers drawn at once per restart


@dataclass
class SAConfig:
    sweeps: int = 1000
    beta_start: float = 0.1
    beta_end: float = 10.0
    restarts: int = 20
    seed: int = 0

    def __post_init__(self):
        if int(self.sweeps) != self.sweeps or self.sweeps < 1:
            raise ConfigError("sweeps must be a positive integer")
        if int(self.restarts) != self.restarts or self.restarts < 1:
            raise ConfigError("restarts must be a positive integer")
        if not (self.beta_start > 0 and self.beta_end >= self.beta_start):
            raise ConfigError("need beta_end >= beta_start > 0")


def _better(value: float, x: np.ndarray, best_value: float, best_x: np.ndarray | None) -> bool:
    if best_x is None or value > best_value:
        return True
    return value == best_value and tuple(x.tolist()) < tuple(best_x.tolist())


def simulated_annealing(instance: ProblemInstance, config: SAConfig) -> tuple[np.ndarray, float]:
    """Best-of-restarts single-flip Metropolis maximization of the objective.

    Restart ``r`` draws all its randomness from ``default_rng([seed, r])``,
    so adding restarts never changes the earlier ones. All restarts advance
    together as rows of one array. Ties between equal values go to the
    lexicographically smallest bitstring.
    """
    n = instance.n
    R = config.restarts
    rngs = [np.random.default_rng([config.seed, r]) for r in range(R)]
    x = np.stack([rng.choice(np.array([-1.0, 1.0]), size=n) for rng in rngs])
    nbrs = [np.array(instance.graph.adjacency[a], dtype=np.intp) for a in range(n)]
    coup = [np.array([instance.coupling(a, b) for b in instance.graph.adjacency[a]]) for a in range(n)]
    field = np.zeros((R, n)) + instance.h[None, :]
    for a in range(n):
        if nbrs[a].size:
            field[:, a] += x[:, nbrs[a]] @ coup[a]

    betas = np.geomspace(config.beta_start, config.beta_end, config.sweeps)
    best_val = score_batch(instance, x)
    best_x = x.copy()
    rows = np.arange(R)
    for c0 in range(0, config.sweeps, _CHUNK):
        c1 = min(config.sweeps, c0 + _CHUNK)
        u = np.stack([rng.random((_CHUNK, n)) for rng in rngs], axis=1)  # (chunk, R, n)
        for s in range(c0, c1):
            beta = betas[s]
            us = u[s - c0]
            for a in range(n):
                # gain of flipping spin a (we maximize)
                delta = -2.0 * x[:, a] * field[:, a]
                accept = (delta >= 0) | (us[:, a] < np.exp(np.minimum(beta * delta, 0.0)))
                if not accept.any():
                    continue
                idx = rows[accept]
                x[idx, a] = -x[idx, a]
                if nbrs[a].size:
                    field[np.ix_(idx, nbrs[a])] += (2.0 * x[idx, a])[:, None] * coup[a][None, :]
            vals = score_batch(instance, x)
            improved = vals > best_val
            if improved.any():
                best_val[improved] = vals[improved]
                best_x[improved] = x[improved]

    out_x, out_v = None, -np.inf
    for r in range(R):
        xr = best_x[r].astype(np.int8)
        v = score(instance, xr)
        if _better(v, xr, out_v, out_x):
            out_x, out_v = xr, v
    return out_x, float(out_v)


def approximation_ratio(candidate: float, best: float) -> float:
    if not best > 0:
        raise DomainError("approximation ratio needs a positive reference value")
    return float(candidate) / float(best)
