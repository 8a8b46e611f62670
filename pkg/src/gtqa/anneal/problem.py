"""QUBO and MaxCut instances over a connectivity graph.

Bitstrings are arrays of ``+1`` / ``-1``; ``x_a = +1`` corresponds to the
computational state ``|0>``. The objective is maximized.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .._io import check_version, dump_json, load_json
from ..errors import DomainError, SchemaError, ShapeError
from ..graphs import ConnectivityGraph

__all__ = [
    "ProblemInstance",
    "random_qubo",
    "maxcut_instance",
    "objective",
    "cut_value",
    "score",
    "score_batch",
    "as_bitstring",
    "save_instance",
    "load_instance",
]

KINDS = ("qubo", "maxcut")
INSTANCE_FORMAT = "gtqa-instance"
INSTANCE_VERSION = "1.0"


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Ising objective ``E(x) = sum_ab J_ab x_a x_b + sum_a h_a x_a``.

    ``J`` is indexed by the graph's canonical edge order. MaxCut instances
    have ``J = -1`` on every edge and no fields, so maximizing ``E`` maximizes
    the cut.
    """

    graph: ConnectivityGraph
    J: np.ndarray
    h: np.ndarray
    kind: str = "qubo"

    def __post_init__(self):
        J = np.asarray(self.J, dtype=float).reshape(-1)
        h = np.asarray(self.h, dtype=float).reshape(-1)
        if J.shape[0] != self.graph.num_edges:
            raise ShapeError(f"{J.shape[0]} couplings for {self.graph.num_edges} edges")
        if h.shape[0] != self.graph.n:
            raise ShapeError(f"{h.shape[0]} fields for {self.graph.n} vertices")
        if not (np.all(np.isfinite(J)) and np.all(np.isfinite(h))):
            raise DomainError("couplings and fields must be finite")
        if self.kind not in KINDS:
            raise DomainError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "maxcut" and (np.any(J != -1.0) or np.any(h != 0.0)):
            raise DomainError("MaxCut instances need J = -1 on every edge and h = 0")
        J.flags.writeable = False
        h.flags.writeable = False
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "h", h)

    @property
    def n(self) -> int:
        return self.graph.n

    def coupling(self, a: int, b: int) -> float:
        return float(self.J[self.graph.index_of(a, b)])

    def __eq__(self, other) -> bool:
        if not isinstance(other, ProblemInstance):
            return NotImplemented
        return (
            self.graph == other.graph
            and self.kind == other.kind
            and np.array_equal(self.J, other.J)
            and np.array_equal(self.h, other.h)
        )

    def to_dict(self) -> dict:
        return {
            "format": INSTANCE_FORMAT,
            "version": INSTANCE_VERSION,
            "n": self.n,
            "edges": [[a, b, float(j)] for (a, b), j in zip(self.graph.edges, self.J)],
            "h": [float(v) for v in self.h],
            "kind": self.kind,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ProblemInstance":
        check_version(data, INSTANCE_FORMAT)
        try:
            n = int(data["n"])
            raw = [(int(e[0]), int(e[1]), float(e[2])) for e in data["edges"]]
            h = [float(v) for v in data.get("h", [0.0] * n)]
            kind = str(data.get("kind", "qubo"))
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise SchemaError(f"malformed instance record: {exc}") from exc
        graph = ConnectivityGraph.from_edges(n, [(a, b) for a, b, _ in raw])
        J = np.zeros(graph.num_edges)
        for a, b, j in raw:
            J[graph.index_of(a, b)] = j
        return cls(graph, J, np.asarray(h), kind)


def random_qubo(graph: ConnectivityGraph, seed: int = 0) -> ProblemInstance:
    """Couplings and fields drawn i.i.d. from the standard normal distribution."""
    rng = np.random.default_rng(seed)
    J = rng.standard_normal(graph.num_edges)
    h = rng.standard_normal(graph.n)
    return ProblemInstance(graph, J, h, "qubo")


def maxcut_instance(graph: ConnectivityGraph) -> ProblemInstance:
    return ProblemInstance(graph, -np.ones(graph.num_edges), np.zeros(graph.n), "maxcut")


def as_bitstring(x, n: int) -> np.ndarray:
    arr = np.asarray(x)
    if arr.shape != (n,):
        raise ShapeError(f"expected a bitstring of length {n}, got shape {arr.shape}")
    if not np.all((arr == 1) | (arr == -1)):
        raise DomainError("bitstring entries must be +1 or -1")
    return arr.astype(np.int8)


def _edge_arrays(instance: ProblemInstance) -> tuple[np.ndarray, np.ndarray]:
    e = np.asarray(instance.graph.edges, dtype=np.intp).reshape(-1, 2)
    return e[:, 0], e[:, 1]


def objective(instance: ProblemInstance, x) -> float:
    x = as_bitstring(x, instance.n).astype(float)
    u, v = _edge_arrays(instance)
    return float(np.dot(instance.J, x[u] * x[v]) + np.dot(instance.h, x))


def cut_value(instance: ProblemInstance, x) -> int:
    """Number of edges whose endpoints disagree."""
    x = as_bitstring(x, instance.n)
    u, v = _edge_arrays(instance)
    return int(np.count_nonzero(x[u] != x[v]))


def score(instance: ProblemInstance, x) -> float:
    """The quantity reported for a solution: cut size for MaxCut, ``E(x)`` otherwise."""
    return float(cut_value(instance, x)) if instance.kind == "maxcut" else objective(instance, x)


def score_batch(instance: ProblemInstance, xs: np.ndarray) -> np.ndarray:
    """Vectorized :func:`score` over the rows of ``xs``."""
    xs = np.asarray(xs, dtype=float).reshape(-1, instance.n)
    u, v = _edge_arrays(instance)
    prod = xs[:, u] * xs[:, v]
    if instance.kind == "maxcut":
        return np.sum(1.0 - prod, axis=1) / 2.0
    return prod @ instance.J + xs @ instance.h


def save_instance(instance: ProblemInstance, path: str | Path) -> None:
    dump_json(instance.to_dict(), path)


def load_instance(path: str | Path) -> ProblemInstance:
    return ProblemInstance.from_dict(load_json(path))
