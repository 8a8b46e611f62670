"""JSON snapshots of Vidal-gauge states."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .._io import check_version, complex_from_json, complex_to_json, dump_json, load_json
from ..errors import SchemaError
from ..graphs import ConnectivityGraph
from .state import VidalState

FORMAT = "gtqa-state"
VERSION = "1.0"


def state_to_dict(state: VidalState) -> dict:
    return {
        "format": FORMAT,
        "version": VERSION,
        "graph": state.graph.to_dict(),
        "gammas": [complex_to_json(g) for g in state.gammas],
        "lambdas": [lam.tolist() for lam in state.lambdas],
    }


def state_from_dict(data: dict) -> VidalState:
    check_version(data, FORMAT)
    try:
        graph = ConnectivityGraph.from_dict(data["graph"])
        gammas = [complex_from_json(rec) for rec in data["gammas"]]
        lambdas = [np.asarray(lam, dtype=float) for lam in data["lambdas"]]
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed state record: {exc}") from exc
    if len(gammas) != graph.n or len(lambdas) != graph.num_edges:
        raise SchemaError("tensor count does not match the graph")
    for a in range(graph.n):
        if gammas[a].ndim != 1 + graph.degree(a) or gammas[a].shape[0] != 2:
            raise SchemaError(f"tensor {a} has shape {gammas[a].shape}")
        for b in graph.adjacency[a]:
            if gammas[a].shape[graph.bond_axis[(a, b)]] != lambdas[graph.edge_index[(a, b)]].shape[0]:
                raise SchemaError(f"bond ({a}, {b}) dimension mismatch")
    return VidalState(graph, gammas, lambdas)


def save_state(state: VidalState, path: str | Path) -> None:
    dump_json(state_to_dict(state), path)


def load_state(path: str | Path) -> VidalState:
    return state_from_dict(load_json(path))
