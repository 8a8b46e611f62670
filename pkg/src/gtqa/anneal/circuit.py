"""First-order Trotter circuit for the annealing Hamiltonian

    H(s) = s * sum_a X_a + (1 - s) * (sum_ab J_ab Z_a Z_b + sum_a h_a Z_a).

Layer ``k = 1 .. K`` (``K = T / dt``) uses ``s_k = 1 - k / K`` and applies
the interaction sub-layer ``U_Z`` followed by the mixing sub-layer ``U_X``:

    U_Z = prod_ab exp(-i dt (1 - s_k) (J_ab Z_a Z_b + h_a/D_a Z_a + h_b/D_b Z_b))
    U_X = prod_a exp(-i dt s_k X_a)

Gates are produced lazily; a :class:`Gate` only builds its matrix on demand,
so gate streams of millions of entries can be counted cheaply.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from ..errors import ConfigError
from .problem import ProblemInstance

__all__ = [
    "AnnealConfig",
    "Gate",
    "TrotterLayer",
    "TrotterCircuit",
    "trotter_circuit",
    "zz_gate",
    "x_gate",
    "z_gate",
]

_Z = np.array([1.0, -1.0])
_ZZ = np.array([1.0, -1.0, -1.0, 1.0])
_ZA = np.array([1.0, 1.0, -1.0, -1.0])
_ZB = np.array([1.0, -1.0, 1.0, -1.0])


@dataclass
class AnnealConfig:
    T: float = 20.0
    dt: float = 0.2
    chi: int = 4
    bp_eps: float = 1e-8
    bp_max_iters: int = 100
    r_max: float = 1e-3
    rcond: float = 1e-12
    damping: float = 0.0
    seed: int = 0
    schedule: Sequence[float] | None = None
    checkpoint_every: int = 100

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not (np.isfinite(self.T) and self.T > 0):
            raise ConfigError("T must be positive")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ConfigError("dt must be positive")
        ratio = self.T / self.dt
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio) or round(ratio) < 1:
            raise ConfigError(f"T/dt = {ratio} is not a positive integer")
        if int(self.chi) != self.chi or self.chi < 1:
            raise ConfigError("chi must be a positive integer")
        if not self.bp_eps > 0:
            raise ConfigError("bp_eps must be positive")
        if int(self.bp_max_iters) != self.bp_max_iters or self.bp_max_iters < 1:
            raise ConfigError("bp_max_iters must be a positive integer")
        if not self.r_max >= 0:
            raise ConfigError("r_max must be nonnegative")
        if not 0 < self.rcond < 1:
            raise ConfigError("rcond must lie in (0, 1)")
        if not 0 <= self.damping < 1:
            raise ConfigError("damping must lie in [0, 1)")
        if int(self.checkpoint_every) != self.checkpoint_every or self.checkpoint_every < 1:
            raise ConfigError("checkpoint_every must be a positive integer")
        if self.schedule is not None:
            sched = np.asarray(self.schedule, dtype=float)
            if sched.shape != (self.num_layers,):
                raise ConfigError(f"schedule needs {self.num_layers} entries, got {sched.shape}")
            if np.any(~np.isfinite(sched)) or np.any(sched < 0) or np.any(sched > 1):
                raise ConfigError("schedule values must lie in [0, 1]")
            self.schedule = tuple(float(v) for v in sched)

    @property
    def num_layers(self) -> int:
        return int(round(self.T / self.dt))

    def s(self, k: int) -> float:
        """Schedule value of layer ``k``; ``k = 0`` is the initial point ``s = 1``."""
        K = self.num_layers
        if not 0 <= k <= K:
            raise ConfigError(f"layer {k} outside 0..{K}")
        if k == 0:
            return 1.0
        if self.schedule is not None:
            return self.schedule[k - 1]
        return 1.0 - k / K

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schedule"] = list(self.schedule) if self.schedule is not None else None
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "AnnealConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)


def zz_gate(t_j: float, t_ha: float, t_hb: float) -> np.ndarray:
    """``exp(-i (t_j Z Z + t_ha Z x 1 + t_hb 1 x Z))`` as a 4x4 matrix (first qubit major)."""
    return np.diag(np.exp(-1j * (t_j * _ZZ + t_ha * _ZA + t_hb * _ZB)))


def x_gate(theta: float) -> np.ndarray:
    """``exp(-i theta X)``."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -1j * s], [-1j * s, c]])


def z_gate(theta: float) -> np.ndarray:
    """``exp(-i theta Z)``."""
    return np.diag(np.exp(-1j * theta * _Z))


class Gate(NamedTuple):
    """One gate of the stream.

    ``kind`` is ``"zz"`` (params ``(t J, t h_a/D_a, t h_b/D_b)``), ``"x"`` or
    ``"z"`` (params ``(theta,)``).
    """

    layer: int
    kind: str
    sites: tuple[int, ...]
    params: tuple[float, ...]

    @property
    def matrix(self) -> np.ndarray:
        if self.kind == "zz":
            return zz_gate(*self.params)
        if self.kind == "x":
            return x_gate(self.params[0])
        return z_gate(self.params[0])


@dataclass
class TrotterLayer:
    k: int
    s: float
    interaction: list[Gate] = field(default_factory=list)
    mixing: list[Gate] = field(default_factory=list)

    def gates(self) -> list[Gate]:
        return self.interaction + self.mixing


class TrotterCircuit:
    """Lazy view of the Trotterized annealing gate stream."""

    def __init__(self, instance: ProblemInstance, config: AnnealConfig):
        config.validate()
        self.instance = instance
        self.config = config
        g = instance.graph
        deg = np.array([g.degree(a) for a in range(g.n)], dtype=float)
        self._split = np.divide(instance.h, deg, out=np.zeros(g.n), where=deg > 0)
        self._isolated = [a for a in range(g.n) if deg[a] == 0]

    @property
    def num_layers(self) -> int:
        return self.config.num_layers

    def interaction_time(self, k: int) -> float:
        return self.config.dt * (1.0 - self.config.s(k))

    def mixing_angle(self, k: int) -> float:
        return self.config.dt * self.config.s(k)

    def layer(self, k: int) -> TrotterLayer:
        s = self.config.s(k)
        t = self.config.dt * (1.0 - s)
        theta = self.config.dt * s
        inst, split = self.instance, self._split
        inter = [
            Gate(k, "zz", (a, b), (t * j, t * split[a], t * split[b]))
            for (a, b), j in zip(inst.graph.edges, inst.J)
        ]
        # a vertex without edges still feels its field
        inter += [Gate(k, "z", (a,), (t * inst.h[a],)) for a in self._isolated]
        mix = [Gate(k, "x", (a,), (theta,)) for a in range(inst.n)]
        return TrotterLayer(k, s, inter, mix)

    def layers(self) -> Iterator[TrotterLayer]:
        for k in range(1, self.num_layers + 1):
            yield self.layer(k)

    def __iter__(self) -> Iterator[Gate]:
        for lay in self.layers():
            yield from lay.interaction
            yield from lay.mixing

    def count_gates(self) -> dict[str, int]:
        """Count gates by enumerating the stream (matrices are never built)."""
        layers = two = one = 0
        for lay in self.layers():
            layers += 1
            for gate in lay.interaction:
                if len(gate.sites) == 2:
                    two += 1
                else:
                    one += 1
            one += len(lay.mixing)
        return {"layers": layers, "two_qubit": two, "one_qubit": one}


def trotter_circuit(instance: ProblemInstance, config: AnnealConfig) -> TrotterCircuit:
    return TrotterCircuit(instance, config)
