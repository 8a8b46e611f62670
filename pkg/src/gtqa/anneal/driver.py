"""The annealing driver: evolve a graph tensor network through the Trotter
circuit, record diagnostics per layer, checkpoint, and read out a solution."""

from __future__ import annotations

import logging
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .._io import check_version, complex_from_json, complex_to_json, dump_json, load_json
from ..errors import SchemaError, TopologyError
from ..graphs import Bipartition, make_bipartition, spectral_bipartition
from ..tn.bp import reduced_density_matrices, run_bp, warm_start_messages
from ..tn.gates import apply_2q
from ..tn.gauge import approx_entropy, regauge, to_vidal, vidal_residual
from ..tn.io import state_from_dict, state_to_dict
from ..tn.state import VidalState, product_state, to_symmetric
from .circuit import AnnealConfig, trotter_circuit
from .problem import ProblemInstance, objective, score

logger = logging.getLogger(__name__)

__all__ = [
    "RunReport",
    "run_gtqa",
    "round_readout",
    "readout_from_rdms",
    "estimate_fidelity",
    "write_report",
    "load_report",
]

REPORT_FORMAT = "gtqa-report"
CHECKPOINT_FORMAT = "gtqa-checkpoint"
VERSION = "1.0"


@dataclass
class RunReport:
    n: int
    num_layers: int
    layers_done: int = 0
    z_trajectory: list[np.ndarray] = field(default_factory=list)
    entropy_trace: list[float] = field(default_factory=list)
    infidelity_trace: list[float] = field(default_factory=list)
    truncation_trace: list[float] = field(default_factory=list)
    residual_trace: list[float] = field(default_factory=list)
    bp_diagnostics: list[dict] = field(default_factory=list)
    rdm_trajectory: list[np.ndarray] | None = None
    log_fidelity: float = 0.0
    two_qubit_gates: int = 0
    cut: tuple[int, ...] | None = None
    bitstring: np.ndarray | None = None
    objective: float | None = None
    score: float | None = None
    config: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        return self.layers_done == self.num_layers

    @property
    def fidelity(self) -> float:
        return math.exp(self.log_fidelity)

    def z_array(self) -> np.ndarray:
        return np.array(self.z_trajectory, dtype=float).reshape(-1, self.n)

    def rdm_array(self) -> np.ndarray:
        if self.rdm_trajectory is None:
            raise SchemaError("run did not record reduced density matrices")
        return np.array(self.rdm_trajectory, dtype=complex).reshape(-1, self.n, 2, 2)

    def to_dict(self, include_metadata: bool = True) -> dict:
        d = {
            "format": REPORT_FORMAT,
            "version": VERSION,
            "n": self.n,
            "num_layers": self.num_layers,
            "layers_done": self.layers_done,
            "z_trajectory": [list(map(float, z)) for z in self.z_trajectory],
            "entropy_trace": list(map(float, self.entropy_trace)),
            "infidelity_trace": list(map(float, self.infidelity_trace)),
            "truncation_trace": list(map(float, self.truncation_trace)),
            "residual_trace": list(map(float, self.residual_trace)),
            "bp_diagnostics": self.bp_diagnostics,
            "rdm_trajectory": None if self.rdm_trajectory is None else complex_to_json(self.rdm_array()),
            "log_fidelity": self.log_fidelity,
            "two_qubit_gates": self.two_qubit_gates,
            "cut": None if self.cut is None else list(self.cut),
            "bitstring": None if self.bitstring is None else [int(v) for v in self.bitstring],
            "objective": self.objective,
            "score": self.score,
            "config": self.config,
        }
        if include_metadata:
            d["metadata"] = self.metadata
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "RunReport":
        check_version(data, REPORT_FORMAT)
        try:
            n = int(data["n"])
            rdm = data.get("rdm_trajectory")
            rdms = None
            if rdm is not None:
                rdms = list(complex_from_json(rdm).reshape(-1, n, 2, 2))
            bits = data.get("bitstring")
            cut = data.get("cut")
            return cls(
                n=n,
                num_layers=int(data["num_layers"]),
                layers_done=int(data["layers_done"]),
                z_trajectory=[np.asarray(z, dtype=float) for z in data["z_trajectory"]],
                entropy_trace=[float(v) for v in data["entropy_trace"]],
                infidelity_trace=[float(v) for v in data["infidelity_trace"]],
                truncation_trace=[float(v) for v in data.get("truncation_trace", [])],
                residual_trace=[float(v) for v in data.get("residual_trace", [])],
                bp_diagnostics=list(data.get("bp_diagnostics", [])),
                rdm_trajectory=rdms,
                log_fidelity=float(data["log_fidelity"]),
                two_qubit_gates=int(data.get("two_qubit_gates", 0)),
                cut=None if cut is None else tuple(int(v) for v in cut),
                bitstring=None if bits is None else np.asarray(bits, dtype=np.int8),
                objective=data.get("objective"),
                score=data.get("score"),
                config=dict(data.get("config", {})),
                metadata=dict(data.get("metadata", {})),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed report: {exc}") from exc


def readout_from_rdms(rhos: np.ndarray) -> np.ndarray:
    """``x_a = +1`` iff ``rho_a[0, 0] > 1/2``, else ``-1`` (ties go to ``-1``)."""
    rhos = np.asarray(rhos)
    return np.where(rhos[:, 0, 0].real > 0.5, 1, -1).astype(np.int8)


def round_readout(state: VidalState, eps: float = 1e-8, max_iters: int = 100) -> np.ndarray:
    """Regauge, then round every single-qubit reduced density matrix."""
    _, info = regauge(state, eps=eps, max_iters=max_iters, compute_residual=False)
    return readout_from_rdms(reduced_density_matrices(info.symmetric, info.messages))


def estimate_fidelity(report: RunReport | Iterable[float]) -> float:
    """Product of the two-qubit gate fidelities (one-qubit gates contribute 1)."""
    if isinstance(report, RunReport):
        return report.fidelity
    return float(math.exp(sum(math.log(f) for f in report)))


def _z_from_rdms(rhos: np.ndarray) -> np.ndarray:
    return (rhos[:, 0, 0] - rhos[:, 1, 1]).real


def _write_checkpoint(path: Path, instance: ProblemInstance, config: AnnealConfig, state: VidalState, report: RunReport) -> None:
    record = {
        "format": CHECKPOINT_FORMAT,
        "version": VERSION,
        "instance": instance.to_dict(),
        "config": config.to_dict(),
        "state": state_to_dict(state),
        "report": report.to_dict(include_metadata=False),
    }
    tmp = path.with_name(path.name + ".tmp")
    dump_json(record, tmp)
    os.replace(tmp, path)


def load_checkpoint(path: str | Path) -> tuple[ProblemInstance, AnnealConfig, VidalState, RunReport]:
    data = load_json(path)
    check_version(data, CHECKPOINT_FORMAT)
    try:
        instance = ProblemInstance.from_dict(data["instance"])
        config = AnnealConfig.from_dict(data["config"])
        state = state_from_dict(data["state"])
        report = RunReport.from_dict(data["report"])
    except KeyError as exc:
        raise SchemaError(f"malformed checkpoint: missing {exc}") from exc
    return instance, config, state, report


def run_gtqa(
    instance: ProblemInstance,
    config: AnnealConfig,
    *,
    record: bool = True,
    record_rdms: bool = False,
    checkpoint: str | Path | None = None,
    resume: str | Path | None = None,
    stop_after: int | None = None,
    callback: Callable[[int, VidalState, RunReport], None] | None = None,
) -> tuple[VidalState, RunReport]:
    """Simulate the annealing circuit on a graph tensor network.

    Starting from ``|+>^n`` every layer applies the interaction gates with
    truncation to ``config.chi`` and then the mixing rotations. After each
    layer the gauge residual is checked and the state is regauged when it
    exceeds ``config.r_max``. With ``record`` the single-qubit ``<Z>``
    values are taken from BP messages every layer and the mean-field
    entropy is evaluated across the spectral bipartition of the graph.

    ``checkpoint`` names a file rewritten every ``config.checkpoint_every``
    layers; ``resume`` continues a run from such a file and yields the same
    report as an uninterrupted run. ``stop_after`` ends the run early after
    that many layers (the partial report has no bitstring).
    """
    g = instance.graph
    if not g.is_connected():
        raise TopologyError("the instance graph must be connected")
    circuit = trotter_circuit(instance, config)
    K = circuit.num_layers
    cut: Bipartition | None = spectral_bipartition(g) if g.n >= 2 else None
    started = time.perf_counter()

    if resume is not None:
        r_inst, r_conf, state, report = load_checkpoint(resume)
        if r_inst != instance:
            raise SchemaError("checkpoint belongs to a different instance")
        # checkpoint cadence does not affect the evolution
        if {**r_conf.to_dict(), "checkpoint_every": 0} != {**config.to_dict(), "checkpoint_every": 0}:
            raise SchemaError("checkpoint was written with a different configuration")
        if report.cut is not None:
            cut = make_bipartition(g, report.cut)
        if record_rdms and report.rdm_trajectory is None:
            raise SchemaError("checkpoint has no RDM trajectory to extend")
    else:
        state = product_state(g)
        report = RunReport(
            n=g.n,
            num_layers=K,
            cut=None if cut is None else cut.part_a,
            config=config.to_dict(),
            rdm_trajectory=[] if record_rdms else None,
        )
    ckpt_path = Path(checkpoint) if checkpoint is not None else None
    last = K if stop_after is None else min(K, max(report.layers_done, int(stop_after)))

    for k in range(report.layers_done + 1, last + 1):
        layer = circuit.layer(k)
        trunc = 0.0
        for gate in layer.interaction:
            w = gate.matrix
            if gate.kind == "zz":
                state, f = apply_2q(state, gate.sites, w, config.chi, config.rcond, check=False, inplace=True)
                report.log_fidelity += math.log(f)
                report.two_qubit_gates += 1
                trunc = max(trunc, math.sqrt(max(0.0, 1.0 - math.sqrt(f))))
            else:
                a = gate.sites[0]
                state.gammas[a] = np.tensordot(w, state.gammas[a], axes=([1], [0]))
        wx = layer.mixing[0].matrix if layer.mixing else None
        for gate in layer.mixing:
            a = gate.sites[0]
            state.gammas[a] = np.tensordot(wx, state.gammas[a], axes=([1], [0]))

        res = vidal_residual(state)
        diag = None
        if record or res > config.r_max:
            sym = to_symmetric(state)
            msgs = run_bp(
                sym,
                eps=config.bp_eps,
                max_iters=config.bp_max_iters,
                init=warm_start_messages(state),
                damping=config.damping,
            )
            diag = {"layer": k, "iterations": msgs.iterations, "converged": msgs.converged,
                    "residual_before": res, "regauged": False}
            if res > config.r_max:
                state = to_vidal(sym, msgs, rcond=config.rcond)
                res = vidal_residual(state)
                diag["regauged"] = True
                diag["residual_after"] = res
            report.bp_diagnostics.append(diag)
            if record:
                rhos = reduced_density_matrices(sym, msgs)
                report.z_trajectory.append(_z_from_rdms(rhos))
                if report.rdm_trajectory is not None:
                    report.rdm_trajectory.append(rhos)
        if record:
            report.entropy_trace.append(approx_entropy(state, cut) if cut is not None else 0.0)
        report.infidelity_trace.append(-math.expm1(report.log_fidelity))
        report.truncation_trace.append(trunc)
        report.residual_trace.append(res)
        report.layers_done = k
        logger.info(
            "layer %d/%d: max truncation %.3e, residual %.3e, BP sweeps %s, infidelity %.3e",
            k, K, trunc, res, diag["iterations"] if diag else 0, report.infidelity_trace[-1],
        )
        if ckpt_path is not None and (k % config.checkpoint_every == 0 or k == last):
            _write_checkpoint(ckpt_path, instance, config, state, report)
        if callback is not None:
            callback(k, state, report)

    report.metadata["elapsed_seconds"] = report.metadata.get("elapsed_seconds", 0.0) + time.perf_counter() - started
    if report.complete:
        x = round_readout(state, eps=config.bp_eps, max_iters=config.bp_max_iters)
        report.bitstring = x
        report.objective = objective(instance, x)
        report.score = score(instance, x)
    return state, report


def write_report(report: RunReport, prefix: str | Path) -> list[Path]:
    """Write ``<prefix>.json``, ``<prefix>_z.csv`` and ``<prefix>_traces.csv``."""
    prefix = Path(prefix)
    paths = [prefix.with_name(prefix.name + ".json"),
             prefix.with_name(prefix.name + "_z.csv"),
             prefix.with_name(prefix.name + "_traces.csv")]
    dump_json(report.to_dict(), paths[0])
    z = report.z_array()
    with open(paths[1], "w") as fh:
        fh.write("layer,qubit,z\n")
        for k, row in enumerate(z, start=1):
            for a, v in enumerate(row):
                fh.write(f"{k},{a},{float(v)!r}\n")
    with open(paths[2], "w") as fh:
        fh.write("layer,entropy,infidelity\n")
        ent = report.entropy_trace or [float("nan")] * len(report.infidelity_trace)
        for k, (s, inf) in enumerate(zip(ent, report.infidelity_trace), start=1):
            fh.write(f"{k},{float(s)!r},{float(inf)!r}\n")
    return paths


def load_report(path: str | Path) -> RunReport:
    return RunReport.from_dict(load_json(path))
