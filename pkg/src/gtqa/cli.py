"""Command-line front end: ``gtqa {gen,run,sample,verify,loops,bench}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from ._io import dump_json
from .anneal.circuit import AnnealConfig
from .anneal.driver import run_gtqa, write_report
from .anneal.problem import ProblemInstance, load_instance, maxcut_instance, random_qubo, save_instance, score
from .baselines import SAConfig, approximation_ratio, simulated_annealing
from .errors import ConfigError, GTQAError, ValidationError
from .graphs import (
    ConnectivityGraph,
    heavy_hex_127,
    loop_length_histogram,
    loop_lengths_csv,
    random_regular,
    random_tree,
    shortest_loop_lengths,
    spectral_bipartition,
)
from .oracle import brute_force_optimum, entropy_rel_error, exact_evolve, fidelity_vs_exact, trace_distance_error
from .sampling import SamplingOptions, sample_many, write_samples
from .tn.io import load_state, save_state

logger = logging.getLogger("gtqa")

VERIFY_FORMAT = "gtqa-verification"
BENCH_FORMAT = "gtqa-bench"
VERSION = "1.0"


def _default_threads() -> int:
    raw = os.environ.get("GTQA_THREADS", "1")
    try:
        val = int(raw)
    except ValueError:
        raise ConfigError(f"GTQA_THREADS must be an integer, got {raw!r}") from None
    if val < 1:
        raise ConfigError("GTQA_THREADS must be positive")
    return val


def _positive_int(text: str) -> int:
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if val < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {val}")
    return val


def _nonneg_int(text: str) -> int:
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if val < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {val}")
    return val


def _add_anneal_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--T", type=float, default=20.0, help="total annealing time")
    p.add_argument("--dt", type=float, default=0.2, help="Trotter step")
    p.add_argument("--chi", type=_positive_int, default=4, help="maximal bond dimension")
    p.add_argument("--bp-eps", type=float, default=1e-8)
    p.add_argument("--bp-max-iters", type=_positive_int, default=100)
    p.add_argument("--r-max", type=float, default=1e-3, help="regauge threshold on the gauge residual")
    p.add_argument("--rcond", type=float, default=1e-12)
    p.add_argument("--damping", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)


def _anneal_config(args, **extra) -> AnnealConfig:
    return AnnealConfig(
        T=args.T, dt=args.dt, chi=args.chi, bp_eps=args.bp_eps, bp_max_iters=args.bp_max_iters,
        r_max=args.r_max, rcond=args.rcond, damping=args.damping, seed=args.seed, **extra,
    )


def _make_graph(topology: str, n: int | None, d: int, seed: int) -> ConnectivityGraph:
    if topology == "heavy-hex":
        return heavy_hex_127()
    if n is None:
        raise ConfigError(f"--n is required for topology {topology!r}")
    if topology == "tree":
        return random_tree(n, seed)
    return random_regular(n, d, seed=seed, connected=True)


def _make_instance(graph: ConnectivityGraph, kind: str, seed: int) -> ProblemInstance:
    return maxcut_instance(graph) if kind == "maxcut" else random_qubo(graph, seed)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_gen(args) -> int:
    graph = _make_graph(args.topology, args.n, args.d, args.seed)
    inst = _make_instance(graph, args.kind, args.seed)
    save_instance(inst, args.out)
    print(f"wrote {args.out}: n={inst.n}, {inst.graph.num_edges} edges, kind={inst.kind}")
    return 0


def cmd_run(args) -> int:
    inst = load_instance(args.instance)
    config = _anneal_config(args, checkpoint_every=args.checkpoint_every)
    resume = None
    if args.resume:
        if args.checkpoint is None:
            raise ConfigError("--resume needs --checkpoint")
        if Path(args.checkpoint).exists():
            resume = args.checkpoint
            logger.info("resuming from %s", args.checkpoint)
    state, report = run_gtqa(
        inst, config, record=True, record_rdms=args.record_rdms,
        checkpoint=args.checkpoint, resume=resume, stop_after=args.stop_after,
    )
    paths = write_report(report, args.out)
    if args.save_state:
        save_state(state, args.save_state)
        paths.append(Path(args.save_state))
    print(f"layers {report.layers_done}/{report.num_layers}, estimated infidelity {report.infidelity_trace[-1]:.3e}"
          if report.infidelity_trace else "no layers run")
    if report.score is not None:
        print(f"objective {report.objective:.6f}, score {report.score:.6f}")
    for p in paths:
        print(f"wrote {p}")
    return 0


def _parse_order(text: str | None, n: int, seed: int) -> list[int] | None:
    if text is None or text == "ascending":
        return None
    if text == "descending":
        return list(range(n - 1, -1, -1))
    if text == "random":
        return np.random.default_rng(seed).permutation(n).tolist()
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(f"cannot parse order {text!r}") from None


def cmd_sample(args) -> int:
    state = load_state(args.state)
    inst = load_instance(args.instance) if args.instance else None
    if inst is not None and inst.graph != state.graph:
        raise ValidationError("instance graph does not match the state")
    order = _parse_order(args.order, state.graph.n, args.seed)
    opts = SamplingOptions(eps=args.bp_eps, max_iters=args.bp_max_iters)
    traces = sample_many(state, args.count, order=order, rng=np.random.default_rng(args.seed),
                         instance=inst, tail_brute_force=args.tail_brute_force, options=opts)
    write_samples(traces, args.out)
    if inst is not None and traces:
        best = max(t.value for t in traces)
        print(f"best sampled value {best}")
    print(f"wrote {len(traces)} samples to {args.out}")
    return 0


def _verify_one(inst: ProblemInstance, config: AnnealConfig, label: str) -> dict:
    cut = spectral_bipartition(inst.graph)
    t0 = time.perf_counter()
    exact = exact_evolve(inst, config, cut=cut, keep_states=False)
    state, report = run_gtqa(inst, config, record=True, record_rdms=True)
    eps = trace_distance_error(exact.rdms, report.rdm_array(), config.dt, config.T)
    try:
        ent_err = entropy_rel_error(exact.entropies, report.entropy_trace)
    except ValidationError:
        ent_err = None
    exact_fid = fidelity_vs_exact(exact.final_state, state)
    x_opt, v_opt, degeneracy = brute_force_optimum(inst)
    rec = {
        "instance": label,
        "n": inst.n,
        "trace_distance_error": eps,
        "entropy_rel_error": ent_err,
        "estimated_fidelity": report.fidelity,
        "exact_fidelity": exact_fid,
        "gtqa_value": report.score,
        "optimum_value": v_opt,
        "optimum_degeneracy": degeneracy,
        "optimum_gap": v_opt - report.score,
    }
    logger.info("%s: eps %.3e, entropy error %s, %.1fs", label, eps, ent_err, time.perf_counter() - t0)
    return rec


def _quantiles(values: list[float]) -> dict:
    arr = np.asarray([v for v in values if v is not None], dtype=float)
    if arr.size == 0:
        return {}
    q = np.quantile(arr, [0.0, 0.25, 0.5, 0.75, 1.0])
    return dict(zip(["min", "q1", "median", "q3", "max"], map(float, q)))


def cmd_verify(args) -> int:
    config = _anneal_config(args)
    jobs = []
    for path in args.instance or []:
        jobs.append((load_instance(path), str(path)))
    if args.batch:
        if args.n is None:
            raise ConfigError("--batch needs --n")
        for s in range(args.seed, args.seed + args.batch):
            graph = random_regular(args.n, args.d, seed=s, connected=True)
            jobs.append((random_qubo(graph, s), f"regular-n{args.n}-d{args.d}-seed{s}"))
    if not jobs:
        raise ConfigError("nothing to verify: pass --instance or --batch")
    with ThreadPoolExecutor(max_workers=args.threads) as pool:
        records = list(pool.map(lambda job: _verify_one(job[0], config, job[1]), jobs))
    out = {
        "format": VERIFY_FORMAT,
        "version": VERSION,
        "config": config.to_dict(),
        "instances": records,
        "summary": {
            "trace_distance_error": _quantiles([r["trace_distance_error"] for r in records]),
            "entropy_rel_error": _quantiles([r["entropy_rel_error"] for r in records]),
        },
    }
    dump_json(out, args.out)
    for r in records:
        print(f"{r['instance']}: eps={r['trace_distance_error']:.3e} entropy_err={r['entropy_rel_error']}")
    print(f"wrote {args.out}")
    return 0


def cmd_loops(args) -> int:
    if args.instance:
        graph = load_instance(args.instance).graph
    else:
        graph = _make_graph(args.topology, args.n, args.d, args.seed)
    lengths = shortest_loop_lengths(graph)
    hist = loop_length_histogram(lengths)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["loop_length", "count"])
    for k, v in hist.items():
        w.writerow([k, v])
    Path(args.out).write_text(buf.getvalue())
    if args.per_edge:
        Path(args.per_edge).write_text(loop_lengths_csv(lengths))
    finite = [v for v in lengths.values() if v is not None]
    print(f"min loop {min(finite) if finite else 'none'}; histogram written to {args.out}")
    return 0


def _bench_rows(inst: ProblemInstance, solvers: list[str], args) -> list[dict]:
    rows = []
    for name in solvers:
        t0 = time.perf_counter()
        if name == "gtqa":
            _, report = run_gtqa(inst, _anneal_config(args), record=False)
            x, value = report.bitstring, report.score
        elif name == "sa":
            x, value = simulated_annealing(inst, SAConfig(args.sa_sweeps, args.sa_beta_start, args.sa_beta_end,
                                                          args.sa_restarts, args.seed))
        elif name == "brute":
            x, value, _ = brute_force_optimum(inst)
        else:
            raise ConfigError(f"unknown solver {name!r}")
        rows.append({"solver": name, "value": float(value), "seconds": time.perf_counter() - t0,
                     "bitstring": "".join("0" if v == 1 else "1" for v in x)})
    rows.sort(key=lambda r: (-r["value"], r["solver"]))
    best = rows[0]["value"]
    for r in rows:
        r["ratio"] = approximation_ratio(r["value"], best) if best > 0 else None
    return rows


def cmd_bench(args) -> int:
    inst = load_instance(args.instance)
    solvers = [s.strip() for s in args.solvers.split(",") if s.strip()]
    rows = _bench_rows(inst, solvers, args)
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["solver", "value", "ratio", "seconds"])
        for r in rows:
            w.writerow([r["solver"], repr(r["value"]), "" if r["ratio"] is None else repr(r["ratio"]), f"{r['seconds']:.3f}"])
        text = buf.getvalue()
    else:
        lines = ["| solver | value | ratio | seconds |", "|---|---|---|---|"]
        for r in rows:
            ratio = "" if r["ratio"] is None else f"{r['ratio']:.6f}"
            lines.append(f"| {r['solver']} | {r['value']:.6f} | {ratio} | {r['seconds']:.3f} |")
        text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    print(text, end="")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gtqa", description="Graph tensor-network quantum annealing simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for per-layer diagnostics, -vv for debug output")
    parser.add_argument("--threads", type=_positive_int, default=None,
                        help="worker threads for batch commands (default: $GTQA_THREADS or 1)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a problem instance")
    p.add_argument("--n", type=_positive_int)
    p.add_argument("--d", type=_positive_int, default=3)
    p.add_argument("--kind", choices=["qubo", "maxcut"], default="qubo")
    p.add_argument("--topology", choices=["regular", "tree", "heavy-hex"], default="regular")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("run", help="anneal an instance with the tensor-network simulator")
    p.add_argument("--instance", required=True)
    _add_anneal_flags(p)
    p.add_argument("--out", required=True, help="output prefix for report JSON and CSV traces")
    p.add_argument("--checkpoint", help="checkpoint file")
    p.add_argument("--checkpoint-every", type=_positive_int, default=100)
    p.add_argument("--resume", action="store_true", help="continue from --checkpoint if it exists")
    p.add_argument("--stop-after", type=_nonneg_int, help="stop after this many layers")
    p.add_argument("--save-state", help="write the final state snapshot here")
    p.add_argument("--record-rdms", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sample", help="sample bitstrings from a state snapshot")
    p.add_argument("--state", required=True)
    p.add_argument("--instance")
    p.add_argument("--count", type=_nonneg_int, default=100)
    p.add_argument("--order", help="ascending (default), descending, random or a comma-separated permutation")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tail-brute-force", type=_nonneg_int, default=0)
    p.add_argument("--bp-eps", type=float, default=1e-8)
    p.add_argument("--bp-max-iters", type=_positive_int, default=100)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("verify", help="compare against exact state-vector simulation")
    p.add_argument("--instance", action="append")
    p.add_argument("--batch", type=_positive_int, help="also verify this many random 3-regular QUBO instances")
    p.add_argument("--n", type=_positive_int)
    p.add_argument("--d", type=_positive_int, default=3)
    _add_anneal_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("loops", help="shortest-loop statistics of a graph")
    p.add_argument("--instance")
    p.add_argument("--topology", choices=["regular", "tree", "heavy-hex"], default="regular")
    p.add_argument("--n", type=_positive_int)
    p.add_argument("--d", type=_positive_int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="histogram CSV")
    p.add_argument("--per-edge", help="also write per-edge loop lengths here")
    p.set_defaults(func=cmd_loops)

    p = sub.add_parser("bench", help="compare solvers on one instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--solvers", default="gtqa,sa")
    _add_anneal_flags(p)
    p.add_argument("--sa-sweeps", type=_positive_int, default=1000)
    p.add_argument("--sa-restarts", type=_positive_int, default=20)
    p.add_argument("--sa-beta-start", type=float, default=0.1)
    p.add_argument("--sa-beta-end", type=float, default=10.0)
    p.add_argument("--format", choices=["md", "csv"], default="md")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING if args.verbose == 0 else logging.INFO if args.verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        if args.threads is None:
            args.threads = _default_threads()
        return args.func(args)
    except GTQAError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
