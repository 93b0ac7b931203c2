"""Command-line entry point: ``heave simulate|fit|evaluate|analyze|benchmark``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, fields
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import analyze_run, evaluate_run, join_metadata, read_metadata_csv
from .benchmark import run_benchmark
from .evolution import VARIANTS, EAConfig, run
from .graph import CycleError, InvalidInputError, find_cycle
from .metrics import link_count
from .results import dump_json, load_run, panel_digest, write_run
from .simulation import (
    ProcessSpec,
    effective_link_rate,
    load_ground_truth,
    make_ground_truth,
    save_ground_truth,
    spectral_radius,
)
from .var import PanelParseError, SingularDesignError, read_panel_csv

log = logging.getLogger("heave")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _write_manifest(out: Path, config: dict, seed, digest: str | None, outputs: list[str], started: str) -> None:
    dump_json({
        "tool": "heave",
        "version": __version__,
        "config": config,
        "seed": seed,
        "input_digest": digest,
        "started": started,
        "finished": _now(),
        "outputs": outputs,
    }, out / "manifest.json")


def cmd_simulate(args) -> int:
    spec = ProcessSpec(args.nodes, args.edge_prob, args.steps, args.margin, args.seed)
    truth = make_ground_truth(spec)
    save_ground_truth(truth, args.out)
    print(f"simulated {spec.t_steps} x {spec.n_nodes} panel -> {args.out}")
    print(f"effective link rate {effective_link_rate(truth.network):.4f}, "
          f"spectral radius {spectral_radius(truth.recurrence):.4f}, "
          f"links {link_count(truth.network)}")
    return EXIT_OK


def load_config(path, overrides: dict) -> EAConfig:
    values = {}
    if path is not None:
        values = json.loads(Path(path).read_text())
        known = {f.name for f in fields(EAConfig)}
        unknown = set(values) - known
        if unknown:
            raise InvalidInputError(f"unknown config keys: {sorted(unknown)}")
    values.update({k: v for k, v in overrides.items() if v is not None})
    return EAConfig(**values)


def cmd_fit(args) -> int:
    started = _now()
    panel = read_panel_csv(args.panel, returns_from_prices_flag=args.returns_from_prices)
    cfg = load_config(args.config, {
        "variant": args.variant, "population_size": args.population, "generations": args.generations,
        "mutation_prob": args.mutation_prob, "mean_step": args.mean_step, "alpha": args.alpha,
        "seed": args.seed, "threads": args.threads,
    })
    truth_network = None
    if args.truth is not None:
        truth_network = load_ground_truth(args.truth).network
        if truth_network.shape[0] != panel.n_nodes:
            raise InvalidInputError("truth and panel node counts differ")

    def progress(tr):
        log.info("gen %d mean f* %.4f best f* %.4f", tr.generation, tr.mean_fstar, tr.best_fstar)

    result = run(panel, cfg, truth_network=truth_network, progress=progress)
    cycle = find_cycle(result.best_network.graph)
    if cycle is not None:
        raise CycleError(cycle)
    out = Path(args.out)
    outputs = write_run(result, panel, out)
    _write_manifest(out, result.config, cfg.seed, panel_digest(panel), outputs, started)
    best = result.population.best_index()
    print(f"final mean f* {result.traces[-1].mean_fstar:.4f}, best f* {result.population.f_stars[best]:.4f}, "
          f"links {link_count(result.best_network.graph)}, height {int(result.best_hierarchy.max())}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    loaded = load_run(args.results)
    truth = load_ground_truth(args.truth)
    report = evaluate_run(loaded, truth.network, last=args.last)
    out = Path(args.out) if args.out else Path(args.results) / "report.json"
    dump_json(report.to_json(), out)
    print(json.dumps(report.to_json(), indent=1))
    return EXIT_OK


def cmd_analyze(args) -> int:
    loaded = load_run(args.results)
    metadata = None
    if args.metadata is not None:
        names, cols = read_metadata_csv(args.metadata)
        metadata = join_metadata(loaded.node_names, names, cols)
    analysis = analyze_run(loaded, metadata, last=args.last)
    out = Path(args.out) if args.out else Path(args.results) / "analysis"
    out.mkdir(parents=True, exist_ok=True)
    dump_json(analysis.summary, out / "summary.json")
    (out / "table.csv").write_text(analysis.table_csv())
    (out / "nodes.csv").write_text(analysis.node_csv())
    (out / "spearman.csv").write_text(analysis.correlation_csv())
    (out / "ccdf.csv").write_text(analysis.ccdf_csv())
    s = analysis.summary
    print(analysis.table_csv(), end="")
    print(f"f* {s['f_star_mean']:.4f}, link ratio DAG/VAR {s['link_ratio']:.4f}, "
          f"rho(hierarchy, out-degree) {analysis.correlation('out_degree', 'hierarchy'):.3f}")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    base = load_config(args.config, {"generations": args.generations, "alpha": args.alpha,
                                     "population_size": args.population, "threads": args.threads})
    seeds = range(args.seed, args.seed + args.datasets)

    def progress(seed, variant, res):
        log.info("dataset %d %s: final mean f* %.4f", seed, variant, res.traces[-1].mean_fstar)

    result = run_benchmark(args.nodes, seeds, args.variants, base, args.edge_prob, progress)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "table.csv").write_text(result.table_csv())
    (out / "per_generation.csv").write_text(result.per_generation_csv())
    dump_json({"nodes": args.nodes, "seeds": list(seeds), "variants": args.variants,
               "config": asdict(base)}, out / "benchmark.json")
    print(result.table_csv(), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="heave", description=__doc__)
    p.add_argument("--version", action="version", version=f"heave {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="generate a DAG-VAR ground truth")
    s.add_argument("--nodes", type=int, required=True)
    s.add_argument("--edge-prob", type=float, default=0.25)
    s.add_argument("--steps", type=int, default=None, help="observations (default 30 x nodes)")
    s.add_argument("--margin", type=float, default=1.05)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("fit", parents=[common], help="evolve an acyclic VAR on a panel CSV")
    f.add_argument("panel")
    f.add_argument("--config", default=None, help="EA configuration JSON")
    f.add_argument("--variant", choices=VARIANTS, default=None)
    f.add_argument("--population", type=int, default=None)
    f.add_argument("--generations", type=int, default=None)
    f.add_argument("--mutation-prob", type=float, default=None)
    f.add_argument("--mean-step", type=float, default=None)
    f.add_argument("--alpha", type=float, default=None)
    f.add_argument("--returns-from-prices", action="store_true")
    f.add_argument("--truth", default=None, help="ground-truth directory for H/F1 tracing")
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_fit)

    e = sub.add_parser("evaluate", parents=[common], help="score a run against ground truth")
    e.add_argument("results")
    e.add_argument("truth")
    e.add_argument("--last", type=int, default=5)
    e.add_argument("--out", default=None)
    e.set_defaults(func=cmd_evaluate)

    a = sub.add_parser("analyze", parents=[common], help="summarize terminal networks")
    a.add_argument("results")
    a.add_argument("--metadata", default=None, help="CSV: node name, numeric attributes")
    a.add_argument("--last", type=int, default=5)
    a.add_argument("--out", default=None)
    a.set_defaults(func=cmd_analyze)

    b = sub.add_parser("benchmark", parents=[common], help="compare variants on simulated data")
    b.add_argument("--nodes", type=int, default=30)
    b.add_argument("--datasets", type=int, default=10)
    b.add_argument("--variants", nargs="+", choices=VARIANTS, default=list(VARIANTS))
    b.add_argument("--edge-prob", type=float, default=0.25)
    b.add_argument("--generations", type=int, default=None)
    b.add_argument("--population", type=int, default=None)
    b.add_argument("--alpha", type=float, default=None)
    b.add_argument("--config", default=None)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_benchmark)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command in ("simulate", "benchmark") and args.seed is None:
        args.seed = 0
    try:
        return args.func(args)
    except (InvalidInputError, PanelParseError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (SingularDesignError, CycleError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
