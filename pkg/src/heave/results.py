"""Reading and writing run directories (trace, networks, terminal samples)."""
from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .evolution import GenerationTrace, RunResult
from .graph import edges, from_edges, graph_to_json
from .var import TimeSeriesPanel, extract_network, fit_var, format_panel_csv

TRACE_FIELDS = ("generation", "mean_fstar", "best_fstar", "mean_hscore", "mean_f1")


def dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=False) + "\n")


def panel_digest(panel: TimeSeriesPanel) -> str:
    return hashlib.sha256(format_panel_csv(panel).encode()).hexdigest()


def format_trace_csv(traces: list[GenerationTrace]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_FIELDS)
    for t in traces:
        w.writerow(["" if getattr(t, f) is None else repr(getattr(t, f)) for f in TRACE_FIELDS])
    return buf.getvalue()


def read_trace_csv(path) -> list[GenerationTrace]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            vals = {k: (None if row[k] == "" else float(row[k])) for k in TRACE_FIELDS[1:]}
            out.append(GenerationTrace(int(row["generation"]), **vals))
    return out


def write_run(result: RunResult, panel: TimeSeriesPanel, out_dir) -> list[str]:
    """Persist a run; returns the file names written (manifest excluded)."""
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    names = panel.node_names
    alpha = result.config["alpha"]

    (d / "trace.csv").write_text(format_trace_csv(result.traces))

    best = result.population.best_index()
    net = result.best_network.to_json(names)
    net["fit_score"] = float(result.population.scores[best])
    net["f_star"] = float(result.population.f_stars[best])
    dump_json(net, d / "best_network.json")
    dump_json({"levels": [int(x) for x in result.best_hierarchy], "node_names": names},
              d / "best_hierarchy.json")

    generations = []
    for k, pop in enumerate(result.history):
        gen = result.traces[len(result.traces) - len(result.history) + k].generation
        members = [
            {
                "genotype": [int(x) for x in m.payload],
                "fit_score": float(pop.scores[i]),
                "f_star": float(pop.f_stars[i]),
                "edges": edges(pop.networks[i]),
            }
            for i, m in enumerate(pop.members)
        ]
        generations.append({"generation": gen, "members": members})
    dump_json({
        "variant": result.config["variant"],
        "alpha": alpha,
        "f_var": float(result.f_var),
        "node_names": names,
        "generations": generations,
    }, d / "terminal_population.json")

    unconstrained = fit_var(panel)
    var_net = extract_network(unconstrained, alpha)
    payload = unconstrained.to_json()
    payload["network"] = graph_to_json(var_net.graph, names)
    payload["alpha"] = alpha
    dump_json(payload, d / "unconstrained.json")
    return ["trace.csv", "best_network.json", "best_hierarchy.json",
            "terminal_population.json", "unconstrained.json"]


@dataclass
class TerminalSample:
    generation: int
    genotype: list[int]
    fit_score: float
    f_star: float
    graph: np.ndarray


@dataclass
class LoadedRun:
    node_names: list[str]
    variant: str
    alpha: float
    f_var: float
    samples: list[TerminalSample]
    var_graph: np.ndarray
    traces: list[GenerationTrace]

    @property
    def n(self) -> int:
        return len(self.node_names)

    def generations(self) -> list[int]:
        return sorted({s.generation for s in self.samples})


def load_run(directory) -> LoadedRun:
    d = Path(directory)
    pop = json.loads((d / "terminal_population.json").read_text())
    names = pop["node_names"]
    n = len(names)
    samples = [
        TerminalSample(g["generation"], m["genotype"], m["fit_score"], m["f_star"], from_edges(n, m["edges"]))
        for g in pop["generations"]
        for m in g["members"]
    ]
    unc = json.loads((d / "unconstrained.json").read_text())
    var_graph = from_edges(n, unc["network"]["edges"])
    traces = read_trace_csv(d / "trace.csv") if (d / "trace.csv").exists() else []
    return LoadedRun(names, pop["variant"], pop["alpha"], pop["f_var"], samples, var_graph, traces)
