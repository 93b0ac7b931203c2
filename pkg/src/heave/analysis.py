"""Evaluation against ground truth and empirical network analysis of a run."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .graph import InvalidInputError, canonicalize, off_diagonal
from .metrics import (
    ScoreReport,
    UndefinedCorrelationError,
    degree_ccdf,
    f1_score,
    h_score,
    link_count,
    mean_degree,
    significance_stars,
    spearman,
    summarize_population,
)
from .results import LoadedRun


class MetadataJoinError(InvalidInputError):
    def __init__(self, unmatched: list[str]):
        self.unmatched = unmatched
        super().__init__("metadata node names do not match the panel: " + ", ".join(unmatched))


def evaluate_run(run: LoadedRun, truth_network, last: int = 5) -> ScoreReport:
    """Final-generation averages of f*, best f*, H score and F1 against a true network."""
    truth = np.asarray(truth_network)
    if truth.shape != (run.n, run.n):
        raise InvalidInputError(f"truth has {truth.shape[0]} nodes, run has {run.n}")
    truth_levels = canonicalize(truth)
    gens = run.generations()[-last:]
    samples = [s for s in run.samples if s.generation in gens]
    best_per_gen = [max(s.f_star for s in samples if s.generation == g) for g in gens]
    return ScoreReport(
        f_raw=float(np.mean([s.fit_score for s in samples])),
        f_star=float(np.mean([s.f_star for s in samples])),
        link_count=float(np.mean([link_count(s.graph) for s in samples])),
        mean_degree=float(np.mean([mean_degree(s.graph) for s in samples])),
        h_score=float(np.mean([h_score(s.graph, truth_levels) for s in samples])),
        f1=float(np.mean([f1_score(s.graph, truth) for s in samples])),
        f_star_best=float(np.mean(best_per_gen)),
    )


def read_metadata_csv(path) -> tuple[list[str], dict[str, np.ndarray]]:
    """First column node name, remaining columns numeric attributes."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    header = rows[0]
    names = [r[0].strip() for r in rows[1:]]
    cols = {}
    for k, col in enumerate(header[1:], start=1):
        try:
            cols[col.strip()] = np.array([float(r[k]) for r in rows[1:]])
        except (ValueError, IndexError):
            raise InvalidInputError(f"metadata column {col!r} is not numeric") from None
    return names, cols


def join_metadata(node_names, meta_names, columns) -> dict[str, np.ndarray]:
    missing = sorted(set(node_names) - set(meta_names))
    extra = sorted(set(meta_names) - set(node_names))
    if missing or extra:
        raise MetadataJoinError(missing + extra)
    index = {name: i for i, name in enumerate(meta_names)}
    order = [index[name] for name in node_names]
    return {k: v[order] for k, v in columns.items()}


@dataclass
class Analysis:
    summary: dict
    node_table: dict[str, np.ndarray]
    correlations: list[dict]
    ccdf_rows: list[tuple]
    node_names: list[str] = field(default_factory=list)

    def node_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = list(self.node_table)
        w.writerow(["node"] + cols)
        for i, name in enumerate(self.node_names):
            w.writerow([name] + [repr(float(self.node_table[c][i])) for c in cols])
        return buf.getvalue()

    def correlation_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["a", "b", "rho", "p_value", "stars"])
        for r in self.correlations:
            w.writerow([r["a"], r["b"], repr(r["rho"]), repr(r["p_value"]), r["stars"]])
        return buf.getvalue()

    def ccdf_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["source", "kind", "degree", "fraction"])
        for row in self.ccdf_rows:
            w.writerow([row[0], row[1], row[2], repr(row[3])])
        return buf.getvalue()

    def table_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["model", "f", "mean_degree", "height", "cv_h"])
        for row in self.summary["table"]:
            w.writerow([row["model"]] + ["" if row[k] is None else repr(row[k])
                                         for k in ("f", "mean_degree", "height", "cv_h")])
        return buf.getvalue()

    def correlation(self, a: str, b: str) -> float:
        for r in self.correlations:
            if {r["a"], r["b"]} == {a, b}:
                return r["rho"]
        raise KeyError((a, b))


def analyze_run(run: LoadedRun, metadata: dict[str, np.ndarray] | None = None, last: int = 5) -> Analysis:
    """Mean/best DAG summaries, degree CCDFs and node-attribute rank correlations."""
    gens = run.generations()[-last:]
    samples = [s for s in run.samples if s.generation in gens]
    graphs = [off_diagonal(s.graph) for s in samples]
    summ = summarize_population(graphs)
    best = max(samples, key=lambda s: s.fit_score)
    best_levels = canonicalize(best.graph)
    var_graph = off_diagonal(run.var_graph)

    in_deg = np.mean([g.sum(axis=0) for g in graphs], axis=0)
    out_deg = np.mean([g.sum(axis=1) for g in graphs], axis=0)
    var_in = var_graph.sum(axis=0).astype(float)
    var_out = var_graph.sum(axis=1).astype(float)
    node_table = {
        "in_degree": in_deg,
        "out_degree": out_deg,
        "hierarchy": summ.mean_level,
        "cv_h": summ.cv,
        "var_in_degree": var_in,
        "var_out_degree": var_out,
        "out_degree_ratio": out_deg / (var_out + 1.0),
    }
    for k, v in (metadata or {}).items():
        node_table[k] = np.asarray(v, dtype=float)

    correlations = []
    for a, b in combinations(node_table, 2):
        try:
            rho, p = spearman(node_table[a], node_table[b])
        except UndefinedCorrelationError:
            rho, p = float("nan"), float("nan")
        correlations.append({"a": a, "b": b, "rho": rho, "p_value": p,
                             "stars": "" if np.isnan(p) else significance_stars(p)})

    ccdf_rows = []
    for label, g in [("var", var_graph), ("best", best.graph)] + [(f"sample_{k}", g) for k, g in enumerate(graphs)]:
        for kind, pts in degree_ccdf(g).items():
            ccdf_rows.extend((label, kind, d, frac) for d, frac in pts)

    f_mean = float(np.mean([s.fit_score for s in samples]))
    var_links = link_count(var_graph)
    mean_links = float(np.mean([link_count(g) for g in graphs]))
    table = [
        {"model": "VAR", "f": run.f_var, "mean_degree": mean_degree(var_graph), "height": None, "cv_h": None},
        {"model": "Mean DAG", "f": f_mean, "mean_degree": float(np.mean([mean_degree(g) for g in graphs])),
         "height": summ.mean_height, "cv_h": summ.mean_cv},
        {"model": "Best DAG", "f": best.fit_score, "mean_degree": mean_degree(best.graph),
         "height": int(best_levels.max()), "cv_h": None},
    ]
    summary = {
        "n_nodes": run.n,
        "n_samples": len(samples),
        "generations": gens,
        "table": table,
        "f_star_mean": f_mean / run.f_var,
        "f_star_best": best.fit_score / run.f_var,
        "link_ratio": mean_links / var_links if var_links else None,
        "height_max": summ.height,
        "constant_nodes": int((summ.std_level == 0).sum()),
    }
    return Analysis(summary, node_table, correlations, ccdf_rows, list(run.node_names))
