"""Variant comparison on simulated ground truths."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace

import numpy as np

from .evolution import EAConfig, GenerationTrace, Objective, run
from .metrics import bootstrap_mean_ci
from .simulation import GroundTruth, ProcessSpec, make_ground_truth

STATS = ("mean_fstar", "best_fstar", "mean_hscore", "mean_f1")


@dataclass
class BenchmarkResult:
    variants: list[str]
    seeds: list[int]
    traces: dict[str, list[list[GenerationTrace]]]  # variant -> per-dataset traces

    def final_means(self, variant: str, last: int = 5) -> np.ndarray:
        """Per-dataset means over the final generations, columns ordered as STATS."""
        rows = []
        for tr in self.traces[variant]:
            tail = tr[-last:]
            rows.append([np.mean([getattr(t, s) for t in tail]) for s in STATS])
        return np.array(rows)

    def table(self, last: int = 5) -> list[dict]:
        out = []
        for v in self.variants:
            m = self.final_means(v, last).mean(axis=0)
            out.append({"model": v, **{s: float(x) for s, x in zip(STATS, m)}})
        return out

    def table_csv(self, last: int = 5) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("model",) + STATS)
        for row in self.table(last):
            w.writerow([row["model"]] + [f"{row[s]:.4f}" for s in STATS])
        return buf.getvalue()

    def per_generation_csv(self, level: float = 0.95, draws: int = 2000) -> str:
        """Mean across datasets per generation with percentile-bootstrap bounds."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["variant", "generation", "statistic", "mean", "ci_low", "ci_high"])
        rng = np.random.default_rng(0)
        for v in self.variants:
            n_gen = len(self.traces[v][0])
            for g in range(n_gen):
                for s in STATS:
                    x = np.array([getattr(tr[g], s) for tr in self.traces[v]], dtype=float)
                    if len(x) >= 2:
                        lo, hi = bootstrap_mean_ci(x, level, draws, rng)
                    else:
                        lo = hi = float(x[0])
                    w.writerow([v, self.traces[v][0][g].generation, s, repr(float(x.mean())), repr(lo), repr(hi)])
        return buf.getvalue()


def run_benchmark(n_nodes: int, seeds, variants, base: EAConfig | None = None,
                  edge_prob: float = 0.25, progress=None) -> BenchmarkResult:
    base = base or EAConfig()
    seeds = list(seeds)
    traces: dict[str, list] = {v: [] for v in variants}
    for seed in seeds:
        truth: GroundTruth = make_ground_truth(ProcessSpec(n_nodes, edge_prob=edge_prob, seed=seed))
        objective = Objective(truth.panel, base.alpha, base.threads, truth.network)
        for v in variants:
            res = run(truth.panel, replace(base, variant=v, seed=seed), objective=objective)
            traces[v].append(res.traces)
            if progress is not None:
                progress(seed, v, res)
    return BenchmarkResult(list(variants), seeds, traces)
