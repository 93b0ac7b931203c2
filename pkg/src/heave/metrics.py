"""Scores for fitted networks and summaries of sampled hierarchies."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from .graph import InvalidInputError, canonicalize, off_diagonal


class UndefinedCorrelationError(ValueError):
    pass


@dataclass
class ScoreReport:
    f_raw: float
    f_star: float
    link_count: float
    mean_degree: float
    h_score: float | None = None
    f1: float | None = None
    f_star_best: float | None = None

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class HierarchySummary:
    mean_level: np.ndarray
    std_level: np.ndarray
    cv: np.ndarray
    height: int
    mean_height: float

    @property
    def mean_cv(self) -> float:
        return float(self.cv.mean())

    def to_json(self, node_names=None) -> dict:
        return {
            "node_names": None if node_names is None else list(node_names),
            "mean_level": self.mean_level.tolist(),
            "std_level": self.std_level.tolist(),
            "cv": self.cv.tolist(),
            "height": int(self.height),
            "mean_height": float(self.mean_height),
            "mean_cv": self.mean_cv,
        }


def h_score(est_graph, truth_levels) -> float:
    """Agreement of permissible-link labels over all ordered off-diagonal pairs.

    The estimate is canonicalized first; labels are ``level(i) > level(j)``.
    """
    est_levels = canonicalize(est_graph)
    truth = np.asarray(truth_levels)
    if truth.shape != est_levels.shape:
        raise InvalidInputError("hierarchy and network sizes differ")
    n = truth.size
    if n < 2:
        return 1.0
    agree = (est_levels[:, None] > est_levels[None, :]) == (truth[:, None] > truth[None, :])
    return float((agree.sum() - n) / (n * (n - 1)))


def f1_score(est_graph, truth_graph) -> float:
    """Link-classification F1 over off-diagonal entries; empty denominators give 0."""
    est = off_diagonal(est_graph)
    truth = off_diagonal(truth_graph)
    if est.shape != truth.shape:
        raise InvalidInputError("graphs have different sizes")
    tp = int((est & truth).sum())
    fp = int((est & ~truth).sum())
    fn = int((~est & truth).sum())
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def f_star(f_constrained: float, f_unconstrained: float) -> float:
    if not f_unconstrained > 0:
        raise InvalidInputError("unconstrained fit score must be positive")
    return f_constrained / f_unconstrained


def link_count(graph) -> int:
    return int(off_diagonal(graph).sum())


def mean_degree(graph) -> float:
    """Average out-degree (equivalently in-degree), self-loops excluded."""
    g = off_diagonal(graph)
    return float(g.sum() / g.shape[0])


def summarize_population(samples) -> HierarchySummary:
    """Per-node canonical-level statistics across sampled DAGs (population std)."""
    samples = list(samples)
    if len(samples) < 2:
        raise InvalidInputError("need at least two sampled networks")
    levels = np.array([canonicalize(g) for g in samples], dtype=float)
    mean = levels.mean(axis=0)
    std = levels.std(axis=0)
    cv = np.where(std == 0, 0.0, std / mean)
    heights = levels.max(axis=1)
    return HierarchySummary(mean, std, cv, int(heights.max()), float(heights.mean()))


def _ccdf(degrees: np.ndarray) -> list[tuple[int, float]]:
    n = degrees.size
    top = int(degrees.max()) if n else 0
    return [(k, float((degrees >= k).sum() / n)) for k in range(top + 2)]


def degree_ccdf(graph) -> dict[str, list[tuple[int, float]]]:
    """Fraction of nodes with degree >= k, for in/out/total degree."""
    g = off_diagonal(graph)
    return {
        "in": _ccdf(g.sum(axis=0)),
        "out": _ccdf(g.sum(axis=1)),
        "total": _ccdf(g.sum(axis=0) + g.sum(axis=1)),
    }


def spearman(x, y) -> tuple[float, float]:
    """Rank correlation with mid-ranks; two-sided p-value from the t approximation."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size < 3:
        raise InvalidInputError("spearman needs two equal-length samples of size >= 3")
    rx = stats.rankdata(x)
    ry = stats.rankdata(y)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    denom = np.sqrt((dx**2).sum() * (dy**2).sum())
    if denom == 0:
        raise UndefinedCorrelationError("zero rank variance")
    rho = float(np.clip((dx * dy).sum() / denom, -1.0, 1.0))
    n = x.size
    if abs(rho) == 1.0:
        return rho, 0.0
    t = rho * np.sqrt((n - 2) / (1 - rho**2))
    return rho, float(2 * stats.t.sf(abs(t), n - 2))


def significance_stars(p: float) -> str:
    if p <= 0.001:
        return "***"
    if p <= 0.01:
        return "**"
    if p <= 0.05:
        return "*"
    return ""


def bootstrap_mean_ci(samples, level: float = 0.95, draws: int = 2000,
                      rng: np.random.Generator | None = None) -> tuple[float, float]:
    """Percentile bootstrap interval for the mean."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise InvalidInputError("need at least two samples")
    if not 0.0 < level < 1.0:
        raise InvalidInputError("level must lie in (0, 1)")
    rng = np.random.default_rng(0) if rng is None else rng
    means = x[rng.integers(0, x.size, size=(draws, x.size))].mean(axis=1)
    tail = (1 - level) / 2
    low, high = np.quantile(means, [tail, 1 - tail])
    m = x.mean()
    return float(min(low, m)), float(max(high, m))
