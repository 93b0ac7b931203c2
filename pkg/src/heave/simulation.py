"""Synthetic DAG-constrained VAR(1) processes with known ground truth."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .graph import InvalidInputError, constraint_from_hierarchy, from_edges, graph_to_json
from .var import TimeSeriesPanel, format_panel_csv, read_panel_csv

BURN_IN = 200


@dataclass(frozen=True)
class ProcessSpec:
    n_nodes: int
    edge_prob: float = 0.25
    t_steps: int | None = None  # defaults to 30 * n_nodes
    margin: float = 1.05
    seed: int = 0

    def __post_init__(self):
        if self.n_nodes < 2:
            raise InvalidInputError("n_nodes must be at least 2")
        if not 0.0 < self.edge_prob <= 1.0:
            raise InvalidInputError("edge_prob must lie in (0, 1]")
        if self.margin <= 1.0:
            raise InvalidInputError("margin must exceed 1")
        if self.t_steps is None:
            object.__setattr__(self, "t_steps", 30 * self.n_nodes)
        if self.t_steps < self.n_nodes + 2:
            raise InvalidInputError("t_steps must be at least n_nodes + 2")


@dataclass(frozen=True)
class GroundTruth:
    recurrence: np.ndarray
    covariance: np.ndarray
    hierarchy: np.ndarray
    network: np.ndarray
    panel: TimeSeriesPanel
    spec: ProcessSpec | None = None


def spectral_radius(a) -> float:
    return float(np.abs(np.linalg.eigvals(a)).max())


def gen_covariance(n: int, rng: np.random.Generator, eigenvalues=None) -> np.ndarray:
    """Random SPD matrix ``Q diag(lam) Q'`` with ``lam ~ |N(0, 1)|`` and Q from a Gaussian QR."""
    if n < 1:
        raise InvalidInputError("n must be positive")
    if eigenvalues is None:
        lam = np.abs(rng.standard_normal(n))
        while (lam == 0).any():
            lam = np.abs(rng.standard_normal(n))
    else:
        lam = np.asarray(eigenvalues, dtype=float)
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    cov = (q * lam) @ q.T
    return (cov + cov.T) / 2


def gen_recurrence(n: int, p_edge: float, margin: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Sparse Gaussian recurrence matrix scaled to spectral radius ``1 / margin``.

    Returns the matrix and its support (coefficient orientation). Draws with
    no edges or with a nilpotent support are resampled.
    """
    if n < 2:
        raise InvalidInputError("n must be at least 2")
    while True:
        support = rng.random((n, n)) < p_edge
        weights = rng.standard_normal((n, n))
        a = np.where(support, weights, 0.0)
        if not support.any():
            continue
        rho = spectral_radius(a)
        if rho < 1e-8:
            continue
        return a / (rho * margin), support.astype(np.int8)


def enforce_dag(a, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Keep only links consistent with a uniform random hierarchy.

    Coefficient ``a[i, j]`` (source j, target i) survives iff level(j) >
    level(i), or i == j.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    levels = rng.integers(1, n + 1, size=n)
    mask = constraint_from_hierarchy(levels)
    return a * mask.T, levels


def simulate_panel(a, cov, t_steps: int, rng: np.random.Generator, burn_in: int = BURN_IN) -> TimeSeriesPanel:
    """Iterate ``y_t = A y_{t-1} + e_t`` from zero with Gaussian noise, dropping a burn-in."""
    a = np.asarray(a, dtype=float)
    cov = np.asarray(cov, dtype=float)
    if spectral_radius(a) >= 1.0:
        raise InvalidInputError("recurrence matrix is not stationary")
    lam, q = np.linalg.eigh(cov)
    if lam.min() <= 0:
        raise InvalidInputError("covariance must be positive definite")
    root = (q * np.sqrt(lam)) @ q.T
    n = a.shape[0]
    noise = rng.standard_normal((burn_in + t_steps, n)) @ root
    y = np.zeros(n)
    out = np.empty((t_steps, n))
    for t in range(burn_in + t_steps):
        y = a @ y + noise[t]
        if t >= burn_in:
            out[t - burn_in] = y
    return TimeSeriesPanel(out, [f"y{i}" for i in range(n)])


def make_ground_truth(spec: ProcessSpec) -> GroundTruth:
    """Covariance, sparse recurrence, DAG enforcement, then a simulated panel.

    A masked recurrence can have a larger spectral radius than the unmasked
    one (its eigenvalues become the diagonal); such draws are rejected.
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.n_nodes
    cov = gen_covariance(n, rng)
    while True:
        a, _ = gen_recurrence(n, spec.edge_prob, spec.margin, rng)
        a_dag, levels = enforce_dag(a, rng)
        if spectral_radius(a_dag) <= 1.0 / spec.margin:
            break
    network = (a_dag != 0).T.astype(np.int8)
    np.fill_diagonal(network, 0)
    panel = simulate_panel(a_dag, cov, spec.t_steps, rng)
    return GroundTruth(a_dag, cov, levels, network, panel, spec)


def effective_link_rate(network) -> float:
    g = np.asarray(network, dtype=bool)
    n = g.shape[0]
    off = g.sum() - np.trace(g)
    return float(off / (n * (n - 1)))


def save_ground_truth(truth: GroundTruth, directory) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    (d / "panel.csv").write_text(format_panel_csv(truth.panel))
    payload = {
        "recurrence": truth.recurrence.tolist(),
        "covariance": truth.covariance.tolist(),
        "hierarchy": {"levels": [int(x) for x in truth.hierarchy]},
        "network": graph_to_json(truth.network, truth.panel.node_names),
    }
    (d / "truth.json").write_text(json.dumps(payload, indent=1) + "\n")
    if truth.spec is not None:
        (d / "spec.json").write_text(json.dumps(asdict(truth.spec), indent=1) + "\n")


def load_ground_truth(directory) -> GroundTruth:
    d = Path(directory)
    payload = json.loads((d / "truth.json").read_text())
    panel = read_panel_csv(d / "panel.csv")
    net = payload["network"]
    spec = None
    if (d / "spec.json").exists():
        spec = ProcessSpec(**json.loads((d / "spec.json").read_text()))
    return GroundTruth(
        np.array(payload["recurrence"]),
        np.array(payload["covariance"]),
        np.array(payload["hierarchy"]["levels"]),
        from_edges(int(net["n"]), net["edges"]),
        panel,
        spec,
    )
