"""VAR(1) estimation, constraint-masked regressions and network extraction.

Orientation: ``coefficients[i, j]`` is the effect of source ``j`` at ``t-1`` on
target ``i`` at ``t``. A constraint mask is given in graph orientation
(``mask[j, i] == 1`` permits the link ``j -> i``), so target ``i`` regresses on
the sources ``{j : mask[j, i] == 1}``. Extracted networks are graph-oriented
too: ``graph[j, i] == 1`` when ``coefficients[i, j]`` is significant.
"""
from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import ndtri

from .graph import InvalidInputError


class SingularDesignError(ValueError):
    """The lagged design matrix is rank deficient."""

    def __init__(self, columns: list[str]):
        self.columns = columns
        super().__init__("singular design; offending columns: " + ", ".join(columns))


class PanelParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class TimeSeriesPanel:
    data: np.ndarray
    node_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        if data.ndim != 2:
            raise InvalidInputError("panel data must be a T x N matrix")
        t, n = data.shape
        names = list(self.node_names) or [f"y{i}" for i in range(n)]
        if len(names) != n:
            raise InvalidInputError(f"{len(names)} node names for {n} columns")
        if t < n + 2:
            raise InvalidInputError(f"need at least N + 2 = {n + 2} rows, got {t}")
        if not np.isfinite(data).all():
            raise InvalidInputError("panel contains non-finite values")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "node_names", names)

    @property
    def n_nodes(self) -> int:
        return self.data.shape[1]

    @property
    def n_steps(self) -> int:
        return self.data.shape[0]


def returns_from_prices(prices: np.ndarray) -> np.ndarray:
    """Log returns ``log(p_t / p_{t-1})``; drops the first row."""
    p = np.asarray(prices, dtype=float)
    if not np.isfinite(p).all() or (p <= 0).any():
        raise InvalidInputError("prices must be finite and strictly positive")
    return np.diff(np.log(p), axis=0)


def read_panel_csv(path, returns_from_prices_flag: bool = False) -> TimeSeriesPanel:
    """Read a panel CSV: header of node names, one row per time step.

    A leading ``timestamp`` column is skipped.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise PanelParseError("empty file", 1)
    header = [h.strip() for h in rows[0]]
    skip = 1 if header and header[0].lower() == "timestamp" else 0
    names = header[skip:]
    if not names:
        raise PanelParseError("no series columns in header", 1)
    body = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise PanelParseError(f"expected {len(header)} fields, got {len(row)}", lineno)
        try:
            values = [float(cell) for cell in row[skip:]]
        except ValueError:
            raise PanelParseError("non-numeric or missing cell", lineno) from None
        if not all(np.isfinite(values)):
            raise PanelParseError("non-finite value", lineno)
        body.append(values)
    data = np.array(body, dtype=float).reshape(len(body), len(names))
    if returns_from_prices_flag:
        data = returns_from_prices(data)
    return TimeSeriesPanel(data, names)


def format_panel_csv(panel: TimeSeriesPanel) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(panel.node_names)
    for row in panel.data:
        writer.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def write_panel_csv(panel: TimeSeriesPanel, path) -> None:
    Path(path).write_text(format_panel_csv(panel))


@dataclass(frozen=True)
class RecurrenceEstimate:
    coefficients: np.ndarray
    intercept: np.ndarray
    std_errors: np.ndarray
    residual_cov: np.ndarray
    fit_score: float
    mask: np.ndarray | None = None

    def to_json(self) -> dict:
        return {
            "coefficients": self.coefficients.tolist(),
            "intercept": self.intercept.tolist(),
            "std_errors": self.std_errors.tolist(),
            "residual_cov": self.residual_cov.tolist(),
            "fit_score": float(self.fit_score),
            "mask": None if self.mask is None else self.mask.astype(int).tolist(),
        }


@dataclass(frozen=True)
class CausalNetwork:
    graph: np.ndarray
    alpha: float
    t_values: np.ndarray

    def to_json(self, node_names=None) -> dict:
        from .graph import graph_to_json

        out = graph_to_json(self.graph, node_names)
        out["alpha"] = self.alpha
        out["t_values"] = self.t_values.tolist()
        return out


def normal_quantile(q: float) -> float:
    """Standard normal inverse CDF."""
    if not 0.0 < q < 1.0:
        raise InvalidInputError(f"quantile level must lie in (0, 1), got {q}")
    # evaluating on the lower tail keeps q and 1 - q exact negatives
    if q > 0.5:
        return -float(ndtri(1.0 - q))
    return float(ndtri(q))


def _lagged(panel: TimeSeriesPanel) -> tuple[np.ndarray, np.ndarray]:
    y = panel.data
    return y[:-1], y[1:]


def _check_design(x: np.ndarray, names: list[str]) -> None:
    n_obs = x.shape[0]
    xc = x - x.mean(axis=0)
    scale = np.abs(x).max(axis=0) + 1.0
    flat = np.sqrt((xc**2).sum(axis=0) / n_obs) <= 1e-12 * scale
    if flat.any():
        raise SingularDesignError([names[j] for j in np.flatnonzero(flat)])
    # remaining collinearity among the centred regressors
    _, r = np.linalg.qr(xc / np.sqrt((xc**2).sum(axis=0)))
    d = np.abs(np.diag(r))
    bad = d <= 1e-10 * d.max()
    if bad.any():
        raise SingularDesignError([names[j] for j in np.flatnonzero(bad)])


def _fit_target(x_lag, y_next, cols):
    """OLS with intercept of one target on the selected lagged columns."""
    n_obs = x_lag.shape[0]
    design = np.column_stack([np.ones(n_obs), x_lag[:, cols]])
    q, r = np.linalg.qr(design)
    beta = solve_triangular(r, q.T @ y_next)
    resid = y_next - design @ beta
    k = design.shape[1]
    s2 = resid @ resid / (n_obs - k)
    rinv = solve_triangular(r, np.eye(k))
    se = np.sqrt(s2 * (rinv**2).sum(axis=1))
    return beta, se, resid, k


def fit_constrained_var(panel: TimeSeriesPanel, mask, threads: int = 1) -> RecurrenceEstimate:
    """Per-target least squares restricted to the sources the mask permits.

    Excluded coefficients and their standard errors are exactly zero. The
    intercept is always estimated.
    """
    n = panel.n_nodes
    m = np.asarray(mask).astype(bool)
    if m.shape != (n, n):
        raise InvalidInputError(f"mask shape {m.shape} does not match {n} nodes")
    coef_mask = m.T.copy()
    np.fill_diagonal(coef_mask, True)
    x_lag, y_next = _lagged(panel)
    _check_design(x_lag, panel.node_names)
    n_obs = x_lag.shape[0]

    def one(i):
        return _fit_target(x_lag, y_next[:, i], np.flatnonzero(coef_mask[i]))

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(one, range(n)))
    else:
        results = [one(i) for i in range(n)]

    coefficients = np.zeros((n, n))
    std_errors = np.zeros((n, n))
    intercept = np.zeros(n)
    resid = np.empty((n_obs, n))
    dof = np.empty(n)
    for i, (beta, se, e, k) in enumerate(results):
        cols = np.flatnonzero(coef_mask[i])
        intercept[i] = beta[0]
        coefficients[i, cols] = beta[1:]
        std_errors[i, cols] = se[1:]
        resid[:, i] = e
        dof[i] = n_obs - k
    scale = 1.0 / np.sqrt(dof)
    residual_cov = (resid.T @ resid) * np.outer(scale, scale)
    sst = ((y_next - y_next.mean(axis=0)) ** 2).sum()
    fit_score = 1.0 - (resid**2).sum() / sst
    return RecurrenceEstimate(coefficients, intercept, std_errors, residual_cov, float(fit_score), m.astype(np.int8))


def fit_var(panel: TimeSeriesPanel, threads: int = 1) -> RecurrenceEstimate:
    """Unconstrained VAR(1) with intercept."""
    n = panel.n_nodes
    est = fit_constrained_var(panel, np.ones((n, n), dtype=np.int8), threads)
    return RecurrenceEstimate(est.coefficients, est.intercept, est.std_errors,
                              est.residual_cov, est.fit_score, None)


def significance_threshold(alpha: float) -> float:
    if not 0.0 < alpha < 1.0:
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}")
    return normal_quantile(1.0 - alpha / 2.0)


def network_from_coefficients(coefficients, std_errors, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Graph-oriented significance network and t-values; zero SE is never a link."""
    threshold = significance_threshold(alpha)
    se = np.asarray(std_errors)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, np.asarray(coefficients) / np.where(se > 0, se, 1.0), 0.0)
    graph = (np.abs(t) > threshold).T.astype(np.int8)
    return graph, t


def extract_network(est: RecurrenceEstimate, alpha: float = 0.05) -> CausalNetwork:
    graph, t = network_from_coefficients(est.coefficients, est.std_errors, alpha)
    return CausalNetwork(graph, alpha, t)


@dataclass(frozen=True)
class MaskedFit:
    """Lightweight per-mask result from :class:`LaggedDesign`."""

    coefficients: np.ndarray
    std_errors: np.ndarray
    sse: np.ndarray
    fit_score: float


class LaggedDesign:
    """Cached sufficient statistics of a panel for scoring many masks quickly.

    Works on column-centred data, which absorbs the intercept exactly and
    keeps the cross-product matrix well conditioned.
    """

    def __init__(self, panel: TimeSeriesPanel):
        x_lag, y_next = _lagged(panel)
        _check_design(x_lag, panel.node_names)
        xc = x_lag - x_lag.mean(axis=0)
        yc = y_next - y_next.mean(axis=0)
        self.n = panel.n_nodes
        self.n_obs = x_lag.shape[0]
        self.gram = xc.T @ xc
        self.xty = (xc.T @ yc).T  # row i: X' y_i
        self.yy = (yc**2).sum(axis=0)
        self.sst = float(self.yy.sum())

    def fit(self, mask) -> MaskedFit:
        inc = np.asarray(mask).astype(bool).T.copy()
        np.fill_diagonal(inc, True)
        n = self.n
        both = inc[:, :, None] & inc[:, None, :]
        g = np.where(both, self.gram[None], 0.0)
        idx = np.arange(n)
        g[:, idx, idx] += ~inc
        ginv = np.linalg.inv(g)
        r = np.where(inc, self.xty, 0.0)
        beta = np.einsum("tij,tj->ti", ginv, r) * inc
        sse = self.yy - (beta * r).sum(axis=1)
        k = inc.sum(axis=1) + 1
        s2 = sse / (self.n_obs - k)
        diag = np.diagonal(ginv, axis1=1, axis2=2)
        se = np.sqrt(np.clip(s2[:, None] * diag, 0.0, None)) * inc
        return MaskedFit(beta, se, sse, float(1.0 - sse.sum() / self.sst))

    def fit_levels(self, levels) -> MaskedFit:
        """Same result as ``fit(constraint_from_hierarchy(levels))``, in O(N^3).

        Sorting nodes by descending level makes every target's regressor set
        a prefix (all strictly higher nodes) plus the target itself, so one
        Cholesky factor of the sorted cross-product matrix serves all targets;
        each target only appends its own column.
        """
        h = np.asarray(levels)
        n = self.n
        order = np.argsort(-h, kind="stable")
        neg = -h[order]
        prefix = np.searchsorted(neg, neg, side="left")  # count of strictly higher nodes
        in_prefix = np.arange(n)[:, None] < prefix[None, :]  # [covariate k, target t]

        gs = self.gram[np.ix_(order, order)]
        chol = np.linalg.cholesky(gs)
        linv = solve_triangular(chol, np.eye(n), lower=True)
        rs = self.xty[np.ix_(order, order)].T  # [covariate k, target t]

        link = (linv @ np.where(in_prefix, gs, 0.0)) * in_prefix
        d = np.sqrt(np.diag(gs) - (link**2).sum(axis=0))
        z = (linv @ np.where(in_prefix, rs, 0.0)) * in_prefix
        z_self = (np.diag(rs) - (link * z).sum(axis=0)) / d
        sse = self.yy[order] - (z**2).sum(axis=0) - z_self**2

        b_self = z_self / d
        b = (linv.T @ (z - link * b_self)) * in_prefix
        w = (linv.T @ link) * in_prefix / d
        cum = np.vstack([np.zeros(n), np.cumsum(linv**2, axis=0)])
        var_prefix = (cum[prefix].T + w**2) * in_prefix
        s2 = sse / (self.n_obs - prefix - 2)

        coef_s = b.T + np.diag(b_self)
        se_s = np.sqrt(s2[:, None] * var_prefix.T) + np.diag(np.sqrt(s2) / d)
        coef = np.empty((n, n))
        se = np.empty((n, n))
        coef[np.ix_(order, order)] = coef_s
        se[np.ix_(order, order)] = se_s
        sse_out = np.empty(n)
        sse_out[order] = sse
        return MaskedFit(coef, se, sse_out, float(1.0 - sse_out.sum() / self.sst))

    def fit_many(self, masks, threads: int = 1) -> list[MaskedFit]:
        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                return list(pool.map(self.fit, masks))
        return [self.fit(m) for m in masks]

    def fit_many_levels(self, hierarchies, threads: int = 1) -> list[MaskedFit]:
        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                return list(pool.map(self.fit_levels, hierarchies))
        return [self.fit_levels(h) for h in hierarchies]
