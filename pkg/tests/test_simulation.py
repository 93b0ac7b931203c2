import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from heave.graph import InvalidInputError, canonicalize, is_acyclic, is_consistent
from heave.simulation import (
    ProcessSpec,
    effective_link_rate,
    enforce_dag,
    gen_covariance,
    gen_recurrence,
    load_ground_truth,
    make_ground_truth,
    save_ground_truth,
    simulate_panel,
    spectral_radius,
)
from heave.var import fit_var


def test_covariance_unit_eigenvalues_is_identity():
    cov = gen_covariance(6, np.random.default_rng(0), eigenvalues=np.ones(6))
    np.testing.assert_allclose(cov, np.eye(6), atol=1e-12)


def test_covariance_spd():
    cov = gen_covariance(5, np.random.default_rng(3))
    assert np.abs(cov - cov.T).max() < 1e-12
    assert np.linalg.eigvalsh(cov).min() > 0


@pytest.mark.parametrize("seed", range(5))
def test_covariance_eigenvalue_round_trip(seed):
    n = 7
    cov = gen_covariance(n, np.random.default_rng(seed))
    # the eigenvalues are the first n normal draws of the same stream
    expected = np.sort(np.abs(np.random.default_rng(seed).standard_normal(n)))
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(cov)), expected, atol=1e-8, rtol=0)


@given(st.integers(2, 25), st.floats(0.05, 1.0), st.integers(0, 10**6))
def test_recurrence_spectral_radius(n, p, seed):
    a, support = gen_recurrence(n, p, 1.05, np.random.default_rng(seed))
    assert abs(spectral_radius(a) - 1 / 1.05) < 1e-6
    np.testing.assert_array_equal(a != 0, support.astype(bool))


def test_recurrence_dense_two_nodes():
    a, support = gen_recurrence(2, 1.0, 1.05, np.random.default_rng(0))
    assert support.all()
    assert abs(spectral_radius(a) - 1 / 1.05) < 1e-9


def test_recurrence_edge_count_binomial():
    rng = np.random.default_rng(42)
    total = sum(int(gen_recurrence(30, 0.25, 1.05, rng)[1].sum()) for _ in range(100))
    mean, sd = 100 * 900 * 0.25, np.sqrt(100 * 900 * 0.25 * 0.75)
    assert abs(total - mean) < 4 * sd


def test_dag_enforcement_removal_rate():
    n = 30
    rng = np.random.default_rng(7)
    off = ~np.eye(n, dtype=bool)
    rates = []
    for _ in range(200):
        a, _ = gen_recurrence(n, 0.25, 1.05, rng)
        masked, _ = enforce_dag(a, rng)
        before = (a != 0) & off
        rates.append(((masked == 0) & before).sum() / before.sum())
    assert abs(np.mean(rates) - (n + 1) / (2 * n)) < 0.02


@given(st.integers(2, 20), st.integers(0, 10**6))
def test_dag_enforcement_structure(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    masked, levels = enforce_dag(a, rng)
    np.testing.assert_array_equal(np.diag(masked), np.diag(a))
    network = (masked != 0).T
    assert is_acyclic(network)
    assert is_consistent(network, levels)


def test_white_noise_sample_covariance():
    rng = np.random.default_rng(1)
    cov = gen_covariance(4, rng)
    panel = simulate_panel(np.zeros((4, 4)), cov, 10_000, rng)
    sample = np.cov(panel.data.T)
    assert np.linalg.norm(sample - cov) / np.linalg.norm(cov) < 0.10


def test_ar1_autocorrelation():
    panel = simulate_panel(0.9 * np.eye(3), np.eye(3), 10_000, np.random.default_rng(2))
    for y in panel.data.T:
        assert abs(np.corrcoef(y[:-1], y[1:])[0, 1] - 0.9) < 0.03


def test_refit_coverage():
    truth = make_ground_truth(ProcessSpec(10, seed=5))
    est = fit_var(truth.panel)
    inside = np.abs(est.coefficients - truth.recurrence) <= 4 * est.std_errors
    assert inside.mean() >= 0.95


def test_non_stationary_rejected():
    with pytest.raises(InvalidInputError):
        simulate_panel(1.01 * np.eye(2), np.eye(2), 100, np.random.default_rng(0))


def test_ground_truth_shapes_and_consistency():
    truth = make_ground_truth(ProcessSpec(30, seed=1))
    assert truth.panel.data.shape == (900, 30)
    assert is_consistent(truth.network, truth.hierarchy)
    assert is_consistent(truth.network, canonicalize(truth.network))
    assert spectral_radius(truth.recurrence) <= 1 / 1.05 + 1e-12
    np.testing.assert_allclose(truth.covariance, truth.covariance.T)


def test_effective_link_rate():
    rates = [effective_link_rate(make_ground_truth(ProcessSpec(30, t_steps=32, seed=s)).network) for s in range(100)]
    assert abs(np.mean(rates) - 0.25 * 29 / 60) < 0.02


def test_no_drift_after_burn_in():
    diffs = []
    for seed in range(60):
        y = make_ground_truth(ProcessSpec(10, seed=seed)).panel.data[:, 0]
        diffs.append(y[:100].mean() - y[-100:].mean())
    diffs = np.array(diffs)
    assert abs(diffs.mean()) < 4 * diffs.std(ddof=1) / np.sqrt(diffs.size)


@pytest.mark.parametrize("kwargs", [dict(n_nodes=1), dict(n_nodes=5, edge_prob=0.0), dict(n_nodes=5, margin=1.0)])
def test_invalid_spec(kwargs):
    with pytest.raises(InvalidInputError):
        ProcessSpec(**kwargs)


def test_save_load_round_trip(tmp_path):
    spec = ProcessSpec(6, seed=9)
    truth = make_ground_truth(spec)
    save_ground_truth(truth, tmp_path / "a")
    save_ground_truth(make_ground_truth(spec), tmp_path / "b")
    for name in ("panel.csv", "truth.json", "spec.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    back = load_ground_truth(tmp_path / "a")
    np.testing.assert_array_equal(back.recurrence, truth.recurrence)
    np.testing.assert_array_equal(back.network, truth.network)
    np.testing.assert_array_equal(back.panel.data, truth.panel.data)
    assert back.spec == spec
