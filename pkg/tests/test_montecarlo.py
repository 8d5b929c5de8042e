import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intquant.dist import GappedUniform
from intquant.errors import DomainError
from intquant.montecarlo import (
    ExperimentConfig,
    ExperimentReport,
    asymptotic_upper_bias,
    gapped_sigma2,
    ks_vs_standard_normal,
    median_gap_probability,
    preset,
    run_bias_experiment,
    run_experiment,
    run_normality_experiment,
    vervaat_path,
    vervaat_paths,
)
from intquant.dist import Uniform
from intquant import _rng


def test_gapped_sigma2_values_and_shape():
    assert gapped_sigma2(0.0) == 5 / 48
    assert gapped_sigma2(0.5) == pytest.approx(77 / 192, abs=1e-15)
    assert gapped_sigma2(1.0) == 1.0
    a = np.linspace(0, 1, 101)
    vals = [gapped_sigma2(v) for v in a]
    assert np.all(np.diff(vals) > 0)
    with pytest.raises(DomainError):
        gapped_sigma2(1.5)


@pytest.mark.parametrize("a", [0.0, 0.25, 0.5, 0.9])
def test_gapped_sigma2_monte_carlo(a):
    z = GappedUniform(a).sample(_rng.stream(1, 2), 400_000)
    y = np.maximum(z - (1 - a), 0.0)
    assert y.var() == pytest.approx(gapped_sigma2(a), rel=0.02)


def test_median_gap_probability():
    assert median_gap_probability(2) == pytest.approx((0.25, 0.75), abs=1e-15)
    gt, lt = median_gap_probability(4)
    assert gt == pytest.approx(0.5 - 6 / 32)
    gt, lt = median_gap_probability(1000)
    assert abs(gt - 0.5) < 0.02 and gt + lt == pytest.approx(1.0)
    assert median_gap_probability(7, allow_odd=True) == (0.5, 0.5)
    with pytest.raises(DomainError):
        median_gap_probability(7)
    with pytest.raises(DomainError):
        median_gap_probability(1002)


def test_median_gap_monte_carlo_small():
    rep = run_experiment(preset("median-gap").with_overrides(n=(10,), m=20_000))
    row = rep.rows[0]
    assert abs(row["mc_gt"] - row["exact_gt"]) <= 3 * row["se_gt"]


def test_ks_statistic():
    assert ks_vs_standard_normal(np.zeros(10)) == pytest.approx(0.5)
    assert ks_vs_standard_normal(np.full(10, 10.0)) == pytest.approx(1.0)
    v = np.random.default_rng(0).standard_normal(5000)
    assert ks_vs_standard_normal(v) < 1.63 / math.sqrt(5000)
    with pytest.raises(DomainError):
        ks_vs_standard_normal([])


def test_ks_matches_scipy():
    from scipy import stats

    v = np.random.default_rng(1).standard_normal(300) * 1.1
    assert ks_vs_standard_normal(v) == pytest.approx(stats.kstest(v, "norm").statistic, abs=1e-12)


@given(st.integers(2, 300), st.integers(0, 1000))
@settings(max_examples=50, deadline=None)
def test_vervaat_nonnegative_with_zero_ends(n, seed):
    u = np.random.default_rng(seed).random(n)
    grid = np.linspace(0, 1, 257)
    v = vervaat_path(u, grid)
    assert v.min() >= -1e-12
    assert v[0] == 0.0 and abs(v[-1]) <= 1e-12


def test_vervaat_matches_direct_formula():
    u = np.random.default_rng(3).random(37)
    n = u.size
    us = np.sort(u)
    for p in (0.1, 0.37, 0.5, 0.81):
        k = math.ceil(round(n * p, 9))
        direct = us[:k].sum() / n - (k / n - p) * us[k - 1] + np.maximum(p - u, 0).sum() / n - p * p
        assert vervaat_path(u, [p])[0] == pytest.approx(n * direct, abs=1e-12)


def test_vervaat_mean_near_limit():
    grid = np.array([0.25, 0.5])
    paths, summary = vervaat_paths(2000, grid, m=400, seed=1)
    assert paths.shape == (400, 2)
    assert paths[:, 1].mean() == pytest.approx(0.125, rel=0.15)
    with pytest.raises(DomainError):
        vervaat_paths(10, [1.5])


def test_bias_experiment_shape_and_sign():
    cfg = ExperimentConfig("bias", "uniform:0,2", p=0.75, n=(40, 200), m=3000, seed=2)
    rep = run_bias_experiment(cfg)
    assert len(rep.rows) == 2
    assert all(r["mean"] < 0 for r in rep.rows)
    assert rep.rows[0]["asymptotic"] == pytest.approx(-3 / 640)
    assert asymptotic_upper_bias(Uniform(0, 2), 0.75, 1000) == pytest.approx(-0.0001875)


def test_bias_medians_less_extreme_than_means():
    rep = run_experiment(preset("table1-desk").with_overrides(m=4000))
    holds = sum(abs(r["median"]) <= abs(r["mean"]) for r in rep.rows)
    assert holds >= 4


def test_determinism_and_thread_invariance():
    cfg = ExperimentConfig("bias", "uniform:0,2", p=0.75, n=(50,), m=300, seed=9)
    a = run_experiment(cfg).to_json()
    b = run_experiment(cfg).to_json()
    c = run_experiment(cfg, threads=4).to_json()
    assert a == b == c
    d = run_experiment(cfg.with_overrides(seed=10)).to_json()
    assert a != d


def test_normality_experiment_rules():
    with pytest.raises(DomainError):
        run_normality_experiment(ExperimentConfig("normality", "uniform:0,2", p=0.5, n=(101,), m=10))
    cfg = ExperimentConfig("normality", "gapped:0", p=0.5, n=(2000,), m=200, seed=1)
    ref = ExperimentConfig("normality", "uniform:0,2", p=0.5, n=(2000,), m=200, seed=1)
    a, b = run_experiment(cfg), run_experiment(ref)
    # the a = 0 gapped law is Uniform(0, 2); both branches use the same sigma
    assert a.extra["sigma2"] == b.extra["sigma2"] == 5 / 48
    assert a.rows[0]["mean"] == pytest.approx(b.rows[0]["mean"], abs=1e-9)


def test_report_round_trip_and_outputs(tmp_path):
    cfg = ExperimentConfig("normality", "uniform:0,2", p=0.5, n=(200,), m=50, keep_replicates=True)
    rep = run_experiment(cfg)
    back = ExperimentReport.from_json(rep.to_json())
    assert back.to_dict() == json.loads(rep.to_json())
    assert back.rows == rep.rows
    csv_text = rep.to_csv()
    assert csv_text.splitlines()[0].startswith("n,mean,median,sd")
    dat = rep.to_dat().splitlines()
    assert len(dat) == 50 and len(dat[0].split()) == 2
    rep.write(tmp_path / "r.json")
    assert json.loads((tmp_path / "r.json").read_text())["config"]["m"] == 50


def test_config_validation_and_round_trip():
    cfg = preset("sim3-desk")
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(DomainError):
        ExperimentConfig("bias", m=0)
    with pytest.raises(DomainError):
        ExperimentConfig("bias", n=(1,))
    with pytest.raises(DomainError):
        ExperimentConfig("other")
    with pytest.raises(DomainError):
        ExperimentConfig.from_dict({"experiment": "bias", "colour": 1})
    with pytest.raises(DomainError):
        preset("nope")
