import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intquant import _rng
from intquant.dist import GappedUniform, ParetoI, Sample, Uniform
from intquant.errors import DegenerateMeanError, DomainError
from intquant.risk import (
    MeasureEstimate,
    bootstrap_variance,
    gini_curve,
    gini_influence,
    lorenz,
    lorenz_influence,
    lower_sigma2,
    plugin_lower_sigma2,
    plugin_upper_sigma2,
    point_estimate,
    tvar_down,
    tvar_up,
    upper_sigma2,
)


def _draw(dist, n, seed=0):
    return dist.sample(_rng.stream(seed, 99), n)


def test_population_values():
    # Pareto(1,3): F^{-1}(u) = (1-u)^{-1/3}
    assert tvar_up(ParetoI(1, 3), 0.5) == pytest.approx(1.5 * 0.5 ** (-1 / 3), rel=1e-12)
    assert lorenz(ParetoI(1, 3), 7 / 8) == pytest.approx(0.75, rel=1e-12)
    assert gini_curve(Uniform(0, 2), 0.3) == pytest.approx(0.42, rel=1e-12)
    assert tvar_down(Uniform(0, 2), 0.5) == pytest.approx(0.5)
    assert tvar_up(Uniform(0, 2), 0.75) == pytest.approx(7 / 4)


def test_population_sigma2():
    assert upper_sigma2(Uniform(0, 2), 0.5) == pytest.approx(5 / 48, rel=1e-9)
    assert upper_sigma2(GappedUniform(0.5), 0.5) == pytest.approx(77 / 192, rel=1e-9)
    assert lower_sigma2(Uniform(0, 2), 0.5) == pytest.approx(5 / 48, rel=1e-9)


def test_estimate_structure_and_ci():
    x = _draw(Uniform(0, 2), 2000)
    est = tvar_up(x, 0.5)
    assert isinstance(est, MeasureEstimate)
    lo, hi = est.ci
    assert lo < est.estimate < hi
    assert hi - lo == pytest.approx(2 * 1.959963984540054 * est.stderr)
    d = est.to_dict()
    assert d["method"] == "plugin" and d["n"] == 2000
    assert est.variance == pytest.approx(plugin_upper_sigma2(x, 0.5) / 0.25)


def test_lorenz_influence_centred_and_consistent():
    x = _draw(ParetoI(1, 3), 5000)
    y = lorenz_influence(x, 0.5)
    assert abs(y.mean()) < 1e-12
    g = gini_influence(x, 0.3)
    assert np.allclose(g, lorenz_influence(x, 0.7) + lorenz_influence(x, 0.3))


def test_tvar_ci_coverage_uniform():
    hits = 0
    reps = 300
    for r in range(reps):
        x = Uniform(0, 2).sample(_rng.stream(5, 1, r), 400)
        lo, hi = tvar_up(x, 0.75).ci
        hits += lo <= 1.75 <= hi
    assert 0.90 <= hits / reps <= 0.99


def test_bootstrap_close_to_plugin_and_thread_invariant():
    x = _draw(Uniform(0, 2), 500)
    b1 = bootstrap_variance(x, "tvar-up", 0.5, B=400, seed=3)
    b2 = bootstrap_variance(x, "tvar-up", 0.5, B=400, seed=3, threads=3)
    assert b1 == b2
    plug = tvar_up(x, 0.5).variance
    assert b1 == pytest.approx(plug, rel=0.25)
    with pytest.raises(DomainError):
        bootstrap_variance(x, "tvar-up", 0.5, B=50)


def test_bootstrap_estimate_method():
    x = _draw(ParetoI(1, 4), 300)
    est = lorenz(x, 0.5, variance="bootstrap", B=200, seed=1)
    assert est.variance_method == "bootstrap" and est.stderr > 0


def test_errors_and_warnings():
    with pytest.raises(DomainError):
        tvar_up([1.0, 2.0], 1.0)
    with pytest.raises(DegenerateMeanError), pytest.warns(UserWarning):
        lorenz(np.array([-1.0, 1.0]), 0.5)
    with pytest.warns(UserWarning, match="negative"):
        lorenz(np.array([-1.0, 2.0, 3.0]), 0.5)
    with pytest.warns(UserWarning, match="continuous"):
        gini_curve(GappedUniform(0.5), 0.5)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        gini_curve(Uniform(0, 2), 0.3)
    with pytest.raises(DomainError):
        point_estimate("var", [1.0], 0.5)


@given(st.lists(st.floats(0.1, 100), min_size=2, max_size=60), st.floats(0.05, 0.95))
@settings(max_examples=80, deadline=None)
def test_measure_invariants(values, p):
    x = np.asarray(values)
    lc = point_estimate("lorenz", x, p)
    assert -1e-12 <= lc <= p + 1e-12  # LC(p) <= p for non-negative data
    up, down = point_estimate("tvar-up", x, p), point_estimate("tvar-down", x, p)
    assert down <= x.mean() + 1e-9 <= up + 2e-9
    gc = point_estimate("gini", x, min(p, 1 - p))
    assert gc >= -1e-9
    assert plugin_lower_sigma2(x, p) >= 0 and plugin_upper_sigma2(x, p) >= 0


def test_sample_input():
    s = Sample(_draw(Uniform(0, 2), 100))
    assert tvar_up(s, 0.5).estimate == pytest.approx(tvar_up(s.values, 0.5).estimate)
