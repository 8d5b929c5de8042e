import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intquant import _rng
from intquant.dist import (
    GappedUniform,
    Logistic,
    Mixture,
    Normal,
    ParetoI,
    Sample,
    StepCDF,
    Uniform,
    ceil_np,
    ecdf_quantile,
    make_dist,
    quantile_continuity_check,
    sup_distance,
)
from intquant.errors import DivergenceError, DomainError, UnboundedQuantileError

FAMILIES = [Uniform(0, 2), ParetoI(1, 3), GappedUniform(0.5), Normal(1, 2), Logistic(0, 1),
            Mixture([Uniform(0, 1), Normal(3, 1)], [0.4, 0.6])]

atoms = st.lists(st.floats(-50, 50, allow_nan=False), min_size=1, max_size=15)


@st.composite
def step_cdfs(draw):
    xs = draw(atoms)
    ws = draw(st.lists(st.floats(0.01, 1.0), min_size=len(xs), max_size=len(xs)))
    w = np.asarray(ws)
    return StepCDF(xs, w / w.sum())


def test_ceil_np_exact_at_grid_points():
    assert ceil_np(10, 0.3) == 3
    assert ceil_np(100, 0.07) == 7
    assert ceil_np(3, 1 / 3) == 1
    assert ceil_np(40, 0.75) == 30
    assert list(ceil_np(4, np.array([0.0, 0.25, 0.26, 1.0]))) == [0, 1, 2, 4]


def test_step_cdf_merges_ties_and_drops_zero_mass():
    F = StepCDF([1.0, 1.0, 2.0, 3.0], [0.25, 0.25, 0.0, 0.5])
    assert F.atoms.tolist() == [1.0, 3.0]
    assert F.masses.tolist() == [0.5, 0.5]
    with pytest.raises(DomainError):
        StepCDF([0.0, 1.0], [0.5, 0.4])
    with pytest.raises(DomainError):
        StepCDF([0.0, 1.0], [1.5, -0.5])


def test_step_quantile_is_left_continuous_inverse():
    F = StepCDF([0.0, 1.0, 2.0], [0.25, 0.5, 0.25])
    assert F.quantile(0.25) == 0.0
    assert F.quantile(0.2500001) == 1.0
    assert F.quantile(0.75) == 1.0
    assert F.quantile(0.0) == 0.0
    assert F.quantile(1.0) == 2.0
    assert F.cdf(1.0) == 0.75 and F.cdf_left(1.0) == 0.25


def test_sample_quantile_and_ecdf_agree():
    x = np.array([3.0, 1.0, 2.0, 5.0, 4.0])
    s = Sample(x)
    assert s.sorted.tolist() == [1, 2, 3, 4, 5]
    assert ecdf_quantile(s, 0.4) == 2.0
    assert ecdf_quantile(s, 0.41) == 3.0
    assert s.ecdf().quantile(0.4) == 2.0
    with pytest.raises(ValueError):
        s.sorted[0] = 7


def test_unbounded_quantile_errors():
    with pytest.raises(UnboundedQuantileError):
        Normal().quantile(0.0)
    with pytest.raises(UnboundedQuantileError):
        ParetoI(1, 3).quantile(1.0)
    assert ParetoI(1, 3).quantile(0.0) == 1.0
    with pytest.raises(DomainError):
        Uniform().quantile(1.2)


@pytest.mark.parametrize("dist", FAMILIES, ids=repr)
def test_quantile_inverts_cdf(dist):
    u = np.linspace(0.01, 0.99, 37)
    q = dist.quantile(u)
    assert np.all(np.diff(q) >= 0)
    assert np.all(dist.cdf(q) >= u - 1e-9)
    assert np.all(dist.cdf_left(q) <= u + 1e-9)


@pytest.mark.parametrize("dist", FAMILIES, ids=repr)
def test_closed_forms_match_quadrature(dist):
    from intquant.dist import quad_unit

    for a, b in [(0.0, 0.3), (0.2, 0.7), (0.5, 1.0), (0.0, 1.0)]:
        assert dist.quantile_integral(a, b) == pytest.approx(quad_unit(dist._ppf, a, b), rel=1e-8, abs=1e-10)


def test_known_population_values():
    assert Uniform(0, 2).quantile_integral(0.75, 1.0) == pytest.approx(7 / 16, abs=1e-15)
    assert GappedUniform(0.5).quantile_integral(0.5, 1.0) == pytest.approx(7 / 8, abs=1e-15)
    assert ParetoI(1, 3).mean == pytest.approx(1.5)
    assert GappedUniform(0.3).mean == 1.0
    with pytest.raises(DivergenceError):
        ParetoI(1, 1).quantile_integral(0.5, 1.0)


def test_gapped_limits():
    assert GappedUniform(0.0).cdf(0.7) == pytest.approx(Uniform(0, 2).cdf(0.7))
    g1 = GappedUniform(1.0)
    assert g1.quantile(0.5) == 0.0 and g1.quantile(0.51) == 2.0
    g = GappedUniform(0.5)
    assert g.quantile(0.5) == pytest.approx(0.5)
    assert g.cdf(1.0) == 0.5 and g.cdf(1.5) == 0.5


@given(step_cdfs())
@settings(max_examples=60, deadline=None)
def test_partials_satisfy_mean_identity(F):
    # integral_{-inf}^c F - integral_c^inf (1 - F) = c - mean
    for c in (-60.0, 0.0, 7.5, 60.0):
        assert F.lower_partial(c) - F.upper_partial(c) == pytest.approx(c - F.mean, abs=1e-9)


@given(step_cdfs(), st.floats(0, 1), st.floats(0, 1))
@settings(max_examples=80, deadline=None)
def test_step_quantile_integral_additive(F, a, b):
    a, b = min(a, b), max(a, b)
    m = 0.5 * (a + b)
    assert F.quantile_integral(a, b) == pytest.approx(F.quantile_integral(a, m) + F.quantile_integral(m, b), abs=1e-9)
    assert F.quantile_integral(0.0, 1.0) == pytest.approx(F.mean, abs=1e-9)


def test_sup_distance_exact_for_steps():
    F = StepCDF([0.0, 1.0], [0.5, 0.5])
    G = StepCDF([0.5], [1.0])
    assert sup_distance(F, G) == 0.5
    assert sup_distance(Uniform(0, 1), StepCDF([0.5], [1.0])) == pytest.approx(0.5)
    assert sup_distance(Uniform(0, 1), Uniform(0, 2)) == pytest.approx(0.5, abs=1e-3)


def test_quantile_continuity():
    assert quantile_continuity_check(Uniform(0, 2), 0.5)
    assert not quantile_continuity_check(GappedUniform(0.5), 0.5)
    assert quantile_continuity_check(GappedUniform(0.5), 0.3)


def test_sampling_is_seeded():
    a = Normal().sample(_rng.stream(3, 1, 4), 5)
    b = Normal().sample(_rng.stream(3, 1, 4), 5)
    c = Normal().sample(_rng.stream(3, 1, 5), 5)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_make_dist_round_trip():
    for d in FAMILIES + [StepCDF([0, 1], [0.5, 0.5])]:
        assert make_dist(d.describe()).describe() == d.describe()
    assert isinstance(make_dist("pareto:1,3"), ParetoI)
    with pytest.raises(DomainError):
        make_dist("cauchy:0,1")


def test_mixture_contaminated():
    m = Mixture.contaminated(Uniform(0, 1), Uniform(10, 11), 0.1)
    assert m.mean == pytest.approx(0.9 * 0.5 + 0.1 * 10.5)
    assert m.quantile(0.95) == pytest.approx(10.5, abs=1e-9)
    assert math.isclose(m.cdf(1.0), 0.9)
