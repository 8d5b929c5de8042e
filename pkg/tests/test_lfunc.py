import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intquant.dist import GappedUniform, Logistic, Normal, ParetoI, StepCDF, Uniform
from intquant.errors import DomainError
from intquant.layers import random_step_cdf
from intquant.lfunc import (
    WeightFunction,
    WeightPiece,
    builtin,
    check_monotone,
    constant,
    domination_constant,
    gini_shortfall,
    gmd,
    kw_identity_check,
    l_integral_direct,
    l_integral_layered,
    logistic_location,
    monotone_inverse,
    normal_scale,
    reduce_partition,
    tail_gini,
    tvar_up_weight,
)
from intquant.risk import tvar_up


def _lin(a, b):
    return lambda u: a + b * np.asarray(u, dtype=float)


def test_known_values():
    # weight 4u - 2 gives the Gini mean difference E|X - X'|
    assert l_integral_direct(Uniform(0, 1), gmd()) == pytest.approx(1 / 3, rel=1e-10)
    assert l_integral_direct(Normal(0, 2), normal_scale()) == pytest.approx(2.0, rel=1e-9)
    assert l_integral_direct(Uniform(0, 2), constant(3.0)) == pytest.approx(3.0)
    assert l_integral_direct(Logistic(1.5, 2), logistic_location()) == pytest.approx(1.5, abs=1e-9)


@pytest.mark.parametrize("w", [gmd(), logistic_location(), logistic_location("polynomial"), tail_gini(0.5),
                               gini_shortfall(0.5, 0.3), normal_scale(), constant(-2.0)], ids=repr)
@pytest.mark.parametrize("dist", [Uniform(0, 1), ParetoI(1, 3), Normal(1, 2), GappedUniform(0.5)], ids=repr)
def test_direct_equals_layered(w, dist):
    a, b = l_integral_direct(dist, w), l_integral_layered(dist, w)
    assert b == pytest.approx(a, rel=1e-7, abs=1e-9)


@given(st.integers(0, 2**32 - 1), st.floats(0.05, 0.95))
@settings(max_examples=40, deadline=None)
def test_step_paths_agree(seed, p):
    F = random_step_cdf(np.random.default_rng(seed))
    for w in (gmd(), tail_gini(p), gini_shortfall(p, 0.5)):
        assert l_integral_layered(F, w) == pytest.approx(l_integral_direct(F, w), abs=1e-8)


def test_shortfall_reduces_to_tvar():
    for p in (0.1, 0.5, 0.8):
        for d in (Uniform(0, 2), ParetoI(1, 3)):
            assert l_integral_direct(d, gini_shortfall(p, 0.0)) == pytest.approx(tvar_up(d, p), abs=1e-9)
            assert l_integral_direct(d, tvar_up_weight(p)) == pytest.approx(tvar_up(d, p), abs=1e-9)


@pytest.mark.parametrize("w", [gmd(), tail_gini(0.3), gini_shortfall(0.4, 0.2)], ids=repr)
def test_kw_identity(w):
    rng = np.random.default_rng(5)
    for _ in range(10):
        F, G = random_step_cdf(rng), random_step_cdf(rng)
        assert abs(kw_identity_check(F, G, w)) < 1e-10
    assert abs(kw_identity_check(Uniform(0, 1), Uniform(0, 2), w)) < 1e-7


def test_kw_closed_form_matches_quadrature():
    for w in (gmd(), tail_gini(0.4), gini_shortfall(0.4, 0.7), logistic_location()):
        plain = WeightFunction(w.pieces, "copy", breaks=w.breaks)
        for t in (0.1, 0.4, 0.75, 1.0):
            assert w.kw(t) == pytest.approx(plain.kw(t), abs=1e-9)


def test_monotone_inverse():
    f = _lin(0, 2)
    assert monotone_inverse(f, 0.0, 1.0, 1.0) == pytest.approx(0.5, abs=1e-12)
    assert monotone_inverse(f, 0.0, 1.0, -1.0) == 0.0
    assert monotone_inverse(f, 0.0, 1.0, 5.0) == 1.0


def _zigzag():
    zero = _lin(0, 0)
    return WeightFunction([
        WeightPiece(0.0, 0.25, _lin(0, 4), zero),
        WeightPiece(0.25, 0.5, zero, _lin(-2, 4)),
        WeightPiece(0.5, 0.75, _lin(-1.5, 3), _lin(0.3, 0)),
        WeightPiece(0.75, 1.0, zero, _lin(-3, 4)),
    ], "zigzag")


def test_reduce_partition():
    w = _zigzag()
    r = reduce_partition(w)
    assert w.K == 4 and r.K == 2
    u = np.linspace(0, 1, 20001)
    assert np.max(np.abs(r(u) - w(u))) <= 1e-12
    assert check_monotone(r)
    for d in (Uniform(0, 2), ParetoI(1, 3)):
        assert l_integral_layered(d, r) == pytest.approx(l_integral_direct(d, w), rel=1e-7)
    assert reduce_partition(gmd()) is not None


def test_domination_constants():
    assert domination_constant(gmd()) < math.inf
    assert domination_constant(tail_gini(0.5)) < math.inf
    assert domination_constant(logistic_location("polynomial")) < math.inf


def test_builtin_registry():
    assert builtin("tail_gini", p=0.3).name.startswith("tail-gini")
    with pytest.raises(DomainError):
        builtin("nope")
    with pytest.raises(DomainError):
        builtin("gmd", p=0.5)
    with pytest.raises(DomainError):
        gini_shortfall(0.5, -1.0)


def test_weight_validation():
    with pytest.raises(DomainError):
        WeightFunction([WeightPiece(0.1, 1.0, _lin(0, 1), _lin(0, 0))])
    with pytest.raises(DomainError):
        WeightFunction([WeightPiece(0.0, 0.5, _lin(0, 1), _lin(0, 0)),
                        WeightPiece(0.6, 1.0, _lin(0, 1), _lin(0, 0))])


def test_sample_input_uses_ecdf():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    assert l_integral_direct(x, gmd()) == pytest.approx(l_integral_direct(StepCDF.from_sample(x), gmd()))
