import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stein_tpa import bounds
from stein_tpa.antivoter import antivoter_model, complete_graph
from stein_tpa.bounds import (
    BoundIngredients,
    BoundReport,
    antivoter_report,
    antivoter_var_s_bound,
    exact_distances,
    full_report,
    hyp_var_s_bound,
    loc_bound,
    loc_bound_lipschitz,
    moment_bounds,
    parity_var_s_bound,
    pb_refined_tv_bound,
    pb_tv_bound,
    qmax_bound,
    tv_bound,
)
from stein_tpa.dist import moments
from stein_tpa.errors import InvalidParameterError, MissingIngredientError
from stein_tpa.models import build_binomial, build_hypergeometric, build_parity, var_s

BINOM_100 = BoundIngredients(lam=0.01, sigma2=25.0, var_s=0.125 * 0.5 / 100)


def test_constant_term_only():
    ing = BoundIngredients(lam=0.3, sigma2=8.0, var_s=0.0)
    assert tv_bound(ing) == 2 / 8
    assert loc_bound(ing) == 2 / 8
    lip = BoundIngredients(lam=0.3, sigma2=8.0, var_s=0.0, lipschitz_s=0.0, loc_bound_value=0.25)
    assert loc_bound_lipschitz(lip) == 2 / 8


def test_binomial_tv_bound_value():
    assert tv_bound(BINOM_100) == pytest.approx(0.18, rel=1e-14)
    assert pb_tv_bound([0.5] * 100) == pytest.approx(0.18, rel=1e-14)
    assert pb_tv_bound([0.5]) == pytest.approx(9.0)


def test_loc_bound_monotone_in_qmax():
    a = BoundIngredients(lam=0.2, sigma2=4.0, var_s=0.01, q_max=0.2)
    b = BoundIngredients(lam=0.2, sigma2=4.0, var_s=0.01, q_max=0.4)
    assert loc_bound(b) > loc_bound(a)


def test_lipschitz_bound_needs_ingredients():
    with pytest.raises(MissingIngredientError):
        loc_bound_lipschitz(BoundIngredients(lam=0.2, sigma2=4.0, var_s=0.01, loc_bound_value=0.1))
    with pytest.raises(MissingIngredientError):
        loc_bound_lipschitz(BoundIngredients(lam=0.2, sigma2=4.0, var_s=0.01, lipschitz_s=0.1))


def test_ingredient_validation():
    with pytest.raises(InvalidParameterError):
        BoundIngredients(lam=0.0, sigma2=1.0, var_s=0.0)
    with pytest.raises(InvalidParameterError):
        BoundIngredients(lam=0.5, sigma2=0.0, var_s=0.0)
    with pytest.raises(InvalidParameterError):
        BoundIngredients(lam=0.5, sigma2=1.0, var_s=-1.0)
    with pytest.raises(InvalidParameterError):
        BoundIngredients(lam=0.5, sigma2=1.0, var_s=0.0, q_max=0.0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.001, 0.999), min_size=1, max_size=60))
def test_pb_bound_is_the_general_bound_specialized(p):
    n = len(p)
    p = np.asarray(p)
    ing = BoundIngredients(lam=1 / n, sigma2=float(np.sum(p * (1 - p))), var_s=float(np.sum(p**3 * (1 - p))) / n**2)
    assert tv_bound(ing) == pytest.approx(pb_tv_bound(p), rel=1e-14)


def test_refined_bound_in_poisson_regime():
    p = [0.01] * 100
    m = build_binomial(100, 0.01)
    _, tp, (dtv, _), _ = exact_distances(m.w_pmf)
    assert tp.s == 0
    value = pb_refined_tv_bound(p)
    assert dtv <= value < 0.05


def test_refined_bound_indicator():
    # sum p^2 < 1: no exponential term
    p = [0.05] * 100
    s2 = 100 * 0.05 * 0.95
    frac = 0.25
    expected = -math.expm1(-(s2 + frac)) / (s2 + frac) * (math.sqrt(100 * 0.05**3 * 0.95) + frac)
    assert pb_refined_tv_bound(p) == pytest.approx(expected, rel=1e-14)
    m = build_binomial(100, 0.5)
    assert full_report(m).d_tv <= pb_refined_tv_bound([0.5] * 100)


def test_qmax_bound():
    assert qmax_bound(0.0, 2.0) == pytest.approx(1 / 4.6)
    assert qmax_bound(1.0, 3.0) > 1.0
    rep = full_report(build_binomial(100, 0.5))
    assert rep.q_max <= qmax_bound(rep.d_tv, 5.0)


def test_moment_bounds_examples():
    m = build_parity(10)
    s = m.s_values[m.w_pmf.probs > 0]
    lo, hi, _ = moment_bounds(float(s.min()), float(s.max()), 0.0, m.lam, 0.1, 1.0)
    assert lo <= 11 / 16 <= hi
    assert moment_bounds(0.0, 0.0, 0.0, 0.5, 1.0, 0.0)[:2] == (0.0, 0.0)
    mom = moments(build_binomial(100, 0.5).w_pmf)
    abs3_hi = moment_bounds(0, 1, 0, 0.01, mom.q_max, mom.sigma)[2]
    assert mom.abs_central_3 <= abs3_hi


@pytest.mark.parametrize("spec", [(20, 10, 10), (4, 2, 2)])
def test_hypergeometric_variance_bound(spec):
    N, m, n = spec
    assert var_s(build_hypergeometric(spec)) <= hyp_var_s_bound(*spec)
    lip = (m + n) / (m * (N - m + 1))
    var = n * m * (N - m) * (N - n) / (N * N * (N - 1))
    assert hyp_var_s_bound(*spec) == pytest.approx(lip**2 * var, rel=1e-14)


@pytest.mark.parametrize("n", [2, 10])
def test_parity_variance_bound(n):
    assert var_s(build_parity(n)) <= parity_var_s_bound(n)


@pytest.mark.parametrize("n", [50, 100, 400])
def test_parity_variance_bound_scaling(n):
    assert 3.5 <= parity_var_s_bound(n) / parity_var_s_bound(4 * n) <= 4.5


def test_antivoter_variance_bound():
    model, s = antivoter_model(complete_graph(4))
    assert antivoter_var_s_bound(3, 4, s.sigma2, s.var_q) == pytest.approx(s.var_s_star, rel=1e-12)
    model6, s6 = antivoter_model(complete_graph(6))
    assert var_s(model6) <= antivoter_var_s_bound(5, 6, s6.sigma2, s6.var_q) + 1e-12
    assert antivoter_var_s_bound(3, 4, 2.0, 0.0) == pytest.approx(2.0 / 16)


def test_full_report_binomial():
    rep = full_report(build_binomial(100, 0.5))
    c = rep.check("tv_bound")
    assert c.holds and c.bound == pytest.approx(0.18, rel=1e-14)
    assert rep.all_hold
    assert rep.lipschitz_s == pytest.approx(0.005)
    assert rep.check("loc_bound_lipschitz").exact <= rep.check("loc_bound_lipschitz").bound
    third, near = rep.lipschitz_operands
    assert near == pytest.approx(rep.check("loc_bound").bound * 5**1.5 + 1)


@pytest.mark.parametrize(
    "build",
    [lambda: build_hypergeometric((40, 20, 20)), lambda: build_parity(10), lambda: build_parity(50)],
)
def test_full_report_all_hold(build):
    rep = full_report(build())
    assert rep.all_hold, rep.failures()


def test_antivoter_report_k8():
    model, s = antivoter_model(complete_graph(8))
    rep = antivoter_report(model, s)
    assert rep.all_hold
    names = {c.name for c in rep.checks}
    assert {"antivoter_var_s_bound", "var_s_le_var_s_star", "loc_bound_lipschitz"} <= names


def test_vacuous_flag_and_roundtrip():
    rep = full_report(build_parity(2))
    assert rep.check("tv_bound").vacuous
    again = BoundReport.from_dict(rep.to_dict())
    assert again.to_dict() == rep.to_dict()


def test_degenerate_law_rejected():
    from stein_tpa.models import point_mass_model

    with pytest.raises(InvalidParameterError):
        full_report(point_mass_model(2))


def test_report_calls_bounds_through_module(monkeypatch):
    monkeypatch.setattr(bounds, "tv_bound", lambda ing: 0.0)
    rep = full_report(build_binomial(100, 0.5))
    assert not rep.check("tv_bound").holds
