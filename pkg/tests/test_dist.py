import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from stein_tpa.dist import (
    IntegerPmf,
    d_loc,
    d_loc_bracket,
    d_tv,
    d_tv_bracket,
    from_mapping,
    make_tp,
    moments,
    point_mass,
    poisson_logpmf,
    poisson_window,
    tp_pmf,
    tp_sample,
    tp_window,
)
from stein_tpa.errors import InvalidParameterError, UnsupportedInputError


@pytest.mark.parametrize("mu", [1.0, 4.0, 25.0])
def test_tp_with_equal_mean_and_variance_is_poisson(mu):
    tp = make_tp(mu, mu)
    assert tp.s == 0 and tp.gamma == 0.0
    ks = np.arange(0, int(mu + 20 * math.sqrt(mu) + 20))
    ours = np.array([tp_pmf(tp, int(k)) for k in ks])
    assert np.abs(ours - stats.poisson.pmf(ks, mu)).max() <= 1e-15


def test_tp_shift_and_fraction():
    tp = make_tp(5.3, 4.1)
    assert tp.s == 1
    assert tp.gamma == pytest.approx(0.2, abs=1e-12)
    assert tp_pmf(tp, 0) == 0.0  # below the shift
    # negative mu - sigma2 floors toward minus infinity
    tp = make_tp(0.1, 0.5)
    assert tp.s == -1
    assert tp.gamma == pytest.approx(0.6, abs=1e-12)


def test_tp_rejects_bad_parameters():
    with pytest.raises(InvalidParameterError):
        make_tp(1.0, 0.0)
    with pytest.raises(InvalidParameterError):
        make_tp(math.nan, 1.0)


@settings(max_examples=60, deadline=None)
@given(mu=st.floats(-50, 200), sigma2=st.floats(0.05, 150))
def test_tp_matches_mean_and_variance_up_to_gamma(mu, sigma2):
    tp = make_tp(mu, sigma2)
    assert 0.0 <= tp.gamma < 1.0
    assert tp.s + tp.gamma == pytest.approx(mu - sigma2, abs=1e-9 * max(1.0, abs(mu) + sigma2))
    win = tp_window(tp, 1e-14)
    mom = moments(IntegerPmf(win.offset, win.probs / win.probs.sum()))
    assert mom.mean == pytest.approx(mu, abs=1e-8 * max(1.0, abs(mu)))
    assert mom.variance == pytest.approx(sigma2 + tp.gamma, rel=1e-8)


@settings(max_examples=60, deadline=None)
@given(lam=st.floats(0.01, 2000), eps=st.floats(1e-15, 0.5))
def test_poisson_window_tails(lam, eps):
    lo, hi, tail = poisson_window(lam, eps)
    assert 0 <= lo <= hi
    assert tail <= eps * (1 + 1e-9)
    below = stats.poisson.cdf(lo - 1, lam) if lo > 0 else 0.0
    above = stats.poisson.sf(hi, lam)
    assert below + above == pytest.approx(tail, rel=1e-6, abs=1e-300)


def test_window_rejects_bad_eps():
    with pytest.raises(InvalidParameterError):
        poisson_window(3.0, 0.0)


def test_poisson_logpmf_large_arguments_stay_finite():
    vals = poisson_logpmf(np.array([0, 10_000, 1_000_000]), 1e6)
    assert np.all(np.isfinite(vals))
    assert poisson_logpmf(-1, 2.0) == -np.inf


def test_integer_pmf_validation_and_roundtrip():
    with pytest.raises(InvalidParameterError):
        IntegerPmf(0, np.array([0.5, 0.6]))
    with pytest.raises(InvalidParameterError):
        IntegerPmf(0, np.array([1.5, -0.5]))
    p = IntegerPmf(-2, np.array([0.25, 0.5, 0.25]))
    assert p.at(-1) == 0.5 and p.at(5) == 0.0
    assert list(p.support) == [-2, -1, 0]
    assert IntegerPmf.from_dict(p.to_dict()) == p
    with pytest.raises(ValueError):
        p.probs[0] = 1.0


def test_distances_simple_cases():
    assert d_tv(point_mass(0), point_mass(3)) == 1.0
    assert d_loc(point_mass(0), point_mass(3)) == 1.0
    a = from_mapping({0: 0.5, 1: 0.5})
    b = from_mapping({1: 0.5, 2: 0.5})
    assert d_tv(a, b) == pytest.approx(0.5)
    assert d_loc(a, b) == pytest.approx(0.5)
    assert d_tv(a, a) == 0.0


def test_bracket_accounts_for_window_tails():
    tp = make_tp(10.0, 10.0)
    win = tp_window(tp, 1e-6)
    value, width = d_tv_bracket(win, win)
    assert width == pytest.approx(2 * win.tail_mass)
    assert value <= width
    assert d_loc_bracket(win, win) == (0.0, win.tail_mass)


pmfs = st.lists(st.floats(0.0, 1.0), min_size=1, max_size=12).filter(lambda x: sum(x) > 0.01)


def _make(weights, offset):
    w = np.asarray(weights)
    return IntegerPmf(offset, w / w.sum())


@settings(max_examples=100, deadline=None)
@given(pmfs, pmfs, pmfs, st.integers(-5, 5), st.integers(-5, 5), st.integers(-5, 5))
def test_distance_metric_properties(wa, wb, wc, oa, ob, oc):
    a, b, c = _make(wa, oa), _make(wb, ob), _make(wc, oc)
    assert 0.0 <= d_tv(a, b) <= 1.0
    assert d_tv(a, b) == pytest.approx(d_tv(b, a), abs=1e-15)
    assert d_tv(a, c) <= d_tv(a, b) + d_tv(b, c) + 1e-12
    # the supremum over singletons never exceeds the supremum over sets
    assert d_loc(a, b) <= d_tv(a, b) + 1e-12


def test_moments_require_exact_law():
    win = tp_window(make_tp(4.0, 4.0), 1e-6)
    with pytest.raises(UnsupportedInputError):
        moments(win)
    m = moments(from_mapping({0: 0.5, 2: 0.5}))
    assert (m.mean, m.variance, m.abs_central_3, m.q_max) == (1.0, 1.0, 1.0, 0.5)


def test_sampling_is_reproducible():
    tp = make_tp(20.5, 6.0)
    a = tp_sample(tp, np.random.default_rng(3), size=50_000)
    b = tp_sample(tp, np.random.default_rng(3), size=50_000)
    assert np.array_equal(a, b)
    assert a.min() >= tp.s
    assert a.mean() == pytest.approx(20.5, abs=0.05)
    assert isinstance(tp_sample(tp, np.random.default_rng(0)), int)
