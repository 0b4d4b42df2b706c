import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stein_tpa.antivoter import (
    Configuration,
    StationarySummary,
    complete_graph,
    complete_graph_s,
    exact_stationary,
    format_graph,
    load_graph,
    mcmc_estimate,
    mcmc_z_scores,
    odd_moment_max,
    pair_model_from_stationary,
    petersen_graph,
    q_statistic,
    s_star,
    s_star_direct,
    s_star_from_q,
    step,
    transition_matrix,
)
from stein_tpa.errors import (
    ExcludedGraphError,
    GraphParseError,
    PreconditionError,
    RegularityError,
    SizeLimitError,
)
from stein_tpa.models import var_s, verify_d1_identity, verify_regression

K4_TEXT = "4 6\n0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n"
CYCLE6 = "6 6\n0 1\n1 2\n2 3\n3 4\n4 5\n5 0\n"


def test_complete_graphs():
    k4 = complete_graph(4)
    assert k4.r == 3 and len(k4.edges) == 6
    k8 = complete_graph(8)
    assert k8.r == 7 and len(k8.edges) == 28
    with pytest.raises(ExcludedGraphError) as exc:
        complete_graph(3)
    assert "cycle" in exc.value.reasons


def test_petersen_is_three_regular():
    g = petersen_graph()
    assert (g.n, g.r, len(g.edges)) == (10, 3, 15)
    assert not g.bipartite and g.connected


def test_load_graph_roundtrip():
    g = load_graph(K4_TEXT)
    assert g.r == 3 and g.is_complete
    assert load_graph(format_graph(petersen_graph())).adjacency == petersen_graph().adjacency


def test_load_graph_rejections():
    with pytest.raises(ExcludedGraphError) as exc:
        load_graph(CYCLE6)
    assert set(exc.value.reasons) == {"bipartite", "cycle"}
    with pytest.raises(RegularityError):
        load_graph("4 4\n0 1\n1 2\n2 0\n2 3\n")  # triangle with a pendant vertex
    with pytest.raises(GraphParseError) as exc:
        load_graph("4 2\n0 1\n1 x\n")
    assert exc.value.line == 3
    with pytest.raises(GraphParseError):
        load_graph("4 2\n0 1\n1 0\n")
    with pytest.raises(GraphParseError):
        load_graph("4 1\n2 2\n")
    with pytest.raises(GraphParseError):
        load_graph("4 2\n0 1\n")
    with pytest.raises(GraphParseError):
        load_graph("")


def test_step_examples():
    g = complete_graph(4)
    rng = np.random.default_rng(0)
    assert step(Configuration([0, 0, 0, 0]), g, rng).w == 1
    for _ in range(20):
        assert step(Configuration([1, 1, 1, 1]), g, rng).w == 3


def test_step_is_deterministic_given_seed():
    g = petersen_graph()

    def run(seed):
        rng = np.random.default_rng(seed)
        c = Configuration(np.zeros(10, dtype=int))
        path = []
        for _ in range(200):
            c = step(c, g, rng)
            path.append(c.w)
        return path

    assert run(5) == run(5)


def test_q_and_s_star_examples():
    g = complete_graph(4)
    assert q_statistic(Configuration([1, 1, 1, 1]), g) == 12
    c = Configuration([1, 1, 0, 0])
    assert q_statistic(c, g) == -4
    assert s_star(c, g) == pytest.approx(1 / 6, abs=1e-15)
    assert s_star(Configuration([1, 1, 1, 1]), g) == 0.0
    assert s_star(Configuration([0, 0, 0, 0]), g) == 1.0


@settings(max_examples=80, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=10, max_size=10))
def test_q_flip_invariance_and_s_star_forms(bits):
    g = petersen_graph()
    c = Configuration(bits)
    assert q_statistic(c, g) == q_statistic(c.flip(), g)
    assert abs(s_star_direct(c, g) - s_star_from_q(c, g)) <= 1e-12


def linear_solve_stationary(g):
    """Oracle: solve pi (P - I) = 0, sum pi = 1 by least squares."""
    P = transition_matrix(g).toarray()
    size = P.shape[0]
    A = np.vstack([P.T - np.eye(size), np.ones((1, size))])
    b = np.zeros(size + 1)
    b[-1] = 1.0
    return np.linalg.lstsq(A, b, rcond=None)[0]


@pytest.mark.parametrize("g", [complete_graph(4), complete_graph(6), petersen_graph()], ids=lambda g: g.name)
def test_power_iteration_matches_linear_solve(g):
    s = exact_stationary(g)
    assert np.abs(s.state_probs - linear_solve_stationary(g)).max() <= 1e-12


def test_transition_matrix_is_stochastic():
    P = transition_matrix(petersen_graph())
    assert np.allclose(np.asarray(P.sum(1)).ravel(), 1.0, atol=1e-15)
    assert (P.data >= 0).all()


def test_k4_exact_properties():
    g = complete_graph(4)
    s = exact_stationary(g)
    assert odd_moment_max(g, s.state_probs) <= 1e-12
    assert abs(s.e_wq) <= 1e-12
    expected = (16 * 9 * s.sigma2 + s.var_q) / (16 * 9 * 16)
    assert s.var_s_star == pytest.approx(expected, rel=1e-12)
    pmf = s.w_pmf.probs
    assert np.abs(pmf - pmf[::-1]).max() <= 1e-12
    assert s.mu == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize("n", [4, 5, 6, 7, 8])
def test_complete_graph_up_step_formula(n):
    s = exact_stationary(complete_graph(n))
    assert np.abs(s.s_given_w - complete_graph_s(n, np.arange(n + 1))).max() <= 1e-12


def test_pair_model_from_exact_summary():
    s = exact_stationary(complete_graph(6))
    m = pair_model_from_stationary(s)
    assert m.lam == pytest.approx(1 / 3)
    assert verify_regression(m) <= 1e-10
    assert verify_d1_identity(m) <= 1e-10
    k4 = exact_stationary(complete_graph(4))
    # on a complete graph S* depends on W only, so the two variances coincide
    assert var_s(pair_model_from_stationary(k4)) <= k4.var_s_star + 1e-12


def test_pair_model_rejects_monte_carlo():
    est = mcmc_estimate(complete_graph(5), 1000, burnin=10, chains=2, seed=1)
    with pytest.raises(PreconditionError):
        pair_model_from_stationary(est)


def test_size_limit_from_environment(monkeypatch):
    monkeypatch.setenv("STEIN_TPA_EXACT_LIMIT", "5")
    with pytest.raises(SizeLimitError) as exc:
        exact_stationary(complete_graph(6))
    assert exc.value.limit == 5
    assert "mcmc" in str(exc.value)


def test_mcmc_preconditions():
    g = complete_graph(4)
    with pytest.raises(PreconditionError):
        mcmc_estimate(g, 100, chains=0)
    with pytest.raises(PreconditionError):
        mcmc_estimate(g, 0)


def test_mcmc_is_deterministic():
    g = petersen_graph()
    a = mcmc_estimate(g, 20_000, chains=4, seed=11)
    b = mcmc_estimate(g, 20_000, chains=4, seed=11)
    assert a.to_dict() == b.to_dict()
    c = mcmc_estimate(g, 20_000, chains=4, seed=12)
    assert a.to_dict() != c.to_dict()


def test_mcmc_standard_errors_are_calibrated():
    """Over 100 fixed seeds the z-scores of the well-visited levels of W
    behave like Student t with chains - 1 degrees of freedom."""
    g = petersen_graph()
    exact = exact_stationary(g)
    zs = np.array(
        [mcmc_z_scores(mcmc_estimate(g, 100_000, chains=8, seed=1000 + s), exact)["w_pmf"][3:8] for s in range(100)]
    )
    assert 0.6 <= float((zs**2).mean()) <= 2.2  # t_7 has variance 1.4
    assert float((zs > 3).mean()) <= 0.06  # t_7 exceeds 3 with probability 0.02


def test_summary_roundtrip():
    s = exact_stationary(complete_graph(5))
    again = StationarySummary.from_dict(s.to_dict())
    assert again.to_dict() == s.to_dict()
    est = mcmc_estimate(petersen_graph(), 5000, chains=3, seed=2)
    assert StationarySummary.from_dict(est.to_dict()).to_dict() == est.to_dict()


def test_batch_forms_match_scalar_forms():
    from stein_tpa.antivoter import s_star_batch

    g = petersen_graph()
    rng = np.random.default_rng(4)
    configs = rng.integers(0, 2, size=(50, 10))
    direct, via_q = s_star_batch(configs, g)
    for row, a, b in zip(configs, direct, via_q):
        c = Configuration(row)
        assert a == pytest.approx(s_star_direct(c, g), abs=1e-15)
        assert b == pytest.approx(s_star_from_q(c, g), abs=1e-15)
