"""Verification suites run by ``stein-tpa verify``.

Each suite returns a ``SuiteResult``: a flat list of named checks, each
with the measured value, the limit it is held to and a reference string
giving the identity or bound being checked.  Suites are deterministic for
a given seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import bounds, config
from .antivoter import (
    complete_graph,
    complete_graph_s,
    exact_stationary,
    pair_model_from_stationary,
    petersen_graph,
    s_star_batch,
)
from .dist import IntegerPmf, make_tp, moments
from .errors import SteinTPAError
from .models import (
    build_binomial,
    build_hypergeometric,
    build_parity,
    build_poisson_binomial,
    hypergeometric_pmf,
    marginal_discrepancy,
    parity_pmf,
    poisson_binomial_pmf,
    support_violation,
    var_s,
    verify_d1_identity,
    verify_exchangeability,
    verify_regression,
    verify_w_function,
)
from .stein import delta_sums, solve_stein, stein_residual, sup_norms, tp_deviation_max

SUITES = ("stein", "pairs", "antivoter", "rates", "bounds")


@dataclass
class Check:
    name: str
    reference: str
    instance: str
    value: float
    limit: float
    relation: str  # "<=", ">=", "in"
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "reference": self.reference,
            "instance": self.instance,
            "value": self.value,
            "limit": self.limit,
            "relation": self.relation,
            "passed": self.passed,
            "detail": self.detail,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Check":
        return cls(**d)


@dataclass
class SuiteResult:
    suite: str
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    # -- recording helpers -------------------------------------------------

    def le(self, name, reference, instance, value, limit, detail=""):
        value, limit = float(value), float(limit)
        self.checks.append(Check(name, reference, instance, value, limit, "<=", bool(value <= limit), detail))

    def ge(self, name, reference, instance, value, limit, detail=""):
        value, limit = float(value), float(limit)
        self.checks.append(Check(name, reference, instance, value, limit, ">=", bool(value >= limit), detail))

    def close(self, name, reference, instance, value, expected, rel_tol=1e-12):
        """Relative agreement |value - expected| <= rel_tol * |expected|."""
        value, expected = float(value), float(expected)
        err = abs(value - expected) / max(abs(expected), 1e-300)
        self.checks.append(
            Check(name, reference, instance, err, rel_tol, "<=", bool(err <= rel_tol), f"value={value!r} expected={expected!r}")
        )

    def within(self, name, reference, instance, value, lo, hi):
        value = float(value)
        self.checks.append(
            Check(name, reference, instance, value, float(hi), "in", bool(lo <= value <= hi), f"window=[{lo!r}, {hi!r}]")
        )

    def error(self, name, reference, instance, exc: Exception):
        self.checks.append(Check(name, reference, instance, math.nan, math.nan, "raised", False, f"{type(exc).__name__}: {exc}"))

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "n_checks": len(self.checks),
            "n_failed": len(self.failures()),
            "checks": [c.to_dict() for c in self.checks],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SuiteResult":
        return cls(d["suite"], [Check.from_dict(c) for c in d["checks"]])


# -- model grid --------------------------------------------------------------

HYP_GRID = (
    (4, 2, 2), (4, 1, 3), (5, 2, 3), (10, 3, 4), (10, 5, 5), (10, 9, 5),
    (20, 10, 10), (20, 5, 12), (20, 1, 10), (30, 12, 20), (40, 20, 20),
    (40, 10, 30), (60, 30, 30), (60, 15, 45), (60, 59, 30),
)
PARITY_GRID = (2, 3, 4, 5, 10, 16, 32, 50, 64, 100, 128)
BINOMIAL_GRID = ((1, 0.5), (2, 0.3), (5, 0.5), (10, 0.1), (50, 0.5), (100, 0.5), (100, 0.01), (200, 0.9))
RANDOM_PB_SIZES = (3, 20, 100, 200)
ANTIVOTER_GRAPHS = ("K4", "K5", "K6", "K7", "K8", "petersen")


def graph_by_name(name: str):
    if name == "petersen":
        return petersen_graph()
    return complete_graph(int(name[1:]))


@lru_cache(maxsize=None)
def _stationary(name: str):
    return exact_stationary(graph_by_name(name))


def model_grid(seed: int = 0):
    """``(label, builder)`` pairs for the exact model grid."""
    rng = np.random.default_rng(seed)
    grid = []
    for n, p in BINOMIAL_GRID:
        grid.append((f"binomial(n={n},p={p})", lambda n=n, p=p: build_binomial(n, p)))
    for n in RANDOM_PB_SIZES:
        p = tuple(float(x) for x in rng.uniform(0.02, 0.98, size=n))
        grid.append((f"poisson-binomial(n={n},random p,seed={seed})", lambda p=p: build_poisson_binomial(p)))
    for N, m, n in HYP_GRID:
        grid.append((f"hypergeometric(N={N},m={m},n={n})", lambda t=(N, m, n): build_hypergeometric(t)))
    for n in PARITY_GRID:
        grid.append((f"parity(n={n})", lambda n=n: build_parity(n)))
    for name in ANTIVOTER_GRAPHS:
        grid.append((f"antivoter({name})", lambda name=name: pair_model_from_stationary(_stationary(name))))
    return grid


# -- stein -------------------------------------------------------------------

STEIN_LAMBDAS = (0.5, 1.0, 4.0, 25.0, 100.0, 400.0)


def run_stein(seed: int = 0) -> SuiteResult:
    res = SuiteResult("stein")
    slack = config.BOUND_SLACK
    rng = np.random.default_rng(seed)
    for lam in STEIN_LAMBDAS:
        inst = f"lambda={lam}"
        top = int(math.floor(lam + 10.0 * math.sqrt(lam)))
        worst = dict(resid=0.0, g=0.0, dg=0.0, abs_sum=0.0, sq_sum=0.0)
        shape_err = None
        for i in range(top + 1):
            sol = solve_stein(lam, {i})
            g_sup, dg_sup = sup_norms(sol)
            try:
                a, b = delta_sums(sol)
            except SteinTPAError as exc:
                shape_err = shape_err or exc
                a, b = delta_sums(sol, check_shape=False)
            worst["resid"] = max(worst["resid"], stein_residual(sol))
            worst["g"] = max(worst["g"], g_sup)
            worst["dg"] = max(worst["dg"], dg_sup)
            worst["abs_sum"] = max(worst["abs_sum"], a)
            worst["sq_sum"] = max(worst["sq_sum"], b)
        sweep = f"singletons i=0..{top}"
        res.le("residual", "|lam g(j+1) - j g(j) - (I[j in A] - Po(lam){A})| <= 1e-10", inst, worst["resid"], config.RESIDUAL_TOL, sweep)
        res.le("singleton_sup", "max |g_{i}| <= 1/lam for singleton targets", inst, worst["g"], 1.0 / lam + slack, sweep)
        res.le("sup_g", "max |g_A| <= lam^(-1/2)", inst, worst["g"], lam**-0.5 + slack, sweep)
        res.le("sup_delta_g", "max |Delta g_A| <= (1 - e^-lam)/lam", inst, worst["dg"], -math.expm1(-lam) / lam + slack, sweep)
        res.le("delta_abs_sum", "sum_k |Delta g_i(k)| <= 2/lam", inst, worst["abs_sum"], 2.0 / lam + slack, sweep)
        res.le("delta_sq_sum", "sum_k (Delta g_i(k))^2 <= 4/lam^2", inst, worst["sq_sum"], 4.0 / lam**2 + slack, sweep)
        res.le(
            "singleton_shape",
            "g_i negative and decreasing on 0..i, positive and decreasing after i",
            inst,
            0.0 if shape_err is None else 1.0,
            0.0,
            "" if shape_err is None else str(shape_err),
        )

    # random target sets
    worst_g = worst_dg = worst_res = 0.0
    for _ in range(200):
        lam = float(np.exp(rng.uniform(math.log(0.5), math.log(400.0))))
        hi = int(lam + 6 * math.sqrt(lam) + 5)
        size = int(rng.integers(1, hi + 2))
        target = set(int(x) for x in rng.choice(hi + 1, size=min(size, hi + 1), replace=False))
        sol = solve_stein(lam, target)
        g_sup, dg_sup = sup_norms(sol)
        worst_g = max(worst_g, g_sup * math.sqrt(lam))
        worst_dg = max(worst_dg, dg_sup * lam / -math.expm1(-lam))
        worst_res = max(worst_res, stein_residual(sol))
    inst = f"200 random (lambda, A), seed={seed}"
    res.le("residual_random", "Stein residual <= 1e-10", inst, worst_res, config.RESIDUAL_TOL)
    res.le("sup_g_random", "max |g_A| sqrt(lam) <= 1", inst, worst_g, 1.0 + slack)
    res.le("sup_delta_g_random", "max |Delta g_A| lam/(1 - e^-lam) <= 1", inst, worst_dg, 1.0 + slack)

    # linearity in the target set
    lin = 0.0
    for lam in (0.5, 4.0, 25.0, 100.0):
        a, b = {0, 2, int(lam)}, {1, int(lam) + 3}
        ga, gb, gab = solve_stein(lam, a), solve_stein(lam, b), solve_stein(lam, a | b)
        lin = max(lin, float(np.abs(gab.values - ga.values - gb.values).max()))
    res.le("linearity", "g_(A u B) = g_A + g_B for disjoint A, B", "lambda in {0.5, 4, 25, 100}", lin, config.RESIDUAL_TOL)

    # deviation of the translated Poisson law from its mean
    tp_cases = [(50.0, 25.0), (5.3, 4.1), (0.1, 0.1)]
    tp_cases += [(lam + 0.37, lam) for lam in STEIN_LAMBDAS]
    tp_cases += [(10.0 * lam, lam) for lam in STEIN_LAMBDAS]
    for mu, s2 in tp_cases:
        res.le("tp_deviation", "max_k TP(mu, s2){k} |k - mu| <= 1", f"TP({mu},{s2})", tp_deviation_max(make_tp(mu, s2)), 1.0)
    return res


# -- pairs -------------------------------------------------------------------


def run_pairs(seed: int = 0) -> SuiteResult:
    res = SuiteResult("pairs")
    tol = config.IDENTITY_TOL
    for label, build in model_grid(seed):
        try:
            m = build()
        except SteinTPAError as exc:
            res.error("build", "model construction", label, exc)
            continue
        res.le("exchangeability", "max |P[W=a,W'=b] - P[W=b,W'=a]| <= 1e-12", label, verify_exchangeability(m), tol)
        res.le("marginal", "both marginals of (W, W') equal the law of W", label, marginal_discrepancy(m), tol)
        res.le("regression", "E[W' - mu | W] = (1 - lam)(W - mu) + R", label, verify_regression(m), tol)
        res.le("support", "P[|W' - W| > 1] = 0 exactly", label, support_violation(m), 0.0)
        res.le("up_step_mean", "E[S(W)] = lam sigma^2 + E[(W - mu) R] and E D_+1 = E D_-1", label, verify_d1_identity(m), tol)
        res.le("w_function", "E[(W - mu) f(W)] = E[S(W) Delta f(W)]/lam", label, verify_w_function(m), tol)
    return res


# -- antivoter ---------------------------------------------------------------


def run_antivoter(seed: int = 0) -> SuiteResult:
    res = SuiteResult("antivoter")
    tol = config.IDENTITY_TOL
    rng = np.random.default_rng(seed)
    for name in ANTIVOTER_GRAPHS:
        g = graph_by_name(name)
        s = _stationary(name)
        model = pair_model_from_stationary(s)
        n, r = s.n, s.r
        eq_value = bounds.antivoter_var_s_bound(r, n, s.sigma2, s.var_q)
        res.close("var_s_star_equality", "Var S* = (16 r^2 sigma^2 + Var Q)/(16 r^2 n^2)", name, s.var_s_star, eq_value, tol)
        res.le("centered_w_q", "E[(2W - n) Q] = 0", name, abs(s.e_wq), tol)
        pmf = s.w_pmf.probs
        res.le("flip_symmetry", "P[W = w] = P[W = n - w]", name, float(np.abs(pmf - pmf[::-1]).max()), tol)
        res.le("mean", "mu = n/2", name, abs(s.mu - n / 2.0), tol)
        res.le("var_s_le_var_s_star", "Var S <= Var S*", name, var_s(model) - s.var_s_star, config.BOUND_SLACK)
        if g.is_complete:
            formula = complete_graph_s(n, np.arange(n + 1))
            res.le(
                "complete_graph_s",
                "E[S* | W = w] = (n(n-1) - (2n-1) w + w^2)/(n(n-1)) on K_n",
                name,
                float(np.abs(s.s_given_w - formula).max()),
                tol,
            )
        direct, via_q = s_star_batch(rng.integers(0, 2, size=(10_000, n)), g)
        worst = float(np.abs(direct - via_q).max())
        res.le("s_star_forms", "average form of S*(J) = (rn - 2r W~ + Q)/(4rn)", f"{name}, 10^4 random configurations", worst, tol)
    return res


# -- rates -------------------------------------------------------------------

RATE_FAMILIES = {
    "binomial": (16, 32, 64, 128, 256),
    "hypergeometric": (8, 16, 32, 64),
    "parity": (16, 32, 64, 128),
}
TV_WINDOW = (-0.65, -0.35)
LOC_WINDOW = (-1.2, -0.8)


def family_pmf(family: str, n: int) -> IntegerPmf:
    if family == "binomial":
        return IntegerPmf(0, poisson_binomial_pmf([0.5] * n))
    if family == "hypergeometric":
        return hypergeometric_pmf(2 * n, n, n)
    if family == "parity":
        return parity_pmf(n)
    raise ValueError(f"unknown family {family!r}")


def rate_table(family: str, sizes=None, eps: float | None = None) -> list[dict]:
    rows = []
    for n in sizes or RATE_FAMILIES[family]:
        mom, tp, (dtv, dtv_w), (dloc, dloc_w) = bounds.exact_distances(family_pmf(family, n), eps)
        rows.append({"family": family, "n": n, "mu": mom.mean, "sigma2": mom.variance, "d_tv": dtv, "d_loc": dloc})
    return rows


def loglog_slope(ns, values) -> float:
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def run_rates(seed: int = 0) -> SuiteResult:
    res = SuiteResult("rates")
    for family, sizes in RATE_FAMILIES.items():
        rows = rate_table(family, sizes)
        inst = f"{family}, n in {list(sizes)}"
        tv = loglog_slope(sizes, [row["d_tv"] for row in rows])
        loc = loglog_slope(sizes, [row["d_loc"] for row in rows])
        res.within("tv_slope", "d_TV = O(n^-1/2): log-log slope in [-0.65, -0.35]", inst, tv, *TV_WINDOW)
        res.within("loc_slope", "d_loc = O(n^-1): log-log slope in [-1.2, -0.8]", inst, loc, *LOC_WINDOW)
    return res


# -- bounds ------------------------------------------------------------------

# Reference values worked out by hand from the closed forms, as
# (label, thunk, exact value).
def _spot_values():
    B = bounds
    ing = B.BoundIngredients(lam=0.5, sigma2=4.0, var_s=0.04, var_r=0.09, q_max=0.25)
    binom = B.BoundIngredients(lam=0.01, sigma2=25.0, var_s=0.125 * 0.5 / 100)
    d = 0.9
    lip_near = B.BoundIngredients(**{**ing.__dict__, "e_abs3": 16.0, "lipschitz_s": 0.1, "loc_bound_value": d})
    lip_far = B.BoundIngredients(**{**ing.__dict__, "e_abs3": 40.0, "lipschitz_s": 0.1, "loc_bound_value": d})
    near = 2 * 0.1 * (d * 2.0**1.5 + 1.0) / 2.0 + 0.05 + 0.15 + 0.15 + 0.5
    p_small = [0.01] * 100
    g = 0.01
    return [
        ("tv_bound, binomial n=100 p=1/2", lambda: B.tv_bound(binom), 0.18),
        ("tv_bound, lam=1/2 s2=4 VarS=.04 VarR=.09", lambda: B.tv_bound(ing), 0.1 + 0.6 + 0.5),
        ("loc_bound, lam=1/2 s2=4 VarS=.04 VarR=.09 q=1/4", lambda: B.loc_bound(ing), 0.1 + 0.15 + 0.15 + 0.5),
        ("loc_bound_lipschitz, d-branch", lambda: B.loc_bound_lipschitz(lip_near), near),
        ("loc_bound_lipschitz, third-moment branch", lambda: B.loc_bound_lipschitz(lip_far), 0.5 + 0.05 + 0.15 + 0.15 + 0.5),
        ("pb_tv_bound, n=100 p=1/2", lambda: B.pb_tv_bound([0.5] * 100), 0.18),
        ("pb_tv_bound, n=1 p=1/2", lambda: B.pb_tv_bound([0.5]), 9.0),
        (
            "pb_refined_tv_bound, n=100 p=1/2",
            lambda: B.pb_refined_tv_bound([0.5] * 100),
            -math.expm1(-25.0) / 25.0 * 2.5 + math.exp(-6.25),
        ),
        (
            "pb_refined_tv_bound, n=100 p=0.01",
            lambda: B.pb_refined_tv_bound(p_small),
            -math.expm1(-(0.99 + g)) / (0.99 + g) * (math.sqrt(100 * 1e-6 * 0.99) + g),
        ),
        ("qmax_bound, d=0.1 sigma=5", lambda: B.qmax_bound(0.1, 5.0), 0.1 + 1.0 / 11.5),
        ("moment_bounds lower", lambda: B.moment_bounds(0.2, 0.8, 0.1, 0.5, 0.25, 2.0, 0.3)[0], 0.2),
        ("moment_bounds upper", lambda: B.moment_bounds(0.2, 0.8, 0.1, 0.5, 0.25, 2.0, 0.3)[1], 1.4),
        ("moment_bounds third moment", lambda: B.moment_bounds(0.2, 0.8, 0.1, 0.5, 0.25, 2.0, 0.3)[2], 10.6),
        ("hyp_var_s_bound N=20 m=10 n=10", lambda: B.hyp_var_s_bound(20, 10, 10), 10 * 10 * 400 * 100 / (100 * 121 * 19 * 400)),
        ("hyp_var_s_bound N=4 m=2 n=2", lambda: B.hyp_var_s_bound(4, 2, 2), 2 * 2 * 16 * 4 / (4 * 9 * 3 * 16)),
        ("parity_var_s_bound n=10", lambda: B.parity_var_s_bound(10), 38**2 * 11 / (16 * 100 * 121)),
        ("antivoter_var_s_bound r=3 n=4 s2=1 VarQ=16", lambda: B.antivoter_var_s_bound(3, 4, 1.0, 16.0), 160 / 2304),
    ]


def run_bounds(seed: int = 0, eps: float | None = None) -> SuiteResult:
    res = SuiteResult("bounds")
    for label, thunk, expected in _spot_values():
        res.close("spot_value", "closed-form bound evaluated by hand", label, thunk(), expected, 1e-12)

    # algebraic identities between the general and specialized forms
    for n, p in ((100, 0.5), (37, 0.2)):
        ps = [p] * n
        sig2 = n * p * (1 - p)
        ing = bounds.BoundIngredients(lam=1.0 / n, sigma2=sig2, var_s=n * p**3 * (1 - p) / n**2)
        res.close("pb_consistency", "general TV bound with lam = 1/n, Var S = n^-2 sum p^3 q equals the Poisson-binomial form", f"n={n},p={p}", bounds.tv_bound(ing), bounds.pb_tv_bound(ps), 1e-14)
    for N, m, n in ((20, 10, 10), (4, 2, 2), (60, 15, 45)):
        lip = (m + n) / (m * (N - m + 1))
        var = n * m * (N - m) * (N - n) / (N * N * (N - 1))
        res.close("hyp_consistency", "hypergeometric Var S bound = L_S^2 sigma^2", f"N={N},m={m},n={n}", bounds.hyp_var_s_bound(N, m, n), lip * lip * var, 1e-12)
    for n in (10, 50):
        lip = (4 * n - 2) / (n * (n + 1))
        res.close("parity_consistency", "parity Var S bound = L_S^2 (n+1)/16", f"n={n}", bounds.parity_var_s_bound(n), lip * lip * (n + 1) / 16, 1e-12)

    # dominance on the model grid
    for label, build in model_grid(seed):
        try:
            m = build()
            if moments(m.w_pmf).variance == 0.0:
                continue
            if m.name == "antivoter":
                rep = bounds.antivoter_report(m, _stationary(m.params["graph"]), eps)
            else:
                rep = bounds.full_report(m, eps)
        except SteinTPAError as exc:
            res.error("report", "bound report", label, exc)
            continue
        for c in rep.checks:
            if c.kind == "upper":
                res.ge(c.name, c.description, label, c.bound, c.exact - config.BOUND_SLACK, f"exact={c.exact!r}")
            else:
                res.le(c.name, c.description, label, c.bound, c.exact + config.BOUND_SLACK, f"exact={c.exact!r}")
    return res


RUNNERS = {
    "stein": run_stein,
    "pairs": run_pairs,
    "antivoter": run_antivoter,
    "rates": run_rates,
    "bounds": run_bounds,
}


def run_suite(name: str, seed: int = 0, eps: float | None = None) -> list[SuiteResult]:
    names = SUITES if name == "all" else (name,)
    out = []
    for s in names:
        if s not in RUNNERS:
            raise KeyError(s)
        out.append(run_bounds(seed, eps) if s == "bounds" else RUNNERS[s](seed))
    return out
