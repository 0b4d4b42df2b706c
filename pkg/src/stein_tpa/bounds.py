"""Error bounds for translated Poisson approximation and per-model reports.

Every bound is a plain function of its ingredients; ``full_report`` puts
each one next to the exactly computed distance it controls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import config
from .dist import IntegerPmf, d_loc_bracket, d_tv_bracket, make_tp, moments, tp_window
from .errors import InvalidParameterError, MissingIngredientError
from .models import PairModel, lipschitz_variance_bound, s_range, var_r, var_s


@dataclass(frozen=True)
class BoundIngredients:
    lam: float
    sigma2: float
    var_s: float
    var_r: float = 0.0
    q_max: float = 1.0
    e_abs3: float = 0.0
    lipschitz_s: float | None = None
    loc_bound_value: float | None = None  # the local-metric bound fed to the Lipschitz refinement

    def __post_init__(self):
        if not 0.0 < self.lam <= 2.0:
            raise InvalidParameterError(f"lambda must lie in (0, 2], got {self.lam!r}")
        if not self.sigma2 > 0.0:
            raise InvalidParameterError("sigma2 must be positive")
        if self.var_s < 0 or self.var_r < 0:
            raise InvalidParameterError("variances must be non-negative")
        if not 0.0 < self.q_max <= 1.0:
            raise InvalidParameterError("q_max must lie in (0, 1]")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)


def tv_bound(ing: BoundIngredients) -> float:
    """Total variation bound: sqrt(Var S)/(lam s2) + 2 sqrt(Var R)/(lam s) + 2/s2."""
    lam, s2, s = ing.lam, ing.sigma2, ing.sigma
    return math.sqrt(ing.var_s) / (lam * s2) + 2.0 * math.sqrt(ing.var_r) / (lam * s) + 2.0 / s2


def loc_bound(ing: BoundIngredients) -> float:
    lam, s2, s, q = ing.lam, ing.sigma2, ing.sigma, ing.q_max
    sr = math.sqrt(ing.var_r)
    return (
        2.0 * math.sqrt(q * ing.var_s) / (lam * s2)
        + 2.0 * q * sr / (lam * s)
        + sr / (lam * s2)
        + 2.0 / s2
    )


def loc_bound_lipschitz_terms(ing: BoundIngredients) -> tuple[float, float]:
    """The two operands of the maximum in the Lipschitz local bound:
    E|W - mu|^3 / sigma^3 and d sigma^(3/2) + 1."""
    if ing.loc_bound_value is None:
        raise MissingIngredientError("the Lipschitz local bound needs the plain local bound value d")
    s = ing.sigma
    return ing.e_abs3 / s**3, ing.loc_bound_value * s**1.5 + 1.0


def loc_bound_lipschitz(ing: BoundIngredients) -> float:
    """Local bound for S Lipschitz in W (constant L)."""
    if ing.lipschitz_s is None:
        raise MissingIngredientError("the Lipschitz local bound needs the Lipschitz constant of S")
    third, near = loc_bound_lipschitz_terms(ing)
    lam, s2, s, q, L = ing.lam, ing.sigma2, ing.sigma, ing.q_max, ing.lipschitz_s
    sr = math.sqrt(ing.var_r)
    return (
        2.0 * L * max(third, near) / (lam * s2)
        + 2.0 * L * q / (lam * s)
        + 2.0 * q * sr / (lam * s)
        + sr / (lam * s2)
        + 2.0 / s2
    )


def _pb_sums(p: Sequence[float]) -> tuple[float, float, float]:
    p = np.asarray(p, dtype=float)
    if p.size == 0 or np.any((p <= 0) | (p >= 1)):
        raise InvalidParameterError("success probabilities must lie strictly in (0, 1)")
    return float(np.sum(p * (1 - p))), float(np.sum(p**3 * (1 - p))), float(np.sum(p**2))


def pb_tv_bound(p: Sequence[float]) -> float:
    """Poisson-binomial total variation bound (2 + sqrt(sum p^3 q)) / sum p q."""
    s2, cube, _ = _pb_sums(p)
    return (2.0 + math.sqrt(cube)) / s2


def pb_refined_tv_bound(p: Sequence[float]) -> float:
    """Sharper Poisson-binomial bound that stays small in the Poisson regime."""
    s2, cube, sq = _pb_sums(p)
    frac = sq - math.floor(sq)
    lam = s2 + frac
    main = (1.0 - math.exp(-lam)) / lam * (math.sqrt(cube) + frac)
    return main + (math.exp(-s2 / 4.0) if sq >= 1.0 else 0.0)


def qmax_bound(d_tv: float, sigma: float) -> float:
    """Largest point probability: q_max <= d_TV(W, TP) + 1/(2.3 sigma)."""
    if sigma <= 0:
        raise InvalidParameterError("sigma must be positive")
    return d_tv + 1.0 / (2.3 * sigma)


def moment_bounds(
    s_min: float, s_max: float, a: float, lam: float, q_max: float, sigma: float, e_r_term: float = 0.0
) -> tuple[float, float, float]:
    """``(sigma2_lo, sigma2_hi, abs3_hi)`` from the range of S and q_max."""
    if not lam > 0:
        raise InvalidParameterError("lambda must be positive")
    return (s_min - a) / lam, (s_max - a) / lam, (8.0 * q_max + 1.0 + sigma + e_r_term) / lam


def hyp_var_s_bound(N: int, m: int, n: int) -> float:
    num = n * m * (m + n) ** 2 * (N - n) * (N - m)
    den = m**2 * (N - m + 1) ** 2 * (N - 1) * N**2
    return num / den


def parity_var_s_bound(n: int) -> float:
    if n < 2:
        raise InvalidParameterError("n must be at least 2")
    return (4 * n - 2) ** 2 * (n + 1) / (16 * n**2 * (n + 1) ** 2)


def antivoter_var_s_bound(r: int, n: int, sigma2: float, var_q: float) -> float:
    return (16 * r * r * sigma2 + var_q) / (16 * r * r * n * n)


# -- reports -----------------------------------------------------------------


@dataclass
class BoundCheck:
    name: str
    description: str
    bound: float
    exact: float
    kind: str = "upper"  # "upper": exact <= bound; "lower": bound <= exact
    holds: bool = field(init=False)
    vacuous: bool = field(init=False)

    def __post_init__(self):
        slack = config.BOUND_SLACK
        if self.kind == "upper":
            self.holds = bool(self.exact <= self.bound + slack)
        else:
            self.holds = bool(self.bound <= self.exact + slack)
        self.vacuous = bool(self.kind == "upper" and self.bound > 1.0 and self.name != "third_moment")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "kind": self.kind,
            "bound": self.bound,
            "exact": self.exact,
            "holds": self.holds,
            "vacuous": self.vacuous,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoundCheck":
        return cls(d["name"], d["description"], d["bound"], d["exact"], d["kind"])


@dataclass
class BoundReport:
    model: str
    params: dict
    mu: float
    sigma2: float
    tp_shift: int
    tp_gamma: float
    lam: float
    var_s: float
    var_r: float
    q_max: float
    e_abs3: float
    lipschitz_s: float | None
    d_tv: float
    d_tv_width: float
    d_loc: float
    d_loc_width: float
    lipschitz_operands: tuple | None
    checks: list

    @property
    def all_hold(self) -> bool:
        return all(c.holds for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.holds]

    def check(self, name: str) -> BoundCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "params": self.params,
            "mu": self.mu,
            "sigma2": self.sigma2,
            "tp_shift": self.tp_shift,
            "tp_gamma": self.tp_gamma,
            "lambda": self.lam,
            "var_s": self.var_s,
            "var_r": self.var_r,
            "q_max": self.q_max,
            "e_abs3": self.e_abs3,
            "lipschitz_s": self.lipschitz_s,
            "d_tv": self.d_tv,
            "d_tv_width": self.d_tv_width,
            "d_loc": self.d_loc,
            "d_loc_width": self.d_loc_width,
            "lipschitz_operands": list(self.lipschitz_operands) if self.lipschitz_operands else None,
            "all_hold": self.all_hold,
            "checks": [c.to_dict() for c in self.checks],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoundReport":
        ops = d.get("lipschitz_operands")
        return cls(
            model=d["model"],
            params=d["params"],
            mu=d["mu"],
            sigma2=d["sigma2"],
            tp_shift=d["tp_shift"],
            tp_gamma=d["tp_gamma"],
            lam=d["lambda"],
            var_s=d["var_s"],
            var_r=d["var_r"],
            q_max=d["q_max"],
            e_abs3=d["e_abs3"],
            lipschitz_s=d["lipschitz_s"],
            d_tv=d["d_tv"],
            d_tv_width=d["d_tv_width"],
            d_loc=d["d_loc"],
            d_loc_width=d["d_loc_width"],
            lipschitz_operands=tuple(ops) if ops else None,
            checks=[BoundCheck.from_dict(c) for c in d["checks"]],
        )


def exact_distances(w_pmf: IntegerPmf, eps: float | None = None):
    """Distances between an exact finite law and its moment-matched TP law."""
    mom = moments(w_pmf)
    tp = make_tp(mom.mean, mom.variance)
    win = tp_window(tp, eps)
    return mom, tp, d_tv_bracket(w_pmf, win), d_loc_bracket(w_pmf, win)


def full_report(model: PairModel, eps: float | None = None, var_s_star: float | None = None, extra=None) -> BoundReport:
    """Exact distances of ``model`` to TP(mu, sigma^2) alongside every
    applicable bound.

    The distance values used in the comparisons are the conservative ends
    of their brackets (the TP law is evaluated on a finite window).
    ``var_s_star`` optionally supplies the variance of a finer up-step
    variable; ``extra`` supplies additional model-specific variance bounds
    as ``(name, description, value)``.
    """
    mom, tp, (dtv, dtv_w), (dloc, dloc_w) = exact_distances(model.w_pmf, eps)
    if mom.variance <= 0:
        raise InvalidParameterError("bounds need a non-degenerate law (variance zero)")
    vs = var_s(model)
    vr = var_r(model)
    ing = BoundIngredients(
        lam=model.lam,
        sigma2=mom.variance,
        var_s=vs,
        var_r=vr,
        q_max=mom.q_max,
        e_abs3=mom.abs_central_3,
        lipschitz_s=model.lipschitz_s,
    )
    d = loc_bound(ing)
    ing = BoundIngredients(**{**ing.__dict__, "loc_bound_value": d})
    dloc_hi = dloc + dloc_w

    checks = [
        BoundCheck("tv_bound", "d_TV <= sqrt(Var S)/(lam s2) + 2 sqrt(Var R)/(lam s) + 2/s2", tv_bound(ing), dtv),
        BoundCheck("loc_bound", "d_loc <= 2 sqrt(q Var S)/(lam s2) + 2 q sqrt(Var R)/(lam s) + sqrt(Var R)/(lam s2) + 2/s2", d, dloc_hi),
    ]
    operands = None
    if model.lipschitz_s is not None:
        operands = loc_bound_lipschitz_terms(ing)
        checks.append(
            BoundCheck("loc_bound_lipschitz", "d_loc <= local bound for S Lipschitz in W", loc_bound_lipschitz(ing), dloc_hi)
        )
        checks.append(
            BoundCheck("lipschitz_var_s", "Var S <= L_S^2 sigma^2", lipschitz_variance_bound(model.lipschitz_s, mom.variance), vs)
        )
    if var_s_star is not None:
        checks.append(BoundCheck("var_s_le_var_s_star", "Var S <= Var S* (conditioning)", var_s_star, vs))

    checks.append(BoundCheck("qmax_bound", "q_max <= d_TV + 1/(2.3 sigma)", qmax_bound(dtv, mom.sigma), mom.q_max))

    s_lo, s_hi = s_range(model)
    a = float(np.dot(model.w_pmf.probs, (model.support - mom.mean) * model.r_values))
    e_r = float(np.dot(model.w_pmf.probs, np.abs(model.r_values) * (model.support - mom.mean) ** 2))
    lo, hi, abs3_hi = moment_bounds(s_lo, s_hi, a, model.lam, mom.q_max, mom.sigma, e_r)
    checks += [
        BoundCheck("variance_lower", "(min S - a)/lam <= sigma^2", lo, mom.variance, kind="lower"),
        BoundCheck("variance_upper", "sigma^2 <= (max S - a)/lam", hi, mom.variance),
        BoundCheck("third_moment", "E|W - mu|^3 <= (8 q + 1 + sigma + E|R|(W-mu)^2)/lam", abs3_hi, mom.abs_central_3),
    ]

    if model.name in ("binomial", "poisson-binomial"):
        p = model.params["p"] if model.name == "poisson-binomial" else [model.params["p"]] * model.params["n"]
        checks += [
            BoundCheck("pb_tv_bound", "d_TV <= (2 + sqrt(sum p^3 q)) / sum p q", pb_tv_bound(p), dtv),
            BoundCheck("pb_refined_tv_bound", "d_TV <= refined Poisson-binomial bound", pb_refined_tv_bound(p), dtv),
        ]
    elif model.name == "hypergeometric":
        N, m, n = model.params["N"], model.params["m"], model.params["n"]
        checks.append(BoundCheck("hyp_var_s_bound", "Var S <= hypergeometric closed form", hyp_var_s_bound(N, m, n), vs))
    elif model.name == "parity":
        checks.append(BoundCheck("parity_var_s_bound", "Var S <= parity closed form", parity_var_s_bound(model.params["n"]), vs))
    for name, description, value in extra or ():
        checks.append(BoundCheck(name, description, value, vs))

    return BoundReport(
        model=model.name,
        params=dict(model.params),
        mu=mom.mean,
        sigma2=mom.variance,
        tp_shift=tp.s,
        tp_gamma=tp.gamma,
        lam=model.lam,
        var_s=vs,
        var_r=vr,
        q_max=mom.q_max,
        e_abs3=mom.abs_central_3,
        lipschitz_s=model.lipschitz_s,
        d_tv=dtv,
        d_tv_width=dtv_w,
        d_loc=dloc,
        d_loc_width=dloc_w,
        lipschitz_operands=operands,
        checks=checks,
    )


def antivoter_report(model: PairModel, summary, eps: float | None = None) -> BoundReport:
    """``full_report`` plus the anti-voter variance bound and Var S <= Var S*."""
    bound = antivoter_var_s_bound(summary.r, summary.n, summary.sigma2, summary.var_q)
    extra = [("antivoter_var_s_bound", "Var S <= (16 r^2 sigma^2 + Var Q)/(16 r^2 n^2)", bound)]
    return full_report(model, eps, var_s_star=summary.var_s_star, extra=extra)
