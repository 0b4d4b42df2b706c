"""Exchangeable-pair models with exact laws.

A ``PairModel`` carries the exact law of W, the exact joint law of one
exchangeable step (W, W'), the drift constant ``lam`` with
E[W' - mu | W] = (1 - lam)(W - mu) + R, the remainder R as a function of W
and the up-step probability S(w) = P[W' = w + 1 | W = w].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import config
from .dist import IntegerPmf, moments
from .errors import InvalidParameterError, PreconditionError, SizeLimitError


@dataclass(frozen=True, eq=False)
class PairModel:
    name: str
    w_pmf: IntegerPmf
    joint: np.ndarray  # joint[a, b] = P[W = offset + a, W' = offset + b]
    lam: float
    s_values: np.ndarray  # aligned with w_pmf.support
    r_values: np.ndarray
    lipschitz_s: float | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        size = len(self.w_pmf)
        if self.joint.shape != (size, size):
            raise InvalidParameterError("joint law must be square over the support window of W")
        # Cov(W, W') = (1 - lam) Var W >= -Var W caps lam at 2
        if not 0.0 < self.lam <= 2.0:
            raise InvalidParameterError(f"lambda must lie in (0, 2], got {self.lam!r}")
        if len(self.s_values) != size or len(self.r_values) != size:
            raise InvalidParameterError("S and R must be tabulated on the support window of W")

    @property
    def offset(self) -> int:
        return self.w_pmf.offset

    @property
    def support(self) -> np.ndarray:
        return self.w_pmf.support

    @property
    def mean(self) -> float:
        return moments(self.w_pmf).mean

    def joint_at(self, w: int, wp: int) -> float:
        a, b = w - self.offset, wp - self.offset
        n = len(self.w_pmf)
        if 0 <= a < n and 0 <= b < n:
            return float(self.joint[a, b])
        return 0.0

    def down_values(self) -> np.ndarray:
        """P[W' = w - 1 | W = w] from the joint law (0 where W has no mass)."""
        p = self.w_pmf.probs
        down = np.zeros(len(p))
        down[1:] = np.diagonal(self.joint, -1)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(p > 0, down / p, 0.0)

    def up_values(self) -> np.ndarray:
        p = self.w_pmf.probs
        up = np.zeros(len(p))
        up[:-1] = np.diagonal(self.joint, 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(p > 0, up / p, 0.0)


def joint_from_steps(pmf: np.ndarray, up: np.ndarray, down: np.ndarray) -> np.ndarray:
    """Joint law of a nearest-neighbour step from conditional up/down rates."""
    size = len(pmf)
    joint = np.zeros((size, size))
    idx = np.arange(size)
    joint[idx[:-1], idx[:-1] + 1] = pmf[:-1] * up[:-1]
    joint[idx[1:], idx[1:] - 1] = pmf[1:] * down[1:]
    joint[idx, idx] = pmf * (1.0 - up - down)
    return joint


def _stepping_model(name, pmf: IntegerPmf, up, down, lam, lipschitz_s, params) -> PairModel:
    up = np.asarray(up, dtype=float)
    down = np.asarray(down, dtype=float)
    joint = joint_from_steps(pmf.probs, up, down)
    return PairModel(name, pmf, joint, lam, up, np.zeros(len(pmf)), lipschitz_s, params)


def point_mass_model(k: int, lam: float = 0.5) -> PairModel:
    """Degenerate model W = W' = k."""
    return _stepping_model("point-mass", IntegerPmf(k, np.array([1.0])), [0.0], [0.0], lam, 0.0, {"k": k})


# -- Poisson-binomial --------------------------------------------------------


@dataclass(frozen=True)
class PoissonBinomialSpec:
    p: tuple

    def __post_init__(self):
        p = tuple(float(x) for x in self.p)
        if not p:
            raise InvalidParameterError("need at least one indicator")
        if any(not 0.0 < x < 1.0 for x in p):
            raise InvalidParameterError("success probabilities must lie strictly in (0, 1)")
        object.__setattr__(self, "p", p)


def poisson_binomial_pmf(p: Sequence[float]) -> np.ndarray:
    """Exact pmf on 0..n by sequential convolution."""
    if len(p) > config.PB_PMF_LIMIT:
        raise SizeLimitError(f"n={len(p)} exceeds the exact pmf limit {config.PB_PMF_LIMIT}", config.PB_PMF_LIMIT)
    pmf = np.array([1.0])
    for pi in p:
        nxt = np.zeros(len(pmf) + 1)
        nxt[:-1] = pmf * (1.0 - pi)
        nxt[1:] += pmf * pi
        pmf = nxt
    return pmf


def build_poisson_binomial(spec: PoissonBinomialSpec | Sequence[float]) -> PairModel:
    """Resample-one-coordinate pair for a sum of independent indicators.

    A prefix dynamic program carries, per success count c, the mass
    P[W = c] together with E[X; W = c] and E[Y; W = c] for
    X = sum (1 - J_i) p_i and Y = sum J_i (1 - p_i), so the conditional
    up and down rates E[X | W] / n and E[Y | W] / n are exact in O(n^2).
    """
    if not isinstance(spec, PoissonBinomialSpec):
        spec = PoissonBinomialSpec(tuple(spec))
    p = np.asarray(spec.p)
    n = len(p)
    if n > config.PB_JOINT_LIMIT:
        raise SizeLimitError(f"n={n} exceeds the exact pair-law limit {config.PB_JOINT_LIMIT}", config.PB_JOINT_LIMIT)
    mass = np.array([1.0])
    ex = np.array([0.0])
    ey = np.array([0.0])
    for pi in p:
        qi = 1.0 - pi
        m2 = np.zeros(len(mass) + 1)
        x2 = np.zeros(len(mass) + 1)
        y2 = np.zeros(len(mass) + 1)
        # J_i = 0 keeps the count, contributes pi to X
        m2[:-1] += mass * qi
        x2[:-1] += (ex + mass * pi) * qi
        y2[:-1] += ey * qi
        # J_i = 1 raises the count, contributes qi to Y
        m2[1:] += mass * pi
        x2[1:] += ex * pi
        y2[1:] += (ey + mass * qi) * pi
        mass, ex, ey = m2, x2, y2

    with np.errstate(divide="ignore", invalid="ignore"):
        up = np.where(mass > 0, ex / (n * mass), 0.0)
        down = np.where(mass > 0, ey / (n * mass), 0.0)
    equal = bool(np.all(p == p[0]))
    lam = 1.0 / n
    lip = lam * float(p[0]) if equal else None
    name = "binomial" if equal else "poisson-binomial"
    params = {"n": n, "p": float(p[0])} if equal else {"p": [float(x) for x in p]}
    return _stepping_model(name, IntegerPmf(0, mass), up, down, lam, lip, params)


def build_binomial(n: int, p: float) -> PairModel:
    return build_poisson_binomial([p] * n)


# -- hypergeometric ----------------------------------------------------------


@dataclass(frozen=True)
class HypergeometricSpec:
    N: int
    m: int
    n: int

    def __post_init__(self):
        if min(self.N, self.m, self.n) < 1:
            raise InvalidParameterError("N, m and n must be positive")
        if self.m > self.N or self.n > self.N:
            raise InvalidParameterError("need m <= N and n <= N")


def hypergeometric_pmf(N: int, m: int, n: int) -> IntegerPmf:
    """Number of balls among the first n of N urns holding m balls."""
    lo, hi = max(0, n + m - N), min(n, m)
    total = math.comb(N, m)
    probs = [float(Fraction(math.comb(n, w) * math.comb(N - n, m - w), total)) for w in range(lo, hi + 1)]
    return IntegerPmf(lo, np.array(probs))


def build_hypergeometric(spec: HypergeometricSpec | tuple) -> PairModel:
    """Move a uniformly chosen ball into a uniformly chosen empty urn
    (possibly the one it came from)."""
    if not isinstance(spec, HypergeometricSpec):
        spec = HypergeometricSpec(*spec)
    N, m, n = spec.N, spec.m, spec.n
    if N - m < 1:
        raise PreconditionError("m = N leaves no empty urn to move a ball into")
    pmf = hypergeometric_pmf(N, m, n)
    w = pmf.support.astype(float)
    scale = m * (N - m + 1)
    up = (m - w) * (n - w) / scale
    down = w * (N - n - m + w) / scale
    return _stepping_model(
        "hypergeometric", pmf, up, down, N / scale, (m + n) / scale, {"N": N, "m": m, "n": n}
    )


# -- parity ------------------------------------------------------------------


@dataclass(frozen=True)
class ParitySpec:
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise PreconditionError("the parity model needs n >= 2")


def parity_pmf(n: int) -> IntegerPmf:
    """Law of W = V/2 where V is Bi(n, 1/2) rounded up to the next even integer."""
    top = (n + 1) // 2
    denom = 2**n
    probs = []
    for w in range(top + 1):
        count = (math.comb(n, 2 * w) if 2 * w <= n else 0) + (math.comb(n, 2 * w - 1) if w >= 1 else 0)
        probs.append(float(Fraction(count, denom)))
    return IntegerPmf(0, np.array(probs))


def parity_s(n: int, w):
    """Up-step probability: both flipped coordinates currently zero."""
    w = np.asarray(w, dtype=float)
    return (n * (n + 1) - (4 * n + 2) * w + 4 * w * w) / (n * (n + 1))


def build_parity(spec: ParitySpec | int) -> PairModel:
    """Complement two distinct random coordinates of (J_1..J_n, parity bit).

    lam = 4/(n+1), and the down rate follows from the drift identity
    P[down | w] = S(w) + lam (w - mu) with mu = (n+1)/4.
    """
    if not isinstance(spec, ParitySpec):
        spec = ParitySpec(int(spec))
    n = spec.n
    pmf = parity_pmf(n)
    w = pmf.support.astype(float)
    lam = 4.0 / (n + 1)
    up = parity_s(n, w)
    down = up + lam * (w - (n + 1) / 4.0)
    # piecewise-linear interpolation of S through the integer support points
    lip = (4 * n - 2) / (n * (n + 1))
    return _stepping_model("parity", pmf, up, down, lam, lip, {"n": n})


# -- verification of the structural identities ------------------------------


def verify_exchangeability(model: PairModel) -> float:
    """max |P[W=a, W'=b] - P[W=b, W'=a]|."""
    return float(np.abs(model.joint - model.joint.T).max())


def support_violation(model: PairModel) -> float:
    """Total joint mass on steps of size larger than one."""
    size = len(model.w_pmf)
    a, b = np.indices((size, size))
    return float(np.abs(model.joint[np.abs(a - b) > 1]).sum())


def marginal_discrepancy(model: PairModel) -> float:
    p = model.w_pmf.probs
    return float(max(np.abs(model.joint.sum(1) - p).max(), np.abs(model.joint.sum(0) - p).max()))


def verify_regression(model: PairModel) -> float:
    """max_w |E[W' | W = w] - mu - (1 - lam)(w - mu) - R(w)| over supported w."""
    p = model.w_pmf.probs
    k = model.support.astype(float)
    mu = float(np.dot(k, p))
    steps = k[None, :] - k[:, None]
    drift = (model.joint * steps).sum(1)  # E[(W' - W); W = w]
    mask = p > 0
    # E[W' | w] - mu - (1 - lam)(w - mu) = drift/p + lam (w - mu)
    resid = drift[mask] / p[mask] + model.lam * (k[mask] - mu) - model.r_values[mask]
    return float(np.abs(resid).max())


def expected_up_down(model: PairModel) -> tuple[float, float]:
    return float(np.trace(model.joint, 1)), float(np.trace(model.joint, -1))


def verify_d1_identity(model: PairModel) -> float:
    """max(|E D_+1 - lam sigma^2 - a|, |E D_+1 - E D_-1|) with a = E{(W - mu) R}."""
    p = model.w_pmf.probs
    mom = moments(model.w_pmf)
    a = float(np.dot(p, (model.support - mom.mean) * model.r_values))
    e_up = float(np.dot(p, model.s_values))
    joint_up, joint_down = expected_up_down(model)
    return max(abs(e_up - model.lam * mom.variance - a), abs(joint_up - joint_down), abs(e_up - joint_up))


def verify_w_function(
    model: PairModel, window: range | None = None, f: Callable[[np.ndarray], np.ndarray] | None = None
) -> float:
    """Discrepancy in E{(W - mu) f(W)} = E{S(W) Delta f(W)} / lam.

    Without ``f`` the check runs over the indicator basis f = I[. = k] for
    k in ``window`` (default: the support plus one point on each side).
    """
    if np.any(model.r_values != 0.0):
        raise PreconditionError("the w-function identity needs R = 0")
    p = model.w_pmf.probs
    k = model.support.astype(float)
    mu = float(np.dot(k, p))
    if f is not None:
        fk = np.asarray(f(k), dtype=float)
        dfk = np.asarray(f(k + 1), dtype=float) - fk
        lhs = float(np.dot(p, (k - mu) * fk))
        rhs = float(np.dot(p, model.s_values * dfk)) / model.lam
        return abs(lhs - rhs)
    if window is None:
        window = range(model.offset - 1, model.w_pmf.last + 2)
    ps = p * model.s_values
    worst = 0.0
    for point in window:
        lhs = model.w_pmf.at(point) * (point - mu)
        i = point - model.offset
        below = ps[i - 1] if 0 <= i - 1 < len(p) else 0.0
        here = ps[i] if 0 <= i < len(p) else 0.0
        worst = max(worst, abs(lhs - (below - here) / model.lam))
    return worst


def var_s(model: PairModel) -> float:
    p = model.w_pmf.probs
    s = model.s_values
    mean = float(np.dot(p, s))
    return max(float(np.dot(p, (s - mean) ** 2)), 0.0)


def var_r(model: PairModel) -> float:
    p = model.w_pmf.probs
    r = model.r_values
    mean = float(np.dot(p, r))
    return max(float(np.dot(p, (r - mean) ** 2)), 0.0)


def lipschitz_variance_bound(l: float, var_x: float) -> float:
    """Variance bound for a Lipschitz function of X: l^2 Var X."""
    if l < 0 or var_x < 0:
        raise InvalidParameterError("Lipschitz constant and variance must be non-negative")
    return l * l * var_x


def s_range(model: PairModel) -> tuple[float, float]:
    """(min, max) of S over the points where W has positive mass."""
    s = model.s_values[model.w_pmf.probs > 0]
    return float(s.min()), float(s.max())
