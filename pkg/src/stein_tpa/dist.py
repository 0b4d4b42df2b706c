"""Exact integer distributions, the translated Poisson family and the
total-variation / local distances between integer laws."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import config
from .errors import InvalidParameterError, UnsupportedInputError

NORMALIZATION_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class IntegerPmf:
    """Point probabilities on ``offset, offset+1, ...`` plus the mass that
    lies outside the stored window (zero for exactly finite laws)."""

    offset: int
    probs: np.ndarray
    tail_mass: float = 0.0

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1:
            raise InvalidParameterError("probs must be one-dimensional")
        if np.any(probs < 0.0) or np.any(probs > 1.0):
            raise InvalidParameterError("probabilities must lie in [0, 1]")
        if self.tail_mass < 0.0:
            raise InvalidParameterError("tail_mass must be non-negative")
        total = float(probs.sum()) + self.tail_mass
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise InvalidParameterError(f"pmf is not normalized (total mass {total!r})")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "offset", int(self.offset))
        object.__setattr__(self, "tail_mass", float(self.tail_mass))

    def __len__(self) -> int:
        return len(self.probs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, IntegerPmf):
            return NotImplemented
        return (
            self.offset == other.offset
            and self.tail_mass == other.tail_mass
            and np.array_equal(self.probs, other.probs)
        )

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + len(self.probs))

    @property
    def last(self) -> int:
        return self.offset + len(self.probs) - 1

    def at(self, k: int) -> float:
        i = k - self.offset
        if 0 <= i < len(self.probs):
            return float(self.probs[i])
        return 0.0

    def on(self, lo: int, hi: int) -> np.ndarray:
        """Stored probabilities on ``lo..hi`` (zeros off the window)."""
        out = np.zeros(hi - lo + 1)
        a, b = max(lo, self.offset), min(hi, self.last)
        if a <= b:
            out[a - lo : b - lo + 1] = self.probs[a - self.offset : b - self.offset + 1]
        return out

    def to_dict(self) -> dict:
        return {"offset": self.offset, "probs": [float(x) for x in self.probs], "tail_mass": self.tail_mass}

    @classmethod
    def from_dict(cls, d: dict) -> "IntegerPmf":
        return cls(int(d["offset"]), np.asarray(d["probs"], dtype=float), float(d["tail_mass"]))


def point_mass(k: int) -> IntegerPmf:
    return IntegerPmf(k, np.array([1.0]))


def from_mapping(masses: dict[int, float]) -> IntegerPmf:
    lo, hi = min(masses), max(masses)
    probs = np.zeros(hi - lo + 1)
    for k, p in masses.items():
        probs[k - lo] += p
    return IntegerPmf(lo, probs)


@dataclass(frozen=True)
class TranslatedPoissonParams:
    """TP(mu, sigma2): Po(sigma2 + gamma) shifted by the integer ``s``."""

    mu: float
    sigma2: float
    s: int = field(init=False)
    gamma: float = field(init=False)

    def __post_init__(self):
        if not (self.sigma2 > 0.0) or not math.isfinite(self.sigma2):
            raise InvalidParameterError(f"sigma2 must be positive, got {self.sigma2!r}")
        if not math.isfinite(self.mu):
            raise InvalidParameterError("mu must be finite")
        diff = self.mu - self.sigma2
        s = math.floor(diff)
        gamma = diff - s
        if gamma >= 1.0:  # rounding when diff is a tiny negative number
            s, gamma = s + 1, 0.0
        object.__setattr__(self, "s", int(s))
        object.__setattr__(self, "gamma", float(gamma))

    @property
    def poisson_mean(self) -> float:
        return self.sigma2 + self.gamma


def make_tp(mu: float, sigma2: float) -> TranslatedPoissonParams:
    return TranslatedPoissonParams(float(mu), float(sigma2))


def poisson_logpmf(j, lam: float) -> np.ndarray:
    """log Po(lam){j}; ``-inf`` for negative j."""
    j = np.asarray(j, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = special.xlogy(j, lam) - lam - special.gammaln(j + 1.0)
    return np.where(j < 0, -np.inf, out)


def poisson_pmf(j, lam: float) -> np.ndarray:
    return np.exp(poisson_logpmf(j, lam))


def tp_pmf(params: TranslatedPoissonParams, k: int) -> float:
    return float(poisson_pmf(k - params.s, params.poisson_mean))


def _lower_tail(j: int, lam: float) -> float:
    """P[Y <= j] for Y ~ Po(lam)."""
    return 0.0 if j < 0 else float(special.pdtr(j, lam))


def _upper_tail(j: int, lam: float) -> float:
    """P[Y > j] for Y ~ Po(lam)."""
    return 1.0 if j < 0 else float(special.pdtrc(j, lam))


def poisson_window(lam: float, eps: float) -> tuple[int, int, float]:
    """Smallest window ``[lo, hi]`` around the mode with each tail <= eps/2.

    Returns ``(lo, hi, tail)`` with ``tail`` the exact mass outside.
    """
    if not 0.0 < eps <= 1.0:
        raise InvalidParameterError(f"eps must lie in (0, 1], got {eps!r}")
    half = eps / 2.0
    mode = int(math.floor(lam))
    width = max(1, int(math.ceil(math.sqrt(lam))))

    lo = mode
    while lo > 0 and _lower_tail(lo - 1, lam) > half:
        lo = max(0, lo - width)
    while lo < mode and _lower_tail(lo, lam) <= half:
        lo += 1

    hi = mode
    while _upper_tail(hi, lam) > half:
        hi += width
    while hi > lo and _upper_tail(hi - 1, lam) <= half:
        hi -= 1
    return lo, hi, _lower_tail(lo - 1, lam) + _upper_tail(hi, lam)


def tp_window(params: TranslatedPoissonParams, eps: float | None = None) -> IntegerPmf:
    """Translated Poisson masses on a window holding all but ``eps`` mass."""
    eps = config.WINDOW_EPS if eps is None else eps
    lam = params.poisson_mean
    lo, hi, tail = poisson_window(lam, eps)
    probs = poisson_pmf(np.arange(lo, hi + 1), lam)
    return IntegerPmf(lo + params.s, probs, tail)


def tp_sample(params: TranslatedPoissonParams, rng: np.random.Generator, size=None):
    """Draw from TP(mu, sigma2) using the caller's generator."""
    draw = rng.poisson(params.poisson_mean, size=size)
    if size is None:
        return int(draw) + params.s
    return draw.astype(np.int64) + params.s


def _aligned(p: IntegerPmf, q: IntegerPmf) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = min(p.offset, q.offset), max(p.last, q.last)
    return p.on(lo, hi), q.on(lo, hi)


def d_tv_bracket(p: IntegerPmf, q: IntegerPmf) -> tuple[float, float]:
    """Upper value of the total variation distance and the bracket width.

    The true distance lies in ``[value - width, value]``; the width is zero
    when both laws are exactly finite.
    """
    a, b = _aligned(p, q)
    value = 0.5 * (float(np.abs(a - b).sum()) + p.tail_mass + q.tail_mass)
    return min(value, 1.0), p.tail_mass + q.tail_mass


def d_tv(p: IntegerPmf, q: IntegerPmf) -> float:
    return d_tv_bracket(p, q)[0]


def d_loc_bracket(p: IntegerPmf, q: IntegerPmf) -> tuple[float, float]:
    """Max pointwise discrepancy on the stored windows, and the most that
    unrecorded (off-window) mass could add to it."""
    a, b = _aligned(p, q)
    value = float(np.abs(a - b).max()) if len(a) else 0.0
    return value, max(p.tail_mass, q.tail_mass)


def d_loc(p: IntegerPmf, q: IntegerPmf) -> float:
    return d_loc_bracket(p, q)[0]


@dataclass(frozen=True)
class Moments:
    mean: float
    variance: float
    abs_central_3: float
    q_max: float

    @property
    def sigma(self) -> float:
        return math.sqrt(self.variance)


def moments(p: IntegerPmf) -> Moments:
    if p.tail_mass != 0.0:
        raise UnsupportedInputError("exact moments need a law with zero off-window mass")
    k = p.support.astype(float)
    w = p.probs
    mean = math.fsum(k * w)
    dev = k - mean
    variance = math.fsum(dev * dev * w)
    abs3 = math.fsum(np.abs(dev) ** 3 * w)
    return Moments(mean, max(variance, 0.0), abs3, float(w.max()))
