"""Tabulated solutions of the Poisson Stein equation

    lam * g(j+1) - j * g(j) = I[j in A] - Po(lam){A},   j >= 0,
    g(j) = 0,                                           j <= 0,

and numerical checks of the standard norm estimates for them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dist import TranslatedPoissonParams, poisson_logpmf, tp_window
from .errors import InvalidParameterError, PreconditionError, VerificationError, WindowOverflowError

# Relative size below which the Poisson upper tail is cut off when
# accumulating suffix sums (e^-50 ~ 2e-22).
_TAIL_LOG_CUTOFF = 50.0


@dataclass(frozen=True, eq=False)
class SteinSolution:
    lambda_param: float
    target_set: frozenset
    window_max: int
    values: np.ndarray  # g(0), ..., g(window_max + 1)

    def g(self, j: int) -> float:
        if j <= 0 or j > self.window_max + 1:
            if j <= 0:
                return 0.0
            raise IndexError(f"g({j}) is outside the tabulated window")
        return float(self.values[j])

    @property
    def delta(self) -> np.ndarray:
        """Forward differences g(j+1) - g(j) for j = 0..window_max."""
        return np.diff(self.values)

    def rhs(self) -> np.ndarray:
        """Right-hand side I[j in A] - Po(lam){A} on j = 0..window_max."""
        lam = self.lambda_param
        pa = _poisson_set_mass(lam, self.target_set)
        ind = np.zeros(self.window_max + 1)
        for a in self.target_set:
            if a <= self.window_max:
                ind[a] = 1.0
        return ind - pa

    def residual(self) -> np.ndarray:
        """The Stein equation evaluated with the recurrence, per window point."""
        j = np.arange(self.window_max + 1)
        g = self.values
        return self.lambda_param * g[1:] - j * g[:-1] - self.rhs()


def default_window(lam: float) -> int:
    return int(math.ceil(lam + 12.0 * math.sqrt(lam) + 30.0))


def _poisson_set_mass(lam: float, target: frozenset) -> float:
    if not target:
        return 0.0
    logs = poisson_logpmf(np.fromiter(sorted(target), dtype=float), lam)
    return float(np.exp(np.logaddexp.reduce(logs)))


def _log_cumsum(logs: np.ndarray) -> np.ndarray:
    return np.logaddexp.accumulate(logs)


def solve_stein(lambda_param: float, target_set, window_max: int | None = None) -> SteinSolution:
    """Solve the Poisson Stein equation for the indicator of ``target_set``.

    Uses the closed form

        g(j+1) = [Po(A & U_j) Po(U_j^c) - Po(A & U_j^c) Po(U_j)] / (lam pi_j)

    with ``U_j = {0..j}``; every factor is kept as a logarithm and divided by
    ``pi_j`` before exponentiating, so neither the small point masses nor the
    large ratios under- or overflow.
    """
    lam = float(lambda_param)
    if not lam > 0.0 or not math.isfinite(lam):
        raise InvalidParameterError(f"lambda must be positive, got {lambda_param!r}")
    target = frozenset(int(a) for a in target_set)
    if any(a < 0 for a in target):
        raise InvalidParameterError("target set must contain non-negative integers only")
    jmax = default_window(lam) if window_max is None else int(window_max)
    if jmax < 1:
        raise InvalidParameterError("window_max must be at least 1")

    # Extend the grid until the Poisson tail beyond it is negligible relative
    # to the smallest mass used in the window.
    last = max(jmax + 1, max(target, default=0))
    log_pi_last = float(poisson_logpmf(jmax + 1, lam))
    ext = last
    while float(poisson_logpmf(ext, lam)) > log_pi_last - _TAIL_LOG_CUTOFF or ext <= lam:
        ext += max(16, int(math.sqrt(lam)))
    grid = np.arange(ext + 1)
    log_pi = poisson_logpmf(grid, lam)
    in_a = np.zeros(ext + 1, dtype=bool)
    in_a[sorted(target)] = True
    log_pi_a = np.where(in_a, log_pi, -np.inf)

    log_lower = _log_cumsum(log_pi)  # log Po(U_j)
    log_lower_a = _log_cumsum(log_pi_a)  # log Po(A & U_j)
    log_upper_incl = _log_cumsum(log_pi[::-1])[::-1]  # log Po({j, j+1, ...})
    log_upper_a_incl = _log_cumsum(log_pi_a[::-1])[::-1]

    j = np.arange(jmax + 1)
    log_upper = log_upper_incl[j + 1]  # log Po(U_j^c)
    log_upper_a = log_upper_a_incl[j + 1]
    denom = math.log(lam) + log_pi[j]
    with np.errstate(over="ignore", invalid="ignore"):
        first = np.exp(log_lower_a[j] + log_upper - denom)
        second = np.exp(log_upper_a + log_lower[j] - denom)
        gnext = first - second

    bad = ~np.isfinite(gnext)
    if bad.any():
        safe = int(np.argmax(bad))
        raise WindowOverflowError(
            f"Stein solution leaves the representable range at j={safe + 1}; "
            f"largest safe window_max is {max(safe - 1, 0)}",
            safe_max=max(safe - 1, 0),
        )
    values = np.concatenate(([0.0], gnext))
    values.setflags(write=False)
    return SteinSolution(lam, target, jmax, values)


def stein_residual(sol: SteinSolution) -> float:
    return float(np.abs(sol.residual()).max())


def sup_norms(sol: SteinSolution) -> tuple[float, float]:
    """``(max |g|, max |Delta g|)`` over the tabulated window."""
    return float(np.abs(sol.values).max()), float(np.abs(sol.delta).max())


def delta_sums(sol: SteinSolution, check_shape: bool = True) -> tuple[float, float]:
    """Sum of |Delta g| and of (Delta g)^2 for a singleton target set.

    Beyond the window g is positive and decreasing to zero, so the missing
    part of the absolute sum is exactly g(window_max + 1); it is added, and
    its square is added as an upper estimate of the missing squares.
    """
    if len(sol.target_set) != 1:
        raise PreconditionError("delta_sums needs a singleton target set")
    (i,) = sol.target_set
    if check_shape:
        check_singleton_shape(sol)
    d = sol.delta
    rest = abs(float(sol.values[-1]))
    return float(np.abs(d).sum()) + rest, float(np.dot(d, d)) + rest * rest


def check_singleton_shape(sol: SteinSolution, tol: float = 1e-15) -> None:
    """g is non-positive and non-increasing on 0..i, positive and
    non-increasing after i (the upward jump at i is the only one)."""
    (i,) = sol.target_set
    g = sol.values
    scale = tol * max(1.0, float(np.abs(g).max()))
    top = min(i, sol.window_max + 1)
    head = g[: top + 1]
    if np.any(head > scale) or np.any(np.diff(head) > scale):
        raise VerificationError(f"g_{{{i}}} is not negative and decreasing up to {i}")
    if i + 1 <= sol.window_max + 1:
        tail = g[i + 1 :]
        if np.any(tail < -scale) or np.any(np.diff(tail) > scale):
            raise VerificationError(f"g_{{{i}}} is not positive and decreasing after {i}")


def tp_deviation_max(params: TranslatedPoissonParams, window_eps: float = 1e-14) -> float:
    """max_k TP(mu, sigma2){k} * |k - mu| over a covering window.

    The window holds all but ``window_eps`` of the mass and is widened by
    three standard deviations on each side (never below the shift ``s``).
    """
    win = tp_window(params, window_eps)
    margin = int(math.ceil(3.0 * math.sqrt(params.poisson_mean))) + 1
    lo = max(params.s, win.offset - margin)
    hi = win.last + margin
    k = np.arange(lo, hi + 1)
    probs = np.exp(poisson_logpmf(k - params.s, params.poisson_mean))
    return float(np.max(probs * np.abs(k - params.mu)))
