"""Global tolerances and size limits.

Values here are read at call time, so tests and the CLI may override them.
"""

import os

# Stein equation residual allowed for a tabulated solution.
RESIDUAL_TOL = 1e-10

# Slack added to a theoretical bound before declaring a violation.
BOUND_SLACK = 1e-12

# Tolerance for the exact structural identities of pair models.
IDENTITY_TOL = 1e-12

# Default two-sided tail mass left outside a translated Poisson window.
WINDOW_EPS = 1e-12

# Largest n for the exact Poisson-binomial pmf and for its exact pair law.
PB_PMF_LIMIT = 2000
PB_JOINT_LIMIT = 200

# Power iteration controls for the anti-voter chain.
POWER_TOL = 1e-13
POWER_MAX_ITER = 1_000_000


def exact_limit() -> int:
    """Largest vertex count accepted by the exact anti-voter solver."""
    raw = os.environ.get("STEIN_TPA_EXACT_LIMIT")
    if raw is None:
        return 16
    try:
        return int(raw)
    except ValueError as exc:
        raise ValueError(f"STEIN_TPA_EXACT_LIMIT must be an integer, got {raw!r}") from exc
