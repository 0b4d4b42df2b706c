"""Anti-voter model on finite regular graphs.

At each step a uniform vertex i and a uniform neighbour j of i are chosen
and i takes the opinion opposite to j's.  W counts the vertices with
opinion 1.  The stationary law is obtained exactly for small graphs (power
iteration over all 2^n configurations) and by Monte Carlo otherwise.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from . import config
from .dist import IntegerPmf, moments
from .errors import (
    ExcludedGraphError,
    GraphParseError,
    InvalidParameterError,
    PreconditionError,
    RegularityError,
    SizeLimitError,
    VerificationError,
)
from .models import PairModel

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None


# -- graphs ------------------------------------------------------------------


@dataclass(frozen=True)
class Graph:
    n: int
    adjacency: tuple  # sorted neighbour tuples
    r: int
    name: str = "graph"
    connected: bool = True
    bipartite: bool = False
    cycle: bool = False

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u, nb in enumerate(self.adjacency) for v in nb if u < v]

    @property
    def is_complete(self) -> bool:
        return self.r == self.n - 1

    def neighbor_array(self) -> np.ndarray:
        return np.array(self.adjacency, dtype=np.int64).reshape(self.n, self.r)

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.int64)
        for u, nb in enumerate(self.adjacency):
            a[u, list(nb)] = 1
        return a


def _is_connected(adj) -> bool:
    seen = {0}
    todo = deque([0])
    while todo:
        u = todo.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                todo.append(v)
    return len(seen) == len(adj)


def _is_bipartite(adj) -> bool:
    color = [-1] * len(adj)
    for start in range(len(adj)):
        if color[start] >= 0:
            continue
        color[start] = 0
        todo = deque([start])
        while todo:
            u = todo.popleft()
            for v in adj[u]:
                if color[v] < 0:
                    color[v] = 1 - color[u]
                    todo.append(v)
                elif color[v] == color[u]:
                    return False
    return True


def graph_from_edges(n: int, edges, name: str = "graph") -> Graph:
    """Validated r-regular graph; raises on irregular, bipartite or cycle graphs."""
    if n < 1:
        raise InvalidParameterError("a graph needs at least one vertex")
    nbrs = [set() for _ in range(n)]
    for u, v in edges:
        if u == v:
            raise InvalidParameterError(f"self-loop at vertex {u}")
        nbrs[u].add(v)
        nbrs[v].add(u)
    degrees = {len(s) for s in nbrs}
    if len(degrees) != 1:
        raise RegularityError(f"graph is not regular (degrees {sorted(degrees)})")
    r = degrees.pop()
    if r == 0:
        raise RegularityError("graph has no edges")
    adj = tuple(tuple(sorted(s)) for s in nbrs)
    connected = _is_connected(adj)
    bipartite = _is_bipartite(adj)
    cycle = r == 2 and connected
    reasons = tuple(x for x, bad in (("bipartite", bipartite), ("cycle", cycle)) if bad)
    if reasons:
        raise ExcludedGraphError(
            f"graph {name!r} is excluded by the standing assumption: it is {' and '.join(reasons)}",
            reasons,
        )
    return Graph(n, adj, r, name, connected, bipartite, cycle)


def complete_graph(n: int) -> Graph:
    if n <= 3:
        raise ExcludedGraphError(
            f"K{n} is excluded: K3 is a cycle and smaller complete graphs are bipartite or trivial",
            ("cycle",) if n == 3 else ("bipartite",),
        )
    return graph_from_edges(n, [(u, v) for u in range(n) for v in range(u + 1, n)], f"K{n}")


def petersen_graph() -> Graph:
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return graph_from_edges(10, outer + spokes + inner, "petersen")


def load_graph(text: str, name: str = "graph") -> Graph:
    """Parse ``n m`` followed by ``m`` lines ``u v`` (0-based, undirected)."""
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise GraphParseError("empty graph file", 1)

    def ints(lineno: int, expected: int) -> list[int]:
        parts = lines[lineno - 1].split()
        if len(parts) != expected:
            raise GraphParseError(f"expected {expected} integers, got {len(parts)}", lineno)
        try:
            return [int(x) for x in parts]
        except ValueError:
            raise GraphParseError(f"non-integer token in {lines[lineno - 1]!r}", lineno) from None

    n, m = ints(1, 2)
    if n < 1 or m < 0:
        raise GraphParseError("vertex count must be positive and edge count non-negative", 1)
    if len(lines) - 1 != m:
        raise GraphParseError(f"header announces {m} edges but {len(lines) - 1} edge lines follow", len(lines))
    seen = set()
    edges = []
    for lineno in range(2, m + 2):
        u, v = ints(lineno, 2)
        if not (0 <= u < n and 0 <= v < n):
            raise GraphParseError(f"vertex index out of range 0..{n - 1}", lineno)
        if u == v:
            raise GraphParseError(f"self-loop at vertex {u}", lineno)
        key = (min(u, v), max(u, v))
        if key in seen:
            raise GraphParseError(f"duplicate edge {u} {v}", lineno)
        seen.add(key)
        edges.append(key)
    return graph_from_edges(n, edges, name)


def format_graph(g: Graph) -> str:
    edges = g.edges
    return "\n".join([f"{g.n} {len(edges)}"] + [f"{u} {v}" for u, v in edges]) + "\n"


# -- configurations ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Configuration:
    opinions: np.ndarray

    def __post_init__(self):
        ops = np.asarray(self.opinions, dtype=np.int8)
        if np.any((ops != 0) & (ops != 1)):
            raise InvalidParameterError("opinions must be 0 or 1")
        ops.setflags(write=False)
        object.__setattr__(self, "opinions", ops)

    def __eq__(self, other):
        return isinstance(other, Configuration) and np.array_equal(self.opinions, other.opinions)

    @property
    def w(self) -> int:
        return int(self.opinions.sum())

    def flip(self) -> "Configuration":
        return Configuration(1 - self.opinions)


def step(c: Configuration, g: Graph, rng: np.random.Generator) -> Configuration:
    i = int(rng.integers(g.n))
    j = g.adjacency[i][int(rng.integers(g.r))]
    ops = c.opinions.copy()
    ops[i] = 1 - ops[j]
    return Configuration(ops)


def q_statistic(c: Configuration, g: Graph) -> int:
    """Sum over ordered adjacent pairs of (2J_i - 1)(2J_j - 1)."""
    x = 2 * c.opinions.astype(np.int64) - 1
    return int(sum(x[i] * x[j] for i, nb in enumerate(g.adjacency) for j in nb))


def s_star_direct(c: Configuration, g: Graph) -> float:
    """Conditional up-step probability given the whole configuration."""
    J = c.opinions
    total = 0.0
    for i, nb in enumerate(g.adjacency):
        if J[i] == 0:
            total += 1.0 - sum(int(J[j]) for j in nb) / g.r
    return total / g.n


def s_star_from_q(c: Configuration, g: Graph) -> float:
    wt = 2 * c.w - g.n
    return (g.r * g.n - 2 * g.r * wt + q_statistic(c, g)) / (4 * g.r * g.n)


def s_star_batch(opinions: np.ndarray, g: Graph) -> tuple[np.ndarray, np.ndarray]:
    """Both forms of the up-step probability for a batch of configurations
    (one per row): the vertex average and the (W~, Q) expression."""
    J = np.asarray(opinions, dtype=float)
    A = g.adjacency_matrix().astype(float)
    ones_nb = J @ A
    direct = ((1.0 - J) * (1.0 - ones_nb / g.r)).mean(axis=1)
    x = 2.0 * J - 1.0
    q = ((x @ A) * x).sum(axis=1)
    wt = x.sum(axis=1)
    via_q = (g.r * g.n - 2 * g.r * wt + q) / (4.0 * g.r * g.n)
    return direct, via_q


def s_star(c: Configuration, g: Graph, tol: float = 1e-12) -> float:
    direct = s_star_direct(c, g)
    via_q = s_star_from_q(c, g)
    if abs(direct - via_q) > tol:
        raise VerificationError(f"up-step probability forms disagree: {direct!r} vs {via_q!r}")
    return direct


# -- stationary summaries ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class StationarySummary:
    graph: str
    n: int
    r: int
    w_pmf: IntegerPmf
    var_q: float
    var_s_star: float
    s_given_w: np.ndarray  # indexed by w = 0..n
    mu: float
    sigma2: float
    e_abs3: float
    exact: bool
    mean_q: float = 0.0
    e_wq: float = 0.0  # E[(2W - n) Q]
    lipschitz_s: float | None = None
    iterations: int = 0
    std_errors: dict | None = None
    state_probs: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        def arr(x):
            return [None if not math.isfinite(v) else float(v) for v in x]

        out = {
            "graph": self.graph,
            "n": self.n,
            "r": self.r,
            "exact": self.exact,
            "w_pmf": self.w_pmf.to_dict(),
            "mu": self.mu,
            "sigma2": self.sigma2,
            "e_abs3": self.e_abs3,
            "mean_q": self.mean_q,
            "var_q": self.var_q,
            "var_s_star": self.var_s_star,
            "e_wq": self.e_wq,
            "s_given_w": arr(self.s_given_w),
            "lipschitz_s": self.lipschitz_s,
            "iterations": self.iterations,
        }
        if self.std_errors is not None:
            out["std_errors"] = {
                k: (arr(v) if isinstance(v, np.ndarray) else v) for k, v in self.std_errors.items()
            }
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "StationarySummary":
        def arr(x):
            return np.array([np.nan if v is None else v for v in x], dtype=float)

        se = d.get("std_errors")
        if se is not None:
            se = {k: (arr(v) if isinstance(v, list) else v) for k, v in se.items()}
        return cls(
            graph=d["graph"],
            n=d["n"],
            r=d["r"],
            w_pmf=IntegerPmf.from_dict(d["w_pmf"]),
            var_q=d["var_q"],
            var_s_star=d["var_s_star"],
            s_given_w=arr(d["s_given_w"]),
            mu=d["mu"],
            sigma2=d["sigma2"],
            e_abs3=d["e_abs3"],
            exact=d["exact"],
            mean_q=d["mean_q"],
            e_wq=d["e_wq"],
            lipschitz_s=d["lipschitz_s"],
            iterations=d["iterations"],
            std_errors=se,
        )


def complete_graph_s(n: int, w):
    """Closed-form conditional up-step probability on K_n:
    (n(n-1) - (2n-1) w + w^2) / (n(n-1))."""
    w = np.asarray(w, dtype=float)
    return (n * (n - 1) - (2 * n - 1) * w + w * w) / (n * (n - 1))


def _complete_lipschitz(g: Graph) -> float | None:
    # S(w) = (n(n-1) - (2n-1) w + w^2) / (n(n-1)) has slope at most 2/(n-1) on [0, n]
    return 2.0 / (g.n - 1) if g.is_complete else None


def _state_bits(n: int) -> np.ndarray:
    states = np.arange(1 << n, dtype=np.int64)
    return ((states[:, None] >> np.arange(n)) & 1).astype(np.int8)


def transition_matrix(g: Graph) -> sparse.csr_matrix:
    """Row-stochastic operator on the 2^n configurations (bit i = opinion of i).

    Each row has the state itself plus the n single-bit flips.
    """
    n, r = g.n, g.r
    size = 1 << n
    bits = _state_bits(n)
    ones = bits.astype(np.int64) @ g.adjacency_matrix()  # neighbours with opinion 1
    states = np.arange(size, dtype=np.int64)
    rows, cols, vals = [], [], []
    stay = np.ones(size)
    for i in range(n):
        is_one = bits[:, i] == 1
        # to 1 needs a neighbour at 0; to 0 needs a neighbour at 1
        prob = np.where(is_one, ones[:, i], r - ones[:, i]) / (r * n)
        rows.append(states)
        cols.append(states ^ (1 << i))
        vals.append(prob)
        stay -= prob
    rows.append(states)
    cols.append(states)
    vals.append(stay)
    P = sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(size, size)
    )
    P.eliminate_zeros()
    return P


def power_iteration(P: sparse.csr_matrix, tol: float | None = None, max_iter: int | None = None):
    """Stationary row vector of ``P`` from the uniform start.

    Iterates until the L1 change per step is at most ``tol``, then runs as
    many steps again: the change only bounds the error up to a factor
    1/(spectral gap), and the extra pass squares the residual contraction.
    Returns ``(pi, iterations, last_change)``.
    """
    tol = config.POWER_TOL if tol is None else tol
    max_iter = config.POWER_MAX_ITER if max_iter is None else max_iter
    PT = P.T.tocsr()
    x = np.full(P.shape[0], 1.0 / P.shape[0])
    change = math.inf
    it = 0
    settle_until = None
    while it < max_iter:
        y = PT @ x
        y /= y.sum()
        change = float(np.abs(y - x).sum())
        x = y
        it += 1
        if settle_until is None and change <= tol:
            settle_until = 2 * it
        if settle_until is not None and it >= settle_until:
            break
    return x, it, change


def _check_size(g: Graph) -> None:
    limit = config.exact_limit()
    if g.n > limit:
        raise SizeLimitError(
            f"exact stationary solve supports n <= {limit} (got n={g.n}); use mcmc_estimate instead",
            limit,
        )


def _w_summaries(g: Graph, pmf: np.ndarray):
    w_pmf = IntegerPmf(0, pmf)
    mom = moments(w_pmf)
    return w_pmf, mom


def exact_stationary(g: Graph, tol: float | None = None, max_iter: int | None = None) -> StationarySummary:
    """Stationary law of the full configuration chain and the derived
    quantities: law of W, Var Q, the conditional up-step probabilities and
    the variance of the configuration-level up-step probability."""
    _check_size(g)
    n, r = g.n, g.r
    P = transition_matrix(g)
    pi, iters, _ = power_iteration(P, tol, max_iter)
    pi[pi < 0] = 0.0

    bits = _state_bits(n)
    w = bits.sum(1).astype(np.int64)
    x = 2.0 * bits - 1.0
    q = ((x @ g.adjacency_matrix()) * x).sum(1)
    wt = 2.0 * w - n
    s_star_all = (r * n - 2 * r * wt + q) / (4.0 * r * n)

    pmf = np.bincount(w, weights=pi, minlength=n + 1)
    pmf /= pmf.sum()
    w_pmf, mom = _w_summaries(g, pmf)

    mean_q = float(np.dot(pi, q))
    var_q = float(np.dot(pi, (q - mean_q) ** 2))
    mean_s = float(np.dot(pi, s_star_all))
    var_s_star = float(np.dot(pi, (s_star_all - mean_s) ** 2))
    e_wq = float(np.dot(pi, wt * q))

    weighted = np.bincount(w, weights=pi * s_star_all, minlength=n + 1)
    raw_mass = np.bincount(w, weights=pi, minlength=n + 1)
    # unreachable levels (zero stationary mass) fall back to a plain average
    plain = np.bincount(w, weights=s_star_all, minlength=n + 1) / np.bincount(w, minlength=n + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        s_given_w = np.where(raw_mass > 0, weighted / raw_mass, plain)

    return StationarySummary(
        graph=g.name,
        n=n,
        r=r,
        w_pmf=w_pmf,
        var_q=var_q,
        var_s_star=var_s_star,
        s_given_w=s_given_w,
        mu=mom.mean,
        sigma2=mom.variance,
        e_abs3=mom.abs_central_3,
        exact=True,
        mean_q=mean_q,
        e_wq=e_wq,
        lipschitz_s=_complete_lipschitz(g),
        iterations=iters,
        state_probs=pi,
    )


def odd_moment_max(g: Graph, pi: np.ndarray) -> float:
    """max over vertex triples of |E[X_i X_j X_k]| with X = 2J - 1."""
    x = 2.0 * _state_bits(g.n) - 1.0
    worst = 0.0
    for i in range(g.n):
        for j in range(g.n):
            xij = x[:, i] * x[:, j] * pi
            worst = max(worst, float(np.abs(xij @ x).max()))
    return worst


# -- Monte Carlo -------------------------------------------------------------

_BLOCK = 1 << 16


def _chain_block(J, ones, nbrs, verts, picks, state, record_from, occ, sums, s_by_w, rn, r, n):
    """Advance one chain through a block of pre-drawn (vertex, neighbour)
    choices, accumulating statistics for steps at index >= record_from.

    ``state`` = [W, Q]; ``sums`` = [sum Q, sum Q^2, sum S*, sum S*^2].
    """
    w = state[0]
    q = state[1]
    for t in range(verts.shape[0]):
        i = verts[t]
        j = nbrs[i, picks[t]]
        new = 1 - J[j]
        if new != J[i]:
            delta = new - J[i]
            J[i] = new
            w += delta
            q += 4 * delta * (2 * ones[i] - r)
            for k in range(r):
                ones[nbrs[i, k]] += delta
        if t >= record_from:
            s = (rn - 2 * r * (2 * w - n) + q) / (4.0 * rn)
            occ[w] += 1
            sums[0] += q
            sums[1] += q * q
            sums[2] += s
            sums[3] += s * s
            s_by_w[w] += s
    state[0] = w
    state[1] = q


if numba is not None:
    _chain_block = numba.njit(cache=True)(_chain_block)


def chain_seed(seed: int, chain: int) -> np.random.SeedSequence:
    """Per-chain stream: SeedSequence(seed) spawned at key (chain,)."""
    return np.random.SeedSequence(seed, spawn_key=(chain,))


def _run_chain(g: Graph, steps: int, burnin: int, ss: np.random.SeedSequence):
    rng = np.random.default_rng(ss)
    n, r = g.n, g.r
    nbrs = g.neighbor_array()
    J = rng.integers(0, 2, size=n).astype(np.int64)
    ones = np.array([J[list(nb)].sum() for nb in g.adjacency], dtype=np.int64)
    x = 2 * J - 1
    q0 = int(sum(x[i] * x[j] for i, nb in enumerate(g.adjacency) for j in nb))
    state = np.array([int(J.sum()), q0], dtype=np.int64)
    occ = np.zeros(n + 1, dtype=np.int64)
    sums = np.zeros(4)
    s_by_w = np.zeros(n + 1)
    total = burnin + steps
    done = 0
    while done < total:
        size = min(_BLOCK, total - done)
        verts = rng.integers(0, n, size=size)
        picks = rng.integers(0, r, size=size)
        record_from = max(0, burnin - done)
        _chain_block(J, ones, nbrs, verts, picks, state, record_from, occ, sums, s_by_w, r * n, r, n)
        done += size
    return occ, sums, s_by_w


def mcmc_estimate(g: Graph, steps: int, burnin: int = 10_000, chains: int = 8, seed: int = 0) -> StationarySummary:
    """Time averages along ``chains`` independent trajectories.

    Each chain starts from a uniform random configuration, discards
    ``burnin`` steps and records the next ``steps``.  Point estimates are
    means over chains; standard errors are the across-chain standard
    deviation of the chain estimates divided by sqrt(chains).
    """
    if steps <= 0:
        raise PreconditionError("steps must be positive")
    if chains < 1:
        raise PreconditionError("need at least one chain")
    if burnin < 0:
        raise PreconditionError("burnin must be non-negative")
    n = g.n
    k = np.arange(n + 1, dtype=float)
    per = {name: [] for name in ("w_pmf", "var_q", "var_s_star", "mu", "sigma2", "e_abs3", "mean_q")}
    occ_all = np.zeros(n + 1)
    s_all = np.zeros(n + 1)
    for c in range(chains):
        occ, sums, s_by_w = _run_chain(g, steps, burnin, chain_seed(seed, c))
        pmf = occ / steps
        mu = float(pmf @ k)
        mean_q = sums[0] / steps
        mean_s = sums[2] / steps
        per["w_pmf"].append(pmf)
        per["mean_q"].append(mean_q)
        per["var_q"].append(sums[1] / steps - mean_q**2)
        per["var_s_star"].append(sums[3] / steps - mean_s**2)
        per["mu"].append(mu)
        per["sigma2"].append(float(pmf @ (k - mu) ** 2))
        per["e_abs3"].append(float(pmf @ np.abs(k - mu) ** 3))
        occ_all += occ
        s_all += s_by_w

    est = {key: np.mean(np.array(vals), axis=0) for key, vals in per.items()}
    if chains > 1:
        se = {
            key: np.std(np.array(vals), axis=0, ddof=1) / math.sqrt(chains)
            for key, vals in per.items()
        }
        se = {key: (v if np.ndim(v) else float(v)) for key, v in se.items()}
        se["chains"] = chains
    else:
        se = None
    with np.errstate(divide="ignore", invalid="ignore"):
        s_given_w = np.where(occ_all > 0, s_all / occ_all, np.nan)
    pmf = est["w_pmf"] / est["w_pmf"].sum()
    return StationarySummary(
        graph=g.name,
        n=n,
        r=g.r,
        w_pmf=IntegerPmf(0, pmf),
        var_q=float(est["var_q"]),
        var_s_star=float(est["var_s_star"]),
        s_given_w=s_given_w,
        mu=float(est["mu"]),
        sigma2=float(est["sigma2"]),
        e_abs3=float(est["e_abs3"]),
        exact=False,
        mean_q=float(est["mean_q"]),
        lipschitz_s=_complete_lipschitz(g),
        iterations=steps,
        std_errors=se,
    )


def pair_model_from_stationary(summary: StationarySummary) -> PairModel:
    """Exchangeable pair (W, W') of one step of the stationary chain.

    Up-steps come from the conditional up-step probabilities; down-steps
    from exchangeability (P[w+1 -> w] = P[w -> w+1]).  The drift identity
    is then an independent check of stationarity.
    """
    if not summary.exact:
        raise PreconditionError("pair model needs an exact stationary summary, not a Monte-Carlo one")
    pmf = summary.w_pmf.probs
    size = len(pmf)
    up = np.where(pmf > 0, summary.s_given_w, 0.0)
    joint = np.zeros((size, size))
    idx = np.arange(size - 1)
    joint[idx, idx + 1] = pmf[:-1] * up[:-1]
    joint[idx + 1, idx] = joint[idx, idx + 1]
    joint[np.arange(size), np.arange(size)] = pmf - joint.sum(1)
    return PairModel(
        "antivoter",
        summary.w_pmf,
        joint,
        2.0 / summary.n,
        up,
        np.zeros(size),
        summary.lipschitz_s,
        {"graph": summary.graph, "n": summary.n, "r": summary.r},
    )


def antivoter_model(g: Graph) -> tuple[PairModel, StationarySummary]:
    summary = exact_stationary(g)
    return pair_model_from_stationary(summary), summary


def mcmc_z_scores(estimate: StationarySummary, exact: StationarySummary) -> dict:
    """|estimate - exact| / SE for the law of W, Var Q and Var S*.

    A level of W that no chain visited has a chain-to-chain spread of zero;
    its standard error is floored at the resolution of one visit,
    1/(chains * steps), since the estimate cannot distinguish masses below
    that.
    """
    if estimate.std_errors is None:
        raise PreconditionError("z-scores need a Monte-Carlo summary with at least two chains")
    if not exact.exact:
        raise PreconditionError("the reference summary must be exact")
    floor = 1.0 / (estimate.iterations * int(estimate.std_errors["chains"]))
    se_pmf = np.maximum(np.asarray(estimate.std_errors["w_pmf"], dtype=float), floor)
    diff = np.abs(estimate.w_pmf.on(0, estimate.n) - exact.w_pmf.on(0, exact.n))
    return {
        "w_pmf": diff / se_pmf,
        "var_q": abs(estimate.var_q - exact.var_q) / estimate.std_errors["var_q"],
        "var_s_star": abs(estimate.var_s_star - exact.var_s_star) / estimate.std_errors["var_s_star"],
    }
