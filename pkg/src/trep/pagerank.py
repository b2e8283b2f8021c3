"""Random-walk machinery over endorsement graphs.

States are ordered servers first (0..m-1), then users (m..m+n-1).  The
designated walk follows endorsement edges with probability 1 - alpha and
teleports to a uniformly random user with probability alpha; servers, which
own no edges, always jump to a uniformly random user.  Reputation scores are
the stationary endorsement mass received by each server, normalized.

Personalized variants restart at a fixed source distribution over users
instead of the uniform one, and per-tour counts rescale those visit rates by
the regeneration rate so that one unit corresponds to one excursion from the
source.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .repgraph import Config, RepGraph, _require_valid

_ORACLE_MAX_STATES = 200


class NonConvergence(RuntimeError):
    """Power iteration exhausted its budget before reaching tolerance."""


class AllServersUntrusted(ValueError):
    """No server receives any endorsement mass, so scores are undefined."""


@dataclass(frozen=True)
class StationaryDistribution:
    """A stationary probability vector with solver diagnostics."""

    pi: np.ndarray
    iterations_used: int
    residual: float


def _check_stochastic(chain: np.ndarray) -> None:
    chain = np.asarray(chain)
    if chain.ndim != 2 or chain.shape[0] != chain.shape[1]:
        raise ValueError(f"transition matrix must be square, got shape {chain.shape}")
    if np.any(chain < 0):
        raise ValueError("transition matrix has negative entries")
    if np.max(np.abs(chain.sum(axis=1) - 1.0)) > 1e-9:
        raise ValueError("transition matrix rows must sum to 1")


def build_designated_chain(graph: RepGraph, config: Config) -> np.ndarray:
    """Return the (m+n) x (m+n) transition matrix of the designated walk."""
    _require_valid(graph)
    n, m = graph.n, graph.m
    size = m + n
    chain = np.zeros((size, size))
    chain[:m, m:] = 1.0 / n
    chain[m:] = (1.0 - config.alpha) * graph.edges
    chain[m:, m:] += config.alpha / n
    return chain


def clique_chain(ratings: np.ndarray) -> np.ndarray:
    """Chain of servers recommending each other proportionally to ratings.

    Every row is the normalized rating vector, so the stationary distribution
    equals it exactly and all pairwise ratios are preserved.
    """
    ratings = np.asarray(ratings, dtype=float)
    if ratings.ndim != 1 or ratings.size < 2:
        raise ValueError("ratings must be a vector of at least two entries")
    if np.any(ratings < 0) or not np.any(ratings > 0):
        raise ValueError("ratings must be nonnegative with a positive entry")
    row = ratings / ratings.sum()
    return np.tile(row, (ratings.size, 1))


def _power_iterate(chain: np.ndarray, start: np.ndarray, config: Config) -> StationaryDistribution:
    pi = start
    residual = np.inf
    for iteration in range(1, config.max_iters + 1):
        nxt = pi @ chain
        residual = float(np.abs(nxt - pi).sum())
        pi = nxt
        if residual <= config.tol:
            return StationaryDistribution(pi / pi.sum(), iteration, residual)
    raise NonConvergence(
        f"residual {residual:.3e} above tolerance {config.tol:.3e} "
        f"after {config.max_iters} iterations"
    )


def stationary(chain: np.ndarray, config: Config) -> StationaryDistribution:
    """Stationary distribution by power iteration from the uniform vector."""
    chain = np.asarray(chain, dtype=float)
    _check_stochastic(chain)
    start = np.full(chain.shape[0], 1.0 / chain.shape[0])
    return _power_iterate(chain, start, config)


def stationary_oracle(chain: np.ndarray) -> StationaryDistribution:
    """Stationary distribution via a dense least-squares solve.

    Solves pi (P - I) = 0 subject to sum(pi) = 1 and verifies both that the
    solution is unique (system has full rank) and that it is consistent.
    Intended as an independent cross-check for small chains.
    """
    chain = np.asarray(chain, dtype=float)
    _check_stochastic(chain)
    size = chain.shape[0]
    if size > _ORACLE_MAX_STATES:
        raise ValueError(f"oracle supports up to {_ORACLE_MAX_STATES} states, got {size}")
    system = np.vstack([chain.T - np.eye(size), np.ones((1, size))])
    rhs = np.zeros(size + 1)
    rhs[-1] = 1.0
    solution, _, rank, _ = np.linalg.lstsq(system, rhs, rcond=None)
    if rank < size:
        raise ValueError("stationary distribution is not unique for this chain")
    if np.max(np.abs(system @ solution - rhs)) > 1e-8:
        raise ValueError("no consistent stationary distribution found")
    pi = np.clip(solution, 0.0, None)
    pi /= pi.sum()
    residual = float(np.abs(pi @ chain - pi).sum())
    return StationaryDistribution(pi, 0, residual)


def reputation_scores(graph: RepGraph, config: Config) -> np.ndarray:
    """Normalized stationary endorsement mass received by each server."""
    chain = build_designated_chain(graph, config)
    pi = stationary(chain, config).pi
    received = graph.edges[:, : graph.m].T @ pi[graph.m :]
    if not np.any(received > 0):
        raise AllServersUntrusted("no server receives any endorsement mass")
    return received / received.sum()


def _restart_vector(graph: RepGraph, source) -> np.ndarray:
    n, m = graph.n, graph.m
    restart = np.zeros(m + n)
    if np.ndim(source) == 0:
        index = int(source)
        if not 0 <= index < n:
            raise ValueError(f"source user index {index} out of range 0..{n - 1}")
        restart[m + index] = 1.0
    else:
        weights = np.asarray(source, dtype=float)
        if weights.shape != (n,):
            raise ValueError(f"source distribution has shape {weights.shape}, expected ({n},)")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError("source distribution must be nonnegative and sum to 1")
        restart[m:] = weights
    return restart


def personalized(graph: RepGraph, config: Config, source) -> StationaryDistribution:
    """Stationary distribution of the walk restarting at the given source.

    The source is a user index or a distribution over users.  The restart
    vector doubles as the escape row for servers, so the uniform source
    reproduces the designated walk exactly.
    """
    _require_valid(graph)
    n, m = graph.n, graph.m
    restart = _restart_vector(graph, source)
    chain = np.empty((m + n, m + n))
    chain[:m] = restart
    chain[m:] = (1.0 - config.alpha) * graph.edges + config.alpha * restart
    return _power_iterate(chain, restart.copy(), config)


def tour_counts(graph: RepGraph, config: Config) -> np.ndarray:
    """Expected visits per excursion, for every source user at once.

    Row i holds, for each state, the expected number of visits during a
    single excursion of the walk personalized at user i (the walk restarts
    at i with probability alpha from users and certainly from servers).
    Row i is the personalized stationary vector divided by its regeneration
    rate alpha * (user mass) + (server mass).
    """
    _require_valid(graph)
    n, m = graph.n, graph.m
    alpha = config.alpha
    edge_only = np.zeros((m + n, m + n))
    edge_only[m:] = graph.edges
    visits = np.zeros((n, m + n))
    visits[:, m:] = np.eye(n)
    rows = np.arange(n)
    for _ in range(config.max_iters):
        regen = alpha * visits[:, m:].sum(axis=1) + visits[:, :m].sum(axis=1)
        nxt = (1.0 - alpha) * (visits @ edge_only)
        nxt[rows, m + rows] += regen
        residual = float(np.abs(nxt - visits).sum(axis=1).max())
        visits = nxt
        if residual <= config.tol:
            break
    else:
        raise NonConvergence(
            f"batched personalized walk residual {residual:.3e} above tolerance "
            f"{config.tol:.3e} after {config.max_iters} iterations"
        )
    regen = alpha * visits[:, m:].sum(axis=1) + visits[:, :m].sum(axis=1)
    return visits / regen[:, None]


def contribution_matrix(graph: RepGraph, config: Config) -> np.ndarray:
    """Each user's share of the per-tour visits every server receives.

    Entry (i, j) is user i's fraction of all expected visits to server j per
    excursion; columns of endorsed servers sum to one, columns of unendorsed
    servers are zero.
    """
    counts = tour_counts(graph, config)[:, : graph.m]
    totals = counts.sum(axis=0)
    shares = np.zeros_like(counts)
    endorsed = totals > 0
    shares[:, endorsed] = counts[:, endorsed] / totals[endorsed]
    return shares
