"""Equilibrium computation and verification for the reputation game.

At the unique Nash equilibrium every player endorses servers proportionally
to trust.  The best response against aggregate opponent server mass b solves
a waterfilling problem: maximize sum_j R_j x_j / (x_j + b_j) on the simplex,
whose KKT solution is x_j = sqrt(R_j b_j / lambda) - b_j on the active set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .game import (
    _check_trust,
    bipartite_utility,
    expected_utilities,
    validate_profile,
)
from .pagerank import tour_counts
from .repgraph import Config, from_strategies
from .rng import substream

SCENARIO_KINDS = ("perfect", "noisy", "hierarchy")

# Free servers (positive trust, no opponent mass) are captured by an
# arbitrarily small stake; the supremum is not attained, so we fix one.
FREE_SERVER_STAKE = 1e-12


class DegenerateBelief(ValueError):
    """Trust and belief have disjoint support; the best response is undefined."""


def _normalize(vector: np.ndarray) -> np.ndarray:
    vector = np.asarray(vector, dtype=float)
    total = vector.sum()
    if total <= 0:
        raise ValueError("cannot normalize a vector without positive mass")
    return vector / total


@dataclass
class GameScenario:
    """A family of profiles to analyze.

    kind "perfect": every player knows the trust vector.
    kind "noisy": every player plays a common perturbed belief.
    kind "hierarchy": k established players know the trust vector; the other
    n - k fresh players endorse only established players (uniformly unless
    fresh_weights rows are given).
    """

    kind: str
    trust: np.ndarray
    n: int
    belief: np.ndarray | None = None
    k: int | None = None
    fresh_weights: np.ndarray | None = None
    epsilon: float = 0.0
    p: float = 0.0

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        self.trust = _check_trust(self.trust)
        if self.n < 2:
            raise ValueError(f"need at least 2 players, got {self.n}")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        if self.kind == "noisy":
            if self.belief is None:
                raise ValueError("noisy scenarios need a belief vector")
            self.belief = np.asarray(self.belief, dtype=float)
            if self.belief.shape != self.trust.shape:
                raise ValueError("belief and trust must have the same shape")
            if np.any(self.belief < 0) or not np.any(self.belief > 0):
                raise ValueError("belief must be nonnegative with positive mass")
        if self.kind == "hierarchy":
            if self.k is None:
                raise ValueError("hierarchy scenarios need k, the established player count")
            if not 1 <= self.k <= self.n - 1:
                raise ValueError(f"k must lie in 1..{self.n - 1}, got {self.k}")
            if self.fresh_weights is not None:
                w = np.asarray(self.fresh_weights, dtype=float)
                if w.shape != (self.n - self.k, self.k):
                    raise ValueError(
                        f"fresh_weights have shape {w.shape}, expected "
                        f"({self.n - self.k}, {self.k})"
                    )
                if np.any(w < 0) or np.max(np.abs(w.sum(axis=1) - 1.0)) > 1e-9:
                    raise ValueError("fresh_weights rows must be distributions")
                self.fresh_weights = w


@dataclass
class EquilibriumReport:
    """Outcome of an equilibrium verification run."""

    profile: np.ndarray
    best_responses: np.ndarray
    gains: np.ndarray
    epsilon_prime: float
    closed_form_deviation: float
    utilities: np.ndarray
    expected_value: float | None = None
    probe_min: float | None = None
    bound: float | None = None


def truth_telling_profile(scenario: GameScenario) -> np.ndarray:
    """The profile in which every informed player endorses by its belief."""
    n, m = scenario.n, scenario.trust.size
    profile = np.zeros((n, m + n))
    if scenario.kind == "perfect":
        profile[:, :m] = _normalize(scenario.trust)
    elif scenario.kind == "noisy":
        profile[:, :m] = _normalize(scenario.belief)
    else:  # hierarchy
        k = scenario.k
        profile[:k, :m] = _normalize(scenario.trust)
        if scenario.fresh_weights is None:
            profile[k:, m : m + k] = 1.0 / k
        else:
            profile[k:, m : m + k] = scenario.fresh_weights
    return profile


def best_response_to_mass(
    trust: np.ndarray, opponent_mass: np.ndarray, stake: float = FREE_SERVER_STAKE
) -> np.ndarray:
    """Optimal server allocation against fixed aggregate opponent mass.

    Enumerates the waterfilling active sets in marginal-value order and keeps
    the feasible allocation with the highest utility; on contested servers
    the winner is the exact KKT solution.
    """
    ratings = np.asarray(trust, dtype=float)
    mass = np.asarray(opponent_mass, dtype=float)
    if ratings.shape != mass.shape or ratings.ndim != 1:
        raise ValueError("trust and opponent mass must be vectors of equal length")
    if np.any(ratings < 0) or np.any(mass < 0):
        raise ValueError("trust and opponent mass must be nonnegative")
    m = ratings.size
    allocation = np.zeros(m)
    free = (mass <= 0) & (ratings > 0)
    allocation[free] = stake
    budget = 1.0 - stake * int(free.sum())
    contested = np.where((mass > 0) & (ratings > 0))[0]
    if contested.size == 0:
        if free.any():
            allocation[free] += budget / int(free.sum())
        else:
            allocation += budget / m  # nothing is worth anything; split evenly
        return allocation

    order = contested[np.argsort(-(ratings[contested] / mass[contested]), kind="stable")]
    sqrt_gain = np.sqrt(ratings[order] * mass[order])
    prefix_gain = np.cumsum(sqrt_gain)
    prefix_mass = np.cumsum(mass[order])
    best = None
    best_utility = -np.inf
    for size in range(1, order.size + 1):
        sqrt_level = prefix_gain[size - 1] / (budget + prefix_mass[size - 1])
        active = order[:size]
        spread = np.maximum(np.sqrt(ratings[active] * mass[active]) / sqrt_level - mass[active], 0.0)
        total = spread.sum()
        if total <= 0:
            continue
        candidate = allocation.copy()
        candidate[active] = spread * (budget / total)
        utility = bipartite_utility(candidate, mass, ratings)
        if utility > best_utility:
            best_utility = utility
            best = candidate
    return best


def best_response_numeric(
    profile: np.ndarray, trust: np.ndarray, player: int, config: Config | None = None
) -> np.ndarray:
    """Best server allocation for one player against a server-only profile."""
    del config  # the reduced problem does not depend on the walk parameters
    profile = np.asarray(profile, dtype=float)
    trust = _check_trust(trust)
    m = trust.size
    n = profile.shape[0]
    validate_profile(profile, m, n)
    if not 0 <= player < n:
        raise ValueError(f"player index {player} out of range 0..{n - 1}")
    others = np.arange(n) != player
    if np.max(np.abs(profile[others, m:])) > 1e-12:
        raise ValueError("opponents endorse users; the reduced best response does not apply")
    return best_response_to_mass(trust, profile[others, :m].sum(axis=0))


def best_response_closed_form(trust: np.ndarray, belief: np.ndarray, n: int) -> np.ndarray:
    """Interior best response x_j = n sqrt(R_j R'_j) / sum_k sqrt(R_k R'_k) - (n-1) N(R')_j.

    Negative coordinates are clamped to zero and the rest renormalized; the
    numeric route remains authoritative whenever clamping kicks in.
    """
    ratings = np.asarray(trust, dtype=float)
    belief = np.asarray(belief, dtype=float)
    if ratings.shape != belief.shape or ratings.ndim != 1:
        raise ValueError("trust and belief must be vectors of equal length")
    if n < 2:
        raise ValueError(f"need at least 2 players, got {n}")
    cross = np.sqrt(ratings * belief)
    total = cross.sum()
    if total <= 0:
        raise DegenerateBelief("trust and belief share no supported server")
    x = n * cross / total - (n - 1) * _normalize(belief)
    x = np.maximum(x, 0.0)
    return x / x.sum()


def _bipartite_profile(row: np.ndarray, n: int) -> np.ndarray:
    m = row.size
    profile = np.zeros((n, m + n))
    profile[:, :m] = row
    return profile


def verify_unique_nash(
    trust: np.ndarray,
    n: int,
    config: Config | None = None,
    probes: int = 100,
    rng: np.random.Generator | None = None,
) -> EquilibriumReport:
    """Check that proportional-to-trust endorsement is a Nash equilibrium.

    Computes the exact best response against the equilibrium profile (its
    gain bounds the equilibrium defect), compares the closed form with the
    waterfilling solver, and probes random opponent deviations to confirm
    the equilibrium player never drops below the equilibrium value.
    """
    cfg = config or Config()
    del cfg  # the reduced game is independent of the walk parameters
    ratings = _check_trust(trust)
    if n < 2:
        raise ValueError(f"need at least 2 players, got {n}")
    m = ratings.size
    nr = _normalize(ratings)
    level = ratings.sum() / n
    mass = (n - 1) * nr
    base = bipartite_utility(nr, mass, ratings)
    response = best_response_to_mass(ratings, mass)
    gain = max(0.0, bipartite_utility(response, mass, ratings) - base)
    closed = best_response_closed_form(ratings, ratings, n)
    deviation = float(np.max(np.abs(response - closed)))
    rng = rng or substream(0, "nash-probes")
    probe_min = np.inf
    for _ in range(probes):
        opponents = rng.dirichlet(np.ones(m), size=n - 1).sum(axis=0)
        probe_min = min(probe_min, bipartite_utility(nr, opponents, ratings))
    return EquilibriumReport(
        profile=_bipartite_profile(nr, n),
        best_responses=np.tile(response, (n, 1)),
        gains=np.full(n, gain),
        epsilon_prime=gain,
        closed_form_deviation=deviation,
        utilities=np.full(n, base),
        expected_value=level,
        probe_min=float(probe_min),
    )


def measure_epsilon_prime(scenario: GameScenario, config: Config | None = None) -> EquilibriumReport:
    """Equilibrium defect when every player endorses a common noisy belief.

    Reports the best unilateral gain over the truthful-belief profile and the
    theoretical bound m^2 (n-1) / n^2 * (1+eps) / (1-eps).
    """
    if scenario.kind != "noisy":
        raise ValueError("epsilon' is measured on noisy scenarios")
    del config  # the reduced game is independent of the walk parameters
    ratings = scenario.trust
    belief = scenario.belief
    n, m = scenario.n, ratings.size
    nr_belief = _normalize(belief)
    mass = (n - 1) * nr_belief
    base = bipartite_utility(nr_belief, mass, ratings)
    response = best_response_to_mass(ratings, mass)
    best_utility = bipartite_utility(response, mass, ratings)
    deviation = np.nan
    try:
        closed = best_response_closed_form(ratings, belief, n)
    except DegenerateBelief:
        closed = None
    if closed is not None:
        deviation = float(np.max(np.abs(response - closed)))
        closed_utility = bipartite_utility(closed, mass, ratings)
        if closed_utility > best_utility:
            response, best_utility = closed, closed_utility
    gain = max(0.0, best_utility - base)
    eps = scenario.epsilon
    bound = m * m * (n - 1) / n**2
    if eps > 0:
        if eps >= 1:
            bound = np.inf
        else:
            bound *= (1 + eps) / (1 - eps)
    return EquilibriumReport(
        profile=_bipartite_profile(nr_belief, n),
        best_responses=np.tile(response, (n, 1)),
        gains=np.full(n, gain),
        epsilon_prime=gain,
        closed_form_deviation=deviation,
        utilities=np.full(n, base),
        expected_value=ratings.sum() / n,
        bound=float(bound),
    )


def _fit_opponent_mass(
    profile: np.ndarray, player: int, ratings: np.ndarray, cfg: Config
) -> np.ndarray | None:
    """Estimate the effective opponent mass seen by one established player.

    On hierarchy profiles the per-server visit totals are affine in the
    player's own allocation, D_j(x) = c x_j + d_j; two evaluations identify
    c and d, and d / c acts as the opponent mass in the reduced problem.
    """
    n = profile.shape[0]
    m = ratings.size
    base_row = profile[player, :m]
    probe_row = base_row + 0.4 * np.eye(m)[np.argmax(base_row)]
    probe_row = probe_row / probe_row.sum()
    if np.max(np.abs(probe_row - base_row)) < 1e-9:
        return None
    totals0 = tour_counts(from_strategies(profile, m, n), cfg)[:, :m].sum(axis=0)
    probed = profile.copy()
    probed[player, :m] = probe_row
    probed[player, m:] = 0.0
    totals1 = tour_counts(from_strategies(probed, m, n), cfg)[:, :m].sum(axis=0)
    delta = probe_row - base_row
    usable = np.abs(delta) > 1e-9
    if not usable.any():
        return None
    slopes = (totals1[usable] - totals0[usable]) / delta[usable]
    slope = float(np.median(slopes))
    if slope <= 0:
        return None
    offsets = np.maximum(totals0 - slope * base_row, 0.0)
    return offsets / slope


def hierarchy_best_response_gains(
    scenario: GameScenario,
    config: Config | None = None,
    rng: np.random.Generator | None = None,
    probes: int = 3,
) -> np.ndarray:
    """Best-response gains of the established players in a hierarchy profile.

    Gains are measured against real expected utilities: a fitted reduced
    problem proposes one candidate deviation, and random, structured, and
    user-endorsing deviations are evaluated alongside it.  At the
    proportional-to-trust profile all gains should vanish regardless of how
    the fresh players split their endorsements.
    """
    if scenario.kind != "hierarchy":
        raise ValueError("hierarchy gains are measured on hierarchy scenarios")
    cfg = config or Config()
    rng = rng or substream(0, "hierarchy-gains")
    profile = truth_telling_profile(scenario)
    ratings = scenario.trust
    n, m, k = scenario.n, ratings.size, scenario.k
    nr = _normalize(ratings)
    base = expected_utilities(profile, ratings, cfg)
    gains = np.zeros(k)
    for player in range(k):
        candidates: list[np.ndarray] = []
        fitted_mass = _fit_opponent_mass(profile, player, ratings, cfg)
        if fitted_mass is not None:
            candidates.append(best_response_to_mass(ratings, fitted_mass))
        for _ in range(probes):
            candidates.append(rng.dirichlet(np.ones(m)))
        rich, poor = int(np.argmax(nr)), int(np.argmin(nr))
        if rich != poor:
            for src, dst in ((rich, poor), (poor, rich)):
                shifted = nr.copy()
                moved = min(0.1, shifted[src])
                shifted[src] -= moved
                shifted[dst] += moved
                candidates.append(shifted)
        # deviation that also endorses the other established players
        full_row = np.zeros(m + n)
        full_row[:m] = 0.8 * nr
        peers = [m + t for t in range(k) if t != player] or [m + t for t in range(k)]
        full_row[peers] = 0.2 / len(peers)
        best_utility = -np.inf
        for candidate in candidates + [full_row]:
            trial = profile.copy()
            if candidate.size == m:
                trial[player, :m] = candidate
                trial[player, m:] = 0.0
            else:
                trial[player] = candidate
            utility = expected_utilities(trial, ratings, cfg)[player]
            best_utility = max(best_utility, utility)
        gains[player] = max(0.0, best_utility - base[player])
    return gains
