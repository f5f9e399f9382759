"""Exact discrete Bayesian posteriors over theory indices.

Sequential updates in log space with log-sum-exp renormalization at every
step, the mass-threshold cautious set used by conservative harm bounds, and a
tracker for the reciprocal posterior mass on the true theory (the quantity
whose sample paths never drift upward in expectation).

States are values: ``update`` returns a new state and never mutates its input,
so concurrent episodes can own independent chains against a shared space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .theories import Observation, TheoryIndex, TheorySpace

_NEG_INF = float("-inf")


class AllZeroLikelihoodError(ValueError):
    """Every theory assigns zero probability to the data; the posterior is undefined."""


@dataclass(frozen=True)
class PosteriorState:
    """Normalized log masses over theory indices after ``t`` observations.

    ``log_mass[k]`` belongs to ``indices[k]`` (the space's enumeration order);
    ``-inf`` entries are theories eliminated by the prior or by the data.
    """

    indices: tuple[TheoryIndex, ...]
    log_mass: np.ndarray
    t: int
    normalized: bool = True

    def __post_init__(self):
        lm = np.asarray(self.log_mass, dtype=float)
        if np.isnan(lm).any():
            raise ValueError("log masses may not be NaN")
        if not (lm > _NEG_INF).any():
            raise AllZeroLikelihoodError("no theory carries positive mass")
        lm = lm.copy()
        lm.setflags(write=False)
        object.__setattr__(self, "log_mass", lm)

    @property
    def masses(self) -> np.ndarray:
        """Probability masses, in enumeration order."""
        return np.exp(self.log_mass)

    def mass_of(self, index: TheoryIndex) -> float:
        return float(math.exp(self.log_mass[self.indices.index(index)]))

    def map_index(self) -> TheoryIndex:
        """Maximum-posterior index, ties broken by enumeration order."""
        return self.indices[int(np.argmax(self.log_mass))]


@dataclass(frozen=True)
class CautiousSet:
    """Indices holding at least ``alpha`` of the cumulative mass above them.

    ``members`` are in scan order: descending posterior mass, ties broken by
    enumeration order. ``positions`` are the members' enumeration positions,
    kept so harm profiles can be indexed without a lookup. The set is always a
    nonempty prefix of the mass ranking and contains the MAP index.
    """

    alpha: float
    members: tuple[TheoryIndex, ...]
    positions: tuple[int, ...]


@dataclass
class TruthTracker:
    """History of reciprocal posterior mass on a designated true theory."""

    truth_index: TheoryIndex
    truth_position: int
    prior_truth: float
    w_history: list[float] = field(default_factory=list)

    @classmethod
    def for_space(cls, space: TheorySpace, truth_index: TheoryIndex) -> "TruthTracker":
        prior_truth = space.prior_of(truth_index)
        if prior_truth <= 0.0:
            raise ValueError(
                f"true theory {truth_index} has zero prior mass; its reciprocal "
                "posterior is not trackable"
            )
        return cls(
            truth_index=int(truth_index),
            truth_position=space.position(truth_index),
            prior_truth=prior_truth,
            w_history=[1.0 / prior_truth],
        )


def init(space: TheorySpace) -> PosteriorState:
    """Posterior before any observation: the prior, in log space."""
    with np.errstate(divide="ignore"):
        log_mass = np.log(space.prior)
    return PosteriorState(indices=space.indices, log_mass=log_mass, t=0)


def update(
    state: PosteriorState,
    space: TheorySpace,
    history: Sequence[Observation],
    obs: Observation,
) -> PosteriorState:
    """Absorb one observation and renormalize.

    ``history`` must be the ``state.t`` observations already absorbed; it is
    forwarded to the space's conditional log-likelihoods (non-i.i.d. families
    read it, i.i.d. families ignore it).
    """
    if not state.normalized:
        raise ValueError("state must be normalized before updating")
    if len(history) != state.t:
        raise ValueError(
            f"history has {len(history)} observations but state.t = {state.t}"
        )
    log_mass = state.log_mass + space.ll_all(history, obs)
    peak = log_mass.max()
    if peak == _NEG_INF:
        raise AllZeroLikelihoodError(
            f"every theory assigns zero probability to observation {obs!r}"
        )
    norm = peak + math.log(np.exp(log_mass - peak).sum())
    return PosteriorState(
        indices=state.indices, log_mass=log_mass - norm, t=state.t + 1
    )


def update_sequence(
    state: PosteriorState,
    space: TheorySpace,
    observations: Sequence[Observation],
    history: Sequence[Observation] = (),
) -> PosteriorState:
    """Fold a batch of observations into sequential updates."""
    hist = list(history)
    for obs in observations:
        state = update(state, space, hist, obs)
        hist.append(obs)
    return state


@dataclass(frozen=True)
class MassRanking:
    """Posterior masses sorted descending, with their enumeration positions.

    Ties sort by enumeration position (stable sort on the negated masses),
    which is the fixed tie-breaking order for MAP and cautious sets.
    """

    order: np.ndarray
    sorted_masses: np.ndarray
    cumulative: np.ndarray


def mass_ranking(state: PosteriorState) -> MassRanking:
    masses = state.masses
    order = np.argsort(-masses, kind="stable")
    sorted_masses = masses[order]
    return MassRanking(
        order=order, sorted_masses=sorted_masses, cumulative=np.cumsum(sorted_masses)
    )


def prefix_length(ranking: MassRanking, alpha: float) -> int:
    """Size of the cautious set at level ``alpha`` on a precomputed ranking.

    Rank n (1-based) is admitted iff its mass is at least ``alpha`` times the
    cumulative mass through rank n. The admitted ranks form a prefix: once a
    rank fails, every later rank has smaller mass and larger cumulative sum.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha {alpha!r} outside the half-open interval (0, 1]")
    admitted = ranking.sorted_masses >= alpha * ranking.cumulative
    return len(admitted) if admitted.all() else int(np.argmin(admitted))


def cautious_set(state: PosteriorState, alpha: float) -> CautiousSet:
    """Theories whose mass is at least ``alpha`` times the running total above them.

    ``alpha = 1`` yields the MAP singleton; smaller alphas admit longer
    prefixes of the mass ranking, down to the full support as alpha
    approaches 0.
    """
    ranking = mass_ranking(state)
    n = prefix_length(ranking, alpha)
    positions = tuple(int(k) for k in ranking.order[:n])
    members = tuple(state.indices[k] for k in positions)
    _check_size_bound(alpha, ranking.sorted_masses, ranking.cumulative, n)
    return CautiousSet(alpha=float(alpha), members=members, positions=positions)


def _check_size_bound(alpha, sorted_masses, cumsum, n):
    # Internal consistency: a set of size n must carry at least
    # (1/(1-alpha))^(n-1) times the MAP mass (vacuous for n <= 1).
    if n <= 1:
        if n == 0:
            raise AssertionError("cautious set lost the MAP index")
        return
    floor = (1.0 / (1.0 - alpha)) ** (n - 1) * sorted_masses[0]
    if cumsum[n - 1] < floor * (1.0 - 1e-9):
        raise AssertionError(
            f"cautious set of size {n} carries mass {cumsum[n - 1]!r}, "
            f"below the structural floor {floor!r}"
        )


def track_truth(tracker: TruthTracker, state: PosteriorState) -> TruthTracker:
    """Append the reciprocal posterior mass on the true theory.

    A mass of exactly zero records ``+inf`` rather than raising: hard
    eliminations must stay countable events for threshold-crossing stats.
    """
    mass = math.exp(state.log_mass[tracker.truth_position])
    tracker.w_history.append(1.0 / mass if mass > 0.0 else math.inf)
    return tracker
