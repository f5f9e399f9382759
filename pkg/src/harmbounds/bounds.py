"""Harm-probability estimators used as guardrail statistics.

Four ways to turn a posterior and a per-theory harm profile into a single
number for one candidate action: the posterior-weighted argmax bound (sound
for i.i.d. data after enough observations), the anytime-valid weak bound, the
cautious-set max, and the posterior predictive average. The cheating
reference (true theory's harm) needs no machinery and lives with the
guardrails.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .posterior import PosteriorState, cautious_set
from .theories import TheoryIndex

ARGMAX_TIE_TOL = 1e-12


@dataclass(frozen=True)
class HarmProfile:
    """Per-theory harm probabilities for one fixed context.

    ``values[k]`` is P(harm | context, theory at enumeration position k).
    """

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).copy()
        if values.ndim != 1 or values.size == 0:
            raise ValueError("harm profile must be a nonempty vector")
        if (values < 0.0).any() or (values > 1.0).any():
            raise ValueError("harm probabilities must lie in [0, 1]")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class BoundResult:
    """A bound value with the theory (or tie set) that achieved it.

    ``value`` may exceed 1 for the weak bound; decision layers clamp.
    ``witness`` is a single index, a tuple of tied indices, or None for
    averages.
    """

    value: float
    witness: TheoryIndex | tuple[TheoryIndex, ...] | None
    kind: str


def _check_lengths(state: PosteriorState, profile: HarmProfile) -> None:
    if len(profile.values) != len(state.indices):
        raise ValueError(
            f"harm profile covers {len(profile.values)} theories, "
            f"posterior covers {len(state.indices)}"
        )


def iid_cautious_bound(state: PosteriorState, profile: HarmProfile) -> BoundResult:
    """Largest harm among theories maximizing posterior mass times harm.

    All maximizers within an absolute tolerance of 1e-12 on the product are
    reported as the witness tie set; the value is the largest harm among
    them, so thresholding the value rejects iff some tied maximizer exceeds
    the threshold.
    """
    _check_lengths(state, profile)
    products = state.masses * profile.values
    peak = products.max()
    tied = np.flatnonzero(products >= peak - ARGMAX_TIE_TOL)
    value = float(profile.values[tied].max())
    witness = tuple(state.indices[k] for k in tied)
    return BoundResult(value=value, witness=witness, kind="iid-cautious")


def weak_bound(
    state: PosteriorState,
    profile: HarmProfile,
    delta: float,
    prior_truth: float,
) -> BoundResult:
    """Sup of posterior-weighted harm, inflated by 1 / (delta * prior on truth).

    Anytime-valid with probability at least 1 - delta, but the inflation
    factor routinely pushes the value past 1; it is reported raw (uncapped)
    so tightness studies see the real quantity.
    """
    _check_lengths(state, profile)
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta {delta!r} outside the half-open interval (0, 1]")
    if prior_truth <= 0.0:
        raise ValueError("prior mass on the true theory must be positive")
    products = state.masses * profile.values
    best = int(np.argmax(products))
    value = float(products[best] / (delta * prior_truth))
    return BoundResult(value=value, witness=state.indices[best], kind="weak")


def cautious_bound(
    state: PosteriorState, profile: HarmProfile, alpha: float
) -> BoundResult:
    """Largest harm over the cautious set at level ``alpha``."""
    _check_lengths(state, profile)
    members = cautious_set(state, alpha)
    member_positions = np.array(members.positions)
    values = profile.values[member_positions]
    peak = values.max()
    # Witness tie-break is enumeration order, not scan order.
    witness_position = int(member_positions[values == peak].min())
    return BoundResult(
        value=float(peak),
        witness=state.indices[witness_position],
        kind="cautious-set",
    )


def posterior_predictive(state: PosteriorState, profile: HarmProfile) -> BoundResult:
    """Posterior-averaged harm probability; the non-conservative baseline."""
    _check_lengths(state, profile)
    value = float(np.dot(state.masses, profile.values))
    return BoundResult(value=value, witness=None, kind="posterior-predictive")
