"""Action-admissibility predicates built from the harm bounds.

A guardrail computes one statistic per candidate arm from the current
posterior and rejects the arm when the statistic strictly exceeds the
threshold C. Four kinds are supported: ``iid-cautious`` (argmax of posterior
times harm, rejecting if any tied maximizer is over threshold),
``cautious-set`` (max harm over the mass-threshold set at level alpha),
``posterior-predictive`` (posterior-averaged harm), and ``cheating``
(the true theory's harm; a reference that needs the hidden vector).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bandit import BanditInstance
from .bounds import (
    ARGMAX_TIE_TOL,
    HarmProfile,
    cautious_bound,
    iid_cautious_bound,
    posterior_predictive,
)
from .posterior import PosteriorState, cautious_set
from .theories import TheoryIndex

GUARDRAIL_KINDS = ("iid-cautious", "cautious-set", "posterior-predictive", "cheating")


@dataclass(frozen=True)
class GuardrailConfig:
    """Which statistic to threshold, and at what level.

    ``alpha`` is required for (and only for) the cautious-set kind. ``C`` may
    be left None in sweep templates and filled per cell. ``delta`` is reserved
    for bounds that need an explicit coverage level; none of the four kinds
    here use it.
    """

    kind: str
    C: float | None = None
    alpha: float | None = None
    delta: float | None = None

    def __post_init__(self):
        if self.kind not in GUARDRAIL_KINDS:
            raise ValueError(
                f"unknown guardrail kind {self.kind!r}; expected one of {GUARDRAIL_KINDS}"
            )
        if self.C is not None and not 0.0 <= self.C <= 1.0:
            raise ValueError(f"threshold C {self.C!r} outside [0, 1]")
        if self.kind == "cautious-set":
            if self.alpha is None or not 0.0 < self.alpha <= 1.0:
                raise ValueError(
                    "cautious-set guardrail needs alpha in the half-open interval (0, 1]"
                )
        elif self.alpha is not None:
            raise ValueError(f"{self.kind} guardrail takes no alpha")

    def label(self) -> str:
        return self.kind


@dataclass(frozen=True)
class Decision:
    """Outcome for one candidate action: admissible iff statistic <= C."""

    admissible: bool
    statistic: float
    witness: TheoryIndex | tuple[TheoryIndex, ...] | None = None


def evaluate(
    config: GuardrailConfig,
    state: PosteriorState,
    instance: BanditInstance,
    action: int,
    history: Sequence = (),
) -> Decision:
    """Judge one candidate arm under the configured guardrail.

    Builds the arm's per-theory harm profile from the instance's tail table,
    computes the configured bound, and rejects iff the statistic strictly
    exceeds C.
    """
    if config.C is None:
        raise ValueError("guardrail has no threshold C set")
    if len(history) != state.t:
        raise ValueError(
            f"history has {len(history)} observations but posterior.t = {state.t}"
        )
    row = instance.harm_table[action]
    if config.kind == "cheating":
        statistic = float(row[instance.v_star_index])
        witness: TheoryIndex | tuple[TheoryIndex, ...] | None = instance.v_star_index
    else:
        profile = HarmProfile(row)
        if config.kind == "iid-cautious":
            result = iid_cautious_bound(state, profile)
        elif config.kind == "cautious-set":
            result = cautious_bound(state, profile, config.alpha)
        else:
            result = posterior_predictive(state, profile)
        statistic, witness = result.value, result.witness
    return Decision(
        admissible=statistic <= config.C, statistic=statistic, witness=witness
    )


def admissible_actions(
    config: GuardrailConfig,
    state: PosteriorState,
    instance: BanditInstance,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized `evaluate` over all arms: (admissible mask, statistics).

    Semantically identical to calling :func:`evaluate` per arm; the
    cautious-set ranking is computed once instead of once per arm.
    """
    if config.C is None:
        raise ValueError("guardrail has no threshold C set")
    harm = instance.harm_table
    if config.kind == "cheating":
        stats = harm[:, instance.v_star_index].copy()
    elif config.kind == "posterior-predictive":
        stats = harm @ state.masses
    elif config.kind == "iid-cautious":
        products = harm * state.masses[None, :]
        peaks = products.max(axis=1, keepdims=True)
        stats = np.where(products >= peaks - ARGMAX_TIE_TOL, harm, -np.inf).max(axis=1)
    else:
        members = cautious_set(state, config.alpha)
        stats = harm[:, list(members.positions)].max(axis=1)
    return stats <= config.C, stats
