"""Bayesian harm-probability bounds and guardrails over countable theory spaces.

The library models the world as a finite indexed family of candidate
sequence distributions (theories), maintains an exact discrete posterior over
the indices, and turns per-theory harm predictions into conservative
run-time bounds that guardrails can threshold. A simulator for the exploding
bandit exercises the bounds end to end, and a validation suite checks the
statistical guarantees by Monte Carlo.
"""

__version__ = "0.1.0"

from .bandit import (
    AllMaskedError,
    BanditInstance,
    EpisodeState,
    PolicyDistribution,
    boltzmann_policy,
    estimate_explosion_threshold,
    harm_prob,
    make_bandit_family,
    new_episode,
    reward_log_likelihood,
    sample_instance,
    step,
)
from .bounds import (
    BoundResult,
    HarmProfile,
    cautious_bound,
    iid_cautious_bound,
    posterior_predictive,
    weak_bound,
)
from .guardrails import Decision, GuardrailConfig, admissible_actions, evaluate
from .harness import (
    EpisodeRecord,
    ExperimentConfig,
    TightnessRecord,
    run_reward_deaths,
    run_tightness,
    run_validation,
)
from .posterior import (
    AllZeroLikelihoodError,
    CautiousSet,
    PosteriorState,
    TruthTracker,
    cautious_set,
    init,
    track_truth,
    update,
    update_sequence,
)
from .theories import (
    TheorySpace,
    make_bernoulli_family,
    make_single_clue_family,
)

__all__ = [
    "AllMaskedError",
    "AllZeroLikelihoodError",
    "BanditInstance",
    "BoundResult",
    "CautiousSet",
    "Decision",
    "EpisodeRecord",
    "EpisodeState",
    "ExperimentConfig",
    "GuardrailConfig",
    "HarmProfile",
    "PolicyDistribution",
    "PosteriorState",
    "TheorySpace",
    "TightnessRecord",
    "TruthTracker",
    "admissible_actions",
    "boltzmann_policy",
    "cautious_bound",
    "cautious_set",
    "estimate_explosion_threshold",
    "evaluate",
    "harm_prob",
    "iid_cautious_bound",
    "init",
    "make_bandit_family",
    "make_bernoulli_family",
    "make_single_clue_family",
    "new_episode",
    "posterior_predictive",
    "reward_log_likelihood",
    "run_reward_deaths",
    "run_tightness",
    "run_validation",
    "sample_instance",
    "step",
    "track_truth",
    "update",
    "update_sequence",
    "weak_bound",
]
