"""The exploding bandit: Gaussian arms over hidden bit-vector rewards.

Each arm carries a known feature bit-vector; rewards are unit-variance
normals centered on the dot product of the arm's features with a hidden
bit-vector, and a reward above the explosion threshold destroys the bandit.
Every candidate hidden vector v indexes a theory, so inferring v is posterior
inference over a finite theory space of size 2^d. The behavior policy is the
same function of history under every theory, so its factors cancel from the
posterior and updates use the reward density alone.

Observations are ``(action, reward)`` pairs.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import ndtr

from . import posterior as post
from .theories import TheoryIndex, TheorySpace

DEFAULT_N_ARMS = 10
DEFAULT_D = 10
DEFAULT_TEMPERATURE = 2.0
DEFAULT_MAX_STEPS = 25

LOG_ROOT_2PI = 0.5 * math.log(2.0 * math.pi)


class AllMaskedError(ValueError):
    """No admissible arm remains; the episode must terminate."""


@lru_cache(maxsize=8)
def bit_vectors(d: int) -> np.ndarray:
    """All of {0,1}^d as a (2^d, d) float matrix; row i is the bits of i."""
    ints = np.arange(2**d, dtype=np.int64)
    out = ((ints[:, None] >> np.arange(d)[None, :]) & 1).astype(float)
    out.setflags(write=False)
    return out


def vector_index(v: np.ndarray) -> int:
    """Integer encoding of a bit-vector: bit j of the result is v[j]."""
    v = np.asarray(v)
    return int((v.astype(np.int64) << np.arange(len(v))).sum())


@dataclass(frozen=True)
class BanditInstance:
    """One episode's sampled environment: features, hidden vector, threshold.

    ``arm_means[a, i]`` is the mean reward of arm a under candidate vector i,
    precomputed for all 2^d candidates; ``harm_table[a, i]`` is the matching
    probability that one reward exceeds the explosion threshold.
    """

    n_arms: int
    d: int
    features: np.ndarray
    v_star: np.ndarray
    explosion_threshold: float
    arm_means: np.ndarray = dataclasses.field(init=False, repr=False, compare=False)
    harm_table: np.ndarray = dataclasses.field(init=False, repr=False, compare=False)
    v_star_index: int = dataclasses.field(init=False, compare=False)

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        v_star = np.asarray(self.v_star, dtype=float)
        if features.shape != (self.n_arms, self.d):
            raise ValueError(
                f"features shaped {features.shape}, expected {(self.n_arms, self.d)}"
            )
        if v_star.shape != (self.d,):
            raise ValueError(f"v_star shaped {v_star.shape}, expected {(self.d,)}")
        if not np.isin(features, (0.0, 1.0)).all() or not np.isin(v_star, (0.0, 1.0)).all():
            raise ValueError("features and v_star must be bit-vectors")
        arm_means = features @ bit_vectors(self.d).T
        harm_table = ndtr(arm_means - self.explosion_threshold)
        for arr in (features, v_star, arm_means, harm_table):
            arr.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "v_star", v_star)
        object.__setattr__(self, "arm_means", arm_means)
        object.__setattr__(self, "harm_table", harm_table)
        object.__setattr__(self, "v_star_index", vector_index(v_star))

    @property
    def true_means(self) -> np.ndarray:
        """Mean reward of each arm under the hidden vector."""
        return self.arm_means[:, self.v_star_index]


def sample_instance(
    n_arms: int, d: int, explosion_threshold: float, rng: np.random.Generator
) -> BanditInstance:
    """Draw features and the hidden vector uniformly; threshold is given."""
    features = rng.integers(0, 2, size=(n_arms, d))
    v_star = rng.integers(0, 2, size=d)
    return BanditInstance(
        n_arms=n_arms,
        d=d,
        features=features,
        v_star=v_star,
        explosion_threshold=float(explosion_threshold),
    )


def estimate_explosion_threshold(
    n_arms: int,
    d: int,
    n_samples: int,
    rng: np.random.Generator,
    features: np.ndarray | None = None,
) -> float:
    """Monte Carlo estimate of the expected best achievable mean reward.

    Averages max_a f_a . v over ``n_samples`` draws. By default both the
    features and the hidden vector are redrawn each sample (the global
    convention); passing ``features`` fixes them and averages over the hidden
    vector only.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    total = 0.0
    remaining = n_samples
    batch_cap = max(1, 10_000_000 // (n_arms * d))
    while remaining > 0:
        m = min(remaining, batch_cap)
        if features is None:
            f = rng.integers(0, 2, size=(m, n_arms, d)).astype(float)
        else:
            f = np.broadcast_to(np.asarray(features, dtype=float), (m, n_arms, d))
        v = rng.integers(0, 2, size=(m, d)).astype(float)
        total += np.einsum("mad,md->ma", f, v).max(axis=1).sum()
        remaining -= m
    return float(total / n_samples)


def harm_prob(v: np.ndarray, action: int, instance: BanditInstance) -> float:
    """Probability that one pull of ``action`` explodes if ``v`` were the truth.

    The reward is a unit-variance normal around f_a . v, so this is the upper
    tail mass beyond the explosion threshold.
    """
    mean = float(np.asarray(v, dtype=float) @ instance.features[action])
    return float(ndtr(mean - instance.explosion_threshold))


def reward_log_likelihood(
    v: np.ndarray, action: int, reward: float, instance: BanditInstance
) -> float:
    """Log-density of ``reward`` from ``action`` under candidate vector ``v``.

    The behavior policy contributes the same factor for every candidate, so it
    is omitted; posteriors built from this quantity are exact.
    """
    mean = float(np.asarray(v, dtype=float) @ instance.features[action])
    return -0.5 * (reward - mean) ** 2 - LOG_ROOT_2PI


def make_bandit_family(instance: BanditInstance) -> TheorySpace:
    """Theory space over all 2^d candidate hidden vectors, uniform prior.

    Index i encodes the bit-vector with bit j equal to ``(i >> j) & 1``.
    Distinct indices may induce identical reward distributions (features with
    a dead coordinate); duplicates are kept, not merged.
    """
    n = 2**instance.d
    arm_means = instance.arm_means

    def check(obs) -> tuple[int, float]:
        action, reward = obs
        if not 0 <= action < instance.n_arms:
            raise ValueError(f"action {action!r} outside [0, {instance.n_arms})")
        return int(action), float(reward)

    def ll(i: TheoryIndex, history, obs) -> float:
        action, reward = check(obs)
        return -0.5 * (reward - arm_means[action, i]) ** 2 - LOG_ROOT_2PI

    def ll_all(history, obs) -> np.ndarray:
        action, reward = check(obs)
        return -0.5 * (reward - arm_means[action]) ** 2 - LOG_ROOT_2PI

    return TheorySpace(
        indices=tuple(range(n)),
        prior=np.full(n, 1.0 / n),
        log_likelihood=ll,
        log_likelihood_all=ll_all,
    )


@dataclass(frozen=True)
class PolicyDistribution:
    """Arm-sampling probabilities under a softmax with an admissibility mask."""

    probs: np.ndarray
    temperature: float
    mask: np.ndarray

    def sample(self, rng: np.random.Generator) -> int:
        return int(rng.choice(len(self.probs), p=self.probs))


def boltzmann_policy(
    state: post.PosteriorState,
    instance: BanditInstance,
    mask: np.ndarray | None = None,
    temperature: float = DEFAULT_TEMPERATURE,
) -> PolicyDistribution:
    """Softmax over posterior-expected arm rewards, restricted to admissible arms.

    Q_a is the exact posterior mean of f_a . v (a finite sum over all
    candidates); probabilities are proportional to exp(Q_a / temperature) on
    the admissible arms and zero elsewhere.
    """
    if mask is None:
        mask = np.ones(instance.n_arms, dtype=bool)
    else:
        mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise AllMaskedError("every arm is masked")
    q = instance.arm_means @ state.masses
    z = np.where(mask, q / temperature, -np.inf)
    z = z - z.max()
    probs = np.exp(z)
    probs /= probs.sum()
    return PolicyDistribution(probs=probs, temperature=float(temperature), mask=mask)


@dataclass(frozen=True)
class EpisodeState:
    """One in-flight episode: belief, history, and liveness."""

    instance: BanditInstance
    family: TheorySpace
    state: post.PosteriorState
    t: int = 0
    history: tuple = ()
    alive: bool = True
    max_steps: int = DEFAULT_MAX_STEPS


def new_episode(instance: BanditInstance, max_steps: int = DEFAULT_MAX_STEPS) -> EpisodeState:
    family = make_bandit_family(instance)
    return EpisodeState(
        instance=instance, family=family, state=post.init(family), max_steps=max_steps
    )


def step(
    episode: EpisodeState,
    action: int,
    rng: np.random.Generator,
    terminal_harm: bool = True,
) -> tuple[float, bool, EpisodeState]:
    """Pull an arm: draw the reward, update the belief, flag explosions.

    With ``terminal_harm`` (the default) an explosion kills the episode;
    tightness studies pass False to keep observing after explosions. Stepping
    a dead or exhausted episode raises.
    """
    if not episode.alive:
        raise ValueError("cannot step a dead episode")
    if episode.t >= episode.max_steps:
        raise ValueError(f"episode already ran its {episode.max_steps} steps")
    instance = episode.instance
    reward = float(rng.normal(instance.true_means[action], 1.0))
    harmed = reward > instance.explosion_threshold
    obs = (int(action), reward)
    new_state = post.update(episode.state, episode.family, episode.history, obs)
    next_episode = dataclasses.replace(
        episode,
        state=new_state,
        t=episode.t + 1,
        history=episode.history + (obs,),
        alive=episode.alive and not (harmed and terminal_harm),
    )
    return reward, harmed, next_episode
