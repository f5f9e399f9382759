"""Countable theory spaces: indexed families of sequence distributions with priors.

A theory space is a finite ordered family of candidate world models. Each
theory is identified by a nonnegative integer index and contributes a
conditional log-density of the next observation given the history. The
enumeration order of the indices is fixed at construction and is used as the
tie-breaking order everywhere downstream (MAP selection, cautious sets).

Observations are family-specific plain values: binary symbols 0/1 for the
Bernoulli and single-clue families, ``(action, reward)`` pairs for the bandit
family built in :mod:`harmbounds.bandit`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

TheoryIndex = int
Observation = object

PRIOR_SUM_TOL = 1e-12


@dataclass(frozen=True)
class TheorySpace:
    """Immutable indexed family of theories with a prior.

    ``prior[k]`` is the prior mass of ``indices[k]``. ``log_likelihood(i, h, z)``
    returns the conditional log-density of observation ``z`` after history
    ``h`` under theory ``i``; ``-inf`` is a legal value (hard elimination).
    ``log_likelihood_all(h, z)`` returns the same quantity for every theory at
    once, as a vector aligned with ``indices``; families override it for speed,
    otherwise it falls back to a per-index loop.
    """

    indices: tuple[TheoryIndex, ...]
    prior: np.ndarray
    log_likelihood: Callable[[TheoryIndex, Sequence, Observation], float]
    log_likelihood_all: Callable[[Sequence, Observation], np.ndarray] | None = None
    observation_space: tuple | None = None
    _position: dict[TheoryIndex, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        prior = np.asarray(self.prior, dtype=float).copy()
        n = len(self.indices)
        if n == 0:
            raise ValueError("theory space must contain at least one theory")
        if prior.shape != (n,):
            raise ValueError(f"prior has length {prior.shape}, expected ({n},)")
        if (prior < 0).any():
            raise ValueError("prior masses must be nonnegative")
        if abs(prior.sum() - 1.0) > PRIOR_SUM_TOL:
            raise ValueError(f"prior masses sum to {prior.sum()!r}, expected 1")
        pos = {}
        for k, i in enumerate(self.indices):
            if not (isinstance(i, (int, np.integer)) and 0 <= i < n):
                raise ValueError(f"theory index {i!r} outside [0, {n})")
            if i in pos:
                raise ValueError(f"duplicate theory index {i!r}")
            pos[int(i)] = k
        prior.setflags(write=False)
        object.__setattr__(self, "prior", prior)
        object.__setattr__(self, "_position", pos)

    @property
    def size(self) -> int:
        return len(self.indices)

    def position(self, index: TheoryIndex) -> int:
        """Enumeration position of ``index`` (tie-break rank)."""
        return self._position[int(index)]

    def prior_of(self, index: TheoryIndex) -> float:
        return float(self.prior[self.position(index)])

    def ll_all(self, history: Sequence, obs: Observation) -> np.ndarray:
        """Vector of log-likelihoods for all theories, in enumeration order."""
        if self.log_likelihood_all is not None:
            return self.log_likelihood_all(history, obs)
        return np.array(
            [self.log_likelihood(i, history, obs) for i in self.indices], dtype=float
        )


def _binary_table(probs_of_one: np.ndarray) -> np.ndarray:
    """(n, 2) table of log P(obs = 0 | i), log P(obs = 1 | i); log 0 -> -inf."""
    with np.errstate(divide="ignore"):
        return np.stack(
            [np.log(1.0 - probs_of_one), np.log(probs_of_one)], axis=1
        )


def _check_binary(obs) -> int:
    if obs not in (0, 1):
        raise ValueError(f"observation {obs!r} outside the binary alphabet {{0, 1}}")
    return int(obs)


def make_bernoulli_family(params: Sequence[float], prior: Sequence[float]) -> TheorySpace:
    """I.i.d. family of Bernoulli theories over the alphabet {0, 1}.

    ``params[i]`` is theory i's probability of observing 1. The log-likelihood
    ignores history. Zero or one parameters are legal and produce -inf
    log-likelihoods for the impossible symbol.
    """
    params = [float(p) for p in params]
    if not params:
        raise ValueError("params must be nonempty")
    if len(prior) != len(params):
        raise ValueError(
            f"prior has {len(prior)} entries for {len(params)} parameters"
        )
    for p in params:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"Bernoulli parameter {p!r} outside [0, 1]")
    table = _binary_table(np.asarray(params))
    table.setflags(write=False)

    def ll(i: TheoryIndex, history, obs) -> float:
        return float(table[i, _check_binary(obs)])

    def ll_all(history, obs) -> np.ndarray:
        return table[:, _check_binary(obs)]

    return TheorySpace(
        indices=tuple(range(len(params))),
        prior=np.asarray(prior, dtype=float),
        log_likelihood=ll,
        log_likelihood_all=ll_all,
        observation_space=(0, 1),
    )


def make_single_clue_family(delta: float, prior_istar: float) -> TheorySpace:
    """Two-theory family where only the first observation is informative.

    Index 0 (the designated truth) assigns probability ``delta`` to the first
    observation being 1; index 1 assigns probability 1 to it. From the second
    observation on, both theories emit fair coin flips, so the posterior never
    moves again. Observing 0 first eliminates index 1 outright.
    """
    delta = float(delta)
    prior_istar = float(prior_istar)
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta {delta!r} outside the open interval (0, 1)")
    if not 0.0 < prior_istar < 1.0:
        raise ValueError(f"prior_istar {prior_istar!r} outside the open interval (0, 1)")
    first = _binary_table(np.array([delta, 1.0]))
    first.setflags(write=False)
    log_half = math.log(0.5)

    def ll(i: TheoryIndex, history, obs) -> float:
        b = _check_binary(obs)
        if len(history) == 0:
            return float(first[i, b])
        return log_half

    def ll_all(history, obs) -> np.ndarray:
        b = _check_binary(obs)
        if len(history) == 0:
            return first[:, b]
        return np.array([log_half, log_half])

    return TheorySpace(
        indices=(0, 1),
        prior=np.array([prior_istar, 1.0 - prior_istar]),
        log_likelihood=ll,
        log_likelihood_all=ll_all,
        observation_space=(0, 1),
    )
