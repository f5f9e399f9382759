"""Independent brute-force and closed-form references used by the test suite.

Everything here deliberately avoids the production code paths: posteriors are
exact rational products in linear space (no sequential updating, no
log-sum-exp), and the normal CDF is a hand-written series / continued-fraction
evaluation (no scipy). Disagreement with production is a test failure, never
reconciled here.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

from .theories import TheorySpace

MAX_ORACLE_OBSERVATIONS = 10_000


def brute_force_posterior(space: TheorySpace, observations: Sequence) -> dict[int, float]:
    """Posterior over theory indices by direct product evaluation.

    Multiplies prior mass by the product of conditional densities along the
    sequence for each theory, using exact rational arithmetic (no underflow),
    then normalizes once. Returns a plain ``{index: mass}`` map.
    """
    if len(observations) > MAX_ORACLE_OBSERVATIONS:
        raise ValueError(
            f"oracle limited to {MAX_ORACLE_OBSERVATIONS} observations, "
            f"got {len(observations)}"
        )
    weights: list[Fraction] = []
    for k, i in enumerate(space.indices):
        acc = Fraction(float(space.prior[k]))
        for t, obs in enumerate(observations):
            ll = float(space.log_likelihood(i, observations[:t], obs))
            if ll == float("-inf"):
                acc = Fraction(0)
                break
            acc *= Fraction(math.exp(ll))
        weights.append(acc)
    total = sum(weights)
    if total == 0:
        raise ValueError("all theories assign zero probability to the observations")
    return {int(i): float(w / total) for i, w in zip(space.indices, weights)}


def normal_cdf(x: float) -> float:
    """Standard normal CDF to better than 1e-14 absolute accuracy.

    Taylor series of erf for small arguments, continued fraction for the
    upper tail; pure stdlib math, independent of the production tail code.
    """
    x = float(x)
    if math.isnan(x):
        raise ValueError("x must be finite")
    if x < 0.0:
        return 1.0 - normal_cdf(-x)
    if x <= 3.0:
        # Phi(x) = 1/2 + 1/2 erf(x / sqrt(2)); alternating Taylor series of erf.
        z = x / math.sqrt(2.0)
        term = z
        total = z
        n = 0
        zz = z * z
        while abs(term) > 1e-20:
            n += 1
            term *= -zz / n
            total += term / (2 * n + 1)
        return 0.5 + total / math.sqrt(math.pi)
    # Upper tail via the Mills-ratio continued fraction, evaluated backward:
    # 1 - Phi(x) = phi(x) / (x + 1/(x + 2/(x + 3/(x + ...)))).
    cf = 0.0
    for k in range(200, 0, -1):
        cf = k / (x + cf)
    pdf = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    return 1.0 - pdf / (x + cf)


def bernoulli_log_odds_walk(observations: Sequence[int], p: float) -> float:
    """Closed-form log posterior odds between the p and (1-p) Bernoulli theories.

    For equal priors on the two theories, the log odds after binary
    observations ``z_1..z_t`` is ``log(p / (1-p)) * sum_i (2 z_i - 1)``: a
    scaled random walk on the +/-1 recoding of the symbols.
    """
    p = float(p)
    if not 0.0 < p < 1.0 or p == 0.5:
        raise ValueError(f"p {p!r} must lie in (0, 1) and differ from 1/2")
    steps = 0
    for z in observations:
        if z not in (0, 1):
            raise ValueError(f"observation {z!r} outside the binary alphabet {{0, 1}}")
        steps += 2 * int(z) - 1
    return math.log(p / (1.0 - p)) * steps
