"""Statistical validation suite for the posterior and bound guarantees.

Each check simulates data from a known true theory through the production
posterior code and tests a guarantee with Monte Carlo slack of three standard
errors (or an exact tolerance where a closed form exists). Checks return
plain dicts so the harness can assemble a machine-readable report.

``scale`` multiplies the Monte Carlo sample counts (floored to keep the
checks meaningful) so the plumbing can be smoke-tested quickly; 1.0 runs the
full-strength suite.
"""

from __future__ import annotations

import math

import numpy as np

from . import bandit, oracles
from . import posterior as post
from .bounds import HarmProfile, iid_cautious_bound
from .theories import make_bernoulli_family, make_single_clue_family

TESTBED_PARAMS = (0.3, 0.5, 0.7)
TESTBED_TRUTH = 2  # the 0.7 theory
OSCILLATION_P = 0.85


def _scaled(n: int, scale: float, floor: int) -> int:
    return max(floor, int(round(n * scale)))


def _testbed_family():
    n = len(TESTBED_PARAMS)
    return make_bernoulli_family(TESTBED_PARAMS, [1.0 / n] * n)


def check_supermartingale_bernoulli(seed: int, scale: float = 1.0) -> dict:
    """Mean increment of 1/posterior(truth) is <= 0 within 3 SE at every step."""
    m = _scaled(2000, scale, 50)
    horizon = 50
    rng = np.random.default_rng(seed)
    space = _testbed_family()
    p_true = TESTBED_PARAMS[TESTBED_TRUTH]
    w = np.empty((m, horizon + 1))
    for run in range(m):
        tracker = post.TruthTracker.for_space(space, TESTBED_TRUTH)
        state = post.init(space)
        history: list = []
        for _ in range(horizon):
            obs = int(rng.random() < p_true)
            state = post.update(state, space, history, obs)
            history.append(obs)
            post.track_truth(tracker, state)
        w[run] = tracker.w_history
    return _supermartingale_verdict("supermartingale-bernoulli", w, m)


def check_supermartingale_bandit(
    seed: int, scale: float = 1.0, d: int = 6, n_arms: int = 10
) -> dict:
    """Same supermartingale property on the bandit family, data on-policy."""
    m = _scaled(2000, scale, 50)
    horizon = 50
    rng = np.random.default_rng(seed)
    w = np.empty((m, horizon + 1))
    for run in range(m):
        # The explosion threshold is irrelevant here: nothing terminates and
        # the posterior only sees rewards.
        instance = bandit.sample_instance(n_arms, d, 0.0, rng)
        episode = bandit.new_episode(instance, max_steps=horizon)
        tracker = post.TruthTracker.for_space(episode.family, instance.v_star_index)
        for _ in range(horizon):
            policy = bandit.boltzmann_policy(episode.state, instance)
            action = policy.sample(rng)
            _, _, episode = bandit.step(episode, action, rng, terminal_harm=False)
            post.track_truth(tracker, episode.state)
        w[run] = tracker.w_history
    return _supermartingale_verdict("supermartingale-bandit", w, m)


def _supermartingale_verdict(name: str, w: np.ndarray, m: int) -> dict:
    increments = np.diff(w, axis=1)
    means = increments.mean(axis=0)
    ses = increments.std(axis=0, ddof=1) / math.sqrt(m)
    slack = 3.0 * ses
    z = np.divide(means, ses, out=np.zeros_like(means), where=ses > 0)
    passed = bool(((means <= slack) | ((ses == 0) & (means <= 0))).all())
    return {
        "name": name,
        "passed": passed,
        "observed": float(z.max()),
        "bound": 3.0,
        "details": {
            "sequences": m,
            "horizon": int(increments.shape[1]),
            "worst_step": int(z.argmax()),
            "worst_mean_increment": float(means[z.argmax()]),
        },
    }


def _truth_mass_trajectories(seed: int, m: int, horizon: int) -> np.ndarray:
    """(m, horizon+1) posterior masses on the true testbed theory."""
    rng = np.random.default_rng(seed)
    space = _testbed_family()
    p_true = TESTBED_PARAMS[TESTBED_TRUTH]
    out = np.empty((m, horizon + 1))
    for run in range(m):
        state = post.init(space)
        history: list = []
        out[run, 0] = state.masses[TESTBED_TRUTH]
        for t in range(horizon):
            obs = int(rng.random() < p_true)
            state = post.update(state, space, history, obs)
            history.append(obs)
            out[run, t + 1] = state.masses[TESTBED_TRUTH]
    return out


def check_ville_coverage(
    seed: int, scale: float = 1.0, deltas: tuple[float, ...] = (0.05, 0.1, 0.2)
) -> dict:
    """P(posterior on truth ever dips below delta * prior) is at most delta."""
    m = _scaled(5000, scale, 100)
    horizon = 200
    prior_truth = 1.0 / len(TESTBED_PARAMS)
    min_ratio = _truth_mass_trajectories(seed, m, horizon).min(axis=1) / prior_truth
    per_delta = []
    passed = True
    worst_margin = math.inf
    for delta in deltas:
        violation = float((min_ratio < delta).mean())
        bound = delta + 3.0 * math.sqrt(delta * (1.0 - delta) / m)
        per_delta.append({"delta": delta, "violation_frequency": violation, "bound": bound})
        passed &= violation <= bound
        worst_margin = min(worst_margin, bound - violation)
    return {
        "name": "ville-coverage",
        "passed": bool(passed),
        "observed": float(worst_margin),
        "bound": 0.0,
        "details": {"sequences": m, "horizon": horizon, "per_delta": per_delta},
    }


def check_cautious_set_dominance(
    seed: int, scale: float = 1.0, deltas: tuple[float, ...] = (0.05, 0.1, 0.2)
) -> dict:
    """With alpha = delta * prior(truth) / 2, truth stays in the set anytime."""
    m = _scaled(5000, scale, 100)
    horizon = 200
    rng = np.random.default_rng(seed)
    space = _testbed_family()
    prior_truth = 1.0 / len(TESTBED_PARAMS)
    p_true = TESTBED_PARAMS[TESTBED_TRUTH]
    alphas = [0.5 * delta * prior_truth for delta in deltas]
    stayed = np.ones((m, len(alphas)), dtype=bool)
    for run in range(m):
        state = post.init(space)
        history: list = []
        for _ in range(horizon):
            obs = int(rng.random() < p_true)
            state = post.update(state, space, history, obs)
            history.append(obs)
            for j, alpha in enumerate(alphas):
                if stayed[run, j]:
                    members = post.cautious_set(state, alpha).members
                    stayed[run, j] &= TESTBED_TRUTH in members
    per_delta = []
    passed = True
    worst_margin = math.inf
    for j, delta in enumerate(deltas):
        freq = float(stayed[:, j].mean())
        floor = 1.0 - delta - 3.0 * math.sqrt(delta * (1.0 - delta) / m)
        per_delta.append(
            {"delta": delta, "alpha": alphas[j], "stay_frequency": freq, "floor": floor}
        )
        passed &= freq >= floor
        worst_margin = min(worst_margin, freq - floor)
    return {
        "name": "cautious-set-dominance",
        "passed": bool(passed),
        "observed": float(worst_margin),
        "bound": 0.0,
        "details": {"sequences": m, "horizon": horizon, "per_delta": per_delta},
    }


def check_single_clue_construction(seed: int, scale: float = 1.0) -> dict:
    """Exact posterior after the first observation, and the branch frequency."""
    delta, prior_truth = 0.2, 0.5
    draws = _scaled(10_000, scale, 200)
    space = make_single_clue_family(delta, prior_truth)
    state = post.update(post.init(space), space, [], 1)
    expected = delta * prior_truth / (delta * prior_truth + (1.0 - prior_truth))
    exact_err = abs(float(state.masses[0]) - expected)
    tracker = post.TruthTracker.for_space(space, 0)
    post.track_truth(tracker, state)
    w0, w1 = tracker.w_history
    rng = np.random.default_rng(seed)
    freq = float((rng.random(draws) < delta).mean())
    slack = 3.0 * math.sqrt(delta * (1.0 - delta) / draws)
    passed = (
        exact_err <= 1e-12
        and abs(w0 - 1.0 / prior_truth) <= 1e-12
        and abs(w1 - 1.0 / expected) <= 1e-9
        and abs(freq - delta) <= slack
    )
    return {
        "name": "single-clue-construction",
        "passed": bool(passed),
        "observed": exact_err,
        "bound": 1e-12,
        "details": {
            "posterior_after_clue": float(state.masses[0]),
            "expected": expected,
            "w_after_clue": w1,
            "branch_frequency": freq,
            "branch_slack": slack,
            "draws": draws,
        },
    }


def check_log_odds_closed_form(seed: int, scale: float = 1.0) -> dict:
    """Posterior log odds match the scaled random-walk closed form to 1e-9."""
    p = OSCILLATION_P
    sequences = _scaled(20, scale, 3)
    length = 300
    rng = np.random.default_rng(seed)
    space = make_bernoulli_family([p, 0.5, 1.0 - p], [0.5, 0.0, 0.5])
    worst = 0.0
    for _ in range(sequences):
        state = post.init(space)
        history: list = []
        for _ in range(length):
            obs = int(rng.random() < 0.5)
            state = post.update(state, space, history, obs)
            history.append(obs)
            log_odds = float(state.log_mass[0] - state.log_mass[2])
            reference = oracles.bernoulli_log_odds_walk(history, p)
            worst = max(worst, abs(log_odds - reference))
    return {
        "name": "log-odds-closed-form",
        "passed": worst <= 1e-9,
        "observed": worst,
        "bound": 1e-9,
        "details": {"sequences": sequences, "length": length, "p": p},
    }


def check_posterior_oscillation(seed: int, scale: float = 1.0) -> dict:
    """With the truth at zero prior, the posterior on a wrong theory keeps
    swinging above 0.99 and below 0.01 instead of converging."""
    p = OSCILLATION_P
    sequences = _scaled(200, scale, 5)
    length = 10_000
    rng = np.random.default_rng(seed)
    space = make_bernoulli_family([p, 0.5, 1.0 - p], [0.5, 0.0, 0.5])
    hits = 0
    for _ in range(sequences):
        state = post.init(space)
        history: list = []
        seen_high = seen_low = False
        for _ in range(length):
            obs = int(rng.random() < 0.5)  # data from the fair coin
            state = post.update(state, space, history, obs)
            history.append(obs)
            mass = float(state.masses[0])
            seen_high |= mass > 0.99
            seen_low |= mass < 0.01
            if seen_high and seen_low:
                hits += 1
                break
    freq = hits / sequences
    return {
        "name": "posterior-oscillation",
        "passed": freq >= 0.90,
        "observed": freq,
        "bound": 0.90,
        "details": {"sequences": sequences, "length": length, "p": p},
    }


def check_death_probability(seed: int, scale: float = 1.0) -> dict:
    """25 independent steps at harm 0.1 kill with frequency 1 - 0.9^25."""
    trials = _scaled(10_000, scale, 200)
    rng = np.random.default_rng(seed)
    died = (rng.random((trials, 25)) < 0.1).any(axis=1)
    freq = float(died.mean())
    expected = 1.0 - 0.9**25
    return {
        "name": "death-probability",
        "passed": abs(freq - expected) <= 0.02,
        "observed": freq,
        "bound": expected,
        "details": {"trials": trials, "tolerance": 0.02},
    }


def check_posterior_convergence(seed: int, scale: float = 1.0) -> dict:
    """Posterior mass on the truth exceeds 0.99 by t=2000 and the MAP index
    never leaves the truth afterwards, in at least 95% of runs."""
    runs = _scaled(500, scale, 10)
    horizon = 2000
    rng = np.random.default_rng(seed)
    space = _testbed_family()
    p_true = TESTBED_PARAMS[TESTBED_TRUTH]
    good = 0
    for _ in range(runs):
        state = post.init(space)
        history: list = []
        crossed_at = None
        stable = True
        for t in range(horizon):
            obs = int(rng.random() < p_true)
            state = post.update(state, space, history, obs)
            history.append(obs)
            mass = float(state.masses[TESTBED_TRUTH])
            if crossed_at is None and mass > 0.99:
                crossed_at = t
            if crossed_at is not None and state.map_index() != TESTBED_TRUTH:
                stable = False
                break
        if crossed_at is not None and stable and float(state.masses[TESTBED_TRUTH]) > 0.99:
            good += 1
    freq = good / runs
    return {
        "name": "posterior-convergence",
        "passed": freq >= 0.95,
        "observed": freq,
        "bound": 0.95,
        "details": {"runs": runs, "horizon": horizon},
    }


def check_argmax_bound_soundness(seed: int, scale: float = 1.0) -> dict:
    """After 2000 i.i.d. observations the argmax bound covers the truth's harm
    in at least 95% of runs, even when the truth has the largest harm."""
    runs = _scaled(500, scale, 10)
    horizon = 2000
    rng = np.random.default_rng(seed)
    space = _testbed_family()
    p_true = TESTBED_PARAMS[TESTBED_TRUTH]
    profile = HarmProfile(np.array([0.1, 0.2, 0.9]))  # truth is the worst case
    truth_harm = float(profile.values[TESTBED_TRUTH])
    covered = 0
    for _ in range(runs):
        observations = (rng.random(horizon) < p_true).astype(int).tolist()
        state = post.update_sequence(post.init(space), space, observations)
        if iid_cautious_bound(state, profile).value >= truth_harm:
            covered += 1
    freq = covered / runs
    return {
        "name": "argmax-bound-soundness",
        "passed": freq >= 0.95,
        "observed": freq,
        "bound": 0.95,
        "details": {"runs": runs, "horizon": horizon, "truth_harm": truth_harm},
    }


CHECKS = (
    check_supermartingale_bernoulli,
    check_supermartingale_bandit,
    check_ville_coverage,
    check_cautious_set_dominance,
    check_single_clue_construction,
    check_log_odds_closed_form,
    check_posterior_oscillation,
    check_death_probability,
    check_posterior_convergence,
    check_argmax_bound_soundness,
)
