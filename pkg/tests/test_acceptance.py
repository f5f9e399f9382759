"""Acceptance suite: one test and one printed PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines. All
criteria run at full strength under a fixed master seed, so the outcomes are
reproducible bit for bit.
"""

import time

import numpy as np
import pytest

from harmbounds import validation
from harmbounds.guardrails import GuardrailConfig
from harmbounds.harness import (
    ExperimentConfig,
    derive_seed,
    run_reward_deaths,
    run_tightness,
)
from harmbounds.oracles import brute_force_posterior
from harmbounds.posterior import init, update_sequence
from harmbounds.bandit import sample_instance, make_bandit_family
from harmbounds.theories import make_bernoulli_family, make_single_clue_family

MASTER_SEED = 0


def criterion(name: str, ok: bool, detail: str) -> str:
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    print(line)
    return line


def validation_seed(name: str) -> int:
    return derive_seed(MASTER_SEED, "validation", name)


@pytest.fixture(scope="module")
def fig1():
    config = ExperimentConfig(
        experiment="reward-deaths",
        episodes=1000,
        n_arms=10,
        d=10,
        C_list=(0.01, 0.033, 0.1),
        master_seed=MASTER_SEED,
    )
    start = time.perf_counter()
    _, summary = run_reward_deaths(config)
    elapsed = time.perf_counter() - start
    cells = {
        (c["guardrail"], c["C"], c["alpha"]): c["death_rate"] for c in summary["cells"]
    }
    print(f"(guardrail sweep: 18 cells x 1000 episodes in {elapsed:.0f}s; "
          f"target 900s)")
    return cells


@pytest.fixture(scope="module")
def tightness():
    config = ExperimentConfig(
        experiment="tightness",
        episodes=500,
        n_arms=10,
        d=10,
        master_seed=MASTER_SEED,
    )
    _, summary = run_tightness(config)
    return summary


def test_truth_reciprocal_never_drifts_upward():
    start = time.perf_counter()
    bernoulli = validation.check_supermartingale_bernoulli(
        validation_seed("supermartingale-bernoulli")
    )
    bandit = validation.check_supermartingale_bandit(
        validation_seed("supermartingale-bandit")
    )
    elapsed = time.perf_counter() - start
    ok = bernoulli["passed"] and bandit["passed"]
    line = criterion(
        "supermartingale increments (2000 sequences, 50 steps)",
        ok,
        f"max z bernoulli={bernoulli['observed']:.2f}, "
        f"bandit d=6={bandit['observed']:.2f}, limit 3.0; {elapsed:.0f}s (target 60s)",
    )
    assert ok, line


def test_anytime_dip_probability_bounded():
    start = time.perf_counter()
    result = validation.check_ville_coverage(validation_seed("ville-coverage"))
    elapsed = time.perf_counter() - start
    detail = ", ".join(
        f"d={r['delta']}: {r['violation_frequency']:.4f}<={r['bound']:.4f}"
        for r in result["details"]["per_delta"]
    )
    line = criterion(
        "anytime dip coverage (5000 sequences, 200 steps)",
        result["passed"],
        f"{detail}; {elapsed:.0f}s (target 120s)",
    )
    assert result["passed"], line


def test_truth_stays_in_cautious_set():
    result = validation.check_cautious_set_dominance(
        validation_seed("cautious-set-dominance")
    )
    detail = ", ".join(
        f"d={r['delta']}: {r['stay_frequency']:.4f}>={r['floor']:.4f}"
        for r in result["details"]["per_delta"]
    )
    line = criterion("truth stays in cautious set", result["passed"], detail)
    assert result["passed"], line


def _random_instances(rng, count):
    """Mixed bag of families plus observation sequences for exactness checks."""
    for _ in range(count):
        kind = rng.choice(["bernoulli", "bernoulli", "bernoulli", "clue", "bandit"])
        if kind == "bernoulli":
            n = int(rng.integers(1, 7))
            params = rng.uniform(0.02, 0.98, size=n)
            prior = rng.dirichlet(np.ones(n))
            if n > 1 and rng.random() < 0.15:
                prior[int(rng.integers(n))] = 0.0
                prior /= prior.sum()
            space = make_bernoulli_family(params, prior)
            length = int(rng.integers(0, 101))
            data = (rng.random(length) < rng.uniform(0.1, 0.9)).astype(int).tolist()
            yield "bernoulli", space, data
        elif kind == "clue":
            space = make_single_clue_family(rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95))
            length = int(rng.integers(1, 40))
            data = (rng.random(length) < 0.5).astype(int).tolist()
            if data[0] == 0 and rng.random() < 0.5:
                data[0] = 1  # exercise both first-step branches
            yield "clue", space, data
        else:
            d = int(rng.integers(1, 4))
            n_arms = int(rng.integers(1, 5))
            instance = sample_instance(n_arms, d, 1.0, rng)
            space = make_bandit_family(instance)
            length = int(rng.integers(0, 31))
            data = [
                (int(rng.integers(n_arms)), float(rng.normal(rng.uniform(0, d), 1.0)))
                for _ in range(length)
            ]
            yield "bandit", space, data


def test_sequential_posterior_matches_direct_products():
    rng = np.random.default_rng(derive_seed(MASTER_SEED, "exactness"))
    worst_oracle = 0.0
    worst_permutation = 0.0
    checked = 0
    for kind, space, data in _random_instances(rng, 1000):
        state = update_sequence(init(space), space, data)
        oracle = brute_force_posterior(space, data)
        for position, index in enumerate(space.indices):
            worst_oracle = max(worst_oracle, abs(state.masses[position] - oracle[index]))
        if kind == "bernoulli" and len(data) > 1:
            shuffled = list(data)
            rng.shuffle(shuffled)
            permuted = update_sequence(init(space), space, shuffled)
            worst_permutation = max(
                worst_permutation, float(np.abs(permuted.masses - state.masses).max())
            )
        checked += 1
    ok = checked == 1000 and worst_oracle <= 1e-9 and worst_permutation <= 1e-9
    line = criterion(
        "sequential posterior matches direct products (1000 instances)",
        ok,
        f"max |seq - product| = {worst_oracle:.2e}, "
        f"max permutation gap = {worst_permutation:.2e}, limit 1e-9",
    )
    assert ok, line


def test_single_clue_family_exact_posterior_and_branch_rate():
    result = validation.check_single_clue_construction(
        validation_seed("single-clue-construction")
    )
    d = result["details"]
    line = criterion(
        "single-clue construction",
        result["passed"],
        f"posterior {d['posterior_after_clue']:.12f} vs {d['expected']:.12f} "
        f"(1e-12), branch rate {d['branch_frequency']:.4f} vs 0.2 "
        f"(slack {d['branch_slack']:.4f})",
    )
    assert result["passed"], line


def test_excluded_truth_posterior_oscillates():
    closed_form = validation.check_log_odds_closed_form(
        validation_seed("log-odds-closed-form")
    )
    oscillation = validation.check_posterior_oscillation(
        validation_seed("posterior-oscillation")
    )
    ok = closed_form["passed"] and oscillation["passed"]
    line = criterion(
        "excluded-truth random walk",
        ok,
        f"log-odds gap {closed_form['observed']:.2e} (limit 1e-9), "
        f"oscillation rate {oscillation['observed']:.3f} (floor 0.90, 200 seqs)",
    )
    assert ok, line


def test_constant_hazard_death_rate():
    result = validation.check_death_probability(validation_seed("death-probability"))
    line = criterion(
        "25-step constant hazard",
        result["passed"],
        f"observed {result['observed']:.4f} vs {result['bound']:.4f} +- 0.02",
    )
    assert result["passed"], line


def test_cautious_estimate_coverage_under_uniform_policy(tightness):
    prior_truth = tightness["prior_truth"]
    failures = []
    strict_floor_ok = True
    for row in tightness["per_alpha"]:
        alpha, freq = row["alpha"], row["overestimate_frequency"]
        reference = row["reference_lower_bound"]
        if reference > 0 and freq < reference:
            failures.append((alpha, freq, reference))
        if alpha <= 2.0**-13 and freq < 0.875:
            strict_floor_ok = False
    small = [
        r["overestimate_frequency"]
        for r in tightness["per_alpha"]
        if r["alpha"] <= 2.0**-13
    ]
    ok = not failures and strict_floor_ok and len(small) > 0
    line = criterion(
        "cautious estimate coverage (uniform policy, 500 episodes)",
        ok,
        f"all alphas above their reference bound ({len(failures)} violations); "
        f"min freq at alpha<=2^-13 is {min(small):.4f} >= 0.875",
    )
    assert ok, line


def test_reference_guardrail_is_safe_at_strict_threshold(fig1):
    rate = fig1[("cheating", 0.01, None)]
    ok = rate <= 0.02
    line = criterion(
        "true-theory guardrail at C=0.01",
        ok,
        f"death rate {rate:.4f} <= 0.02",
    )
    assert ok, line


def test_reference_guardrail_dies_often_at_loose_threshold(fig1):
    # With integer arm means and threshold ~4.12, no admissible arm carries
    # harm above 0.018 at C=0.1, capping the 25-step death probability near
    # 0.35; the 0.5 floor is unreachable for this environment. Kept as
    # specified; see the death-rate table in the summary JSON.
    rate = fig1[("cheating", 0.1, None)]
    ok = rate >= 0.5
    line = criterion(
        "true-theory guardrail at C=0.1",
        ok,
        f"death rate {rate:.4f} >= 0.5",
    )
    assert ok, line


def test_wide_cautious_set_beats_predictive_on_deaths(fig1):
    comparisons = []
    ok = True
    for c in (0.01, 0.033, 0.1):
        wide = fig1[("cautious-set", c, 0.001)]
        predictive = fig1[("posterior-predictive", c, None)]
        comparisons.append(f"C={c}: {wide:.3f}<={predictive:.3f}")
        ok &= wide <= predictive
    line = criterion(
        "wide cautious set is safer than predictive", ok, ", ".join(comparisons)
    )
    assert ok, line


def test_narrow_cautious_set_riskier_than_moderate(fig1):
    narrow = fig1[("cautious-set", 0.033, 0.999)]
    moderate = fig1[("cautious-set", 0.033, 0.1)]
    ok = narrow >= moderate
    line = criterion(
        "narrow cautious set is riskier at C=0.033",
        ok,
        f"death rate {narrow:.3f} >= {moderate:.3f}",
    )
    assert ok, line


def test_argmax_bound_covers_truth_after_burn_in():
    result = validation.check_argmax_bound_soundness(
        validation_seed("argmax-bound-soundness")
    )
    line = criterion(
        "argmax bound covers truth at t=2000",
        result["passed"],
        f"coverage {result['observed']:.3f} >= 0.95 over 500 runs",
    )
    assert result["passed"], line


def test_identical_seeds_give_identical_outputs(tmp_path):
    config = dict(
        episodes=25,
        d=6,
        n_arms=6,
        C_list=(0.033,),
        threshold_samples=5000,
        master_seed=MASTER_SEED,
        guardrails=(
            GuardrailConfig(kind="cheating"),
            GuardrailConfig(kind="cautious-set", alpha=0.1),
        ),
    )
    run_reward_deaths(ExperimentConfig(**config, output_path=str(tmp_path / "a")))
    run_reward_deaths(ExperimentConfig(**config, output_path=str(tmp_path / "b")))
    sweeps_match = (tmp_path / "a/reward_deaths.csv").read_bytes() == (
        tmp_path / "b/reward_deaths.csv"
    ).read_bytes()
    tight = dict(
        experiment="tightness", episodes=10, d=6, n_arms=6,
        threshold_samples=5000, master_seed=MASTER_SEED,
    )
    run_tightness(ExperimentConfig(**tight, output_path=str(tmp_path / "ta")))
    run_tightness(ExperimentConfig(**tight, output_path=str(tmp_path / "tb")))
    tightness_match = (tmp_path / "ta/tightness.csv").read_bytes() == (
        tmp_path / "tb/tightness.csv"
    ).read_bytes()
    ok = sweeps_match and tightness_match
    line = criterion(
        "determinism",
        ok,
        f"byte-identical CSVs: sweep={sweeps_match}, tightness={tightness_match}",
    )
    assert ok, line
