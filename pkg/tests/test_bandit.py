import itertools
import math

import numpy as np
import pytest

from harmbounds.bandit import (
    AllMaskedError,
    BanditInstance,
    bit_vectors,
    boltzmann_policy,
    estimate_explosion_threshold,
    harm_prob,
    make_bandit_family,
    new_episode,
    reward_log_likelihood,
    sample_instance,
    step,
    vector_index,
)
from harmbounds.oracles import normal_cdf
from harmbounds.posterior import init, update

LOG_PEAK = -0.9189385332046727  # log density of a unit normal at its mean


def make_instance(features, v_star, threshold):
    features = np.asarray(features)
    return BanditInstance(
        n_arms=features.shape[0],
        d=features.shape[1],
        features=features,
        v_star=np.asarray(v_star),
        explosion_threshold=threshold,
    )


def enumerate_expected_max_dot(n_arms, d):
    """Exhaustive E[max_a f_a . v] over all features and hidden vectors."""
    vectors = list(itertools.product((0, 1), repeat=d))
    total, count = 0.0, 0
    for v in vectors:
        for feats in itertools.product(vectors, repeat=n_arms):
            total += max(sum(f * w for f, w in zip(arm, v)) for arm in feats)
            count += 1
    return total / count


class TestBitVectors:
    def test_roundtrip(self):
        vectors = bit_vectors(4)
        assert vectors.shape == (16, 4)
        for i in range(16):
            assert vector_index(vectors[i]) == i

    def test_bit_order(self):
        assert vector_index(np.array([1, 0, 0])) == 1
        assert vector_index(np.array([0, 0, 1])) == 4


class TestExplosionThreshold:
    def test_exact_value_one_arm_one_bit(self):
        assert enumerate_expected_max_dot(1, 1) == 0.25
        rng = np.random.default_rng(0)
        n = 40_000
        estimate = estimate_explosion_threshold(1, 1, n, rng)
        assert abs(estimate - 0.25) <= 3 * math.sqrt(0.1875 / n)

    def test_exact_value_two_arms_two_bits(self):
        exact = enumerate_expected_max_dot(2, 2)
        assert exact == 0.71875
        rng = np.random.default_rng(1)
        n = 40_000
        estimate = estimate_explosion_threshold(2, 2, n, rng)
        # variance from the same enumeration
        vectors = list(itertools.product((0, 1), repeat=2))
        values = [
            max(sum(f * w for f, w in zip(arm, v)) for arm in feats)
            for v in vectors
            for feats in itertools.product(vectors, repeat=2)
        ]
        var = np.var(values)
        assert abs(estimate - exact) <= 3 * math.sqrt(var / n)

    def test_all_zero_features_give_zero(self):
        rng = np.random.default_rng(2)
        estimate = estimate_explosion_threshold(
            3, 4, 1000, rng, features=np.zeros((3, 4))
        )
        assert estimate == 0.0

    def test_deterministic_under_seed(self):
        a = estimate_explosion_threshold(10, 10, 5000, np.random.default_rng(9))
        b = estimate_explosion_threshold(10, 10, 5000, np.random.default_rng(9))
        assert a == b

    def test_sample_count_must_be_positive(self):
        with pytest.raises(ValueError, match="positive"):
            estimate_explosion_threshold(1, 1, 0, np.random.default_rng(0))


class TestHarmProb:
    def test_mean_at_threshold_gives_half(self):
        instance = make_instance([[1, 1]], [1, 1], threshold=2.0)
        assert abs(harm_prob(np.array([1, 1]), 0, instance) - 0.5) < 1e-15

    def test_one_below_threshold(self):
        instance = make_instance([[1, 0]], [1, 0], threshold=2.0)
        expected = 1.0 - normal_cdf(1.0)
        assert abs(harm_prob(np.array([1, 0]), 0, instance) - expected) < 1e-12

    def test_two_above_threshold(self):
        instance = make_instance([[1, 1, 1]], [1, 1, 1], threshold=1.0)
        expected = 1.0 - normal_cdf(-2.0)
        assert abs(harm_prob(np.array([1, 1, 1]), 0, instance) - expected) < 1e-12

    def test_monotone_in_dot_and_strictly_inside_unit_interval(self):
        instance = make_instance([[1, 1, 1, 1]], [1, 1, 1, 1], threshold=2.0)
        probs = [
            harm_prob(v, 0, instance)
            for v in ([0, 0, 0, 0], [1, 0, 0, 0], [1, 1, 0, 0], [1, 1, 1, 1])
        ]
        assert all(0.0 < p < 1.0 for p in probs)
        assert all(a < b for a, b in zip(probs, probs[1:]))

    def test_table_matches_scalar_function(self):
        rng = np.random.default_rng(3)
        instance = sample_instance(4, 5, 1.7, rng)
        vectors = bit_vectors(5)
        for action in range(4):
            for i in (0, 7, 31):
                assert (
                    abs(
                        instance.harm_table[action, i]
                        - harm_prob(vectors[i], action, instance)
                    )
                    < 1e-15
                )

    def test_matches_empirical_explosion_frequency(self):
        rng = np.random.default_rng(4)
        instance = make_instance([[1, 1, 0]], [1, 0, 1], threshold=1.3)
        p = harm_prob(instance.v_star, 0, instance)
        n = 200_000
        rewards = rng.normal(instance.true_means[0], 1.0, size=n)
        freq = float((rewards > instance.explosion_threshold).mean())
        assert abs(freq - p) <= 3 * math.sqrt(p * (1 - p) / n)


class TestRewardLogLikelihood:
    def test_peak_density(self):
        instance = make_instance([[1, 1]], [1, 1], threshold=2.0)
        v = np.array([1, 0])
        mean = 1.0
        assert abs(reward_log_likelihood(v, 0, mean, instance) - LOG_PEAK) < 1e-12

    def test_unit_offset_costs_half(self):
        instance = make_instance([[1, 1]], [1, 1], threshold=2.0)
        v = np.array([1, 0])
        value = reward_log_likelihood(v, 0, 2.0, instance)
        assert abs(value - (LOG_PEAK - 0.5)) < 1e-12

    def test_posterior_matches_four_hypothesis_enumeration(self):
        rng = np.random.default_rng(5)
        instance = sample_instance(3, 2, 1.0, rng)
        family = make_bandit_family(instance)
        action, reward = 1, 0.83
        state = update(init(family), family, [], (action, reward))
        # independent enumeration over the four candidate vectors
        weights = []
        for v in bit_vectors(2):
            mean = float(v @ instance.features[action])
            weights.append(0.25 * math.exp(-0.5 * (reward - mean) ** 2))
        expected = np.array(weights) / sum(weights)
        np.testing.assert_allclose(state.masses, expected, atol=1e-12)

    def test_duplicate_theories_stay_tied(self):
        # A dead feature coordinate makes vector pairs observationally
        # identical; their posterior masses must remain exactly equal.
        instance = make_instance([[1, 0], [1, 0]], [0, 1], threshold=1.0)
        family = make_bandit_family(instance)
        state = init(family)
        history = []
        rng = np.random.default_rng(6)
        for _ in range(10):
            obs = (int(rng.integers(2)), float(rng.normal()))
            state = update(state, family, history, obs)
            history.append(obs)
        # index pairs (0, 2) and (1, 3) differ only in the dead second bit
        assert state.masses[0] == state.masses[2]
        assert state.masses[1] == state.masses[3]

    def test_invalid_action_rejected(self):
        instance = make_instance([[1, 1]], [1, 1], threshold=2.0)
        family = make_bandit_family(instance)
        with pytest.raises(ValueError, match="action"):
            family.log_likelihood(0, [], (5, 0.0))

    def test_uniform_prior_over_all_candidates(self):
        rng = np.random.default_rng(10)
        instance = sample_instance(10, 10, 4.1, rng)
        state = init(make_bandit_family(instance))
        assert state.masses.shape == (2**10,)
        np.testing.assert_allclose(state.masses, 2.0**-10)


class TestBoltzmannPolicy:
    def test_equal_values_give_uniform(self):
        instance = make_instance([[1, 0], [0, 1]], [1, 1], threshold=2.0)
        policy = boltzmann_policy(init(make_bandit_family(instance)), instance)
        np.testing.assert_allclose(policy.probs, 0.5)

    def test_closed_form_two_arm_softmax(self):
        # Q = (0, 2) at temperature 2 -> (1/(1+e), e/(1+e))
        instance = make_instance([[0, 0], [1, 1]], [1, 1], threshold=2.0)
        family = make_bandit_family(instance)
        state = init(family)
        # posterior-mean dot for arm 1 is 1.0 under the uniform prior; scale
        # the temperature so Q/T matches the closed form (0, 1).
        policy = boltzmann_policy(state, instance, temperature=1.0)
        e = math.exp(1.0)
        np.testing.assert_allclose(policy.probs, [1 / (1 + e), e / (1 + e)], atol=1e-12)

    def test_masked_arms_get_zero_probability(self):
        rng = np.random.default_rng(7)
        instance = sample_instance(5, 3, 1.0, rng)
        state = init(make_bandit_family(instance))
        mask = np.array([True, False, True, False, True])
        policy = boltzmann_policy(state, instance, mask)
        assert policy.probs[~mask].sum() == 0.0
        assert abs(policy.probs.sum() - 1.0) < 1e-12

    def test_all_masked_raises(self):
        rng = np.random.default_rng(8)
        instance = sample_instance(3, 2, 1.0, rng)
        state = init(make_bandit_family(instance))
        with pytest.raises(AllMaskedError):
            boltzmann_policy(state, instance, np.zeros(3, dtype=bool))


class TestStep:
    def test_explosion_ends_episode(self):
        instance = make_instance([[1, 1, 1]], [1, 1, 1], threshold=-10.0)
        episode = new_episode(instance)
        reward, harmed, episode = step(episode, 0, np.random.default_rng(0))
        assert harmed and not episode.alive
        assert reward > instance.explosion_threshold
        with pytest.raises(ValueError, match="dead"):
            step(episode, 0, np.random.default_rng(0))

    def test_full_episode_without_death(self):
        instance = make_instance([[0, 0]], [1, 1], threshold=50.0)
        episode = new_episode(instance)
        rng = np.random.default_rng(1)
        for _ in range(25):
            _, harmed, episode = step(episode, 0, rng)
            assert not harmed
        assert episode.alive and episode.t == 25
        with pytest.raises(ValueError, match="steps"):
            step(episode, 0, rng)

    def test_replay_is_bit_identical(self):
        def trajectory(seed):
            rng = np.random.default_rng(seed)
            instance = sample_instance(4, 3, 2.0, rng)
            episode = new_episode(instance)
            out = []
            while episode.alive and episode.t < episode.max_steps:
                action = int(rng.integers(4))
                reward, harmed, episode = step(episode, action, rng)
                out.append((action, reward, harmed))
            return instance, out

        first_instance, first = trajectory(123)
        second_instance, second = trajectory(123)
        assert first == second
        np.testing.assert_array_equal(first_instance.features, second_instance.features)

    def test_nonterminal_harm_keeps_stepping(self):
        instance = make_instance([[1, 1, 1]], [1, 1, 1], threshold=-10.0)
        episode = new_episode(instance)
        rng = np.random.default_rng(2)
        for _ in range(5):
            _, harmed, episode = step(episode, 0, rng, terminal_harm=False)
            assert harmed and episode.alive
        assert episode.t == 5

    def test_posterior_absorbs_each_observation(self):
        rng = np.random.default_rng(3)
        instance = sample_instance(2, 2, 2.0, rng)
        episode = new_episode(instance)
        _, _, episode = step(episode, 1, rng)
        assert episode.state.t == 1
        assert len(episode.history) == 1
        assert episode.history[0][0] == 1


class TestBanditInstance:
    def test_shape_validation(self):
        with pytest.raises(ValueError, match="shaped"):
            make_instance([[1, 1]], [1, 1, 1], threshold=0.0)

    def test_bit_validation(self):
        with pytest.raises(ValueError, match="bit-vectors"):
            make_instance([[1, 2]], [1, 1], threshold=0.0)

    def test_true_means_slice(self):
        instance = make_instance([[1, 1], [1, 0]], [1, 0], threshold=0.0)
        np.testing.assert_array_equal(instance.true_means, [1.0, 1.0])
        assert instance.v_star_index == 1

    def test_density_integrates_to_one(self):
        from scipy.integrate import quad

        instance = make_instance([[1, 1], [0, 1]], [1, 1], threshold=0.0)
        family = make_bandit_family(instance)
        for action in (0, 1):
            total, _ = quad(
                lambda r: math.exp(family.log_likelihood(2, [], (action, r))),
                -12,
                15,
            )
            assert abs(total - 1.0) < 1e-9
