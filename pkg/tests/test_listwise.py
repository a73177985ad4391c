import math

import numpy as np
import pytest

from rankdistill.distill import teacher_ranking
from rankdistill.errors import ArgumentError
from rankdistill.listwise import (
    LambdaWeighting,
    SamplingPlan,
    Sublist,
    gumbel_noise,
    lambda_loss,
    listmle_loss,
    listnet_loss,
    listwise_rank_loss,
    sample_sublist,
    stlistnet_loss,
)
from rankdistill.numerics import RngState, check_gradient, softmax


def make_sublist(ids):
    return Sublist(np.asarray(ids), np.arange(len(ids)))


class TestSampleSublist:
    def test_full_scheme_returns_whole_ranking(self, rng):
        ranking = teacher_ranking(rng.normal(size=12))
        sub = sample_sublist(ranking, SamplingPlan(scheme="full"), RngState(0, 0))
        assert np.array_equal(sub.answer_ids, ranking.permutation)
        assert np.array_equal(sub.source_ranks, np.arange(12))

    def test_hot_equals_n_matches_full(self, rng):
        ranking = teacher_ranking(rng.normal(size=9))
        plan = SamplingPlan(hot_size=9, cold_size=0, scheme="zipf")
        sub = sample_sublist(ranking, plan, RngState(0, 0))
        assert np.array_equal(sub.answer_ids, ranking.permutation)

    def test_structure_invariants(self, rng):
        ranking = teacher_ranking(rng.normal(size=30))
        plan = SamplingPlan(hot_size=6, cold_size=8, scheme="zipf", smoothing=1.2)
        state = RngState(11, 0)
        for _ in range(200):
            sub = sample_sublist(ranking, plan, state)
            assert len(sub) == 14
            assert len(set(sub.answer_ids.tolist())) == 14  # no duplicates
            assert np.all(np.diff(sub.source_ranks) > 0)  # rank-sorted
            assert np.all(sub.source_ranks[:6] == np.arange(6))  # hot segment
            assert np.all(sub.source_ranks[6:] >= 6)  # cold after hot

    def test_hot_list_is_top_of_ranking(self, rng):
        ranking = teacher_ranking(rng.normal(size=20))
        plan = SamplingPlan(hot_size=5, cold_size=3, scheme="exp")
        sub = sample_sublist(ranking, plan, RngState(3, 0))
        assert np.array_equal(sub.answer_ids[:5], ranking.permutation[:5])

    def test_infeasible_sizes_rejected(self, rng):
        ranking = teacher_ranking(rng.normal(size=5))
        with pytest.raises(ArgumentError):
            sample_sublist(ranking, SamplingPlan(hot_size=4, cold_size=3), RngState(0, 0))

    def test_determinism_given_state(self, rng):
        ranking = teacher_ranking(rng.normal(size=25))
        plan = SamplingPlan(hot_size=4, cold_size=6, scheme="zipf")
        a = sample_sublist(ranking, plan, RngState(5, 1))
        b = sample_sublist(ranking, plan, RngState(5, 1))
        assert np.array_equal(a.answer_ids, b.answer_ids)

    def test_zipf_single_draw_frequencies(self, rng):
        # remainder of 3 ranks at smoothing 1: probabilities 6/11, 3/11, 2/11
        ranking = teacher_ranking(np.array([3.0, 2.0, 1.0, 0.5]))
        plan = SamplingPlan(hot_size=1, cold_size=1, scheme="zipf", smoothing=1.0)
        state = RngState(123, 0)
        counts = np.zeros(3)
        trials = 20_000
        for _ in range(trials):
            sub = sample_sublist(ranking, plan, state)
            counts[sub.source_ranks[1] - 1] += 1
        freq = counts / trials
        np.testing.assert_allclose(freq, [6 / 11, 3 / 11, 2 / 11], atol=0.015)

    def test_exp_single_draw_frequencies(self, rng):
        # remainder of 3 ranks at smoothing ln 2: probabilities 4/7, 2/7, 1/7
        ranking = teacher_ranking(np.array([3.0, 2.0, 1.0, 0.5]))
        plan = SamplingPlan(hot_size=1, cold_size=1, scheme="exp", smoothing=math.log(2))
        state = RngState(321, 0)
        counts = np.zeros(3)
        trials = 20_000
        for _ in range(trials):
            sub = sample_sublist(ranking, plan, state)
            counts[sub.source_ranks[1] - 1] += 1
        freq = counts / trials
        np.testing.assert_allclose(freq, [4 / 7, 2 / 7, 1 / 7], atol=0.015)

    def test_tiny_smoothing_zipf_approaches_uniform(self):
        # closed-form sampling weights, not an empirical run: total-variation
        # distance to the uniform distribution stays below 1e-4
        from rankdistill.listwise import _rank_weights

        w = _rank_weights("zipf", 1e-6, 1000)
        p = w / w.sum()
        tv = 0.5 * np.abs(p - 1.0 / 1000).sum()
        assert tv <= 1e-4

    def test_with_replacement_collapses_duplicates(self, rng):
        ranking = teacher_ranking(rng.normal(size=10))
        plan = SamplingPlan(
            hot_size=2, cold_size=5, scheme="zipf", smoothing=3.0, with_replacement=True
        )
        state = RngState(9, 0)
        for _ in range(100):
            sub = sample_sublist(ranking, plan, state)
            ids = sub.answer_ids.tolist()
            assert len(ids) == len(set(ids))
            assert len(ids) <= 7


class TestListMle:
    def test_singleton_sublist_zero_loss(self):
        loss = listmle_loss(np.array([4.0, 1.0, -2.0]), make_sublist([1]))
        assert loss.value == 0.0

    def test_pair_equal_scores(self):
        loss = listmle_loss(np.zeros(2), make_sublist([0, 1]))
        assert abs(loss.value - math.log(2)) <= 1e-12

    def test_three_elements_hand_case(self):
        # target order scores (2, 1, 0): -ln(0.6652... * 0.7311...) ~= 0.7208
        scores = np.array([2.0, 1.0, 0.0])
        loss = listmle_loss(scores, make_sublist([0, 1, 2]))
        p1 = math.exp(2) / (math.exp(2) + math.exp(1) + math.exp(0))
        p2 = math.exp(1) / (math.exp(1) + math.exp(0))
        assert abs(loss.value - (-math.log(p1 * p2))) <= 1e-12
        assert abs(loss.value - 0.7208) <= 1e-4

    def test_matches_plackett_luce_oracle(self, rng):
        for _ in range(20):
            n = int(rng.integers(1, 8))
            scores = rng.normal(size=10) * 2
            ids = rng.choice(10, size=n, replace=False)
            sub = Sublist(np.sort(ids), np.sort(ids))
            expected = 0.0
            s = scores[sub.answer_ids]
            for i in range(n):
                expected += math.log(sum(math.exp(v) for v in s[i:])) - s[i]
            loss = listmle_loss(scores, sub)
            assert abs(loss.value - expected) <= 1e-10

    def test_monotone_decrease_toward_target_order(self):
        n = 5
        sub = make_sublist(list(range(n)))
        previous = math.inf
        for c in (0.5, 1.0, 2.0, 4.0, 8.0, 16.0):
            scores = c * np.arange(n, 0, -1, dtype=float)
            value = listmle_loss(scores, sub).value
            assert value < previous
            previous = value
        assert previous <= 1e-3

    def test_gradient_matches_finite_differences(self, rng):
        for _ in range(20):
            scores = rng.normal(size=8) * 2
            ids = np.sort(rng.choice(8, size=5, replace=False))
            sub = Sublist(ids, ids)
            err = check_gradient(
                lambda s: listmle_loss(s, sub).value,
                lambda s: listmle_loss(s, sub).gradient_wrt_scores,
                scores,
            )
            assert err <= 1e-5

    def test_empty_sublist_rejected(self):
        with pytest.raises(ArgumentError):
            listmle_loss(np.zeros(3), Sublist(np.array([], dtype=int), np.array([], dtype=int)))


class TestListNet:
    def test_student_equals_teacher_gives_entropy(self, rng):
        teacher = rng.normal(size=6)
        sub = make_sublist(range(6))
        loss = listnet_loss(teacher, teacher, sub)
        p = softmax(teacher)
        entropy = -float(p @ np.log(p))
        assert abs(loss.value - entropy) <= 1e-12

    def test_uniform_teacher_four_answers(self):
        sub = make_sublist(range(4))
        loss = listnet_loss(np.zeros(4), np.zeros(4), sub)
        assert abs(loss.value - math.log(4)) <= 1e-12

    def test_hand_case_two_answers(self):
        # teacher (1, 0), student (0, 1): ~= 1.0443
        sub = make_sublist([0, 1])
        loss = listnet_loss(np.array([0.0, 1.0]), np.array([1.0, 0.0]), sub)
        pt = softmax(np.array([1.0, 0.0]))
        ps = softmax(np.array([0.0, 1.0]))
        expected = -float(pt @ np.log(ps))
        assert abs(loss.value - expected) <= 1e-12
        assert abs(loss.value - 1.0443) <= 1e-4

    def test_gibbs_inequality(self, rng):
        for _ in range(1000):
            n = int(rng.integers(2, 9))
            teacher = rng.normal(size=n) * 3
            student = rng.normal(size=n) * 3
            sub = make_sublist(range(n))
            p = softmax(teacher)
            entropy = -float(p @ np.log(p))
            assert listnet_loss(student, teacher, sub).value >= entropy - 1e-12

    def test_gradient_is_probability_gap(self, rng):
        teacher = rng.normal(size=5)
        student = rng.normal(size=5)
        sub = make_sublist(range(5))
        loss = listnet_loss(student, teacher, sub)
        np.testing.assert_allclose(
            loss.gradient_wrt_scores, softmax(student) - softmax(teacher), atol=1e-12
        )

    def test_gradient_matches_finite_differences(self, rng):
        for _ in range(20):
            teacher = rng.normal(size=9) * 2
            student = rng.normal(size=9) * 2
            ids = np.sort(rng.choice(9, size=6, replace=False))
            sub = Sublist(ids, ids)
            err = check_gradient(
                lambda s: listnet_loss(s, teacher, sub).value,
                lambda s: listnet_loss(s, teacher, sub).gradient_wrt_scores,
                student,
            )
            assert err <= 1e-5


class TestStListNet:
    def test_beta_zero_identical_to_listnet(self, rng):
        teacher = rng.normal(size=6)
        student = rng.normal(size=6)
        sub = make_sublist(range(6))
        noisy = stlistnet_loss(student, teacher, sub, 0.0, RngState(4, 2))
        clean = listnet_loss(student, teacher, sub)
        assert noisy.value == clean.value
        np.testing.assert_array_equal(noisy.gradient_wrt_scores, clean.gradient_wrt_scores)

    def test_reproducible_given_state(self, rng):
        teacher = rng.normal(size=6)
        student = rng.normal(size=6)
        sub = make_sublist(range(6))
        a = stlistnet_loss(student, teacher, sub, 1.0, RngState(8, 3))
        b = stlistnet_loss(student, teacher, sub, 1.0, RngState(8, 3))
        assert a.value == b.value

    def test_gumbel_noise_mean_is_euler_mascheroni(self):
        draws = gumbel_noise(10_000, 1.0, RngState(77, 0))
        gamma = 0.5772156649015329
        se = draws.std(ddof=1) / math.sqrt(draws.size)
        assert abs(draws.mean() - gamma) <= 3 * se

    def test_negative_beta_rejected(self, rng):
        sub = make_sublist(range(3))
        with pytest.raises(ArgumentError):
            stlistnet_loss(np.zeros(3), np.zeros(3), sub, -0.5, RngState(0, 0))

    def test_gradient_matches_finite_differences(self, rng):
        for _ in range(10):
            teacher = rng.normal(size=7)
            student = rng.normal(size=7)
            sub = make_sublist(range(7))

            # identical noise on every evaluation: fresh state per call
            def value(s):
                return stlistnet_loss(s, teacher, sub, 0.7, RngState(55, 1)).value

            def grad(s):
                return stlistnet_loss(s, teacher, sub, 0.7, RngState(55, 1)).gradient_wrt_scores

            assert check_gradient(value, grad, student) <= 1e-5


class TestLambdaLoss:
    def test_ranknet_single_pair_equal_scores(self):
        sub = make_sublist([0, 1])
        weighting = LambdaWeighting(variant="ranknet", sigma=1.0)
        loss = lambda_loss(np.zeros(2), np.array([1.0, 0.0]), sub, weighting)
        assert abs(loss.value - 1.0) <= 1e-12  # -log2(1/2)

    def test_ranknet_saturated_pair(self):
        sub = make_sublist([0, 1])
        weighting = LambdaWeighting(variant="ranknet", sigma=1.0)
        loss = lambda_loss(np.array([40.0, -40.0]), np.array([1.0, 0.0]), sub, weighting)
        assert loss.value <= 1e-12

    def test_ranknet_quarter_sigmoid(self):
        # s_i - s_j = -ln 3 makes sigmoid = 1/4, so the loss is 2 bits
        sub = make_sublist([0, 1])
        weighting = LambdaWeighting(variant="ranknet", sigma=1.0)
        loss = lambda_loss(
            np.array([-math.log(3.0), 0.0]), np.array([1.0, 0.0]), sub, weighting
        )
        assert abs(loss.value - 2.0) <= 1e-12

    def test_matches_weight_oracle(self, rng):
        # independent recomputation of every variant's pair weights
        def oracle(student, teacher, variant, sigma, mu):
            n = len(student)
            pos = np.arange(1, n + 1, dtype=float)
            rel = n - pos
            gains = 2.0**rel - 1.0
            max_dcg = sum(g / math.log2(1 + p) for g, p in zip(gains, pos))
            G = gains / max_dcg
            total = 0.0
            for i in range(n):
                for j in range(n):
                    if teacher[i] <= teacher[j]:
                        continue
                    if variant == "ranknet":
                        w = 1.0
                    elif variant == "ndcg1":
                        w = G[i] / math.log2(1 + pos[i])
                    else:
                        d = abs(pos[i] - pos[j])
                        delta = abs(
                            1 / math.log2(1 + d) - 1 / math.log2(2 + d)
                        )
                        w = abs(G[i] - G[j]) * delta
                        if variant == "ndcg2pp":
                            rho = abs(1 / math.log2(1 + pos[i]) - 1 / math.log2(1 + pos[j]))
                            w = abs(G[i] - G[j]) * (delta + mu * rho)
                    total -= w * math.log2(
                        1.0 / (1.0 + math.exp(-sigma * (student[i] - student[j])))
                    )
            return total

        for variant in ("ranknet", "ndcg1", "ndcg2", "ndcg2pp"):
            for _ in range(5):
                n = int(rng.integers(2, 7))
                student = rng.normal(size=n)
                teacher = np.sort(rng.normal(size=n))[::-1].copy()
                sub = make_sublist(range(n))
                weighting = LambdaWeighting(variant=variant, sigma=1.4, mu=5.0)
                expected = oracle(student, teacher, variant, 1.4, 5.0)
                loss = lambda_loss(student, teacher, sub, weighting)
                assert abs(loss.value - expected) <= 1e-10

    def test_gradients_match_finite_differences_all_variants(self, rng):
        for variant in ("ranknet", "ndcg1", "ndcg2", "ndcg2pp"):
            for _ in range(20):
                n = int(rng.integers(2, 8))
                teacher = rng.normal(size=n)
                student = rng.normal(size=n)
                sub = make_sublist(range(n))
                weighting = LambdaWeighting(variant=variant, sigma=1.0)
                err = check_gradient(
                    lambda s: lambda_loss(s, teacher, sub, weighting).value,
                    lambda s: lambda_loss(s, teacher, sub, weighting).gradient_wrt_scores,
                    student,
                )
                assert err <= 1e-5

    def test_short_sublist_rejected(self):
        with pytest.raises(ArgumentError):
            lambda_loss(np.zeros(2), np.zeros(2), make_sublist([0]), LambdaWeighting())


class TestListwiseRankLoss:
    def test_full_plan_reproduces_plain_listnet(self, rng):
        teacher = rng.normal(size=8)
        student = rng.normal(size=8)
        ranking = teacher_ranking(teacher)
        plan = SamplingPlan(scheme="full")
        out = listwise_rank_loss(student, teacher, ranking, plan, "listnet", RngState(0, 0))
        full_sub = sample_sublist(ranking, plan, RngState(0, 0))
        expected = listnet_loss(student, teacher, full_sub)
        assert out.value == expected.value

    def test_hot_covering_everything_matches_full(self, rng):
        teacher = rng.normal(size=8)
        student = rng.normal(size=8)
        ranking = teacher_ranking(teacher)
        a = listwise_rank_loss(
            student, teacher, ranking,
            SamplingPlan(hot_size=8, cold_size=0), "listmle", RngState(0, 0),
        )
        b = listwise_rank_loss(
            student, teacher, ranking, SamplingPlan(scheme="full"), "listmle", RngState(0, 0)
        )
        assert a.value == b.value

    def test_fixed_state_reproducible(self, rng):
        teacher = rng.normal(size=20)
        student = rng.normal(size=20)
        ranking = teacher_ranking(teacher)
        plan = SamplingPlan(hot_size=4, cold_size=4, scheme="zipf")
        a = listwise_rank_loss(student, teacher, ranking, plan, "listnet", RngState(2, 0))
        b = listwise_rank_loss(student, teacher, ranking, plan, "listnet", RngState(2, 0))
        assert a.value == b.value

    def test_gradient_zero_outside_sublist(self, rng):
        teacher = rng.normal(size=20)
        student = rng.normal(size=20)
        ranking = teacher_ranking(teacher)
        plan = SamplingPlan(hot_size=3, cold_size=2, scheme="exp")
        state = RngState(6, 0)
        out = listwise_rank_loss(student, teacher, ranking, plan, "lambda:ndcg2", state)
        sub = sample_sublist(ranking, plan, RngState(6, 0))
        outside = np.setdiff1d(np.arange(20), sub.answer_ids)
        assert np.all(out.gradient_wrt_scores[outside] == 0.0)

    def test_unknown_tag_rejected(self, rng):
        ranking = teacher_ranking(rng.normal(size=4))
        with pytest.raises(ArgumentError):
            listwise_rank_loss(
                np.zeros(4), np.zeros(4), ranking, SamplingPlan(scheme="full"),
                "pointwise", RngState(0, 0),
            )
