"""Loop orchestration, metrics, curve math, and the simulated oracle."""

import numpy as np
import pytest

from labelloop.classifier import TrainParams, train_weighted
from labelloop.config import ConfigError, ExperimentConfig
from labelloop.data import Metric, generate_blobs
from labelloop.engine import (
    ActiveLearningLoop,
    CurvePoint,
    LearningCurve,
    OracleAbort,
    accuracy_score,
    aggregate_runs,
    auc,
    canonical_json,
    evaluate,
    macro_f1_score,
    run_active_learning,
    simulated_oracle,
)


def bench_dataset():
    return generate_blobs(4, 60, 8, 8.0, 1)


def fast_config(**overrides):
    base = dict(seed_size=12, num_queries=3, batch_size=4, epochs=120, num_runs=1, k=3)
    base.update(overrides)
    return ExperimentConfig(**base)


class TestMetrics:
    def test_perfect_predictions(self):
        y = np.array([0, 1, 2, 3])
        assert accuracy_score(y, y) == 1.0
        assert macro_f1_score(y, y, 4) == 1.0

    def test_constant_classifier_on_balanced_four_way(self):
        y_true = np.array([0, 1, 2, 3] * 25)
        y_pred = np.zeros(100, dtype=int)
        assert accuracy_score(y_true, y_pred) == pytest.approx(0.25)

    def test_macro_f1_hand_case(self):
        # predictions all class 0, truth {0, 1}: F1_0 = 2/3, F1_1 = 0 -> macro 1/3
        y_true = np.array([0, 1])
        y_pred = np.array([0, 0])
        assert macro_f1_score(y_true, y_pred, 2) == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_macro_f1_second_hand_case(self):
        # per-class confusion computed by hand:
        # class0: tp=1 fp=1 fn=1 -> p=r=0.5, f1=0.5
        # class1: tp=1 fp=2 fn=1 -> p=1/3, r=1/2, f1=0.4
        # class2: tp=0 fp=0 fn=1 -> 0
        y_true = np.array([0, 0, 1, 1, 2])
        y_pred = np.array([0, 1, 1, 0, 1])
        assert macro_f1_score(y_true, y_pred, 3) == pytest.approx(0.3, abs=1e-12)

    def test_evaluate_uses_dataset_metric(self):
        ds = generate_blobs(2, 30, 4, 10.0, 3)
        X = np.stack([inst.embedding for inst in ds.instances])
        y = np.array([inst.true_label for inst in ds.instances])
        model = train_weighted(X, y, np.full(len(y), 1 / len(y)), 2, TrainParams(epochs=120))
        acc = evaluate(model, ds.test_instances, Metric.ACCURACY)
        f1 = evaluate(model, ds.test_instances, Metric.MACRO_F1)
        assert acc > 0.95
        assert 0.0 <= f1 <= 1.0


class TestAuc:
    def curve(self, pairs):
        points = [CurvePoint(x, y, 0, []) for x, y in pairs]
        return LearningCurve(points, "accuracy", "fp", 0)

    def test_constant_curve(self):
        assert auc(self.curve([(30, 0.8), (40, 0.8), (130, 0.8)])) == pytest.approx(0.8, abs=1e-15)

    def test_linear_ramp(self):
        assert auc(self.curve([(30, 0.0), (130, 1.0)])) == pytest.approx(0.5, abs=1e-15)

    def test_hand_trapezoid(self):
        # areas 0.5 + 2.0 over range 3 -> 5/6
        assert auc(self.curve([(0, 0.0), (1, 1.0), (3, 1.0)])) == pytest.approx(5.0 / 6.0, abs=1e-15)

    def test_bounded_by_score_range(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = int(rng.integers(2, 12))
            xs = np.cumsum(rng.integers(1, 20, size=n))
            ys = rng.uniform(0, 1, size=n)
            value = auc(self.curve(list(zip(xs, ys))))
            assert ys.min() - 1e-12 <= value <= ys.max() + 1e-12

    def test_requires_two_points(self):
        with pytest.raises(ValueError):
            auc(self.curve([(30, 0.5)]))


class TestAggregate:
    def curve(self, final, seed=0, fingerprint="fp"):
        points = [CurvePoint(30, 0.5, 0, []), CurvePoint(40, final, 3, [])]
        return LearningCurve(points, "accuracy", fingerprint, seed)

    def test_identical_curves_have_zero_std(self):
        agg = aggregate_runs([self.curve(0.9, seed=i) for i in range(5)])
        assert agg.final_score_std == 0.0
        assert agg.auc_std == 0.0
        assert agg.final_score_mean == pytest.approx(0.9)

    def test_two_run_mean_and_std(self):
        # direct sample-std computation: sqrt(((0.05)^2 + (0.05)^2) / 1)
        agg = aggregate_runs([self.curve(0.8, seed=0), self.curve(0.9, seed=1)])
        assert agg.final_score_mean == pytest.approx(0.85, abs=1e-12)
        assert agg.final_score_std == pytest.approx(np.sqrt(0.005), abs=1e-12)

    def test_single_run_flagged(self):
        agg = aggregate_runs([self.curve(0.7)])
        assert agg.single_run is True
        assert agg.final_score_std == 0.0

    def test_mismatched_configs_rejected(self):
        with pytest.raises(ValueError, match="mismatched"):
            aggregate_runs([self.curve(0.8), self.curve(0.9, fingerprint="other")])

    def test_mean_pseudo_counts(self):
        agg = aggregate_runs([self.curve(0.8, seed=0), self.curve(0.9, seed=1)])
        assert agg.mean_pseudo_counts == [0.0, 3.0]


class TestSimulatedOracle:
    def test_noise_free_returns_truth(self):
        ds = generate_blobs(3, 20, 4, 6.0, 2)
        rng = np.random.default_rng(0)
        for inst in ds.instances[:30]:
            assert simulated_oracle(ds, inst.id, 0.0, rng) == inst.true_label

    def test_binary_noise_flips_to_the_other_class(self):
        ds = generate_blobs(2, 20, 4, 6.0, 2)
        rng = np.random.default_rng(1)
        inst = ds.instances[0]
        answers = {simulated_oracle(ds, inst.id, 0.5, rng) for _ in range(200)}
        assert answers == {0, 1}
        for _ in range(200):
            answer = simulated_oracle(ds, inst.id, 0.5, rng)
            if answer != inst.true_label:
                assert answer == 1 - inst.true_label

    def test_wrong_rate_and_uniformity(self):
        ds = generate_blobs(4, 20, 4, 6.0, 2)
        rng = np.random.default_rng(2)
        inst = ds.instances[0]
        draws = np.array([simulated_oracle(ds, inst.id, 0.2, rng) for _ in range(20000)])
        wrong = draws != inst.true_label
        assert abs(wrong.mean() - 0.2) < 0.01
        counts = np.bincount(draws[wrong], minlength=4)
        counts = np.delete(counts, inst.true_label)
        for c in counts:
            assert abs(c / len(draws) - 0.2 / 3) < 0.01

    def test_rejects_bad_noise_level(self):
        ds = generate_blobs(2, 10, 4, 6.0, 2)
        with pytest.raises(ValueError):
            simulated_oracle(ds, 0, 1.0, np.random.default_rng(0))


class TestLoop:
    def test_noise_free_labels_equal_ground_truth(self):
        ds = bench_dataset()
        config = fast_config(self_training="none")
        loop = ActiveLearningLoop(ds, config)
        pending = loop.begin()
        while not loop.done:
            loop.submit_labels({i: ds.true_label(i) for i in pending.ids})
            pending = loop.pending
        for rec in loop.pool.labeled:
            assert rec.label == ds.true_label(rec.instance_id)
        assert len(loop.pool.labeled) == config.seed_size + config.num_queries * config.batch_size

    def test_disabled_self_training_gives_zero_pseudo_counts(self):
        ds = bench_dataset()
        curve = run_active_learning(ds, fast_config(self_training="none"))
        assert [p.pseudo_count for p in curve.points] == [0, 0, 0, 0]

    def test_disabled_self_training_model_equals_human_retrain(self):
        ds = bench_dataset()
        config = fast_config(self_training="none")
        loop = ActiveLearningLoop(ds, config)
        pending = loop.begin()
        while not loop.done:
            loop.submit_labels({i: ds.true_label(i) for i in pending.ids})
            pending = loop.pending
        ids = [rec.instance_id for rec in loop.pool.labeled]
        X = ds.embeddings(ids)
        y = np.array([rec.label for rec in loop.pool.labeled])
        reference = train_weighted(
            X, y, np.full(len(y), 1 / len(y)), ds.num_classes,
            TrainParams(epochs=config.epochs, learning_rate=config.learning_rate),
            config.rng_seed,
        )
        assert loop.eval_model.weights.tobytes() == reference.weights.tobytes()
        assert loop.eval_model.bias.tobytes() == reference.bias.tobytes()

    def test_default_budget_reaches_130(self):
        ds = generate_blobs(4, 60, 8, 8.0, 1)  # 240 train instances
        config = ExperimentConfig(epochs=60)
        curve = run_active_learning(ds, config)
        assert curve.points[-1].labeled_count == 130
        assert [p.labeled_count for p in curve.points] == [30 + 10 * t for t in range(11)]
        assert len(curve.points) == 11

    def test_zero_queries_gives_single_point(self):
        ds = bench_dataset()
        curve = run_active_learning(ds, fast_config(num_queries=0))
        assert len(curve.points) == 1
        assert curve.points[0].labeled_count == 12

    def test_run_is_deterministic(self):
        ds = bench_dataset()
        a = run_active_learning(ds, fast_config(label_noise=0.1, rng_seed=5))
        b = run_active_learning(ds, fast_config(label_noise=0.1, rng_seed=5))
        assert canonical_json(a.to_json_dict()) == canonical_json(b.to_json_dict())

    def test_manual_truth_feed_equals_simulated_run(self):
        ds = bench_dataset()
        config = fast_config(query_strategy="breaking-ties")
        simulated = run_active_learning(ds, config)
        loop = ActiveLearningLoop(ds, config)
        pending = loop.begin()
        while not loop.done:
            loop.submit_labels({i: ds.true_label(i) for i in pending.ids})
            pending = loop.pending
        assert canonical_json(loop.curve().to_json_dict()) == canonical_json(simulated.to_json_dict())

    def test_random_strategy_run_is_deterministic_too(self):
        ds = bench_dataset()
        config = fast_config(query_strategy="random", rng_seed=9)
        a = run_active_learning(ds, config)
        b = run_active_learning(ds, config)
        assert canonical_json(a.to_json_dict()) == canonical_json(b.to_json_dict())

    def test_external_oracle_abort_truncates(self):
        ds = bench_dataset()
        calls = {"n": 0}

        def flaky(instance_id):
            calls["n"] += 1
            if calls["n"] > 14:
                raise OracleAbort("annotator left")
            return ds.true_label(instance_id)

        curve = run_active_learning(ds, fast_config(), oracle=flaky)
        assert curve.truncated is True
        assert len(curve.points) == 1  # seed round done, first query batch aborted

    def test_budget_exceeding_pool_rejected(self):
        ds = generate_blobs(2, 20, 4, 6.0, 0)
        with pytest.raises(ConfigError, match="exceeds"):
            run_active_learning(ds, fast_config(seed_size=30, num_queries=5, batch_size=10))

    def test_curve_json_round_trip(self):
        ds = bench_dataset()
        curve = run_active_learning(ds, fast_config())
        clone = LearningCurve.from_json_dict(curve.to_json_dict())
        assert canonical_json(clone.to_json_dict()) == canonical_json(curve.to_json_dict())

    def test_query_scoring_subsamples_large_pools(self, caplog):
        ds = bench_dataset()  # 228 unlabeled after the seed draw
        config = fast_config(subsample_size=50)
        with caplog.at_level("INFO", logger="labelloop.engine"):
            a = run_active_learning(ds, config)
            b = run_active_learning(ds, config)
        assert "query scoring subsampled to 50" in caplog.text
        assert canonical_json(a.to_json_dict()) == canonical_json(b.to_json_dict())
        assert len(a.points) == config.num_queries + 1


class TestNoiseApplication:
    def test_seed_labels_stay_clean_by_default(self):
        ds = bench_dataset()
        config = fast_config(label_noise=0.8, rng_seed=3, self_training="none")
        loop = ActiveLearningLoop(ds, config)
        pending = loop.begin()
        from labelloop.engine import simulated_oracle as oracle_fn

        # replicate the run's seed handling: truth for batch 0, noisy afterwards
        noisy_rng = loop.streams.oracle
        while not loop.done:
            if pending.batch_index == 0:
                labels = {i: ds.true_label(i) for i in pending.ids}
            else:
                labels = {i: oracle_fn(ds, i, config.label_noise, noisy_rng) for i in pending.ids}
            seed_batch = pending.batch_index == 0
            loop.submit_labels(labels)
            if seed_batch:
                for rec in loop.pool.labeled:
                    assert rec.label == ds.true_label(rec.instance_id)
            pending = loop.pending

    def test_high_noise_corrupts_query_labels(self):
        ds = bench_dataset()
        config = fast_config(label_noise=0.8, rng_seed=3, self_training="none")
        loop = ActiveLearningLoop(ds, config)
        curve = run_active_learning(ds, config)
        # cheap sanity: noisy run differs from the clean run
        clean = run_active_learning(ds, fast_config(label_noise=0.0, rng_seed=3, self_training="none"))
        assert canonical_json(curve.to_json_dict()) != canonical_json(clean.to_json_dict())
