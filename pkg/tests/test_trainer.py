import math

import numpy as np
import pytest

from setcoh.datagen import pools
from setcoh.model import ModelParams, build_vocabulary, serialize_set, energy
from setcoh.trainer import (
    CONTRAST_KINDS,
    CountsCache,
    EmptyValidationError,
    PoolExhaustedError,
    REGIMES,
    Threshold,
    TrainerConfig,
    TrainingDivergedError,
    _threshold_scan,
    build_contrast_batch,
    build_threshold_mixture,
    cross_entropy,
    fine_tune,
    hinge_loss,
    learn_threshold,
    train,
    train_binary,
)


class TestHinge:
    def test_margin_satisfied(self):
        assert hinge_loss(0.2, 0.5, 0.01) == 0.0

    def test_margin_violated(self):
        assert hinge_loss(0.5, 0.2, 0.01) == pytest.approx(0.31)

    def test_tie_pays_the_margin(self):
        for x in (-3.0, 0.0, 17.5):
            assert hinge_loss(x, x, 0.01) == pytest.approx(0.01)

    def test_rejects_nonpositive_margin(self):
        with pytest.raises(ValueError):
            hinge_loss(0.0, 0.0, 0.0)


class TestContrastKinds:
    def test_exactly_eight_ordered_kinds(self):
        assert CONTRAST_KINDS == (
            ("C", "I"), ("C", "CI"), ("C", "II"), ("CC", "I"),
            ("CC", "CI"), ("CC", "II"), ("CI", "I"), ("I", "II"),
        )

    def test_regime_subsets(self):
        assert REGIMES["basic"] == CONTRAST_KINDS[:1]
        assert REGIMES["six"] == CONTRAST_KINDS[:6]
        assert REGIMES["eight"] == CONTRAST_KINDS


class TestContrastBatch:
    def test_basic_regime_one_pair_one_instance(self, small_qa_corpus):
        pool_c, pool_i = pools(small_qa_corpus.train)
        batch = build_contrast_batch(pool_c, pool_i, "basic", rng_seed=0, pairs=1)
        assert len(batch) == 1
        assert batch[0].kind == ("C", "I")

    def test_eight_regime_covers_all_kinds(self, small_qa_corpus):
        pool_c, pool_i = pools(small_qa_corpus.train)
        batch = build_contrast_batch(pool_c, pool_i, "eight", rng_seed=0, pairs=1)
        assert [inst.kind for inst in batch] == list(CONTRAST_KINDS)

    def test_mixed_union_is_more_consistent_side(self, small_qa_corpus):
        pool_c, pool_i = pools(small_qa_corpus.train)
        batch = build_contrast_batch(pool_c, pool_i, "eight", rng_seed=1, pairs=2)
        for inst in batch:
            if inst.kind == ("CI", "I"):
                assert inst.more.provenance == "CI"
                assert inst.less.provenance == "I"

    def test_union_parts_have_disjoint_namespaces(self, small_qa_corpus):
        pool_c, pool_i = pools(small_qa_corpus.train)
        for inst in build_contrast_batch(pool_c, pool_i, "eight", rng_seed=2, pairs=3):
            for parts in (inst.more_parts, inst.less_parts):
                seen = set()
                for part in parts:
                    assert not (part.namespaces() & seen)
                    seen |= part.namespaces()

    def test_pool_exhausted(self, small_qa_corpus):
        pool_c, pool_i = pools(small_qa_corpus.train)
        with pytest.raises(PoolExhaustedError):
            build_contrast_batch(pool_c[:1], pool_i[:1], "eight", rng_seed=0, pairs=1)

    def test_base_pair_stream_identical_across_regimes(self, small_qa_corpus):
        pool_c, pool_i = pools(small_qa_corpus.train)
        streams = {}
        for regime in ("basic", "six", "eight"):
            batch = build_contrast_batch(pool_c, pool_i, regime, rng_seed=6, pairs=5)
            streams[regime] = [
                (inst.more.id, inst.less.id) for inst in batch if inst.kind == ("C", "I")
            ]
        assert streams["basic"] == streams["six"] == streams["eight"]

    def test_counts_cache_matches_serialization(self, small_qa_corpus):
        pool_c, pool_i = pools(small_qa_corpus.train)
        vocab = build_vocabulary(small_qa_corpus.train)
        cache = CountsCache(vocab)
        params = ModelParams.init(vocab, d=8, h=6, seed=0)
        batch = build_contrast_batch(pool_c, pool_i, "eight", rng_seed=3, pairs=2)
        from setcoh.model import energy_from_counts
        for inst in batch:
            via_cache = energy_from_counts(params, cache.counts(inst.more_parts))
            via_stream = energy(params, serialize_set(vocab, inst.more, 0))
            assert via_cache == via_stream


class TestThresholdScan:
    def test_separable_case_returns_midpoint(self):
        scores = [0.1, 0.2, 0.8, 0.9]
        labels = ["consistent", "consistent", "inconsistent", "inconsistent"]
        value, acc, degenerate = _threshold_scan(scores, labels)
        assert value == pytest.approx(0.5)
        assert acc == 1.0
        assert not degenerate

    def test_all_equal_scores_degenerate(self):
        value, acc, degenerate = _threshold_scan(
            [0.3, 0.3, 0.3, 0.3],
            ["consistent", "consistent", "inconsistent", "inconsistent"],
        )
        assert math.isinf(value) and value > 0
        assert acc == 0.5
        assert degenerate

    def test_matches_exhaustive_scan_on_random_configs(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            n = int(rng.integers(2, 30))
            scores = [float(x) for x in rng.normal(0, 1, n)]
            labels = ["consistent" if rng.random() < 0.5 else "inconsistent" for _ in range(n)]
            value, acc, _ = _threshold_scan(scores, labels)

            def macro(t):
                pred_c = [x < t for x in scores]
                cons = [label == "consistent" for label in labels]
                nc, ni = sum(cons), len(cons) - sum(cons)
                acc_c = sum(p and c for p, c in zip(pred_c, cons)) / nc if nc else 0.0
                acc_i = sum((not p) and (not c) for p, c in zip(pred_c, cons)) / ni if ni else 0.0
                return (acc_c + acc_i) / 2

            grid = [float("-inf"), float("inf")] + [x - 1e-9 for x in scores] + [x + 1e-9 for x in scores]
            assert acc == pytest.approx(max(macro(t) for t in grid))
            assert macro(value) == pytest.approx(acc)

    def test_empty_validation(self):
        with pytest.raises(EmptyValidationError):
            _threshold_scan([], [])

    def test_learn_threshold_over_model_energies(self, small_qa_corpus):
        vocab = build_vocabulary(small_qa_corpus.train)
        params = ModelParams.init(vocab, d=8, h=6, seed=1)
        mixture = build_threshold_mixture(small_qa_corpus.validation1, rng_seed=0, per_class=4)
        threshold = learn_threshold(params, mixture, epoch=3)
        assert isinstance(threshold, Threshold)
        assert threshold.learned_epoch == 3
        assert threshold.source == "energy"
        assert math.isfinite(threshold.value) or threshold.degenerate

    def test_threshold_mixture_has_expected_classes(self, small_qa_corpus):
        mixture = build_threshold_mixture(small_qa_corpus.validation1, rng_seed=0, per_class=3)
        tags = {s.provenance for s in mixture}
        assert tags == {"C", "CC", "I", "CI", "II"}


class TestTraining:
    def test_single_sgd_step_decreases_active_hinge(self, small_qa_corpus):
        pool_c, pool_i = pools(small_qa_corpus.train)
        vocab = build_vocabulary(small_qa_corpus.train)
        cache = CountsCache(vocab)
        from setcoh.model import energy_from_counts, zero_grads, accumulate_grad_energy

        params = ModelParams.init(vocab, d=8, h=6, seed=2)
        inst = build_contrast_batch(pool_c, pool_i, "basic", rng_seed=0, pairs=1)[0]
        tc_more, tc_less = cache.counts(inst.more_parts), cache.counts(inst.less_parts)
        alpha = 10.0  # force the hinge active
        before = hinge_loss(
            energy_from_counts(params, tc_more), energy_from_counts(params, tc_less), alpha
        )
        grads = zero_grads(params)
        accumulate_grad_energy(params, tc_more, grads, scale=1.0)
        accumulate_grad_energy(params, tc_less, grads, scale=-1.0)
        for name, arr in params.arrays().items():
            arr -= 1e-6 * grads[name]
        after = hinge_loss(
            energy_from_counts(params, tc_more), energy_from_counts(params, tc_less), alpha
        )
        assert after < before

    def test_training_is_deterministic(self, small_qa_corpus):
        vocab = build_vocabulary(small_qa_corpus.train)
        config = TrainerConfig(epochs=2, rng_seed=4, pairs_per_epoch=10, val_per_class=4)
        results = []
        for _ in range(2):
            params = ModelParams.init(vocab, d=8, h=6, seed=4)
            results.append(train(params, small_qa_corpus, config))
        a, b = results
        assert a.threshold == b.threshold
        for name, arr in a.params.arrays().items():
            assert np.array_equal(arr, b.params.arrays()[name])
        assert [s.mean_hinge_loss for s in a.log] == [s.mean_hinge_loss for s in b.log]

    def test_loss_decreases_on_small_corpus(self, small_qa_corpus):
        vocab = build_vocabulary(small_qa_corpus.train)
        params = ModelParams.init(vocab, d=16, h=12, seed=5)
        config = TrainerConfig(epochs=5, rng_seed=5, pairs_per_epoch=30, val_per_class=6)
        result = train(params, small_qa_corpus, config)
        assert result.log[0].mean_hinge_loss > 0.0
        assert result.log[-1].mean_hinge_loss < result.log[0].mean_hinge_loss
        assert result.threshold.learned_epoch == max(
            range(len(result.log)), key=lambda e: (result.log[e].val1_macro_acc, -e)
        )

    def test_divergence_aborts_with_epoch_report(self, small_qa_corpus):
        vocab = build_vocabulary(small_qa_corpus.train)
        params = ModelParams.init(vocab, d=8, h=6, seed=6)
        params.emb[2, 0] = float("nan")
        config = TrainerConfig(epochs=1, rng_seed=6, pairs_per_epoch=4, val_per_class=4)
        with pytest.raises(TrainingDivergedError, match="epoch 0"):
            train(params, small_qa_corpus, config)


class TestBinary:
    def test_cross_entropy_values(self):
        assert cross_entropy(np.array([0.0, 0.0]), 0) == pytest.approx(math.log(2))
        assert cross_entropy(np.array([10.0, -10.0]), 0) == pytest.approx(0.0, abs=1e-6)

    def test_train_binary_returns_softmax_threshold(self, small_qa_corpus):
        vocab = build_vocabulary(small_qa_corpus.train)
        params = ModelParams.init(vocab, d=8, h=6, seed=7)
        config = TrainerConfig(epochs=2, rng_seed=7, pairs_per_epoch=10, val_per_class=4)
        trained, threshold = train_binary(params, small_qa_corpus, config)
        assert threshold.source == "inconsistent-softmax"
        assert trained is not params


class TestFineTune:
    def test_two_n_pairs_per_epoch(self, small_qa_corpus, small_snli_corpus, monkeypatch):
        import setcoh.trainer as trainer_mod

        calls = []
        original = trainer_mod.build_contrast_batch

        def spy(pool_c, pool_i, regime, rng_seed, pairs=None, paired=True):
            calls.append(pairs)
            return original(pool_c, pool_i, regime, rng_seed, pairs, paired)

        monkeypatch.setattr(trainer_mod, "build_contrast_batch", spy)
        vocab = build_vocabulary(small_qa_corpus.train + small_snli_corpus.train)
        params = ModelParams.init(vocab, d=8, h=6, seed=8)
        config = TrainerConfig(epochs=2, rng_seed=8, regime="basic")
        fine_tune(params, small_qa_corpus.train, small_snli_corpus.train, n=5, config=config)
        assert calls == [5, 5, 5, 5]  # n source + n target, per epoch

    def test_zero_l2_same_pool_is_continued_training(self, small_qa_corpus):
        vocab = build_vocabulary(small_qa_corpus.train)
        params = ModelParams.init(vocab, d=8, h=6, seed=9)
        config = TrainerConfig(epochs=1, rng_seed=9, l2_weight=0.0, regime="basic")
        tuned = fine_tune(params, small_qa_corpus.train, small_qa_corpus.train, n=4, config=config)
        assert any(
            not np.array_equal(tuned.arrays()[name], params.arrays()[name])
            for name in params.arrays()
        )

    def test_anchor_modes_differ(self, small_qa_corpus):
        vocab = build_vocabulary(small_qa_corpus.train)
        outs = {}
        for anchor in ("zero", "start"):
            params = ModelParams.init(vocab, d=8, h=6, seed=10)
            config = TrainerConfig(epochs=2, rng_seed=10, l2_weight=0.5, l2_anchor=anchor, regime="basic")
            outs[anchor] = fine_tune(params, small_qa_corpus.train, small_qa_corpus.train, n=4, config=config)
        assert not np.array_equal(outs["zero"].emb, outs["start"].emb)

    def test_n_exceeding_pool_rejected(self, small_qa_corpus):
        vocab = build_vocabulary(small_qa_corpus.train)
        params = ModelParams.init(vocab, d=8, h=6, seed=11)
        with pytest.raises(ValueError):
            fine_tune(params, small_qa_corpus.train, small_qa_corpus.train, n=10_000,
                      config=TrainerConfig(epochs=1))


def test_trainer_config_validation():
    with pytest.raises(ValueError):
        TrainerConfig(alpha=0.0)
    with pytest.raises(ValueError):
        TrainerConfig(learning_rate=0.0)
    with pytest.raises(ValueError):
        TrainerConfig(regime="nine")
    with pytest.raises(ValueError):
        TrainerConfig(optimizer="rmsprop")
