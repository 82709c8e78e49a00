"""Metrics, fold construction, cross-validation, and the grid search."""

import math

import numpy as np
import pytest

from voxtrait.erf.validate import (
    ANCHOR_HP,
    DEFAULT_GRID,
    CvMetrics,
    cross_validate,
    grid_search,
    make_folds,
    regression_metrics,
)

SMALL_TREES = 30


class TestRegressionMetrics:
    def test_hand_oracle(self):
        # y = (0,1,2,3), pred = (.5,.5,2.5,2.5):
        # mse = (0.25*4)/4 = 0.25; SStot = 5; r2 = 1 - 1/5 = 0.8;
        # r = cov/(sd_t*sd_p) = 2/sqrt(5)
        y = np.array([0.0, 1.0, 2.0, 3.0])
        pred = np.array([0.5, 0.5, 2.5, 2.5])
        r2, mse, r = regression_metrics(y, pred)
        assert mse == pytest.approx(0.25, abs=1e-15)
        assert r2 == pytest.approx(0.8, abs=1e-12)
        assert r == pytest.approx(2.0 / math.sqrt(5.0), abs=1e-12)
        assert r == pytest.approx(0.8944271909999159, abs=1e-12)

    def test_perfect_prediction(self):
        y = np.array([1.0, 2.0, 5.0, -1.0])
        r2, mse, r = regression_metrics(y, y.copy())
        assert r2 == pytest.approx(1.0)
        assert mse == 0.0
        assert r == pytest.approx(1.0)

    def test_constant_truth_warns(self):
        # a constant truth also makes the correlation degenerate, so both
        # warnings fire
        with pytest.warns(UserWarning) as record:
            r2, mse, r = regression_metrics(np.ones(5), np.arange(5.0))
        messages = sorted(str(w.message) for w in record)
        assert any("constant y_true" in m for m in messages)
        assert any("constant vector in correlation" in m for m in messages)
        assert r2 == 0.0
        assert r == 0.0
        assert mse == pytest.approx(np.mean((1.0 - np.arange(5.0)) ** 2))

    def test_constant_prediction_warns(self):
        with pytest.warns(UserWarning, match="constant vector in correlation"):
            r2, mse, r = regression_metrics(np.arange(5.0), np.full(5, 2.0))
        assert r == 0.0
        assert r2 == pytest.approx(1.0 - np.sum((np.arange(5.0) - 2) ** 2) / 10.0)

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            regression_metrics(np.ones(3), np.ones(4))
        with pytest.raises(ValueError):
            regression_metrics(np.ones((2, 2)), np.ones((2, 2)))
        with pytest.raises(ValueError):
            regression_metrics(np.ones(0), np.ones(0))


class TestMakeFolds:
    def test_per_speaker_spreads_each_speaker(self):
        ids = [f"spk{i}" for i in range(6) for _ in range(8)]
        folds = make_folds(len(ids), ids, 4, "per_speaker", seed=1)
        assert sorted(np.concatenate(folds).tolist()) == list(range(48))
        for fold in folds:
            speakers = {ids[i] for i in fold}
            assert speakers == {f"spk{i}" for i in range(6)}
            assert fold.size == 12

    def test_per_speaker_short_speaker_warns_and_round_robins(self):
        ids = [f"s{i:02d}" for i in range(40)]  # one sample each
        with pytest.warns(UserWarning, match="fewer than 4 samples"):
            folds = make_folds(40, ids, 4, "per_speaker", seed=2)
        sizes = sorted(f.size for f in folds)
        assert sizes == [10, 10, 10, 10]

    def test_per_speaker_deterministic(self):
        ids = [f"spk{i}" for i in range(5) for _ in range(6)]
        a = make_folds(30, ids, 3, "per_speaker", seed=3)
        b = make_folds(30, ids, 3, "per_speaker", seed=3)
        for fa, fb in zip(a, b):
            assert np.array_equal(fa, fb)
        c = make_folds(30, ids, 3, "per_speaker", seed=4)
        assert any(not np.array_equal(fa, fc) for fa, fc in zip(a, c))

    def test_grouped_keeps_speakers_whole(self):
        ids = [f"spk{i}" for i in range(8) for _ in range(5)]
        folds = make_folds(40, ids, 4, "grouped", seed=5)
        assert sorted(np.concatenate(folds).tolist()) == list(range(40))
        seen: dict[str, int] = {}
        for f, fold in enumerate(folds):
            for i in fold:
                assert seen.setdefault(ids[i], f) == f

    def test_grouped_four_speakers_four_folds(self):
        ids = [f"spk{i}" for i in range(4) for _ in range(3)]
        folds = make_folds(12, ids, 4, "grouped", seed=6)
        for fold in folds:
            assert fold.size == 3
            assert len({ids[i] for i in fold}) == 1

    def test_grouped_too_few_speakers_falls_back(self):
        ids = ["a"] * 6 + ["b"] * 6
        with pytest.warns(UserWarning, match="only 2 speakers for 3 folds"):
            folds = make_folds(12, ids, 3, "grouped", seed=7)
        assert sorted(np.concatenate(folds).tolist()) == list(range(12))

    def test_plain_partition(self):
        folds = make_folds(23, None, 4, "plain", seed=8)
        assert sorted(np.concatenate(folds).tolist()) == list(range(23))
        sizes = sorted(f.size for f in folds)
        assert sizes == [5, 6, 6, 6]

    def test_bad_mode(self):
        with pytest.raises(ValueError, match="split_mode must be one of"):
            make_folds(10, None, 2, "stratified", seed=0)

    def test_too_few_folds(self):
        with pytest.raises(ValueError, match="at least 2 folds"):
            make_folds(10, None, 1, "plain", seed=0)

    def test_more_folds_than_samples(self):
        with pytest.raises(ValueError, match="cannot make 5 folds from 3 samples"):
            make_folds(3, None, 5, "plain", seed=0)

    def test_speaker_modes_need_ids(self):
        with pytest.raises(ValueError, match="one speaker id per sample"):
            make_folds(10, None, 2, "per_speaker", seed=0)
        with pytest.raises(ValueError, match="one speaker id per sample"):
            make_folds(10, ["a"] * 9, 2, "grouped", seed=0)


class TestCrossValidate:
    def test_learnable_signal_scores_high(self):
        rng = np.random.default_rng(140)
        X = rng.standard_normal((80, 4))
        y = 2.0 * X[:, 0] - X[:, 1] + 0.05 * rng.standard_normal(80)
        ids = [f"s{i % 20}" for i in range(80)]
        metrics = cross_validate(
            X, y, speaker_ids=ids, k=4, seed=9, n_estimators=SMALL_TREES
        )
        assert metrics.r_test > 0.9
        assert metrics.r2_train > metrics.r2_test
        assert metrics.n_folds == 4

    def test_pure_noise_scores_low(self):
        rng = np.random.default_rng(141)
        X = rng.standard_normal((60, 4))
        y = rng.standard_normal(60)
        metrics = cross_validate(
            X, y, k=4, split_mode="plain", seed=10, n_estimators=SMALL_TREES
        )
        assert abs(metrics.r_test) < 0.35
        assert metrics.r2_test < 0.2

    def test_deterministic(self):
        rng = np.random.default_rng(142)
        X = rng.standard_normal((40, 3))
        y = X[:, 0] + 0.1 * rng.standard_normal(40)
        a = cross_validate(X, y, k=4, split_mode="plain", seed=11, n_estimators=10)
        b = cross_validate(X, y, k=4, split_mode="plain", seed=11, n_estimators=10)
        assert a == b

    def test_as_dict_round_trip(self):
        m = CvMetrics(0.9, 0.8, 0.1, 0.2, 0.95, 0.9, 4)
        d = m.as_dict()
        assert d["r2_train"] == 0.9
        assert d["r_test"] == 0.9
        assert d["n_folds"] == 4
        assert set(d) == {
            "r2_train", "r2_test", "mse_train", "mse_test",
            "r_train", "r_test", "n_folds",
        }


class TestGridSearch:
    def test_singleton_grid_short_circuits(self):
        X = np.zeros((4, 2))
        y = np.zeros(4)
        best, trials = grid_search(X, y, grid={"max_depth": [7]}, cv_folds=10)
        assert best == {"max_depth": 7}
        assert trials == [{"hp": {"max_depth": 7}, "mse_train": None, "mse_test": None}]

    def test_unknown_keys_rejected(self):
        with pytest.raises(ValueError, match="unknown grid keys: \\['trees'\\]"):
            grid_search(np.zeros((10, 2)), np.zeros(10), grid={"trees": [1, 2]})

    def test_empty_axis_rejected(self):
        with pytest.raises(ValueError, match="non-empty"):
            grid_search(np.zeros((10, 2)), np.zeros(10), grid={"max_depth": []})

    def test_too_few_samples(self):
        with pytest.raises(ValueError, match="cannot run 10-fold search on 5 samples"):
            grid_search(
                np.zeros((5, 2)), np.zeros(5), grid={"max_depth": [1, 2]}, cv_folds=10
            )

    def test_picks_capacity_that_fits_signal(self):
        # Strong smooth signal: a depth-1 stump must lose to deeper trees.
        rng = np.random.default_rng(143)
        X = rng.standard_normal((60, 3))
        y = 2.0 * X[:, 0] + X[:, 1]
        best, trials = grid_search(
            X,
            y,
            grid={"max_depth": [1, 12]},
            cv_folds=5,
            seed=12,
            n_estimators=SMALL_TREES,
        )
        assert best == {"max_depth": 12}
        assert len(trials) == 2
        by_depth = {t["hp"]["max_depth"]: t for t in trials}
        assert by_depth[12]["mse_test"] < by_depth[1]["mse_test"]

    def test_best_is_minimum_of_trials(self):
        rng = np.random.default_rng(144)
        X = rng.standard_normal((50, 3))
        y = X[:, 0] + 0.3 * rng.standard_normal(50)
        best, trials = grid_search(
            X,
            y,
            grid={"max_depth": [2, 6], "min_samples_leaf": [1, 4]},
            cv_folds=5,
            seed=13,
            n_estimators=10,
        )
        assert len(trials) == 4
        best_trial = min(trials, key=lambda t: t["mse_test"])
        assert best == best_trial["hp"]

    def test_candidate_order_is_canonical(self):
        rng = np.random.default_rng(145)
        X = rng.standard_normal((30, 2))
        y = X[:, 0]
        # same grid, different dict insertion order -> same trials order
        g1 = {"min_samples_leaf": [1, 2], "max_depth": [3, 4]}
        g2 = {"max_depth": [3, 4], "min_samples_leaf": [1, 2]}
        _, t1 = grid_search(X, y, grid=g1, cv_folds=3, seed=14, n_estimators=5)
        _, t2 = grid_search(X, y, grid=g2, cv_folds=3, seed=14, n_estimators=5)
        assert [t["hp"] for t in t1] == [t["hp"] for t in t2]
        assert t1 == t2

    def test_default_constants_shape(self):
        assert set(DEFAULT_GRID) <= {
            "max_depth", "min_samples_leaf", "min_samples_split", "max_leaf_nodes"
        }
        assert set(ANCHOR_HP) == {
            "max_depth", "min_samples_leaf", "min_samples_split", "max_leaf_nodes"
        }
