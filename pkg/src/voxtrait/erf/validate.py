"""Cross-validation and hyperparameter search for the forest."""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from . import forest as _forest
from ._splitmix import stream_element

#: Hyperparameter axes explored when no explicit grid is given.
DEFAULT_GRID = {
    "max_depth": [5, 10, 20],
    "min_samples_leaf": [1, 2, 5],
    "min_samples_split": [2, 5, 10],
    "max_leaf_nodes": [100, 300, None],
}

#: Fixed configuration used when a search is too expensive to justify.
ANCHOR_HP = {
    "max_depth": 10,
    "min_samples_leaf": 2,
    "min_samples_split": 2,
    "max_leaf_nodes": 300,
}

#: Canonical iteration order for grid axes, independent of dict order.
GRID_KEY_ORDER = ("max_depth", "min_samples_leaf", "min_samples_split", "max_leaf_nodes")

SPLIT_MODES = ("per_speaker", "grouped", "plain")


@dataclass
class CvMetrics:
    """Fold-mean metrics from one cross-validation run."""

    r2_train: float
    r2_test: float
    mse_train: float
    mse_test: float
    r_train: float
    r_test: float
    n_folds: int

    def as_dict(self) -> dict:
        return {
            "r2_train": self.r2_train,
            "r2_test": self.r2_test,
            "mse_train": self.mse_train,
            "mse_test": self.mse_test,
            "r_train": self.r_train,
            "r_test": self.r_test,
            "n_folds": self.n_folds,
        }


def regression_metrics(y_true: np.ndarray, y_pred: np.ndarray) -> tuple[float, float, float]:
    """Return (r2, mse, pearson r).

    R^2 is 1 - SSres/SStot about the mean of ``y_true``. When either
    vector is constant the correlation is undefined; it is reported as
    0.0 with a warning so downstream averaging stays finite.
    """
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    if y_true.shape != y_pred.shape or y_true.ndim != 1 or y_true.size == 0:
        raise ValueError("y_true and y_pred must be equal-length 1-D arrays")
    mse = float(np.mean((y_true - y_pred) ** 2))
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if ss_tot == 0.0:
        warnings.warn("constant y_true: R^2 reported as 0.0", stacklevel=2)
        r2 = 0.0
    else:
        r2 = 1.0 - float(np.sum((y_true - y_pred) ** 2)) / ss_tot
    sd_t = float(y_true.std())
    sd_p = float(y_pred.std())
    if sd_t == 0.0 or sd_p == 0.0:
        warnings.warn("constant vector in correlation: r reported as 0.0",
                      stacklevel=2)
        r = 0.0
    else:
        r = float(np.mean((y_true - y_true.mean()) * (y_pred - y_pred.mean())) / (sd_t * sd_p))
    return r2, mse, r


def _per_speaker_folds(speaker_ids: list[str], k: int, seed: int) -> list[np.ndarray]:
    """Shuffle and deal each speaker's samples across the k folds.

    Every speaker with at least k samples contributes to every fold. The
    deal position carries over between speakers, so speakers with fewer
    samples than folds still spread round-robin instead of piling into
    fold 0; such speakers are reported once.
    """
    by_speaker: dict[str, list[int]] = {}
    for i, spk in enumerate(speaker_ids):
        by_speaker.setdefault(spk, []).append(i)
    rng = np.random.Generator(np.random.PCG64(seed))
    assignment = np.empty(len(speaker_ids), dtype=np.int64)
    short = []
    pos = 0
    for spk in sorted(by_speaker):
        idx = by_speaker[spk]
        if len(idx) < k:
            short.append(spk)
        for j in rng.permutation(len(idx)):
            assignment[idx[j]] = pos % k
            pos += 1
    if short:
        warnings.warn(
            f"{len(short)} speaker(s) have fewer than {k} samples and were "
            f"dealt round-robin across folds: {short[:5]}",
            stacklevel=3,
        )
    return [np.nonzero(assignment == f)[0] for f in range(k)]


def _grouped_folds(speaker_ids: list[str], k: int, seed: int) -> list[np.ndarray]:
    """Contiguous blocks of shuffled speakers (unequal but grouped)."""
    speakers = sorted(set(speaker_ids))
    if len(speakers) < k:
        warnings.warn(
            f"only {len(speakers)} speakers for {k} folds; "
            "falling back to round-robin over samples",
            stacklevel=3,
        )
        idx = np.arange(len(speaker_ids))
        return [idx[idx % k == f] for f in range(k)]
    rng = np.random.Generator(np.random.PCG64(seed))
    order = rng.permutation(len(speakers))
    blocks = np.array_split(order, k)
    fold_of_speaker = {}
    for f, block in enumerate(blocks):
        for j in block:
            fold_of_speaker[speakers[j]] = f
    assignment = np.asarray([fold_of_speaker[s] for s in speaker_ids])
    return [np.nonzero(assignment == f)[0] for f in range(k)]


def _plain_folds(n: int, k: int, seed: int) -> list[np.ndarray]:
    rng = np.random.Generator(np.random.PCG64(seed))
    order = rng.permutation(n)
    return [np.sort(block) for block in np.array_split(order, k)]


def make_folds(
    n: int,
    speaker_ids: list[str] | None,
    k: int,
    split_mode: str,
    seed: int,
) -> list[np.ndarray]:
    """Test-index arrays for each fold."""
    if split_mode not in SPLIT_MODES:
        raise ValueError(f"split_mode must be one of {SPLIT_MODES}, got {split_mode!r}")
    if k < 2:
        raise ValueError("need at least 2 folds")
    if n < k:
        raise ValueError(f"cannot make {k} folds from {n} samples")
    if split_mode == "plain":
        return _plain_folds(n, k, seed)
    if speaker_ids is None or len(speaker_ids) != n:
        raise ValueError("speaker-aware split modes need one speaker id per sample")
    if split_mode == "per_speaker":
        return _per_speaker_folds(list(speaker_ids), k, seed)
    return _grouped_folds(list(speaker_ids), k, seed)


def cross_validate(
    X: np.ndarray,
    y: np.ndarray,
    speaker_ids: list[str] | None = None,
    k: int = 4,
    split_mode: str = "per_speaker",
    seed: int = 0,
    hp: dict | None = None,
    n_estimators: int = _forest.DEFAULT_N_ESTIMATORS,
) -> CvMetrics:
    """K-fold cross-validation; fold forests get decorrelated seeds."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    folds = make_folds(X.shape[0], speaker_ids, k, split_mode, seed)
    all_idx = np.arange(X.shape[0])
    rows = []
    for f, test_idx in enumerate(folds):
        if test_idx.size == 0 or test_idx.size == X.shape[0]:
            raise ValueError(f"fold {f} is degenerate (test size {test_idx.size})")
        train_mask = np.ones(X.shape[0], dtype=bool)
        train_mask[test_idx] = False
        train_idx = all_idx[train_mask]
        fold_seed = stream_element(seed, f)
        model = _forest.fit(
            X[train_idx], y[train_idx], hp=hp, seed=fold_seed,
            n_estimators=n_estimators,
        )
        r2_tr, mse_tr, r_tr = regression_metrics(
            y[train_idx], _forest.predict(model, X[train_idx]))
        r2_te, mse_te, r_te = regression_metrics(
            y[test_idx], _forest.predict(model, X[test_idx]))
        rows.append((r2_tr, r2_te, mse_tr, mse_te, r_tr, r_te))
    means = np.mean(np.asarray(rows), axis=0)
    return CvMetrics(
        r2_train=float(means[0]),
        r2_test=float(means[1]),
        mse_train=float(means[2]),
        mse_test=float(means[3]),
        r_train=float(means[4]),
        r_test=float(means[5]),
        n_folds=k,
    )


def grid_search(
    X: np.ndarray,
    y: np.ndarray,
    grid: dict | None = None,
    cv_folds: int = 10,
    seed: int = 0,
    n_estimators: int = _forest.DEFAULT_N_ESTIMATORS,
) -> tuple[dict, list[dict]]:
    """Exhaustive search minimizing mean test MSE over unshuffled folds.

    Returns (best_hp, trials) where each trial records the candidate and
    its mean train/test MSE. Candidates are enumerated in the canonical
    key order so results do not depend on dict insertion order. Ties are
    broken toward the earliest candidate (strict < comparison). A grid
    with exactly one cell short-circuits without fitting anything.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if grid is None:
        grid = DEFAULT_GRID
    unknown = set(grid) - set(GRID_KEY_ORDER)
    if unknown:
        raise ValueError(f"unknown grid keys: {sorted(unknown)}")
    axes = [(key, list(grid[key])) for key in GRID_KEY_ORDER if key in grid]
    if any(len(values) == 0 for _, values in axes):
        raise ValueError("grid axes must be non-empty")
    candidates = [
        dict(zip([key for key, _ in axes], combo))
        for combo in itertools.product(*[values for _, values in axes])
    ]
    if len(candidates) == 1:
        return candidates[0], [
            {"hp": candidates[0], "mse_train": None, "mse_test": None}
        ]
    if X.shape[0] < cv_folds:
        raise ValueError(f"cannot run {cv_folds}-fold search on {X.shape[0]} samples")
    # Deterministic contiguous folds: the candidate comparison only needs
    # a fixed partition, not a randomized one.
    fold_edges = np.array_split(np.arange(X.shape[0]), cv_folds)
    all_idx = np.arange(X.shape[0])
    trials = []
    best_hp = None
    best_mse = np.inf
    for c, hp in enumerate(candidates):
        mse_trs, mse_tes = [], []
        for f, test_idx in enumerate(fold_edges):
            train_mask = np.ones(X.shape[0], dtype=bool)
            train_mask[test_idx] = False
            train_idx = all_idx[train_mask]
            fold_seed = stream_element(seed, c * cv_folds + f)
            model = _forest.fit(
                X[train_idx], y[train_idx], hp=hp, seed=fold_seed,
                n_estimators=n_estimators,
            )
            _, mse_tr, _ = regression_metrics(
                y[train_idx], _forest.predict(model, X[train_idx]))
            _, mse_te, _ = regression_metrics(
                y[test_idx], _forest.predict(model, X[test_idx]))
            mse_trs.append(mse_tr)
            mse_tes.append(mse_te)
        mean_te = float(np.mean(mse_tes))
        trials.append({
            "hp": hp,
            "mse_train": float(np.mean(mse_trs)),
            "mse_test": mean_te,
        })
        if mean_te < best_mse:
            best_mse = mean_te
            best_hp = hp
    return best_hp, trials
