"""End-to-end studies: extraction, rating model, sweeps, characterization.

The three studies are:

1. Duration sweep — segment recordings at several lengths, extract
   features, and cross-validate a rating model per length to find the
   optimal duration.
2. Cluster sweep — build one dendrogram from the feature correlation
   matrix, then cut it at every k from 23 down to 1, replacing each
   cluster by its leading principal component, recomputing VIFs on the
   reduced matrix and cross-validating a model per k. The optimal k is
   the smallest one with no severe multicollinearity (max VIF below the
   threshold) whose test correlation stays within tolerance of the
   unclustered baseline.
3. Characterization — at the chosen k, fit the final model on cluster
   representatives and report each cluster's normalized importance.

Sweep cells (durations, cluster counts) are independent jobs executed
through a small map helper that can fan out over a thread pool; every
cell derives its randomness from the master seed, so the results do not
depend on scheduling, and reports are assembled only after all cells
finish. All reports are plain dicts serialized as canonical JSON
(sorted keys, two-space indent, trailing newline, no timestamps) so a
fixed (input, config, seed) triple reproduces reports byte for byte.
"""

from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import audio_io, stats
from . import cluster as cluster_mod
from .erf import forest as forest_mod
from .erf import validate as validate_mod
from .features import (
    AnalysisParams,
    FeatureMatrix,
    FeatureRow,
    analyze_segment,
    assemble_vector,
    build_matrix,
)
from .formants import compute_pool_stats

SCHEMA_VERSION = 1

#: "No severe multicollinearity" cutoff for the variance inflation factor.
VIF_THRESHOLD = 5.0

#: How far below the unclustered test correlation a clustered model may
#: fall while still counting as "no worse".
R_TEST_TOLERANCE = 0.05

#: Segment lengths (seconds) tried by the duration sweep; "sentence"
#: means each recording is taken whole as a single segment.
DEFAULT_DURATIONS = (1.0, 2.0, 5.0, 7.0, 10.0, "sentence")


@dataclass
class PipelineConfig:
    """Settings shared by the studies; defaults mirror the CLI defaults."""

    folds: int = 4
    split_mode: str = "per_speaker"
    seed: int = 42
    n_estimators: int = 1000
    grid: dict | None = None
    grid_search: bool = True
    hp: dict | None = None
    grid_cv_folds: int = 10
    vif_threshold: float = VIF_THRESHOLD
    r_test_tolerance: float = R_TEST_TOLERANCE
    workers: int = 1
    analysis: AnalysisParams = field(default_factory=AnalysisParams)

    def resolve_hp(self, X: np.ndarray, y: np.ndarray) -> tuple[dict, str]:
        """Hyperparameters and their provenance for one model fit.

        Explicit settings win; otherwise a grid search runs when
        enabled, else the fixed anchor configuration is used.
        """
        if self.hp is not None:
            return dict(self.hp), "fixed"
        if not self.grid_search:
            return dict(validate_mod.ANCHOR_HP), "anchor"
        best, _ = validate_mod.grid_search(
            X, y, grid=self.grid, cv_folds=self.grid_cv_folds,
            seed=self.seed, n_estimators=self.n_estimators,
        )
        return best, "grid"


def _map_cells(fn, items, workers: int):
    """Run independent sweep cells, optionally over a thread pool.

    Results come back in submission order either way, and each cell's
    seed is fixed up front, so scheduling cannot change any output.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# Feature extraction


def load_recordings(entries: list[audio_io.ManifestEntry]) -> list[audio_io.Recording]:
    """Load every manifest entry, attaching speaker identity and sex."""
    return [
        audio_io.load_wav(e.wav_path, speaker_id=e.speaker_id, sex_class=e.sex_class)
        for e in entries
    ]


def _segment_recordings(
    recs: list[audio_io.Recording],
    duration_s,
    min_tail_s: float,
) -> list[audio_io.AudioSegment]:
    """Segment all recordings; "sentence" keeps each recording whole."""
    next_index: dict[str, int] = {}
    segments = []
    for rec in recs:
        length = rec.duration_s if duration_s == "sentence" else float(duration_s)
        segs = audio_io.segment(
            rec, length, min_tail_s=min_tail_s,
            start_index=next_index.get(rec.speaker_id, 0),
        )
        if segs:
            next_index[rec.speaker_id] = segs[-1].segment_index + 1
        segments.extend(segs)
    return segments


def extract_features(
    recs: list[audio_io.Recording],
    labels: dict[str, float],
    duration_s,
    params: AnalysisParams | None = None,
) -> tuple[list[FeatureRow], FeatureMatrix]:
    """Segment, analyze, pool, and assemble one sex class's features.

    All recordings must belong to a single sex class because formant
    analysis settings and the normalization pool are sex-specific.
    Formant pool statistics are computed over every analyzable segment
    in this dataset (first pass) before vocal-tract estimators are
    assembled (second pass). Segments with no usable measures at all
    are dropped with a warning.
    """
    params = params or AnalysisParams()
    sexes = sorted({rec.sex_class for rec in recs})
    if len(sexes) != 1 or sexes[0] not in audio_io.SEX_CLASSES:
        raise ValueError(
            f"recordings must share one sex class, got {sexes}; "
            "run extraction separately per sex"
        )
    sex = sexes[0]
    segments = _segment_recordings(recs, duration_s, params.min_tail_s)
    if not segments:
        raise ValueError("no segments produced; recordings too short for this duration")
    analyses = [(seg, analyze_segment(seg, sex, params)) for seg in segments]
    formant_rows = [a.formant_means for _, a in analyses if a.formant_means is not None]
    pool = compute_pool_stats(formant_rows) if formant_rows else None
    if pool is None:
        warnings.warn("no segment yielded formants; vocal-tract measures all missing",
                      stacklevel=2)
    rows = []
    for seg, analysis in analyses:
        vector = assemble_vector(analysis, pool, params.speed_of_sound)
        if vector.missing_mask.all():
            warnings.warn(
                f"segment {seg.speaker_id}#{seg.segment_index} has no usable "
                "measures and was dropped",
                stacklevel=2,
            )
            continue
        rows.append(FeatureRow(seg.speaker_id, seg.segment_index, vector))
    matrix = build_matrix(rows, labels)
    return rows, matrix


# ---------------------------------------------------------------------------
# Rating model


def rate_features(matrix: FeatureMatrix, config: PipelineConfig) -> dict:
    """Cross-validate the rating model on an extracted feature matrix."""
    hp, hp_source = config.resolve_hp(matrix.X, matrix.labels)
    metrics = validate_mod.cross_validate(
        matrix.X, matrix.labels, matrix.speaker_ids,
        k=config.folds, split_mode=config.split_mode, seed=config.seed,
        hp=hp, n_estimators=config.n_estimators,
    )
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "rating_model",
        "n_samples": matrix.n_samples,
        "n_speakers": len(set(matrix.speaker_ids)),
        "split_mode": config.split_mode,
        "folds": config.folds,
        "n_estimators": config.n_estimators,
        "hyperparameters": hp,
        "hp_source": hp_source,
        "metrics": metrics.as_dict(),
    }


# ---------------------------------------------------------------------------
# Duration sweep


def duration_sweep(
    recs: list[audio_io.Recording],
    labels: dict[str, float],
    durations=DEFAULT_DURATIONS,
    config: PipelineConfig | None = None,
) -> dict:
    """Compare rating-model performance across segment durations.

    Durations yielding fewer than ``2 * folds`` samples are skipped
    with a warning. The optimal duration maximizes the test
    correlation, with ties broken toward the larger test R^2.
    """
    config = config or PipelineConfig()

    def cell(duration):
        try:
            _, matrix = extract_features(recs, labels, duration, config.analysis)
        except ValueError as exc:
            warnings.warn(f"duration {duration!r} skipped: {exc}", stacklevel=2)
            return {"duration": duration, "skipped": True, "reason": str(exc)}
        if matrix.n_samples < 2 * config.folds:
            warnings.warn(
                f"duration {duration!r} skipped: only {matrix.n_samples} samples "
                f"for {config.folds}-fold validation",
                stacklevel=2,
            )
            return {
                "duration": duration,
                "skipped": True,
                "reason": f"only {matrix.n_samples} samples",
            }
        report = rate_features(matrix, config)
        return {
            "duration": duration,
            "skipped": False,
            "n_samples": report["n_samples"],
            "n_speakers": report["n_speakers"],
            "hyperparameters": report["hyperparameters"],
            "hp_source": report["hp_source"],
            "metrics": report["metrics"],
        }

    rows = _map_cells(cell, durations, config.workers)
    usable = [r for r in rows if not r["skipped"]]
    if not usable:
        raise ValueError("every duration was skipped; no report to build")
    best = max(usable, key=lambda r: (r["metrics"]["r_test"], r["metrics"]["r2_test"]))
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "duration_sweep",
        "folds": config.folds,
        "split_mode": config.split_mode,
        "durations": rows,
        "optimal_duration": best["duration"],
    }


# ---------------------------------------------------------------------------
# Cluster sweep


def _vif_row(rep: np.ndarray, names: list[str]) -> tuple[list[float], float]:
    """Per-cluster VIFs of a represented matrix; k = 1 is 1.0 by convention."""
    if rep.shape[1] < 2:
        return [1.0], 1.0
    report = stats.vif(stats.correlation(rep, names))
    return [float(v) for v in report.vifs], float(report.max_vif)


def cluster_sweep(matrix: FeatureMatrix, config: PipelineConfig | None = None) -> dict:
    """Sweep cluster counts from all measures down to one.

    The dendrogram is built once from the full correlation matrix; each
    k then cuts it, represents clusters by leading principal components,
    recomputes the correlation and VIFs of the representatives, and
    cross-validates a model on them. A k whose representation fails
    (degenerate principal component) is recorded and skipped.
    """
    config = config or PipelineConfig()
    n = matrix.X.shape[1]
    R = stats.correlation(matrix.X, matrix.measure_names)
    dendro = cluster_mod.build_dendrogram(R)

    def cell(k: int) -> dict:
        assignment = cluster_mod.cut(dendro, k)
        memberships = [
            {"name": assignment.cluster_names[c],
             "members": [matrix.measure_names[i] for i in assignment.members[c]]}
            for c in range(k)
        ]
        try:
            rep, _ = cluster_mod.represent_clusters(matrix.X, assignment)
        except ValueError as exc:
            return {"k": k, "failed": True, "reason": str(exc), "clusters": memberships}
        vifs, max_vif = _vif_row(rep, assignment.cluster_names)
        for c, entry in enumerate(memberships):
            entry["vif"] = vifs[c]
        hp, hp_source = config.resolve_hp(rep, matrix.labels)
        metrics = validate_mod.cross_validate(
            rep, matrix.labels, matrix.speaker_ids,
            k=config.folds, split_mode=config.split_mode, seed=config.seed,
            hp=hp, n_estimators=config.n_estimators,
        )
        return {
            "k": k,
            "failed": False,
            "max_vif": max_vif,
            "clusters": memberships,
            "hyperparameters": hp,
            "hp_source": hp_source,
            "metrics": metrics.as_dict(),
        }

    rows = _map_cells(cell, range(n, 0, -1), config.workers)
    report = {
        "schema_version": SCHEMA_VERSION,
        "kind": "cluster_sweep",
        "n_measures": n,
        "leaf_names": list(matrix.measure_names),
        "merges": [
            {
                "cluster_a": m.cluster_a,
                "cluster_b": m.cluster_b,
                "distance": float(m.distance),
                "new_id": m.new_id,
                "size": m.size,
            }
            for m in dendro.merges
        ],
        "vif_threshold": config.vif_threshold,
        "r_test_tolerance": config.r_test_tolerance,
        "folds": config.folds,
        "split_mode": config.split_mode,
        "rows": rows,
    }
    optimal_k, criterion_met = select_optimal_k(report)
    report["optimal_k"] = optimal_k
    report["performance_criterion_met"] = criterion_met
    return report


def select_optimal_k(report: dict) -> tuple[int, bool]:
    """Choose the cluster count from a finished sweep.

    Returns the smallest k whose max VIF is below the threshold and
    whose test correlation is within tolerance of the unclustered
    baseline. When no k satisfies both, the smallest k passing the VIF
    criterion is returned with the performance flag False. When even
    that fails, raises with a pointer at the VIF curve.
    """
    threshold = report.get("vif_threshold", VIF_THRESHOLD)
    tolerance = report.get("r_test_tolerance", R_TEST_TOLERANCE)
    ok = [r for r in report["rows"] if not r["failed"]]
    baseline = next((r for r in ok if r["k"] == report["n_measures"]), None)
    if baseline is None:
        raise ValueError("sweep has no usable unclustered baseline row")
    vif_ok = [
        r for r in ok
        if r["max_vif"] is not None and math.isfinite(r["max_vif"])
        and r["max_vif"] < threshold
    ]
    if not vif_ok:
        raise ValueError(
            f"no cluster count brings max VIF below {threshold}; "
            "inspect the VIF curve in the sweep report"
        )
    floor_r = baseline["metrics"]["r_test"] - tolerance
    both = [r for r in vif_ok if r["metrics"]["r_test"] >= floor_r]
    if both:
        return min(r["k"] for r in both), True
    return min(r["k"] for r in vif_ok), False


# ---------------------------------------------------------------------------
# Characterization


def characterize(
    matrix: FeatureMatrix,
    k: int,
    config: PipelineConfig | None = None,
    sex: str | None = None,
    duration=None,
) -> dict:
    """Fit the final model at k clusters and weight each acoustic factor.

    The report lists every cluster's members, VIF, principal-component
    loadings, and normalized importance weight, ranked by weight.
    """
    config = config or PipelineConfig()
    R = stats.correlation(matrix.X, matrix.measure_names)
    dendro = cluster_mod.build_dendrogram(R)
    assignment = cluster_mod.cut(dendro, k)
    rep, components = cluster_mod.represent_clusters(matrix.X, assignment)
    vifs, max_vif = _vif_row(rep, assignment.cluster_names)
    hp, hp_source = config.resolve_hp(rep, matrix.labels)
    metrics = validate_mod.cross_validate(
        rep, matrix.labels, matrix.speaker_ids,
        k=config.folds, split_mode=config.split_mode, seed=config.seed,
        hp=hp, n_estimators=config.n_estimators,
    )
    model = forest_mod.fit(
        rep, matrix.labels, hp=hp, seed=config.seed,
        n_estimators=config.n_estimators,
        feature_names=assignment.cluster_names,
    )
    weights = forest_mod.feature_importance(model)
    clusters = [
        {
            "name": assignment.cluster_names[c],
            "members": [matrix.measure_names[i] for i in assignment.members[c]],
            "vif": vifs[c],
            "weight": float(weights[c]),
            "loadings": [float(v) for v in components[c].loadings],
        }
        for c in range(assignment.k)
    ]
    ranking = sorted(clusters, key=lambda c: -c["weight"])
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "characterization",
        "sex": sex,
        "duration": duration,
        "k": assignment.k,
        "max_vif": max_vif,
        "clusters": clusters,
        "ranking": [c["name"] for c in ranking],
        "weights_sum": float(weights.sum()),
        "hyperparameters": hp,
        "hp_source": hp_source,
        "folds": config.folds,
        "split_mode": config.split_mode,
        "metrics": metrics.as_dict(),
    }


# ---------------------------------------------------------------------------
# Canonical report serialization


def _json_clean(obj):
    """Recursively convert to canonical JSON-safe values.

    Numpy scalars and arrays become plain Python; non-finite floats
    become None so reports parse everywhere.
    """
    if isinstance(obj, dict):
        return {str(key): _json_clean(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_clean(value) for value in obj]
    if isinstance(obj, np.ndarray):
        return [_json_clean(value) for value in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        obj = float(obj)
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    return obj


def dumps_report(report: dict) -> str:
    """Canonical JSON text: sorted keys, 2-space indent, one trailing newline."""
    return json.dumps(_json_clean(report), sort_keys=True, indent=2) + "\n"


def write_report(report: dict, path) -> None:
    Path(path).write_text(dumps_report(report), encoding="utf-8")
