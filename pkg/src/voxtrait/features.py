"""The 23-measure acoustic vector, feature matrix, and feature CSV contract.

Measure order is fixed: F0 statistics, HNR, the jitter family, the
shimmer family, the four formant means, then the six vocal-tract-length
estimators. Index i in every vector, matrix column, and CSV column
always refers to the same measure.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import formants as formants_mod
from . import perturbation as perturbation_mod
from . import pitch as pitch_mod
from .audio_io import AudioSegment

#: Canonical measure names, in fixed order. This list is the schema of
#: the feature CSV and of every 23-wide array in the package.
MEASURE_NAMES = [
    "f0_mean",
    "f0_sd",
    "hnr",
    "jitter_local",
    "jitter_local_abs",
    "jitter_rap",
    "jitter_ppq5",
    "jitter_ddp",
    "shimmer_local",
    "shimmer_apq3",
    "shimmer_apq5",
    "shimmer_apq11",
    "shimmer_dda",
    "f1_mean",
    "f2_mean",
    "f3_mean",
    "f4_mean",
    "formant_position",
    "formant_dispersion",
    "avg_formant",
    "mff",
    "fitch_vtl",
    "delta_f",
]

N_MEASURES = len(MEASURE_NAMES)

#: Default pitch search ranges per sex class.
PITCH_RANGES = {"male": (75.0, 300.0), "female": (100.0, 500.0)}


@dataclass
class AnalysisParams:
    """Extraction settings; None fields fall back to per-sex defaults."""

    pitch_floor: float | None = None
    pitch_ceiling: float | None = None
    voicing_threshold: float = pitch_mod.DEFAULT_VOICING_THRESHOLD
    lpc_order: int = formants_mod.DEFAULT_LPC_ORDER
    formant_rate: int | None = None
    speed_of_sound: float = formants_mod.SPEED_OF_SOUND_CM_S
    min_tail_s: float = 0.5

    def pitch_range(self, sex: str) -> tuple[float, float]:
        lo, hi = PITCH_RANGES[sex]
        return (
            self.pitch_floor if self.pitch_floor is not None else lo,
            self.pitch_ceiling if self.pitch_ceiling is not None else hi,
        )

    def analysis_rate(self, sex: str) -> int:
        if self.formant_rate is not None:
            return self.formant_rate
        return formants_mod.ANALYSIS_RATES[sex]


@dataclass
class AcousticVector:
    """One segment's 23 measures plus a mask of missing entries."""

    values: np.ndarray
    missing_mask: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.missing_mask = np.asarray(self.missing_mask, dtype=bool)
        if self.values.shape != (N_MEASURES,) or self.missing_mask.shape != (N_MEASURES,):
            raise ValueError(f"expected {N_MEASURES} measures")


@dataclass
class FeatureRow:
    speaker_id: str
    segment_index: int
    vector: AcousticVector


@dataclass
class SegmentAnalysis:
    """Intermediate per-segment results before pool-dependent assembly."""

    f0_mean: float | None
    f0_sd: float | None
    perturbation: perturbation_mod.PerturbationSet
    formant_means: tuple[float, float, float, float] | None
    diagnostics: dict = field(default_factory=dict)


@dataclass
class FeatureMatrix:
    """Normalized sample-by-measure table with per-speaker labels."""

    X: np.ndarray
    speaker_ids: list[str]
    segment_indices: list[int]
    labels: np.ndarray
    norm_means: np.ndarray
    norm_sds: np.ndarray
    measure_names: list[str]

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]


def analyze_segment(seg: AudioSegment, sex: str, params: AnalysisParams) -> SegmentAnalysis:
    """Run pitch, perturbation, and formant analysis on one segment."""
    floor, ceiling = params.pitch_range(sex)
    track = pitch_mod.track_pitch(seg, floor, ceiling, params.voicing_threshold)
    pulses = pitch_mod.extract_pulses(seg, track)
    pert = perturbation_mod.perturbation_measures(track, pulses)
    voiced_f0 = track.f0_hz[track.voiced_flags]
    if voiced_f0.size:
        f0_mean = float(voiced_f0.mean())
        f0_sd = float(voiced_f0.std())
    else:
        f0_mean = f0_sd = None
    ft = formants_mod.track_formants(
        seg, track, params.analysis_rate(sex), params.lpc_order
    )
    return SegmentAnalysis(
        f0_mean=f0_mean,
        f0_sd=f0_sd,
        perturbation=pert,
        formant_means=formants_mod.formant_means(ft),
        diagnostics={
            "voiced_frames": int(track.voiced_flags.sum()),
            "n_frames": track.n_frames,
            "n_pulses": pulses.n_pulses,
            **ft.diagnostics,
        },
    )


def assemble_vector(
    analysis: SegmentAnalysis,
    pool: formants_mod.PoolStats | None,
    speed_of_sound: float = formants_mod.SPEED_OF_SOUND_CM_S,
) -> AcousticVector:
    """Lay out one segment's measures in canonical order.

    Formant-derived entries stay missing when the segment has no formant
    means or no pool statistics are available.
    """
    values = np.full(N_MEASURES, np.nan)
    p = analysis.perturbation
    scalars = [
        analysis.f0_mean,
        analysis.f0_sd,
        p.hnr_db,
        p.jitter_local,
        p.jitter_local_abs,
        p.jitter_rap,
        p.jitter_ppq5,
        p.jitter_ddp,
        p.shimmer_local,
        p.shimmer_apq3,
        p.shimmer_apq5,
        p.shimmer_apq11,
        p.shimmer_dda,
    ]
    for i, v in enumerate(scalars):
        if v is not None:
            values[i] = v
    if analysis.formant_means is not None and pool is not None:
        values[13:17] = analysis.formant_means
        est = formants_mod.vtl_estimators(analysis.formant_means, pool, speed_of_sound)
        values[17:23] = (est.pf, est.fdisp, est.avg_formant, est.mff,
                         est.fitch_vtl, est.delta_f)
    return AcousticVector(values=values, missing_mask=np.isnan(values))


def extract_vector(
    seg: AudioSegment,
    sex: str,
    pool: formants_mod.PoolStats | None,
    params: AnalysisParams | None = None,
) -> AcousticVector:
    """Analyze one segment and assemble its acoustic vector."""
    params = params or AnalysisParams()
    return assemble_vector(analyze_segment(seg, sex, params), pool, params.speed_of_sound)


def build_matrix(rows: list[FeatureRow], labels: dict[str, float]) -> FeatureMatrix:
    """Z-normalize feature rows and attach per-speaker labels.

    Columns are normalized to zero mean and unit population SD over
    their non-missing entries; missing entries are imputed to 0 (the
    column mean) afterward. Zero-variance columns normalize to all
    zeros with a warning. Rows are ordered by (speaker_id,
    segment_index) so the matrix is deterministic.
    """
    if len(rows) < 2:
        raise ValueError("need at least 2 feature rows")
    rows = sorted(rows, key=lambda r: (r.speaker_id, r.segment_index))
    missing_labels = sorted({r.speaker_id for r in rows} - set(labels))
    if missing_labels:
        raise ValueError(f"no rating label for speakers: {missing_labels}")
    raw = np.stack([r.vector.values for r in rows])
    mask = np.stack([r.vector.missing_mask for r in rows])
    means = np.zeros(N_MEASURES)
    sds = np.zeros(N_MEASURES)
    X = np.zeros_like(raw)
    for j in range(N_MEASURES):
        col = raw[~mask[:, j], j]
        if col.size == 0:
            warnings.warn(f"column {MEASURE_NAMES[j]!r} is entirely missing; "
                          "normalized to zeros", stacklevel=2)
            continue
        means[j] = col.mean()
        sds[j] = col.std()
        if sds[j] == 0.0:
            warnings.warn(f"zero-variance column {MEASURE_NAMES[j]!r}; "
                          "normalized to zeros", stacklevel=2)
            continue
        X[:, j] = np.where(mask[:, j], 0.0, (raw[:, j] - means[j]) / sds[j])
    return FeatureMatrix(
        X=X,
        speaker_ids=[r.speaker_id for r in rows],
        segment_indices=[r.segment_index for r in rows],
        labels=np.array([labels[r.speaker_id] for r in rows]),
        norm_means=means,
        norm_sds=sds,
        measure_names=list(MEASURE_NAMES),
    )


def apply_normalization(
    vector: AcousticVector, means: np.ndarray, sds: np.ndarray
) -> np.ndarray:
    """Normalize a held-out vector with stored parameters."""
    safe = np.where(sds > 0, sds, 1.0)
    z = (vector.values - means) / safe
    return np.where(vector.missing_mask | (sds == 0), 0.0, z)


def denormalize(z: np.ndarray, means: np.ndarray, sds: np.ndarray) -> np.ndarray:
    return z * sds + means


FEATURE_HEADER = ["speaker_id", "segment_index", "label"] + MEASURE_NAMES


def write_features_csv(path, rows: list[FeatureRow], labels: dict[str, float]) -> None:
    """Persist raw (un-normalized) measures; empty cells mark missing."""
    rows = sorted(rows, key=lambda r: (r.speaker_id, r.segment_index))
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(FEATURE_HEADER)
        for r in rows:
            cells = [r.speaker_id, str(r.segment_index), repr(float(labels[r.speaker_id]))]
            for v, is_missing in zip(r.vector.values, r.vector.missing_mask):
                cells.append("" if is_missing else repr(float(v)))
            writer.writerow(cells)


def read_features_csv(path) -> tuple[list[FeatureRow], dict[str, float]]:
    """Read a feature CSV back into rows and per-speaker labels."""
    path = Path(path)
    rows: list[FeatureRow] = []
    labels: dict[str, float] = {}
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != FEATURE_HEADER:
            raise ValueError(f"{path.name}: unexpected feature CSV header")
        for record in reader:
            spk = record[0]
            seg_idx = int(record[1])
            label = float(record[2])
            if spk in labels and labels[spk] != label:
                raise ValueError(f"{path.name}: conflicting labels for speaker {spk!r}")
            labels[spk] = label
            values = np.full(N_MEASURES, np.nan)
            for j, cell in enumerate(record[3 : 3 + N_MEASURES]):
                if cell != "":
                    values[j] = float(cell)
            rows.append(FeatureRow(spk, seg_idx, AcousticVector(values, np.isnan(values))))
    if not rows:
        raise ValueError(f"{path.name}: no feature rows")
    return rows, labels


def write_norm_sidecar(path, matrix: FeatureMatrix) -> None:
    """Normalization parameters as JSON, for inference reuse."""
    payload = {
        "schema_version": 1,
        "measure_names": matrix.measure_names,
        "mean": [float(v) for v in matrix.norm_means],
        "sd": [float(v) for v in matrix.norm_sds],
        "n_rows": matrix.n_samples,
        "n_speakers": len(set(matrix.speaker_ids)),
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
