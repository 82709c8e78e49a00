"""Jitter, shimmer, and HNR from the pulse train and pitch track.

All measures follow the classic period-perturbation definitions: periods
are differences of consecutive pulse times inside one voiced run, never
across runs, and every quotient is taken against the mean period or mean
amplitude over all runs of the segment. Measures whose preconditions
fail (too little voiced material) come back as None, which downstream
code treats as missing rather than zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pitch import PitchTrack, PulseTrain

HNR_CLAMP = 1e-6


@dataclass
class Jitter:
    local: float | None
    local_abs: float | None
    rap: float | None
    ppq5: float | None
    ddp: float | None


@dataclass
class Shimmer:
    local: float | None
    apq3: float | None
    apq5: float | None
    apq11: float | None
    dda: float | None


@dataclass
class PerturbationSet:
    """Measures #3..#13: HNR, five jitter variants, five shimmer variants."""

    hnr_db: float | None
    jitter_local: float | None
    jitter_local_abs: float | None
    jitter_rap: float | None
    jitter_ppq5: float | None
    jitter_ddp: float | None
    shimmer_local: float | None
    shimmer_apq3: float | None
    shimmer_apq5: float | None
    shimmer_apq11: float | None
    shimmer_dda: float | None


def _per_run(values: np.ndarray, run_ids: np.ndarray) -> list[np.ndarray]:
    return [values[run_ids == rid] for rid in np.unique(run_ids)]


def _adjacent_abs_diffs(runs: list[np.ndarray]) -> list[float]:
    out: list[float] = []
    for v in runs:
        out.extend(np.abs(np.diff(v)).tolist())
    return out


def _window_deviations(runs: list[np.ndarray], width: int) -> list[float]:
    """|center - mean of its width-point neighborhood|, windows within a run."""
    half = width // 2
    out: list[float] = []
    for v in runs:
        for i in range(half, v.size - half):
            window = v[i - half : i + half + 1]
            out.append(abs(v[i] - window.mean()))
    return out


def jitter_measures(pulses: PulseTrain) -> Jitter:
    """Five jitter variants from the pulse periods.

    local and local_abs need at least 3 periods, ppq5 needs 5; rap and
    ppq5 additionally need at least one full neighborhood inside a run.
    ddp is exactly 3 times rap by definition.
    """
    period_runs = [np.diff(t) for t in _per_run(pulses.pulse_times, pulses.run_ids)]
    period_runs = [p for p in period_runs if p.size > 0]
    all_periods = np.concatenate(period_runs) if period_runs else np.empty(0)
    n = all_periods.size
    if n < 3:
        return Jitter(None, None, None, None, None)
    mean_period = float(all_periods.mean())
    diffs = _adjacent_abs_diffs(period_runs)
    local_abs = float(np.mean(diffs)) if diffs else None
    local = local_abs / mean_period if local_abs is not None else None
    rap_terms = _window_deviations(period_runs, 3)
    rap = float(np.mean(rap_terms)) / mean_period if rap_terms else None
    ppq5 = None
    if n >= 5:
        ppq5_terms = _window_deviations(period_runs, 5)
        ppq5 = float(np.mean(ppq5_terms)) / mean_period if ppq5_terms else None
    ddp = 3.0 * rap if rap is not None else None
    return Jitter(local=local, local_abs=local_abs, rap=rap, ppq5=ppq5, ddp=ddp)


def shimmer_measures(pulses: PulseTrain) -> Shimmer:
    """Five shimmer variants from the pulse amplitudes.

    local, apq3 and dda need at least 3 pulses; apq5 needs 5; apq11
    needs 11. dda is exactly 3 times apq3 by definition.
    """
    amp_runs = _per_run(pulses.peak_amplitudes, pulses.run_ids)
    amp_runs = [a for a in amp_runs if a.size > 0]
    all_amps = np.concatenate(amp_runs) if amp_runs else np.empty(0)
    n = all_amps.size
    if n < 3:
        return Shimmer(None, None, None, None, None)
    mean_amp = float(all_amps.mean())
    if mean_amp <= 0.0:
        return Shimmer(None, None, None, None, None)
    diffs = _adjacent_abs_diffs(amp_runs)
    local = float(np.mean(diffs)) / mean_amp if diffs else None
    apq3_terms = _window_deviations(amp_runs, 3)
    apq3 = float(np.mean(apq3_terms)) / mean_amp if apq3_terms else None
    apq5 = None
    if n >= 5:
        apq5_terms = _window_deviations(amp_runs, 5)
        apq5 = float(np.mean(apq5_terms)) / mean_amp if apq5_terms else None
    apq11 = None
    if n >= 11:
        apq11_terms = _window_deviations(amp_runs, 11)
        apq11 = float(np.mean(apq11_terms)) / mean_amp if apq11_terms else None
    dda = 3.0 * apq3 if apq3 is not None else None
    return Shimmer(local=local, apq3=apq3, apq5=apq5, apq11=apq11, dda=dda)


def hnr(track: PitchTrack) -> float | None:
    """Mean harmonics-to-noise ratio in dB over voiced frames.

    Per frame HNR = 10 log10(r / (1 - r)) with the normalized
    autocorrelation peak r clamped away from 0 and 1.
    """
    r = track.autocorr_peak[track.voiced_flags]
    if r.size == 0:
        return None
    r = np.clip(r, HNR_CLAMP, 1.0 - HNR_CLAMP)
    return float(np.mean(10.0 * np.log10(r / (1.0 - r))))


def perturbation_measures(track: PitchTrack, pulses: PulseTrain) -> PerturbationSet:
    """Assemble HNR plus all jitter and shimmer variants for a segment."""
    j = jitter_measures(pulses)
    s = shimmer_measures(pulses)
    return PerturbationSet(
        hnr_db=hnr(track),
        jitter_local=j.local,
        jitter_local_abs=j.local_abs,
        jitter_rap=j.rap,
        jitter_ppq5=j.ppq5,
        jitter_ddp=j.ddp,
        shimmer_local=s.local,
        shimmer_apq3=s.apq3,
        shimmer_apq5=s.apq5,
        shimmer_apq11=s.apq11,
        shimmer_dda=s.dda,
    )
