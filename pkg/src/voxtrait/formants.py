"""LPC formant tracking and the six vocal-tract-length estimators.

Formants are measured on voiced frames of a resampled copy of the
segment (10 kHz analysis rate for male speakers, 11 kHz for female, so
the 0..5 kHz band holds four formants): pre-emphasis, a Gaussian-like
window, order-10 autocorrelation LPC solved by Levinson-Durbin, and
polynomial roots filtered by bandwidth. The six VTL estimators condense
the four formant means into apparent vocal-tract-length proxies.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.signal import resample_poly

from .pitch import PitchTrack

#: Default LPC analysis rates per sex class.
ANALYSIS_RATES = {"male": 10000, "female": 11000}

DEFAULT_LPC_ORDER = 10
SPEED_OF_SOUND_CM_S = 35000.0

MAX_BANDWIDTH_HZ = 400.0
MIN_FORMANT_HZ = 90.0
NYQUIST_MARGIN_HZ = 50.0

#: Half odd-integer mode numbers (2i - 1)/2 of a uniform quarter-wave tube.
_MODES = np.array([0.5, 1.5, 2.5, 3.5])

#: Minimum accepted frames for formant means to count.
MIN_FORMANT_FRAMES = 5


@dataclass
class FormantTrack:
    """F1..F4 per accepted voiced frame."""

    frame_times: np.ndarray
    formants_hz: np.ndarray
    analysis_rate: int
    diagnostics: dict = field(default_factory=dict)

    @property
    def n_frames(self) -> int:
        return self.formants_hz.shape[0]


@dataclass
class VtlEstimates:
    pf: float
    fdisp: float
    avg_formant: float
    mff: float
    fitch_vtl: float
    delta_f: float


@dataclass
class PoolStats:
    """Per-formant mean and SD over one sex class's dataset (for pF)."""

    means: np.ndarray
    sds: np.ndarray


def resample_to(x: np.ndarray, rate: int, target: int) -> np.ndarray:
    """Rational-factor resampling to the analysis rate."""
    if rate == target:
        return np.asarray(x, dtype=np.float64)
    frac = Fraction(target, rate)
    return resample_poly(np.asarray(x, dtype=np.float64), frac.numerator, frac.denominator)


def levinson_durbin(r: np.ndarray, order: int) -> tuple[np.ndarray, float] | None:
    """Solve the autocorrelation normal equations for LPC coefficients.

    Returns (a, e) with a[0] = 1 and e the final prediction-error
    energy, or None when the recursion loses positive definiteness
    (unstable frame).
    """
    a = np.zeros(order + 1)
    a[0] = 1.0
    e = float(r[0])
    if e <= 0.0:
        return None
    for i in range(1, order + 1):
        acc = r[i] + a[1:i] @ r[i - 1 : 0 : -1]
        k = -acc / e
        new_a = a.copy()
        new_a[i] = k
        new_a[1:i] = a[1:i] + k * a[i - 1 : 0 : -1]
        a = new_a
        e *= 1.0 - k * k
        if e <= 0.0:
            return None
    return a, e


def _gaussian_window(n: int) -> np.ndarray:
    i = np.arange(n)
    sigma = (n - 1) / 6.0
    return np.exp(-0.5 * ((i - (n - 1) / 2.0) / sigma) ** 2)


def track_formants(
    seg,
    track: PitchTrack,
    analysis_rate: int,
    lpc_order: int = DEFAULT_LPC_ORDER,
) -> FormantTrack:
    """Estimate F1..F4 on each voiced frame of a segment.

    Per frame: pre-emphasis with coefficient exp(-2*pi*50/rate), 25 ms
    Gaussian-like window, autocorrelation LPC of the given order, roots
    of the prediction polynomial, candidates kept when their bandwidth
    is under 400 Hz and their frequency inside (90 Hz, Nyquist - 50 Hz),
    and the four lowest candidates become F1..F4. Frames with unstable
    LPC or fewer than four candidates contribute nothing and are counted
    in the diagnostics.
    """
    y = resample_to(seg.samples, seg.sample_rate, analysis_rate)
    alpha = float(np.exp(-2.0 * np.pi * 50.0 / analysis_rate))
    pre = np.empty_like(y)
    pre[0] = y[0] * (1.0 - alpha)
    pre[1:] = y[1:] - alpha * y[:-1]

    win_n = int(round(0.025 * analysis_rate))
    hop = max(int(round(0.010 * analysis_rate)), 1)
    window = _gaussian_window(win_n)
    pad = 1 << int(2 * win_n - 1).bit_length()
    nyquist = analysis_rate / 2.0
    f_hi = nyquist - NYQUIST_MARGIN_HZ

    times: list[float] = []
    rows: list[np.ndarray] = []
    skipped_unstable = 0
    skipped_candidates = 0
    n_voiced = 0

    if pre.size >= win_n and track.frame_times.size:
        starts = np.arange(0, pre.size - win_n + 1, hop)
        centers = (starts + win_n / 2.0) / analysis_rate
        nearest = np.clip(
            np.searchsorted(track.frame_times, centers), 0, track.n_frames - 1
        )
        prev = np.clip(nearest - 1, 0, track.n_frames - 1)
        closer_prev = np.abs(track.frame_times[prev] - centers) < np.abs(
            track.frame_times[nearest] - centers
        )
        nearest = np.where(closer_prev, prev, nearest)
        voiced = track.voiced_flags[nearest]

        for s, center, is_voiced in zip(starts, centers, voiced):
            if not is_voiced:
                continue
            n_voiced += 1
            frame = pre[s : s + win_n]
            frame = (frame - frame.mean()) * window
            spec = np.fft.rfft(frame, pad)
            r = np.fft.irfft(spec * np.conj(spec))[: lpc_order + 1]
            solved = levinson_durbin(r, lpc_order)
            if solved is None:
                skipped_unstable += 1
                continue
            a, _e = solved
            roots = np.roots(a)
            roots = roots[roots.imag > 0]
            freqs = np.angle(roots) * analysis_rate / (2.0 * np.pi)
            mags = np.abs(roots)
            with np.errstate(divide="ignore"):
                bandwidths = -np.log(mags) * analysis_rate / np.pi
            keep = (bandwidths < MAX_BANDWIDTH_HZ) & (freqs > MIN_FORMANT_HZ) & (freqs < f_hi)
            cand = np.sort(freqs[keep])
            if cand.size < 4:
                skipped_candidates += 1
                continue
            times.append(float(center))
            rows.append(cand[:4])

    return FormantTrack(
        frame_times=np.asarray(times, dtype=np.float64),
        formants_hz=np.asarray(rows, dtype=np.float64).reshape(-1, 4),
        analysis_rate=analysis_rate,
        diagnostics={
            "voiced_frames": n_voiced,
            "accepted_frames": len(rows),
            "skipped_unstable": skipped_unstable,
            "skipped_few_candidates": skipped_candidates,
        },
    )


def formant_means(ft: FormantTrack) -> tuple[float, float, float, float] | None:
    """Arithmetic per-formant means; None unless at least 5 frames held
    a full four-formant measurement."""
    if ft.n_frames < MIN_FORMANT_FRAMES:
        return None
    means = ft.formants_hz.mean(axis=0)
    return tuple(float(v) for v in means)


def compute_pool_stats(formant_mean_rows: list[tuple[float, float, float, float]]) -> PoolStats:
    """Population mean/SD of the per-segment formant means of one sex class."""
    rows = np.asarray(formant_mean_rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] < 2 or rows.shape[1] != 4:
        raise ValueError("need at least 2 segments with formant means")
    sds = rows.std(axis=0)
    if (sds == 0.0).any():
        warnings.warn("zero-variance formant pool; pF terms for those formants are 0",
                      stacklevel=2)
    return PoolStats(means=rows.mean(axis=0), sds=sds)


def vtl_estimators(
    f: tuple[float, float, float, float],
    pool: PoolStats,
    speed_of_sound: float = SPEED_OF_SOUND_CM_S,
) -> VtlEstimates:
    """The six vocal-tract-length estimators from four formant means.

    pf averages the pool-standardized formants; fdisp is the mean
    spacing (F4 - F1)/3; mff is the geometric mean; fitch_vtl maps each
    formant to a quarter-wave tube length and averages; delta_f is the
    through-origin regression slope of F_i on (2i - 1)/2.
    """
    F = np.asarray(f, dtype=np.float64)
    if F.shape != (4,) or (F <= 0).any():
        raise ValueError("formant means must be four positive frequencies")
    safe_sd = np.where(pool.sds > 0, pool.sds, 1.0)
    z = np.where(pool.sds > 0, (F - pool.means) / safe_sd, 0.0)
    pf = float(z.mean())
    fdisp = float((F[3] - F[0]) / 3.0)
    avg_formant = float(F.mean())
    mff = float(np.exp(np.mean(np.log(F))))
    fitch_vtl = float(np.mean((2 * np.arange(1, 5) - 1) * speed_of_sound / (4.0 * F)))
    delta_f = float((F @ _MODES) / (_MODES @ _MODES))
    return VtlEstimates(
        pf=pf,
        fdisp=fdisp,
        avg_formant=avg_formant,
        mff=mff,
        fitch_vtl=fitch_vtl,
        delta_f=delta_f,
    )
