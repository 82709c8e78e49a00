"""Deterministic synthetic speech corpus generator.

Speakers are source-filter synthesized: a glottal impulse train with
controlled jitter and shimmer drives a cascade of four two-pole
resonators whose frequencies follow an acoustic-tube model, plus white
noise for aspiration. Four independent per-speaker latent factors shape
the signal:

* ``f0`` — the speaker's base fundamental frequency,
* ``vtl`` — tube length, which scales all four resonators together,
* ``perturbation`` — jitter/shimmer/noise magnitudes (one common level),
* ``intonation`` — the spread of per-phrase F0 offsets.

Each recording alternates voiced phrases with silent pauses. The F0
offset is constant within a phrase so that intonation widens the F0
distribution without leaking into period-to-period jitter.

Ratings are produced by simulated raters on heterogeneous scales from a
linear function of the latent factors plus rater noise. Everything is
generated from a single seeded RNG in a fixed order, so a given (spec,
seed) pair reproduces the corpus byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .audio_io import SEX_CLASSES, save_wav

#: Latent factor axes, in draw order. All four vary between speakers.
LATENT_NAMES = ("f0", "vtl", "perturbation", "intonation")

#: Per-sex physical anchors: base F0 (Hz), relative F0 spread per latent
#: unit, neutral tube length (cm), relative tube-length spread.
SEX_PROFILES = {
    "male": {"f0_hz": 120.0, "f0_rel_sd": 0.10, "tube_cm": 16.5, "tube_rel_sd": 0.06},
    "female": {"f0_hz": 210.0, "f0_rel_sd": 0.10, "tube_cm": 14.0, "tube_rel_sd": 0.06},
}

SPEED_OF_SOUND_CM_S = 35000.0

#: Resonator bandwidths (Hz), under the formant tracker's 400 Hz cap.
RESONATOR_BANDWIDTHS_HZ = (80.0, 90.0, 120.0, 130.0)

#: Perturbation magnitudes at latent zero; each scales by exp(0.6 z).
JITTER_BASE = 0.008
SHIMMER_BASE = 0.04
NOISE_BASE = 0.004
PERTURBATION_SPREAD = 0.6

#: Relative per-phrase F0 offset depth at latent zero; scales by exp(0.45 z).
INTONATION_BASE = 0.045
INTONATION_SPREAD = 0.45

#: Latent draws are clipped to keep every speaker physically plausible.
LATENT_CLIP = 2.5

#: Rating scales cycled across raters (deliberately heterogeneous).
RATER_SCALES = (5.0, 7.0, 100.0)

PEAK_LEVEL = 0.7


@dataclass
class SynthSpec:
    """Corpus recipe; all fields have usable defaults."""

    speakers: dict = field(default_factory=lambda: {"male": 40, "female": 40})
    recordings_per_speaker: int = 1
    duration_s: float = 8.0
    sample_rate: int = 16000
    raters: int = 6
    rating_weights: dict = field(default_factory=lambda: {"f0": -1.0, "vtl": -0.5})
    rater_noise_sd: float = 0.1
    phrase_s: tuple = (0.8, 1.6)
    pause_s: tuple = (0.15, 0.35)

    def __post_init__(self):
        bad_sex = set(self.speakers) - set(SEX_CLASSES)
        if bad_sex:
            raise ValueError(f"unknown sex classes in spec: {sorted(bad_sex)}")
        if not any(int(n) > 0 for n in self.speakers.values()):
            raise ValueError("spec requests zero speakers")
        bad_latent = set(self.rating_weights) - set(LATENT_NAMES)
        if bad_latent:
            raise ValueError(f"unknown rating-weight latents: {sorted(bad_latent)}")
        if self.recordings_per_speaker < 1:
            raise ValueError("recordings_per_speaker must be >= 1")
        if self.duration_s <= 0 or self.sample_rate <= 0:
            raise ValueError("duration_s and sample_rate must be positive")
        if self.raters < 1:
            raise ValueError("need at least one rater")

    @classmethod
    def from_json(cls, path) -> "SynthSpec":
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
        known = {
            "speakers", "recordings_per_speaker", "duration_s", "sample_rate",
            "raters", "rating_weights", "rater_noise_sd", "phrase_s", "pause_s",
        }
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown synth spec keys: {sorted(unknown)}")
        for key in ("phrase_s", "pause_s"):
            if key in raw:
                raw[key] = tuple(raw[key])
        return cls(**raw)


@dataclass
class SpeakerParams:
    speaker_id: str
    sex: str
    latents: dict
    f0_hz: float
    tube_cm: float
    formants_hz: tuple
    jitter_sd: float
    shimmer_sd: float
    noise_level: float
    intonation_depth: float


@dataclass
class CorpusPaths:
    root: Path
    manifest: Path
    ratings: Path
    meta: Path


def tube_formants(tube_cm: float) -> tuple:
    """Odd-quarter-wavelength resonances of a uniform tube."""
    return tuple(
        (2 * i - 1) * SPEED_OF_SOUND_CM_S / (4.0 * tube_cm) for i in (1, 2, 3, 4)
    )


def _speaker_params(speaker_id: str, sex: str, rng: np.random.Generator) -> SpeakerParams:
    z = np.clip(rng.standard_normal(len(LATENT_NAMES)), -LATENT_CLIP, LATENT_CLIP)
    latents = dict(zip(LATENT_NAMES, (float(v) for v in z)))
    profile = SEX_PROFILES[sex]
    f0 = profile["f0_hz"] * (1.0 + profile["f0_rel_sd"] * latents["f0"])
    tube = profile["tube_cm"] * (1.0 + profile["tube_rel_sd"] * latents["vtl"])
    pert = np.exp(PERTURBATION_SPREAD * latents["perturbation"])
    return SpeakerParams(
        speaker_id=speaker_id,
        sex=sex,
        latents=latents,
        f0_hz=float(f0),
        tube_cm=float(tube),
        formants_hz=tube_formants(tube),
        jitter_sd=float(JITTER_BASE * pert),
        shimmer_sd=float(SHIMMER_BASE * pert),
        noise_level=float(NOISE_BASE * pert),
        intonation_depth=float(
            INTONATION_BASE * np.exp(INTONATION_SPREAD * latents["intonation"])
        ),
    )


def resonator_cascade(x: np.ndarray, freqs_hz, bandwidths_hz, sample_rate: int) -> np.ndarray:
    """Run the excitation through cascaded two-pole resonators."""
    y = np.asarray(x, dtype=np.float64)
    for f, bw in zip(freqs_hz, bandwidths_hz):
        r = np.exp(-np.pi * bw / sample_rate)
        a = [1.0, -2.0 * r * np.cos(2.0 * np.pi * f / sample_rate), r * r]
        y = lfilter([1.0], a, y)
    return y


def _phrase_spans(duration_s, phrase_s, pause_s, rng) -> list[tuple[float, float]]:
    """Alternate phrase/pause spans covering the recording."""
    spans = []
    t = float(rng.uniform(*pause_s))
    while t < duration_s:
        end = min(t + float(rng.uniform(*phrase_s)), duration_s)
        if end - t >= 0.3:
            spans.append((t, end))
        t = end + float(rng.uniform(*pause_s))
    return spans


def synthesize_recording(params: SpeakerParams, spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    """One recording: impulse-train phrases through the resonator cascade."""
    rate = spec.sample_rate
    n = int(round(spec.duration_s * rate))
    excitation = np.zeros(n)
    spans = _phrase_spans(spec.duration_s, spec.phrase_s, spec.pause_s, rng)
    for start, end in spans:
        # Constant F0 offset per phrase: intonation spreads the F0
        # distribution without polluting adjacent-period jitter.
        offset = params.intonation_depth * float(rng.uniform(-1.0, 1.0))
        f_phrase = params.f0_hz * (1.0 + offset)
        t = start + 0.5 / f_phrase
        while t < end:
            amp = 1.0 + params.shimmer_sd * float(rng.standard_normal())
            pos = t * rate
            i0 = int(np.floor(pos))
            frac = pos - i0
            if 0 <= i0 < n:
                excitation[i0] += amp * (1.0 - frac)
            if 0 <= i0 + 1 < n:
                excitation[i0 + 1] += amp * frac
            period = (1.0 / f_phrase) * (
                1.0 + params.jitter_sd * float(rng.standard_normal())
            )
            t += max(period, 0.2 / f_phrase)
    y = resonator_cascade(excitation, params.formants_hz, RESONATOR_BANDWIDTHS_HZ, rate)
    for start, end in spans:
        a, b = int(round(start * rate)), int(round(end * rate))
        seg = y[a:b]
        rms = float(np.sqrt(np.mean(seg**2))) if seg.size else 0.0
        if rms > 0.0:
            seg += params.noise_level * rms * rng.standard_normal(seg.size)
    peak = float(np.max(np.abs(y)))
    if peak > 0.0:
        y *= PEAK_LEVEL / peak
    return y


def _ratings_table(
    params_by_speaker: dict[str, SpeakerParams],
    spec: SynthSpec,
    rng: np.random.Generator,
) -> list[tuple[str, str, float, float]]:
    """Rows (rater_id, speaker_id, rating, scale_max) in canonical order."""
    speakers = sorted(params_by_speaker)
    scores = np.asarray([
        sum(
            w * params_by_speaker[s].latents[name]
            for name, w in spec.rating_weights.items()
        )
        for s in speakers
    ])
    sd = float(scores.std())
    standardized = (scores - scores.mean()) / sd if sd > 0.0 else np.zeros_like(scores)
    rows = []
    for r in range(spec.raters):
        rater_id = f"rater{r:02d}"
        scale = RATER_SCALES[r % len(RATER_SCALES)]
        center, gain = scale / 2.0, scale / 8.0
        for i, spk in enumerate(speakers):
            noise = spec.rater_noise_sd * float(rng.standard_normal())
            rating = center + gain * (float(standardized[i]) + noise)
            rows.append((rater_id, spk, rating, scale))
    return rows


def generate_corpus(spec: SynthSpec, seed: int, out_dir) -> CorpusPaths:
    """Write WAVs, manifest.csv, ratings.csv and meta.json under out_dir.

    Fully deterministic: the same (spec, seed) pair produces
    byte-identical files.
    """
    out_dir = Path(out_dir)
    wav_dir = out_dir / "wav"
    wav_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.Generator(np.random.PCG64(int(seed)))

    params_by_speaker: dict[str, SpeakerParams] = {}
    manifest_rows: list[tuple[str, str, str]] = []
    for sex in SEX_CLASSES:
        count = int(spec.speakers.get(sex, 0))
        for i in range(count):
            spk = f"{sex[0]}{i:03d}"
            params = _speaker_params(spk, sex, rng)
            params_by_speaker[spk] = params
            for j in range(spec.recordings_per_speaker):
                rel = f"wav/{spk}_{j}.wav"
                samples = synthesize_recording(params, spec, rng)
                save_wav(out_dir / rel, samples, spec.sample_rate)
                manifest_rows.append((spk, sex, rel))

    manifest_path = out_dir / "manifest.csv"
    with open(manifest_path, "w", encoding="utf-8", newline="\n") as f:
        f.write("speaker_id,sex,wav_path\n")
        for spk, sex, rel in manifest_rows:
            f.write(f"{spk},{sex},{rel}\n")

    ratings_path = out_dir / "ratings.csv"
    with open(ratings_path, "w", encoding="utf-8", newline="\n") as f:
        f.write("rater_id,speaker_id,rating,scale_max\n")
        for rater_id, spk, rating, scale in _ratings_table(params_by_speaker, spec, rng):
            f.write(f"{rater_id},{spk},{rating!r},{scale!r}\n")

    meta_path = out_dir / "meta.json"
    meta = {
        "schema_version": 1,
        "seed": int(seed),
        "factor_count": len(LATENT_NAMES),
        "latent_names": list(LATENT_NAMES),
        "rating_weights": dict(spec.rating_weights),
        "speakers": {
            spk: {
                "sex": p.sex,
                "latents": p.latents,
                "f0_hz": p.f0_hz,
                "tube_cm": p.tube_cm,
                "formants_hz": list(p.formants_hz),
                "jitter_sd": p.jitter_sd,
                "shimmer_sd": p.shimmer_sd,
                "noise_level": p.noise_level,
                "intonation_depth": p.intonation_depth,
            }
            for spk, p in sorted(params_by_speaker.items())
        },
    }
    with open(meta_path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(meta, f, sort_keys=True, indent=2)
        f.write("\n")

    return CorpusPaths(root=out_dir, manifest=manifest_path, ratings=ratings_path, meta=meta_path)
