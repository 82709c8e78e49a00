"""Shared signal builders and corpus fixtures for the test suite."""

from __future__ import annotations

import numpy as np
import pytest
from scipy.signal import lfilter

from voxtrait.audio_io import AudioSegment
from voxtrait.synth import SynthSpec, generate_corpus

RATE = 16000


def make_segment(samples, rate=RATE, speaker="spk", index=0) -> AudioSegment:
    samples = np.asarray(samples, dtype=np.float64)
    return AudioSegment(
        speaker_id=speaker,
        segment_index=index,
        samples=samples,
        sample_rate=rate,
        duration_s=samples.size / rate,
    )


def sine(freq_hz, duration_s=1.0, rate=RATE, amp=0.6):
    t = np.arange(int(round(duration_s * rate))) / rate
    return amp * np.sin(2.0 * np.pi * freq_hz * t)


def sawtooth(freq_hz, duration_s=1.0, rate=RATE, amp=0.6):
    t = np.arange(int(round(duration_s * rate))) / rate
    phase = t * freq_hz
    return amp * (2.0 * (phase - np.floor(phase + 0.5)))


def impulse_train(freq_hz, duration_s=1.0, rate=RATE, amp=0.8):
    n = int(round(duration_s * rate))
    x = np.zeros(n)
    period = rate / freq_hz
    pos = 0.0
    while True:
        idx = int(round(pos))
        if idx >= n:
            break
        x[idx] = amp
        pos += period
    return x


def resonant_vowel(f0_hz, formants_hz, bandwidths_hz, duration_s=1.0, rate=RATE):
    """Impulse train filtered through cascaded two-pole resonators."""
    y = impulse_train(f0_hz, duration_s, rate, amp=1.0)
    for f, bw in zip(formants_hz, bandwidths_hz):
        r = np.exp(-np.pi * bw / rate)
        a = [1.0, -2.0 * r * np.cos(2.0 * np.pi * f / rate), r * r]
        y = lfilter([1.0], a, y)
    peak = np.max(np.abs(y))
    return 0.7 * y / peak


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """A tiny deterministic synthetic corpus: 5 male speakers, 6 s each."""
    root = tmp_path_factory.mktemp("corpus_small")
    spec = SynthSpec(
        speakers={"male": 5},
        duration_s=6.0,
        raters=3,
        rater_noise_sd=0.05,
    )
    return generate_corpus(spec, seed=91, out_dir=root)
