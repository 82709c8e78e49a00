"""Jitter, shimmer, and HNR oracles on constructed pulse trains."""

import math

import numpy as np
import pytest

from conftest import RATE, make_segment, sine
from voxtrait.perturbation import (
    hnr,
    jitter_measures,
    perturbation_measures,
    shimmer_measures,
)
from voxtrait.pitch import PitchTrack, PulseTrain, extract_pulses, track_pitch


def train(periods=None, times=None, amps=None, run_ids=None):
    if times is None:
        times = np.concatenate([[0.0], np.cumsum(periods)])
    times = np.asarray(times, dtype=float)
    if amps is None:
        amps = np.full(times.size, 0.5)
    amps = np.asarray(amps, dtype=float)
    if run_ids is None:
        run_ids = np.zeros(times.size, dtype=np.int64)
    return PulseTrain(
        pulse_times=times,
        peak_amplitudes=amps,
        run_ids=np.asarray(run_ids, dtype=np.int64),
    )


def fake_track(peaks, voiced=None):
    peaks = np.asarray(peaks, dtype=float)
    if voiced is None:
        voiced = peaks > 0
    n = peaks.size
    return PitchTrack(
        frame_times=np.arange(n) * 0.01,
        f0_hz=np.where(voiced, 100.0, 0.0),
        voiced_flags=np.asarray(voiced, dtype=bool),
        autocorr_peak=peaks,
        floor=75.0,
        ceiling=600.0,
        window_s=0.04,
        hop_s=0.01,
    )


class TestJitter:
    def test_perfectly_periodic_train(self):
        j = jitter_measures(train(periods=[0.01] * 6))
        assert j.local == pytest.approx(0.0, abs=1e-15)
        assert j.local_abs == pytest.approx(0.0, abs=1e-15)
        assert j.rap == pytest.approx(0.0, abs=1e-15)
        assert j.ppq5 == pytest.approx(0.0, abs=1e-15)
        assert j.ddp == pytest.approx(0.0, abs=1e-15)

    def test_hand_values_three_periods(self):
        # periods 9, 10, 11 ms: mean period 10 ms; adjacent diffs both
        # 1 ms so local_abs = 0.001 s and local = 0.10; the single rap
        # window is |10 - mean(9,10,11)| = 0, so rap and ddp are 0;
        # ppq5 needs five periods and stays None.
        j = jitter_measures(train(periods=[0.009, 0.010, 0.011]))
        assert j.local == pytest.approx(0.10, abs=1e-12)
        assert j.local_abs == pytest.approx(0.001, abs=1e-15)
        assert j.rap == pytest.approx(0.0, abs=1e-15)
        assert j.ppq5 is None
        assert j.ddp == pytest.approx(0.0, abs=1e-15)

    def test_alternating_periods_local(self):
        # periods alternate 9 and 11 ms: every adjacent diff is 2 ms,
        # mean period 10 ms, so local = 0.2.
        j = jitter_measures(train(periods=[0.009, 0.011] * 4))
        assert j.local == pytest.approx(0.2, abs=1e-12)
        assert j.local_abs == pytest.approx(0.002, abs=1e-15)

    def test_ddp_is_three_rap_and_dda_is_three_apq3(self):
        rng = np.random.default_rng(70)
        for _ in range(50):
            n = int(rng.integers(4, 40))
            periods = 0.01 + 0.001 * rng.standard_normal(n)
            amps = 0.5 + 0.05 * rng.standard_normal(n + 1)
            t = train(periods=periods, amps=np.abs(amps))
            j = jitter_measures(t)
            s = shimmer_measures(t)
            assert j.ddp == pytest.approx(3.0 * j.rap, rel=1e-12)
            assert s.dda == pytest.approx(3.0 * s.apq3, rel=1e-12)

    def test_too_few_periods_gives_none(self):
        for n_pulses in (0, 1, 2, 3):  # 3 pulses = 2 periods, still < 3
            t = train(times=np.arange(n_pulses) * 0.01)
            j = jitter_measures(t)
            assert j.local is None and j.local_abs is None
            assert j.rap is None and j.ppq5 is None and j.ddp is None

    def test_ppq5_needs_five_periods(self):
        j4 = jitter_measures(train(periods=[0.01, 0.011, 0.009, 0.01]))
        assert j4.ppq5 is None
        j5 = jitter_measures(train(periods=[0.01, 0.011, 0.009, 0.01, 0.0105]))
        assert j5.ppq5 is not None

    def test_periods_never_span_runs(self):
        # Two runs of 3 pulses each: the 0.5 s gap between runs must not
        # appear as a period.
        times = np.array([0.0, 0.01, 0.02, 0.52, 0.53, 0.54])
        run_ids = np.array([0, 0, 0, 1, 1, 1])
        j = jitter_measures(train(times=times, run_ids=run_ids))
        assert j.local_abs == pytest.approx(0.0, abs=1e-15)
        assert j.local == pytest.approx(0.0, abs=1e-15)

    def test_jitter_increases_with_period_noise(self):
        rng = np.random.default_rng(71)
        base = np.full(200, 0.01)
        values = []
        for sd in (0.0, 1e-5, 3e-5, 1e-4, 3e-4):
            periods = base + sd * rng.standard_normal(200)
            values.append(jitter_measures(train(periods=periods)).local)
        assert all(b > a for a, b in zip(values, values[1:]))


class TestShimmer:
    def test_constant_amplitudes(self):
        s = shimmer_measures(train(periods=[0.01] * 12, amps=np.full(13, 0.5)))
        assert s.local == pytest.approx(0.0, abs=1e-15)
        assert s.apq3 == pytest.approx(0.0, abs=1e-15)
        assert s.apq5 == pytest.approx(0.0, abs=1e-15)
        assert s.apq11 == pytest.approx(0.0, abs=1e-15)
        assert s.dda == pytest.approx(0.0, abs=1e-15)

    def test_hand_values_three_amps(self):
        # amplitudes 0.4, 0.5, 0.6: mean 0.5, adjacent diffs both 0.1,
        # so local = 0.2; the single apq3 window deviation is 0.
        s = shimmer_measures(train(times=[0.0, 0.01, 0.02], amps=[0.4, 0.5, 0.6]))
        assert s.local == pytest.approx(0.2, abs=1e-12)
        assert s.apq3 == pytest.approx(0.0, abs=1e-15)
        assert s.dda == pytest.approx(0.0, abs=1e-15)
        assert s.apq5 is None
        assert s.apq11 is None

    def test_window_thresholds(self):
        for n, has5, has11 in ((4, False, False), (5, True, False), (10, True, False), (11, True, True)):
            rng = np.random.default_rng(n)
            amps = 0.5 + 0.01 * rng.standard_normal(n)
            s = shimmer_measures(train(times=np.arange(n) * 0.01, amps=amps))
            assert (s.apq5 is not None) == has5
            assert (s.apq11 is not None) == has11
            assert s.local is not None

    def test_too_few_pulses_gives_none(self):
        s = shimmer_measures(train(times=[0.0, 0.01], amps=[0.5, 0.5]))
        assert s.local is None and s.apq3 is None and s.dda is None

    def test_zero_mean_amplitude_gives_none(self):
        s = shimmer_measures(train(times=[0.0, 0.01, 0.02], amps=[0.0, 0.0, 0.0]))
        assert s.local is None and s.apq3 is None

    def test_diffs_never_span_runs(self):
        # amplitude jump between runs is invisible to shimmer
        times = np.array([0.0, 0.01, 0.02, 0.5, 0.51, 0.52])
        amps = np.array([0.2, 0.2, 0.2, 0.8, 0.8, 0.8])
        run_ids = np.array([0, 0, 0, 1, 1, 1])
        s = shimmer_measures(train(times=times, amps=amps, run_ids=run_ids))
        assert s.local == pytest.approx(0.0, abs=1e-15)


class TestHnr:
    def test_hand_value_high_periodicity(self):
        # r = 0.99 -> 10 log10(0.99/0.01) = 10 log10(99)
        value = hnr(fake_track([0.99, 0.99, 0.99]))
        assert value == pytest.approx(10.0 * math.log10(99.0), abs=1e-12)
        assert value == pytest.approx(19.956351945975497, abs=1e-12)

    def test_hand_value_half(self):
        assert hnr(fake_track([0.5, 0.5])) == pytest.approx(0.0, abs=1e-12)

    def test_clamped_at_extremes(self):
        extreme = hnr(fake_track([1.0]))
        assert extreme == pytest.approx(10.0 * math.log10((1 - 1e-6) / 1e-6), abs=1e-9)
        assert extreme < 61.0
        low = hnr(fake_track([1e-12], voiced=np.array([True])))
        assert low == pytest.approx(-extreme, abs=1e-6)

    def test_mean_over_voiced_frames_only(self):
        peaks = np.array([0.99, 0.5, 0.1])
        voiced = np.array([True, True, False])
        value = hnr(fake_track(peaks, voiced=voiced))
        expected = (10.0 * math.log10(99.0) + 0.0) / 2.0
        assert value == pytest.approx(expected, abs=1e-12)

    def test_no_voiced_frames_gives_none(self):
        assert hnr(fake_track([0.1, 0.2], voiced=np.array([False, False]))) is None


class TestPerturbationSet:
    def test_assembles_all_eleven_fields(self):
        rng = np.random.default_rng(72)
        periods = 0.01 + 1e-4 * rng.standard_normal(30)
        amps = 0.5 + 0.01 * rng.standard_normal(31)
        t = train(periods=periods, amps=amps)
        track = fake_track(np.full(20, 0.95))
        p = perturbation_measures(track, t)
        j = jitter_measures(t)
        s = shimmer_measures(t)
        assert p.hnr_db == hnr(track)
        assert p.jitter_local == j.local
        assert p.jitter_local_abs == j.local_abs
        assert p.jitter_rap == j.rap
        assert p.jitter_ppq5 == j.ppq5
        assert p.jitter_ddp == j.ddp
        assert p.shimmer_local == s.local
        assert p.shimmer_apq3 == s.apq3
        assert p.shimmer_apq5 == s.apq5
        assert p.shimmer_apq11 == s.apq11
        assert p.shimmer_dda == s.dda

    def test_clean_sine_end_to_end(self):
        seg = make_segment(sine(140.0, 1.0))
        track = track_pitch(seg, floor=75.0, ceiling=600.0)
        pulses = extract_pulses(seg, track)
        p = perturbation_measures(track, pulses)
        assert p.jitter_local is not None and p.jitter_local < 0.001
        assert p.shimmer_local is not None and p.shimmer_local < 0.005
        assert p.hnr_db is not None and p.hnr_db > 30.0
