"""Pitch tracking and pulse extraction on synthetic signals."""

import numpy as np
import pytest

from conftest import RATE, impulse_train, make_segment, sawtooth, sine
from voxtrait.pitch import PitchTrack, extract_pulses, track_pitch


def voiced_f0(track: PitchTrack) -> np.ndarray:
    return track.f0_hz[track.voiced_flags]


class TestTrackPitch:
    @pytest.mark.parametrize("freq", [90.0, 120.0, 150.0, 220.0, 300.0])
    def test_sine_frequency_recovered(self, freq):
        seg = make_segment(sine(freq, 1.0))
        track = track_pitch(seg, floor=75.0, ceiling=600.0)
        assert track.voiced_flags.all()
        assert np.median(voiced_f0(track)) == pytest.approx(freq, rel=0.01)

    def test_sawtooth_frequency_recovered(self):
        seg = make_segment(sawtooth(130.0, 1.0))
        track = track_pitch(seg, floor=75.0, ceiling=600.0)
        assert track.voiced_flags.mean() > 0.9
        assert np.median(voiced_f0(track)) == pytest.approx(130.0, rel=0.01)

    def test_white_noise_mostly_unvoiced(self):
        rng = np.random.default_rng(60)
        seg = make_segment(0.3 * rng.standard_normal(RATE))
        track = track_pitch(seg, floor=75.0, ceiling=600.0)
        assert track.voiced_flags.mean() < 0.1

    def test_silence_unvoiced_everywhere(self):
        seg = make_segment(np.zeros(RATE))
        track = track_pitch(seg, floor=75.0, ceiling=600.0)
        assert not track.voiced_flags.any()
        assert (track.f0_hz == 0.0).all()
        assert (track.autocorr_peak == 0.0).all()

    def test_unvoiced_frames_have_zero_f0(self):
        rng = np.random.default_rng(61)
        samples = np.concatenate([sine(150.0, 0.5), 0.3 * rng.standard_normal(RATE // 2)])
        track = track_pitch(make_segment(samples), floor=75.0, ceiling=600.0)
        assert (track.f0_hz[~track.voiced_flags] == 0.0).all()
        assert (track.f0_hz[track.voiced_flags] > 0.0).all()

    def test_too_short_segment_names_minimum(self):
        seg = make_segment(sine(150.0, 0.02))
        with pytest.raises(ValueError, match="at least 0.040 s"):
            track_pitch(seg, floor=75.0, ceiling=600.0)

    def test_bad_range_rejected(self):
        seg = make_segment(sine(150.0, 1.0))
        with pytest.raises(ValueError, match="floor < ceiling"):
            track_pitch(seg, floor=300.0, ceiling=100.0)
        with pytest.raises(ValueError, match="floor < ceiling"):
            track_pitch(seg, floor=-10.0, ceiling=100.0)

    def test_time_shift_equivariance(self):
        # A quarter-period phase shift must not move the F0 estimate.
        base = sine(140.0, 1.0)
        shifted = 0.6 * np.sin(
            2.0 * np.pi * 140.0 * (np.arange(RATE) / RATE) + np.pi / 2.0
        )
        f_base = np.median(voiced_f0(track_pitch(make_segment(base), 75.0, 600.0)))
        f_shift = np.median(voiced_f0(track_pitch(make_segment(shifted), 75.0, 600.0)))
        assert f_shift == pytest.approx(f_base, rel=0.001)

    def test_amplitude_invariance(self):
        loud = sine(180.0, 1.0)
        quiet = 0.25 * loud
        t_loud = track_pitch(make_segment(loud), 75.0, 600.0)
        t_quiet = track_pitch(make_segment(quiet), 75.0, 600.0)
        assert np.array_equal(t_loud.voiced_flags, t_quiet.voiced_flags)
        assert np.allclose(t_loud.f0_hz, t_quiet.f0_hz)

    def test_estimates_respect_search_range(self):
        seg = make_segment(sine(150.0, 1.0))
        track = track_pitch(seg, floor=75.0, ceiling=600.0)
        f = voiced_f0(track)
        assert (f >= 75.0).all() and (f <= 600.0).all()

    def test_frame_grid_metadata(self):
        seg = make_segment(sine(150.0, 1.0))
        track = track_pitch(seg, floor=75.0, ceiling=600.0)
        assert track.window_s == pytest.approx(3.0 / 75.0, rel=1e-6)
        assert track.hop_s == pytest.approx(0.010, rel=1e-6)
        hops = np.diff(track.frame_times)
        assert np.allclose(hops, track.hop_s, atol=1e-9)
        assert track.n_frames == track.f0_hz.size


class TestExtractPulses:
    def test_impulse_train_pulse_spacing(self):
        # 100 Hz impulses at 16 kHz: one pulse every 10 ms, located to
        # within one sample (62.5 us).
        seg = make_segment(impulse_train(100.0, 1.0))
        track = track_pitch(seg, floor=75.0, ceiling=600.0)
        pulses = extract_pulses(seg, track)
        assert pulses.n_pulses > 50
        intervals = np.diff(pulses.pulse_times)
        assert np.abs(intervals - 0.010).max() <= 1.0 / RATE + 1e-12

    def test_sine_interval_regularity(self):
        seg = make_segment(sine(125.0, 1.0))
        track = track_pitch(seg, floor=75.0, ceiling=600.0)
        pulses = extract_pulses(seg, track)
        intervals = np.diff(pulses.pulse_times)
        assert intervals.size > 50
        cov = intervals.std() / intervals.mean()
        assert cov < 0.005
        assert intervals.mean() == pytest.approx(1.0 / 125.0, rel=0.01)

    def test_pulse_amplitudes_near_peak(self):
        seg = make_segment(sine(125.0, 1.0, amp=0.6))
        track = track_pitch(seg, floor=75.0, ceiling=600.0)
        pulses = extract_pulses(seg, track)
        assert np.abs(pulses.peak_amplitudes - 0.6).max() < 0.01

    def test_unvoiced_signal_gives_empty_train(self):
        rng = np.random.default_rng(62)
        seg = make_segment(0.3 * rng.standard_normal(RATE))
        track = track_pitch(seg, floor=75.0, ceiling=600.0)
        pulses = extract_pulses(seg, track)
        assert pulses.n_pulses == 0
        assert pulses.pulse_times.size == 0
        assert pulses.run_ids.size == 0

    def test_run_ids_track_voiced_runs(self):
        rng = np.random.default_rng(63)
        samples = np.concatenate(
            [
                sine(150.0, 0.6),
                0.02 * rng.standard_normal(int(0.4 * RATE)),
                sine(150.0, 0.6),
            ]
        )
        seg = make_segment(samples)
        track = track_pitch(seg, floor=75.0, ceiling=600.0)
        pulses = extract_pulses(seg, track)
        ids = np.unique(pulses.run_ids)
        assert ids.size >= 2
        # run ids are non-decreasing along the pulse sequence
        assert (np.diff(pulses.run_ids) >= 0).all()
        # pulses within one run stay strictly increasing in time
        for rid in ids:
            t = pulses.pulse_times[pulses.run_ids == rid]
            assert (np.diff(t) > 0).all()

    def test_pulse_times_within_segment(self):
        seg = make_segment(sine(110.0, 1.0))
        track = track_pitch(seg, floor=75.0, ceiling=600.0)
        pulses = extract_pulses(seg, track)
        assert (pulses.pulse_times >= 0.0).all()
        assert (pulses.pulse_times <= seg.duration_s).all()
