"""LPC formant tracking and vocal-tract-length estimators."""

import math

import numpy as np
import pytest

from conftest import RATE, make_segment, resonant_vowel, sine
from voxtrait.formants import (
    PoolStats,
    compute_pool_stats,
    formant_means,
    levinson_durbin,
    resample_to,
    track_formants,
    vtl_estimators,
)
from voxtrait.pitch import track_pitch

VOWEL_FORMANTS = (700.0, 1220.0, 2600.0, 3550.0)
# Narrow, speech-plausible bandwidths keep the resonances well defined:
# with a 120 Hz source the spectrum only has lines every 120 Hz, and
# broad resonances sampled off-peak bias any pole estimate upward.
VOWEL_BANDWIDTHS = (50.0, 60.0, 90.0, 120.0)


def unit_pool():
    return PoolStats(means=np.zeros(4), sds=np.ones(4))


class TestLevinsonDurbin:
    def test_matches_toeplitz_normal_equations(self):
        rng = np.random.default_rng(80)
        for _ in range(20):
            x = rng.standard_normal(400)
            order = int(rng.integers(2, 12))
            r = np.array([x[: x.size - k] @ x[k:] for k in range(order + 1)])
            solved = levinson_durbin(r, order)
            assert solved is not None
            a, e = solved
            # direct solve of the Toeplitz system R a[1:] = -r[1:]
            R = np.empty((order, order))
            for i in range(order):
                for j in range(order):
                    R[i, j] = r[abs(i - j)]
            direct = np.linalg.solve(R, -r[1 : order + 1])
            assert np.allclose(a[1:], direct, atol=1e-8)
            assert a[0] == 1.0
            # prediction-error energy: e = r[0] + sum_k a[k] r[k]
            assert e == pytest.approx(float(r[0] + r[1:] @ a[1:]), rel=1e-8)
            assert e > 0.0

    def test_nonpositive_energy_returns_none(self):
        assert levinson_durbin(np.zeros(5), 4) is None
        assert levinson_durbin(np.array([-1.0, 0.0, 0.0]), 2) is None

    def test_known_ar1_process(self):
        # For r[k] = rho^k the order-1 LPC coefficient is exactly -rho.
        rho = 0.7
        r = rho ** np.arange(4)
        a, e = levinson_durbin(r, 1)
        assert a[1] == pytest.approx(-rho, abs=1e-12)
        assert e == pytest.approx(1.0 - rho * rho, abs=1e-12)


class TestResample:
    def test_identity_at_same_rate(self):
        x = np.arange(100.0)
        assert np.array_equal(resample_to(x, 16000, 16000), x)

    def test_length_scales_by_ratio(self):
        x = np.zeros(16000)
        y = resample_to(x, 16000, 10000)
        assert y.size == 10000

    def test_tone_survives_resampling(self):
        x = sine(440.0, 1.0)
        y = resample_to(x, RATE, 10000)
        spec = np.abs(np.fft.rfft(y * np.hanning(y.size)))
        freqs = np.fft.rfftfreq(y.size, 1.0 / 10000)
        assert freqs[int(np.argmax(spec))] == pytest.approx(440.0, abs=2.0)


class TestTrackFormants:
    def test_synthetic_vowel_within_five_percent(self):
        seg = make_segment(
            resonant_vowel(120.0, VOWEL_FORMANTS, VOWEL_BANDWIDTHS, 1.0)
        )
        track = track_pitch(seg, floor=75.0, ceiling=600.0)
        ft = track_formants(seg, track, analysis_rate=10000)
        means = formant_means(ft)
        assert means is not None
        for measured, true in zip(means, VOWEL_FORMANTS):
            assert measured == pytest.approx(true, rel=0.05)

    def test_formants_sorted_per_frame(self):
        seg = make_segment(
            resonant_vowel(120.0, VOWEL_FORMANTS, VOWEL_BANDWIDTHS, 1.0)
        )
        track = track_pitch(seg, floor=75.0, ceiling=600.0)
        ft = track_formants(seg, track, analysis_rate=10000)
        assert ft.n_frames > 0
        assert ft.formants_hz.shape[1] == 4
        diffs = np.diff(ft.formants_hz, axis=1)
        assert (diffs > 0).all()

    def test_unvoiced_noise_yields_no_frames(self):
        rng = np.random.default_rng(81)
        seg = make_segment(0.3 * rng.standard_normal(RATE))
        track = track_pitch(seg, floor=75.0, ceiling=600.0)
        ft = track_formants(seg, track, analysis_rate=10000)
        assert ft.n_frames <= track.voiced_flags.sum() + 1
        assert ft.formants_hz.shape == (ft.n_frames, 4)
        assert formant_means(ft) is None or ft.n_frames >= 5

    def test_diagnostics_account_for_frames(self):
        seg = make_segment(
            resonant_vowel(120.0, VOWEL_FORMANTS, VOWEL_BANDWIDTHS, 1.0)
        )
        track = track_pitch(seg, floor=75.0, ceiling=600.0)
        ft = track_formants(seg, track, analysis_rate=10000)
        d = ft.diagnostics
        assert (
            d["accepted_frames"] + d["skipped_unstable"] + d["skipped_few_candidates"]
            == d["voiced_frames"]
        )
        assert d["accepted_frames"] == ft.n_frames

    def test_frequencies_inside_analysis_band(self):
        seg = make_segment(
            resonant_vowel(120.0, VOWEL_FORMANTS, VOWEL_BANDWIDTHS, 1.0)
        )
        track = track_pitch(seg, floor=75.0, ceiling=600.0)
        ft = track_formants(seg, track, analysis_rate=10000)
        assert (ft.formants_hz > 90.0).all()
        assert (ft.formants_hz < 5000.0 - 50.0).all()


class TestFormantMeans:
    def make_track(self, n_frames):
        rows = np.tile(np.array(VOWEL_FORMANTS), (n_frames, 1))
        from voxtrait.formants import FormantTrack

        return FormantTrack(
            frame_times=np.arange(n_frames) * 0.01,
            formants_hz=rows,
            analysis_rate=10000,
        )

    def test_none_below_five_frames(self):
        for n in range(5):
            assert formant_means(self.make_track(n)) is None

    def test_mean_of_constant_frames(self):
        means = formant_means(self.make_track(5))
        assert means == pytest.approx(VOWEL_FORMANTS)

    def test_arithmetic_mean(self):
        from voxtrait.formants import FormantTrack

        rows = np.array([[500.0, 1500, 2500, 3500]] * 3 + [[700.0, 1700, 2700, 3700]] * 3)
        ft = FormantTrack(
            frame_times=np.arange(6) * 0.01, formants_hz=rows, analysis_rate=10000
        )
        assert formant_means(ft) == pytest.approx((600.0, 1600.0, 2600.0, 3600.0))


class TestPoolStats:
    def test_population_moments(self):
        rows = [(500.0, 1500.0, 2500.0, 3500.0), (700.0, 1700.0, 2700.0, 3700.0)]
        pool = compute_pool_stats(rows)
        assert pool.means == pytest.approx([600.0, 1600.0, 2600.0, 3600.0])
        # population SD of {500, 700} is 100
        assert pool.sds == pytest.approx([100.0, 100.0, 100.0, 100.0])

    def test_needs_two_rows(self):
        with pytest.raises(ValueError):
            compute_pool_stats([(500.0, 1500.0, 2500.0, 3500.0)])

    def test_zero_variance_warns(self):
        rows = [(500.0, 1500.0, 2500.0, 3500.0)] * 3
        with pytest.warns(UserWarning, match="zero-variance"):
            compute_pool_stats(rows)


class TestVtlEstimators:
    def test_neutral_tube_oracle(self):
        # Uniform 17.5 cm quarter-wave tube: formants 500, 1500, 2500,
        # 3500 Hz.  fdisp = 3000/3 = 1000; avg = 2000;
        # mff = (500*1500*2500*3500)^(1/4) = (6.5625e12)^0.25;
        # fitch_vtl = 17.5 exactly; delta_f = 1000 exactly.
        F = (500.0, 1500.0, 2500.0, 3500.0)
        est = vtl_estimators(F, unit_pool())
        assert est.fdisp == pytest.approx(1000.0, abs=1e-9)
        assert est.avg_formant == pytest.approx(2000.0, abs=1e-9)
        assert est.mff == pytest.approx(6.5625e12 ** 0.25, rel=1e-12)
        assert est.mff == pytest.approx(1600.5429, abs=5e-4)
        assert est.fitch_vtl == pytest.approx(17.5, abs=1e-9)
        assert est.delta_f == pytest.approx(1000.0, abs=1e-9)

    def test_pf_zero_at_pool_mean(self):
        F = (600.0, 1600.0, 2600.0, 3600.0)
        pool = PoolStats(means=np.array(F), sds=np.array([100.0, 120.0, 140.0, 160.0]))
        assert vtl_estimators(F, pool).pf == pytest.approx(0.0, abs=1e-12)

    def test_pf_one_when_one_sd_above(self):
        pool = PoolStats(
            means=np.array([600.0, 1600.0, 2600.0, 3600.0]),
            sds=np.array([100.0, 120.0, 140.0, 160.0]),
        )
        F = tuple(pool.means + pool.sds)
        assert vtl_estimators(F, pool).pf == pytest.approx(1.0, abs=1e-12)

    def test_zero_sd_pool_contributes_zero(self):
        pool = PoolStats(
            means=np.array([600.0, 1600.0, 2600.0, 3600.0]),
            sds=np.array([0.0, 120.0, 140.0, 160.0]),
        )
        F = (700.0, 1600.0, 2600.0, 3600.0)
        assert vtl_estimators(F, pool).pf == pytest.approx(0.0, abs=1e-12)

    def test_scaling_homogeneity(self):
        # Doubling all formants doubles the Hz-valued estimators and
        # halves the tube length.
        F = (550.0, 1650.0, 2750.0, 3850.0)
        base = vtl_estimators(F, unit_pool())
        double = vtl_estimators(tuple(2 * f for f in F), unit_pool())
        assert double.fdisp == pytest.approx(2 * base.fdisp, rel=1e-12)
        assert double.avg_formant == pytest.approx(2 * base.avg_formant, rel=1e-12)
        assert double.mff == pytest.approx(2 * base.mff, rel=1e-12)
        assert double.delta_f == pytest.approx(2 * base.delta_f, rel=1e-12)
        assert double.fitch_vtl == pytest.approx(base.fitch_vtl / 2, rel=1e-12)

    def test_delta_f_recovers_tube_spacing(self):
        # For F_i proportional to (2i-1)/2 the regression slope recovers
        # the proportionality constant exactly, regardless of noise-free
        # scale.
        rng = np.random.default_rng(82)
        for _ in range(20):
            spacing = float(rng.uniform(800.0, 1200.0))
            F = tuple(spacing * (2 * i - 1) / 2.0 for i in range(1, 5))
            est = vtl_estimators(F, unit_pool())
            assert est.delta_f == pytest.approx(spacing, rel=1e-12)

    def test_speed_of_sound_parameter(self):
        F = (500.0, 1500.0, 2500.0, 3500.0)
        est = vtl_estimators(F, unit_pool(), speed_of_sound=34000.0)
        assert est.fitch_vtl == pytest.approx(17.0, abs=1e-9)

    def test_nonpositive_formant_rejected(self):
        with pytest.raises(ValueError):
            vtl_estimators((0.0, 1500.0, 2500.0, 3500.0), unit_pool())
        with pytest.raises(ValueError):
            vtl_estimators((-500.0, 1500.0, 2500.0, 3500.0), unit_pool())
