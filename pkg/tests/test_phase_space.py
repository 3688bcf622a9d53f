"""Windowed spectra, band entropy, and the entropy-change audits."""

import numpy as np
import pytest

from naive import naive_band_entropy, naive_spectrogram
from phasegate.numerics import derive_seed, make_rng
from phasegate.phase_space import (
    DeltaSReport,
    EmptyAuditError,
    HusimiParams,
    ScaleEntry,
    band_entropy,
    band_normalize,
    comparative_advantage,
    default_scale_ladder,
    delta_s,
    husimi,
    multiscale_delta_s,
)


class TestHusimiParams:
    def test_hop_must_not_exceed_win(self):
        with pytest.raises(ValueError, match="hop 9 exceeds win 8"):
            HusimiParams(win=8, sigma=2.0, hop=9)

    @pytest.mark.parametrize("kwargs", [
        dict(win=0, sigma=1.0, hop=1),
        dict(win=8, sigma=0.0, hop=1),
        dict(win=8, sigma=-1.0, hop=1),
        dict(win=8, sigma=2.0, hop=0),
    ])
    def test_rejects_degenerate_values(self, kwargs):
        with pytest.raises(ValueError):
            HusimiParams(**kwargs)

    def test_band_must_match_window_and_keep_a_bin(self):
        with pytest.raises(ValueError):
            HusimiParams(win=4, sigma=1.0, hop=1, band=np.ones((3, 3), bool))
        with pytest.raises(ValueError):
            HusimiParams(win=4, sigma=1.0, hop=1, band=np.zeros((4, 4), bool))


class TestHusimiDensity:
    def test_matches_walked_definition(self):
        for i in range(5):
            rng = make_rng(derive_seed(200, i))
            rows = int(rng.integers(10, 25))
            cols = int(rng.integers(10, 25))
            win = int(rng.integers(4, 7))
            hop = int(rng.integers(2, win + 1))
            sigma = float(rng.uniform(win / 6.0, win / 2.0))
            f = rng.standard_normal((rows, cols)) \
                + 1j * rng.standard_normal((rows, cols))
            dens = husimi(f, HusimiParams(win, sigma, hop))
            spectra, positions = naive_spectrogram(f, win, sigma, hop)
            np.testing.assert_allclose(dens.spectra, spectra, atol=1e-8)
            np.testing.assert_array_equal(dens.positions, positions)

    def test_real_input_is_accepted(self):
        f = make_rng(4).standard_normal((12, 12))
        dens = husimi(f, HusimiParams(4, 1.0, 4))
        spectra, _ = naive_spectrogram(f, 4, 1.0, 4)
        np.testing.assert_allclose(dens.spectra, spectra, atol=1e-8)

    def test_windows_tile_from_origin_and_stay_inside(self):
        f = np.ones((10, 10))
        dens = husimi(f, HusimiParams(4, 1.0, 3))
        tops = sorted(set(dens.positions[:, 0].tolist()))
        assert tops == [0, 3, 6]
        assert dens.positions[:, 0].max() + 4 <= 10

    def test_energies_are_band_row_sums(self):
        f = make_rng(5).standard_normal((16, 16))
        dens = husimi(f, HusimiParams(8, 2.0, 4))
        np.testing.assert_allclose(dens.energies, dens.spectra.sum(axis=1),
                                   atol=1e-12)

    def test_band_restriction_selects_bins(self):
        f = make_rng(6).standard_normal((12, 12)) \
            + 1j * make_rng(7).standard_normal((12, 12))
        band = np.zeros((4, 4), dtype=bool)
        band[1:3, 1:3] = True
        full = husimi(f, HusimiParams(4, 1.2, 2))
        part = husimi(f, HusimiParams(4, 1.2, 2, band=band))
        np.testing.assert_allclose(part.spectra,
                                   full.spectra[:, band.ravel()], atol=1e-12)

    def test_field_smaller_than_window_is_rejected(self):
        with pytest.raises(ValueError):
            husimi(np.ones((3, 3)), HusimiParams(4, 1.0, 1))


class TestBandNormalize:
    def test_rows_become_probability_vectors(self):
        f = make_rng(8).standard_normal((12, 12))
        norm = band_normalize(husimi(f, HusimiParams(4, 1.0, 2)))
        assert norm.normalized
        kept = ~norm.excluded
        np.testing.assert_allclose(norm.spectra[kept].sum(axis=1), 1.0,
                                   atol=1e-12)

    def test_low_energy_windows_are_excluded_and_zeroed(self):
        f = np.zeros((8, 8))
        f[0, 0] = 1.0
        dens = husimi(f, HusimiParams(4, 4.0, 4))
        # the three windows away from the corner carry no energy at all
        norm = band_normalize(dens)
        assert norm.excluded.sum() == 3
        np.testing.assert_array_equal(norm.spectra[norm.excluded], 0.0)

    def test_floor_is_inclusive_and_tunable(self):
        f = make_rng(9).standard_normal((8, 8))
        dens = husimi(f, HusimiParams(4, 1.0, 4))
        floor = float(dens.energies.max())
        norm = band_normalize(dens, energy_floor=floor)
        assert norm.excluded.all()

    def test_negative_floor_is_rejected(self):
        f = make_rng(10).standard_normal((8, 8))
        with pytest.raises(ValueError):
            band_normalize(husimi(f, HusimiParams(4, 1.0, 4)),
                           energy_floor=-1.0)


class TestBandEntropy:
    def test_matches_direct_formula_both_weightings(self):
        rng = make_rng(11)
        f = rng.standard_normal((20, 20)) + 1j * rng.standard_normal((20, 20))
        dens = husimi(f, HusimiParams(5, 1.5, 3))
        norm = band_normalize(dens)
        for weighting in ("uniform", "energy"):
            got = band_entropy(norm, weighting=weighting).global_entropy
            want = naive_band_entropy(dens.spectra, weighting)
            assert abs(got - want) < 1e-8

    def test_entropy_bounds(self):
        rng = make_rng(12)
        f = rng.standard_normal((24, 24))
        res = band_entropy(band_normalize(husimi(f, HusimiParams(6, 2.0, 3))))
        assert 0.0 <= res.global_entropy <= np.log(36) + 1e-12
        assert res.per_window.min() >= 0.0

    def test_point_spectrum_has_zero_entropy(self):
        # constant field, 1x1 windows: each spectrum is a single bin
        f = np.full((6, 6), 2.0)
        res = band_entropy(band_normalize(husimi(f, HusimiParams(1, 1.0, 1))))
        assert abs(res.global_entropy) < 1e-12

    def test_requires_normalized_density(self):
        f = make_rng(13).standard_normal((8, 8))
        with pytest.raises(ValueError, match="normaliz"):
            band_entropy(husimi(f, HusimiParams(4, 1.0, 4)))

    def test_unknown_weighting_is_rejected(self):
        f = make_rng(14).standard_normal((8, 8))
        norm = band_normalize(husimi(f, HusimiParams(4, 1.0, 4)))
        with pytest.raises(ValueError):
            band_entropy(norm, weighting="median")

    def test_all_windows_excluded_raises(self):
        norm = band_normalize(husimi(np.zeros((8, 8)),
                                     HusimiParams(4, 1.0, 4)))
        with pytest.raises(EmptyAuditError):
            band_entropy(norm)

    def test_excluded_count_is_reported(self):
        f = np.zeros((8, 8))
        f[0, 0] = 1.0
        norm = band_normalize(husimi(f, HusimiParams(4, 4.0, 4)))
        assert band_entropy(norm).n_excluded == 3


class TestDeltaS:
    def test_identical_fields_give_zero(self):
        f = make_rng(15).standard_normal((16, 16))
        rep = delta_s(f, f, HusimiParams(4, 1.0, 2))
        assert rep.delta == 0.0
        assert rep.abs_delta == 0.0
        assert rep.s_ref == rep.s_acq

    def test_abs_delta_mirrors_delta(self):
        rng = make_rng(16)
        ref = rng.standard_normal((16, 16))
        acq = ref * (rng.random((16, 16)) > 0.4)
        rep = delta_s(ref, acq, HusimiParams(4, 1.0, 2))
        assert rep.abs_delta == abs(rep.delta)
        assert rep.params == HusimiParams(4, 1.0, 2)

    @pytest.mark.parametrize("weighting", ["uniform", "energy"])
    def test_invariant_to_common_rescaling(self, weighting):
        rng = make_rng(17)
        ref = rng.standard_normal((20, 20))
        acq = ref * (rng.random((20, 20)) > 0.3)
        p = HusimiParams(5, 1.5, 2)
        a = delta_s(ref, acq, p, weighting=weighting)
        b = delta_s(2.0 * ref, 2.0 * acq, p, weighting=weighting)
        assert abs(a.delta - b.delta) < 1e-10

    def test_uniform_entropy_is_translation_invariant_under_full_tiling(self):
        # stride equal to the window on a commensurate grid walks the same
        # window multiset after a circular shift by one stride
        rng = make_rng(18)
        f = rng.standard_normal((32, 32))
        p = HusimiParams(8, 8 / 3.0, 8)
        s0 = band_entropy(band_normalize(husimi(f, p))).global_entropy
        s1 = band_entropy(band_normalize(husimi(np.roll(f, 8, axis=0),
                                                p))).global_entropy
        assert abs(s0 - s1) < 1e-10

    def test_report_dataclass_shape(self):
        rng = make_rng(19)
        ref = rng.standard_normal((16, 16))
        rep = delta_s(ref, 0.5 * ref, HusimiParams(4, 1.0, 4))
        assert isinstance(rep, DeltaSReport)
        assert rep.scales is None
        assert rep.weighting == "uniform"
        assert rep.n_excluded_ref == 0


class TestMultiscale:
    def test_ladder_is_clipped_to_the_grid(self):
        wins = [w for w, _, _ in default_scale_ladder((100, 100))]
        assert wins == [32, 48, 64, 96]
        wins = [w for w, _, _ in default_scale_ladder((256, 256))]
        assert wins == [32, 48, 64, 96, 128, 192, 256]
        wins = [w for w, _, _ in default_scale_ladder((300, 40))]
        assert wins == [32]

    def test_ladder_carries_sigma_and_stride(self):
        for win, sigma, hop in default_scale_ladder((128, 128),
                                                    hop_ratio=0.5):
            assert sigma == win / 6.0
            assert hop == max(1, round(0.5 * win))

    def test_report_carries_per_scale_entries(self):
        rng = make_rng(20)
        ref = rng.standard_normal((100, 100))
        acq = ref * (rng.random((100, 100)) > 0.3)
        rep = multiscale_delta_s(ref, acq)
        assert rep.params is None
        assert tuple(e.win for e in rep.scales) == (32, 48, 64, 96)
        for e in rep.scales:
            assert isinstance(e, ScaleEntry)
            assert e.sigma == e.win / 6.0
            assert e.hop == round(e.win)
        finite_ref = [e.s_ref for e in rep.scales]
        assert abs(np.mean(finite_ref) - rep.s_ref) < 1e-12

    def test_hop_ratio_scales_the_stride(self):
        rng = make_rng(21)
        ref = rng.standard_normal((64, 64))
        rep = multiscale_delta_s(ref, ref, hop_ratio=0.5)
        assert all(e.hop == round(0.5 * e.win) for e in rep.scales)

    def test_dropped_scale_becomes_nan_but_audit_survives(self):
        # a single corner spike clears the energy floor in a 4-tap window
        # but not in a wide 8-tap window, so the coarse scale drops out
        ref = make_rng(22).standard_normal((8, 8))
        spike = np.zeros((8, 8))
        spike[0, 0] = 1.0
        rep = multiscale_delta_s(ref, spike,
                                 scales=[(4, 4 / 6.0, 4), (8, 8 / 6.0, 8)])
        assert np.isnan(rep.scales[1].s_acq)
        assert np.isfinite(rep.scales[1].s_ref)
        assert np.isfinite(rep.delta)
        assert rep.s_acq == rep.scales[0].s_acq

    def test_all_scales_dropped_raises(self):
        ref = make_rng(23).standard_normal((64, 64))
        with pytest.raises(EmptyAuditError):
            multiscale_delta_s(ref, np.zeros((64, 64)))

    def test_grid_too_small_for_any_scale_raises(self):
        with pytest.raises(ValueError, match="smaller than the smallest"):
            multiscale_delta_s(np.ones((16, 16)), np.ones((16, 16)))

    def test_empty_scale_list_is_rejected(self):
        with pytest.raises(ValueError):
            multiscale_delta_s(np.ones((64, 64)), np.ones((64, 64)),
                               scales=[])

    def test_default_weighting_is_energy(self):
        rng = make_rng(24)
        ref = rng.standard_normal((64, 64))
        rep = multiscale_delta_s(ref, ref)
        assert rep.weighting == "energy"
        assert rep.delta == 0.0


class TestComparativeAdvantage:
    def test_paired_difference(self):
        a = np.array([1.0, 2.0, 3.0])
        b = np.array([0.5, 2.5, 2.0])
        np.testing.assert_allclose(comparative_advantage(a, b),
                                   np.array([0.5, -0.5, 1.0]))

    def test_lower_better_flips_the_sign(self):
        a = np.array([1.0, 2.0])
        b = np.array([0.0, 3.0])
        np.testing.assert_allclose(
            comparative_advantage(a, b, lower_better=False),
            -comparative_advantage(a, b))

    def test_normalize_rescales_the_pool(self):
        adv = comparative_advantage([0.0, 4.0], [4.0, 0.0], normalize=True)
        np.testing.assert_allclose(adv, [-1.0, 1.0])

    def test_length_mismatch_is_rejected(self):
        with pytest.raises(ValueError):
            comparative_advantage([1.0, 2.0], [1.0])

    def test_empty_lists_are_rejected(self):
        with pytest.raises(ValueError):
            comparative_advantage([], [])
