"""Patch, k-space line, and antenna shutoff mask generators."""

import math

import numpy as np
import pytest

from phasegate.masks import (
    AntennaMaskSpec,
    KSpaceMaskSpec,
    Mask,
    PatchMaskSpec,
    antenna_mask,
    apply_mask,
    kspace_mask,
    load_mask,
    patch_mask,
    save_mask,
)
from phasegate.numerics import make_rng


class TestPatchMask:
    def test_periodic_lattice_positions_and_count(self):
        m = patch_mask(PatchMaskSpec(16, 16, 16, geometry="periodic",
                                     interval_k=2))
        assert m.kept.shape == (256, 256)
        assert m.keep_count == 64 * 256
        # patch (0, 0) kept in full, patch (0, 1) dropped in full
        assert m.kept[:16, :16].all()
        assert not m.kept[:16, 16:32].any()
        assert m.kept[32:48, 32:48].all()

    def test_interval_one_keeps_everything(self):
        m = patch_mask(PatchMaskSpec(4, 4, 8, geometry="periodic",
                                     interval_k=1))
        assert m.kept.all()

    def test_random_matches_periodic_budget(self):
        per = patch_mask(PatchMaskSpec(16, 16, 4, geometry="periodic",
                                       interval_k=4))
        rnd = patch_mask(PatchMaskSpec(16, 16, 4, geometry="random",
                                       interval_k=4, seed=3))
        assert rnd.keep_count == per.keep_count == 16 * 16

    def test_random_budget_is_ceiling(self):
        m = patch_mask(PatchMaskSpec(5, 5, 2, geometry="random",
                                     interval_k=3, seed=1))
        assert m.keep_count == math.ceil(25 / 9) * 4

    def test_explicit_budget_wins(self):
        m = patch_mask(PatchMaskSpec(4, 4, 2, geometry="random",
                                     interval_k=2, budget=5, seed=0))
        assert m.keep_count == 5 * 4

    def test_random_keeps_whole_patches(self):
        m = patch_mask(PatchMaskSpec(6, 6, 3, geometry="random",
                                     interval_k=2, seed=9))
        tiles = m.kept.reshape(6, 3, 6, 3).transpose(0, 2, 1, 3)
        flat = tiles.reshape(36, 9)
        assert np.all((flat.sum(axis=1) == 0) | (flat.sum(axis=1) == 9))

    def test_seed_determinism(self):
        spec = PatchMaskSpec(8, 8, 2, geometry="random", interval_k=2,
                             seed=11)
        np.testing.assert_array_equal(patch_mask(spec).kept,
                                      patch_mask(spec).kept)
        other = PatchMaskSpec(8, 8, 2, geometry="random", interval_k=2,
                              seed=12)
        assert not np.array_equal(patch_mask(spec).kept,
                                  patch_mask(other).kept)

    def test_budget_beyond_grid_is_rejected(self):
        with pytest.raises(ValueError, match="budget"):
            patch_mask(PatchMaskSpec(2, 2, 1, geometry="random", budget=5))

    @pytest.mark.parametrize("kwargs", [
        dict(patch_rows=0, patch_cols=4, patch_px=2, geometry="periodic"),
        dict(patch_rows=4, patch_cols=4, patch_px=2, geometry="hex"),
        dict(patch_rows=4, patch_cols=4, patch_px=2, geometry="periodic",
             interval_k=0),
    ])
    def test_spec_validation(self, kwargs):
        with pytest.raises(ValueError):
            PatchMaskSpec(**kwargs)


class TestKSpaceMask:
    @pytest.mark.parametrize("family", ["periodic", "random", "poisson_gap",
                                        "parametric"])
    def test_budget_is_exact(self, family):
        spec = KSpaceMaskSpec(n_lines=256, accel=4, acs=24, family=family,
                              alpha=0.5, beta=2.0, seed=5)
        m = kspace_mask(spec)
        lines = m.kept[0]
        assert int(lines.sum()) == round(256 / 4) == 64
        # every row repeats the same line pattern
        assert np.all(m.kept == lines[None, :])

    @pytest.mark.parametrize("family", ["periodic", "random", "poisson_gap",
                                        "parametric"])
    @pytest.mark.parametrize("seed", [0, 7, 19])
    def test_acs_block_is_always_sampled(self, family, seed):
        spec = KSpaceMaskSpec(n_lines=128, accel=4, acs=16, family=family,
                              alpha=1.0, beta=3.0, seed=seed)
        lines = kspace_mask(spec).kept[0]
        start = 64 - 8
        assert lines[start:start + 16].all()

    def test_acceleration_one_keeps_every_line(self):
        m = kspace_mask(KSpaceMaskSpec(n_lines=64, accel=1, acs=8,
                                       family="random"))
        assert m.kept.all()

    def test_rows_controls_broadcast_height(self):
        m = kspace_mask(KSpaceMaskSpec(n_lines=32, accel=2, acs=4,
                                       family="random", rows=48))
        assert m.kept.shape == (48, 32)

    def test_budget_below_acs_is_rejected(self):
        with pytest.raises(ValueError, match="cannot cover acs"):
            kspace_mask(KSpaceMaskSpec(n_lines=64, accel=8, acs=24,
                                       family="random"))

    def test_seed_determinism(self):
        spec = KSpaceMaskSpec(n_lines=96, accel=3, acs=12, family="random",
                              seed=2)
        np.testing.assert_array_equal(kspace_mask(spec).kept,
                                      kspace_mask(spec).kept)

    def test_periodic_lines_are_evenly_spread(self):
        spec = KSpaceMaskSpec(n_lines=64, accel=4, acs=0, family="periodic")
        lines = np.flatnonzero(kspace_mask(spec).kept[0])
        gaps = np.diff(lines)
        assert len(lines) == 16
        assert gaps.max() - gaps.min() <= 1

    def test_flat_parametric_weights_are_uniform_outside_acs(self):
        # with beta = 0 every outside line is equally likely; aggregate
        # occupancy over many seeds and require 5 sigma agreement
        n, acs = 32, 4
        spec0 = KSpaceMaskSpec(n_lines=n, accel=2, acs=acs,
                               family="parametric", alpha=0.7, beta=0.0)
        center = n // 2
        acs_start = center - acs // 2
        outside = [i for i in range(n)
                   if i < acs_start or i >= acs_start + acs]
        draws = 10_000
        counts = np.zeros(n)
        for seed in range(draws):
            spec = KSpaceMaskSpec(n_lines=n, accel=2, acs=acs,
                                  family="parametric", alpha=0.7, beta=0.0,
                                  seed=seed)
            counts += kspace_mask(spec).kept[0]
        b_out = spec0.budget - acs
        p = b_out / len(outside)
        sigma = np.sqrt(draws * p * (1 - p))
        for i in outside:
            assert abs(counts[i] - draws * p) < 5 * sigma
        # the ACS block is deterministic
        assert np.all(counts[acs_start:acs_start + acs] == draws)

    def test_sharp_parametric_weights_prefer_the_center(self):
        totals = np.zeros(128)
        for seed in range(200):
            spec = KSpaceMaskSpec(n_lines=128, accel=4, acs=8,
                                  family="parametric", alpha=1.0, beta=4.0,
                                  seed=seed)
            totals += kspace_mask(spec).kept[0]
        near = totals[48:56].mean()
        far = totals[:8].mean()
        assert near > 2 * far

    def test_poisson_gaps_grow_away_from_the_center(self):
        inner, outer = [], []
        for seed in range(50):
            spec = KSpaceMaskSpec(n_lines=256, accel=4, acs=16,
                                  family="poisson_gap", seed=seed)
            lines = np.flatnonzero(kspace_mask(spec).kept[0])
            right = lines[lines >= 128 + 8]
            gaps = np.diff(right)
            half = len(gaps) // 2
            inner.extend(gaps[:half])
            outer.extend(gaps[half:])
        assert np.mean(outer) > np.mean(inner)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            KSpaceMaskSpec(n_lines=0, accel=2)
        with pytest.raises(ValueError):
            KSpaceMaskSpec(n_lines=64, accel=0.5)
        with pytest.raises(ValueError):
            KSpaceMaskSpec(n_lines=64, accel=2, acs=100)
        with pytest.raises(ValueError):
            KSpaceMaskSpec(n_lines=64, accel=2, family="radial")
        with pytest.raises(ValueError):
            KSpaceMaskSpec(n_lines=64, accel=2, alpha=-0.1)


class TestAntennaMask:
    def test_periodic_shutoff_positions(self):
        m = antenna_mask(AntennaMaskSpec(n_rx=4, n_tx=8, geometry="periodic",
                                         interval_d=2))
        off_cols = np.flatnonzero(~m.kept[0])
        np.testing.assert_array_equal(off_cols, [0, 2, 4, 6])
        assert m.kept[:, 1].all()

    def test_interval_past_axis_only_kills_index_zero(self):
        m = antenna_mask(AntennaMaskSpec(n_rx=4, n_tx=8, geometry="periodic",
                                         interval_d=9))
        assert not m.kept[:, 0].any()
        assert m.kept[:, 1:].all()

    def test_random_matches_periodic_off_budget(self):
        per = antenna_mask(AntennaMaskSpec(n_rx=4, n_tx=8,
                                           geometry="periodic", interval_d=2))
        rnd = antenna_mask(AntennaMaskSpec(n_rx=4, n_tx=8, geometry="random",
                                           interval_d=2, seed=1))
        assert per.keep_count == rnd.keep_count == 4 * 4

    def test_axis_selects_rows_or_columns(self):
        rx = antenna_mask(AntennaMaskSpec(n_rx=8, n_tx=4, geometry="periodic",
                                          interval_d=4, axis="rx"))
        assert not rx.kept[0].any() and not rx.kept[4].any()
        assert rx.kept[1].all()
        both = antenna_mask(AntennaMaskSpec(n_rx=8, n_tx=8,
                                            geometry="periodic", interval_d=4,
                                            axis="both"))
        assert not both.kept[0].any()
        assert not both.kept[:, 0].any()

    def test_total_shutoff_is_rejected(self):
        with pytest.raises(ValueError, match="every element"):
            antenna_mask(AntennaMaskSpec(n_rx=4, n_tx=8, geometry="periodic",
                                         interval_d=1))

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            AntennaMaskSpec(n_rx=0, n_tx=8, geometry="periodic")
        with pytest.raises(ValueError):
            AntennaMaskSpec(n_rx=4, n_tx=8, geometry="spiral")
        with pytest.raises(ValueError):
            AntennaMaskSpec(n_rx=4, n_tx=8, geometry="periodic", axis="up")


class TestMaskPlumbing:
    def test_mask_requires_2d_grid(self):
        with pytest.raises(ValueError):
            Mask(kept=np.ones(5, dtype=bool), kind="patch", meta={})

    def test_apply_mask_zeroes_dropped_entries(self):
        f = make_rng(0).standard_normal((8, 8))
        m = Mask(kept=np.eye(8, dtype=bool), kind="custom", meta={})
        out = apply_mask(f, m)
        np.testing.assert_allclose(np.diag(out), np.diag(f))
        assert np.all(out[~m.kept] == 0)

    def test_apply_mask_shape_mismatch(self):
        m = Mask(kept=np.ones((4, 4), dtype=bool), kind="custom", meta={})
        with pytest.raises(ValueError):
            apply_mask(np.ones((5, 5)), m)

    def test_save_load_round_trip(self, tmp_path):
        spec = KSpaceMaskSpec(n_lines=64, accel=4, acs=8, family="parametric",
                              alpha=0.3, beta=1.5, seed=4)
        m = kspace_mask(spec)
        path = tmp_path / "mask.arr1"
        save_mask(m, path)
        back = load_mask(path)
        np.testing.assert_array_equal(back.kept, m.kept)
        assert back.kind == "kspace"
        assert back.meta["alpha"] == 0.3
        assert back.meta["n_lines"] == 64

    def test_load_without_sidecar_degrades_gracefully(self, tmp_path):
        m = patch_mask(PatchMaskSpec(4, 4, 2, geometry="periodic",
                                     interval_k=2))
        path = tmp_path / "bare.arr1"
        save_mask(m, path)
        (tmp_path / "bare.json").unlink()
        back = load_mask(path)
        assert back.kind == "unknown"
        assert back.meta == {}
        np.testing.assert_array_equal(back.kept, m.kept)
