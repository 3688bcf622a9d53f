"""Estimator wrappers: sklearn conventions over the functional core."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from phasegate.estimators import BandEntropyAudit, MaskParameterSearch
from phasegate.masks import KSpaceMaskSpec
from phasegate.mri import phantom
from phasegate.numerics import derive_seed, make_rng
from phasegate.phase_space import HusimiParams, delta_s, multiscale_delta_s
from phasegate.selector import select_mask_params


def _fields(n, side, seed):
    rng = make_rng(seed)
    return [rng.standard_normal((side, side)) for _ in range(n)]


def _degraded(fields):
    out = []
    for f in fields:
        g = f.copy()
        g[: f.shape[0] // 2] = 0.0
        out.append(g)
    return out


class TestBandEntropyAudit:
    def test_param_round_trip_and_clone(self):
        est = BandEntropyAudit(win=16, sigma=8.0, hop=4, weighting="energy")
        params = est.get_params()
        assert params["win"] == 16
        assert params["sigma"] == 8.0
        assert params["hop"] == 4
        assert params["weighting"] == "energy"
        assert est.set_params(hop=8) is est
        assert est.hop == 8
        twin = clone(est)
        assert twin.get_params() == est.get_params()
        assert not hasattr(twin, "reference_fields_")

    def test_transform_before_fit_raises(self):
        est = BandEntropyAudit()
        with pytest.raises(NotFittedError):
            est.transform(_fields(2, 24, 0))

    def test_fit_returns_self_and_records_references(self):
        refs = _fields(3, 24, 1)
        est = BandEntropyAudit(win=8, sigma=8 / 3.0, hop=4)
        assert est.fit(refs) is est
        assert est.n_features_in_ == 3
        assert len(est.reference_fields_) == 3
        assert est.reference_entropy_.shape == (3,)
        assert np.all(np.isfinite(est.reference_entropy_))

    def test_transform_matches_the_functional_audit(self):
        refs = _fields(3, 24, 2)
        acqs = _degraded(refs)
        est = BandEntropyAudit(win=8, sigma=8 / 3.0, hop=4,
                               weighting="uniform").fit(refs)
        out = est.transform(acqs)
        assert out.shape == (3, 1)
        params = HusimiParams(win=8, sigma=8 / 3.0, hop=4)
        for i in range(3):
            rep = delta_s(refs[i], acqs[i], params, weighting="uniform")
            assert out[i, 0] == rep.delta

    def test_multiscale_mode_matches_the_ladder_audit(self):
        refs = _fields(2, 64, 3)
        acqs = _degraded(refs)
        est = BandEntropyAudit(multiscale=True, hop_ratio=1.0).fit(refs)
        out = est.transform(acqs)
        for i in range(2):
            rep = multiscale_delta_s(refs[i], acqs[i], weighting="energy",
                                     hop_ratio=1.0)
            assert out[i, 0] == rep.delta
        self_rep = multiscale_delta_s(refs[0], refs[0], weighting="energy",
                                      hop_ratio=1.0)
        assert est.reference_entropy_[0] == self_rep.s_ref

    def test_unperturbed_fields_transform_to_zero(self):
        refs = _fields(2, 24, 4)
        est = BandEntropyAudit(win=8, sigma=8 / 3.0, hop=4).fit(refs)
        np.testing.assert_array_equal(est.transform(refs),
                                      np.zeros((2, 1)))

    def test_score_is_negative_mean_absolute_change(self):
        refs = _fields(3, 24, 5)
        acqs = _degraded(refs)
        est = BandEntropyAudit(win=8, sigma=8 / 3.0, hop=4).fit(refs)
        expected = -np.mean(np.abs(est.transform(acqs)))
        assert est.score(acqs) == expected
        assert est.score(refs) == 0.0

    def test_sample_count_mismatch_is_rejected(self):
        est = BandEntropyAudit(win=8, sigma=8 / 3.0, hop=4)
        est.fit(_fields(3, 24, 6))
        with pytest.raises(ValueError, match="expected 3 samples, got 2"):
            est.transform(_fields(2, 24, 7))

    def test_stacked_array_input(self):
        refs = _fields(3, 24, 8)
        est_list = BandEntropyAudit(win=8, sigma=8 / 3.0, hop=4).fit(refs)
        est_arr = BandEntropyAudit(win=8, sigma=8 / 3.0, hop=4).fit(
            np.stack(refs))
        np.testing.assert_array_equal(est_list.reference_entropy_,
                                      est_arr.reference_entropy_)

    def test_single_field_is_rejected(self):
        with pytest.raises(ValueError, match="stack of 2D fields"):
            BandEntropyAudit().fit(make_rng(9).standard_normal((24, 24)))


@pytest.fixture(scope="module")
def search_calibration():
    return [phantom(64, 64, coils=2, seed=derive_seed(60, i))
            for i in range(2)]


class TestMaskParameterSearch:
    kwargs = dict(accel=4.0, acs=8, alphas=(0.0, 1.0), betas=(0.0, 2.0),
                  criterion="min_kspace_l2", seed=3)

    def test_param_round_trip_and_clone(self):
        est = MaskParameterSearch(**self.kwargs)
        assert est.get_params()["criterion"] == "min_kspace_l2"
        assert est.set_params(seed=5) is est
        twin = clone(est)
        assert twin.get_params() == est.get_params()

    def test_fit_matches_the_functional_search(self, search_calibration):
        est = MaskParameterSearch(**self.kwargs).fit(search_calibration)
        direct = select_mask_params(search_calibration, accel=4.0, acs=8,
                                    alphas=(0.0, 1.0), betas=(0.0, 2.0),
                                    criterion="min_kspace_l2", seed=3)
        assert est.best_alpha_ == direct.best_alpha
        assert est.best_beta_ == direct.best_beta
        assert est.best_score_ == direct.best_score
        np.testing.assert_array_equal(est.score_table_, direct.scores)
        assert est.result_.criterion == "min_kspace_l2"

    def test_best_spec_is_sized_to_the_calibration(self, search_calibration):
        est = MaskParameterSearch(**self.kwargs).fit(search_calibration)
        spec = est.best_spec_
        assert isinstance(spec, KSpaceMaskSpec)
        assert spec.n_lines == 64
        assert spec.rows == 64
        assert spec.family == "parametric"
        assert spec.alpha == est.best_alpha_
        assert spec.beta == est.best_beta_
        assert spec.accel == 4.0
        assert spec.acs == 8
        assert spec.seed == 3

    def test_four_dimensional_array_input(self, search_calibration):
        stacked = np.stack([k.data for k in search_calibration])
        assert stacked.ndim == 4
        est_arr = MaskParameterSearch(**self.kwargs).fit(stacked)
        est_list = MaskParameterSearch(**self.kwargs).fit(search_calibration)
        assert est_arr.best_alpha_ == est_list.best_alpha_
        assert est_arr.best_beta_ == est_list.best_beta_
        np.testing.assert_array_equal(est_arr.score_table_,
                                      est_list.score_table_)

    def test_invalid_inputs(self, search_calibration):
        with pytest.raises(ValueError, match="4D"):
            MaskParameterSearch(**self.kwargs).fit(
                search_calibration[0].data)
        with pytest.raises(ValueError, match="no calibration data"):
            MaskParameterSearch(**self.kwargs).fit([])
