"""Scikit-learn style estimators over the functional core.

Two things in this package are naturally fit/transform shaped. Auditing is a
transform: fix window parameters, fit on reference fields, transform acquired
fields into per-sample entropy changes. Mask design is a fit: search the
density parameters on calibration k-space and keep the winner as fitted
attributes. Both classes follow the usual conventions (params in
``__init__``, ``fit`` returns ``self``, fitted attributes end in an
underscore, ``get_params``/``set_params`` inherited) so they compose with
pipelines, ``clone`` and grid-search tooling.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .masks import KSpaceMaskSpec
from .mri import MultiCoilKSpace
from .phase_space import (
    HusimiParams,
    band_entropy,
    band_normalize,
    delta_s,
    husimi,
    multiscale_delta_s,
)
from .selector import DEFAULT_ALPHAS, DEFAULT_BETAS, select_mask_params
from .validation import as_field_stack

__all__ = ["BandEntropyAudit", "MaskParameterSearch"]


class BandEntropyAudit(BaseEstimator, TransformerMixin):
    """Per-sample band-entropy change relative to fitted reference fields.

    Parameters
    ----------
    win, sigma, hop : window geometry for the local spectra
    weighting : "uniform" or "energy" window averaging
    multiscale : if True, ignore win/sigma/hop and average a ladder of
        scales (windows 32..256 clipped to the grid, sigma = win/6,
        hop = hop_ratio * win) with energy weighting by default
    energy_floor : windows at or below this band energy are excluded

    Attributes
    ----------
    reference_fields_ : list of fitted reference fields
    reference_entropy_ : (n_samples,) global band entropy of each reference
    n_features_in_ : number of reference samples seen at fit time
    """

    def __init__(self, win=32, sigma=16.0, hop=10, weighting="uniform",
                 multiscale=False, hop_ratio=1.0, energy_floor=1e-6):
        self.win = win
        self.sigma = sigma
        self.hop = hop
        self.weighting = weighting
        self.multiscale = multiscale
        self.hop_ratio = hop_ratio
        self.energy_floor = energy_floor

    def _params(self):
        return HusimiParams(win=self.win, sigma=self.sigma, hop=self.hop)

    def fit(self, X, y=None):
        """Store reference fields and their entropies. X: sequence of 2D fields."""
        fields = as_field_stack(X)
        entropies = []
        for f in fields:
            if self.multiscale:
                rep = multiscale_delta_s(f, f, weighting="energy",
                                         energy_floor=self.energy_floor,
                                         hop_ratio=self.hop_ratio)
                entropies.append(rep.s_ref)
            else:
                d = band_normalize(husimi(f, self._params()), self.energy_floor)
                entropies.append(band_entropy(d, self.weighting).global_entropy)
        self.reference_fields_ = fields
        self.reference_entropy_ = np.asarray(entropies)
        self.n_features_in_ = len(fields)
        return self

    def transform(self, X):
        """Entropy change of each acquired field against its paired reference.

        X must have the same length and per-sample shapes as the fitted
        references. Returns an (n_samples, 1) float column.
        """
        check_is_fitted(self, "reference_fields_")
        fields = as_field_stack(X)
        if len(fields) != len(self.reference_fields_):
            raise ValueError(
                f"expected {len(self.reference_fields_)} samples, got {len(fields)}"
            )
        deltas = []
        for ref, acq in zip(self.reference_fields_, fields):
            if self.multiscale:
                rep = multiscale_delta_s(ref, acq, weighting="energy",
                                         energy_floor=self.energy_floor,
                                         hop_ratio=self.hop_ratio)
                deltas.append(rep.delta)
            else:
                rep = delta_s(ref, acq, self._params(), weighting=self.weighting,
                              energy_floor=self.energy_floor)
                deltas.append(rep.delta)
        return np.asarray(deltas)[:, None]

    def score(self, X, y=None):
        """Mean negative absolute entropy change (higher is less perturbed)."""
        return float(-np.mean(np.abs(self.transform(X))))


class MaskParameterSearch(BaseEstimator):
    """Grid search over the parametric line-density parameters.

    Fits on calibration multi-coil k-space (an array (n, coils, rows, cols)
    or a sequence of such 3D arrays / MultiCoilKSpace) and exposes the
    winning (alpha, beta) plus the score table.

    Attributes
    ----------
    best_alpha_, best_beta_ : winning density parameters
    best_score_ : mean criterion value of the winner
    score_table_ : (n_alphas, n_betas) mean criterion values
    result_ : the full SelectionResult
    best_spec_ : KSpaceMaskSpec for the winner, sized to the calibration grid
    """

    def __init__(self, accel=4.0, acs=24, alphas=DEFAULT_ALPHAS,
                 betas=DEFAULT_BETAS, criterion="min_abs_delta_s",
                 win=32, sigma=16.0, hop=10, weighting="uniform",
                 energy_floor=1e-6, seed=0):
        self.accel = accel
        self.acs = acs
        self.alphas = alphas
        self.betas = betas
        self.criterion = criterion
        self.win = win
        self.sigma = sigma
        self.hop = hop
        self.weighting = weighting
        self.energy_floor = energy_floor
        self.seed = seed

    def fit(self, X, y=None):
        stacks = self._as_kspace_list(X)
        result = select_mask_params(
            stacks,
            accel=self.accel,
            acs=self.acs,
            alphas=self.alphas,
            betas=self.betas,
            criterion=self.criterion,
            husimi_params=HusimiParams(win=self.win, sigma=self.sigma, hop=self.hop),
            weighting=self.weighting,
            energy_floor=self.energy_floor,
            seed=self.seed,
        )
        rows, cols = stacks[0].shape
        self.result_ = result
        self.best_alpha_ = result.best_alpha
        self.best_beta_ = result.best_beta
        self.best_score_ = result.best_score
        self.score_table_ = result.scores
        self.best_spec_ = KSpaceMaskSpec(
            n_lines=cols, accel=self.accel, acs=self.acs, family="parametric",
            alpha=result.best_alpha, beta=result.best_beta, seed=self.seed,
            rows=rows,
        )
        return self

    @staticmethod
    def _as_kspace_list(X):
        if isinstance(X, np.ndarray):
            if X.ndim != 4:
                raise ValueError(
                    f"array calibration data must be 4D (n, coils, rows, cols), got {X.shape}"
                )
            items = [X[i] for i in range(X.shape[0])]
        else:
            items = list(X)
        if not items:
            raise ValueError("no calibration data")
        out = []
        for item in items:
            if isinstance(item, MultiCoilKSpace):
                out.append(item)
            else:
                out.append(MultiCoilKSpace(np.asarray(item)))
        return out
