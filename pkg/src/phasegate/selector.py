"""Mask parameter selection and window-parameter ablations for k-space audits.

The selector grid-searches the two parameters of the parametric line density
against one of three criteria: smallest absolute band-entropy change of the
zero-filled reconstruction, smallest discarded k-space energy, or largest
zero-filled PSNR. Entropy needs no ground-truth image at selection time
beyond the calibration data itself, which is the point of the comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .masks import KSpaceMaskSpec, kspace_mask
from .mri import kspace_l2, psnr, rss_reconstruct, zero_fill
from .numerics import derive_seed, ols_pearson
from .phase_space import DEFAULT_ENERGY_FLOOR, HusimiParams, delta_s

__all__ = [
    "DEFAULT_ALPHAS",
    "DEFAULT_BETAS",
    "MRI_HUSIMI",
    "SelectionResult",
    "argbest",
    "select_mask_params",
    "ablation_sweep",
    "ablation_summary",
    "win_rank_stability",
    "correlate_quality_entropy",
]

DEFAULT_ALPHAS = (0.0, 0.05, 0.1, 0.2, 0.5, 1.0)
DEFAULT_BETAS = (0.0, 0.5, 1.0, 2.0, 3.0, 4.0)

# Window parameters used for k-space audits of magnitude images.
MRI_HUSIMI = HusimiParams(win=32, sigma=16.0, hop=10)

CRITERIA = ("min_abs_delta_s", "min_kspace_l2", "max_zero_filled_psnr")

_SCORE_QUANTUM = 1e-9


@dataclass(frozen=True)
class SelectionResult:
    """Winning density parameters plus the full score table.

    `scores` holds the per-cell mean over calibration slices, `spreads` the
    matching per-cell standard deviation across slices, and
    `calibration_ids` names the slices that produced them.
    """

    criterion: str
    best_alpha: float
    best_beta: float
    best_score: float
    scores: np.ndarray  # (len(alphas), len(betas)) mean criterion values
    spreads: np.ndarray  # same shape, per-sample standard deviation
    alphas: tuple
    betas: tuple
    accel: float
    acs: int
    seed: int
    calibration_ids: tuple


def argbest(scores, alphas, betas, criterion):
    """Best (alpha, beta) cell of a score table under the given criterion.

    PSNR is maximized, the other criteria minimized. Scores are rounded to
    1e-9 before comparison and ties go to the lexicographically smallest
    (alpha, beta), so the pick depends only on the score ordering: any
    strictly monotone transform of the table chooses the same cell.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (len(alphas), len(betas)):
        raise ValueError(f"score table {scores.shape} does not match grids")
    quant = np.round(scores / _SCORE_QUANTUM) * _SCORE_QUANTUM
    target = quant.max() if criterion == "max_zero_filled_psnr" else quant.min()
    best = None
    best_score = np.nan
    for ia, alpha in enumerate(alphas):
        for ib, beta in enumerate(betas):
            if quant[ia, ib] == target:
                if best is None or (alpha, beta) < best:
                    best = (alpha, beta)
                    best_score = scores[ia, ib]
    return best[0], best[1], float(best_score)


def _slice_score(k_full, ref_img, spec, criterion, husimi_params, weighting,
                 energy_floor):
    mask = kspace_mask(spec)
    if criterion == "min_kspace_l2":
        return kspace_l2(k_full, mask)
    zf = zero_fill(k_full, mask, reference_norm=ref_img.norm)
    if criterion == "max_zero_filled_psnr":
        return psnr(zf.pixels, ref_img.pixels)
    report = delta_s(ref_img.pixels, zf.pixels, husimi_params,
                     weighting=weighting, energy_floor=energy_floor)
    return abs(report.delta)


def select_mask_params(
    calibration,
    accel,
    acs,
    alphas=DEFAULT_ALPHAS,
    betas=DEFAULT_BETAS,
    criterion="min_abs_delta_s",
    husimi_params=MRI_HUSIMI,
    weighting="uniform",
    energy_floor=DEFAULT_ENERGY_FLOOR,
    seed=0,
    calibration_ids=None,
):
    """Grid-search the parametric mask density over calibration k-space.

    Every (alpha, beta) cell is scored on every calibration slice with the
    same per-slice mask seed (derived from `seed` and the slice index, so the
    comparison is paired), then averaged. Ties after rounding scores to 1e-9
    go to the lexicographically smallest (alpha, beta).

    Parameters
    ----------
    calibration : sequence of MultiCoilKSpace
    accel, acs : acceleration factor and calibration-region width
    criterion : one of min_abs_delta_s, min_kspace_l2, max_zero_filled_psnr
    calibration_ids : optional sample names recorded in the result
        (defaults to slice indices)

    Returns
    -------
    SelectionResult
    """
    if criterion not in CRITERIA:
        raise ValueError(f"unknown criterion {criterion!r}")
    calibration = list(calibration)
    if not calibration:
        raise ValueError("no calibration data")
    if calibration_ids is None:
        calibration_ids = tuple(str(i) for i in range(len(calibration)))
    else:
        calibration_ids = tuple(str(s) for s in calibration_ids)
        if len(calibration_ids) != len(calibration):
            raise ValueError("one id per calibration slice required")
    alphas = tuple(float(a) for a in alphas)
    betas = tuple(float(b) for b in betas)
    if not alphas or not betas:
        raise ValueError("alpha and beta grids must be non-empty")
    refs = [rss_reconstruct(k) for k in calibration]
    per_sample = np.zeros((len(alphas), len(betas), len(calibration)))
    for ia, alpha in enumerate(alphas):
        for ib, beta in enumerate(betas):
            for i, (k_full, ref_img) in enumerate(zip(calibration, refs)):
                rows, cols = k_full.shape
                spec = KSpaceMaskSpec(
                    n_lines=cols, accel=accel, acs=acs, family="parametric",
                    alpha=alpha, beta=beta, seed=derive_seed(seed, i), rows=rows,
                )
                per_sample[ia, ib, i] = _slice_score(
                    k_full, ref_img, spec, criterion,
                    husimi_params, weighting, energy_floor,
                )
    with np.errstate(invalid="ignore"):
        scores = per_sample.mean(axis=2)
        spreads = per_sample.std(axis=2)
    best_alpha, best_beta, best_score = argbest(scores, alphas, betas, criterion)
    return SelectionResult(
        criterion=criterion,
        best_alpha=best_alpha,
        best_beta=best_beta,
        best_score=best_score,
        scores=scores,
        spreads=spreads,
        alphas=alphas,
        betas=betas,
        accel=float(accel),
        acs=int(acs),
        seed=int(seed),
        calibration_ids=calibration_ids,
    )


def ablation_sweep(
    calibration,
    wins=(12, 24, 48, 96),
    sigma_ratios=(0.5, 1.0, 2.0),
    hop_ratios=(0.25, 0.5, 1.0),
    families=("periodic", "random", "poisson_gap"),
    accel=4.0,
    acs=24,
    weighting="uniform",
    energy_floor=DEFAULT_ENERGY_FLOOR,
    seed=0,
):
    """Absolute entropy change across window parameters and mask families.

    Returns one row dict per (win, sigma, hop, family, slice) with the
    absolute window parameters, the grid ratios they came from (handy for
    grouping cells across window sizes), the accel, the sample index, and
    delta_s / abs_delta_s.
    """
    calibration = list(calibration)
    if not calibration:
        raise ValueError("no calibration data")
    refs = [rss_reconstruct(k) for k in calibration]
    rows_out = []
    for i, (k_full, ref_img) in enumerate(zip(calibration, refs)):
        rows, cols = k_full.shape
        zf_cache = {}
        for family in families:
            spec = KSpaceMaskSpec(
                n_lines=cols, accel=accel, acs=acs, family=family,
                seed=derive_seed(seed, i), rows=rows,
            )
            mask = kspace_mask(spec)
            zf_cache[family] = zero_fill(k_full, mask, reference_norm=ref_img.norm)
        for win in wins:
            fits = win <= min(rows, cols)
            for sr in sigma_ratios:
                for hr in hop_ratios:
                    for family in families:
                        row = {
                            "win": int(win),
                            "sigma": float(win * sr),
                            "hop": max(1, int(round(win * hr))),
                            "sigma_ratio": float(sr),
                            "hop_ratio": float(hr),
                            "family": family,
                            "accel": float(accel),
                            "sample": i,
                            "skipped": not fits,
                        }
                        if fits:
                            params = HusimiParams(
                                win=int(win), sigma=float(win * sr),
                                hop=row["hop"],
                            )
                            rep = delta_s(
                                ref_img.pixels, zf_cache[family].pixels, params,
                                weighting=weighting, energy_floor=energy_floor,
                            )
                            row["delta_s"] = rep.delta
                            row["abs_delta_s"] = abs(rep.delta)
                        else:
                            row["delta_s"] = math.nan
                            row["abs_delta_s"] = math.nan
                        rows_out.append(row)
    return rows_out


_CELL_KEYS = ("win", "sigma", "hop", "sigma_ratio", "hop_ratio", "family", "accel")


def ablation_summary(rows):
    """Per-cell distribution summary of an ablation sweep.

    Groups the sweep rows by (win, sigma, hop, family, accel) and reports
    mean, quartiles, and count of abs_delta_s, in sweep order. The quartile
    columns are what a violin or box rendering needs. Rows flagged skipped
    do not contribute values; a cell with no usable rows is reported with
    n=0, skipped=True and NaN statistics.
    """
    cells = {}
    order = []
    for r in rows:
        key = tuple(r[k] for k in _CELL_KEYS)
        if key not in cells:
            cells[key] = []
            order.append(key)
        if not r.get("skipped", False):
            cells[key].append(float(r["abs_delta_s"]))
    out = []
    for key in order:
        vals = np.array(cells[key])
        summary = dict(zip(_CELL_KEYS, key))
        if vals.size:
            q25, q50, q75 = np.percentile(vals, [25.0, 50.0, 75.0])
            summary.update({
                "n": int(vals.size),
                "skipped": False,
                "mean_abs_delta_s": float(vals.mean()),
                "q25": float(q25),
                "median": float(q50),
                "q75": float(q75),
            })
        else:
            summary.update({
                "n": 0,
                "skipped": True,
                "mean_abs_delta_s": math.nan,
                "q25": math.nan,
                "median": math.nan,
                "q75": math.nan,
            })
        out.append(summary)
    return out


def _spearman(x, y):
    # Pearson correlation of midranks; ties get the average rank.
    def midranks(v):
        v = np.asarray(v, dtype=np.float64)
        order = np.argsort(v, kind="stable")
        ranks = np.empty(v.size)
        sv = v[order]
        i = 0
        while i < v.size:
            j = i
            while j + 1 < v.size and sv[j + 1] == sv[i]:
                j += 1
            ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
            i = j + 1
        return ranks

    rx, ry = midranks(x), midranks(y)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = np.sqrt((rx * rx).sum() * (ry * ry).sum())
    if denom == 0.0:
        return 0.0
    return float((rx * ry).sum() / denom)


def win_rank_stability(rows):
    """Spearman rank correlation of cell means between neighboring windows.

    For each pair of adjacent window sizes in the sweep, ranks the
    (sigma_ratio, hop_ratio, family, accel) cells by their mean abs_delta_s
    at each window and correlates the two rankings. High values mean the
    family/parameter ordering is stable across scale.

    Returns one dict per adjacent pair: win_a, win_b, spearman_r, n_cells.
    """
    means = {}
    for r in rows:
        if r.get("skipped", False):
            continue
        key = (r["sigma_ratio"], r["hop_ratio"], r["family"], r["accel"])
        means.setdefault(r["win"], {}).setdefault(key, []).append(
            float(r["abs_delta_s"])
        )
    wins = sorted(means)
    out = []
    for wa, wb in zip(wins, wins[1:]):
        common = sorted(set(means[wa]) & set(means[wb]))
        if len(common) < 2:
            continue
        xa = [np.mean(means[wa][k]) for k in common]
        xb = [np.mean(means[wb][k]) for k in common]
        out.append({
            "win_a": int(wa),
            "win_b": int(wb),
            "spearman_r": _spearman(xa, xb),
            "n_cells": len(common),
        })
    return out


def correlate_quality_entropy(rows):
    """OLS fit of a quality metric on |delta S| plus the Pearson correlation.

    Takes rows of (abs_delta_s, quality) pairs, one per study cell, and fits
    quality on |delta S| via ols_pearson. Kept as a named operation because
    study code reads better with the orientation fixed.
    """
    table = np.asarray(list(rows), dtype=np.float64)
    if table.ndim != 2 or table.shape[1] != 2:
        raise ValueError("rows must be (abs_delta_s, quality) pairs")
    if table.shape[0] < 2:
        raise ValueError("need at least two rows to correlate")
    return ols_pearson(table[:, 0], table[:, 1])
