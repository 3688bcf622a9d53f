"""Acquisition masks: image patch lattices, k-space line patterns, antenna shutoffs.

Every generator is a pure function of its spec (seed included), so the same
spec always yields the same mask. Masks serialize as an ARR1 u8 grid plus a
JSON sidecar carrying the generating spec.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, asdict

import numpy as np

from .arr1 import read_arr1, write_arr1
from .numerics import choose_k, make_rng
from .validation import as_field

__all__ = [
    "Mask",
    "PatchMaskSpec",
    "KSpaceMaskSpec",
    "AntennaMaskSpec",
    "patch_mask",
    "kspace_mask",
    "antenna_mask",
    "apply_mask",
    "save_mask",
    "load_mask",
]

KSPACE_FAMILIES = ("periodic", "random", "poisson_gap", "parametric")


@dataclass
class Mask:
    """Boolean keep-grid with the spec that generated it."""

    kept: np.ndarray
    kind: str
    meta: dict

    def __post_init__(self):
        self.kept = np.asarray(self.kept, dtype=bool)
        if self.kept.ndim != 2:
            raise ValueError(f"mask grid must be 2D, got shape {self.kept.shape}")

    @property
    def keep_count(self):
        return int(self.kept.sum())

    @property
    def shape(self):
        return self.kept.shape


@dataclass(frozen=True)
class PatchMaskSpec:
    """Patch lattice over an image: keep whole patch_px x patch_px tiles.

    Periodic geometry keeps patch (i, j) when both indices are divisible by
    interval_k; random geometry keeps a uniform subset of matched budget
    ceil(n_patches / interval_k^2) unless an explicit budget is given.
    """

    patch_rows: int
    patch_cols: int
    patch_px: int
    geometry: str
    interval_k: int = 1
    budget: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.patch_rows < 1 or self.patch_cols < 1 or self.patch_px < 1:
            raise ValueError("patch grid and patch size must be positive")
        if self.geometry not in ("periodic", "random"):
            raise ValueError(f"unknown patch geometry {self.geometry!r}")
        if self.interval_k < 1:
            raise ValueError(f"interval_k must be >= 1, got {self.interval_k}")


def patch_mask(spec):
    """Pixel mask from a patch lattice spec (True = kept pixel)."""
    n_patches = spec.patch_rows * spec.patch_cols
    keep = np.zeros((spec.patch_rows, spec.patch_cols), dtype=bool)
    if spec.geometry == "periodic":
        keep[:: spec.interval_k, :: spec.interval_k] = True
    else:
        budget = spec.budget
        if budget is None:
            budget = math.ceil(n_patches / spec.interval_k**2)
        if budget > n_patches:
            raise ValueError(f"budget {budget} exceeds {n_patches} patches")
        rng = make_rng(spec.seed)
        idx = choose_k(rng, n_patches, budget)
        keep.ravel()[idx] = True
    pixel = np.kron(keep, np.ones((spec.patch_px, spec.patch_px), dtype=bool))
    return Mask(kept=pixel, kind="patch", meta=asdict(spec))


@dataclass(frozen=True)
class KSpaceMaskSpec:
    """Phase-encoding line pattern with a centered calibration block.

    The mask keeps round(n_lines / accel) lines in total: an ACS block of
    ``acs`` contiguous lines around the center plus budget - acs lines drawn
    from outside by the chosen family. ``alpha`` and ``beta`` shape the
    parametric density p(k) proportional to (1 + alpha*|k - center|)^(-beta).
    ``rows`` controls the broadcast height of the 2D grid (default square).
    """

    n_lines: int
    accel: float
    acs: int = 0
    family: str = "random"
    alpha: float = 0.0
    beta: float = 0.0
    seed: int = 0
    rows: int | None = None

    def __post_init__(self):
        if self.n_lines < 1:
            raise ValueError("n_lines must be positive")
        if not self.accel >= 1:
            raise ValueError(f"accel must be >= 1, got {self.accel}")
        if self.acs < 0 or self.acs > self.n_lines:
            raise ValueError(f"acs {self.acs} out of range for {self.n_lines} lines")
        if self.family not in KSPACE_FAMILIES:
            raise ValueError(f"unknown k-space family {self.family!r}")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be >= 0")
        if self.rows is not None and self.rows < 1:
            raise ValueError("rows must be positive")

    @property
    def budget(self):
        return int(round(self.n_lines / self.accel))


def _poisson_ppf(u, lam):
    # Smallest k with CDF(k) >= u; lam is modest here so the walk is short.
    if lam <= 0:
        return 0
    p = math.exp(-lam)
    cdf = p
    k = 0
    while cdf < u and k < 10_000:
        k += 1
        p *= lam / k
        cdf += p
    return k


def _gap_walk(order, dists, us, scale, n_half):
    # Walk outward selecting lines separated by 1 + Poisson gaps that grow
    # linearly with distance from the center line.
    selected = []
    i = 0
    t = 0
    while i < len(order):
        selected.append(order[i])
        lam = scale * dists[i] / max(n_half, 1)
        gap = 1 + _poisson_ppf(us[t % len(us)], lam)
        t += 1
        i += gap
    return selected


def _poisson_gap_side(order, dists, target, rng, n_half):
    if target <= 0:
        return []
    if target >= len(order):
        return list(order)
    us = rng.random(len(order))
    lo, hi = 0.0, 4.0
    while len(_gap_walk(order, dists, us, hi, n_half)) > target and hi < 1e6:
        hi *= 2.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if len(_gap_walk(order, dists, us, mid, n_half)) > target:
            lo = mid
        else:
            hi = mid
    got = _gap_walk(order, dists, us, hi, n_half)
    if len(got) < target:
        # Top up with the innermost lines the walk skipped.
        missing = [x for x in order if x not in set(got)]
        got = got + missing[: target - len(got)]
    elif len(got) > target:
        got = got[:target]
    return got


def kspace_mask(spec):
    """2D line mask (lines run down columns) from a k-space spec."""
    n = spec.n_lines
    total = spec.budget
    if total < spec.acs:
        raise ValueError(
            f"budget round({n}/{spec.accel}) = {total} cannot cover acs = {spec.acs}"
        )
    center = n // 2
    acs_start = center - spec.acs // 2
    acs_lines = list(range(acs_start, acs_start + spec.acs))
    outside = [i for i in range(n) if i < acs_start or i >= acs_start + spec.acs]
    b_out = total - spec.acs
    if b_out > len(outside):
        raise ValueError(f"budget {total} exceeds {n} lines")
    rng = make_rng(spec.seed)
    if spec.family == "periodic":
        m = len(outside)
        picked = [outside[(j * m) // b_out] for j in range(b_out)] if b_out else []
    elif spec.family == "random":
        picked = [outside[i] for i in choose_k(rng, len(outside), b_out)] if b_out else []
    elif spec.family == "poisson_gap":
        if spec.acs:
            left = list(range(acs_start - 1, -1, -1))
            right = list(range(acs_start + spec.acs, n))
        else:
            left = list(range(center - 1, -1, -1))
            right = list(range(center, n))
        n_half = max(center, n - center)
        len_l, len_r = len(left), len(right)
        tgt_r = int(round(b_out * len_r / max(len_l + len_r, 1)))
        tgt_r = min(max(tgt_r, b_out - len_l), len_r)
        tgt_l = b_out - tgt_r
        d_l = [abs(x - center) for x in left]
        d_r = [abs(x - center) for x in right]
        picked = _poisson_gap_side(left, d_l, tgt_l, rng, n_half) + _poisson_gap_side(
            right, d_r, tgt_r, rng, n_half
        )
    else:  # parametric
        if b_out:
            dist = np.abs(np.array(outside) - center)
            w = (1.0 + spec.alpha * dist) ** (-spec.beta)
            p = w / w.sum()
            picked = list(np.array(outside)[rng.choice(len(outside), b_out, replace=False, p=p)])
        else:
            picked = []
    lines = np.zeros(n, dtype=bool)
    lines[acs_lines] = True
    lines[list(map(int, picked))] = True
    if int(lines.sum()) != total:
        raise AssertionError(
            f"line budget violated: kept {int(lines.sum())}, wanted {total}"
        )
    rows = spec.rows if spec.rows is not None else n
    grid = np.broadcast_to(lines, (rows, n)).copy()
    return Mask(kept=grid, kind="kspace", meta=asdict(spec))


@dataclass(frozen=True)
class AntennaMaskSpec:
    """Deactivation pattern over a receive x transmit array.

    Periodic geometry turns off indices divisible by interval_d along the
    chosen axis; random geometry turns off a uniform subset of the same size
    (or an explicit off_budget).
    """

    n_rx: int
    n_tx: int
    geometry: str
    interval_d: int = 2
    off_budget: int | None = None
    axis: str = "tx"
    seed: int = 0

    def __post_init__(self):
        if self.n_rx < 1 or self.n_tx < 1:
            raise ValueError("array dimensions must be positive")
        if self.geometry not in ("periodic", "random"):
            raise ValueError(f"unknown antenna geometry {self.geometry!r}")
        if self.interval_d < 1:
            raise ValueError(f"interval_d must be >= 1, got {self.interval_d}")
        if self.axis not in ("rx", "tx", "both"):
            raise ValueError(f"axis must be rx, tx or both, got {self.axis!r}")


def _off_indices(n, spec, rng):
    if spec.geometry == "periodic":
        return list(range(0, n, spec.interval_d))
    budget = spec.off_budget
    if budget is None:
        budget = math.ceil(n / spec.interval_d)
    if budget > n:
        raise ValueError(f"off_budget {budget} exceeds axis length {n}")
    return list(choose_k(rng, n, budget))


def antenna_mask(spec):
    """Active-element mask (True = powered) for an n_rx x n_tx array."""
    rng = make_rng(spec.seed)
    kept = np.ones((spec.n_rx, spec.n_tx), dtype=bool)
    if spec.axis in ("rx", "both"):
        kept[_off_indices(spec.n_rx, spec, rng), :] = False
    if spec.axis in ("tx", "both"):
        kept[:, _off_indices(spec.n_tx, spec, rng)] = False
    if not kept.any():
        raise ValueError("spec deactivates every element")
    return Mask(kept=kept, kind="antenna", meta=asdict(spec))


def apply_mask(field, mask):
    """Elementwise product of a field with the keep-grid."""
    f = as_field(field)
    if f.shape != mask.shape:
        raise ValueError(f"field {f.shape} vs mask {mask.shape}")
    return f * mask.kept


def save_mask(mask, path):
    """Write the keep-grid as ARR1 u8 next to a JSON sidecar with the spec."""
    write_arr1(path, mask.kept.astype(np.uint8))
    sidecar = {"kind": mask.kind, "spec": mask.meta}
    with open(_sidecar_path(path), "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_mask(path):
    """Read a mask written by save_mask; missing sidecar degrades to bare meta."""
    kept = read_arr1(path).astype(bool)
    side = _sidecar_path(path)
    kind, meta = "unknown", {}
    if os.path.exists(side):
        with open(side, "r", encoding="utf-8") as fh:
            loaded = json.load(fh)
        kind = loaded.get("kind", "unknown")
        meta = loaded.get("spec", {})
    return Mask(kept=kept, kind=kind, meta=meta)


def _sidecar_path(path):
    base, ext = os.path.splitext(str(path))
    return base + ".json" if ext else str(path) + ".json"
