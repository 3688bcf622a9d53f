"""Windowed phase-space densities and band entropies of 2D fields.

The density of a field is the set of local power spectra obtained by sliding
a Gaussian-windowed patch over the grid: at each window position the patch is
apodized, transformed with the centered orthonormal DFT, and squared. Each
spectrum is then normalized over a frequency band to a probability vector and
scored with the Shannon entropy (nats). The global band entropy of a field is
the mean of the per-window entropies, either uniform or weighted by window
energy, and the quantity of interest downstream is the difference of global
entropies between an acquired (masked) field and its reference.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .numerics import gaussian_window2d
from .validation import as_field, check_same_shape

__all__ = [
    "EmptyAuditError",
    "HusimiParams",
    "PhaseSpaceDensity",
    "EntropyResult",
    "DeltaSReport",
    "ScaleEntry",
    "husimi",
    "band_normalize",
    "band_entropy",
    "delta_s",
    "default_scale_ladder",
    "multiscale_delta_s",
    "comparative_advantage",
]

DEFAULT_ENERGY_FLOOR = 1e-6


class EmptyAuditError(ValueError):
    """Raised when every window of a field is excluded by the energy floor."""


@dataclass(frozen=True)
class HusimiParams:
    """Window parameters for the local spectrogram.

    win : side length of the square analysis window (pixels)
    sigma : Gaussian apodization width (pixels)
    hop : stride between window positions (pixels)
    band : optional boolean (win, win) mask selecting the frequency band;
        None means all win*win bins.
    """

    win: int
    sigma: float
    hop: int
    band: np.ndarray | None = None

    def __post_init__(self):
        if self.win < 1:
            raise ValueError(f"win must be >= 1, got {self.win}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.hop < 1:
            raise ValueError(f"hop must be >= 1, got {self.hop}")
        if self.hop > self.win:
            raise ValueError(
                f"hop {self.hop} exceeds win {self.win}; windows would skip samples"
            )
        if self.band is not None:
            b = np.asarray(self.band, dtype=bool)
            if b.shape != (self.win, self.win):
                raise ValueError(
                    f"band shape {b.shape} does not match window ({self.win}, {self.win})"
                )
            if not b.any():
                raise ValueError("band must contain at least one bin")
            object.__setattr__(self, "band", b)

    def band_mask(self):
        if self.band is None:
            return np.ones((self.win, self.win), dtype=bool)
        return self.band

    def band_size(self):
        return int(self.band_mask().sum())


@dataclass
class PhaseSpaceDensity:
    """Per-window band spectra of one field.

    spectra : (n_windows, n_band_bins) float64, band-restricted power
    positions : (n_windows, 2) int64 top-left window corners
    energies : (n_windows,) float64 band energy of each window before any
        normalization
    params : HusimiParams used to build the density
    normalized : True once band_normalize has run
    excluded : boolean (n_windows,) flags for windows under the energy floor
        (all False before normalization)
    """

    spectra: np.ndarray
    positions: np.ndarray
    energies: np.ndarray
    params: HusimiParams
    normalized: bool = False
    excluded: np.ndarray = dc_field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.excluded is None:
            self.excluded = np.zeros(self.spectra.shape[0], dtype=bool)

    @property
    def n_windows(self):
        return self.spectra.shape[0]


def _window_grid(shape, win, hop):
    rows, cols = shape
    if win > rows or win > cols:
        raise ValueError(f"win {win} exceeds grid {rows}x{cols}")
    r0 = np.arange(0, rows - win + 1, hop, dtype=np.int64)
    c0 = np.arange(0, cols - win + 1, hop, dtype=np.int64)
    return r0, c0


def husimi(field, params):
    """Windowed power spectra of a field at every window position.

    Windows tile the grid from (0, 0) at stride ``hop``; only fully in-bounds
    windows count. Each patch is multiplied by the unit-energy Gaussian
    window and transformed with the centered orthonormal DFT; the returned
    spectra are squared magnitudes restricted to the band.

    Parameters
    ----------
    field : array_like (2D)
        Real or complex field.
    params : HusimiParams

    Returns
    -------
    PhaseSpaceDensity
    """
    f = as_field(field)
    r0, c0 = _window_grid(f.shape, params.win, params.hop)
    w2d = gaussian_window2d(params.win, params.sigma)
    patches = sliding_window_view(f, (params.win, params.win))[:: params.hop, :: params.hop]
    windowed = patches * w2d
    spec = np.fft.fft2(windowed, norm="ortho")
    power = np.fft.fftshift(np.abs(spec) ** 2, axes=(-2, -1))
    band = params.band_mask()
    flat = power.reshape(-1, params.win, params.win)[:, band]
    energies = flat.sum(axis=1)
    rr, cc = np.meshgrid(r0, c0, indexing="ij")
    positions = np.stack([rr.ravel(), cc.ravel()], axis=1)
    return PhaseSpaceDensity(
        spectra=flat.astype(np.float64),
        positions=positions,
        energies=energies.astype(np.float64),
        params=params,
    )


def band_normalize(density, energy_floor=DEFAULT_ENERGY_FLOOR):
    """Normalize each window spectrum to a probability vector over the band.

    Windows whose band energy is at or below ``energy_floor`` are flagged
    excluded and their spectra left as zeros; they take no further part in
    entropy averages.
    """
    if energy_floor < 0:
        raise ValueError(f"energy_floor must be >= 0, got {energy_floor}")
    excluded = density.energies <= energy_floor
    out = np.zeros_like(density.spectra)
    keep = ~excluded
    if np.any(keep):
        out[keep] = density.spectra[keep] / density.energies[keep, None]
    return PhaseSpaceDensity(
        spectra=out,
        positions=density.positions,
        energies=density.energies.copy(),
        params=density.params,
        normalized=True,
        excluded=excluded,
    )


@dataclass(frozen=True)
class EntropyResult:
    """Global band entropy plus the per-window values that produced it."""

    global_entropy: float
    per_window: np.ndarray
    weighting: str
    n_excluded: int


def _entropy_rows(p):
    # 0 * log 0 := 0
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(p), 0.0)
    return -terms.sum(axis=1)


def band_entropy(density, weighting="uniform"):
    """Shannon entropy (nats) of each normalized window spectrum, averaged.

    ``weighting="uniform"`` takes the arithmetic mean over non-excluded
    windows; ``"energy"`` weights each window by its band energy. Requires a
    normalized density; raises EmptyAuditError if no window survived the
    floor.
    """
    if not density.normalized:
        raise ValueError("density must be band-normalized first")
    if weighting not in ("uniform", "energy"):
        raise ValueError(f"unknown weighting {weighting!r}")
    keep = ~density.excluded
    if not np.any(keep):
        raise EmptyAuditError("all windows excluded by the energy floor")
    ent = _entropy_rows(density.spectra)
    ent[~keep] = np.nan
    if weighting == "uniform":
        global_s = float(np.mean(ent[keep]))
    else:
        w = density.energies[keep]
        global_s = float(np.sum(ent[keep] * w) / np.sum(w))
    return EntropyResult(
        global_entropy=global_s,
        per_window=ent,
        weighting=weighting,
        n_excluded=int((~keep).sum()),
    )


@dataclass(frozen=True)
class ScaleEntry:
    """One scale of a multiscale audit: window parameters and both entropies."""

    win: int
    sigma: float
    hop: int
    s_ref: float
    s_acq: float


@dataclass(frozen=True)
class DeltaSReport:
    """Entropy difference acquired - reference for one field pair.

    ``scales`` is populated only by multiscale audits, in which case
    ``params`` is None and the per-scale entropies (NaN where a scale was
    dropped for that field) live in the ScaleEntry tuple.
    """

    s_ref: float
    s_acq: float
    delta: float
    weighting: str
    params: HusimiParams | None
    n_excluded_ref: int
    n_excluded_acq: int
    scales: tuple | None = None
    abs_delta: float = dc_field(init=False, default=0.0)

    def __post_init__(self):
        object.__setattr__(self, "abs_delta", abs(float(self.delta)))


def delta_s(reference, acquired, params, weighting="uniform", energy_floor=DEFAULT_ENERGY_FLOOR):
    """Global band-entropy change from reference to acquired field.

    Both fields are analyzed with the same window parameters; the report's
    ``delta`` is ``S(acquired) - S(reference)`` in nats.
    """
    ref = as_field(reference, "reference")
    acq = as_field(acquired, "acquired")
    check_same_shape(ref, acq, "reference", "acquired")
    ent = []
    excl = []
    for f in (ref, acq):
        d = band_normalize(husimi(f, params), energy_floor)
        e = band_entropy(d, weighting)
        ent.append(e.global_entropy)
        excl.append(e.n_excluded)
    return DeltaSReport(
        s_ref=ent[0],
        s_acq=ent[1],
        delta=ent[1] - ent[0],
        weighting=weighting,
        params=params,
        n_excluded_ref=excl[0],
        n_excluded_acq=excl[1],
    )


def default_scale_ladder(shape, hop_ratio=1.0):
    """Window ladder for multiscale audits of a grid of the given shape.

    Windows 32, 48, 64, 96, 128, 192, 256 intersected with the grid size;
    sigma is win / 6 and hop is ``hop_ratio * win`` (rounded, at least 1).
    """
    limit = min(shape)
    ladder = []
    for win in (32, 48, 64, 96, 128, 192, 256):
        if win <= limit:
            hop = max(1, int(round(hop_ratio * win)))
            ladder.append((win, win / 6.0, hop))
    if not ladder:
        raise ValueError(f"grid {shape} smaller than the smallest scale (32)")
    return ladder


def multiscale_delta_s(
    reference,
    acquired,
    scales=None,
    weighting="energy",
    energy_floor=DEFAULT_ENERGY_FLOOR,
    hop_ratio=1.0,
):
    """Entropy change averaged over a ladder of window scales.

    Per scale the global entropy of each field is energy-weighted by default.
    A scale at which every window of a field is excluded is dropped from that
    field's scale mean; a field with no usable scale at all raises
    EmptyAuditError.

    Returns
    -------
    DeltaSReport
        ``scales`` holds one ScaleEntry per ladder rung with both per-scale
        entropies (NaN where a scale was dropped for that field); ``s_ref``
        and ``s_acq`` are the usable-scale means.
    """
    ref = as_field(reference, "reference")
    acq = as_field(acquired, "acquired")
    check_same_shape(ref, acq, "reference", "acquired")
    if scales is None:
        scales = default_scale_ladder(ref.shape, hop_ratio)
    scales = tuple((int(w), float(s), int(h)) for (w, s, h) in scales)
    if not scales:
        raise ValueError("empty scale list")
    per = {0: [], 1: []}
    n_excl = [0, 0]
    for win, sigma, hop in scales:
        p = HusimiParams(win=win, sigma=sigma, hop=hop)
        for idx, f in enumerate((ref, acq)):
            try:
                e = band_entropy(band_normalize(husimi(f, p), energy_floor), weighting)
                per[idx].append(e.global_entropy)
                n_excl[idx] += e.n_excluded
            except EmptyAuditError:
                per[idx].append(np.nan)
    s_ref_scales = np.array(per[0])
    s_acq_scales = np.array(per[1])
    means = []
    for vals in (s_ref_scales, s_acq_scales):
        ok = np.isfinite(vals)
        if not ok.any():
            raise EmptyAuditError("no scale produced a usable entropy")
        means.append(float(np.mean(vals[ok])))
    entries = tuple(
        ScaleEntry(win=w, sigma=s, hop=h, s_ref=float(sr), s_acq=float(sa))
        for (w, s, h), sr, sa in zip(scales, s_ref_scales, s_acq_scales)
    )
    return DeltaSReport(
        s_ref=means[0],
        s_acq=means[1],
        delta=means[1] - means[0],
        weighting=weighting,
        params=None,
        n_excluded_ref=n_excl[0],
        n_excluded_acq=n_excl[1],
        scales=entries,
    )


def comparative_advantage(deltas_a, deltas_b, lower_better=True, normalize=False):
    """Per-pair advantage of policy B over policy A from paired delta lists.

    With ``lower_better`` (the default: a smaller entropy change means less
    perturbation) the advantage is ``a - b``, positive when B perturbs less.
    ``normalize`` rescales the pooled values to [0, 1] before differencing,
    which makes advantages comparable across studies with different entropy
    ranges.
    """
    a = np.asarray(deltas_a, dtype=np.float64).ravel()
    b = np.asarray(deltas_b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError(f"paired lists must match: {a.shape[0]} vs {b.shape[0]}")
    if a.size == 0:
        raise ValueError("empty delta lists")
    if normalize:
        pool = np.concatenate([a, b])
        lo, hi = float(pool.min()), float(pool.max())
        if hi > lo:
            a = (a - lo) / (hi - lo)
            b = (b - lo) / (hi - lo)
        else:
            a = np.zeros_like(a)
            b = np.zeros_like(b)
    return a - b if lower_better else b - a
