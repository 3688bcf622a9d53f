"""Shared numerical kernels: centered DFTs, Gaussian windows, seeded RNG, OLS/Pearson.

All frequency-domain code in this package uses one convention, defined here:
the orthonormal DFT with the zero-frequency bin at index ``n // 2`` on each
axis.  Keeping the convention in a single module means every other module can
state its contracts in terms of ``dft2_centered`` and nothing else.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "dft2_centered",
    "dft1_centered",
    "gaussian_window",
    "gaussian_window2d",
    "make_rng",
    "derive_seed",
    "choose_k",
    "FitResult",
    "ols_pearson",
]


def dft2_centered(grid, inverse=False):
    """Orthonormal 2D DFT with the DC bin at the array center.

    Parameters
    ----------
    grid : ndarray (2D)
        Input field, real or complex. Any side lengths are supported.
    inverse : bool
        If True, apply the inverse transform.

    Returns
    -------
    ndarray (2D, complex128)
        Transformed grid, same shape. The zero-frequency component sits at
        index ``(rows // 2, cols // 2)``. Forward followed by inverse is the
        identity, and energy is preserved (Parseval) because the transform
        is orthonormal.
    """
    g = np.asarray(grid)
    if g.ndim != 2:
        raise ValueError(f"expected a 2D grid, got shape {g.shape}")
    shifted = np.fft.ifftshift(g)
    if inverse:
        out = np.fft.ifft2(shifted, norm="ortho")
    else:
        out = np.fft.fft2(shifted, norm="ortho")
    return np.fft.fftshift(out).astype(np.complex128, copy=False)


def dft1_centered(vec, inverse=False):
    """1D counterpart of :func:`dft2_centered` (orthonormal, DC at ``n // 2``)."""
    v = np.asarray(vec)
    if v.ndim != 1:
        raise ValueError(f"expected a 1D vector, got shape {v.shape}")
    shifted = np.fft.ifftshift(v)
    out = np.fft.ifft(shifted, norm="ortho") if inverse else np.fft.fft(shifted, norm="ortho")
    return np.fft.fftshift(out).astype(np.complex128, copy=False)


def gaussian_window(size, sigma):
    """Sampled Gaussian window, normalized to unit energy.

    ``w[u] propto exp(-(u - c)^2 / (2 sigma^2))`` with ``c = (size - 1) / 2``,
    scaled so ``sum(w**2) == 1``. For ``sigma -> inf`` the window tends to the
    flat window ``1 / sqrt(size)``.

    Parameters
    ----------
    size : int
        Number of taps, ``>= 1``.
    sigma : float
        Width in samples, ``> 0``.

    Returns
    -------
    ndarray (1D, float64)
    """
    if size < 1:
        raise ValueError(f"window size must be >= 1, got {size}")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    u = np.arange(size, dtype=np.float64)
    c = (size - 1) / 2.0
    w = np.exp(-((u - c) ** 2) / (2.0 * sigma**2))
    return w / math.sqrt(float(np.sum(w**2)))


def gaussian_window2d(size, sigma):
    """Separable 2D Gaussian window with unit total energy (outer product)."""
    g = gaussian_window(size, sigma)
    return np.outer(g, g)


def make_rng(seed):
    """Deterministic generator for the given 64-bit seed.

    Same seed, same stream, independent of platform; all randomized code in
    the package draws from generators built here.
    """
    return np.random.default_rng(np.random.SeedSequence(int(seed)))


def derive_seed(base_seed, *indices):
    """Stable 64-bit child seed for (base_seed, index...) tuples.

    Used to give every slice / trial / mask its own stream while keeping a
    single user-facing seed.
    """
    ss = np.random.SeedSequence([int(base_seed)] + [int(i) for i in indices])
    return int(ss.generate_state(1, np.uint64)[0])


def choose_k(rng, n, k):
    """Uniform random k-subset of ``range(n)``, without replacement.

    Returns a sorted int64 array of length ``k``. Raises ``ValueError`` when
    ``k`` is outside ``[0, n]``.
    """
    if k < 0 or k > n:
        raise ValueError(f"cannot choose {k} items from {n}")
    picked = rng.choice(n, size=k, replace=False)
    return np.sort(picked.astype(np.int64))


@dataclass(frozen=True)
class FitResult:
    """Least-squares line plus Pearson correlation with a Fisher-z interval."""

    slope: float
    intercept: float
    pearson_r: float
    r_ci_low: float
    r_ci_high: float
    n: int

    def to_dict(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "pearson_r": self.pearson_r,
            "r_ci_low": self.r_ci_low,
            "r_ci_high": self.r_ci_high,
            "n": self.n,
        }


def ols_pearson(xs, ys):
    """Ordinary least squares fit of y on x plus Pearson r with a 95% CI.

    The confidence interval uses the Fisher z-transform,
    ``z = atanh(r) +- 1.96 / sqrt(n - 3)`` mapped back through ``tanh``.
    For ``n <= 3`` the interval is the full ``[-1, 1]``.

    Parameters
    ----------
    xs, ys : array_like (1D, equal length >= 2)

    Returns
    -------
    FitResult

    Raises
    ------
    ValueError
        If lengths differ, fewer than two points are given, or ``xs`` has
        zero variance (the slope is undefined).
    """
    x = np.asarray(xs, dtype=np.float64).ravel()
    y = np.asarray(ys, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape[0]} vs {y.shape[0]}")
    n = x.shape[0]
    if n < 2:
        raise ValueError("need at least two points")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("inputs must be finite")
    xm = x - x.mean()
    ym = y - y.mean()
    sxx = float(np.sum(xm * xm))
    syy = float(np.sum(ym * ym))
    sxy = float(np.sum(xm * ym))
    if sxx == 0.0:
        raise ValueError("x has zero variance; slope undefined")
    slope = sxy / sxx
    intercept = float(y.mean() - slope * x.mean())
    if syy == 0.0:
        r = 0.0
    else:
        r = sxy / math.sqrt(sxx * syy)
        r = max(-1.0, min(1.0, r))
    if n <= 3:
        lo, hi = -1.0, 1.0
    else:
        # atanh blows up at |r| == 1; nudge inside for the interval only.
        rc = max(-1.0 + 1e-15, min(1.0 - 1e-15, r))
        z = math.atanh(rc)
        half = 1.96 / math.sqrt(n - 3)
        lo, hi = math.tanh(z - half), math.tanh(z + half)
    return FitResult(float(slope), intercept, float(r), float(lo), float(hi), int(n))
