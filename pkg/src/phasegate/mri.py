"""Multi-coil k-space simulation, reconstruction and image quality metrics.

The reconstruction path is deliberately plain: inverse centered orthonormal
DFT per coil, root-sum-of-squares combination, magnitude normalized by the
fully sampled reference maximum. Undersampling is simulated by zeroing
k-space with a line mask and reconstructing the rest unchanged (zero-filled
recon), which keeps the link between mask geometry and image artifacts
explicit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter
from scipy.signal import convolve2d

from .numerics import dft2_centered, make_rng
from .validation import as_real_field, check_same_shape

__all__ = [
    "MultiCoilKSpace",
    "MagnitudeImage",
    "phantom",
    "rss_reconstruct",
    "zero_fill",
    "psnr",
    "ssim",
    "kspace_l2",
    "PSNR_CAP_DB",
]

PSNR_CAP_DB = 200.0


@dataclass
class MultiCoilKSpace:
    """Fully or partially sampled k-space, shape (coils, rows, cols)."""

    data: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.data, dtype=np.complex128)
        if a.ndim != 3 or a.shape[0] < 1:
            raise ValueError(f"k-space must be (coils, rows, cols), got {a.shape}")
        if not (np.all(np.isfinite(a.real)) and np.all(np.isfinite(a.imag))):
            raise ValueError("k-space contains non-finite values")
        self.data = a

    @property
    def coils(self):
        return self.data.shape[0]

    @property
    def shape(self):
        return self.data.shape[1:]


@dataclass(frozen=True)
class MagnitudeImage:
    """Combined magnitude image and the normalization it was divided by."""

    pixels: np.ndarray
    norm: float


def _coil_images(kspace):
    return np.stack([dft2_centered(c, inverse=True) for c in kspace.data])


def rss_reconstruct(kspace, norm=None):
    """Root-sum-of-squares magnitude image from multi-coil k-space.

    With ``norm=None`` the image is divided by its own maximum (the fully
    sampled convention); passing a norm reuses a reference normalization so
    degraded reconstructions stay on the same scale.
    """
    imgs = _coil_images(kspace)
    mag = np.sqrt(np.sum(np.abs(imgs) ** 2, axis=0))
    if norm is None:
        norm = float(mag.max())
        if norm == 0.0:
            raise ValueError("all-zero k-space has no usable normalization")
    elif not norm > 0:
        raise ValueError(f"norm must be positive, got {norm}")
    return MagnitudeImage(pixels=mag / norm, norm=float(norm))


def zero_fill(kspace, mask, reference_norm=None):
    """Reconstruct after zeroing unmeasured k-space lines.

    ``reference_norm`` should be the norm of the fully sampled
    reconstruction; without it the degraded image is self-normalized.
    """
    if mask.shape != kspace.shape:
        raise ValueError(f"mask {mask.shape} vs k-space grid {kspace.shape}")
    masked = MultiCoilKSpace(kspace.data * mask.kept)
    return rss_reconstruct(masked, norm=reference_norm)


def psnr(image, reference, peak=1.0):
    """Peak signal-to-noise ratio in dB; +inf for identical images."""
    a = as_real_field(image, "image")
    b = as_real_field(reference, "reference")
    check_same_shape(a, b, "image", "reference")
    if not peak > 0:
        raise ValueError(f"peak must be positive, got {peak}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak**2 / mse)


def _ssim_kernel(size=11, sigma=1.5):
    u = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(u**2) / (2.0 * sigma**2))
    k = np.outer(g, g)
    return k / k.sum()


def ssim(image, reference, peak=1.0, k1=0.01, k2=0.03):
    """Mean structural similarity over 11x11 Gaussian-weighted windows.

    Local means/variances use a sigma 1.5 Gaussian weighting and valid-mode
    windows; stabilizers are C1 = (k1*peak)^2 and C2 = (k2*peak)^2. Inputs
    must be at least 11 pixels on each side.
    """
    a = as_real_field(image, "image")
    b = as_real_field(reference, "reference")
    check_same_shape(a, b, "image", "reference")
    if min(a.shape) < 11:
        raise ValueError(f"images must be at least 11x11, got {a.shape}")
    w = _ssim_kernel()
    mu1 = convolve2d(a, w, mode="valid")
    mu2 = convolve2d(b, w, mode="valid")
    s11 = convolve2d(a * a, w, mode="valid") - mu1**2
    s22 = convolve2d(b * b, w, mode="valid") - mu2**2
    s12 = convolve2d(a * b, w, mode="valid") - mu1 * mu2
    c1 = (k1 * peak) ** 2
    c2 = (k2 * peak) ** 2
    num = (2 * mu1 * mu2 + c1) * (2 * s12 + c2)
    den = (mu1**2 + mu2**2 + c1) * (s11 + s22 + c2)
    return float(np.mean(num / den))


def kspace_l2(kspace, mask):
    """Relative L2 energy of the k-space content a mask throws away.

    sqrt(sum over unmeasured bins of |K|^2 / total |K|^2); 0 for a full mask,
    1 for an empty one.
    """
    if mask.shape != kspace.shape:
        raise ValueError(f"mask {mask.shape} vs k-space grid {kspace.shape}")
    p = np.abs(kspace.data) ** 2
    total = float(p.sum())
    if total == 0.0:
        raise ValueError("all-zero k-space")
    missed = float((p * ~mask.kept[None, :, :]).sum())
    return math.sqrt(missed / total)


# Baseline ellipse stack for the synthetic head phantom: additive intensity,
# semi-axes, center and rotation in [-1, 1]^2 coordinates.
_ELLIPSES = [
    (0.80, 0.72, 0.92, 0.0, 0.0, 0.0),
    (-0.35, 0.65, 0.85, 0.0, -0.02, 0.0),
    (0.28, 0.42, 0.60, 0.0, -0.05, 0.0),
    (-0.12, 0.14, 0.28, 0.24, 0.10, -0.35),
    (-0.12, 0.12, 0.26, -0.24, 0.10, 0.30),
    (0.18, 0.16, 0.21, 0.0, 0.38, 0.0),
    (0.10, 0.046, 0.046, 0.0, -0.12, 0.0),
    (0.10, 0.040, 0.040, -0.08, -0.55, 0.0),
    (0.10, 0.030, 0.056, 0.06, -0.55, 0.0),
    (0.08, 0.09, 0.05, 0.30, -0.40, 0.6),
]


def _phantom_image(rows, cols, rng):
    y, x = np.meshgrid(
        np.linspace(-1.0, 1.0, rows), np.linspace(-1.0, 1.0, cols), indexing="ij"
    )
    img = np.zeros((rows, cols))
    for val, a, b, x0, y0, phi in _ELLIPSES:
        # Jitter every ellipse a little so each seed is a distinct slice.
        a_j = a * (1.0 + 0.08 * rng.standard_normal())
        b_j = b * (1.0 + 0.08 * rng.standard_normal())
        x0_j = x0 + 0.03 * rng.standard_normal()
        y0_j = y0 + 0.03 * rng.standard_normal()
        phi_j = phi + 0.1 * rng.standard_normal()
        c, s = math.cos(phi_j), math.sin(phi_j)
        xr = (x - x0_j) * c + (y - y0_j) * s
        yr = -(x - x0_j) * s + (y - y0_j) * c
        img += val * ((xr / a_j) ** 2 + (yr / b_j) ** 2 <= 1.0)
    img = np.clip(img, 0.0, None)
    support = img > 0.02
    # Smooth shading plus fine tissue texture inside the head.
    shade = 1.0 + 0.12 * (
        rng.uniform(-1, 1) * x + rng.uniform(-1, 1) * y + rng.uniform(-1, 1) * x * y
    )
    tex = rng.standard_normal((rows, cols))
    kern = _ssim_kernel(size=5, sigma=1.0)
    tex = convolve2d(tex, kern, mode="same", boundary="symm")
    img = img * shade + 0.035 * tex * support
    img = np.clip(img, 0.0, None)
    # Soften tissue boundaries: measured slices do not have ideal step edges.
    img = gaussian_filter(img, 1.3)
    m = img.max()
    if m > 0:
        img /= m
    return img


def _coil_sensitivities(rows, cols, coils, rng):
    if coils == 1:
        return np.ones((1, rows, cols), dtype=np.complex128)
    y, x = np.meshgrid(
        np.linspace(-1.0, 1.0, rows), np.linspace(-1.0, 1.0, cols), indexing="ij"
    )
    sens = np.empty((coils, rows, cols), dtype=np.complex128)
    for c in range(coils):
        ang = 2.0 * math.pi * c / coils + 0.2 * rng.standard_normal()
        cx, cy = 1.25 * math.cos(ang), 1.25 * math.sin(ang)
        r2 = (x - cx) ** 2 + (y - cy) ** 2
        amp = 0.35 + np.exp(-r2 / (2.0 * 1.1**2))
        phase = 0.6 * rng.standard_normal() * x + 0.6 * rng.standard_normal() * y
        sens[c] = amp * np.exp(1j * phase)
    return sens


def phantom(rows, cols, coils=4, seed=0):
    """Synthetic fully sampled multi-coil k-space of a head-like slice.

    A jittered ellipse phantom with smooth shading and fine texture is
    multiplied by smooth complex coil profiles and transformed with the
    centered orthonormal DFT. Deterministic per (rows, cols, coils, seed);
    with a single coil the sensitivity is exactly 1, so reconstruction
    round-trips the phantom image.
    """
    if rows < 32 or cols < 32:
        raise ValueError(f"phantom grid too small: {rows}x{cols}, need >= 32 per side")
    if coils < 1:
        raise ValueError("need at least one coil")
    rng = make_rng(seed)
    img = _phantom_image(rows, cols, rng)
    sens = _coil_sensitivities(rows, cols, coils, rng)
    k = np.stack([dft2_centered(img * sens[c]) for c in range(coils)])
    return MultiCoilKSpace(k)
