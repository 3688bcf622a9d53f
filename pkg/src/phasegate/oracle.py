"""Independent theory checks: discrete Wigner identities and concentration.

Everything here is written the slow, literal way on purpose. The discrete
Wigner distribution of an odd-length signal is evaluated straight from its
defining sum, the masking law as an explicit circular convolution over the
frequency axis, and the folding identity bin by bin. These routines exist to
cross-check the windowed-spectrogram machinery, not to be fast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import ols_pearson
from .phase_space import HusimiParams, husimi

__all__ = [
    "DiscreteWigner1D",
    "wigner1d",
    "check_product_convolution",
    "check_folding_identity",
    "check_jensen_mixture",
    "ConcentrationCurve",
    "concentration_experiment",
]


def _as_signal(x, name="signal"):
    v = np.asarray(x, dtype=np.complex128).ravel()
    if v.size < 1:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(v.view(np.float64))):
        raise ValueError(f"{name} contains non-finite values")
    return v


@dataclass(frozen=True)
class DiscreteWigner1D:
    """Real phase-space matrix W[x, k] of an odd-length signal."""

    n: int
    values: np.ndarray


def wigner1d(signal):
    """Discrete Wigner distribution of an odd-length 1D signal.

    W[x, k] = sum_xi I[x+xi] * conj(I[x-xi]) * exp(-4j*pi*k*xi/n), indices
    mod n. Odd n makes the doubling map invertible, so the marginals come out
    clean: sum_k W[x, :]/n = |I[x]|^2 and sum_x W[:, k]/n = |Ihat[k]|^2 with
    the orthonormal DFT. The result is real up to rounding; the imaginary
    residual is checked and dropped.
    """
    v = _as_signal(signal)
    n = v.size
    if n % 2 == 0:
        raise ValueError(f"signal length must be odd, got {n}")
    idx = np.arange(n)
    plus = (idx[:, None] + idx[None, :]) % n  # [x, xi]
    minus = (idx[:, None] - idx[None, :]) % n
    corr = v[plus] * np.conj(v[minus])
    kernel = np.exp(-4j * math.pi * np.outer(idx, idx) / n)  # [xi, k]
    w = corr @ kernel
    scale = float(np.abs(w).max()) or 1.0
    resid = float(np.abs(w.imag).max())
    if resid > 1e-8 * scale:
        raise AssertionError(f"Wigner matrix not real: imag residual {resid}")
    return DiscreteWigner1D(n=n, values=w.real)


def check_product_convolution(mask_values, signal):
    """Max abs error of W_{M*I} against (1/n) * (W_M conv_k W_I).

    The convolution is circular over the frequency axis at each position.
    Exact (to rounding) for any odd-length mask/signal pair.
    """
    m = _as_signal(mask_values, "mask_values")
    v = _as_signal(signal)
    if m.size != v.size:
        raise ValueError(f"length mismatch {m.size} vs {v.size}")
    n = v.size
    w_prod = wigner1d(m * v).values
    w_m = wigner1d(m).values
    w_i = wigner1d(v).values
    conv = np.zeros_like(w_m)
    for q in range(n):
        conv += w_m[:, q, None] * w_i[:, (np.arange(n) - q) % n]
    return float(np.max(np.abs(w_prod - conv / n)))


def check_folding_identity(signal, q):
    """Max abs error of the comb-masking identity on the DFT.

    Keeping every q-th sample (q dividing n) folds the spectrum:
    DFT(I * comb_q)[k] = (1/q) * sum_m DFT(I)[(k - m*n/q) mod n].
    """
    v = _as_signal(signal)
    n = v.size
    if q < 1 or n % q != 0:
        raise ValueError(f"q = {q} must divide the signal length {n}")
    comb = np.zeros(n)
    comb[::q] = 1.0
    lhs = np.fft.fft(v * comb)
    spec = np.fft.fft(v)
    rhs = np.zeros(n, dtype=np.complex128)
    for m in range(q):
        rhs += np.roll(spec, m * (n // q))
    rhs /= q
    return float(np.max(np.abs(lhs - rhs)))


def check_jensen_mixture(components, weights):
    """Mixture entropy pair (H(sum_i w_i p_i), sum_i w_i H(p_i)).

    The first element is at least the second by concavity, with equality
    exactly when all components coincide. Components are rows of a (m, d)
    array of probability vectors, weights a simplex vector of length m.
    """
    p = np.asarray(components, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64).ravel()
    if p.ndim != 2 or p.shape[0] != w.size:
        raise ValueError("components must be (m, d) with one weight per row")
    if np.any(p < 0) or np.any(w < 0):
        raise ValueError("probabilities and weights must be nonnegative")
    if abs(w.sum() - 1.0) > 1e-9:
        raise ValueError(f"weights sum to {w.sum()}, expected 1")
    rowsums = p.sum(axis=1)
    if np.any(np.abs(rowsums - 1.0) > 1e-9):
        raise ValueError("every component must sum to 1")

    def ent(vec):
        nz = vec[vec > 0]
        return float(-np.sum(nz * np.log(nz)))

    mix = w @ p
    return ent(mix), float(np.sum(w * np.array([ent(row) for row in p])))


def default_concentration_field(side, rng):
    """Stationary mildly filtered noise field on a square grid.

    White Gaussian pixels passed through a separable 3-tap smoothing kernel
    with small outer taps. The spectrum must stay near flat here: the
    window-averaged masked-minus-clean spectrum has a stationary mean offset
    proportional to the coloring, and once that offset rises above the
    window-count fluctuations the averaging law this generator feeds stops
    being visible. Mild taps keep the offset an order of magnitude below the
    fluctuation term across the default window counts.
    """
    f = rng.standard_normal((side, side))
    k = np.array([0.005, 1.0, 0.005])
    k /= k.sum()
    f = np.apply_along_axis(lambda r: np.convolve(np.r_[r[-1], r, r[0]], k, "valid"), 1, f)
    f = np.apply_along_axis(lambda c: np.convolve(np.r_[c[-1], c, c[0]], k, "valid"), 0, f)
    return f


@dataclass(frozen=True)
class ConcentrationCurve:
    """Mean band-L1 deviation against window count with its log-log fit."""

    ns: tuple
    l1_means: tuple
    slope: float
    fit: object


def concentration_experiment(
    ns=(64, 256, 1024, 4096),
    keep_prob=0.5,
    params=None,
    trials=64,
    seed=0,
    field_gen=default_concentration_field,
):
    """Measure how Bernoulli masking noise averages out with window count.

    For each target window count N a square grid is sized to hold N
    non-overlapping windows. Per trial a fresh field is masked by Bernoulli
    keeps of probability rho scaled by 1/sqrt(rho) (so kept energy is
    unbiased), and the band L1 distance between the window-averaged spectra
    of the masked and clean fields is recorded. Averaging over windows is
    what contracts the distance; the log-log slope of the mean distance
    against N is returned alongside the raw curve (independent increments
    give a slope near -1/2).
    """
    if params is None:
        params = HusimiParams(win=8, sigma=8 / 3.0, hop=8)
    if not 0.0 < keep_prob <= 1.0:
        raise ValueError(f"keep_prob must be in (0, 1], got {keep_prob}")
    if trials < 2:
        raise ValueError("need at least two trials")
    if len(ns) < 2:
        raise ValueError("need at least two window counts to fit a slope")
    means = []
    for n_idx, n_windows in enumerate(ns):
        m = int(round(math.sqrt(n_windows)))
        if m * m != n_windows:
            raise ValueError(f"window counts must be squares, got {n_windows}")
        side = params.win + params.hop * (m - 1)
        vals = []
        for t in range(trials):
            rng = np.random.default_rng(np.random.SeedSequence([int(seed), n_idx, t]))
            field = field_gen(side, rng)
            keep = rng.random((side, side)) < keep_prob
            masked = field * keep / math.sqrt(keep_prob)
            d_ref = husimi(field, params)
            d_mask = husimi(masked, params)
            mean_ref = d_ref.spectra.mean(axis=0)
            mean_mask = d_mask.spectra.mean(axis=0)
            vals.append(float(np.sum(np.abs(mean_mask - mean_ref))))
        means.append(float(np.mean(vals)))
    fit = ols_pearson(np.log(np.asarray(ns, dtype=float)), np.log(means))
    return ConcentrationCurve(
        ns=tuple(int(n) for n in ns),
        l1_means=tuple(means),
        slope=fit.slope,
        fit=fit,
    )
