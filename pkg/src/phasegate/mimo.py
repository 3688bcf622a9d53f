"""Clustered geometric MIMO channels, antenna shutoff audits, completion baseline."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import make_rng
from .phase_space import HusimiParams, delta_s

__all__ = [
    "ChannelConfig",
    "Channel",
    "steering_vector",
    "gen_channel",
    "add_noise",
    "nmse",
    "baseline_complete",
    "audit_channel",
    "MIMO_HUSIMI",
]

# Window parameters used to audit channel magnitude fields.
MIMO_HUSIMI = HusimiParams(win=4, sigma=1.0, hop=1)


@dataclass(frozen=True)
class ChannelConfig:
    """Geometry and noise parameters of the clustered channel model."""

    n_rx: int = 16
    n_tx: int = 64
    n_clusters: int = 3
    paths_per_cluster: int = 10
    angular_spread_deg: float = 7.5
    snr_db: float = 15.0
    seed: int = 0

    def __post_init__(self):
        if self.n_rx < 2 or self.n_tx < 2:
            raise ValueError("arrays need at least two antennas per side")
        if self.n_clusters < 1 or self.paths_per_cluster < 1:
            raise ValueError("need at least one cluster and one path")
        if not self.angular_spread_deg >= 0:
            raise ValueError("angular spread must be >= 0")


@dataclass
class Channel:
    """A channel matrix (n_rx, n_tx) with the config that generated it."""

    h: np.ndarray
    config: ChannelConfig

    def __post_init__(self):
        a = np.asarray(self.h, dtype=np.complex128)
        if a.ndim != 2:
            raise ValueError(f"channel must be 2D, got {a.shape}")
        self.h = a


def steering_vector(n, angle):
    """Unit-norm half-wavelength ULA steering vector at the given angle (rad)."""
    if n < 1:
        raise ValueError("array size must be positive")
    i = np.arange(n)
    return np.exp(1j * math.pi * i * math.sin(angle)) / math.sqrt(n)


def gen_channel(config):
    """Draw a clustered multipath channel.

    Paths group into clusters with Laplacian angular offsets around uniform
    cluster centers; cluster powers decay exponentially (one e-fold per
    cluster) and are normalized so the average path power is one, which keeps
    E||H||_F^2 at n_rx * n_tx under the sqrt(n_rx*n_tx/L) front factor.
    """
    rng = make_rng(config.seed)
    n_paths = config.n_clusters * config.paths_per_cluster
    spread = math.radians(config.angular_spread_deg)
    cluster_power = np.exp(-np.arange(config.n_clusters, dtype=np.float64))
    cluster_power *= n_paths / (cluster_power.sum() * config.paths_per_cluster)
    h = np.zeros((config.n_rx, config.n_tx), dtype=np.complex128)
    for c in range(config.n_clusters):
        theta_c = rng.uniform(-math.pi / 2, math.pi / 2)
        phi_c = rng.uniform(-math.pi / 2, math.pi / 2)
        for _ in range(config.paths_per_cluster):
            theta = theta_c + rng.laplace(0.0, spread)
            phi = phi_c + rng.laplace(0.0, spread)
            g = math.sqrt(cluster_power[c] / 2.0) * complex(
                rng.standard_normal(), rng.standard_normal()
            )
            h += g * np.outer(steering_vector(config.n_rx, theta),
                              steering_vector(config.n_tx, phi).conj())
    h *= math.sqrt(config.n_rx * config.n_tx / n_paths)
    return Channel(h=h, config=config)


def add_noise(channel, snr_db=None, seed=0):
    """Channel plus circular complex Gaussian noise at the target SNR.

    The per-element noise variance is set from the realized channel energy so
    ||H||_F^2 / E||W||_F^2 equals 10^(snr/10).
    """
    cfg = channel.config
    if snr_db is None:
        snr_db = cfg.snr_db
    h = channel.h
    energy = float(np.sum(np.abs(h) ** 2))
    if energy == 0.0:
        raise ValueError("cannot scale noise against an all-zero channel")
    var = energy * 10.0 ** (-snr_db / 10.0) / h.size
    rng = make_rng(seed)
    w = math.sqrt(var / 2.0) * (
        rng.standard_normal(h.shape) + 1j * rng.standard_normal(h.shape)
    )
    return Channel(h=h + w, config=cfg)


def nmse(h_true, h_est):
    """Normalized mean squared error ||H - Hhat||_F^2 / ||H||_F^2."""
    a = np.asarray(h_true, dtype=np.complex128)
    b = np.asarray(h_est, dtype=np.complex128)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    denom = float(np.sum(np.abs(a) ** 2))
    if denom == 0.0:
        raise ValueError("reference channel is all zero")
    return float(np.sum(np.abs(a - b) ** 2)) / denom


def baseline_complete(h_observed, mask, rank, iters=100):
    """Low-rank completion of a partially observed channel.

    Alternates re-imposing the observed entries with truncation to the given
    rank (hard thresholding); returns the final truncated iterate.
    """
    h_obs = np.asarray(h_observed, dtype=np.complex128)
    if h_obs.shape != mask.shape:
        raise ValueError(f"observed {h_obs.shape} vs mask {mask.shape}")
    if rank < 1 or rank > min(h_obs.shape):
        raise ValueError(f"rank {rank} out of range for {h_obs.shape}")
    if iters < 1:
        raise ValueError("need at least one iteration")
    kept = mask.kept
    if not kept.any():
        raise ValueError("mask keeps no entries; nothing to complete from")
    x = h_obs * kept
    for _ in range(iters):
        x = np.where(kept, h_obs, x)
        u, s, vh = np.linalg.svd(x, full_matrices=False)
        s[rank:] = 0.0
        x = (u * s) @ vh
    return x


def audit_channel(channel, mask, params=MIMO_HUSIMI, weighting="energy",
                  energy_floor=1e-6):
    """Entropy change of the normalized channel magnitude under a shutoff mask.

    The field is |H| scaled by its own maximum; the acquired field zeroes the
    deactivated elements on the same scale. Energy weighting is the default
    because shutoff masks leave many windows nearly empty: an unweighted mean
    lets those low-energy fragments (whose spectra are broad no matter what
    the pattern looks like) drown out the coherent folding signature that
    separates regular from irregular shutoffs.
    """
    h = channel.h if isinstance(channel, Channel) else np.asarray(channel)
    mag = np.abs(h).astype(np.float64)
    peak = float(mag.max())
    if peak == 0.0:
        raise ValueError("all-zero channel cannot be audited")
    field = mag / peak
    if mask.shape != field.shape:
        raise ValueError(f"mask {mask.shape} vs channel {field.shape}")
    return delta_s(field, field * mask.kept, params, weighting=weighting,
                   energy_floor=energy_floor)
