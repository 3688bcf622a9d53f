"""Band-entropy audits of acquisition masks in phase space.

The package measures how much an acquisition policy (k-space undersampling,
antenna shutoff, image patch dropping) perturbs the windowed-spectrogram
entropy of the data it acquires, and uses that number to rank and select
masks without a downstream model in the loop.
"""

from .estimators import BandEntropyAudit, MaskParameterSearch
from .masks import (
    AntennaMaskSpec,
    KSpaceMaskSpec,
    Mask,
    PatchMaskSpec,
    antenna_mask,
    apply_mask,
    kspace_mask,
    patch_mask,
)
from .mimo import ChannelConfig, audit_channel, gen_channel
from .mri import MultiCoilKSpace, phantom, psnr, rss_reconstruct, ssim, zero_fill
from .numerics import FitResult, dft2_centered, gaussian_window, ols_pearson
from .phase_space import (
    DeltaSReport,
    EmptyAuditError,
    HusimiParams,
    band_entropy,
    band_normalize,
    comparative_advantage,
    delta_s,
    husimi,
    multiscale_delta_s,
)
from .selector import (
    SelectionResult,
    ablation_summary,
    ablation_sweep,
    select_mask_params,
    win_rank_stability,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BandEntropyAudit",
    "MaskParameterSearch",
    "Mask",
    "PatchMaskSpec",
    "KSpaceMaskSpec",
    "AntennaMaskSpec",
    "patch_mask",
    "kspace_mask",
    "antenna_mask",
    "apply_mask",
    "ChannelConfig",
    "gen_channel",
    "audit_channel",
    "MultiCoilKSpace",
    "phantom",
    "rss_reconstruct",
    "zero_fill",
    "psnr",
    "ssim",
    "FitResult",
    "dft2_centered",
    "gaussian_window",
    "ols_pearson",
    "HusimiParams",
    "DeltaSReport",
    "EmptyAuditError",
    "husimi",
    "band_normalize",
    "band_entropy",
    "delta_s",
    "multiscale_delta_s",
    "comparative_advantage",
    "SelectionResult",
    "select_mask_params",
    "ablation_sweep",
    "ablation_summary",
    "win_rank_stability",
]
