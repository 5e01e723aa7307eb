"""Residual-weighted low-rank weight splitting for low-bit quantization.

The package measures activation quantization residuals, builds the floored
residual covariance metric, computes the closed-form weighted low-rank
split of the weight matrix, and benchmarks it against baseline splits via
a simulated dual-branch forward pass and layer-wise SNR.
"""

from arhq.decompose import (
    LowRankSplit,
    activation_weighted_split,
    arhq_split,
    clipping_objective,
    outlier_absorb_split,
    svd_split,
    weighted_objective,
)
from arhq.kernels import backend_name
from arhq.linalg import psd_power, sym_eigendecompose, truncated_svd
from arhq.pipeline import (
    LayerArtifacts,
    LayerConfig,
    LayerReport,
    compare_methods,
    run_arhq_layer,
    simulate_forward,
    snr,
    sweep_rank,
)
from arhq.quantizers import QuantizerSpec, quantize, quantize_block_fp4
from arhq.residual import CovarianceAccumulator, ResidualMetric, compute_residual
from arhq.smoothing import SmoothingScales, apply_smoothing, compute_scales

__version__ = "0.1.0"

__all__ = [
    "LowRankSplit",
    "activation_weighted_split",
    "arhq_split",
    "clipping_objective",
    "outlier_absorb_split",
    "svd_split",
    "weighted_objective",
    "backend_name",
    "psd_power",
    "sym_eigendecompose",
    "truncated_svd",
    "LayerArtifacts",
    "LayerConfig",
    "LayerReport",
    "compare_methods",
    "run_arhq_layer",
    "simulate_forward",
    "snr",
    "sweep_rank",
    "QuantizerSpec",
    "quantize",
    "quantize_block_fp4",
    "CovarianceAccumulator",
    "ResidualMetric",
    "compute_residual",
    "SmoothingScales",
    "apply_smoothing",
    "compute_scales",
    "__version__",
]
