"""Per-layer pipeline: smoothing, residual metric, split, dual-branch
simulation, SNR measurement, and multi-method comparison.

The five per-layer stages run in order: (1) optional smoothing transform,
(2) fake-quantize the smoothed calibration activations and accumulate the
residual covariance, (3) floor its spectrum, (4) truncated SVD of the
metric-scaled weight, (5) factor into the deployment form.  Separate layers
are independent and may run in parallel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from arhq.decompose import (
    METHODS,
    LowRankSplit,
    activation_weighted_split,
    arhq_split,
    clipping_objective,
    outlier_absorb_split,
    svd_split,
    weighted_objective,
)
from arhq.errors import ConfigError, DataError, DimensionError, ParameterError
from arhq.linalg import as_matrix
from arhq.quantizers import QuantizerSpec, quantize
from arhq.residual import CovarianceAccumulator, ResidualMetric, compute_residual
from arhq.smoothing import SmoothingScales, apply_smoothing, compute_scales

__all__ = [
    "LayerConfig",
    "LayerArtifacts",
    "MethodRow",
    "LayerReport",
    "run_arhq_layer",
    "simulate_forward",
    "snr",
    "compare_methods",
    "sweep_rank",
]

VARIANTS = ("raw", "smooth")
MODES = ("dual_branch", "baseline_quant", "reference")

# Smoothing setting: balancing exponent, explicit scale vector, or disabled.
SmoothingSetting = Union[float, np.ndarray, None]


@dataclass(frozen=True, eq=False)
class LayerConfig:
    """Everything one layer run needs besides its tensors."""

    rank: int
    act_quantizer: QuantizerSpec = QuantizerSpec(bits=4, granularity="per_row")
    weight_quantizer: QuantizerSpec = QuantizerSpec(bits=8, granularity="per_row")
    floor: Optional[float] = None
    smoothing: SmoothingSetting = 0.5
    methods: tuple = METHODS
    variants: tuple = VARIANTS
    seed: int = 0

    def __post_init__(self):
        if self.rank < 1:
            raise ConfigError(f"rank must be >= 1, got {self.rank}")
        if self.floor is not None and not self.floor > 0:
            raise ConfigError(f"floor must be positive, got {self.floor}")
        if isinstance(self.smoothing, (int, float)) and not 0.0 <= self.smoothing <= 1.0:
            raise ConfigError(f"smoothing alpha must be in [0, 1], got {self.smoothing}")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}, expected one of {METHODS}")
        for v in self.variants:
            if v not in VARIANTS:
                raise ConfigError(f"unknown variant {v!r}, expected raw or smooth")
        if not self.methods or not self.variants:
            raise ConfigError("methods and variants must be non-empty")

    def snapshot(self) -> dict:
        """JSON-serializable snapshot that reparses to an equal config."""
        if self.smoothing is None or isinstance(self.smoothing, float):
            smoothing = self.smoothing
        elif isinstance(self.smoothing, int):
            smoothing = float(self.smoothing)
        else:
            smoothing = {"scales": np.asarray(self.smoothing).tolist()}
        return {
            "rank": self.rank,
            "act_quantizer": self.act_quantizer.to_dict(),
            "weight_quantizer": self.weight_quantizer.to_dict(),
            "floor": self.floor,
            "smoothing": smoothing,
            "methods": list(self.methods),
            "variants": list(self.variants),
            "seed": self.seed,
        }


@dataclass
class LayerArtifacts:
    """Output of one layer run; the split lives in the smoothed space."""

    split: LowRankSplit
    metric: Optional[ResidualMetric]
    scales: Optional[SmoothingScales]
    config: dict = field(default_factory=dict)


@dataclass
class MethodRow:
    """One method x variant measurement within a layer report."""

    method: str
    variant: str
    snr_db: float
    gain_db: float
    objective: Optional[float]
    params_added: int
    overhead_ratio: float
    factor_absmax: Optional[dict] = None


@dataclass
class LayerReport:
    """Per-layer rows plus the resolved config they were produced under."""

    layer: str
    seed: int
    rows: list
    config: dict = field(default_factory=dict)


def _resolve_scales(setting: SmoothingSetting, x: np.ndarray, w: np.ndarray):
    if setting is None:
        return None
    if isinstance(setting, SmoothingScales):
        return setting
    if isinstance(setting, (int, float)):
        return compute_scales(x, w, float(setting))
    return SmoothingScales(np.asarray(setting, dtype=np.float64))


def run_arhq_layer(w, x_calib, cfg: LayerConfig) -> LayerArtifacts:
    """Run the full five-stage split on one layer."""
    w = as_matrix(w, "weights")
    x = as_matrix(x_calib, "calibration activations")
    if x.shape[1] != w.shape[1]:
        raise DimensionError(
            f"calibration has {x.shape[1]} channels, weights have {w.shape[1]}"
        )
    scales = _resolve_scales(cfg.smoothing, x, w)
    if scales is not None:
        x_s, w_s = apply_smoothing(x, w, scales)
    else:
        x_s, w_s = x, w
    e = compute_residual(x_s, cfg.act_quantizer)
    metric = CovarianceAccumulator(x.shape[1]).update(e).finalize(cfg.floor)
    split = arhq_split(w_s, metric, cfg.rank)
    return LayerArtifacts(split, metric, scales, cfg.snapshot())


def simulate_forward(x_eval, artifacts: LayerArtifacts, cfg: LayerConfig, mode: str) -> np.ndarray:
    """Simulated layer output for one of the three evaluation modes.

    ``dual_branch`` quantizes the smoothed activations and the main-branch
    weight while the low-rank side branch runs in full precision;
    ``baseline_quant`` is the unsplit quantized layer; ``reference`` is the
    full-precision output (computed through the same branch structure, so
    identity quantizers reproduce it exactly).
    """
    if mode not in MODES:
        raise ParameterError(f"unknown mode {mode!r}, expected one of {MODES}")
    x = as_matrix(x_eval, "evaluation activations")
    split = artifacts.split
    if x.shape[1] != split.d_in:
        raise DimensionError(
            f"evaluation has {x.shape[1]} channels, split expects {split.d_in}"
        )
    x_s = x / artifacts.scales.s if artifacts.scales is not None else x
    if mode == "reference":
        return x_s @ split.w_res.T + (x_s @ split.a) @ split.b.T
    if mode == "baseline_quant":
        w_s = split.compose()
        return quantize(x_s, cfg.act_quantizer) @ quantize(w_s, cfg.weight_quantizer).T
    main = quantize(x_s, cfg.act_quantizer) @ quantize(split.w_res, cfg.weight_quantizer).T
    return main + (x_s @ split.a) @ split.b.T


def snr(y_ref, y_hat) -> float:
    """10 log10(||Y||_F^2 / ||Y - Yhat||_F^2); +inf when the error is zero."""
    y_ref = as_matrix(y_ref, "reference output")
    y_hat = as_matrix(y_hat, "approximate output")
    if y_ref.shape != y_hat.shape:
        raise DimensionError(f"shape mismatch {y_ref.shape} vs {y_hat.shape}")
    signal = float(np.linalg.norm(y_ref) ** 2)
    if signal == 0.0:
        raise DataError("SNR undefined: reference output has zero energy")
    err = float(np.linalg.norm(y_ref - y_hat) ** 2)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(signal / err)


def _variant_config(cfg: LayerConfig, variant: str) -> LayerConfig:
    if variant == "raw":
        return replace(cfg, smoothing=None)
    smoothing = cfg.smoothing if cfg.smoothing is not None else 0.5
    return replace(cfg, smoothing=smoothing)


def _gain(value: float, base: float) -> float:
    if math.isinf(value) and math.isinf(base) and value == base:
        return 0.0
    return value - base


def _split_for(method, w_s, g_metric, h_metric, cfg):
    if method == "arhq":
        return arhq_split(w_s, g_metric, cfg.rank)
    if method == "svd_plain":
        return svd_split(w_s, cfg.rank)
    if method == "activation_weighted":
        return activation_weighted_split(w_s, h_metric, cfg.rank)
    return outlier_absorb_split(w_s, cfg.rank, cfg.weight_quantizer)


def _objective_for(method, w_s, split, g_metric, h_metric, cfg):
    if method == "arhq":
        return weighted_objective(w_s, split, g_metric.g_sqrt)
    if method == "svd_plain":
        return float(np.linalg.norm(split.w_res) ** 2)
    if method == "activation_weighted":
        return weighted_objective(w_s, split, h_metric.g_sqrt)
    return clipping_objective(split, cfg.weight_quantizer)


def compare_methods(w, x_calib, x_eval, cfg: LayerConfig, layer: str = "layer0") -> LayerReport:
    """Measure every requested method x variant against the unsplit baseline.

    Each variant gets its own baseline row (the smoothed/raw quantized layer
    without a split) and gains are taken against it.  Row order is
    deterministic: per variant, baseline first, then methods as requested.
    """
    w = as_matrix(w, "weights")
    x_calib = as_matrix(x_calib, "calibration activations")
    x_eval = as_matrix(x_eval, "evaluation activations")
    rows = []
    for variant in cfg.variants:
        vcfg = _variant_config(cfg, variant)
        scales = _resolve_scales(vcfg.smoothing, x_calib, w)
        if scales is not None:
            xc_s, w_s = apply_smoothing(x_calib, w, scales)
            xe_s = x_eval / scales.s
        else:
            xc_s, w_s, xe_s = x_calib, w, x_eval
        xe_q = quantize(xe_s, cfg.act_quantizer)

        y_ref_base = xe_s @ w_s.T
        y_hat_base = xe_q @ quantize(w_s, cfg.weight_quantizer).T
        base_snr = snr(y_ref_base, y_hat_base)
        rows.append(MethodRow("baseline", variant, base_snr, 0.0, None, 0, 0.0))

        e = compute_residual(xc_s, cfg.act_quantizer)
        g_metric = CovarianceAccumulator(w.shape[1]).update(e).finalize(cfg.floor)
        h_metric = None
        if "activation_weighted" in cfg.methods:
            h_metric = CovarianceAccumulator(w.shape[1]).update(xc_s).finalize(cfg.floor)

        for method in cfg.methods:
            split = _split_for(method, w_s, g_metric, h_metric, vcfg)
            side = (xe_s @ split.a) @ split.b.T
            y_ref = xe_s @ split.w_res.T + side
            y_hat = xe_q @ quantize(split.w_res, cfg.weight_quantizer).T + side
            value = snr(y_ref, y_hat)
            rows.append(
                MethodRow(
                    method,
                    variant,
                    value,
                    _gain(value, base_snr),
                    _objective_for(method, w_s, split, g_metric, h_metric, vcfg),
                    split.params_added(),
                    split.overhead_ratio(),
                    factor_absmax={
                        "a": float(np.abs(split.a).max()),
                        "b": float(np.abs(split.b).max()),
                    },
                )
            )
    return LayerReport(layer, cfg.seed, rows, cfg.snapshot())


def sweep_rank(w, x_calib, x_eval, cfg: LayerConfig, ranks, layer: str = "layer0"):
    """Run :func:`compare_methods` at each rank; also return the singular
    spectrum of the metric-scaled weight per variant.

    Returns ``(reports, spectra)`` where ``spectra`` maps variant name to
    the full descending spectrum sigma_i(W G^{1/2}).
    """
    ranks = [int(r) for r in ranks]
    if not ranks:
        raise ParameterError("ranks list must be non-empty")
    if sorted(ranks) != ranks:
        raise ParameterError(f"ranks must be sorted ascending, got {ranks}")
    max_rank = min(as_matrix(w, "weights").shape)
    for r in ranks:
        if not 1 <= r <= max_rank:
            raise ParameterError(f"rank {r} out of range [1, {max_rank}]")
    reports = [
        compare_methods(w, x_calib, x_eval, replace(cfg, rank=r), layer=layer)
        for r in ranks
    ]
    spectra = {}
    for variant in cfg.variants:
        vcfg = _variant_config(cfg, variant)
        scales = _resolve_scales(vcfg.smoothing, x_calib, w)
        if scales is not None:
            xc_s, w_s = apply_smoothing(x_calib, w, scales)
        else:
            xc_s, w_s = x_calib, w
        e = compute_residual(xc_s, cfg.act_quantizer)
        metric = CovarianceAccumulator(w_s.shape[1]).update(e).finalize(cfg.floor)
        spectra[variant] = np.linalg.svd(w_s @ metric.g_sqrt, compute_uv=False)
    return reports, spectra
