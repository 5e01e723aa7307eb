"""Fake (quantize-then-dequantize) quantizers for activations and weights.

Supported families:

``identity``
    Returns the input unchanged; useful for ablations and exactness tests.
``uniform_symmetric``
    ``2**bits - 1`` integer levels centered on zero (e.g. -7..7 for 4 bits)
    with an absmax scale at the configured granularity.  An in-range entry
    lands within ``step / 2`` of its input, ``step = 2 * absmax / (2**bits - 2)``.
``block_fp4``
    NVFP4-style blocks: each contiguous run of ``block_size`` entries in a
    row shares an ``absmax / 6`` scale and values snap to the signed E2M1
    magnitude grid {0, 0.5, 1, 1.5, 2, 3, 4, 6}.  Scales stay full precision.

All families round ties away from zero, treat an all-zero scale group as
scale 1 (zeros pass through), and are exactly idempotent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from arhq import kernels
from arhq.errors import ConfigError, ParameterError
from arhq.linalg import as_matrix

__all__ = ["QuantizerSpec", "quantize", "quantize_block_fp4", "uniform_step"]

FAMILIES = ("identity", "uniform_symmetric", "block_fp4")
GRANULARITIES = ("per_tensor", "per_row", "per_channel", "per_block")
SCALE_RULES = ("absmax",)


@dataclass(frozen=True)
class QuantizerSpec:
    """Immutable description of one fake quantizer.

    ``clip`` is an optional absolute cap on each group's absmax-derived
    scale; values beyond it saturate to the grid ends.  For ``block_fp4``
    the granularity is always per-block.
    """

    family: str = "uniform_symmetric"
    bits: int = 4
    granularity: str = "per_row"
    block_size: int = 16
    scale_rule: str = "absmax"
    clip: Optional[float] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown quantizer family {self.family!r}")
        if self.granularity not in GRANULARITIES:
            raise ConfigError(f"unknown granularity {self.granularity!r}")
        if self.scale_rule not in SCALE_RULES:
            raise ConfigError(f"unknown scale rule {self.scale_rule!r}")
        if self.family == "uniform_symmetric" and not 2 <= self.bits <= 8:
            raise ConfigError(f"bits must be in [2, 8], got {self.bits}")
        if self.block_size < 2:
            raise ConfigError(f"block_size must be >= 2, got {self.block_size}")
        if self.clip is not None and not self.clip > 0:
            raise ConfigError(f"clip must be positive, got {self.clip}")
        if self.family == "block_fp4" and self.granularity != "per_block":
            object.__setattr__(self, "granularity", "per_block")

    def to_dict(self) -> dict:
        d = {"family": self.family}
        if self.family == "uniform_symmetric":
            d["bits"] = self.bits
        if self.family != "identity":
            d["granularity"] = self.granularity
            if self.granularity == "per_block" or self.family == "block_fp4":
                d["block_size"] = self.block_size
            d["scale_rule"] = self.scale_rule
            if self.clip is not None:
                d["clip"] = self.clip
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "QuantizerSpec":
        known = {f.name for f in cls.__dataclass_fields__.values()}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown quantizer keys: {sorted(unknown)}")
        return cls(**d)


def uniform_step(absmax: float, bits: int) -> float:
    """Grid spacing 2 * absmax / (2**bits - 2) of the symmetric uniform grid."""
    return 2.0 * absmax / (2.0**bits - 2.0)


def quantize(x, spec: QuantizerSpec) -> np.ndarray:
    """Fake-quantize ``x`` under ``spec``; output has the same shape."""
    x = as_matrix(x, "quantizer input")
    if spec.family == "identity":
        return x.copy()
    if spec.family == "block_fp4":
        return kernels.quant_fp4(x, spec.block_size)
    mode = kernels.GRANULARITY_MODES[spec.granularity]
    clip = spec.clip if spec.clip is not None else 0.0
    return kernels.quant_uniform(x, spec.bits, mode, spec.block_size, clip)


def quantize_block_fp4(x, spec: QuantizerSpec) -> np.ndarray:
    """FP4 entry point; ``spec.family`` must be ``block_fp4``."""
    if spec.family != "block_fp4":
        raise ParameterError(f"expected block_fp4 family, got {spec.family!r}")
    return quantize(x, spec)
