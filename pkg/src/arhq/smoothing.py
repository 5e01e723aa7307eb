"""Diagonal equivalent-transform preprocessing.

A positive per-channel vector s rescales activations and weights as
X -> X diag(s)^-1 and W -> W diag(s), which leaves the layer output
X W^T unchanged while moving quantization difficulty between the two
sides.  Scales follow the usual absmax balancing rule

    s_j = max_i |X_ij|**alpha / max_k |W_kj|**(1 - alpha)

clamped to [1e-5, 1e5]; channels where either maximum is zero get s_j = 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from arhq.errors import DataError, DimensionError, ParameterError
from arhq.linalg import as_matrix

__all__ = ["SmoothingScales", "compute_scales", "apply_smoothing"]

SCALE_CLAMP = (1e-5, 1e5)


@dataclass(frozen=True)
class SmoothingScales:
    """Positive per-input-channel scale vector; ``alpha`` records the
    balancing exponent it was derived from (None for externally supplied
    scales)."""

    s: np.ndarray
    alpha: Optional[float] = None

    def __post_init__(self):
        s = np.ascontiguousarray(self.s, dtype=np.float64)
        if s.ndim != 1 or s.size == 0:
            raise DimensionError("scales must be a non-empty 1-D vector")
        if not np.isfinite(s).all() or not (s > 0).all():
            raise DataError("smoothing scales must be finite and strictly positive")
        object.__setattr__(self, "s", s)

    @property
    def dim(self) -> int:
        return self.s.shape[0]

    def inverse(self) -> "SmoothingScales":
        return SmoothingScales(1.0 / self.s, alpha=None)


def compute_scales(x_calib, w, alpha: float) -> SmoothingScales:
    """Absmax-balancing smoothing scales for activation/weight pair."""
    x = as_matrix(x_calib, "calibration activations")
    w = as_matrix(w, "weights")
    if x.shape[1] != w.shape[1]:
        raise DimensionError(
            f"activations have {x.shape[1]} channels, weights have {w.shape[1]}"
        )
    if not 0.0 <= alpha <= 1.0:
        raise ParameterError(f"alpha must be in [0, 1], got {alpha}")
    ax = np.abs(x).max(axis=0)
    aw = np.abs(w).max(axis=0)
    dead = (ax == 0) | (aw == 0)
    # 0**0 is ambiguous at the alpha endpoints; dead channels are neutral.
    s = np.where(dead, 1.0, ax**alpha / np.where(aw == 0, 1.0, aw) ** (1.0 - alpha))
    s = np.clip(s, *SCALE_CLAMP)
    return SmoothingScales(s, alpha=alpha)


def apply_smoothing(x, w, scales: SmoothingScales):
    """Return (x / s, w * s); preserves x @ w.T up to round-off."""
    x = as_matrix(x, "activations")
    w = as_matrix(w, "weights")
    if x.shape[1] != scales.dim or w.shape[1] != scales.dim:
        raise DimensionError(
            f"scales have {scales.dim} channels, inputs have "
            f"{x.shape[1]} and {w.shape[1]}"
        )
    return x / scales.s, w * scales.s
