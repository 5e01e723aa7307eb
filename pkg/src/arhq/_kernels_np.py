"""NumPy fake-quantization kernels (pure-Python fallback backend).

This module and the compiled ``arhq._kernels`` extension implement the same
contract and must stay bit-for-bit identical: keep every arithmetic
expression in the same evaluation order when editing either one.

Granularity modes: 0 = per tensor, 1 = per row, 2 = per channel (column),
3 = per block (contiguous runs of ``block`` entries within each row; a
trailing partial block is scaled on its own, which matches zero-padding).

Scale convention for a group with absolute maximum ``m``: the effective
scale is ``min(m, clip)`` when a positive clip is given, and an all-zero
group uses scale 1 so zeros pass through.  Dequantization is computed as
``(code / code_max) * scale`` which makes every family exactly idempotent.
"""

from __future__ import annotations

import numpy as np

_FP4_GRID = np.array([0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0])
_FP4_NORM = _FP4_GRID / 6.0
_FP4_MIDS = (_FP4_GRID[:-1] + _FP4_GRID[1:]) / 2.0


def _uniform_group(x, qmax, m, clip):
    if clip > 0:
        m = np.minimum(m, clip)
    s = np.where(m == 0, 1.0, m)
    q = x / s * qmax
    r = np.minimum(np.floor(np.abs(q) + 0.5), qmax)
    r = np.where(q < 0, -r, r)
    return r / qmax * s


def quant_uniform(x, bits, mode, block, clip):
    """Symmetric uniform fake-quantization onto 2**bits - 1 levels."""
    qmax = float((1 << (bits - 1)) - 1)
    if mode == 3:
        out = np.empty_like(x)
        for b0 in range(0, x.shape[1], block):
            seg = x[:, b0 : b0 + block]
            m = np.abs(seg).max(axis=1, keepdims=True)
            out[:, b0 : b0 + block] = _uniform_group(seg, qmax, m, clip)
        return out
    if mode == 0:
        m = np.abs(x).max()
    elif mode == 1:
        m = np.abs(x).max(axis=1, keepdims=True)
    else:
        m = np.abs(x).max(axis=0, keepdims=True)
    return _uniform_group(x, qmax, m, clip)


def quant_fp4(x, block):
    """Block-wise FP4 (E2M1 magnitude grid) fake-quantization."""
    out = np.empty_like(x)
    for b0 in range(0, x.shape[1], block):
        seg = x[:, b0 : b0 + block]
        m = np.abs(seg).max(axis=1, keepdims=True)
        s = np.where(m == 0, 1.0, m)
        w = np.abs(seg) * 6.0 / s
        idx = np.searchsorted(_FP4_MIDS, w.ravel(), side="right").reshape(w.shape)
        y = _FP4_NORM[idx] * s
        out[:, b0 : b0 + block] = np.where(seg < 0, -y, y)
    return out
