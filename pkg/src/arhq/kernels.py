"""Backend selection for the fake-quantization kernels.

The compiled Cython extension is preferred; the NumPy implementation is the
fallback when the extension was not built.  Both backends are bit-for-bit
identical, so the choice never changes results, only speed.
"""

from __future__ import annotations

try:
    from arhq import _kernels as _impl

    COMPILED = True
except ImportError:  # extension not built; pure NumPy fallback
    from arhq import _kernels_np as _impl

    COMPILED = False

PER_TENSOR = 0
PER_ROW = 1
PER_CHANNEL = 2
PER_BLOCK = 3

GRANULARITY_MODES = {
    "per_tensor": PER_TENSOR,
    "per_row": PER_ROW,
    "per_channel": PER_CHANNEL,
    "per_block": PER_BLOCK,
}

quant_uniform = _impl.quant_uniform
quant_fp4 = _impl.quant_fp4

backend_name = "compiled" if COMPILED else "numpy"
