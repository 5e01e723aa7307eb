"""Dense linear-algebra kernels: symmetric eigendecomposition, truncated SVD,
and eigenvalue-floored powers of PSD matrices.

Everything operates on 2-D float64 C-contiguous ``numpy.ndarray`` matrices and
is computed in 64-bit precision throughout.  All functions are pure and safe
to call concurrently.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from arhq.errors import DataError, DimensionError, ParameterError

__all__ = [
    "EigenDecomposition",
    "TruncatedSVD",
    "as_matrix",
    "sym_eigendecompose",
    "truncated_svd",
    "psd_power",
]

# Relative asymmetry tolerated before a "symmetric" input is rejected.
_SYM_RTOL = 1e-8


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and normalize ``a`` into a finite 2-D float64 C-order array.

    Raises ``DimensionError`` for non-2-D input and ``DataError`` for NaN/Inf
    entries.  Returns a new array only when conversion is required.
    """
    m = np.ascontiguousarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got ndim={m.ndim}")
    if m.size == 0:
        raise DimensionError(f"{name} must be non-empty, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise DataError(f"{name} contains non-finite entries")
    return m


class EigenDecomposition(NamedTuple):
    """Symmetric eigendecomposition S = U diag(eigenvalues) U^T.

    Eigenvalues are sorted descending; column i of ``eigenvectors`` pairs
    with ``eigenvalues[i]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


class TruncatedSVD(NamedTuple):
    """Rank-r factors M ~= u diag(sigma) v^T with sigma descending."""

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    def compose(self) -> np.ndarray:
        """Dense rank-r reconstruction u diag(sigma) v^T."""
        return (self.u * self.sigma) @ self.v.T


def _require_symmetric(s: np.ndarray, name: str) -> np.ndarray:
    if s.shape[0] != s.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {s.shape}")
    scale = np.abs(s).max()
    if scale > 0 and np.abs(s - s.T).max() > _SYM_RTOL * scale:
        raise DataError(f"{name} is not symmetric within tolerance {_SYM_RTOL:g}")
    # Averaging absorbs accumulation round-off before factoring.
    return (s + s.T) / 2.0


def sym_eigendecompose(s) -> EigenDecomposition:
    """Eigendecompose a symmetric matrix, eigenvalues in descending order."""
    s = as_matrix(s, "symmetric input")
    s = _require_symmetric(s, "symmetric input")
    lam, u = np.linalg.eigh(s)
    return EigenDecomposition(lam[::-1].copy(), u[:, ::-1].copy())


def truncated_svd(m, r: int) -> TruncatedSVD:
    """Best rank-``r`` Frobenius approximation factors of ``m``.

    Computed as a full SVD followed by truncation; exact at the scales this
    package targets.  ``1 <= r <= min(m.shape)`` is required.
    """
    m = as_matrix(m, "svd input")
    r = int(r)
    if not 1 <= r <= min(m.shape):
        raise ParameterError(
            f"rank {r} out of range [1, {min(m.shape)}] for shape {m.shape}"
        )
    u, sigma, vt = np.linalg.svd(m, full_matrices=False)
    return TruncatedSVD(u[:, :r].copy(), sigma[:r].copy(), vt[:r].T.copy())


def psd_power(s, exponent: float, floor: float) -> np.ndarray:
    """U diag(max(lambda_i, floor)^exponent) U^T for symmetric PSD ``s``.

    The eigenvalue floor keeps negative round-off eigenvalues and the
    inverse-root branch well defined; ``floor`` must be positive.  Intended
    exponents are +1/2 and -1/2.
    """
    if not floor > 0:
        raise ParameterError(f"floor must be positive, got {floor}")
    dec = sym_eigendecompose(s)
    lam = np.maximum(dec.eigenvalues, floor) ** exponent
    out = (dec.eigenvectors * lam) @ dec.eigenvectors.T
    # Symmetrize away matmul round-off so results are exactly symmetric.
    return (out + out.T) / 2.0
