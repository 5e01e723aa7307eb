"""Activation quantization residuals and their covariance metric.

The residual of a calibration batch X is E = Q(X) - X.  Accumulating
E^T E over batches and dividing by the total row count gives the residual
covariance G = E^T E / N, the curvature of the residual-propagation loss
L(W) = Tr(W G W^T) whose gradient is 2 W G.  ``finalize`` floors the
eigenvalues of G and prepares the +-1/2 powers used by the weighted split.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from arhq.errors import CalibrationError, DimensionError, ParameterError
from arhq.linalg import as_matrix, sym_eigendecompose
from arhq.quantizers import QuantizerSpec, quantize

__all__ = ["CovarianceAccumulator", "ResidualMetric", "compute_residual"]

# Relative eigenvalue floor (fraction of mean eigenvalue) and its absolute
# minimum, used when no explicit floor is configured.
DEFAULT_FLOOR_REL = 1e-6
DEFAULT_FLOOR_MIN = 1e-10


def compute_residual(x, spec: QuantizerSpec) -> np.ndarray:
    """Quantization residual Q(x) - x, same shape as ``x``."""
    x = as_matrix(x, "activations")
    return quantize(x, spec) - x


@dataclass
class ResidualMetric:
    """Eigenvalue-floored covariance ``g`` with its +-1/2 powers.

    ``floor`` is the absolute eigenvalue floor that was applied; ``n_rows``
    is the number of calibration rows behind the estimate (0 when the
    metric was built directly from a covariance matrix).
    """

    g: np.ndarray
    g_sqrt: np.ndarray
    g_invsqrt: np.ndarray
    floor: float
    n_rows: int

    @property
    def dim(self) -> int:
        return self.g.shape[0]

    @classmethod
    def from_covariance(cls, cov, floor: float | None = None, n_rows: int = 0) -> "ResidualMetric":
        """Build the floored metric and both square-root powers of ``cov``.

        ``floor=None`` applies the relative default
        ``max(1e-6 * mean(eigenvalues), 1e-10)``.
        """
        dec = sym_eigendecompose(cov)
        if floor is None:
            floor = max(DEFAULT_FLOOR_REL * float(dec.eigenvalues.mean()), DEFAULT_FLOOR_MIN)
        if not floor > 0:
            raise ParameterError(f"eigenvalue floor must be positive, got {floor}")
        lam = np.maximum(dec.eigenvalues, floor)
        u = dec.eigenvectors

        def power(p):
            m = (u * lam**p) @ u.T
            return (m + m.T) / 2.0

        return cls(power(1.0), power(0.5), power(-0.5), float(floor), int(n_rows))


class CovarianceAccumulator:
    """Streaming sufficient statistics (sum of E^T E, row count) for G.

    Batches may arrive in any order and independent accumulators over
    disjoint batches merge by addition, so calibration parallelizes by
    partitioning rows.
    """

    def __init__(self, dim: int):
        if dim < 1:
            raise ParameterError(f"dimension must be >= 1, got {dim}")
        self.gram = np.zeros((dim, dim))
        self.n_rows = 0

    @property
    def dim(self) -> int:
        return self.gram.shape[0]

    def update(self, e_batch) -> "CovarianceAccumulator":
        """Add one batch of residual rows; returns self for chaining."""
        e = as_matrix(e_batch, "residual batch")
        if e.shape[1] != self.dim:
            raise DimensionError(
                f"batch has {e.shape[1]} columns, accumulator expects {self.dim}"
            )
        self.gram += e.T @ e
        self.n_rows += e.shape[0]
        return self

    def merge(self, other: "CovarianceAccumulator") -> "CovarianceAccumulator":
        """Fold another accumulator (over disjoint rows) into this one."""
        if other.dim != self.dim:
            raise DimensionError(
                f"cannot merge accumulators of dims {other.dim} and {self.dim}"
            )
        self.gram += other.gram
        self.n_rows += other.n_rows
        return self

    def finalize(self, floor: float | None = None) -> ResidualMetric:
        """Normalize by the row count, floor the spectrum, take +-1/2 powers."""
        if self.n_rows < 1:
            raise CalibrationError("no calibration rows accumulated")
        return ResidualMetric.from_covariance(
            self.gram / self.n_rows, floor=floor, n_rows=self.n_rows
        )
