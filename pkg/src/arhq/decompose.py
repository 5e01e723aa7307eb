"""Low-rank weight splits: the residual-metric-weighted closed form and the
baseline objectives it is benchmarked against.

Every method splits W = W_res + B A^T with rank(B A^T) <= r.  The weighted
split solves

    min_{rank(L) <= r}  || (W - L) G^{1/2} ||_F^2

in closed form: with M = W G^{1/2} and its truncated SVD
M_r = U_r S_r V_r^T, the optimum is L = M_r G^{-1/2}, factored for a
dual-branch deployment as B = U_r S_r and A = G^{-1/2} V_r.  The achieved
objective is exactly the discarded tail energy sum_{i>r} sigma_i(M)^2.

Baselines: ``svd_split`` minimizes the unweighted ||W - L||_F^2;
``activation_weighted_split`` runs the same machinery under a metric built
from the raw activation covariance; ``outlier_absorb_split`` uses the plain
truncated SVD and reports the weight-quantization clipping energy of its
main branch, the quantity that objective family optimizes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from arhq.errors import DimensionError
from arhq.linalg import as_matrix, truncated_svd
from arhq.quantizers import QuantizerSpec, quantize
from arhq.residual import ResidualMetric

__all__ = [
    "LowRankSplit",
    "arhq_split",
    "svd_split",
    "activation_weighted_split",
    "outlier_absorb_split",
    "weighted_objective",
    "clipping_objective",
]

METHODS = ("arhq", "svd_plain", "activation_weighted", "outlier_absorb")


@dataclass
class LowRankSplit:
    """W = w_res + b @ a.T with a: (D_in, r), b: (D_out, r)."""

    w_res: np.ndarray
    a: np.ndarray
    b: np.ndarray
    rank: int
    method: str

    @property
    def d_out(self) -> int:
        return self.w_res.shape[0]

    @property
    def d_in(self) -> int:
        return self.w_res.shape[1]

    def low_rank(self) -> np.ndarray:
        """Dense side-branch matrix L = b @ a.T."""
        return self.b @ self.a.T

    def compose(self) -> np.ndarray:
        """Reconstruct the original weight w_res + b @ a.T."""
        return self.w_res + self.b @ self.a.T

    def params_added(self) -> int:
        """Stored factor parameters r * (D_in + D_out)."""
        return self.rank * (self.d_in + self.d_out)

    def overhead_ratio(self) -> float:
        """Factor parameters relative to the dense D_out * D_in weight."""
        return self.params_added() / (self.d_out * self.d_in)


def _metric_split(w: np.ndarray, metric: ResidualMetric, r: int, method: str) -> LowRankSplit:
    if w.shape[1] != metric.dim:
        raise DimensionError(
            f"weights have {w.shape[1]} input channels, metric has {metric.dim}"
        )
    m = w @ metric.g_sqrt
    svd = truncated_svd(m, r)
    b = svd.u * svd.sigma
    a = metric.g_invsqrt @ svd.v
    return LowRankSplit(w - b @ a.T, a, b, r, method)


def arhq_split(w, metric: ResidualMetric, r: int) -> LowRankSplit:
    """Closed-form split weighted by the residual covariance metric."""
    return _metric_split(as_matrix(w, "weights"), metric, r, "arhq")


def activation_weighted_split(w, h_metric: ResidualMetric, r: int) -> LowRankSplit:
    """Same closed form under the raw activation covariance metric."""
    return _metric_split(as_matrix(w, "weights"), h_metric, r, "activation_weighted")


def svd_split(w, r: int) -> LowRankSplit:
    """Plain truncated-SVD split minimizing the unweighted ||W - L||_F^2."""
    w = as_matrix(w, "weights")
    svd = truncated_svd(w, r)
    b = svd.u * svd.sigma
    a = svd.v.copy()
    return LowRankSplit(w - b @ a.T, a, b, r, "svd_plain")


def outlier_absorb_split(w, r: int, w_spec: QuantizerSpec) -> LowRankSplit:
    """Truncated-SVD surrogate of the outlier-absorption objective.

    The split itself is the plain SVD of (the upstream-smoothed) ``w``; use
    :func:`clipping_objective` with the same ``w_spec`` for its reported
    objective value.
    """
    split = svd_split(w, r)
    split.method = "outlier_absorb"
    return split


def weighted_objective(w, split: LowRankSplit, g_sqrt) -> float:
    """||(w - b a^T) g_sqrt||_F^2 for an arbitrary split."""
    w = as_matrix(w, "weights")
    g_sqrt = as_matrix(g_sqrt, "metric square root")
    if w.shape[1] != g_sqrt.shape[0]:
        raise DimensionError(
            f"weights have {w.shape[1]} input channels, metric root is {g_sqrt.shape}"
        )
    if split.a.shape[0] != w.shape[1] or split.b.shape[0] != w.shape[0]:
        raise DimensionError("split factors do not match the weight shape")
    resid = (w - split.b @ split.a.T) @ g_sqrt
    return float(np.linalg.norm(resid) ** 2)


def clipping_objective(split: LowRankSplit, w_spec: QuantizerSpec) -> float:
    """Weight-quantization energy ||w_res - Q_w(w_res)||_F^2 of the main branch."""
    return float(np.linalg.norm(split.w_res - quantize(split.w_res, w_spec)) ** 2)
