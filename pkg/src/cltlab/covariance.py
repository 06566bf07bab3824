"""Covariance matrices of vector ensembles via polarization components.

Besides the direct second-moment matrix, the variance-of-difference
components gamma(i, j) = mean (s_i - s_j)^2 are kept so the polarization
identity sigma_ij = (sigma_ii + sigma_jj - gamma(i, j)) / 2 can be
checked as an algebraic identity on the sample moments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensembles import EnsembleResult
from .fields import HilbertFieldSpec
from .spectral import sigma_squared

__all__ = [
    "CovarianceEstimate",
    "analytic_covariance",
    "covariance_standard_errors",
    "estimate_cov",
]


@dataclass(frozen=True)
class CovarianceEstimate:
    """Scaled matrix mean(s_i s_j) with its polarization components."""

    dim: int
    matrix: np.ndarray          # (m, m), entries mean(s_i * s_j)
    gamma: np.ndarray           # (m, m), entries mean((s_i - s_j)^2), 0 diagonal
    reps: int

    @property
    def sigma_ii(self) -> np.ndarray:
        return np.diag(self.matrix)

    def polarization_residual(self) -> float:
        """max |sigma_ij - (sigma_ii + sigma_jj - gamma_ij)/2|."""
        d = self.sigma_ii
        reconstructed = 0.5 * (d[:, None] + d[None, :] - self.gamma)
        np.fill_diagonal(reconstructed, d)
        return float(np.max(np.abs(self.matrix - reconstructed)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])


def estimate_cov(result: EnsembleResult) -> CovarianceEstimate:
    """Second-moment matrix of an ensemble, plus difference variances."""
    s = result.sums
    if s.ndim == 1:
        s = s[:, None]
    reps, m = s.shape
    matrix = (s.T @ s) / reps
    matrix = 0.5 * (matrix + matrix.T)  # exact symmetry under round-off
    diffs = s[:, :, None] - s[:, None, :]
    gamma = np.mean(diffs**2, axis=0)
    np.fill_diagonal(gamma, 0.0)
    return CovarianceEstimate(dim=m, matrix=matrix, gamma=gamma, reps=reps)


def analytic_covariance(spec: HilbertFieldSpec) -> np.ndarray:
    """Limit covariance matrix of the weighted family.

    Independent coordinate streams give diag(c_i^2 sigma_base^2); shared
    streams give the rank-one matrix c_i c_j sigma_base^2.
    """
    s2 = sigma_squared(spec.base)
    c = np.asarray(spec.weights)
    if spec.shared_innovations:
        return s2 * np.outer(c, c)
    return np.diag(s2 * c**2)


def covariance_standard_errors(analytic: np.ndarray, reps: int) -> np.ndarray:
    """Normal-theory SE of each entry of the second-moment matrix:
    sqrt((sigma_ii sigma_jj + sigma_ij^2) / R)."""
    d = np.diag(analytic)
    return np.sqrt((np.outer(d, d) + analytic**2) / reps)
