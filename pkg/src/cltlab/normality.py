"""Goodness-of-fit of normalized sums against their normal limit.

The Kolmogorov-Smirnov statistic against N(0, sigma^2) is the gating
number; Anderson-Darling, skewness and excess kurtosis are reported as
diagnostics only (AD is more tail-sensitive but flakier at modest R).
The pass threshold is 1.63/sqrt(R) (asymptotic 1% critical value of
sqrt(R) D_R) times a slack factor absorbing finite-size discreteness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .ensembles import EnsembleResult

__all__ = [
    "KS_CRITICAL_1PCT",
    "NormalityReport",
    "anderson_darling_statistic",
    "cramer_wold",
    "ks_statistic",
    "normal_cdf",
    "normality_test",
]

KS_CRITICAL_1PCT = 1.63
DEFAULT_KS_SLACK = 1.3
MIN_REPS = 100


def normal_cdf(x, mean: float = 0.0, sigma: float = 1.0):
    """Phi((x - mean)/sigma) through the complementary error function.

    erfc keeps full relative accuracy in the lower tail, so the absolute
    error is far below 1e-10 everywhere.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    z = (np.asarray(x, dtype=np.float64) - mean) / sigma
    out = 0.5 * erfc(-z / math.sqrt(2.0))
    return float(out) if np.ndim(x) == 0 else out


def ks_statistic(samples: np.ndarray, cdf) -> float:
    """sup |F_R - F| over the sample, both one-sided gaps included."""
    x = np.sort(np.asarray(samples, dtype=np.float64))
    n = x.size
    f = cdf(x)
    i = np.arange(1, n + 1)
    return float(np.max(np.maximum(i / n - f, f - (i - 1) / n)))


def anderson_darling_statistic(samples: np.ndarray, cdf) -> float:
    """A^2 = -n - mean((2i-1)(log F(x_i) + log(1 - F(x_{n+1-i}))))."""
    x = np.sort(np.asarray(samples, dtype=np.float64))
    n = x.size
    f = np.clip(cdf(x), 1e-300, 1.0 - 1e-16)
    i = np.arange(1, n + 1)
    s = np.sum((2 * i - 1) * (np.log(f) + np.log1p(-f[::-1])))
    return float(-n - s / n)


@dataclass(frozen=True)
class NormalityReport:
    sample_size: int
    target_variance: float
    ks: float
    ks_threshold: float
    ks_slack: float
    anderson_darling: float
    skewness: float
    excess_kurtosis: float
    passed: bool


def _report(samples: np.ndarray, sigma2: float, ks_slack: float) -> NormalityReport:
    n = samples.size
    if n < MIN_REPS:
        raise ValueError(f"need at least {MIN_REPS} replications, got {n}")
    if sigma2 <= 0:
        raise ValueError("target variance must be positive")
    sigma = math.sqrt(sigma2)
    cdf = lambda x: normal_cdf(x, 0.0, sigma)
    ks = ks_statistic(samples, cdf)
    threshold = KS_CRITICAL_1PCT / math.sqrt(n) * ks_slack
    mu = float(np.mean(samples))
    sd = float(np.std(samples))
    z = (samples - mu) / sd if sd > 0 else np.zeros_like(samples)
    return NormalityReport(
        sample_size=n,
        target_variance=sigma2,
        ks=ks,
        ks_threshold=threshold,
        ks_slack=ks_slack,
        anderson_darling=anderson_darling_statistic(samples, cdf),
        skewness=float(np.mean(z**3)),
        excess_kurtosis=float(np.mean(z**4) - 3.0),
        passed=bool(ks <= threshold),
    )


def normality_test(
    result: EnsembleResult, sigma2: float, ks_slack: float = DEFAULT_KS_SLACK
) -> NormalityReport:
    """KS gate of a scalar ensemble against N(0, sigma^2)."""
    if result.n_components != 1:
        raise ValueError("normality_test expects a scalar ensemble")
    return _report(result.component(1), sigma2, ks_slack)


def cramer_wold(
    result: EnsembleResult,
    t,
    cov_matrix,
    ks_slack: float = DEFAULT_KS_SLACK,
) -> NormalityReport:
    """Projection test: t . s_r against N(0, t Sigma t')."""
    t = np.asarray(t, dtype=np.float64)
    if result.sums.ndim != 2 or t.shape != (result.sums.shape[1],):
        raise ValueError("direction length must match the ensemble components")
    sigma = np.asarray(cov_matrix, dtype=np.float64)
    target = float(t @ sigma @ t)
    if target <= 0.0:
        raise ValueError(
            "t Sigma t' <= 0: degenerate direction or matrix not positive "
            "semidefinite"
        )
    projected = result.sums @ t
    return _report(projected, target, ks_slack)
