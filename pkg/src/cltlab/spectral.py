"""Fejer kernels, exact autocovariance, and the partial-sum variance identity.

Three independent routes compute one quantity:

    E S^2(X, L) / vol(L)
        = sum_h prod_u (1 - |h_u|/L_u)_+ r(h)        (covariance sum)
        = integral of G_L * f against normalized Lebesgue measure

where f is the spectral density and G_L the multivariate Fejer kernel.
The integral converges to f(0) as min L_u grows, which is the variance
of the normalized partial sum in the limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fields import LinearFieldSpec
from .lattice import Shape, volume

__all__ = [
    "CovarianceFunction",
    "ResolutionError",
    "SpectralDensity",
    "autocovariance",
    "exact_sum_variance",
    "fejer_integral",
    "fejer_kernel",
    "multivariate_fejer",
    "sigma_squared",
]

# Quadrature must resolve oscillations of G_L at scale 1/L_u.
POINTS_PER_LENGTH = 64
_SMALL_LAMBDA = 1e-6


class ResolutionError(ValueError):
    """Quadrature grid too coarse for the requested kernel."""


def fejer_kernel(n: int, lam) -> np.ndarray | float:
    """K_{n-1}(lambda) = sin^2(n lambda/2) / (n sin^2(lambda/2)).

    Near lambda = 0 the ratio is 0/0; there we fall back to the defining
    sum |sum_{j<n} e^{ij lambda}|^2 / n, which gives K_{n-1}(0) = n.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    lam_arr = np.asarray(lam, dtype=np.float64)
    scalar = lam_arr.ndim == 0
    lam_arr = np.atleast_1d(lam_arr)
    out = np.empty_like(lam_arr)
    small = np.abs(lam_arr) < _SMALL_LAMBDA
    if np.any(~small):
        x = lam_arr[~small]
        s = np.sin(0.5 * x)
        out[~small] = np.sin(0.5 * n * x) ** 2 / (n * s * s)
    if np.any(small):
        j = np.arange(n, dtype=np.float64)
        phases = np.exp(1j * np.outer(lam_arr[small], j)).sum(axis=1)
        out[small] = (phases.real**2 + phases.imag**2) / n
    return float(out[0]) if scalar else out


def multivariate_fejer(shape: Shape, lam_vec) -> float:
    """G_L(lambda) = prod_u K_{L_u - 1}(lambda_u)."""
    lam_vec = np.atleast_1d(np.asarray(lam_vec, dtype=np.float64))
    if lam_vec.shape != (shape.ndim,):
        raise ValueError("lambda vector length must equal the dimension")
    g = 1.0
    for n_u, lam_u in zip(shape.dims, lam_vec):
        g *= fejer_kernel(n_u, float(lam_u))
    return g


@dataclass(frozen=True)
class CovarianceFunction:
    """Finite-support autocovariance h -> r(h) with r(h) = r(-h)."""

    dim: int
    entries: tuple[tuple[tuple[int, ...], float], ...]

    @classmethod
    def from_spec(cls, spec: LinearFieldSpec) -> "CovarianceFunction":
        coeffs = dict(spec.coeffs)
        v = spec.innovations.variance
        acc: dict[tuple[int, ...], float] = {}
        for j, aj in coeffs.items():
            for jp, ajp in coeffs.items():
                h = tuple(b - a for a, b in zip(j, jp))
                acc[h] = acc.get(h, 0.0) + v * aj * ajp
        entries = tuple(sorted((h, r) for h, r in acc.items() if r != 0.0))
        return cls(dim=spec.dim, entries=entries)

    def __call__(self, h: tuple[int, ...]) -> float:
        h = tuple(int(c) for c in h)
        for hh, r in self.entries:
            if hh == h:
                return r
        return 0.0

    def max_abs(self) -> float:
        return max(abs(r) for _, r in self.entries) if self.entries else 0.0


def autocovariance(spec: LinearFieldSpec, h) -> float:
    """r(h) = sigma_eps^2 sum_j a_j a_{j+h}; exact finite sum."""
    h = tuple(int(c) for c in np.atleast_1d(h))
    if len(h) != spec.dim:
        raise ValueError("lag dimension does not match spec")
    coeffs = dict(spec.coeffs)
    total = 0.0
    for j, aj in coeffs.items():
        shifted = tuple(c + dc for c, dc in zip(j, h))
        total += aj * coeffs.get(shifted, 0.0)
    return spec.innovations.variance * total


@dataclass(frozen=True)
class SpectralDensity:
    """Continuous density f >= 0 on [-pi, pi]^d relative to the normalized
    measure m = Lebesgue/(2 pi)^d, so integral f dm = r(0)."""

    dim: int
    fun: Callable[[np.ndarray], np.ndarray]

    @classmethod
    def from_spec(cls, spec: LinearFieldSpec) -> "SpectralDensity":
        offsets = np.array([off for off, _ in spec.coeffs], dtype=np.float64)
        amps = np.array([a for _, a in spec.coeffs], dtype=np.float64)
        v = spec.innovations.variance

        def fun(lam: np.ndarray) -> np.ndarray:
            # lam: (..., d) points; f = v |sum_j a_j e^{i j.lam}|^2
            phase = np.tensordot(lam, offsets.T, axes=1)  # (..., support)
            z = (amps * np.exp(1j * phase)).sum(axis=-1)
            return v * (z.real**2 + z.imag**2)

        return cls(dim=spec.dim, fun=fun)

    @classmethod
    def constant(cls, dim: int, value: float) -> "SpectralDensity":
        def fun(lam: np.ndarray) -> np.ndarray:
            return np.full(lam.shape[:-1], float(value))

        return cls(dim=dim, fun=fun)

    def __call__(self, lam) -> np.ndarray | float:
        lam = np.asarray(lam, dtype=np.float64)
        scalar = lam.ndim <= 1
        pts = np.atleast_2d(lam)
        if pts.shape[-1] != self.dim:
            raise ValueError("point dimension does not match density")
        out = self.fun(pts)
        return float(out[0]) if scalar else out


def exact_sum_variance(spec: LinearFieldSpec, shape: Shape) -> float:
    """E S^2(X, L) = sum_h prod_u (L_u - |h_u|)_+ r(h), exactly."""
    if shape.ndim != spec.dim:
        raise ValueError("shape dimension does not match spec")
    cov = CovarianceFunction.from_spec(spec)
    total = 0.0
    for h, r in cov.entries:
        w = 1.0
        for L_u, h_u in zip(shape.dims, h):
            w *= max(L_u - abs(h_u), 0)
        total += w * r
    return total


def sigma_squared(spec: LinearFieldSpec) -> float:
    """Limit variance = density at zero frequency = sigma_eps^2 (sum a_j)^2."""
    s = spec.coeff_sum()
    return spec.innovations.variance * s * s


def fejer_integral(
    f: SpectralDensity,
    shape: Shape,
    quad_points_per_axis: int | None = None,
    chunk: int = 1 << 22,
) -> float:
    """Midpoint-rule quadrature of integral G_L * f dm.

    The integrand is a trigonometric polynomial of degree < L_u + support
    per axis, so the midpoint rule at >= 64 L_u points per axis is exact
    up to round-off; the floor is enforced rather than trusted.
    """
    if f.dim != shape.ndim:
        raise ValueError("density dimension does not match shape")
    n_min = POINTS_PER_LENGTH * max(shape.dims)
    if quad_points_per_axis is None:
        quad_points_per_axis = n_min
    if quad_points_per_axis < n_min:
        raise ResolutionError(
            f"need at least {n_min} quadrature points per axis for shape "
            f"{shape.dims}, got {quad_points_per_axis}"
        )
    n_pts = int(quad_points_per_axis)
    grid = -math.pi + (np.arange(n_pts) + 0.5) * (2.0 * math.pi / n_pts)
    kernels = [np.asarray(fejer_kernel(L_u, grid)) for L_u in shape.dims]

    d = shape.ndim
    if d == 1:
        vals = f.fun(grid[:, None])
        return float(np.sum(kernels[0] * vals) / n_pts)

    # tensor grid over the remaining axes, streamed in chunks of the first
    rest = np.meshgrid(*([grid] * (d - 1)), indexing="ij")
    rest_pts = np.stack([g.ravel() for g in rest], axis=-1)
    w_rest = np.ones(rest_pts.shape[0])
    for w_axis in np.meshgrid(*kernels[1:], indexing="ij"):
        w_rest *= w_axis.ravel()

    total = 0.0
    block = max(1, chunk // max(1, rest_pts.shape[0]))
    for start in range(0, n_pts, block):
        lam0 = grid[start : start + block]
        pts = np.empty((lam0.size, rest_pts.shape[0], d))
        pts[..., 0] = lam0[:, None]
        pts[..., 1:] = rest_pts[None, :, :]
        vals = f.fun(pts)
        total += float(np.sum(kernels[0][start : start + block][:, None] * w_rest[None, :] * vals))
    return total / n_pts**d


def triangular_average(spec: LinearFieldSpec, shape: Shape) -> float:
    """sum_h prod_u (1 - |h_u|/L_u)_+ r(h): the pre-limit variance per site."""
    return exact_sum_variance(spec, shape) / volume(shape)
