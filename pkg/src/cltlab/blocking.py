"""Bernstein blocking: schedule, exact decomposition, small-block bound.

The first axis of the box is split into m alternating big (length p) and
small (length q) slabs; the union tiles [1, n] exactly, so the slab sums
reproduce the rectangular sum to round-off.  Small-slab sums carry a
vanishing share of the variance, which is what makes the big-block sums
the whole story in the limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import FieldSample, MixingProfile, sample as sample_field
from .lattice import Rectangle, Shape, SiteSeed, slab
from .spectral import sigma_squared

__all__ = [
    "BlockingError",
    "BlockingPlan",
    "DegenerateVarianceError",
    "correlation_constant",
    "decompose",
    "negligibility_ratio",
    "schedule",
    "schedule_params",
    "small_block_bound",
]


class BlockingError(ValueError):
    """The box is too short for a nontrivial big/small decomposition."""


class DegenerateVarianceError(ValueError):
    """sigma^2 = 0: the normalized sums collapse; use the Chebyshev branch."""


def _iroot(n: int, k: int) -> int:
    """floor(n^(1/k)) without float-rounding surprises at perfect powers."""
    r = int(round(n ** (1.0 / k)))
    while r > 0 and r**k > n:
        r -= 1
    while (r + 1) ** k <= n:
        r += 1
    return r


def schedule_params(n: int, mix: MixingProfile) -> tuple[int, int, int]:
    """The triple (q, m, p) of small length, pair count, big length.

    q = floor(n^(1/4)); m = floor(min(q, n^(1/10), alpha(q)^(-1/5)))
    with alpha(q) = 0 reading the last term as +infinity; p is the unique
    integer with m(p - 1 + q) < n <= m(p + q).
    """
    if n < 2:
        raise BlockingError("n must be >= 2")
    q = _iroot(n, 4)
    bound = float(min(q, _iroot(n, 10)))
    a = mix.alpha(q)
    if a > 0.0:
        bound = min(bound, a ** (-0.2))
    m = int(math.floor(bound))
    if m < 1:
        raise BlockingError(f"no valid block-pair count for n={n}")
    p = -(-n // m) - q  # ceil(n/m) - q
    if p < 1:
        raise BlockingError(f"n={n} too small for blocking (p={p} < 1)")
    if not (m * (p - 1 + q) < n <= m * (p + q)):
        raise BlockingError(f"schedule invariant violated for n={n}: q={q} m={m} p={p}")
    return q, m, p


@dataclass(frozen=True)
class BlockingPlan:
    """Alternating big/small intervals tiling [1, n] along the first axis."""

    n: int
    q: int
    m: int
    p: int
    big_ranges: tuple[tuple[int, int], ...]
    small_ranges: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        cursor = 1
        for big, small in zip(self.big_ranges, self.small_ranges):
            if big[0] != cursor or big[1] - big[0] + 1 != self.p or small[0] != big[1] + 1:
                raise ValueError("block ranges do not tile [1, n]")
            cursor = small[1] + 1
        if cursor != self.n + 1:
            raise ValueError("block ranges do not cover [1, n]")


def schedule(n: int, mix: MixingProfile) -> BlockingPlan:
    """Blocking plan for a first-axis length n under the declared mixing."""
    q, m, p = schedule_params(n, mix)
    big = []
    small = []
    for k in range(1, m + 1):
        big.append(((k - 1) * (p + q) + 1, k * p + (k - 1) * q))
        if k < m:
            small.append((k * p + (k - 1) * q + 1, k * (p + q)))
        else:
            small.append((m * p + (m - 1) * q + 1, n))
    return BlockingPlan(
        n=n, q=q, m=m, p=p, big_ranges=tuple(big), small_ranges=tuple(small)
    )


def _slab_sums(sample: FieldSample, ranges) -> np.ndarray:
    ndim = sample.rect.shape.ndim
    spatial = tuple(range(ndim))
    out = []
    for lo, hi in ranges:
        block = sample.values[lo - 1 : hi]
        out.append(np.asarray(block.sum(axis=spatial), dtype=np.float64))
    return np.stack(out, axis=0)


def decompose(sample: FieldSample, plan: BlockingPlan) -> tuple[np.ndarray, np.ndarray]:
    """Big-block sums U_k and small-block sums V_k of a realization.

    sum U + sum V reproduces the rectangular sum exactly (the slabs
    partition the box); arrays have shape (m,) or (m, components).
    """
    if sample.rect.shape.dims[0] != plan.n:
        raise ValueError(
            f"sample first-axis length {sample.rect.shape.dims[0]} != plan n {plan.n}"
        )
    return _slab_sums(sample, plan.big_ranges), _slab_sums(sample, plan.small_ranges)


def correlation_constant(mix: MixingProfile) -> float:
    """C = j^d ((1 + rho'(j)) / (1 - rho'(j)))^d at the fixed j = j_star.

    For an m-dependent family this is (m_dep + 1)^d.
    """
    j = mix.j_star
    rp = mix.rho_prime(j)
    if rp >= 1.0:
        raise ValueError(f"rho'({j}) = {rp} >= 1; no valid correlation constant")
    return float((j * (1.0 + rp) / (1.0 - rp)) ** mix.dim)


def small_block_bound(
    plan: BlockingPlan, mix: MixingProfile, var0: float, cross_volume: int
) -> float:
    """Upper bound C * m * q * cross_volume * var0 on E |sum_k V_k|^2.

    The small blocks cover at most m*q*cross_volume sites, and the
    second moment of a rectangular sum of a rho'-mixing field is at most
    C times (site count) times E X_0^2.
    """
    return correlation_constant(mix) * plan.m * plan.q * cross_volume * var0


def negligibility_ratio(
    spec,
    shape: Shape,
    plan: BlockingPlan,
    reps: int,
    seed: int,
) -> float:
    """Monte Carlo estimate of E |sum_k V_k|^2 / (sigma^2 n cross_volume).

    Only the small slabs are realized (site-keyed innovations make slab
    samples agree with restrictions of full-box samples), so the cost is
    O(m q cross_volume) per replication.
    """
    s2 = sigma_squared(spec)
    if s2 <= 0.0:
        raise DegenerateVarianceError(
            "sigma^2 = 0; the small-block ratio is undefined, use the "
            "degenerate Chebyshev branch instead"
        )
    if shape.dims[0] != plan.n:
        raise ValueError("shape first axis must equal plan n")
    box = Rectangle.unit_box(shape)
    cross_volume = 1
    for v in shape.dims[1:]:
        cross_volume *= v
    totals = np.zeros(reps)
    for r in range(reps):
        site_seed = SiteSeed(master_seed=seed, stream_tag=r)
        acc = 0.0
        for lo, hi in plan.small_ranges:
            piece = sample_field(spec, slab(box, 1, lo, hi), site_seed)
            acc += float(piece.values.sum())
        totals[r] = acc
    return float(np.mean(totals**2) / (s2 * plan.n * cross_volume))
