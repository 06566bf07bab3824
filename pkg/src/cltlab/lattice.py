"""Lattice geometry and seeded site-keyed randomness.

Rectangles live on the integer lattice Z^d.  Block intervals and slab
bounds follow the 1-based convention of rectangular partial sums (the
first site of an axis is index 1 within its rectangle); internal array
storage is 0-based and the conversion is confined to this module.

Innovations are counter-based: the value at a site is a pure function of
(master_seed, stream_tag, lane, site), so overlapping rectangles agree
exactly on their intersection and per-site fills are race-free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy.special import ndtri

__all__ = [
    "MAX_VOLUME",
    "Rectangle",
    "Shape",
    "SiteSeed",
    "innovation_grid",
    "iter_sites",
    "site_array",
    "site_innovation",
    "slab",
    "volume",
]

# Volumes must stay representable in the widest unsigned integer so that
# dense allocation sizes and float conversions are well defined.
MAX_VOLUME = 2**64 - 1

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_MULT1 = 0xBF58476D1CE4E5B9
_MULT2 = 0x94D049BB133111EB

_U_GOLDEN = np.uint64(_GOLDEN)
_U_MULT1 = np.uint64(_MULT1)
_U_MULT2 = np.uint64(_MULT2)


@dataclass(frozen=True)
class Shape:
    """Side lengths L_1..L_d of a lattice box."""

    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        dims = tuple(int(v) for v in self.dims)
        object.__setattr__(self, "dims", dims)
        if len(dims) < 1:
            raise ValueError("shape needs at least one axis")
        if any(v < 1 for v in dims):
            raise ValueError(f"side lengths must be >= 1, got {dims}")
        vol = 1
        for v in dims:
            vol *= v
        if vol > MAX_VOLUME:
            raise OverflowError(f"volume {vol} exceeds 2^64-1")

    @property
    def ndim(self) -> int:
        return len(self.dims)

    def __iter__(self) -> Iterator[int]:
        return iter(self.dims)


def volume(shape: Shape) -> int:
    """Number of sites in the box, Prod_u L_u (checked against 2^64-1)."""
    vol = 1
    for v in shape.dims:
        vol *= v
    if vol > MAX_VOLUME:  # defensive; Shape already checks
        raise OverflowError(f"volume {vol} exceeds 2^64-1")
    return vol


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned box: sites origin + [0, L_u) along each axis."""

    origin: tuple[int, ...]
    shape: Shape

    def __post_init__(self) -> None:
        object.__setattr__(self, "origin", tuple(int(v) for v in self.origin))
        if len(self.origin) != self.shape.ndim:
            raise ValueError(
                f"origin has {len(self.origin)} coordinates for a "
                f"{self.shape.ndim}-dimensional shape"
            )

    @classmethod
    def unit_box(cls, shape: Shape) -> "Rectangle":
        """The summation box 1 <= k_u <= L_u."""
        return cls(origin=(1,) * shape.ndim, shape=shape)

    def axis_range(self, axis: int) -> tuple[int, int]:
        """Inclusive absolute coordinate range along 1-based axis u."""
        i = _axis_index(axis, self.shape.ndim)
        lo = self.origin[i]
        return lo, lo + self.shape.dims[i] - 1


def _axis_index(axis: int, ndim: int) -> int:
    if not 1 <= axis <= ndim:
        raise ValueError(f"axis {axis} out of range for dimension {ndim}")
    return axis - 1


def slab(rect: Rectangle, axis: int, lo: int, hi: int) -> Rectangle:
    """Sub-rectangle restricted to the 1-based interval [lo, hi] on one axis.

    `lo`/`hi` count from 1 at the rectangle's own edge along `axis`; all
    other axes are kept in full.
    """
    i = _axis_index(axis, rect.shape.ndim)
    length = rect.shape.dims[i]
    if not 1 <= lo <= hi <= length:
        raise ValueError(f"interval [{lo}, {hi}] not within [1, {length}]")
    origin = list(rect.origin)
    origin[i] += lo - 1
    dims = list(rect.shape.dims)
    dims[i] = hi - lo + 1
    return Rectangle(origin=tuple(origin), shape=Shape(tuple(dims)))


def iter_sites(rect: Rectangle) -> Iterator[tuple[int, ...]]:
    """All sites of the rectangle in row-major order (last axis fastest)."""
    for offset in np.ndindex(*rect.shape.dims):
        yield tuple(o + k for o, k in zip(rect.origin, offset))


def site_array(rect: Rectangle) -> np.ndarray:
    """(volume, d) int64 array of absolute site coordinates, row-major."""
    grids = np.meshgrid(
        *(np.arange(o, o + n, dtype=np.int64) for o, n in zip(rect.origin, rect.shape.dims)),
        indexing="ij",
    )
    return np.stack([g.ravel() for g in grids], axis=-1)


@dataclass(frozen=True)
class SiteSeed:
    """Key for the counter-based innovation stream.

    The same (master_seed, stream_tag, lane, site) always maps to the same
    value; `stream_tag` separates Monte Carlo replications.
    """

    master_seed: int
    stream_tag: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.master_seed <= _MASK64:
            raise ValueError("master_seed must fit in 64 unsigned bits")
        if self.stream_tag < 0:
            raise ValueError("stream_tag must be nonnegative")


def _mix_scalar(x: int) -> int:
    # splitmix64 finalizer on Python ints (numpy scalars would warn on wrap)
    x &= _MASK64
    x = ((x ^ (x >> 30)) * _MULT1) & _MASK64
    x = ((x ^ (x >> 27)) * _MULT2) & _MASK64
    return x ^ (x >> 31)

def _mix_array(x: np.ndarray) -> np.ndarray:
    x = (x ^ (x >> np.uint64(30))) * _U_MULT1
    x = (x ^ (x >> np.uint64(27))) * _U_MULT2
    return x ^ (x >> np.uint64(31))


def _stream_word(seed: SiteSeed, lane: int) -> int:
    h = _mix_scalar(seed.master_seed ^ _GOLDEN)
    h = _mix_scalar(h ^ ((seed.stream_tag * _GOLDEN) & _MASK64))
    h = _mix_scalar(h ^ ((lane * _GOLDEN) & _MASK64))
    return h


def _site_hash(seed: SiteSeed, coords: list[np.ndarray], lane: int) -> np.ndarray:
    """uint64 counters for given coordinate columns (int64 arrays)."""
    h = np.full(coords[0].shape, _stream_word(seed, lane), dtype=np.uint64)
    for c in coords:
        h = _mix_array(h ^ (c.astype(np.uint64) * _U_GOLDEN))
    return h


def _uniform01(h: np.ndarray) -> np.ndarray:
    # open (0,1) with 53 significant bits
    return (h >> np.uint64(11)).astype(np.float64) * 2.0**-53 + 2.0**-54


def _transform(h: np.ndarray, kind: str, variance: float) -> np.ndarray:
    if kind == "standard-normal":
        return ndtri(_uniform01(h)) * math.sqrt(variance)
    if kind == "rademacher":
        s = math.sqrt(variance)
        return np.where((h >> np.uint64(63)).astype(bool), s, -s)
    if kind == "centered-uniform":
        half_width = math.sqrt(3.0 * variance)
        return (2.0 * _uniform01(h) - 1.0) * half_width
    raise ValueError(f"unknown innovation kind {kind!r}")


def site_innovation(seed: SiteSeed, site: tuple[int, ...], dist, lane: int = 0) -> float:
    """Innovation value at one site; pure function of its arguments."""
    coords = [np.array([int(c)], dtype=np.int64) for c in site]
    h = _site_hash(seed, coords, lane)
    return float(_transform(h, dist.kind, dist.variance)[0])


def innovation_grid(seed: SiteSeed, rect: Rectangle, dist, lane: int = 0) -> np.ndarray:
    """Dense array of innovations over the rectangle, shaped like it.

    Equals ``site_innovation`` evaluated site by site; computed with one
    vectorized pass.
    """
    grids = np.meshgrid(
        *(np.arange(o, o + n, dtype=np.int64) for o, n in zip(rect.origin, rect.shape.dims)),
        indexing="ij",
    )
    h = _site_hash(seed, [g.ravel() for g in grids], lane)
    return _transform(h, dist.kind, dist.variance).reshape(rect.shape.dims)
