"""Stationary field generators with known moments and mixing profiles.

A linear field is the finite moving average X_k = sum_j a_j eps_{k-j}
driven by i.i.d. symmetric innovations, so population moments and the
dependence range are exact.  Mixing rates are *declared* per family
(zero beyond the dependence range) rather than estimated: the sup over
sigma-fields in the mixing definitions is not computable in general.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .lattice import Rectangle, Shape, SiteSeed, innovation_grid, volume

__all__ = [
    "FieldSample",
    "HilbertFieldSpec",
    "InnovationDist",
    "LinearFieldSpec",
    "MixingProfile",
    "PopulationMoments",
    "field_spec_from_json",
    "field_spec_to_json",
    "pop_moments",
    "sample",
    "truncate_tail",
    "truncation_constant",
]

INNOVATION_KINDS = ("standard-normal", "rademacher", "centered-uniform")


@dataclass(frozen=True)
class InnovationDist:
    """Symmetric mean-zero innovation law with prescribed variance."""

    kind: str = "standard-normal"
    variance: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in INNOVATION_KINDS:
            raise ValueError(f"kind must be one of {INNOVATION_KINDS}, got {self.kind!r}")
        if not self.variance > 0:
            raise ValueError("variance must be positive")

    @property
    def fourth_moment(self) -> float:
        v = self.variance
        if self.kind == "standard-normal":
            return 3.0 * v * v
        if self.kind == "rademacher":
            return v * v
        # uniform on [-b, b], b^2 = 3v: E eps^4 = b^4/5
        return 9.0 * v * v / 5.0


@dataclass(frozen=True)
class LinearFieldSpec:
    """Finite-support moving average on Z^d.

    ``coeffs`` maps integer offsets j to a_j; the dependence range
    ``m_dep`` is the largest coordinate span of the support, so values at
    sites separated by more than m_dep along every axis are independent.
    """

    coeffs: tuple[tuple[tuple[int, ...], float], ...]
    innovations: InnovationDist = field(default_factory=InnovationDist)

    def __post_init__(self) -> None:
        if isinstance(self.coeffs, dict):
            items = self.coeffs.items()
        else:
            items = self.coeffs
        norm = tuple(sorted((tuple(int(c) for c in off), float(a)) for off, a in items))
        object.__setattr__(self, "coeffs", norm)
        if not norm:
            raise ValueError("coefficient support is empty")
        d = len(norm[0][0])
        if d < 1 or any(len(off) != d for off, _ in norm):
            raise ValueError("all offsets must share one positive dimension")
        if len({off for off, _ in norm}) != len(norm):
            raise ValueError("duplicate coefficient offsets")
        if any(not math.isfinite(a) for _, a in norm):
            raise ValueError("coefficients must be finite")

    @property
    def dim(self) -> int:
        return len(self.coeffs[0][0])

    @property
    def m_dep(self) -> int:
        spans = []
        for u in range(self.dim):
            axis = [off[u] for off, _ in self.coeffs]
            spans.append(max(axis) - min(axis))
        return max(spans)

    def coeff_sum(self) -> float:
        return float(sum(a for _, a in self.coeffs))

    def coeff_power_sum(self, power: int) -> float:
        return float(sum(a**power for _, a in self.coeffs))

    def mixing_profile(self) -> "MixingProfile":
        return MixingProfile.m_dependent(self.m_dep, self.dim)

    def n_components(self) -> int:
        return 1


@dataclass(frozen=True)
class MixingProfile:
    """Declared mixing rates of a generator family.

    ``alpha`` and ``rho_prime`` are nonincreasing; ``j_star`` is the least
    separation with rho'(j) < 1.  For an m-dependent family both
    coefficients vanish beyond the dependence range and are set to their
    trivial upper bounds (1/4 and 1) below it.
    """

    dim: int
    alpha: Callable[[int], float]
    rho_prime: Callable[[int], float]
    j_star: int

    @classmethod
    def m_dependent(cls, m_dep: int, dim: int) -> "MixingProfile":
        def alpha(n: int) -> float:
            return 0.0 if n > m_dep else 0.25

        def rho_prime(n: int) -> float:
            return 0.0 if n > m_dep else 1.0

        return cls(dim=dim, alpha=alpha, rho_prime=rho_prime, j_star=m_dep + 1)


@dataclass(frozen=True)
class HilbertFieldSpec:
    """Truncated basis expansion with weighted coordinate fields.

    Coordinate i is ``weights[i]`` times a copy of ``base`` driven by its
    own innovation stream, which makes the coordinate variances and the
    tail second moments closed-form.  With ``shared_innovations`` every
    coordinate reuses one stream (duplicated, fully correlated
    coordinates) for degenerate-covariance experiments.
    """

    base: LinearFieldSpec
    weights: tuple[float, ...]
    shared_innovations: bool = False

    def __post_init__(self) -> None:
        w = tuple(float(v) for v in self.weights)
        object.__setattr__(self, "weights", w)
        if not w:
            raise ValueError("need at least one coordinate weight")
        if any(not v > 0 for v in w):
            raise ValueError("weights must be positive")

    @property
    def n_coords(self) -> int:
        return len(self.weights)

    @property
    def dim(self) -> int:
        return self.base.dim

    def mixing_profile(self) -> MixingProfile:
        return self.base.mixing_profile()

    def n_components(self) -> int:
        return self.n_coords

    def geometric_ratio(self) -> float | None:
        """Common ratio of the weights if they form a geometric sequence."""
        if len(self.weights) < 2:
            return None
        r = self.weights[1] / self.weights[0]
        if not 0 < r < 1:
            return None
        for a, b in zip(self.weights, self.weights[1:]):
            if abs(b / a - r) > 1e-12 * max(1.0, abs(r)):
                return None
        return r

    def tail_second_moment(self, n_from: int) -> float:
        """sum_{i >= n_from} E X_{0,i}^2, using the ideal infinite sum when
        the weights are geometric (valid upper bound for the truncation)."""
        var0 = pop_moments(self.base).variance
        r = self.geometric_ratio()
        if r is not None:
            if n_from > self.n_coords:
                # continue the ideal geometric tail past the truncation
                first = self.weights[0] * r ** (n_from - 1)
            else:
                first = self.weights[n_from - 1]
            return var0 * first**2 / (1.0 - r**2)
        if n_from > self.n_coords:
            return 0.0
        return var0 * float(sum(c**2 for c in self.weights[n_from - 1 :]))


@dataclass(frozen=True)
class FieldSample:
    """Realized values on a rectangle; trailing axis = coordinate index
    for vector-valued fields."""

    rect: Rectangle
    values: np.ndarray

    @property
    def n_components(self) -> int:
        if self.values.ndim == self.rect.shape.ndim:
            return 1
        return self.values.shape[-1]

    def total(self) -> np.ndarray | float:
        """Rectangular sum over all sites (per component if vector)."""
        axes = tuple(range(self.rect.shape.ndim))
        out = self.values.sum(axis=axes)
        return float(out) if np.ndim(out) == 0 else out


def _dilated_rect(rect: Rectangle, spec: LinearFieldSpec) -> tuple[Rectangle, list[tuple[int, int]]]:
    """Innovation rectangle covering k - j for all k in rect, j in support,
    plus per-axis support bounds (min_j, max_j)."""
    bounds = []
    origin = []
    dims = []
    for u in range(spec.dim):
        js = [off[u] for off, _ in spec.coeffs]
        j_lo, j_hi = min(js), max(js)
        bounds.append((j_lo, j_hi))
        origin.append(rect.origin[u] - j_hi)
        dims.append(rect.shape.dims[u] + (j_hi - j_lo))
    return Rectangle(origin=tuple(origin), shape=Shape(tuple(dims))), bounds


def _sample_linear(spec: LinearFieldSpec, rect: Rectangle, seed: SiteSeed, lane: int) -> np.ndarray:
    eps_rect, bounds = _dilated_rect(rect, spec)
    eps = innovation_grid(seed, eps_rect, spec.innovations, lane=lane)
    out = np.zeros(rect.shape.dims, dtype=np.float64)
    for off, a in spec.coeffs:
        # eps index of site k - j relative to the dilated origin
        sl = tuple(
            slice(b_hi - off[u], b_hi - off[u] + rect.shape.dims[u])
            for u, (_, b_hi) in enumerate(bounds)
        )
        out += a * eps[sl]
    return out


def sample(spec, rect: Rectangle, seed: SiteSeed) -> FieldSample:
    """Realize the field on a rectangle; deterministic given the seed.

    Values are site-local: two overlapping rectangles sampled with the
    same seed agree exactly on their intersection.
    """
    volume(rect.shape)  # checked allocation size
    if isinstance(spec, LinearFieldSpec):
        if rect.shape.ndim != spec.dim:
            raise ValueError("rectangle dimension does not match spec")
        return FieldSample(rect=rect, values=_sample_linear(spec, rect, seed, lane=0))
    if isinstance(spec, HilbertFieldSpec):
        if rect.shape.ndim != spec.dim:
            raise ValueError("rectangle dimension does not match spec")
        comps = []
        for i, c in enumerate(spec.weights, start=1):
            lane = 0 if spec.shared_innovations else i
            comps.append(c * _sample_linear(spec.base, rect, seed, lane=lane))
        return FieldSample(rect=rect, values=np.stack(comps, axis=-1))
    raise TypeError(f"unsupported spec type {type(spec).__name__}")


def truncation_constant(shape: Shape) -> float:
    """Truncation level (L_2 ... L_d)^(1/4); for d = 1 we use L_1^(1/4)
    so the level still diverges with the box (documented convention)."""
    if shape.ndim == 1:
        prod = shape.dims[0]
    else:
        prod = 1
        for v in shape.dims[1:]:
            prod *= v
    return math.sqrt(math.sqrt(float(prod)))


def truncate_tail(sample_: FieldSample, c: float, center: float = 0.0) -> tuple[FieldSample, FieldSample]:
    """Split X into bounded part X*1(|X|<=c) - center and the remaining tail.

    The decomposition X = truncated + tail + 0*center holds pointwise by
    construction: tail is defined as X - truncated, machine-exactly.
    Symmetric innovation laws make the natural centering constant
    E X*1(|X|<=c) equal to 0, so `center` defaults to 0.
    """
    if not c > 0:
        raise ValueError("truncation constant must be positive")
    x = sample_.values
    truncated = np.where(np.abs(x) <= c, x, 0.0) - center
    tail = x - truncated
    return (
        FieldSample(rect=sample_.rect, values=truncated),
        FieldSample(rect=sample_.rect, values=tail),
    )


@dataclass(frozen=True)
class PopulationMoments:
    mean: float
    variance: float
    fourth_moment: float


def pop_moments(spec: LinearFieldSpec) -> PopulationMoments:
    """Exact population moments of X_0 = sum_j a_j eps_{-j}.

    Variance is sigma_eps^2 * sum a_j^2; the fourth moment follows from
    independence of the innovations:
    E X^4 = sum a_j^4 (E eps^4 - 3 sigma^4) + 3 sigma^4 (sum a_j^2)^2.
    """
    v = spec.innovations.variance
    s2 = spec.coeff_power_sum(2)
    s4 = spec.coeff_power_sum(4)
    kappa = spec.innovations.fourth_moment
    fourth = s4 * (kappa - 3.0 * v * v) + 3.0 * v * v * s2 * s2
    return PopulationMoments(mean=0.0, variance=v * s2, fourth_moment=fourth)


def field_spec_to_json(spec) -> str:
    """Canonical JSON for a field spec; floats round-trip bit-exactly."""
    if isinstance(spec, HilbertFieldSpec):
        doc = json.loads(field_spec_to_json(spec.base))
        doc["weights"] = list(spec.weights)
        if spec.shared_innovations:
            doc["shared_innovations"] = True
        return json.dumps(doc)
    if not isinstance(spec, LinearFieldSpec):
        raise TypeError(f"unsupported spec type {type(spec).__name__}")
    doc = {
        "dim": spec.dim,
        "coeffs": [{"offset": list(off), "value": a} for off, a in spec.coeffs],
        "innovation": {"kind": spec.innovations.kind, "variance": spec.innovations.variance},
    }
    return json.dumps(doc)


def field_spec_from_json(text: str):
    doc = json.loads(text)
    known = {"dim", "coeffs", "innovation", "weights", "shared_innovations"}
    extra = set(doc) - known
    if extra:
        raise ValueError(f"unknown field spec keys: {sorted(extra)}")
    innovation = InnovationDist(
        kind=doc["innovation"]["kind"],
        variance=doc["innovation"].get("variance", 1.0),
    )
    coeffs = {tuple(e["offset"]): e["value"] for e in doc["coeffs"]}
    base = LinearFieldSpec(coeffs=coeffs, innovations=innovation)
    if base.dim != doc["dim"]:
        raise ValueError("dim does not match coefficient offsets")
    if "weights" in doc and doc["weights"] is not None:
        return HilbertFieldSpec(
            base=base,
            weights=tuple(doc["weights"]),
            shared_innovations=bool(doc.get("shared_innovations", False)),
        )
    return base
