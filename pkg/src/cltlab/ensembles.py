"""Monte Carlo ensembles of normalized rectangular sums.

One replication realizes the field on the box 1 <= k_u <= L_u with its
own stream tag and records S_L / sqrt(vol).  Replications are
independent by construction and may be computed in parallel; results are
stored by replication index so aggregation is identical across thread
counts.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .fields import LinearFieldSpec, field_spec_to_json, sample
from .lattice import Rectangle, Shape, SiteSeed, volume
from .spectral import sigma_squared, triangular_average

__all__ = [
    "EnsembleResult",
    "VarianceRow",
    "run_ensemble",
    "shape_schedule",
    "variance_convergence",
]


@dataclass(frozen=True)
class EnsembleResult:
    """Normalized sums s_r = S(X, L)/sqrt(vol L), one per replication.

    ``sums`` has shape (reps,) for scalar fields and (reps, m) for
    m-component fields.  Fully reproducible from
    (spec_id, shape, reps, master_seed).
    """

    spec_id: str
    shape: Shape
    reps: int
    master_seed: int
    sums: np.ndarray

    @property
    def n_components(self) -> int:
        return 1 if self.sums.ndim == 1 else self.sums.shape[1]

    def component(self, i: int) -> np.ndarray:
        """1-based coordinate projection."""
        if self.sums.ndim == 1:
            if i != 1:
                raise ValueError("scalar ensemble has only component 1")
            return self.sums
        return self.sums[:, i - 1]


def run_ensemble(spec, shape: Shape, reps: int, master_seed: int, threads: int = 1) -> EnsembleResult:
    """R independent normalized sums; stream_tag = replication index."""
    if reps < 2:
        raise ValueError("need at least 2 replications")
    box = Rectangle.unit_box(shape)
    root_vol = float(volume(shape)) ** 0.5
    # vector-valued specs keep their component axis even with one coordinate
    scalar = isinstance(spec, LinearFieldSpec)
    sums = np.zeros(reps) if scalar else np.zeros((reps, spec.n_components()))

    def fill(r: int) -> None:
        s = sample(spec, box, SiteSeed(master_seed=master_seed, stream_tag=r))
        sums[r] = s.total() / root_vol

    if threads <= 1:
        for r in range(reps):
            fill(r)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, range(reps)))
    return EnsembleResult(
        spec_id=field_spec_to_json(spec),
        shape=shape,
        reps=reps,
        master_seed=master_seed,
        sums=sums,
    )


@dataclass(frozen=True)
class VarianceRow:
    shape: tuple[int, ...]
    exact: float
    mc_estimate: float
    sigma_squared: float
    mc_standard_error: float


def variance_convergence(
    spec, shapes: Sequence[Shape], reps: int, master_seed: int, threads: int = 1
) -> list[VarianceRow]:
    """Per shape: exact E S^2/vol, its Monte Carlo estimate, and the limit.

    The normal-theory standard error sqrt(2/R) * exact is attached as the
    yardstick for the MC column.
    """
    rows = []
    for shape in shapes:
        exact = triangular_average(spec, shape)
        result = run_ensemble(spec, shape, reps, master_seed, threads=threads)
        mc = float(np.mean(result.sums**2))
        rows.append(
            VarianceRow(
                shape=shape.dims,
                exact=exact,
                mc_estimate=mc,
                sigma_squared=sigma_squared(spec),
                mc_standard_error=float(np.sqrt(2.0 / reps)) * exact,
            )
        )
    return rows


def shape_schedule(
    dim: int,
    axis: int,
    n_max: int,
    growth: Callable[[int], int] | str = "same",
) -> list[Shape]:
    """Shapes with L_axis = n for n = 1..n_max and other axes per rule.

    The rule must send every other axis to infinity; divergence of a
    callable is checked heuristically (nondecreasing along the sequence
    and strictly larger at n_max than at 1).
    """
    if not 1 <= axis <= dim:
        raise ValueError(f"axis {axis} out of range for dimension {dim}")
    rule = _named_rule(growth) if isinstance(growth, str) else growth
    if dim > 1 and n_max > 1:
        values = [int(rule(n)) for n in range(1, n_max + 1)]
        if any(b < a for a, b in zip(values, values[1:])) or values[-1] <= values[0]:
            raise ValueError("growth rule does not diverge")
    shapes = []
    for n in range(1, n_max + 1):
        dims = [int(rule(n))] * dim
        dims[axis - 1] = n
        shapes.append(Shape(tuple(dims)))
    return shapes


def _named_rule(name: str) -> Callable[[int], int]:
    if name == "same":
        return lambda n: n
    if name == "sqrt":
        return lambda n: int(np.ceil(np.sqrt(n)))
    raise ValueError(f"unknown growth rule {name!r}")
