"""Request/response schemas of the lab service.

Every request model rejects unknown keys so a config file typo fails
loudly instead of silently running a different experiment.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from ..fields import HilbertFieldSpec, InnovationDist, LinearFieldSpec

__all__ = [
    "BlockingRequest",
    "BlockingResponse",
    "CltRequest",
    "CltResponse",
    "CovRequest",
    "CovResponse",
    "ErrorBody",
    "FejerRequest",
    "FieldSpecModel",
    "GenRequest",
    "NormalityReportModel",
    "TightnessRequest",
    "TightnessResponse",
    "VarianceRequest",
    "VarianceResponse",
    "VarianceRowModel",
]


class _StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class InnovationModel(_StrictModel):
    kind: Literal["standard-normal", "rademacher", "centered-uniform"]
    variance: float = 1.0


class CoeffModel(_StrictModel):
    offset: list[int]
    value: float


class FieldSpecModel(_StrictModel):
    """Wire form of a field spec; mirrors the JSON file format."""

    dim: int = Field(ge=1)
    coeffs: list[CoeffModel]
    innovation: InnovationModel
    weights: list[float] | None = None
    shared_innovations: bool = False

    def to_spec(self) -> LinearFieldSpec | HilbertFieldSpec:
        base = LinearFieldSpec(
            coeffs={tuple(c.offset): c.value for c in self.coeffs},
            innovations=InnovationDist(self.innovation.kind, self.innovation.variance),
        )
        if base.dim != self.dim:
            raise ValueError("dim does not match coefficient offsets")
        if self.weights is None:
            if self.shared_innovations:
                raise ValueError("shared_innovations requires weights")
            return base
        return HilbertFieldSpec(
            base=base,
            weights=tuple(self.weights),
            shared_innovations=self.shared_innovations,
        )

    @classmethod
    def from_spec(cls, spec) -> "FieldSpecModel":
        base = spec.base if isinstance(spec, HilbertFieldSpec) else spec
        return cls(
            dim=base.dim,
            coeffs=[CoeffModel(offset=list(off), value=a) for off, a in base.coeffs],
            innovation=InnovationModel(
                kind=base.innovations.kind, variance=base.innovations.variance
            ),
            weights=list(spec.weights) if isinstance(spec, HilbertFieldSpec) else None,
            shared_innovations=(
                spec.shared_innovations if isinstance(spec, HilbertFieldSpec) else False
            ),
        )


class ShapeScheduleModel(_StrictModel):
    """Generated anisotropic sweep: L_axis = n for n = 1..n_max, the other
    axes following the growth rule; `select` picks a sublist of n values."""

    dim: int = Field(ge=1)
    axis: int = 1
    n_max: int = Field(ge=1)
    growth: Literal["same", "sqrt"] = "same"
    select: list[int] | None = None


class _ShapesMixin(_StrictModel):
    shapes: list[list[int]] | None = None
    shape_schedule: ShapeScheduleModel | None = None

    def resolve_shapes(self) -> list[list[int]]:
        from ..ensembles import shape_schedule as build_schedule

        if (self.shapes is None) == (self.shape_schedule is None):
            raise ValueError("give exactly one of 'shapes' or 'shape_schedule'")
        if self.shapes is not None:
            return self.shapes
        sched = self.shape_schedule
        shapes = build_schedule(sched.dim, sched.axis, sched.n_max, sched.growth)
        if sched.select is not None:
            if any(not 1 <= n <= sched.n_max for n in sched.select):
                raise ValueError("select values must lie in [1, n_max]")
            shapes = [shapes[n - 1] for n in sched.select]
        return [list(s.dims) for s in shapes]


class FejerRequest(_ShapesMixin):
    spec: FieldSpecModel
    quad_points_per_axis: int | None = None
    master_seed: int = 0  # accepted for CLI uniformity; the sweep is deterministic
    threads: int = Field(default=1, ge=1)  # reserved; the sweep is single-pass


class BlockingRequest(_StrictModel):
    spec: FieldSpecModel
    shape: list[int]
    master_seed: int = 0
    reps: int = Field(default=200, ge=2)
    identity_reps: int = Field(default=20, ge=1)
    threads: int = Field(default=1, ge=1)  # reserved; block sums are one pass


class BlockingResponse(BaseModel):
    n: int
    q: int
    m: int
    p: int
    bound: float
    mc_ratio: float
    identity_max_abs_err: float
    identity_scale: float  # max |S| seen, for relative readings of the error


class VarianceRequest(_ShapesMixin):
    spec: FieldSpecModel
    master_seed: int = 0
    reps: int = Field(default=500, ge=2)
    threads: int = Field(default=1, ge=1)


class VarianceRowModel(BaseModel):
    shape: list[int]
    exact: float
    mc_estimate: float
    sigma_squared: float
    mc_standard_error: float
    within_4se: bool


class VarianceResponse(BaseModel):
    rows: list[VarianceRowModel]
    passed: bool


class NormalityReportModel(BaseModel):
    sample_size: int
    target_variance: float
    ks: float
    ks_threshold: float
    ks_slack: float
    anderson_darling: float
    skewness: float
    excess_kurtosis: float
    passed: bool


class CltRequest(_StrictModel):
    spec: FieldSpecModel
    shape: list[int]
    master_seed: int = 0
    reps: int = Field(default=1000, ge=100)
    threads: int = Field(default=1, ge=1)
    sigma_squared: float | None = None  # None: analytic value from the spec
    ks_slack: float = 1.3
    include_sums: bool = False


class CltResponse(BaseModel):
    report: NormalityReportModel
    sigma_squared: float
    shape: list[int]
    reps: int
    master_seed: int
    sums: list[float] | None = None


class CovRequest(_StrictModel):
    spec: FieldSpecModel  # must carry weights (vector-valued field)
    shape: list[int]
    master_seed: int = 0
    reps: int = Field(default=1000, ge=100)
    threads: int = Field(default=1, ge=1)
    directions: int = Field(default=20, ge=0)
    direction_seed: int = 0
    t_vectors: list[list[float]] | None = None  # explicit directions instead of random ones
    ks_slack: float = 1.3
    include_sums: bool = False


class CovResponse(BaseModel):
    matrix: list[list[float]]
    gamma: list[list[float]]
    sigma_ii: list[float]
    analytic_matrix: list[list[float]]
    polarization_residual: float
    min_eigenvalue: float
    matrix_within_4se: bool
    direction_reports: list[NormalityReportModel]
    passed: bool
    sums: list[list[float]] | None = None


class TightnessRequest(_ShapesMixin):
    spec: FieldSpecModel  # must carry weights
    n_values: list[int]
    master_seed: int = 0
    reps: int = Field(default=1000, ge=2)
    threads: int = Field(default=1, ge=1)


class TightnessResponse(BaseModel):
    n_values: list[int]
    entries: list[float]
    bounds: list[float]
    per_shape: list[list[float]]
    shapes: list[list[int]]
    reps: int
    mc_slack: float
    passed: bool


class GenRequest(_StrictModel):
    spec: FieldSpecModel
    shape: list[int]
    master_seed: int = 0
    stream_tag: int = 0
    threads: int = Field(default=1, ge=1)  # reserved; one realization per call


class ErrorBody(BaseModel):
    code: Literal["config", "numeric", "blocking", "degenerate"]
    message: str
