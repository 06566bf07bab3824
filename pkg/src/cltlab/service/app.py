"""FastAPI app exposing the lab operations.

Tabular results (fejer sweeps, generated samples) come back as text/csv;
everything else is JSON.  Library errors map to a structured 400 body
{"error": {"code", "message"}} so clients can translate them to exit
codes; schema violations use FastAPI's native 422.
"""

from __future__ import annotations

import math

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse

from ..blocking import (
    BlockingError,
    DegenerateVarianceError,
    decompose,
    negligibility_ratio,
    schedule,
    small_block_bound,
)
from ..covariance import analytic_covariance, covariance_standard_errors, estimate_cov
from ..ensembles import run_ensemble, variance_convergence
from ..fields import (
    HilbertFieldSpec,
    pop_moments,
    sample,
    truncate_tail,
    truncation_constant,
)
from ..lattice import Rectangle, Shape, SiteSeed, site_array
from ..normality import cramer_wold, normality_test
from ..spectral import ResolutionError, SpectralDensity, fejer_integral, sigma_squared, triangular_average
from ..tightness import tightness_profile
from .models import (
    BlockingRequest,
    BlockingResponse,
    CltRequest,
    CltResponse,
    CovRequest,
    CovResponse,
    FejerRequest,
    GenRequest,
    NormalityReportModel,
    TightnessRequest,
    TightnessResponse,
    VarianceRequest,
    VarianceResponse,
    VarianceRowModel,
)

__all__ = ["app", "create_app"]


def _error_response(code: str, exc: Exception, status: int = 400) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"error": {"code": code, "message": str(exc)}},
    )


def _shape(dims: list[int]) -> Shape:
    return Shape(tuple(dims))


def _scalar_spec(model) -> object:
    spec = model.to_spec()
    if isinstance(spec, HilbertFieldSpec):
        raise ValueError("this command needs a scalar spec (no weights)")
    return spec


def _vector_spec(model) -> HilbertFieldSpec:
    spec = model.to_spec()
    if not isinstance(spec, HilbertFieldSpec):
        raise ValueError("this command needs a vector spec (weights present)")
    return spec


def _report_model(report) -> NormalityReportModel:
    return NormalityReportModel(
        sample_size=report.sample_size,
        target_variance=report.target_variance,
        ks=report.ks,
        ks_threshold=report.ks_threshold,
        ks_slack=report.ks_slack,
        anderson_darling=report.anderson_darling,
        skewness=report.skewness,
        excess_kurtosis=report.excess_kurtosis,
        passed=report.passed,
    )


def _csv(header: list[str], rows: list[list]) -> PlainTextResponse:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
    return PlainTextResponse("\n".join(lines) + "\n", media_type="text/csv")


def create_app() -> FastAPI:
    app = FastAPI(title="cltlab", version="0.1.0")

    @app.exception_handler(ResolutionError)
    async def _numeric(request: Request, exc: ResolutionError):
        return _error_response("numeric", exc)

    @app.exception_handler(BlockingError)
    async def _blocking(request: Request, exc: BlockingError):
        return _error_response("blocking", exc)

    @app.exception_handler(DegenerateVarianceError)
    async def _degenerate(request: Request, exc: DegenerateVarianceError):
        return _error_response("degenerate", exc)

    @app.exception_handler(ValueError)
    async def _config(request: Request, exc: ValueError):
        return _error_response("config", exc)

    @app.exception_handler(OverflowError)
    async def _overflow(request: Request, exc: OverflowError):
        return _error_response("config", exc)

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/fejer")
    def fejer(req: FejerRequest) -> PlainTextResponse:
        spec = _scalar_spec(req.spec)
        density = SpectralDensity.from_spec(spec)
        f_zero = sigma_squared(spec)
        rows = []
        for dims in req.resolve_shapes():
            shape = _shape(dims)
            exact = triangular_average(spec, shape)
            quad = fejer_integral(density, shape, req.quad_points_per_axis)
            rows.append(
                ["x".join(str(v) for v in dims), exact, quad, f_zero, abs(quad - f_zero)]
            )
        return _csv(["shape", "exact", "quadrature", "f_zero", "abs_err"], rows)

    @app.post("/blocking")
    def blocking(req: BlockingRequest) -> BlockingResponse:
        spec = _scalar_spec(req.spec)
        shape = _shape(req.shape)
        plan = schedule(shape.dims[0], spec.mixing_profile())
        cross_volume = 1
        for v in shape.dims[1:]:
            cross_volume *= v
        var0 = pop_moments(spec).variance
        bound = small_block_bound(plan, spec.mixing_profile(), var0, cross_volume)
        ratio = negligibility_ratio(spec, shape, plan, req.reps, req.master_seed)

        c = truncation_constant(shape)
        box = Rectangle.unit_box(shape)
        worst = 0.0
        scale = 0.0
        for r in range(req.identity_reps):
            realization = sample(spec, box, SiteSeed(req.master_seed, stream_tag=r))
            truncated, _ = truncate_tail(realization, c)
            big, small = decompose(truncated, plan)
            total = float(truncated.values.sum())
            worst = max(worst, abs(float(big.sum() + small.sum()) - total))
            scale = max(scale, abs(total))
        return BlockingResponse(
            n=plan.n,
            q=plan.q,
            m=plan.m,
            p=plan.p,
            bound=bound,
            mc_ratio=ratio,
            identity_max_abs_err=worst,
            identity_scale=scale,
        )

    @app.post("/variance")
    def variance(req: VarianceRequest) -> VarianceResponse:
        spec = _scalar_spec(req.spec)
        rows = variance_convergence(
            spec,
            [_shape(dims) for dims in req.resolve_shapes()],
            req.reps,
            req.master_seed,
            threads=req.threads,
        )
        out = []
        ok = True
        for row in rows:
            within = abs(row.mc_estimate - row.exact) <= 4.0 * row.mc_standard_error
            ok = ok and within
            out.append(
                VarianceRowModel(
                    shape=list(row.shape),
                    exact=row.exact,
                    mc_estimate=row.mc_estimate,
                    sigma_squared=row.sigma_squared,
                    mc_standard_error=row.mc_standard_error,
                    within_4se=within,
                )
            )
        return VarianceResponse(rows=out, passed=ok)

    @app.post("/clt")
    def clt(req: CltRequest) -> CltResponse:
        spec = _scalar_spec(req.spec)
        sigma2 = req.sigma_squared
        if sigma2 is None:
            sigma2 = sigma_squared(spec)
            if sigma2 <= 0.0:
                raise DegenerateVarianceError(
                    "sigma^2 = 0 for this spec: the limit is the point mass at 0 "
                    "(degenerate branch); a normality gate needs positive variance"
                )
        result = run_ensemble(
            spec, _shape(req.shape), req.reps, req.master_seed, threads=req.threads
        )
        report = normality_test(result, sigma2, ks_slack=req.ks_slack)
        return CltResponse(
            report=_report_model(report),
            sigma_squared=sigma2,
            shape=req.shape,
            reps=req.reps,
            master_seed=req.master_seed,
            sums=[float(v) for v in result.sums] if req.include_sums else None,
        )

    @app.post("/cov")
    def cov(req: CovRequest) -> CovResponse:
        spec = _vector_spec(req.spec)
        result = run_ensemble(
            spec, _shape(req.shape), req.reps, req.master_seed, threads=req.threads
        )
        est = estimate_cov(result)
        analytic = analytic_covariance(spec)
        se = covariance_standard_errors(analytic, req.reps)
        within = bool(np.all(np.abs(est.matrix - analytic) <= 4.0 * se))
        if req.t_vectors is not None:
            directions = [np.asarray(t, dtype=np.float64) for t in req.t_vectors]
        else:
            rng = np.random.default_rng(req.direction_seed)
            directions = [rng.standard_normal(spec.n_coords) for _ in range(req.directions)]
        reports = []
        ok_directions = True
        for t in directions:
            rep = cramer_wold(result, t, analytic, ks_slack=req.ks_slack)
            ok_directions = ok_directions and rep.passed
            reports.append(_report_model(rep))
        residual = est.polarization_residual()
        min_eig = est.min_eigenvalue()
        passed = within and ok_directions and residual <= 1e-12 and min_eig >= -1e-10
        return CovResponse(
            matrix=est.matrix.tolist(),
            gamma=est.gamma.tolist(),
            sigma_ii=est.sigma_ii.tolist(),
            analytic_matrix=analytic.tolist(),
            polarization_residual=residual,
            min_eigenvalue=min_eig,
            matrix_within_4se=within,
            direction_reports=reports,
            passed=passed,
            sums=result.sums.tolist() if req.include_sums else None,
        )

    @app.post("/tightness")
    def tightness(req: TightnessRequest) -> TightnessResponse:
        spec = _vector_spec(req.spec)
        report = tightness_profile(
            spec,
            [_shape(dims) for dims in req.resolve_shapes()],
            req.n_values,
            req.reps,
            req.master_seed,
            threads=req.threads,
        )
        slack = 1.0 + 4.0 / math.sqrt(req.reps)
        nonincreasing = all(
            a >= b - 1e-15 for a, b in zip(report.entries, report.entries[1:])
        )
        bounded = all(e <= b * slack for e, b in zip(report.entries, report.bounds))
        return TightnessResponse(
            n_values=list(report.n_values),
            entries=list(report.entries),
            bounds=list(report.bounds),
            per_shape=[list(r) for r in report.per_shape],
            shapes=[list(s) for s in report.shapes],
            reps=report.reps,
            mc_slack=slack,
            passed=nonincreasing and bounded,
        )

    @app.post("/gen")
    def gen(req: GenRequest) -> PlainTextResponse:
        spec = req.spec.to_spec()
        shape = _shape(req.shape)
        box = Rectangle.unit_box(shape)
        realization = sample(spec, box, SiteSeed(req.master_seed, req.stream_tag))
        sites = site_array(box)
        n_comp = realization.n_components
        values = realization.values.reshape(sites.shape[0], n_comp)
        header = [f"k{u + 1}" for u in range(shape.ndim)]
        header += ["value"] if n_comp == 1 else [f"value_{i + 1}" for i in range(n_comp)]
        rows = [
            [int(c) for c in sites[idx]] + [float(v) for v in values[idx]]
            for idx in range(sites.shape[0])
        ]
        return _csv(header, rows)

    return app


app = create_app()
