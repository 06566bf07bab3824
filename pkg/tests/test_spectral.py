import cmath
import itertools
import math

import numpy as np
import pytest

from cltlab.fields import InnovationDist, LinearFieldSpec, sample
from cltlab.lattice import Rectangle, Shape, SiteSeed, volume
from cltlab.spectral import (
    CovarianceFunction,
    ResolutionError,
    SpectralDensity,
    autocovariance,
    exact_sum_variance,
    fejer_integral,
    fejer_kernel,
    multivariate_fejer,
    sigma_squared,
    triangular_average,
)


def ma1():
    return LinearFieldSpec(coeffs={(0,): 1.0, (1,): 1.0}, innovations=InnovationDist("rademacher"))


def iid(dim=1):
    off = (0,) * dim
    return LinearFieldSpec(coeffs={off: 1.0}, innovations=InnovationDist("standard-normal"))


def ma2d():
    # separable (1,1) x (1,1) kernel
    coeffs = {(j1, j2): 1.0 for j1 in (0, 1) for j2 in (0, 1)}
    return LinearFieldSpec(coeffs=coeffs, innovations=InnovationDist("rademacher"))


# ---------------------------------------------------------------- Fejer kernel

def test_fejer_kernel_n1_is_one():
    for lam in (-3.0, -0.5, 0.0, 1e-9, 2.2):
        assert fejer_kernel(1, lam) == pytest.approx(1.0, abs=1e-14)


def test_fejer_kernel_at_zero_is_n():
    for n in (1, 2, 5, 64, 1000):
        assert fejer_kernel(n, 0.0) == pytest.approx(n, abs=1e-12 * n)


def test_fejer_kernel_n2_at_pi_is_zero():
    # oracle: (1/2)|1 + e^{i pi}|^2 evaluated directly
    direct = abs(1 + cmath.exp(1j * math.pi)) ** 2 / 2
    assert direct < 1e-30
    assert fejer_kernel(2, math.pi) == pytest.approx(direct, abs=1e-15)


def test_fejer_kernel_matches_dirichlet_sum_everywhere():
    # |sum_{j<n} e^{ij lam}|^2 / n as an independent oracle
    rng = np.random.default_rng(0)
    for n in (2, 3, 7, 20):
        for lam in rng.uniform(-math.pi, math.pi, 8):
            direct = abs(sum(cmath.exp(1j * j * lam) for j in range(n))) ** 2 / n
            assert fejer_kernel(n, lam) == pytest.approx(direct, rel=1e-10, abs=1e-10)


def test_fejer_kernel_small_lambda_branch_is_stable():
    for lam in (0.0, 1e-9, -1e-7, 9e-7):
        v = fejer_kernel(1000, lam)
        assert np.isfinite(v)
        assert v == pytest.approx(1000.0, rel=1e-6)


def test_fejer_normalization_integrates_to_one():
    # Fourier coefficient at 0 is 1: midpoint quadrature against dm
    for n in (1, 2, 7, 33, 128):
        pts = 64 * max(n, 4)
        grid = -math.pi + (np.arange(pts) + 0.5) * (2 * math.pi / pts)
        vals = np.asarray(fejer_kernel(n, grid))
        assert abs(vals.mean() - 1.0) <= 1e-9


def test_multivariate_fejer_examples():
    assert multivariate_fejer(Shape((1, 1)), [0.3, -2.0]) == pytest.approx(1.0, abs=1e-14)
    assert multivariate_fejer(Shape((3, 4)), [0.0, 0.0]) == pytest.approx(12.0, abs=1e-12)
    assert multivariate_fejer(Shape((2, 2)), [math.pi, math.pi]) == pytest.approx(0.0, abs=1e-25)


# ------------------------------------------------------------- autocovariance

def enumerate_autocovariance(spec, h):
    """Exact E X_0 X_h by enumerating Rademacher innovation patterns."""
    assert spec.innovations.kind == "rademacher"
    support = [off for off, _ in spec.coeffs]
    coeffs = dict(spec.coeffs)
    zero = (0,) * spec.dim
    sites = sorted(
        {tuple(k - j for k, j in zip(site, off)) for site in (zero, tuple(h)) for off in support}
    )
    scale = math.sqrt(spec.innovations.variance)
    total = 0.0
    for pattern in itertools.product((-scale, scale), repeat=len(sites)):
        eps = dict(zip(sites, pattern))
        x0 = sum(a * eps[tuple(-j for j in off)] for off, a in coeffs.items())
        xh = sum(a * eps[tuple(hh - j for hh, j in zip(h, off))] for off, a in coeffs.items())
        total += x0 * xh
    return total / 2 ** len(sites)


def test_autocovariance_ma1_values():
    spec = ma1()
    for h, expected in [((0,), 2.0), ((1,), 1.0), ((-1,), 1.0), ((2,), 0.0)]:
        assert autocovariance(spec, h) == expected
        assert enumerate_autocovariance(spec, h) == pytest.approx(expected, abs=1e-12)


def test_autocovariance_iid():
    spec = iid()
    assert autocovariance(spec, (0,)) == 1.0
    for h in [(1,), (-3,), (7,)]:
        assert autocovariance(spec, h) == 0.0


def test_autocovariance_separable_2d():
    spec = ma2d()
    assert autocovariance(spec, (1, 1)) == 1.0
    assert enumerate_autocovariance(spec, (1, 1)) == pytest.approx(1.0, abs=1e-12)
    assert autocovariance(spec, (0, 0)) == 4.0
    assert autocovariance(spec, (1, 0)) == 2.0
    assert autocovariance(spec, (2, 0)) == 0.0


def test_autocovariance_symmetry_random_specs():
    rng = np.random.default_rng(3)
    for _ in range(5):
        offs = [(int(a), int(b)) for a, b in rng.integers(-2, 3, size=(4, 2))]
        coeffs = {off: float(rng.normal()) for off in offs}
        spec = LinearFieldSpec(coeffs=coeffs, innovations=InnovationDist("standard-normal", 1.7))
        for h in [(0, 0), (1, -2), (3, 1)]:
            neg = tuple(-c for c in h)
            assert autocovariance(spec, h) == pytest.approx(autocovariance(spec, neg), rel=1e-12)


def test_covariance_function_support_and_positivity():
    cov = CovarianceFunction.from_spec(ma2d())
    assert cov((0, 0)) >= 0
    span = max(max(abs(c) for c in h) for h, _ in cov.entries)
    assert span <= 2 * ma2d().m_dep


# --------------------------------------------------------- exact sum variance

def brute_force_sum_variance(spec, shape):
    """Independent oracle: double sum of r(k - l) over all site pairs."""
    sites = list(np.ndindex(*shape.dims))
    total = 0.0
    for k in sites:
        for l in sites:
            total += autocovariance(spec, tuple(a - b for a, b in zip(k, l)))
    return total


def test_exact_sum_variance_ma1_frozen():
    spec = ma1()
    assert exact_sum_variance(spec, Shape((10,))) == 38.0
    assert triangular_average(spec, Shape((10,))) == pytest.approx(3.8, abs=1e-12)
    assert brute_force_sum_variance(spec, Shape((10,))) == pytest.approx(38.0, abs=1e-9)


def test_exact_sum_variance_iid_is_volume():
    for shape in (Shape((17,)), Shape((5, 4)), Shape((2, 3, 4))):
        spec = iid(shape.ndim)
        assert exact_sum_variance(spec, shape) == volume(shape)


def test_exact_sum_variance_2d_frozen():
    spec = ma2d()
    shape = Shape((10, 10))
    expected = 100 * (4 - 2 / 10) ** 2  # separable product, = 1444
    assert expected == 1444.0
    assert exact_sum_variance(spec, shape) == pytest.approx(expected, rel=1e-13)
    assert brute_force_sum_variance(spec, shape) == pytest.approx(expected, rel=1e-10)


def test_exact_sum_variance_matches_brute_force_random_spec():
    rng = np.random.default_rng(11)
    coeffs = {(0, 0): 1.0, (1, 0): -0.3, (0, 2): 0.8}
    spec = LinearFieldSpec(coeffs=coeffs, innovations=InnovationDist("standard-normal", 0.6))
    shape = Shape((6, 7))
    assert exact_sum_variance(spec, shape) == pytest.approx(
        brute_force_sum_variance(spec, shape), rel=1e-11
    )


def test_monte_carlo_agreement_with_exact():
    spec = ma1()
    shape = Shape((500,))
    reps = 2000
    exact = exact_sum_variance(spec, shape)
    sums = []
    box = Rectangle.unit_box(shape)
    for r in range(reps):
        sums.append(sample(spec, box, SiteSeed(99, stream_tag=r)).values.sum())
    mc = float(np.mean(np.array(sums) ** 2))
    assert abs(mc - exact) <= 4 * math.sqrt(2.0 / reps) * exact


# -------------------------------------------------------------- sigma squared

def test_sigma_squared_examples():
    assert sigma_squared(iid()) == 1.0
    assert sigma_squared(ma1()) == 4.0
    degenerate = LinearFieldSpec(
        coeffs={(0,): 1.0, (1,): -1.0}, innovations=InnovationDist("rademacher")
    )
    assert sigma_squared(degenerate) == 0.0


# -------------------------------------------------------------- fejer integral

def test_fejer_integral_constant_density():
    for shape in (Shape((10,)), Shape((3, 5))):
        f = SpectralDensity.constant(shape.ndim, 2.5)
        assert fejer_integral(f, shape) == pytest.approx(2.5, abs=1e-9)


def test_fejer_integral_matches_exact_identity():
    spec = ma1()
    f = SpectralDensity.from_spec(spec)
    for n in (10, 100, 1000):
        got = fejer_integral(f, Shape((n,)))
        assert got == pytest.approx(triangular_average(spec, Shape((n,))), abs=1e-6)
    assert fejer_integral(f, Shape((10,))) == pytest.approx(3.8, abs=1e-6)
    # the true gap at n = 1000 is exactly 2/n = 2e-3; allow round-off on top
    assert abs(fejer_integral(f, Shape((1000,))) - 4.0) <= 2e-3 + 1e-9


def test_fejer_integral_2d_identity():
    spec = ma2d()
    f = SpectralDensity.from_spec(spec)
    for shape in (Shape((4, 6)), Shape((10, 10))):
        got = fejer_integral(f, shape)
        want = triangular_average(spec, shape)
        assert got == pytest.approx(want, rel=1e-6)


def test_fejer_integral_resolution_guard():
    f = SpectralDensity.constant(1, 1.0)
    with pytest.raises(ResolutionError):
        fejer_integral(f, Shape((100,)), quad_points_per_axis=100)


def test_density_nonnegative_and_integrates_to_r0():
    spec = ma2d()
    f = SpectralDensity.from_spec(spec)
    rng = np.random.default_rng(5)
    pts = rng.uniform(-math.pi, math.pi, size=(100, 2))
    assert np.all(f(pts) >= -1e-14)
    # integral f dm = r(0): quadrature with the trivial kernel (shape (1,1))
    assert fejer_integral(f, Shape((1, 1)), quad_points_per_axis=256) == pytest.approx(
        autocovariance(spec, (0, 0)), rel=1e-9
    )


def test_fejer_convergence_bound_and_monotonicity():
    # |integral - f(0)| <= 2 r_max m_dep sum(1/L_u), nonincreasing on doubling
    spec = ma1()
    f = SpectralDensity.from_spec(spec)
    cov = CovarianceFunction.from_spec(spec)
    target = sigma_squared(spec)
    errors = []
    for n in (8, 16, 32, 64, 128):
        err = abs(fejer_integral(f, Shape((n,))) - target)
        assert err <= 2 * cov.max_abs() * spec.m_dep * (1.0 / n) + 1e-12
        errors.append(err)
    assert all(b <= a + 1e-12 for a, b in zip(errors, errors[1:]))


def test_fejer_convergence_bound_2d():
    spec = ma2d()
    f = SpectralDensity.from_spec(spec)
    cov = CovarianceFunction.from_spec(spec)
    target = sigma_squared(spec)
    for shape in (Shape((4, 8)), Shape((16, 8)), Shape((32, 32))):
        err = abs(fejer_integral(f, shape) - target)
        bound = 2 * cov.max_abs() * spec.m_dep * sum(1.0 / v for v in shape.dims)
        assert err <= bound + 1e-12
