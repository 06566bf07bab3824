import math

import numpy as np
import pytest

from cltlab.blocking import (
    BlockingError,
    DegenerateVarianceError,
    correlation_constant,
    decompose,
    negligibility_ratio,
    schedule,
    schedule_params,
    small_block_bound,
)
from cltlab.fields import (
    FieldSample,
    InnovationDist,
    LinearFieldSpec,
    MixingProfile,
    pop_moments,
    sample,
    truncate_tail,
    truncation_constant,
)
from cltlab.lattice import Rectangle, Shape, SiteSeed


def ma1():
    return LinearFieldSpec(coeffs={(0,): 1.0, (1,): 1.0}, innovations=InnovationDist("rademacher"))


def zero_alpha_profile(dim=1):
    return MixingProfile.m_dependent(0, dim)


# -------------------------------------------------------------------- schedule

def test_schedule_frozen_examples():
    prof = ma1().mixing_profile()  # alpha(10) = 0 for the m-dependent family
    assert schedule_params(10_000, prof) == (10, 2, 4990)
    assert schedule_params(16, prof) == (2, 1, 14)

    custom = MixingProfile(dim=1, alpha=lambda n: 0.25, rho_prime=lambda n: 0.5, j_star=1)
    assert schedule_params(2, custom) == (1, 1, 1)


def test_schedule_double_inequality_holds():
    prof = zero_alpha_profile()
    for n in (2, 3, 16, 100, 4097, 65_536, 999_983):
        q, m, p = schedule_params(n, prof)
        assert m * (p - 1 + q) < n <= m * (p + q)
        assert q == math.floor(n**0.25) or q**4 <= n < (q + 1) ** 4
        assert m <= min(q, int(n**0.1) + 1)
        assert m * p <= n


def test_schedule_rejects_tiny_n():
    with pytest.raises(BlockingError):
        schedule_params(1, zero_alpha_profile())


def test_schedule_alpha_term_participates():
    # alpha(q) > 0 brings the alpha^(-1/5) term into the min
    prof = MixingProfile(dim=1, alpha=lambda n: 0.25, rho_prime=lambda n: 0.5, j_star=1)
    n = 100_000
    q, m, p = schedule_params(n, prof)
    assert q == 17
    assert m == math.floor(0.25 ** (-0.2))  # = 1, the binding term
    assert m == 1


def test_partition_exhaustive_small_n():
    prof = zero_alpha_profile()
    for n in range(2, 2001):
        plan = schedule(n, prof)
        covered = []
        for big, small in zip(plan.big_ranges, plan.small_ranges):
            covered.extend(range(big[0], big[1] + 1))
            covered.extend(range(small[0], small[1] + 1))
        assert covered == list(range(1, n + 1))
        assert len(plan.big_ranges) == len(plan.small_ranges) == plan.m
        assert all(hi - lo + 1 == plan.p for lo, hi in plan.big_ranges)
        assert all(hi - lo + 1 == plan.q for lo, hi in plan.small_ranges[:-1])


def test_parameters_grow_along_powers_of_two():
    prof = zero_alpha_profile()
    qs, ms = [], []
    for k in range(1, 21):
        q, m, _ = schedule_params(2**k, prof)
        qs.append(q)
        ms.append(m)
    assert all(b >= a for a, b in zip(qs, qs[1:])) and qs[-1] > qs[0]
    assert all(b >= a for a, b in zip(ms, ms[1:])) and ms[-1] > ms[0]


# ------------------------------------------------------------------- decompose

def test_decompose_all_ones_counts_sites():
    prof = ma1().mixing_profile()
    plan = schedule(16, prof)
    assert (plan.q, plan.m, plan.p) == (2, 1, 14)
    cross = 3
    rect = Rectangle.unit_box(Shape((16, cross)))
    ones = FieldSample(rect=rect, values=np.ones((16, cross)))
    big, small = decompose(ones, plan)
    assert big.tolist() == [14 * cross]
    assert small.tolist() == [2 * cross]


def test_decompose_zero_field():
    plan = schedule(100, zero_alpha_profile())
    rect = Rectangle.unit_box(Shape((100,)))
    big, small = decompose(FieldSample(rect=rect, values=np.zeros(100)), plan)
    assert not big.any() and not small.any()


def test_decompose_identity_on_realizations():
    spec = ma1()
    prof = spec.mixing_profile()
    shape = Shape((257, 8))
    spec2d = LinearFieldSpec(
        coeffs={(0, 0): 1.0, (1, 1): 1.0}, innovations=InnovationDist("standard-normal")
    )
    plan = schedule(257, prof)
    box = Rectangle.unit_box(shape)
    for r in range(10):
        realization = sample(spec2d, box, SiteSeed(42, stream_tag=r))
        big, small = decompose(realization, plan)
        total = realization.values.sum()
        assert abs((big.sum() + small.sum()) - total) <= 1e-10 * max(abs(total), 1.0)
        # identity holds on the truncated field as well
        truncated, _ = truncate_tail(realization, truncation_constant(shape))
        big_t, small_t = decompose(truncated, plan)
        total_t = truncated.values.sum()
        assert abs((big_t.sum() + small_t.sum()) - total_t) <= 1e-10 * max(abs(total_t), 1.0)


def test_decompose_rejects_mismatched_n():
    plan = schedule(64, zero_alpha_profile())
    rect = Rectangle.unit_box(Shape((65,)))
    with pytest.raises(ValueError):
        decompose(FieldSample(rect=rect, values=np.zeros(65)), plan)


def test_decompose_vector_components():
    plan = schedule(32, zero_alpha_profile())
    rect = Rectangle.unit_box(Shape((32,)))
    values = np.stack([np.ones(32), np.arange(32, dtype=float)], axis=-1)
    big, small = decompose(FieldSample(rect=rect, values=values), plan)
    assert big.shape == (plan.m, 2) and small.shape == (plan.m, 2)
    np.testing.assert_allclose(big.sum(axis=0) + small.sum(axis=0), values.sum(axis=0))


# ----------------------------------------------------------- small-block bound

def test_correlation_constant_examples():
    assert correlation_constant(ma1().mixing_profile()) == 2.0  # j* = 2, rho' = 0
    assert correlation_constant(MixingProfile.m_dependent(0, 2)) == 1.0  # 2-D iid
    prof = MixingProfile(dim=2, alpha=lambda n: 0.0, rho_prime=lambda n: 0.5, j_star=3)
    assert correlation_constant(prof) == pytest.approx((3 * 1.5 / 0.5) ** 2)


def test_correlation_constant_requires_rho_below_one():
    prof = MixingProfile(dim=1, alpha=lambda n: 0.0, rho_prime=lambda n: 1.0, j_star=1)
    with pytest.raises(ValueError):
        correlation_constant(prof)


def test_small_block_bound_frozen():
    spec = ma1()
    plan = schedule(10_000, spec.mixing_profile())
    var0 = pop_moments(spec).variance
    assert var0 == 2.0
    assert small_block_bound(plan, spec.mixing_profile(), var0, cross_volume=1) == 80.0


# ---------------------------------------------------------- negligibility ratio

def test_negligibility_iid_matches_site_count():
    # iid: E |sum V|^2 = (# small-block sites) * var0, so the ratio is
    # (n - m p)/n exactly in expectation
    spec = LinearFieldSpec(coeffs={(0,): 1.0}, innovations=InnovationDist("standard-normal"))
    n = 4096
    plan = schedule(n, spec.mixing_profile())
    expected = (n - plan.m * plan.p) / n
    reps = 1500
    ratio = negligibility_ratio(spec, Shape((n,)), plan, reps=reps, seed=5)
    assert abs(ratio - expected) <= 4 * math.sqrt(2.0 / reps) * expected
    # and it is of the advertised m q / n scale
    assert expected <= plan.m * plan.q / n


def test_negligibility_ma1_below_bound():
    spec = ma1()
    n = 10_000
    plan = schedule(n, spec.mixing_profile())
    var0 = pop_moments(spec).variance
    bound = small_block_bound(plan, spec.mixing_profile(), var0, 1)
    reps = 500
    ratio = negligibility_ratio(spec, Shape((n,)), plan, reps=reps, seed=12)
    assert ratio <= bound / (n * 4.0) * (1 + 4 / math.sqrt(reps))
    assert bound / (n * 4.0) == pytest.approx(2e-3)


def test_negligibility_decreases_with_n():
    spec = ma1()
    ratios = []
    for n in (1000, 10_000, 100_000):
        plan = schedule(n, spec.mixing_profile())
        ratios.append(negligibility_ratio(spec, Shape((n,)), plan, reps=400, seed=3))
    assert ratios[0] > ratios[1] > ratios[2]


def test_negligibility_rejects_degenerate_variance():
    spec = LinearFieldSpec(
        coeffs={(0,): 1.0, (1,): -1.0}, innovations=InnovationDist("rademacher")
    )
    plan = schedule(100, spec.mixing_profile())
    with pytest.raises(DegenerateVarianceError):
        negligibility_ratio(spec, Shape((100,)), plan, reps=10, seed=0)
