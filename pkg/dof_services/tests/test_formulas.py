import math

import numpy as np
import pytest

from ..src.exceptions import InvalidParameterError, UnreachableTargetError, UnsupportedRegionError
from ..src.services.formulas import (
    RegionLabel,
    alignment_i_bound,
    asymptotic_limit,
    corollary2_region,
    min_relays,
    no_alignment_bound,
    normalized_asymptotic_dof,
    region_bounds,
    region_closed_form,
    relay_curve,
    sweep_curves,
    sweep_normalized,
    symmetric_design_bound,
    symmetric_design_points,
    theorem1_dof,
    theorem1_point,
    upper_bound_dof,
)


def test_upper_bound():
    assert upper_bound_dof(14, 10, 2) == 20.0
    assert upper_bound_dof(2, 3, 1) == 3.0
    assert upper_bound_dof(0, 3, 2) == 0.0


def test_theorem1_reference_values():
    assert theorem1_dof(3, 1, 27) == pytest.approx(4.5)
    assert theorem1_dof(2, 3, 1) == pytest.approx(3.0)
    assert theorem1_dof(0, 5, 3) == 0.0
    # Alignment-I branch: M + KN^2/(3M) = 14 + 200/42
    assert theorem1_dof(14, 10, 2) == pytest.approx(14 + 200 / 42)


def test_theorem1_point():
    point = theorem1_point(14, 10, 2)
    assert point.ratio == pytest.approx(1.4)
    assert point.d_sum == pytest.approx(theorem1_dof(14, 10, 2))


@pytest.mark.parametrize("M, N, K", [(-1, 1, 1), (1, 0, 1), (1, 1, 0)])
def test_invalid_parameters(M, N, K):
    with pytest.raises(InvalidParameterError):
        theorem1_dof(M, N, K)


def test_single_relay_closed_form():
    for M in range(1, 31):
        for N in range(1, 31):
            assert abs(theorem1_dof(M, N, 1) - min(1.5 * M, N)) <= 1e-12


def test_monotone_in_relays():
    for K in range(1, 40):
        assert theorem1_dof(5, 2, K + 1) >= theorem1_dof(5, 2, K)


def test_region_bounds():
    b1, b2, b3 = region_bounds(2)
    assert b1 == pytest.approx(max(math.sqrt(6) / 3, 1.0))
    assert b2 == pytest.approx((18 + math.sqrt(324 + 120)) / 30)
    assert b3 == pytest.approx((6 + math.sqrt(36 - 24)) / 6)
    assert b1 < b2 < b3
    with pytest.raises(UnsupportedRegionError):
        region_bounds(1)


def test_regions_and_closed_forms():
    assert corollary2_region(3, 1, 27).label is RegionLabel.R2_MAX_BRANCH
    assert corollary2_region(14, 10, 2).label is RegionLabel.R3_ALIGNMENT_I
    assert corollary2_region(30, 10, 2).label is RegionLabel.R4_FULL_RELAY
    assert corollary2_region(5, 10, 2).label is RegionLabel.R1_FULL_USER
    assert RegionLabel.R3_ALIGNMENT_I.short == "R3"
    for M, N, K in [(3, 1, 27), (14, 10, 2), (30, 10, 2), (5, 10, 2), (9, 4, 5)]:
        region = corollary2_region(M, N, K)
        assert region_closed_form(M, N, K, region.label) == pytest.approx(theorem1_dof(M, N, K))


def test_region_rejects_single_relay():
    with pytest.raises(UnsupportedRegionError):
        corollary2_region(2, 3, 1)


@pytest.mark.parametrize("K", [2, 3, 5, 10])
def test_optimal_regions_meet_upper_bound(K):
    b1, _, b3 = region_bounds(K)
    grid = np.linspace(0.0, 10 * K, 500)
    for ratio in grid:
        achievable = theorem1_dof(ratio, 1.0, K)
        upper = upper_bound_dof(ratio, 1.0, K)
        if ratio < b1 or ratio >= b3:
            assert abs(achievable - upper) <= 1e-9
        elif b1 < ratio < b3:
            assert achievable < upper


@pytest.mark.parametrize("K", [2, 5])
def test_dominates_symmetric_design(K):
    for ratio in np.linspace(0.0, 3 * K, 500):
        assert theorem1_dof(ratio, 1.0, K) >= symmetric_design_bound(ratio, 1.0, K) - 1e-12
    ratio = 2 * K
    assert theorem1_dof(ratio, 1.0, K) == pytest.approx(K)
    assert symmetric_design_bound(ratio, 1.0, K) == pytest.approx(math.sqrt(6 * K) / 2)
    assert theorem1_dof(ratio, 1.0, K) > symmetric_design_bound(ratio, 1.0, K)


def test_symmetric_design_points():
    points = symmetric_design_points(3)
    assert points[0] == (2 / 3, 1.0)
    assert len(points) == 3
    assert points[1] == pytest.approx(((12 + math.sqrt(12)) / 12, math.sqrt(12) / 2))


@pytest.mark.parametrize("M, N, target, expected", [
    (1, 1, 1.5, 2),
    (2, 1, 3, 12),
    (5, 2, 7.5, 19),
    (3, 1, 4.5, 27),
    (3, 1, 3.5, 5),
])
def test_min_relays(M, N, target, expected):
    assert min_relays(M, N, target) == expected


def test_min_relays_unreachable():
    with pytest.raises(UnreachableTargetError):
        min_relays(1, 1, 2)
    assert min_relays(4, 1, 0) == 1


def test_normalized_and_limit():
    assert normalized_asymptotic_dof(14, 10, 2) == pytest.approx(theorem1_dof(14, 10, 2) / 20)
    assert asymptotic_limit(5, 1, 10) == pytest.approx(0.5)
    assert asymptotic_limit(50, 1, 10) == 1.0


def test_scheme_bounds():
    assert alignment_i_bound(14, 10, 2) == pytest.approx(14 / 3 + 200 / 126)
    assert alignment_i_bound(0, 10, 2) == 0.0
    assert no_alignment_bound(2, 3, 2) == 1.0
    assert no_alignment_bound(2, 2, 2) == 0.0


def test_sweep_curves():
    rows = sweep_curves(2, 6, np.linspace(0, 3, 301))
    assert len(rows) == 301
    achievable = [row.achievable for row in rows]
    assert all(b >= a - 1e-12 for a, b in zip(achievable, achievable[1:]))
    for row in rows:
        assert row.upper >= row.achievable - 1e-12
        if row.ratio < 1:
            assert row.achievable == pytest.approx(row.upper)
    assert len(sweep_curves(2, 6, [0.5, 1.5])) == 2


def test_sweep_curves_parallel_matches_serial():
    grid = np.linspace(0, 3, 31)
    assert sweep_curves(2, 6, grid, n_jobs=2) == sweep_curves(2, 6, grid)


def test_sweep_rejects_negative_ratio():
    with pytest.raises(InvalidParameterError):
        sweep_curves(2, 6, [-0.5, 1.0])


def test_sweep_normalized():
    rows = sweep_normalized([2, 5], [0.25, 0.5, 2.0])
    assert [(row.K, row.ratio) for row in rows][:3] == [(2, 0.25), (2, 0.5), (2, 2.0)]
    for row in rows:
        assert row.limit == pytest.approx(min(row.ratio, 1.0))
        assert 0.0 <= row.normalized <= 1.0


def test_relay_curve():
    rows = relay_curve(2, 1, 12)
    assert [row.K for row in rows] == list(range(1, 13))
    assert rows[-1].achievable == pytest.approx(3.0)
    assert rows[0].upper == 1.0


def test_achievable_never_exceeds_upper_bound():
    for M in range(0, 51):
        for N in range(1, 51):
            for K in range(1, 51):
                assert theorem1_dof(M, N, K) <= upper_bound_dof(M, N, K) + 1e-12
