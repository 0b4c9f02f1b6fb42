"""
Closed-form degrees-of-freedom calculators for the symmetric multi-relay
MIMO Y channel.

M may be real in every function here (ratio sweeps hold N fixed and vary
M continuously); strategy selection only ever passes integers.
"""
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, NamedTuple, Sequence, Tuple

from joblib import Parallel, delayed

from ..exceptions import InvalidParameterError, UnreachableTargetError, UnsupportedRegionError

MIN_RELAYS_CAP = 10 ** 6


class RegionLabel(str, Enum):
    R1_FULL_USER = "R1_full_user"
    R2_MAX_BRANCH = "R2_max_branch"
    R3_ALIGNMENT_I = "R3_alignment_I"
    R4_FULL_RELAY = "R4_full_relay"

    @property
    def short(self) -> str:
        return self.value.split("_", 1)[0]


@dataclass(frozen=True)
class Region:
    label: RegionLabel
    lower: float
    upper: float


@dataclass(frozen=True)
class DofPoint:
    ratio: float
    d_sum: float

    def __post_init__(self):
        if self.d_sum < 0:
            raise InvalidParameterError(f"d_sum must be nonnegative, got {self.d_sum}")


class SweepRow(NamedTuple):
    ratio: float
    achievable: float
    symmetric: float
    upper: float


class NormalizedRow(NamedTuple):
    ratio: float
    K: int
    normalized: float
    limit: float


class RelayRow(NamedTuple):
    K: int
    achievable: float
    upper: float


def _check_positive(**values) -> None:
    for name, value in values.items():
        if value is None or value <= 0:
            raise InvalidParameterError(f"{name} must be positive, got {value!r}")


def _check_nonnegative(**values) -> None:
    for name, value in values.items():
        if value is None or value < 0:
            raise InvalidParameterError(f"{name} must be nonnegative, got {value!r}")


def _below_surd(M: float, N: float, p: float, q: float, r: float) -> bool:
    """M/N < (p + sqrt(q)) / r, decided on squared forms (exact for integers)."""
    lhs = r * M - p * N
    if lhs < 0:
        return True
    return lhs * lhs < N * N * q


def below_full_relay_boundary(M: float, N: float, K: int) -> bool:
    """M/N < (3K + sqrt(9K^2 - 12K)) / 6, the ratio above which the relays limit the DoF."""
    return _below_surd(M, N, 3 * K, 9 * K * K - 12 * K, 6)


def upper_bound_dof(M: float, N: float, K: int) -> float:
    _check_nonnegative(M=M)
    _check_positive(N=N, K=K)
    return float(min(3 * M / 2, K * N))


def theorem1_dof(M: float, N: float, K: int) -> float:
    """Supremum of the achievable total DoF (any d_sum strictly below it is achievable)."""
    _check_nonnegative(M=M)
    _check_positive(N=N, K=K)
    if M == 0:
        return 0.0
    return float(min(
        3 * M / 2,
        max(M + 5 * M * N / (9 * M + N), math.sqrt(3 * K) * N / 2),
        M + K * N * N / (3 * M),
        K * N,
    ))


def theorem1_point(M: float, N: float, K: int) -> DofPoint:
    return DofPoint(ratio=M / N, d_sum=theorem1_dof(M, N, K))


def region_bounds(K: int) -> Tuple[float, float, float]:
    if K < 2:
        raise UnsupportedRegionError(f"region boundaries need K >= 2, got K={K}")
    b1 = max(math.sqrt(3 * K) / 3, 1.0)
    b2 = (9 * K + math.sqrt(81 * K * K + 60 * K)) / 30
    b3 = (3 * K + math.sqrt(9 * K * K - 12 * K)) / 6
    return b1, b2, b3


def corollary2_region(M: float, N: float, K: int) -> Region:
    _check_nonnegative(M=M)
    _check_positive(N=N)
    if K == 1:
        raise UnsupportedRegionError("K=1 is covered by min{3M/2, N}; regions need K >= 2")
    _check_positive(K=K)
    b1, b2, b3 = region_bounds(K)
    if _below_surd(M, N, 0, 3 * K, 3) or M < N:
        return Region(RegionLabel.R1_FULL_USER, 0.0, b1)
    if _below_surd(M, N, 9 * K, 81 * K * K + 60 * K, 30):
        return Region(RegionLabel.R2_MAX_BRANCH, b1, b2)
    if below_full_relay_boundary(M, N, K):
        return Region(RegionLabel.R3_ALIGNMENT_I, b2, b3)
    return Region(RegionLabel.R4_FULL_RELAY, b3, math.inf)


def region_closed_form(M: float, N: float, K: int, label: RegionLabel) -> float:
    if label is RegionLabel.R1_FULL_USER:
        return 3 * M / 2
    if label is RegionLabel.R2_MAX_BRANCH:
        return max(M + 5 * M * N / (9 * M + N), math.sqrt(3 * K) * N / 2)
    if label is RegionLabel.R3_ALIGNMENT_I:
        return M + K * N * N / (3 * M)
    return float(K * N)


def symmetric_design_points(K: int) -> List[Tuple[float, float]]:
    """Corner points (a, b) of the uplink-downlink symmetric design, normalized by N."""
    _check_positive(K=K)
    points = [(2 / 3, 1.0)]
    for k in range(2, K + 1):
        root = math.sqrt(6 * k)
        points.append(((6 * k + root) / 12, root / 2))
    return points


def _g(a: float, b: float, x: float) -> float:
    return b * x / a if x < a else b


def symmetric_design_bound(M: float, N: float, K: int) -> float:
    _check_nonnegative(M=M)
    _check_positive(N=N, K=K)
    x = M / N
    return N * max(_g(a, b, x) for a, b in symmetric_design_points(K))


def normalized_asymptotic_dof(M: float, N: float, K: int) -> float:
    return theorem1_dof(M, N, K) / (K * N)


def asymptotic_limit(M: float, N: float, K: int) -> float:
    _check_positive(N=N, K=K)
    return min(M / (K * N), 1.0)


def alignment_i_bound(M: float, N: float, K: int) -> float:
    """Per-pair streams supported by full-dimension alignment (strict upper limit)."""
    if M <= 0:
        return 0.0
    return M / 3 + K * N * N / (9 * M)


def alignment_ii_bound(M: float, N: float, K: int) -> float:
    """Per-pair streams supported by alignment with receive-antenna deactivation."""
    if M <= 0:
        return 0.0
    return (3 * M * M + 2 * M * N) / (9 * M + N)


def no_alignment_bound(M: float, N: float, K: int) -> float:
    return M / 2 if K * N * N > 3 * M * M else 0.0


def min_relays(M: float, N: float, target_d_sum: float, cap: int = MIN_RELAYS_CAP) -> int:
    _check_positive(M=M, N=N)
    if target_d_sum > 3 * M / 2:
        raise UnreachableTargetError(
            f"target d_sum={target_d_sum} exceeds the user-side limit 3M/2={3 * M / 2}"
        )
    if target_d_sum <= 0:
        return 1
    slack = 1e-12 * max(1.0, target_d_sum)
    # theorem1_dof is nondecreasing in K, so the first hit is the minimum
    for K in range(1, cap + 1):
        if theorem1_dof(M, N, K) >= target_d_sum - slack:
            return K
    raise UnreachableTargetError(f"target d_sum={target_d_sum} not reached with K <= {cap}")


def _sweep_row(K: int, N: float, ratio: float) -> SweepRow:
    M = ratio * N
    return SweepRow(
        ratio=float(ratio),
        achievable=theorem1_dof(M, N, K),
        symmetric=symmetric_design_bound(M, N, K),
        upper=upper_bound_dof(M, N, K),
    )


def sweep_curves(K: int, N: float, ratio_grid: Sequence[float], n_jobs: int = 1) -> List[SweepRow]:
    _check_positive(K=K, N=N)
    grid = list(ratio_grid)
    if any(r < 0 for r in grid):
        raise InvalidParameterError("ratio grid values must be nonnegative")
    if n_jobs > 1 and len(grid) > 1:
        return Parallel(n_jobs=n_jobs, prefer="threads")(
            delayed(_sweep_row)(K, N, r) for r in grid
        )
    return [_sweep_row(K, N, r) for r in grid]


def sweep_normalized(K_list: Iterable[int], ratio_grid: Sequence[float]) -> List[NormalizedRow]:
    """Normalized DoF d_sum/(KN) against M/(KN) for each relay count."""
    rows = []
    for K in K_list:
        _check_positive(K=K)
        for ratio in ratio_grid:
            _check_nonnegative(ratio=ratio)
            M = ratio * K
            rows.append(NormalizedRow(
                ratio=float(ratio),
                K=int(K),
                normalized=normalized_asymptotic_dof(M, 1.0, K),
                limit=asymptotic_limit(M, 1.0, K),
            ))
    return rows


def relay_curve(M: float, N: float, K_max: int) -> List[RelayRow]:
    _check_positive(M=M, N=N, K_max=K_max)
    return [
        RelayRow(K=K, achievable=theorem1_dof(M, N, K), upper=upper_bound_dof(M, N, K))
        for K in range(1, K_max + 1)
    ]
