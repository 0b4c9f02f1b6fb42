"""
Linear transceiver construction for the symmetric multi-relay MIMO Y channel.

Three schemes are supported:

* Signal alignment with all relay receive antennas (``AlignmentI``).
* Signal alignment after each relay deactivates part of its receive
  antennas (``AlignmentII``).
* No alignment: fixed selection precoders at the users, with all
  interference neutralized by the relays (``NoAlignment``).

In every scheme the relay precoders come from the null space of a
Kronecker-structured linear system. Free coefficients in that null space
are drawn at random and the result is certified by numerical rank checks.
A failed certificate triggers a new draw, up to ``retry_budget`` times.
Among ``candidate_draws`` certified draws the best-conditioned one is kept.
"""
import math
import time
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple, TypeVar

import numpy as np
from scipy import linalg

from ..exceptions import (
    DegenerateInstanceError,
    InfeasibleAlignmentError,
    InfeasibleDimensionError,
    InternalContractError,
    InvalidParameterError,
    RelayDofError,
)
from ..utils.logger import log_performance, setup_logger
from .channel import (
    USERS,
    ChannelRealization,
    ExtensionPlan,
    SystemConfig,
    complex_gaussian,
    deactivate_rx_antennas,
    extend_channel,
    restrict_channel,
    sample_channel,
)
from .formulas import (
    RegionLabel,
    alignment_i_bound,
    alignment_ii_bound,
    below_full_relay_boundary,
    corollary2_region,
)
from .numerics import (
    DEFAULT_TOLERANCE,
    RankTolerance,
    kronecker,
    left_null_space_basis,
    null_space_basis,
    numerical_rank,
    orthonormal_rows,
    unvectorize,
)

PairKey = Tuple[int, int]
T = TypeVar("T")

# Aligned pairs (j, j+1); each one fixes U[j, j+1] and U[j+1, j] together.
PAIRS: Tuple[PairKey, ...] = ((0, 1), (1, 2), (2, 0))
PRECODER_KEYS: Tuple[PairKey, ...] = ((0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1))


class StrategyKind(str, Enum):
    ALIGNMENT_I = "AlignmentI"
    ALIGNMENT_II = "AlignmentII"
    NO_ALIGNMENT = "NoAlignment"


class RelayMode(str, Enum):
    I = "I"
    II = "II"


def precoder_split_for(M: int, d: int) -> int:
    """Columns of each user precoder whose interference the relays neutralize."""
    return max(0, 3 * d - M)


@dataclass(frozen=True)
class Strategy:
    kind: StrategyKind
    d: int
    d_prime: int
    N_prime: Optional[int] = None
    disablement: Optional[Tuple[int, int]] = None
    extension: Optional[ExtensionPlan] = None

    @property
    def uses(self) -> int:
        return self.extension.L if self.extension else 1

    @property
    def dof_per_use(self) -> Fraction:
        return Fraction(self.d, self.uses)

    @property
    def d_sum(self) -> float:
        return float(USERS * self.dof_per_use)

    def validate(self, config: SystemConfig) -> None:
        """Check the strategy invariants against the effective configuration."""
        M, N, K, d = config.M, config.N, config.K, self.d
        if d < 0 or d > M:
            raise InvalidParameterError(f"d={d} outside [0, M={M}]")
        if d == 0:
            return
        if self.kind is StrategyKind.NO_ALIGNMENT:
            if M % 2 or 2 * d != M:
                raise InfeasibleDimensionError(f"no-alignment needs d = M/2 with M even, got M={M}, d={d}")
            if K * N * N <= 3 * M * M:
                raise InfeasibleDimensionError(f"no-alignment needs K*N^2 > 3*M^2, got {K * N * N} <= {3 * M * M}")
            return

        if self.d_prime != precoder_split_for(M, d) or not 0 <= self.d_prime <= d:
            raise InternalContractError(
                f"precoder split d'={self.d_prime} inconsistent with d={d}, M={M}"
            )
        if 3 * d >= M and 2 * d + (d - self.d_prime) != M:
            raise InternalContractError("receive dimensions 2d + (d - d') must equal M")
        if self.kind is StrategyKind.ALIGNMENT_I:
            if self.extension is None and 2 * M - K * N < d:
                raise InfeasibleAlignmentError(f"alignment needs 2M - KN >= d, got {2 * M - K * N} < {d}")
            return
        if self.N_prime is None or K * self.N_prime != 2 * M - d or not 0 < self.N_prime <= N:
            raise InfeasibleAlignmentError(
                f"N'={self.N_prime} must be the integer (2M - d)/K = {(2 * M - d) / K} within (0, N={N}]"
            )


@dataclass(frozen=True, eq=False)
class UplinkAlignment:
    precoders: Dict[PairKey, np.ndarray]
    retries: int
    null_dimensions: Tuple[int, ...]


@dataclass(frozen=True, eq=False)
class RelaySolution:
    precoders: List[np.ndarray]
    retries: int
    system_shape: Tuple[int, int]
    null_dimension: int


@dataclass(frozen=True, eq=False)
class TransceiverDesign:
    """
    Processors for one channel realization.

    `channel` is the effective channel the design was built on, after
    antenna disablement and symbol extension but before receive-antenna
    deactivation. Verification runs against it.
    """
    strategy: Strategy
    channel: ChannelRealization
    user_precoders: Dict[PairKey, np.ndarray]
    relay_precoders: List[np.ndarray]
    postprocessors: List[np.ndarray]
    precoder_split: int
    retries_used: int = 0

    @property
    def d(self) -> int:
        return self.strategy.d


def effective_signal(ch: ChannelRealization, precoders: Dict[PairKey, np.ndarray], k: int, j: int) -> np.ndarray:
    """W[k, j] = [H[k, j+1] U[j+1, j], H[k, j-1] U[j-1, j]] on the active uplink antennas."""
    up, down = (j + 1) % USERS, (j - 1) % USERS
    return np.hstack([ch.H(k, up) @ precoders[(up, j)], ch.H(k, down) @ precoders[(down, j)]])


def relay_output(F_k: np.ndarray, H_block: np.ndarray) -> np.ndarray:
    """F_k applied to a (possibly deactivated) uplink block; dropped columns of F_k are zero."""
    return F_k[:, :H_block.shape[0]] @ H_block


def _alignment_i_feasible(M: int, N: int, K: int, d: int) -> bool:
    if d <= 0 or 2 * d > M:
        return False
    if 2 * M - K * N < d or K * N < 3 * d:
        return False
    d_prime = precoder_split_for(M, d)
    return d_prime == 0 or K * N * N > 3 * d_prime * M


def _alignment_ii_n_prime(M: int, N: int, K: int, d: int) -> Optional[int]:
    if d <= 0 or 2 * d > M:
        return None
    numerator = 2 * M - d
    if numerator <= 0 or numerator % K:
        return None
    n_prime = numerator // K
    if n_prime > N or K * n_prime < 3 * d:
        return None
    d_prime = precoder_split_for(M, d)
    if d_prime > 0 and K * N * n_prime <= 3 * d_prime * M:
        return None
    return n_prime


def _no_alignment_feasible(M: int, N: int, K: int) -> bool:
    return M >= 2 and M % 2 == 0 and K * N * N > 3 * M * M and 2 * M <= K * N


def _strictly_below(bound: float) -> int:
    """Largest integer strictly below `bound`."""
    return max(0, math.ceil(bound - 1e-9) - 1)


def _largest_feasible(bound: float, feasible: Callable[[int], bool]) -> int:
    d = _strictly_below(bound)
    while d > 0 and not feasible(d):
        d -= 1
    return d


class TransceiverDesigner:
    """Strategy selection plus the alignment, relay and post-processor pipeline."""

    def __init__(
        self,
        tolerance: RankTolerance = DEFAULT_TOLERANCE,
        retry_budget: int = 20,
        extension_max: int = 12,
        max_system_columns: int = 4000,
        extension_trials: int = 8,
        trial_seed: int = 24301,
        candidate_draws: int = 16,
    ):
        if retry_budget < 1:
            raise InvalidParameterError(f"retry_budget must be positive, got {retry_budget}")
        if candidate_draws < 1:
            raise InvalidParameterError(f"candidate_draws must be positive, got {candidate_draws}")
        self.tolerance = tolerance
        self.retry_budget = retry_budget
        self.extension_max = extension_max
        self.max_system_columns = max_system_columns
        self.extension_trials = extension_trials
        self.trial_seed = trial_seed
        self.candidate_draws = candidate_draws
        self.logger = setup_logger("relay_dof.designer")

    def _draw_coefficients(self, rng: np.random.Generator, shape) -> np.ndarray:
        return complex_gaussian(rng, shape)

    def _rank(self, A: np.ndarray) -> int:
        return numerical_rank(A, self.tolerance)

    def _conditioning(self, matrices: Sequence[np.ndarray], expected: int) -> Optional[float]:
        """Smallest of the `expected`-th singular values, or None when any rank differs from `expected`."""
        worst = math.inf
        for A in matrices:
            if self._rank(A) != expected:
                return None
            if expected:
                worst = min(worst, float(linalg.svdvals(A)[expected - 1]))
        return worst

    def _best_of_draws(self, draw: Callable[[], Optional[Tuple[float, T]]], what: str) -> Tuple[T, int]:
        """
        Call `draw` until `candidate_draws` draws are accepted and keep the
        highest-scored one. `draw` returns None for a rejected draw; rejected
        draws are the retries, capped by `retry_budget`.
        """
        best: Optional[Tuple[float, T]] = None
        accepted = failures = 0
        while accepted < self.candidate_draws and failures < self.retry_budget:
            outcome = draw()
            if outcome is None:
                failures += 1
                self.logger.debug("Draw rejected, redrawing", extra={'what': what, 'failures': failures})
                continue
            accepted += 1
            if best is None or outcome[0] > best[0]:
                best = outcome
        if best is None:
            raise DegenerateInstanceError(
                f"{what}: no acceptable draw in {self.retry_budget} attempts",
                attempts=self.retry_budget,
            )
        return best[1], failures

    # ------------------------------------------------------------------
    # Strategy selection
    # ------------------------------------------------------------------
    def select_strategy(self, M: int, N: int, K: int, allow_extension: bool = False) -> Strategy:
        SystemConfig(M=M, N=N, K=K)
        strategy = self._native_strategy(M, N, K)
        if allow_extension:
            extended = self.plan_extension(M, N, K, baseline=strategy.dof_per_use)
            if extended is not None:
                strategy = extended
        if strategy.d == 0:
            self.logger.warning(
                "No strategy supports a positive stream count",
                extra={'M': M, 'N': N, 'K': K},
            )
        else:
            self.logger.info(
                "Strategy selected",
                extra={'M': M, 'N': N, 'K': K, 'kind': strategy.kind.value, 'd': strategy.d,
                       'uses': strategy.uses},
            )
        return strategy

    def _native_strategy(self, M: int, N: int, K: int) -> Strategy:
        if K == 1:
            candidates = [self._alignment_i_strategy(M, N, K, M)]
        else:
            label = corollary2_region(M, N, K).label
            if label is RegionLabel.R1_FULL_USER:
                if K * N * N > 3 * M * M:
                    candidates = [self._no_alignment_strategy(M, N, K)]
                else:
                    candidates = [self._alignment_ii_strategy(M, N, K, relay_antennas=min(M, N))]
            elif label is RegionLabel.R2_MAX_BRANCH:
                candidates = [
                    self._alignment_ii_strategy(M, N, K, relay_antennas=N),
                    self._no_alignment_strategy(M, N, K),
                ]
            elif label is RegionLabel.R3_ALIGNMENT_I:
                candidates = [self._alignment_i_strategy(M, N, K, M)]
            else:
                boundary = M
                while boundary > 1 and not below_full_relay_boundary(boundary, N, K):
                    boundary -= 1
                candidates = [self._alignment_i_strategy(M, N, K, boundary)]

        best = self._best(candidates)
        if best is None:
            best = self._best(self._all_candidates(M, N, K))
        if best is None:
            return Strategy(kind=StrategyKind.ALIGNMENT_I, d=0, d_prime=0)
        return best

    @staticmethod
    def _best(candidates: Sequence[Optional[Strategy]]) -> Optional[Strategy]:
        best = None
        for candidate in candidates:
            if candidate is not None and candidate.d > 0 and (best is None or candidate.d > best.d):
                best = candidate
        return best

    def _all_candidates(self, M: int, N: int, K: int) -> List[Optional[Strategy]]:
        candidates = [self._alignment_i_strategy(M, N, K, M)]
        candidates.extend(
            self._alignment_ii_strategy(M, N, K, relay_antennas=n) for n in range(N, 0, -1)
        )
        candidates.append(self._no_alignment_strategy(M, N, K))
        return candidates

    @staticmethod
    def _disablement(M: int, N: int, M_star: int, N_star: int) -> Optional[Tuple[int, int]]:
        if (M_star, N_star) == (M, N):
            return None
        return (M_star, N_star)

    def _alignment_i_strategy(self, M: int, N: int, K: int, user_antennas: int) -> Optional[Strategy]:
        best = None
        for m in range(user_antennas, 0, -1):
            d = _largest_feasible(alignment_i_bound(m, N, K), lambda s: _alignment_i_feasible(m, N, K, s))
            if d > 0 and (best is None or d > best.d):
                best = Strategy(
                    kind=StrategyKind.ALIGNMENT_I,
                    d=d,
                    d_prime=precoder_split_for(m, d),
                    disablement=self._disablement(M, N, m, N),
                )
        return best

    def _alignment_ii_strategy(self, M: int, N: int, K: int, relay_antennas: int) -> Optional[Strategy]:
        n = relay_antennas
        d = _largest_feasible(
            alignment_ii_bound(M, n, K), lambda s: _alignment_ii_n_prime(M, n, K, s) is not None
        )
        if d == 0:
            return None
        return Strategy(
            kind=StrategyKind.ALIGNMENT_II,
            d=d,
            d_prime=precoder_split_for(M, d),
            N_prime=_alignment_ii_n_prime(M, n, K, d),
            disablement=self._disablement(M, N, M, n),
        )

    def _no_alignment_strategy(self, M: int, N: int, K: int) -> Optional[Strategy]:
        m = M - M % 2
        while m >= 2 and not _no_alignment_feasible(m, N, K):
            m -= 2
        if m < 2:
            return None
        return Strategy(
            kind=StrategyKind.NO_ALIGNMENT,
            d=m // 2,
            d_prime=m // 2,
            disablement=self._disablement(M, N, m, N),
        )

    def plan_extension(self, M: int, N: int, K: int, baseline: Fraction = Fraction(0)) -> Optional[Strategy]:
        """
        Search symbol-extension plans whose per-use stream count beats `baseline`.

        Candidates are ranked by per-use DoF, then by the smaller extension
        factor. Each one is tried by building a design on a seeded trial
        channel and verifying it; the first design that verifies wins.
        """
        from .verifier import DesignVerifier

        candidates = []
        for L in range(2, self.extension_max + 1):
            if K * (L * N) ** 2 > self.max_system_columns:
                break
            for extended_M in range(L * M, 0, -1):
                M_star = Fraction(extended_M, L)
                n = _strictly_below(L * alignment_i_bound(float(M_star), N, K))
                while n > 0 and (2 * n > extended_M or K * L * N < 3 * n):
                    n -= 1
                if n > 0 and Fraction(n, L) > baseline:
                    candidates.append((Fraction(n, L), L, extended_M, n))
        candidates.sort(key=lambda c: (-c[0], c[1], -c[2]))

        trial = sample_channel(SystemConfig(M=M, N=N, K=K), self.trial_seed)
        verifier = DesignVerifier(self.tolerance)
        for _, L, extended_M, n in candidates[:self.extension_trials]:
            plan = ExtensionPlan(L=L, M_star=Fraction(extended_M, L))
            strategy = Strategy(
                kind=StrategyKind.ALIGNMENT_I,
                d=n,
                d_prime=precoder_split_for(extended_M, n),
                extension=plan,
            )
            try:
                design = self.design(trial, strategy, seed=self.trial_seed)
            except RelayDofError as error:
                self.logger.debug(
                    "Extension candidate rejected",
                    extra={'L': L, 'M_star': str(plan.M_star), 'd': n, 'reason': str(error)},
                )
                continue
            report = verifier.verify(design.channel, design)
            if not report.passed:
                self.logger.debug(
                    "Extension candidate failed verification",
                    extra={'L': L, 'M_star': str(plan.M_star), 'd': n,
                           'max_residual': report.max_residual},
                )
                continue
            return strategy
        return None

    # ------------------------------------------------------------------
    # Uplink alignment
    # ------------------------------------------------------------------
    def align_uplink_I(self, ch: ChannelRealization, d: int, rng: np.random.Generator) -> UplinkAlignment:
        M, K = ch.config.M, ch.config.K
        if not 0 <= d <= M:
            raise InvalidParameterError(f"d={d} outside [0, M={M}]")

        precoders: Dict[PairKey, np.ndarray] = {}
        retries = 0
        null_dimensions = []
        for j, partner in PAIRS:
            stacked = np.vstack([np.hstack([ch.H(k, j), -ch.H(k, partner)]) for k in range(K)])
            basis = null_space_basis(stacked, self.tolerance)
            null_dimensions.append(basis.shape[1])
            if basis.shape[1] < d:
                raise InfeasibleAlignmentError(
                    f"pair ({j},{partner}): alignment space has dimension {basis.shape[1]} < d={d} "
                    f"(2M - KN = {2 * M - K * ch.rx_antennas})"
                )

            def draw(basis=basis) -> Optional[Tuple[float, Tuple[np.ndarray, np.ndarray]]]:
                coefficients = self._draw_coefficients(rng, (basis.shape[1], d))
                if self._rank(coefficients) != d:
                    return None
                # Orthonormal coefficients give orthonormal columns in the stacked space
                stack = basis @ linalg.qr(coefficients, mode="economic")[0]
                top, bottom = stack[:M], stack[M:]
                scale = np.maximum(np.linalg.norm(top, axis=0), np.linalg.norm(bottom, axis=0))
                if not np.all(scale > 0):
                    return None
                top, bottom = top / scale, bottom / scale
                score = self._conditioning([top, bottom], d)
                return None if score is None else (score, (top, bottom))

            (top, bottom), failures = self._best_of_draws(draw, f"pair ({j},{partner}) precoders")
            retries += failures
            precoders[(j, partner)] = top
            precoders[(partner, j)] = bottom
        return UplinkAlignment(precoders=precoders, retries=retries, null_dimensions=tuple(null_dimensions))

    def align_uplink_II(
        self, ch: ChannelRealization, d: int, rng: np.random.Generator
    ) -> Tuple[int, ChannelRealization, UplinkAlignment]:
        M, K = ch.config.M, ch.config.K
        numerator = 2 * M - d
        if numerator <= 0 or numerator % K or numerator // K > ch.rx_antennas:
            raise InfeasibleAlignmentError(
                f"N' = (2M - d)/K = {numerator}/{K} is not an integer in (0, {ch.rx_antennas}]"
            )
        n_prime = numerator // K
        reduced = deactivate_rx_antennas(ch, n_prime)
        return n_prime, reduced, self.align_uplink_I(reduced, d, rng)

    @staticmethod
    def split_precoders(U: np.ndarray, d_prime: int) -> Tuple[np.ndarray, np.ndarray]:
        if not 0 <= d_prime <= U.shape[1]:
            raise InvalidParameterError(f"d'={d_prime} outside [0, {U.shape[1]}]")
        return U[:, :d_prime], U[:, d_prime:]

    # ------------------------------------------------------------------
    # Relay precoders
    # ------------------------------------------------------------------
    def _solve_kronecker_system(
        self,
        ch: ChannelRealization,
        system: np.ndarray,
        certificate: Callable[[List[np.ndarray]], Optional[float]],
        rng: np.random.Generator,
    ) -> RelaySolution:
        """
        Draw relay precoders from the null space of `system` and keep the
        best-conditioned draw that passes `certificate`.

        The unknown is [vec(F_0); ...; vec(F_{K-1})] with each F_k of size
        N x rx_antennas. `certificate` returns None on a rank failure and a
        conditioning score otherwise; scores are compared per unit of the
        largest ||F_k||, the scale the precoders are normalized to.
        """
        N, K, rx = ch.config.N, ch.config.K, ch.rx_antennas
        rows, cols = system.shape
        if cols - rows <= 0:
            raise InfeasibleDimensionError(f"relay system {rows}x{cols} is not wide")
        basis = null_space_basis(system, self.tolerance)
        if basis.shape[1] == 0:
            raise InfeasibleDimensionError(f"relay system {rows}x{cols} has a trivial null space")

        segment = N * rx

        def draw() -> Optional[Tuple[float, List[np.ndarray]]]:
            solution = basis @ self._draw_coefficients(rng, (basis.shape[1], 1))
            reduced = [unvectorize(solution[k * segment:(k + 1) * segment], N, rx) for k in range(K)]
            gain = max(np.linalg.norm(F) for F in reduced)
            score = certificate(reduced) if gain > 0 else None
            return None if score is None else (score / gain, reduced)

        reduced, retries = self._best_of_draws(draw, "relay rank certificate")

        padding = np.zeros((N, N - rx), dtype=np.complex128)
        precoders = [np.hstack([F, padding]) for F in reduced]
        scale = max(np.linalg.norm(F) for F in precoders)
        return RelaySolution(
            precoders=[F / scale for F in precoders],
            retries=retries,
            system_shape=(rows, cols),
            null_dimension=basis.shape[1],
        )

    def solve_relay_precoders(
        self,
        ch: ChannelRealization,
        user_precoders: Dict[PairKey, np.ndarray],
        d_prime: int,
        mode: RelayMode,
        rng: np.random.Generator,
    ) -> RelaySolution:
        """
        Relay precoders that neutralize the first d' streams of every
        interfering pair and pass the rank certificate.

        In mode II `ch` is the deactivated channel: its uplink blocks have
        N' rows and the returned F_k equal [F~_k, 0].
        """
        M, N, K, rx = ch.config.M, ch.config.N, ch.config.K, ch.rx_antennas
        if mode is RelayMode.I and rx != N:
            raise InvalidParameterError("mode I expects every relay receive antenna active")
        d = user_precoders[(0, 1)].shape[1]
        left = {key: self.split_precoders(U, d_prime)[0] for key, U in user_precoders.items()}
        right = {key: self.split_precoders(U, d_prime)[1] for key, U in user_precoders.items()}

        blocks = []
        for j in range(USERS):
            nxt, far = (j + 1) % USERS, (j + 2) % USERS
            blocks.append(np.hstack([
                kronecker((ch.H(k, nxt) @ left[(nxt, far)]).T, ch.G(j, k)) for k in range(K)
            ]))
        system = np.vstack(blocks) if d_prime > 0 else np.zeros((0, K * N * rx), dtype=np.complex128)

        # Desired signals plus the interference left for the users to null
        targets = [
            [
                np.hstack([
                    effective_signal(ch, user_precoders, k, j),
                    ch.H(k, (j + 1) % USERS) @ right[((j + 1) % USERS, (j + 2) % USERS)],
                ])
                for k in range(K)
            ]
            for j in range(USERS)
        ]
        expected = 3 * d - d_prime

        def certificate(reduced: List[np.ndarray]) -> Optional[float]:
            return self._conditioning(
                [sum(ch.G(j, k) @ reduced[k] @ targets[j][k] for k in range(K)) for j in range(USERS)],
                expected,
            )

        solution = self._solve_kronecker_system(ch, system, certificate, rng)
        self.logger.debug(
            "Relay precoders certified",
            extra={'mode': mode.value, 'system_shape': solution.system_shape,
                   'null_dimension': solution.null_dimension, 'retries': solution.retries},
        )
        return solution

    # ------------------------------------------------------------------
    # Post-processors
    # ------------------------------------------------------------------
    def build_postprocessors(
        self,
        ch: ChannelRealization,
        relay_precoders: List[np.ndarray],
        user_precoders: Dict[PairKey, np.ndarray],
        d_prime: int,
        mode: RelayMode = RelayMode.I,
    ) -> List[np.ndarray]:
        """
        V_j spans 2d directions orthogonal to the interference the relays
        left in place. When more room is available, the rows are chosen
        along the projected desired signal.
        """
        M, K = ch.config.M, ch.config.K
        d = user_precoders[(0, 1)].shape[1]
        postprocessors = []
        for j in range(USERS):
            nxt, far = (j + 1) % USERS, (j + 2) % USERS
            residual = self.split_precoders(user_precoders[(nxt, far)], d_prime)[1]
            target = sum(
                ch.G(j, k) @ relay_output(relay_precoders[k], ch.H(k, nxt)) @ residual for k in range(K)
            )
            basis = left_null_space_basis(target, self.tolerance)
            if basis.shape[0] < 2 * d:
                raise InternalContractError(
                    f"user {j}: left null space has {basis.shape[0]} rows, need 2d={2 * d}"
                )
            if basis.shape[0] == 2 * d:
                V = basis
            else:
                desired = sum(
                    ch.G(j, k) @ relay_output(relay_precoders[k], effective_signal(ch, user_precoders, k, j))
                    for k in range(K)
                )
                directions, _, _ = linalg.svd(basis @ desired, full_matrices=False)
                V = directions[:, :2 * d].conj().T @ basis
            if not orthonormal_rows(V):
                raise InternalContractError(f"user {j}: post-processor rows are not orthonormal")
            postprocessors.append(V)
        return postprocessors

    # ------------------------------------------------------------------
    # No alignment
    # ------------------------------------------------------------------
    def design_no_alignment(
        self,
        ch: ChannelRealization,
        rng: np.random.Generator,
        strategy: Optional[Strategy] = None,
    ) -> TransceiverDesign:
        M, N, K = ch.config.M, ch.config.N, ch.config.K
        if M % 2:
            raise InfeasibleDimensionError(f"no-alignment needs an even M, got {M}")
        if K * N * N <= 3 * M * M:
            raise InfeasibleDimensionError(
                f"no-alignment needs K*N^2 > 3*M^2, got {K * N * N} <= {3 * M * M}"
            )
        d = M // 2
        precoders = {}
        for j in range(USERS):
            precoders[(j, (j + 1) % USERS)] = np.eye(M, d, dtype=np.complex128)
            precoders[(j, (j - 1) % USERS)] = np.eye(M, d, k=-d, dtype=np.complex128)

        blocks = []
        for j in range(USERS):
            for src, dst in (((j + 1) % USERS, (j + 2) % USERS), ((j + 2) % USERS, (j + 1) % USERS)):
                blocks.append(np.hstack([
                    kronecker((ch.H(k, src) @ precoders[(src, dst)]).T, ch.G(j, k)) for k in range(K)
                ]))
        system = np.vstack(blocks)
        signals = [[effective_signal(ch, precoders, k, j) for k in range(K)] for j in range(USERS)]

        def certificate(relays: List[np.ndarray]) -> Optional[float]:
            return self._conditioning(
                [sum(ch.G(j, k) @ relays[k] @ signals[j][k] for k in range(K)) for j in range(USERS)],
                2 * d,
            )

        solution = self._solve_kronecker_system(ch, system, certificate, rng)
        return TransceiverDesign(
            strategy=strategy or Strategy(kind=StrategyKind.NO_ALIGNMENT, d=d, d_prime=d),
            channel=ch,
            user_precoders=precoders,
            relay_precoders=solution.precoders,
            postprocessors=[np.eye(M, dtype=np.complex128) for _ in range(USERS)],
            precoder_split=d,
            retries_used=solution.retries,
        )

    # ------------------------------------------------------------------
    # Orchestration
    # ------------------------------------------------------------------
    @staticmethod
    def _empty_design(ch: ChannelRealization, strategy: Strategy) -> TransceiverDesign:
        M, N = ch.config.M, ch.config.N
        return TransceiverDesign(
            strategy=strategy,
            channel=ch,
            user_precoders={key: np.zeros((M, 0), dtype=np.complex128) for key in PRECODER_KEYS},
            relay_precoders=[np.zeros((N, N), dtype=np.complex128) for _ in range(ch.config.K)],
            postprocessors=[np.zeros((0, M), dtype=np.complex128) for _ in range(USERS)],
            precoder_split=0,
        )

    def design(self, ch: ChannelRealization, strategy: Strategy, seed: int) -> TransceiverDesign:
        rng = np.random.default_rng(seed)
        started = time.perf_counter()
        stage = "transform"
        try:
            effective = ch
            if strategy.disablement is not None:
                effective = restrict_channel(effective, *strategy.disablement)
            if strategy.extension is not None:
                effective = extend_channel(effective, strategy.extension)

            stage = "strategy"
            strategy.validate(effective.config)
            if strategy.d == 0:
                return self._empty_design(effective, strategy)

            if strategy.kind is StrategyKind.NO_ALIGNMENT:
                stage = "no_alignment"
                design = self.design_no_alignment(effective, rng, strategy)
            else:
                stage = "design"
                design = self._design_aligned(effective, strategy, rng)
        except RelayDofError as error:
            raise error.with_stage(stage)

        log_performance(
            "design_seconds",
            time.perf_counter() - started,
            {'kind': strategy.kind.value, 'd': strategy.d, 'M': effective.config.M,
             'N': effective.config.N, 'K': effective.config.K, 'retries': design.retries_used},
        )
        return design

    def _design_aligned(
        self, ch: ChannelRealization, strategy: Strategy, rng: np.random.Generator
    ) -> TransceiverDesign:
        d, d_prime = strategy.d, strategy.d_prime
        try:
            if strategy.kind is StrategyKind.ALIGNMENT_II:
                _, uplink, alignment = self.align_uplink_II(ch, d, rng)
                mode = RelayMode.II
            else:
                uplink, alignment, mode = ch, self.align_uplink_I(ch, d, rng), RelayMode.I
        except RelayDofError as error:
            raise error.with_stage("alignment")
        try:
            relays = self.solve_relay_precoders(uplink, alignment.precoders, d_prime, mode, rng)
        except RelayDofError as error:
            raise error.with_stage("relay")
        try:
            postprocessors = self.build_postprocessors(
                ch, relays.precoders, alignment.precoders, d_prime, mode
            )
        except RelayDofError as error:
            raise error.with_stage("postprocess")
        return TransceiverDesign(
            strategy=strategy,
            channel=ch,
            user_precoders=alignment.precoders,
            relay_precoders=relays.precoders,
            postprocessors=postprocessors,
            precoder_split=d_prime,
            retries_used=alignment.retries + relays.retries,
        )
