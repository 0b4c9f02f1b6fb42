"""
Independent certification of transceiver designs.

A design is accepted when the six interference terms cancel across the
relays and every user sees a full-rank desired channel after its
post-processor. The achieved DoF is estimated as the high-SNR slope of
the deterministic log-det sum rate.
"""
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from ..exceptions import InvalidInputError, InvalidParameterError, PreconditionError
from ..utils.logger import setup_logger
from .channel import USERS, ChannelRealization
from .designer import TransceiverDesign, effective_signal, relay_output
from .numerics import DEFAULT_TOLERANCE, RankTolerance, numerical_rank, relative_residual, spectral_norm

# (receiving user, (transmitter, intended receiver)) in the order user 0, 1, 2
INTERFERENCE_TERMS: Tuple[Tuple[int, Tuple[int, int]], ...] = (
    (0, (1, 2)), (0, (2, 1)),
    (1, (2, 0)), (1, (0, 2)),
    (2, (0, 1)), (2, (1, 0)),
)


@dataclass(frozen=True)
class VerificationReport:
    neutralization_residuals: Tuple[float, ...]
    decodability_ranks: Tuple[int, ...]
    expected_rank: int
    passed: bool
    retries_used: int = 0
    # Self-interference is subtracted at each user, never checked here.
    self_interference_precancelled: bool = True

    @property
    def max_residual(self) -> float:
        return max(self.neutralization_residuals)


@dataclass(frozen=True)
class RateTrace:
    snr_db: List[float]
    sum_rate_bits: List[float]
    slope_estimate: float
    expected_dof: float
    uses: int = 1

    def __post_init__(self):
        if len(self.snr_db) != len(self.sum_rate_bits) or len(self.snr_db) < 2:
            raise InvalidParameterError("a rate trace needs at least two (snr, rate) points")

    @property
    def dof_per_use(self) -> float:
        return self.slope_estimate / self.uses

    @property
    def deviation(self) -> float:
        if self.expected_dof == 0:
            return abs(self.slope_estimate)
        return abs(self.slope_estimate - self.expected_dof) / self.expected_dof


class DesignVerifier:
    def __init__(
        self,
        tolerance: RankTolerance = DEFAULT_TOLERANCE,
        residual_tolerance: float = 1e-8,
        noise_power: Optional[float] = None,
    ):
        self.tolerance = tolerance
        self.residual_tolerance = residual_tolerance
        self.noise_power = noise_power
        self.logger = setup_logger("relay_dof.verifier")

    def _check_dimensions(self, ch: ChannelRealization, design: TransceiverDesign) -> None:
        M, N, K, d = ch.config.M, ch.config.N, ch.config.K, design.d
        if len(design.relay_precoders) != K:
            raise InvalidInputError(f"design has {len(design.relay_precoders)} relay precoders, channel has K={K}")
        for k, F in enumerate(design.relay_precoders):
            if F.shape != (N, N):
                raise InvalidInputError(f"F_{k} has shape {F.shape}, expected {(N, N)}")
        for key, U in design.user_precoders.items():
            if U.shape != (M, d):
                raise InvalidInputError(f"U{key} has shape {U.shape}, expected {(M, d)}")
        if len(design.postprocessors) != USERS:
            raise InvalidInputError("design must carry one post-processor per user")
        for j, V in enumerate(design.postprocessors):
            if V.shape != (2 * d, M):
                raise InvalidInputError(f"V_{j} has shape {V.shape}, expected {(2 * d, M)}")

    def _forwarded(self, ch: ChannelRealization, design: TransceiverDesign, j: int, src: int, dst: int) -> List[np.ndarray]:
        U = design.user_precoders[(src, dst)]
        return [
            ch.G(j, k) @ relay_output(design.relay_precoders[k], ch.H(k, src)) @ U
            for k in range(ch.config.K)
        ]

    def _terms(self, ch: ChannelRealization, design: TransceiverDesign, j: int, src: int, dst: int) -> List[np.ndarray]:
        V = design.postprocessors[j]
        return [V @ term for term in self._forwarded(ch, design, j, src, dst)]

    def _residual(self, ch: ChannelRealization, design: TransceiverDesign, j: int, src: int, dst: int) -> float:
        forwarded = self._forwarded(ch, design, j, src, dst)
        V = design.postprocessors[j]
        # ||V X|| <= ||V||_2 ||X||
        scale = spectral_norm(V) * float(sum(np.linalg.norm(term) for term in forwarded))
        return relative_residual([V @ term for term in forwarded], scale=scale)

    def neutralization_residuals(self, ch: ChannelRealization, design: TransceiverDesign) -> Tuple[float, ...]:
        self._check_dimensions(ch, design)
        return tuple(self._residual(ch, design, j, src, dst) for j, (src, dst) in INTERFERENCE_TERMS)

    def _desired(self, ch: ChannelRealization, design: TransceiverDesign, j: int) -> np.ndarray:
        return sum(
            design.postprocessors[j] @ ch.G(j, k)
            @ relay_output(design.relay_precoders[k], effective_signal(ch, design.user_precoders, k, j))
            for k in range(ch.config.K)
        )

    def decodability_ranks(self, ch: ChannelRealization, design: TransceiverDesign) -> Tuple[int, ...]:
        self._check_dimensions(ch, design)
        return tuple(numerical_rank(self._desired(ch, design, j), self.tolerance) for j in range(USERS))

    def verify(self, ch: ChannelRealization, design: TransceiverDesign) -> VerificationReport:
        residuals = self.neutralization_residuals(ch, design)
        ranks = self.decodability_ranks(ch, design)
        expected = 2 * design.d
        passed = all(r <= self.residual_tolerance for r in residuals) and all(r == expected for r in ranks)
        report = VerificationReport(
            neutralization_residuals=residuals,
            decodability_ranks=ranks,
            expected_rank=expected,
            passed=passed,
            retries_used=design.retries_used,
        )
        log = self.logger.info if passed else self.logger.warning
        log("Design verified" if passed else "Design failed verification",
            extra={'max_residual': report.max_residual, 'ranks': list(ranks), 'expected_rank': expected})
        return report

    # ------------------------------------------------------------------
    # Rate model
    # ------------------------------------------------------------------
    def _noise_powers(self, ch: ChannelRealization, noise_power: Optional[float]) -> Tuple[List[float], List[float]]:
        override = noise_power if noise_power is not None else self.noise_power
        if override is not None:
            if override <= 0:
                raise InvalidParameterError(f"noise power must be positive, got {override}")
            return [override] * ch.config.K, [override] * USERS
        return list(ch.relay_noise), list(ch.user_noise)

    def _relay_scale(
        self, ch: ChannelRealization, design: TransceiverDesign, power: float, relay_noise: Sequence[float]
    ) -> float:
        """Common factor that brings the strongest relay output to `power`."""
        per_stream = power / (2 * design.d)
        outputs = []
        for k, F in enumerate(design.relay_precoders):
            signal = sum(
                np.linalg.norm(relay_output(F, ch.H(k, src)) @ U) ** 2
                for (src, _), U in design.user_precoders.items()
            )
            noise = np.linalg.norm(F[:, :ch.rx_antennas]) ** 2
            outputs.append(per_stream * signal + relay_noise[k] * noise)
        strongest = max(outputs)
        return math.sqrt(power / strongest) if strongest > 0 else 0.0

    def _sum_rate(
        self,
        ch: ChannelRealization,
        design: TransceiverDesign,
        power: float,
        relay_noise: Sequence[float],
        user_noise: Sequence[float],
    ) -> float:
        d, K = design.d, ch.config.K
        per_stream = power / (2 * d)
        gamma = self._relay_scale(ch, design, power, relay_noise)
        total = 0.0
        for j in range(USERS):
            V = design.postprocessors[j]
            forward = [V @ ch.G(j, k) @ design.relay_precoders[k][:, :ch.rx_antennas] for k in range(K)]
            desired = gamma * self._desired(ch, design, j)
            covariance = user_noise[j] * (V @ V.conj().T)
            for k in range(K):
                covariance = covariance + relay_noise[k] * gamma ** 2 * (forward[k] @ forward[k].conj().T)
            for receiver, (src, dst) in INTERFERENCE_TERMS:
                if receiver == j:
                    leak = gamma * sum(self._terms(ch, design, j, src, dst))
                    covariance = covariance + per_stream * (leak @ leak.conj().T)
            whitened = linalg.solve(covariance, desired, assume_a="pos")
            gain = np.eye(2 * d) + per_stream * (desired.conj().T @ whitened)
            _, logdet = np.linalg.slogdet(gain)
            total += float(logdet) / math.log(2.0)
        return total

    def estimate_rate_slope(
        self,
        ch: ChannelRealization,
        design: TransceiverDesign,
        snr_db_list: Sequence[float],
        noise_power: Optional[float] = None,
    ) -> RateTrace:
        snr_db = [float(s) for s in snr_db_list]
        if len(snr_db) < 2:
            raise InvalidParameterError("rate slope needs at least two SNR points")
        if len(set(snr_db)) < 2:
            raise InvalidParameterError("rate slope needs two distinct SNR points")
        report = self.verify(ch, design)
        if not report.passed:
            raise PreconditionError("refusing to estimate the rate slope of an unverified design")

        expected = float(USERS * design.d)
        if design.d == 0:
            return RateTrace(snr_db, [0.0] * len(snr_db), 0.0, expected, design.strategy.uses)

        relay_noise, user_noise = self._noise_powers(ch, noise_power)
        rates = [self._sum_rate(ch, design, 10 ** (s / 10), relay_noise, user_noise) for s in snr_db]
        low = int(np.argmin(snr_db))
        high = int(np.argmax(snr_db))
        # Two-phase (half-duplex) operation halves the pre-log
        slope = 0.5 * (rates[high] - rates[low]) / (math.log2(10 ** (snr_db[high] / 10)) - math.log2(10 ** (snr_db[low] / 10)))
        self.logger.info(
            "Rate slope estimated",
            extra={'slope': slope, 'expected_dof': expected, 'snr_db': snr_db},
        )
        return RateTrace(snr_db, rates, slope, expected, design.strategy.uses)
