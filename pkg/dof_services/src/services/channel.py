"""
Channel realizations of the three-user multi-relay Y channel and the
transformations applied to them: receive-antenna deactivation, antenna
disablement and symbol extension.
"""
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Optional, Tuple

import numpy as np
from scipy import linalg

from ..exceptions import InvalidInputError, InvalidParameterError

USERS = 3
UPLINK_PHASE = 0
DOWNLINK_PHASE = 1
SEED_LIMIT = 2 ** 64

BlockKey = Tuple[int, int]


@dataclass(frozen=True)
class SystemConfig:
    M: int
    N: int
    K: int
    d: int = 0

    def __post_init__(self):
        for name in ("M", "N", "K"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise InvalidParameterError(f"{name} must be a positive integer, got {value!r}")
        if not isinstance(self.d, (int, np.integer)) or self.d < 0:
            raise InvalidParameterError(f"d must be a nonnegative integer, got {self.d!r}")
        if self.d > self.M:
            raise InvalidParameterError(f"d={self.d} exceeds the user antenna count M={self.M}")

    @property
    def ratio(self) -> float:
        return self.M / self.N

    @property
    def d_sum(self) -> int:
        return USERS * self.d


@dataclass(frozen=True)
class ExtensionPlan:
    """L channel uses stacked block-diagonally with M_star active user antennas per use."""
    L: int
    M_star: Fraction

    def __post_init__(self):
        if not isinstance(self.L, (int, np.integer)) or self.L < 1:
            raise InvalidParameterError(f"extension factor L must be a positive integer, got {self.L!r}")
        object.__setattr__(self, "M_star", Fraction(self.M_star))
        if self.M_star <= 0:
            raise InvalidParameterError(f"M_star must be positive, got {self.M_star}")
        if (self.L * self.M_star).denominator != 1:
            raise InvalidParameterError(
                f"L*M_star must be an integer, got L={self.L}, M_star={self.M_star}"
            )

    @property
    def total_columns(self) -> int:
        return int(self.L * self.M_star)

    @property
    def block_col_sizes(self) -> Tuple[int, ...]:
        floor = math.floor(self.M_star)
        ceil = math.ceil(self.M_star)
        wide = int(self.L * (self.M_star - floor))
        return tuple([ceil] * wide + [floor] * (self.L - wide))


@dataclass(frozen=True)
class SelectionMatrix:
    N_prime: int
    N: int

    def __post_init__(self):
        if not 0 < self.N_prime <= self.N:
            raise InvalidParameterError(
                f"retained receive antennas must satisfy 0 < N'={self.N_prime} <= N={self.N}"
            )

    @property
    def matrix(self) -> np.ndarray:
        return np.eye(self.N_prime, self.N, dtype=np.complex128)


def _freeze(matrix: np.ndarray) -> np.ndarray:
    matrix = np.ascontiguousarray(matrix, dtype=np.complex128)
    matrix.setflags(write=False)
    return matrix


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """
    Uplink blocks H[(k, j)] (relay k from user j) and downlink blocks
    G[(j, k)] (user j from relay k).

    `rx_antennas` is the number of uplink receive antennas still active at
    each relay; it is smaller than N only after receive-antenna
    deactivation.
    """
    config: SystemConfig
    uplink: Dict[BlockKey, np.ndarray]
    downlink: Dict[BlockKey, np.ndarray]
    seed: int
    rx_antennas: Optional[int] = None
    relay_noise: Tuple[float, ...] = ()
    user_noise: Tuple[float, ...] = ()
    extension: Optional[ExtensionPlan] = None

    def __post_init__(self):
        M, N, K = self.config.M, self.config.N, self.config.K
        if self.rx_antennas is None:
            object.__setattr__(self, "rx_antennas", N)
        if not self.relay_noise:
            object.__setattr__(self, "relay_noise", (1.0,) * K)
        if not self.user_noise:
            object.__setattr__(self, "user_noise", (1.0,) * USERS)
        if len(self.relay_noise) != K or len(self.user_noise) != USERS:
            raise InvalidInputError("noise powers must list one value per relay and per user")

        expected = {(k, j) for k in range(K) for j in range(USERS)}
        if set(self.uplink) != expected:
            raise InvalidInputError(f"expected {len(expected)} uplink blocks keyed (k, j)")
        if set(self.downlink) != {(j, k) for (k, j) in expected}:
            raise InvalidInputError(f"expected {len(expected)} downlink blocks keyed (j, k)")

        uplink = {}
        for key, block in self.uplink.items():
            if np.shape(block) != (self.rx_antennas, M):
                raise InvalidInputError(
                    f"uplink block {key} has shape {np.shape(block)}, expected {(self.rx_antennas, M)}"
                )
            uplink[key] = _freeze(block)
        downlink = {}
        for key, block in self.downlink.items():
            if np.shape(block) != (M, N):
                raise InvalidInputError(
                    f"downlink block {key} has shape {np.shape(block)}, expected {(M, N)}"
                )
            downlink[key] = _freeze(block)
        object.__setattr__(self, "uplink", uplink)
        object.__setattr__(self, "downlink", downlink)

    def H(self, k: int, j: int) -> np.ndarray:
        return self.uplink[(k, j % USERS)]

    def G(self, j: int, k: int) -> np.ndarray:
        return self.downlink[(j % USERS, k)]

    @property
    def uses(self) -> int:
        return self.extension.L if self.extension else 1

    def replace(self, **changes) -> "ChannelRealization":
        fields = {
            "config": self.config,
            "uplink": self.uplink,
            "downlink": self.downlink,
            "seed": self.seed,
            "rx_antennas": self.rx_antennas,
            "relay_noise": self.relay_noise,
            "user_noise": self.user_noise,
            "extension": self.extension,
        }
        fields.update(changes)
        return ChannelRealization(**fields)


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with unit variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _validate_seed(seed: int) -> int:
    if not isinstance(seed, (int, np.integer)) or not 0 <= seed < SEED_LIMIT:
        raise InvalidParameterError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return int(seed)


def _block_stream(seed: int, phase: int, first: int, second: int, use: int = 0) -> np.random.Generator:
    entropy = [seed, phase, first, second] if use == 0 else [seed, phase, first, second, use]
    return np.random.default_rng(entropy)


def sample_channel(
    config: SystemConfig,
    seed: int,
    relay_noise: Optional[Tuple[float, ...]] = None,
    user_noise: Optional[Tuple[float, ...]] = None,
) -> ChannelRealization:
    seed = _validate_seed(seed)
    M, N, K = config.M, config.N, config.K
    uplink = {
        (k, j): complex_gaussian(_block_stream(seed, UPLINK_PHASE, k, j), (N, M))
        for k in range(K) for j in range(USERS)
    }
    downlink = {
        (j, k): complex_gaussian(_block_stream(seed, DOWNLINK_PHASE, j, k), (M, N))
        for j in range(USERS) for k in range(K)
    }
    return ChannelRealization(
        config=config,
        uplink=uplink,
        downlink=downlink,
        seed=seed,
        relay_noise=tuple(relay_noise or ()),
        user_noise=tuple(user_noise or ()),
    )


def deactivate_rx_antennas(ch: ChannelRealization, N_prime: int) -> ChannelRealization:
    """Keep the first N' receive antennas of every relay; transmit antennas stay active."""
    if not isinstance(N_prime, (int, np.integer)) or not 0 < N_prime <= ch.rx_antennas:
        raise InvalidParameterError(
            f"N'={N_prime!r} must satisfy 0 < N' <= {ch.rx_antennas} active receive antennas"
        )
    if N_prime == ch.rx_antennas:
        return ch
    selection = SelectionMatrix(N_prime, ch.rx_antennas).matrix
    uplink = {key: selection @ block for key, block in ch.uplink.items()}
    return ch.replace(uplink=uplink, rx_antennas=int(N_prime))


def disable_antennas(config: SystemConfig, M_star: int, N_star: int) -> SystemConfig:
    if not 0 < M_star <= config.M:
        raise InvalidParameterError(f"M*={M_star} must satisfy 0 < M* <= M={config.M}")
    if not 0 < N_star <= config.N:
        raise InvalidParameterError(f"N*={N_star} must satisfy 0 < N* <= N={config.N}")
    return SystemConfig(M=int(M_star), N=int(N_star), K=config.K, d=min(config.d, int(M_star)))


def restrict_channel(ch: ChannelRealization, M_star: int, N_star: int) -> ChannelRealization:
    """Apply antenna disablement to a realization by keeping the leading antennas."""
    if ch.rx_antennas != ch.config.N:
        raise InvalidInputError("antenna disablement must precede receive-antenna deactivation")
    config = disable_antennas(ch.config, M_star, N_star)
    if config == ch.config:
        return ch
    uplink = {key: block[:N_star, :M_star] for key, block in ch.uplink.items()}
    downlink = {key: block[:M_star, :N_star] for key, block in ch.downlink.items()}
    return ch.replace(config=config, uplink=uplink, downlink=downlink, rx_antennas=config.N)


def extend_channel(ch: ChannelRealization, plan: ExtensionPlan) -> ChannelRealization:
    """
    Stack L channel uses into block-diagonal super-channels.

    Use 0 reuses the given realization, every later use draws an
    independent realization from the same seed. Use l keeps the first
    ``plan.block_col_sizes[l]`` user antennas.
    """
    M, N, K = ch.config.M, ch.config.N, ch.config.K
    if ch.extension is not None:
        raise InvalidParameterError("channel is already extended")
    if ch.rx_antennas != N:
        raise InvalidParameterError("symbol extension must precede receive-antenna deactivation")
    if math.ceil(plan.M_star) > M:
        raise InvalidParameterError(
            f"M*={plan.M_star} needs {math.ceil(plan.M_star)} user antennas, only {M} available"
        )

    sizes = plan.block_col_sizes

    def per_use(phase: int, first: int, second: int, base: np.ndarray, shape) -> list:
        blocks = [base]
        for use in range(1, plan.L):
            blocks.append(complex_gaussian(_block_stream(ch.seed, phase, first, second, use), shape))
        return blocks

    uplink = {}
    for (k, j), block in ch.uplink.items():
        uses = per_use(UPLINK_PHASE, k, j, block, (N, M))
        uplink[(k, j)] = linalg.block_diag(*[u[:, :c] for u, c in zip(uses, sizes)])
    downlink = {}
    for (j, k), block in ch.downlink.items():
        uses = per_use(DOWNLINK_PHASE, j, k, block, (M, N))
        downlink[(j, k)] = linalg.block_diag(*[u[:c, :] for u, c in zip(uses, sizes)])

    extended_M = plan.total_columns
    config = SystemConfig(
        M=extended_M,
        N=plan.L * N,
        K=K,
        d=min(ch.config.d * plan.L, extended_M),
    )
    return ch.replace(
        config=config,
        uplink=uplink,
        downlink=downlink,
        rx_antennas=config.N,
        extension=plan,
    )
