import dataclasses
from fractions import Fraction

import numpy as np
import pytest

from ..src.exceptions import InvalidInputError, InvalidParameterError
from ..src.services.channel import (
    ExtensionPlan,
    SelectionMatrix,
    SystemConfig,
    deactivate_rx_antennas,
    disable_antennas,
    extend_channel,
    restrict_channel,
    sample_channel,
)
from ..src.services.numerics import numerical_rank


def test_system_config_validation():
    assert SystemConfig(M=14, N=10, K=2, d=6).d_sum == 18
    with pytest.raises(InvalidParameterError):
        SystemConfig(M=0, N=1, K=1)
    with pytest.raises(InvalidParameterError):
        SystemConfig(M=2, N=1, K=1, d=3)


def test_parameter_records_are_frozen_and_hashable():
    config = SystemConfig(M=14, N=10, K=2, d=6)
    with pytest.raises(dataclasses.FrozenInstanceError):
        config.M = 3
    assert {config, SystemConfig(M=14, N=10, K=2, d=6)} == {config}
    plan = ExtensionPlan(L=2, M_star=Fraction(3, 2))
    assert plan == ExtensionPlan(L=2, M_star=Fraction(3, 2))
    with pytest.raises(dataclasses.FrozenInstanceError):
        plan.L = 3


def test_sampling_is_deterministic(make_channel):
    first = make_channel(3, 2, 2, seed=42)
    second = make_channel(3, 2, 2, seed=42)
    other = make_channel(3, 2, 2, seed=43)
    for key in first.uplink:
        assert np.array_equal(first.uplink[key], second.uplink[key])
        assert not np.array_equal(first.uplink[key], other.uplink[key])
    for key in first.downlink:
        assert np.array_equal(first.downlink[key], second.downlink[key])


def test_block_shapes_and_accessors(make_channel):
    ch = make_channel(3, 2, 2)
    assert ch.H(1, 2).shape == (2, 3)
    assert ch.G(0, 1).shape == (3, 2)
    assert ch.H(0, 3) is ch.H(0, 0)
    assert ch.relay_noise == (1.0, 1.0)
    assert ch.user_noise == (1.0, 1.0, 1.0)


def test_blocks_are_read_only(make_channel):
    ch = make_channel(2, 2, 1)
    with pytest.raises(ValueError):
        ch.H(0, 0)[0, 0] = 1.0


def test_sampled_blocks_have_full_rank():
    for seed in range(100):
        ch = sample_channel(SystemConfig(M=2, N=3, K=1), seed)
        assert numerical_rank(ch.H(0, 0)) == 2


def test_invalid_seed_rejected():
    with pytest.raises(InvalidParameterError):
        sample_channel(SystemConfig(M=2, N=2, K=1), -1)


def test_inconsistent_blocks_rejected(make_channel):
    ch = make_channel(2, 2, 1)
    uplink = dict(ch.uplink)
    uplink[(0, 0)] = np.zeros((3, 2))
    with pytest.raises(InvalidInputError):
        ch.replace(uplink=uplink)


def test_selection_matrix():
    E = SelectionMatrix(2, 4).matrix
    assert np.array_equal(E, np.eye(2, 4))
    with pytest.raises(InvalidParameterError):
        SelectionMatrix(5, 4)


def test_deactivation_keeps_leading_rows(make_channel):
    ch = make_channel(10, 10, 2)
    reduced = deactivate_rx_antennas(ch, 8)
    assert reduced.rx_antennas == 8
    assert reduced.H(1, 0).shape == (8, 10)
    assert np.array_equal(reduced.H(1, 0), ch.H(1, 0)[:8])
    assert reduced.G(0, 1) is ch.G(0, 1)
    assert deactivate_rx_antennas(ch, 10) is ch


@pytest.mark.parametrize("first, second", [(8, 5), (9, 9), (10, 3)])
def test_deactivation_composes(make_channel, first, second):
    ch = make_channel(10, 10, 2)
    twice = deactivate_rx_antennas(deactivate_rx_antennas(ch, first), second)
    once = deactivate_rx_antennas(ch, second)
    assert twice.rx_antennas == once.rx_antennas == second
    for key, block in once.uplink.items():
        assert np.array_equal(twice.uplink[key], block)
    for key, block in once.downlink.items():
        assert np.array_equal(twice.downlink[key], block)


@pytest.mark.parametrize("n_prime", [0, 11])
def test_deactivation_bounds(make_channel, n_prime):
    with pytest.raises(InvalidParameterError):
        deactivate_rx_antennas(make_channel(10, 10, 2), n_prime)


def test_disablement():
    config = disable_antennas(SystemConfig(M=30, N=10, K=2, d=6), 15, 10)
    assert (config.M, config.N, config.K, config.d) == (15, 10, 2, 6)
    with pytest.raises(InvalidParameterError):
        disable_antennas(SystemConfig(M=3, N=3, K=1), 4, 3)


def test_restrict_channel_slices_blocks(make_channel):
    ch = make_channel(4, 3, 2)
    small = restrict_channel(ch, 3, 2)
    assert small.config.M == 3 and small.config.N == 2
    assert np.array_equal(small.H(0, 1), ch.H(0, 1)[:2, :3])
    assert np.array_equal(small.G(2, 1), ch.G(2, 1)[:3, :2])


@pytest.mark.parametrize("L, M_star, sizes", [
    (2, Fraction(3, 2), (2, 1)),
    (3, Fraction(4, 3), (2, 1, 1)),
    (2, Fraction(2), (2, 2)),
])
def test_extension_column_pattern(L, M_star, sizes):
    plan = ExtensionPlan(L=L, M_star=M_star)
    assert plan.block_col_sizes == sizes
    assert plan.total_columns == sum(sizes)


def test_extension_plan_requires_integral_total():
    with pytest.raises(InvalidParameterError):
        ExtensionPlan(L=2, M_star=Fraction(4, 3))


@pytest.mark.parametrize("L, M_star", [(2, Fraction(3, 2)), (3, Fraction(4, 3))])
def test_extended_channel_is_block_diagonal(make_channel, L, M_star):
    ch = make_channel(2, 3, 1, seed=5)
    plan = ExtensionPlan(L=L, M_star=M_star)
    extended = extend_channel(ch, plan)
    sizes = plan.block_col_sizes
    assert extended.config.M == sum(sizes)
    assert extended.config.N == L * 3
    assert extended.uses == L

    H = extended.H(0, 1)
    assert H.shape == (L * 3, sum(sizes))
    col = 0
    for use, width in enumerate(sizes):
        band = H[3 * use:3 * (use + 1)]
        assert np.count_nonzero(np.delete(band, range(col, col + width), axis=1)) == 0
        assert numerical_rank(band[:, col:col + width]) == width
        col += width
    # use 0 reuses the base realization
    assert np.array_equal(H[:3, :sizes[0]], ch.H(0, 1)[:, :sizes[0]])

    G = extended.G(2, 0)
    assert G.shape == (sum(sizes), L * 3)
    assert np.count_nonzero(G[:sizes[0], 3:]) == 0
    assert np.count_nonzero(G[sizes[0]:, :3]) == 0


def test_extension_is_deterministic(make_channel):
    plan = ExtensionPlan(L=2, M_star=Fraction(3, 2))
    first = extend_channel(make_channel(2, 3, 1, seed=9), plan)
    second = extend_channel(make_channel(2, 3, 1, seed=9), plan)
    assert np.array_equal(first.H(0, 2), second.H(0, 2))


def test_extension_cannot_be_nested(make_channel):
    plan = ExtensionPlan(L=2, M_star=Fraction(3, 2))
    extended = extend_channel(make_channel(2, 3, 1), plan)
    with pytest.raises(InvalidParameterError):
        extend_channel(extended, plan)
