import dataclasses

import numpy as np
import pytest

from ..src.exceptions import InvalidInputError, InvalidParameterError, PreconditionError
from ..src.services.channel import SelectionMatrix, complex_gaussian, deactivate_rx_antennas
from ..src.services.verifier import INTERFERENCE_TERMS, RateTrace


def test_interference_terms_cover_every_cross_pair():
    assert len(INTERFERENCE_TERMS) == 6
    for receiver, (src, dst) in INTERFERENCE_TERMS:
        assert receiver not in (src, dst)
        assert src != dst


def test_report_fields(build, verifier):
    design = build(14, 10, 2)
    report = verifier.verify(design.channel, design)
    assert len(report.neutralization_residuals) == 6
    assert report.expected_rank == 12
    assert report.retries_used == design.retries_used
    assert report.self_interference_precancelled


def test_dimension_mismatch_rejected(build, verifier):
    design = build(2, 3, 2)
    extra = dataclasses.replace(design, relay_precoders=list(design.relay_precoders) * 2)
    with pytest.raises(InvalidInputError):
        verifier.verify(design.channel, extra)

    wrong_v = dataclasses.replace(design, postprocessors=[np.eye(3)] * 3)
    with pytest.raises(InvalidInputError):
        verifier.verify(design.channel, wrong_v)


def test_unaligned_relays_leave_residual(build, verifier, rng):
    design = build(14, 10, 2)
    noisy = [F + 0.1 * rng.standard_normal(F.shape) for F in design.relay_precoders]
    report = verifier.verify(design.channel, dataclasses.replace(design, relay_precoders=noisy))
    assert not report.passed
    assert report.max_residual > 1e-8


def test_rate_slope_increases_with_snr(build, verifier):
    design = build(2, 3, 2)
    trace = verifier.estimate_rate_slope(design.channel, design, [20, 30, 40])
    assert trace.expected_dof == 3.0
    assert trace.sum_rate_bits == sorted(trace.sum_rate_bits)
    assert trace.slope_estimate > 0
    assert trace.dof_per_use == trace.slope_estimate


def test_rate_slope_of_zero_stream_design(build, verifier):
    design = build(2, 2, 2)
    trace = verifier.estimate_rate_slope(design.channel, design, [40, 50])
    assert trace.slope_estimate == 0.0
    assert trace.sum_rate_bits == [0.0, 0.0]
    assert trace.deviation == 0.0


def test_rate_slope_requires_verified_design(build, verifier):
    design = build(14, 10, 2)
    damaged = dict(design.user_precoders)
    damaged[(0, 1)] = np.zeros_like(damaged[(0, 1)])
    with pytest.raises(PreconditionError):
        verifier.estimate_rate_slope(design.channel, dataclasses.replace(design, user_precoders=damaged), [40, 50])


@pytest.mark.parametrize("snr", [[40], [50, 50]])
def test_rate_slope_needs_two_distinct_points(build, verifier, snr):
    design = build(2, 3, 2)
    with pytest.raises(InvalidParameterError):
        verifier.estimate_rate_slope(design.channel, design, snr)


def test_rate_slope_rejects_non_positive_noise(build, verifier):
    design = build(2, 3, 2)
    with pytest.raises(InvalidParameterError):
        verifier.estimate_rate_slope(design.channel, design, [40, 50], noise_power=0.0)


def test_rate_trace():
    trace = RateTrace(snr_db=[40.0, 60.0], sum_rate_bits=[1.0, 2.0], slope_estimate=2.9, expected_dof=3.0, uses=2)
    assert trace.deviation == pytest.approx(0.1 / 3)
    assert trace.dof_per_use == pytest.approx(1.45)
    with pytest.raises(InvalidParameterError):
        RateTrace(snr_db=[40.0], sum_rate_bits=[1.0], slope_estimate=0.0, expected_dof=0.0)


def test_zero_relays_give_zero_residuals_and_ranks(build, verifier):
    design = build(14, 10, 2)
    silent = [np.zeros_like(F) for F in design.relay_precoders]
    report = verifier.verify(design.channel, dataclasses.replace(design, relay_precoders=silent))
    assert report.neutralization_residuals == (0.0,) * 6
    assert report.decodability_ranks == (0, 0, 0)
    assert not report.passed


@pytest.mark.parametrize("gamma", [1e-3, 2.5 - 1.5j, 40.0])
def test_common_relay_scaling_is_invisible(build, verifier, gamma):
    design = build(14, 10, 2)
    scaled = dataclasses.replace(design, relay_precoders=[gamma * F for F in design.relay_precoders])
    before = verifier.verify(design.channel, design)
    after = verifier.verify(design.channel, scaled)
    assert after.decodability_ranks == before.decodability_ranks
    assert after.passed == before.passed
    for a, b in zip(after.neutralization_residuals, before.neutralization_residuals):
        assert a == pytest.approx(b, abs=1e-12)


def test_deactivated_design_verifies_on_reduced_channel(build, verifier):
    design = build(10, 10, 2)
    n_prime = design.strategy.N_prime
    reduced = deactivate_rx_antennas(design.channel, n_prime)
    E = SelectionMatrix(n_prime, design.channel.config.N).matrix
    composed = [F[:, :n_prime] @ E for F in design.relay_precoders]
    for F, G in zip(design.relay_precoders, composed):
        assert np.array_equal(F, G)

    full = verifier.verify(design.channel, design)
    restricted = verifier.verify(reduced, dataclasses.replace(design, channel=reduced, relay_precoders=composed))
    assert full.passed and restricted.passed
    assert restricted.decodability_ranks == full.decodability_ranks
    for a, b in zip(restricted.neutralization_residuals, full.neutralization_residuals):
        assert a == pytest.approx(b, abs=1e-12)


def test_random_relays_leave_large_residual(build, verifier):
    design = build(14, 10, 2)
    N = design.channel.config.N
    for seed in range(100):
        rng = np.random.default_rng(seed)
        relays = [complex_gaussian(rng, (N, N)) for _ in design.relay_precoders]
        report = verifier.verify(design.channel, dataclasses.replace(design, relay_precoders=relays))
        assert report.max_residual > 0.1
        assert not report.passed


@pytest.mark.parametrize("M, N, K", [(2, 3, 2), (4, 5, 2)])
def test_no_alignment_transmit_vector_stacks_both_messages(designer, verifier, make_channel, rng, M, N, K):
    design = designer.design_no_alignment(make_channel(M, N, K), rng)
    d = M // 2
    for j in range(3):
        ahead, behind = complex_gaussian(rng, (d, 1)), complex_gaussian(rng, (d, 1))
        x = design.user_precoders[(j, (j + 1) % 3)] @ ahead + design.user_precoders[(j, (j - 1) % 3)] @ behind
        assert np.array_equal(x, np.vstack([ahead, behind]))
    assert verifier.verify(design.channel, design).passed
