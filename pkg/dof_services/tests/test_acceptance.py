"""Seed sweeps over the reference configurations. Run with ``pytest -m slow``."""
import statistics

import pytest

from ..src.services.channel import SystemConfig, sample_channel

pytestmark = pytest.mark.slow

REFERENCE_CONFIGS = [(14, 10, 2), (10, 10, 2), (2, 3, 2)]


@pytest.mark.parametrize("M, N, K", REFERENCE_CONFIGS)
def test_designs_verify_across_seeds(designer, verifier, M, N, K):
    strategy = designer.select_strategy(M, N, K)
    passed = 0
    retries = []
    for seed in range(100):
        design = designer.design(sample_channel(SystemConfig(M=M, N=N, K=K), seed), strategy, seed)
        report = verifier.verify(design.channel, design)
        passed += report.passed
        retries.append(design.retries_used)
    assert passed >= 99
    assert statistics.median(retries) == 0


SLOPE_SEEDS = range(1, 11)


@pytest.mark.parametrize("M, N, K", REFERENCE_CONFIGS)
def test_rate_slope_matches_design_dof(build, verifier, M, N, K):
    deviations = []
    for seed in SLOPE_SEEDS:
        design = build(M, N, K, seed=seed)
        trace = verifier.estimate_rate_slope(design.channel, design, [40, 50, 60])
        assert trace.expected_dof == 3 * design.d
        deviations.append(trace.deviation)
    assert statistics.median(deviations) <= 0.05


@pytest.mark.parametrize("M, N, K", REFERENCE_CONFIGS)
def test_rate_slope_converges_at_high_snr(build, verifier, M, N, K):
    for seed in SLOPE_SEEDS:
        design = build(M, N, K, seed=seed)
        trace = verifier.estimate_rate_slope(design.channel, design, [60, 80, 100])
        assert trace.deviation <= 0.05
