"""
Handlers behind the command-line subcommands.

Every handler prints its human-readable result on stdout, writes its
artifacts and returns the process exit code. Errors propagate as
RelayDofError subclasses; the front end turns them into exit codes.
"""
import logging
import math
import statistics
import sys
import time
from typing import List, NamedTuple, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from tqdm import tqdm

from .config import Settings, get_settings
from .dependencies import get_designer, get_verifier
from .exceptions import EXIT_DEGENERATE, EXIT_OK, InvalidParameterError, RelayDofError
from .services.artifacts import (
    DesignArtifact,
    FormulaRecord,
    build_manifest,
    channel_to_dump,
    design_to_dump,
    read_design_artifact,
    report_to_dump,
    rows_to_frame,
    write_csv,
    write_json,
)
from .services.channel import USERS, SystemConfig, sample_channel
from .services.designer import Strategy, TransceiverDesigner
from .services.formulas import (
    NormalizedRow,
    RelayRow,
    SweepRow,
    corollary2_region,
    min_relays,
    normalized_asymptotic_dof,
    relay_curve,
    sweep_curves,
    sweep_normalized,
    symmetric_design_bound,
    theorem1_dof,
    upper_bound_dof,
)
from .services.verifier import DesignVerifier
from .utils.logger import log_performance

logger = logging.getLogger("relay_dof.cli")


class BatchRow(NamedTuple):
    seed: int
    kind: str
    d: int
    passed: bool
    retries: int
    max_residual: float
    min_rank: int
    seconds: float


def _format(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _print_fields(fields: dict) -> None:
    for key, value in fields.items():
        print(f"{key}: {_format(value)}")


def _sample(M: int, N: int, K: int, seed: int, settings: Settings):
    noise = settings.noise_power
    return sample_channel(
        SystemConfig(M=M, N=N, K=K),
        seed,
        relay_noise=(noise,) * K,
        user_noise=(noise,) * USERS,
    )


def cmd_formula(M: int, N: int, K: int, as_json: bool = False) -> int:
    record = FormulaRecord(
        M=M,
        N=N,
        K=K,
        upper=upper_bound_dof(M, N, K),
        achievable=theorem1_dof(M, N, K),
        # K = 1 has a single closed form and no region split
        region=corollary2_region(M, N, K).label.short if K > 1 else None,
        symmetric=symmetric_design_bound(M, N, K),
        normalized=normalized_asymptotic_dof(M, N, K),
    )
    if as_json:
        print(record.model_dump_json(indent=2))
    else:
        _print_fields(record.model_dump())
    return EXIT_OK


def cmd_sweep(
    K: int,
    N: int,
    ratio_min: float,
    ratio_max: float,
    points: int,
    out: Optional[str] = None,
    normalized: bool = False,
    k_list: Optional[Sequence[int]] = None,
    timestamp: bool = True,
    settings: Optional[Settings] = None,
) -> int:
    settings = settings or get_settings()
    if not ratio_min < ratio_max:
        raise InvalidParameterError(f"ratio-min={ratio_min} must be below ratio-max={ratio_max}")
    if points < 2:
        raise InvalidParameterError(f"a sweep needs at least 2 points, got {points}")
    if ratio_min < 0:
        raise InvalidParameterError(f"ratio-min must be nonnegative, got {ratio_min}")

    grid = np.linspace(ratio_min, ratio_max, points).tolist()
    if normalized:
        relays = list(k_list) if k_list else [K]
        rows, columns = sweep_normalized(relays, grid), NormalizedRow._fields
    else:
        rows, columns = sweep_curves(K, N, grid, n_jobs=settings.threads), SweepRow._fields

    manifest = build_manifest(
        "sweep",
        {'K': K, 'N': N, 'ratio_min': ratio_min, 'ratio_max': ratio_max, 'points': points,
         'normalized': normalized, 'k_list': list(k_list) if k_list else None},
        outputs=[out] if out else [],
        timestamp=timestamp,
    )
    write_csv(out, rows_to_frame(rows, columns), manifest if out else None)
    return EXIT_OK


def cmd_relays(M: int, N: int, k_max: int, out: Optional[str] = None, timestamp: bool = True) -> int:
    rows = relay_curve(M, N, k_max)
    manifest = build_manifest(
        "relays", {'M': M, 'N': N, 'k_max': k_max}, outputs=[out] if out else [], timestamp=timestamp
    )
    write_csv(out, rows_to_frame(rows, RelayRow._fields), manifest if out else None)
    return EXIT_OK


def cmd_min_relays(M: int, N: int, target: float) -> int:
    print(min_relays(M, N, target))
    return EXIT_OK


def cmd_design(
    M: int,
    N: int,
    K: int,
    seed: int,
    out: str,
    extend: bool = False,
    dump_channel: Optional[str] = None,
    timestamp: bool = True,
    settings: Optional[Settings] = None,
) -> int:
    settings = settings or get_settings()
    designer = get_designer(settings)
    verifier = get_verifier(settings)

    channel = _sample(M, N, K, seed, settings)
    if dump_channel:
        write_json(dump_channel, channel_to_dump(channel))
    strategy = designer.select_strategy(M, N, K, allow_extension=extend)
    design = designer.design(channel, strategy, seed)
    report = verifier.verify(design.channel, design)

    manifest = build_manifest(
        "design",
        {'M': M, 'N': N, 'K': K, 'extend': extend},
        seed=seed,
        outputs=[p for p in (out, dump_channel) if p],
        timestamp=timestamp,
    )
    write_json(out, DesignArtifact(
        manifest=manifest,
        channel=channel_to_dump(channel),
        design=design_to_dump(design),
        report=report_to_dump(report),
    ))
    _print_fields({
        'kind': strategy.kind.value,
        'd': strategy.d,
        'uses': strategy.uses,
        'd_sum': strategy.d_sum,
        'passed': report.passed,
        'max_residual': report.max_residual,
        'ranks': ",".join(str(r) for r in report.decodability_ranks),
        'retries': design.retries_used,
    })
    return EXIT_OK if report.passed else EXIT_DEGENERATE


def cmd_slope(
    design_json: str,
    snr_db: Sequence[float],
    out: Optional[str] = None,
    report_json: Optional[str] = None,
    timestamp: bool = True,
    settings: Optional[Settings] = None,
) -> int:
    settings = settings or get_settings()
    verifier = get_verifier(settings)
    artifact, design = read_design_artifact(design_json)
    trace = verifier.estimate_rate_slope(design.channel, design, snr_db)

    _print_fields({
        'slope': trace.slope_estimate,
        'expected': trace.expected_dof,
        'deviation': trace.deviation,
        'dof_per_use': trace.dof_per_use,
    })
    if report_json:
        report = verifier.verify(design.channel, design)
        write_json(report_json, report_to_dump(report, trace))
    if out:
        manifest = build_manifest(
            "slope",
            {'design': str(design_json), 'snr_db': list(snr_db)},
            seed=artifact.manifest.seed,
            outputs=[out],
            timestamp=timestamp,
        )
        frame = rows_to_frame(zip(trace.snr_db, trace.sum_rate_bits), ("snr_db", "sum_rate_bits"))
        write_csv(out, frame, manifest)
    return EXIT_OK


def _batch_unit(
    designer: TransceiverDesigner,
    verifier: DesignVerifier,
    strategy: Strategy,
    M: int,
    N: int,
    K: int,
    seed: int,
    settings: Settings,
) -> BatchRow:
    started = time.perf_counter()
    try:
        channel = _sample(M, N, K, seed, settings)
        design = designer.design(channel, strategy, seed)
        report = verifier.verify(design.channel, design)
    except RelayDofError as error:
        logger.warning("Batch seed failed", extra={'seed': seed, 'reason': str(error)})
        return BatchRow(
            seed=seed,
            kind=strategy.kind.value,
            d=strategy.d,
            passed=False,
            retries=getattr(error, 'attempts', 0),
            max_residual=math.nan,
            min_rank=0,
            seconds=time.perf_counter() - started,
        )
    return BatchRow(
        seed=seed,
        kind=strategy.kind.value,
        d=strategy.d,
        passed=report.passed,
        retries=design.retries_used,
        max_residual=report.max_residual,
        min_rank=min(report.decodability_ranks),
        seconds=time.perf_counter() - started,
    )


def cmd_batch(
    M: int,
    N: int,
    K: int,
    seed: int,
    seeds: int,
    out: Optional[str] = None,
    extend: bool = False,
    timestamp: bool = True,
    settings: Optional[Settings] = None,
) -> int:
    settings = settings or get_settings()
    if seeds < 1:
        raise InvalidParameterError(f"seeds must be positive, got {seeds}")
    designer = get_designer(settings)
    verifier = get_verifier(settings)
    strategy = designer.select_strategy(M, N, K, allow_extension=extend)

    started = time.perf_counter()
    progress = tqdm(range(seed, seed + seeds), desc="batch", file=sys.stderr, disable=not sys.stderr.isatty())
    rows: List[BatchRow] = Parallel(n_jobs=settings.threads, prefer="threads")(
        delayed(_batch_unit)(designer, verifier, strategy, M, N, K, s, settings) for s in progress
    )
    log_performance("batch_seconds", time.perf_counter() - started, {'seeds': seeds, 'threads': settings.threads})

    manifest = build_manifest(
        "batch",
        {'M': M, 'N': N, 'K': K, 'seeds': seeds, 'extend': extend},
        seed=seed,
        outputs=[out] if out else [],
        timestamp=timestamp,
    )
    passed = sum(1 for row in rows if row.passed)
    if out:
        write_csv(out, rows_to_frame(rows, BatchRow._fields), manifest)
    _print_fields({
        'kind': strategy.kind.value,
        'd': strategy.d,
        'passed': f"{passed}/{len(rows)}",
        'median_retries': statistics.median(row.retries for row in rows),
    })
    return EXIT_OK if passed == len(rows) else EXIT_DEGENERATE
