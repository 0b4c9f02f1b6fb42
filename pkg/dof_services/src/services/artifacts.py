"""
JSON and CSV documents emitted by the command line.

Complex matrices are stored as row-major lists of [re, im] pairs. Channel
"H" blocks are listed in (k, j) order and "G" blocks in (j, k) order;
their shapes follow from the embedded config and `rx_antennas`.
"""
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Type, TypeVar, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, ValidationError, model_validator

from .. import __version__
from ..exceptions import ArtifactIOError, RelayDofError
from .channel import USERS, ChannelRealization, ExtensionPlan, SystemConfig
from .designer import Strategy, StrategyKind, TransceiverDesign
from .verifier import RateTrace, VerificationReport

Entry = Tuple[float, float]
Model = TypeVar("Model", bound=BaseModel)
CSV_FLOAT_FORMAT = "%.12g"


class RunManifest(BaseModel):
    subcommand: str
    parameters: Dict[str, Any] = Field(default_factory=dict)
    seed: Optional[int] = None
    outputs: List[str] = Field(default_factory=list)
    tool_version: str = __version__
    created_at: Optional[str] = None


def build_manifest(
    subcommand: str,
    parameters: Dict[str, Any],
    seed: Optional[int] = None,
    outputs: Sequence[str] = (),
    timestamp: bool = True,
) -> RunManifest:
    return RunManifest(
        subcommand=subcommand,
        parameters=parameters,
        seed=seed,
        outputs=[str(o) for o in outputs],
        created_at=datetime.now(timezone.utc).isoformat() if timestamp else None,
    )


class ConfigDump(BaseModel):
    M: int
    N: int
    K: int
    d: int = 0


class ExtensionDump(BaseModel):
    L: int
    M_star: str

    def to_plan(self) -> ExtensionPlan:
        return ExtensionPlan(L=self.L, M_star=Fraction(self.M_star))


class MatrixDump(BaseModel):
    rows: int = Field(ge=0)
    cols: int = Field(ge=0)
    entries: List[Entry]

    @model_validator(mode="after")
    def check_size(self) -> "MatrixDump":
        if len(self.entries) != self.rows * self.cols:
            raise ValueError(f"{len(self.entries)} entries for a {self.rows}x{self.cols} matrix")
        return self


class ChannelDump(BaseModel):
    config: ConfigDump
    seed: int
    H: List[List[Entry]]
    G: List[List[Entry]]
    rx_antennas: Optional[int] = None
    relay_noise: List[float] = Field(default_factory=list)
    user_noise: List[float] = Field(default_factory=list)
    extension: Optional[ExtensionDump] = None


class StrategyDump(BaseModel):
    kind: StrategyKind
    d: int
    d_prime: int
    N_prime: Optional[int] = None
    disablement: Optional[Tuple[int, int]] = None
    extension: Optional[ExtensionDump] = None
    d_sum: float = 0.0


class DesignDump(BaseModel):
    strategy: StrategyDump
    channel: ChannelDump
    user_precoders: Dict[str, MatrixDump]
    relay_precoders: List[MatrixDump]
    postprocessors: List[MatrixDump]
    precoder_split: int
    retries_used: int = 0


class SlopeDump(BaseModel):
    snr_db: List[float]
    sum_rate_bits: List[float]
    slope: float
    expected: float
    deviation: float
    dof_per_use: float


class ReportDump(BaseModel):
    residuals: List[float]
    ranks: List[int]
    passed: bool
    retries_used: int = 0
    slope: Optional[SlopeDump] = None


class DesignArtifact(BaseModel):
    manifest: RunManifest
    channel: ChannelDump
    design: DesignDump
    report: ReportDump


class FormulaRecord(BaseModel):
    M: int
    N: int
    K: int
    upper: float
    achievable: float
    region: Optional[str] = None
    symmetric: float
    normalized: float


# ----------------------------------------------------------------------
# Matrix and channel conversion
# ----------------------------------------------------------------------
def _entries(matrix: np.ndarray) -> List[Entry]:
    flat = np.asarray(matrix, dtype=np.complex128).ravel(order="C")
    return [(float(z.real), float(z.imag)) for z in flat]


def _from_entries(entries: Sequence[Entry], rows: int, cols: int) -> np.ndarray:
    if len(entries) != rows * cols:
        raise ArtifactIOError(f"{len(entries)} entries cannot fill a {rows}x{cols} block")
    if rows * cols == 0:
        return np.zeros((rows, cols), dtype=np.complex128)
    pairs = np.asarray(entries, dtype=float)
    return (pairs[:, 0] + 1j * pairs[:, 1]).reshape(rows, cols)


def matrix_to_dump(matrix: np.ndarray) -> MatrixDump:
    rows, cols = matrix.shape
    return MatrixDump(rows=rows, cols=cols, entries=_entries(matrix))


def matrix_from_dump(dump: MatrixDump) -> np.ndarray:
    return _from_entries(dump.entries, dump.rows, dump.cols)


def _extension_dump(plan: Optional[ExtensionPlan]) -> Optional[ExtensionDump]:
    if plan is None:
        return None
    return ExtensionDump(L=plan.L, M_star=str(plan.M_star))


def channel_to_dump(ch: ChannelRealization) -> ChannelDump:
    M, N, K, d = ch.config.M, ch.config.N, ch.config.K, ch.config.d
    return ChannelDump(
        config=ConfigDump(M=M, N=N, K=K, d=d),
        seed=ch.seed,
        H=[_entries(ch.uplink[(k, j)]) for k in range(K) for j in range(USERS)],
        G=[_entries(ch.downlink[(j, k)]) for j in range(USERS) for k in range(K)],
        rx_antennas=ch.rx_antennas,
        relay_noise=list(ch.relay_noise),
        user_noise=list(ch.user_noise),
        extension=_extension_dump(ch.extension),
    )


def channel_from_dump(dump: ChannelDump) -> ChannelRealization:
    config = SystemConfig(M=dump.config.M, N=dump.config.N, K=dump.config.K, d=dump.config.d)
    M, N, K = config.M, config.N, config.K
    rx = dump.rx_antennas if dump.rx_antennas is not None else N
    if len(dump.H) != K * USERS or len(dump.G) != K * USERS:
        raise ArtifactIOError(f"channel dump must hold {K * USERS} H and G blocks each")
    uplink = {}
    downlink = {}
    for index, (k, j) in enumerate((k, j) for k in range(K) for j in range(USERS)):
        uplink[(k, j)] = _from_entries(dump.H[index], rx, M)
    for index, (j, k) in enumerate((j, k) for j in range(USERS) for k in range(K)):
        downlink[(j, k)] = _from_entries(dump.G[index], M, N)
    return ChannelRealization(
        config=config,
        uplink=uplink,
        downlink=downlink,
        seed=dump.seed,
        rx_antennas=rx,
        relay_noise=tuple(dump.relay_noise),
        user_noise=tuple(dump.user_noise),
        extension=dump.extension.to_plan() if dump.extension else None,
    )


# ----------------------------------------------------------------------
# Designs and reports
# ----------------------------------------------------------------------
def strategy_to_dump(strategy: Strategy) -> StrategyDump:
    return StrategyDump(
        kind=strategy.kind,
        d=strategy.d,
        d_prime=strategy.d_prime,
        N_prime=strategy.N_prime,
        disablement=strategy.disablement,
        extension=_extension_dump(strategy.extension),
        d_sum=strategy.d_sum,
    )


def strategy_from_dump(dump: StrategyDump) -> Strategy:
    return Strategy(
        kind=dump.kind,
        d=dump.d,
        d_prime=dump.d_prime,
        N_prime=dump.N_prime,
        disablement=tuple(dump.disablement) if dump.disablement else None,
        extension=dump.extension.to_plan() if dump.extension else None,
    )


def design_to_dump(design: TransceiverDesign) -> DesignDump:
    return DesignDump(
        strategy=strategy_to_dump(design.strategy),
        channel=channel_to_dump(design.channel),
        user_precoders={f"{j},{t}": matrix_to_dump(U) for (j, t), U in sorted(design.user_precoders.items())},
        relay_precoders=[matrix_to_dump(F) for F in design.relay_precoders],
        postprocessors=[matrix_to_dump(V) for V in design.postprocessors],
        precoder_split=design.precoder_split,
        retries_used=design.retries_used,
    )


def _pair_key(key: str) -> Tuple[int, int]:
    try:
        j, t = (int(part) for part in key.split(","))
    except ValueError:
        raise ArtifactIOError(f"precoder key {key!r} is not of the form 'j,t'")
    return j, t


def design_from_dump(dump: DesignDump) -> TransceiverDesign:
    return TransceiverDesign(
        strategy=strategy_from_dump(dump.strategy),
        channel=channel_from_dump(dump.channel),
        user_precoders={_pair_key(key): matrix_from_dump(U) for key, U in dump.user_precoders.items()},
        relay_precoders=[matrix_from_dump(F) for F in dump.relay_precoders],
        postprocessors=[matrix_from_dump(V) for V in dump.postprocessors],
        precoder_split=dump.precoder_split,
        retries_used=dump.retries_used,
    )


def slope_to_dump(trace: RateTrace) -> SlopeDump:
    return SlopeDump(
        snr_db=trace.snr_db,
        sum_rate_bits=trace.sum_rate_bits,
        slope=trace.slope_estimate,
        expected=trace.expected_dof,
        deviation=trace.deviation,
        dof_per_use=trace.dof_per_use,
    )


def report_to_dump(report: VerificationReport, trace: Optional[RateTrace] = None) -> ReportDump:
    return ReportDump(
        residuals=list(report.neutralization_residuals),
        ranks=list(report.decodability_ranks),
        passed=report.passed,
        retries_used=report.retries_used,
        slope=slope_to_dump(trace) if trace is not None else None,
    )


# ----------------------------------------------------------------------
# File I/O
# ----------------------------------------------------------------------
def write_json(path: Union[str, Path], document: BaseModel) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(document.model_dump_json(indent=2) + "\n", encoding="utf-8")
    except OSError as e:
        raise ArtifactIOError(f"cannot write {path}: {e}")
    return path


def read_json(path: Union[str, Path], model: Type[Model]) -> Model:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ArtifactIOError(f"cannot read {path}: {e}")
    try:
        return model.model_validate_json(text)
    except ValidationError as e:
        raise ArtifactIOError(f"malformed {model.__name__} in {path}: {e.error_count()} validation error(s)")


def read_design_artifact(path: Union[str, Path]) -> Tuple[DesignArtifact, TransceiverDesign]:
    artifact = read_json(path, DesignArtifact)
    try:
        design = design_from_dump(artifact.design)
    except ArtifactIOError:
        raise
    except RelayDofError as e:
        raise ArtifactIOError(f"inconsistent design in {path}: {e}")
    return artifact, design


def rows_to_frame(rows: Sequence[Any], columns: Sequence[str]) -> pd.DataFrame:
    return pd.DataFrame([tuple(r) for r in rows], columns=list(columns))


def write_csv(
    path: Optional[Union[str, Path]],
    frame: pd.DataFrame,
    manifest: Optional[RunManifest] = None,
) -> Optional[Path]:
    """
    Write `frame` with 12 significant digits. Without a path the CSV goes to
    stdout. The manifest, when given, lands next to the file as
    ``<name>.manifest.json`` so the CSV header stays untouched.
    """
    if path is None:
        print(frame.to_csv(index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n"), end="")
        return None
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    except OSError as e:
        raise ArtifactIOError(f"cannot write {path}: {e}")
    if manifest is not None:
        outputs = manifest.outputs or [str(path)]
        write_json(manifest_path(path), manifest.model_copy(update={'outputs': outputs}))
    return path


def manifest_path(csv_path: Union[str, Path]) -> Path:
    csv_path = Path(csv_path)
    return csv_path.with_name(csv_path.name + ".manifest.json")
