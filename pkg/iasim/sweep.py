"""Scenario sweeps: config parsing, grid evaluation, CSV output and comparison."""

import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, TextIO, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, ValidationInfo, field_validator

from .allocator import allocate, joint_optimize, select_mode
from .config import config
from .mcsim import estimate_avg_rate
from .models import AllocationScheme, McMode, SweepRow
from .netmodel import InfeasibleNetwork, NetworkScenario, StreamProfile, require_feasible
from .rate_engine import sum_rate
from .scenarios import snr_to_power
from .utils import hash_text, timed

logger = logging.getLogger(__name__)

CSV_COLUMNS = [
    "scenario_id",
    "snr_db",
    "scheme",
    "mode_d",
    "B_total",
    "rate_theory_bps_hz",
    "rate_mc_bps_hz",
    "ci95_halfwidth",
    "trials",
    "seed",
]


class ConfigError(Exception):
    """Sweep configuration could not be parsed or validated."""

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class KeyMismatch(Exception):
    """Rows of two result files do not line up."""
    pass


class SweepScheme(str, Enum):
    """Schemes a sweep can evaluate."""
    EAS = "EAS"
    RIMS = "RIMS"
    GREEDY = "GREEDY"
    JOINT = "JOINT"

    @property
    def allocation(self) -> Optional[AllocationScheme]:
        return {
            SweepScheme.EAS: AllocationScheme.EQUAL,
            SweepScheme.RIMS: AllocationScheme.RESIDUAL_MIN,
            SweepScheme.GREEDY: AllocationScheme.GREEDY,
        }.get(self)


class SweepConfig(BaseModel):
    """One sweep: a network, the grids to cover and how to evaluate them."""
    model_config = ConfigDict(frozen=True)

    scenario_id: str = Field("scenario", description="Identifier written to every row")
    K: int = Field(..., ge=1, description="Number of links")
    nt: int = Field(..., ge=1, description="Transmit antennas")
    nr: int = Field(..., ge=1, description="Receive antennas")
    sigma2: float = Field(1.0, gt=0, description="Noise power")
    alpha: Tuple[Tuple[float, ...], ...] = Field(..., description="Path loss matrix rows")
    B_total: int = Field(..., ge=0, description="Feedback bits per receiver")
    snr_grid_db: Tuple[float, ...] = Field(..., min_length=1, description="SNR points in dB")
    b_grid: Optional[Tuple[int, ...]] = Field(None, description="Feedback budgets to sweep")
    schemes: Tuple[SweepScheme, ...] = Field(
        (SweepScheme.EAS, SweepScheme.RIMS, SweepScheme.GREEDY), min_length=1
    )
    mode_d: Optional[int] = Field(None, ge=1, description="Fixed symmetric mode, None selects")
    trials: int = Field(0, ge=0, description="Monte Carlo trials, 0 for theory only")
    seed: int = Field(0, ge=0, description="Base seed")
    mc_mode: McMode = Field(McMode.CELL_APPROX, description="Monte Carlo feedback model")
    output: Optional[str] = Field(None, description="CSV output path")

    @field_validator("alpha")
    @classmethod
    def _check_alpha(cls, value, info: ValidationInfo):
        K = info.data.get("K")
        if K is not None and (len(value) != K or any(len(row) != K for row in value)):
            raise ValueError(f"alpha needs {K} rows of {K} values")
        return value

    @field_validator("b_grid")
    @classmethod
    def _check_b_grid(cls, value):
        if value is not None and any(b < 0 for b in value):
            raise ValueError("b_grid entries must be nonnegative")
        return value

    def scenario(self, snr_db: float, B_total: Optional[int] = None) -> NetworkScenario:
        return NetworkScenario(
            K=self.K,
            nt=self.nt,
            nr=self.nr,
            P=snr_to_power(snr_db, self.sigma2),
            sigma2=self.sigma2,
            alpha=self.alpha,
            B_total=self.B_total if B_total is None else B_total,
        )

    @property
    def budgets(self) -> Tuple[int, ...]:
        return self.b_grid if self.b_grid else (self.B_total,)


_SCALAR_KEYS = {
    "scenario_id",
    "K",
    "nt",
    "nr",
    "sigma2",
    "B_total",
    "snr_grid_db",
    "b_grid",
    "schemes",
    "mode",
    "trials",
    "seed",
    "mc_mode",
    "output",
}


def _unquote(value: str) -> str:
    value = value.strip()
    if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
        return value[1:-1].strip()
    return value


def _numbers(text: str) -> List[str]:
    return [tok for tok in text.replace(",", " ").split() if tok]


def _parse_grid(text: str) -> List[float]:
    """Either 'start:stop:step' (inclusive) or a list of values."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("range must be start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("range step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + n * step, 10) for n in range(max(count, 0))]
    return [float(tok) for tok in _numbers(text)]


def parse_config_text(text: str) -> SweepConfig:
    """Parse the flat key-value sweep format."""
    values: Dict[str, object] = {}
    lines: Dict[str, int] = {}
    rows: Dict[int, Tuple[int, List[float]]] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, _, value = line.partition("=")
        key, value = key.strip(), _unquote(value)
        lines[key] = lineno

        try:
            if key.startswith("alpha.row"):
                index = int(key[len("alpha.row"):])
                rows[index] = (lineno, [float(tok) for tok in _numbers(value)])
            elif key not in _SCALAR_KEYS:
                raise ConfigError(f"unknown key '{key}'", line=lineno, field=key)
            elif key == "snr_grid_db":
                values[key] = _parse_grid(value)
            elif key == "b_grid":
                values[key] = [int(tok) for tok in _numbers(value)]
            elif key == "schemes":
                values[key] = [SweepScheme(tok.upper()) for tok in _numbers(value)]
            elif key == "mode":
                if value.lower() == "select":
                    values["mode_d"] = None
                elif value.lower().startswith("fixed:"):
                    values["mode_d"] = int(value.split(":", 1)[1])
                else:
                    raise ValueError("mode must be 'select' or 'fixed:<d>'")
                lines["mode_d"] = lineno
            elif key == "mc_mode":
                values[key] = McMode(value.lower())
            else:
                values[key] = value
        except ConfigError:
            raise
        except ValueError as e:
            raise ConfigError(str(e), line=lineno, field=key) from e

    if rows:
        expected = list(range(len(rows)))
        if sorted(rows) != expected:
            raise ConfigError(
                f"alpha rows must be numbered 0..{len(rows) - 1}", line=max(r[0] for r in rows.values()), field="alpha"
            )
        values["alpha"] = [rows[i][1] for i in expected]
        lines["alpha"] = rows[0][0]

    try:
        return SweepConfig(**values)
    except ValidationError as e:
        err = e.errors()[0]
        name = str(err["loc"][0]) if err["loc"] else None
        raise ConfigError(err["msg"], line=lines.get(name or ""), field=name) from e


def load_config(path: Union[str, Path]) -> SweepConfig:
    """Read a sweep configuration file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    logger.info("loaded %s (%s)", path, hash_text(text))
    return parse_config_text(text)


@dataclass(frozen=True)
class _Point:
    index: int
    snr_db: float
    B_total: int
    scheme: SweepScheme


def _row_seed(base: int, index: int) -> int:
    return int(np.random.SeedSequence([base, index]).generate_state(1)[0])


def _infeasible_row(cfg: SweepConfig, point: _Point, error: InfeasibleNetwork) -> SweepRow:
    logger.error(
        "%s at %g dB, B=%d, %s: %s",
        cfg.scenario_id,
        point.snr_db,
        point.B_total,
        point.scheme.value,
        error,
    )
    return SweepRow(
        scenario_id=cfg.scenario_id,
        snr_db=point.snr_db,
        scheme=point.scheme.value,
        mode_d=cfg.mode_d or 0,
        B_total=point.B_total,
        rate_theory_bps_hz=math.nan,
        trials=cfg.trials,
        seed=_row_seed(cfg.seed, point.index),
        error=str(error),
    )


def _evaluate_point(cfg: SweepConfig, point: _Point, timings: Dict[str, int]) -> SweepRow:
    """One CSV row; an infeasible point yields a row carrying the error."""
    try:
        return _evaluate_feasible(cfg, point, timings)
    except InfeasibleNetwork as e:
        return _infeasible_row(cfg, point, e)


def _evaluate_feasible(cfg: SweepConfig, point: _Point, timings: Dict[str, int]) -> SweepRow:
    scenario = cfg.scenario(point.snr_db, point.B_total)

    with timed(timings, "allocation"):
        if point.scheme == SweepScheme.JOINT:
            result = joint_optimize(scenario)
            streams, split = result.streams, result.split
        else:
            policy = point.scheme.allocation
            assert policy is not None
            if cfg.mode_d is None:
                streams = select_mode(scenario, policy)
            else:
                streams = StreamProfile.symmetric(scenario.K, cfg.mode_d)
                require_feasible(streams, scenario)
            split = allocate(policy, scenario, streams)

    with timed(timings, "theory"):
        theory = sum_rate(scenario, streams, split).sum

    row = SweepRow(
        scenario_id=cfg.scenario_id,
        snr_db=point.snr_db,
        scheme=point.scheme.value,
        mode_d=streams.d[0],
        B_total=point.B_total,
        rate_theory_bps_hz=theory,
        trials=cfg.trials,
        seed=_row_seed(cfg.seed, point.index),
    )
    if cfg.trials > 0:
        with timed(timings, "monte_carlo"):
            mc = estimate_avg_rate(scenario, streams, split, cfg.trials, cfg.mc_mode, seed=row.seed)
        row = row.model_copy(update={"rate_mc_bps_hz": mc.sum, "ci95_halfwidth": mc.sum_ci95})
    return row


def run_sweep(cfg: SweepConfig, max_workers: Optional[int] = None) -> List[SweepRow]:
    """Evaluate every (snr, budget, scheme) point of the sweep."""
    points = [
        _Point(index=n, snr_db=snr, B_total=B, scheme=scheme)
        for n, (snr, B, scheme) in enumerate(
            (snr, B, scheme)
            for snr in cfg.snr_grid_db
            for B in cfg.budgets
            for scheme in cfg.schemes
        )
    ]
    per_point: List[Dict[str, int]] = [{} for _ in points]
    workers = max_workers or config.max_workers
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(lambda p: _evaluate_point(cfg, p, per_point[p.index]), points))

    timings: Dict[str, int] = {}
    for bucket in per_point:
        for key, ms in bucket.items():
            timings[key] = timings.get(key, 0) + ms

    order = {scheme: n for n, scheme in enumerate(cfg.schemes)}
    rows.sort(key=lambda r: (r.snr_db, r.B_total, order[SweepScheme(r.scheme)]))
    failed = sum(1 for r in rows if r.error)
    if failed:
        logger.warning("sweep %s: %d of %d rows infeasible", cfg.scenario_id, failed, len(rows))
    logger.info("sweep %s: %d rows, timings %s", cfg.scenario_id, len(rows), timings)
    return rows


def _fmt(value: Optional[float]) -> str:
    if value is None:
        return ""
    if math.isinf(value):
        return "inf"
    return f"{value:.12g}"


def write_csv(rows: Sequence[SweepRow], out: Union[str, Path, TextIO]) -> None:
    """Write rows with a header, UTF-8 and LF line endings."""
    if isinstance(out, (str, Path)):
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            write_csv(rows, f)
        return
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow([
            r.scenario_id,
            _fmt(r.snr_db),
            r.scheme,
            r.mode_d,
            r.B_total,
            _fmt(r.rate_theory_bps_hz),
            _fmt(r.rate_mc_bps_hz),
            _fmt(r.ci95_halfwidth),
            r.trials,
            r.seed,
        ])


def rows_to_csv_text(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    write_csv(rows, buf)
    return buf.getvalue()


def read_csv(path: Union[str, Path]) -> List[SweepRow]:
    """Load rows written by ``write_csv``."""
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != CSV_COLUMNS:
            raise ConfigError(f"unexpected CSV header {reader.fieldnames}", field=str(path))
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            try:
                rows.append(SweepRow(
                    scenario_id=rec["scenario_id"],
                    snr_db=float(rec["snr_db"]),
                    scheme=rec["scheme"],
                    mode_d=int(rec["mode_d"]),
                    B_total=int(rec["B_total"]),
                    rate_theory_bps_hz=float(rec["rate_theory_bps_hz"]),
                    rate_mc_bps_hz=float(rec["rate_mc_bps_hz"]) if rec["rate_mc_bps_hz"] else None,
                    ci95_halfwidth=float(rec["ci95_halfwidth"]) if rec["ci95_halfwidth"] else None,
                    trials=int(rec["trials"]),
                    seed=int(rec["seed"]),
                ))
            except (ValueError, ValidationError) as e:
                raise ConfigError(str(e), line=lineno, field=str(path)) from e
    return rows


@dataclass
class SchemeDeviation:
    """Relative deviation statistics of one scheme."""
    max_rel: float = 0.0
    mean_rel: float = 0.0
    count: int = 0


@dataclass
class CompareSummary:
    """Outcome of comparing two result files."""
    per_scheme: Dict[str, SchemeDeviation] = field(default_factory=dict)
    threshold_pct: float = 5.0

    @property
    def max_rel(self) -> float:
        return max((d.max_rel for d in self.per_scheme.values()), default=0.0)

    @property
    def exceeded(self) -> bool:
        return self.max_rel * 100.0 > self.threshold_pct


def _row_key(r: SweepRow) -> Tuple[str, float, str, int, int]:
    return (r.scenario_id, r.snr_db, r.scheme, r.mode_d, r.B_total)


def compare_report(
    theory_rows: Sequence[SweepRow],
    mc_rows: Sequence[SweepRow],
    threshold_pct: Optional[float] = None,
) -> CompareSummary:
    """Relative deviation of the second file's rates from the first file's theory rates.

    The second file contributes its Monte Carlo column, or its theory column
    for rows without one.
    """
    threshold = config.compare_threshold_pct if threshold_pct is None else threshold_pct
    reference = {_row_key(r): r for r in theory_rows}
    other = {_row_key(r): r for r in mc_rows}
    if len(reference) != len(theory_rows) or len(other) != len(mc_rows):
        raise KeyMismatch("duplicate row keys")
    if reference.keys() != other.keys():
        missing = sorted(reference.keys() ^ other.keys())
        raise KeyMismatch(f"rows do not line up, first unmatched key {missing[0]}")

    deviations: Dict[str, List[float]] = {}
    skipped = 0
    for key, ref in reference.items():
        row = other[key]
        value = row.rate_mc_bps_hz if row.rate_mc_bps_hz is not None else row.rate_theory_bps_hz
        base = ref.rate_theory_bps_hz
        # infeasible points carry no rate
        if math.isnan(base) or math.isnan(value):
            skipped += 1
            continue
        if base == 0:
            rel = 0.0 if value == 0 else math.inf
        else:
            rel = abs(value - base) / abs(base)
        deviations.setdefault(ref.scheme, []).append(rel)

    summary = CompareSummary(threshold_pct=threshold)
    for scheme, rels in deviations.items():
        summary.per_scheme[scheme] = SchemeDeviation(
            max_rel=max(rels), mean_rel=float(np.mean(rels)), count=len(rels)
        )
    if skipped:
        logger.warning("skipped %d rows without a rate", skipped)
    return summary
