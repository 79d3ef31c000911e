"""Monthly inflow ingestion, statistics, and synthetic streamflow generation.

Volumes are TAF (thousand acre-feet). Month indexing follows the water year:
October has index 0 and September index 11, and water year Y spans
Oct 1 of calendar year Y-1 through Sep 30 of calendar year Y.

The synthetic generator bootstraps whitened standardized log-residuals by
month and re-imposes the historical correlation structure through Cholesky
factors of the within-year correlation matrix and of the year-crossing
(shifted July-June window) correlation matrix, so that synthetic flows stay
positive and the seasonal dependence of the record is preserved.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from .errors import (
    ConfigInvalid,
    DegenerateStatistics,
    InsufficientYears,
    MalformedRow,
    NegativeFlow,
    NonContiguousMonths,
    NonPositiveFlowUnderLog,
    NotPositiveDefinite,
)

MONTHS_PER_YEAR = 12
MONTH_NAMES = ("oct", "nov", "dec", "jan", "feb", "mar",
               "apr", "may", "jun", "jul", "aug", "sep")

# 1 cfs sustained for one day, in TAF: 86400 s/day / 43560 ft^2/acre / 1000
CFS_DAY_TO_TAF = 86400.0 / 43560.0 / 1000.0

RNG_KIND = "philox"  # counter-based 64-bit generator, recorded in run metadata


def make_rng(seed: int) -> np.random.Generator:
    """Seeded counter-based generator used for every stochastic draw."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def month_index_from_calendar(month: int) -> int:
    """Calendar month 1-12 -> water-year index with October = 0."""
    if not 1 <= month <= 12:
        raise ValueError(f"calendar month out of range: {month}")
    return (month - 10) % 12


def calendar_from_index(water_year: int, index: int) -> tuple[int, int]:
    """Water-year month index -> (calendar year, calendar month 1-12)."""
    month = (index + 9) % 12 + 1
    year = water_year - 1 if index <= 2 else water_year
    return year, month


def cfs_to_taf(rate: float, days: float) -> float:
    """Volume in TAF of a flow `rate` (cfs) sustained for `days` days."""
    if rate < 0:
        raise ValueError("flow rate must be >= 0")
    if days <= 0:
        raise ValueError("day count must be > 0")
    return rate * days * CFS_DAY_TO_TAF


def taf_to_cfs(volume: float, days: float) -> float:
    """Mean flow in cfs that delivers `volume` TAF over `days` days."""
    if days <= 0:
        raise ValueError("day count must be > 0")
    return volume / (days * CFS_DAY_TO_TAF)


@dataclass
class FlowSeries:
    """Ordered monthly inflow volumes [TAF/month].

    start_year/start_month locate the first value; partial years are fine
    for ingestion, while statistics and generation work on whole years.
    """

    start_year: int
    start_month: int  # 0..11, October = 0
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or self.values.size == 0:
            raise ValueError("values must be a nonempty 1-D array")
        if not 0 <= self.start_month < MONTHS_PER_YEAR:
            raise ValueError("start_month must be in [0, 11]")
        if np.any(self.values < 0):
            raise NegativeFlow("flow series contains negative values")

    def __len__(self) -> int:
        return int(self.values.size)

    def month_index_at(self, k: int) -> int:
        return (self.start_month + k) % MONTHS_PER_YEAR

    def water_year_at(self, k: int) -> int:
        return self.start_year + (self.start_month + k) // MONTHS_PER_YEAR

    @property
    def n_whole_years(self) -> int:
        if self.start_month != 0:
            return 0
        return len(self) // MONTHS_PER_YEAR

    def year_matrix(self) -> np.ndarray:
        """Whole-year view, shape (n_years, 12); requires October alignment."""
        if self.start_month != 0 or len(self) % MONTHS_PER_YEAR != 0:
            raise InsufficientYears(
                "series is not aligned to whole water years; "
                "use trim_to_water_years() first"
            )
        return self.values.reshape(-1, MONTHS_PER_YEAR)


def trim_to_water_years(series: FlowSeries) -> FlowSeries:
    """Largest October-aligned whole-year subseries of `series`."""
    lead = (-series.start_month) % MONTHS_PER_YEAR
    n_years = (len(series) - lead) // MONTHS_PER_YEAR
    if n_years < 1:
        raise InsufficientYears("series contains no whole water year")
    values = series.values[lead:lead + n_years * MONTHS_PER_YEAR]
    return FlowSeries(series.water_year_at(lead), 0, values.copy())


def load_flow_csv(text: str | TextIO) -> FlowSeries:
    """Parse a `year,month,flow_taf` CSV into a FlowSeries.

    Calendar months 1-12 in the file; `#` comment lines are skipped.
    Rows must advance by exactly one calendar month.
    """
    stream = io.StringIO(text) if isinstance(text, str) else text
    header = None
    rows: list[tuple[int, int, float]] = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if header is None:
            header = [c.strip().lower() for c in line.split(",")]
            if header != ["year", "month", "flow_taf"]:
                raise MalformedRow(
                    f"line {lineno}: expected header 'year,month,flow_taf', got {line!r}"
                )
            continue
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != 3:
            raise MalformedRow(f"line {lineno}: expected 3 fields, got {len(cells)}")
        try:
            year, month, flow = int(cells[0]), int(cells[1]), float(cells[2])
        except ValueError as exc:
            raise MalformedRow(f"line {lineno}: {exc}") from None
        if not 1 <= month <= 12:
            raise MalformedRow(f"line {lineno}: calendar month out of range: {month}")
        if flow < 0:
            raise NegativeFlow(f"line {lineno}: negative flow {flow}")
        if rows:
            py, pm, _ = rows[-1]
            ny, nm = (py, pm + 1) if pm < 12 else (py + 1, 1)
            if (year, month) != (ny, nm):
                raise NonContiguousMonths(
                    f"line {lineno}: expected {ny}-{nm:02d} after {py}-{pm:02d}, "
                    f"got {year}-{month:02d}"
                )
        rows.append((year, month, flow))
    if header is None or not rows:
        raise MalformedRow("no data rows found")
    first_year, first_month, _ = rows[0]
    start_month = month_index_from_calendar(first_month)
    start_year = first_year + 1 if first_month >= 10 else first_year
    return FlowSeries(start_year, start_month, np.array([r[2] for r in rows]))


def write_flow_csv(series: FlowSeries, stream: TextIO, seed: int | None = None) -> None:
    """Write a FlowSeries in the same CSV dialect load_flow_csv reads."""
    if seed is not None:
        stream.write(f"# seed={seed}\n")
    stream.write("year,month,flow_taf\n")
    for k, value in enumerate(series.values):
        year, month = calendar_from_index(series.water_year_at(k), series.month_index_at(k))
        stream.write(f"{year},{month},{float(value)!r}\n")


@dataclass
class MonthlyStats:
    """Per-month moments of (log) flows plus the two correlation matrices.

    `cross_corr` is taken over the shifted July-June window: position 0 is
    July of a water year and position 11 is June of the following one, so
    entries pair months across the year boundary.
    """

    log_mean: np.ndarray        # (12,)
    log_std: np.ndarray         # (12,)
    within_corr: np.ndarray     # (12, 12)
    cross_corr: np.ndarray      # (12, 12)
    n_years: int
    log_transform: bool = True


def _corrcoef(columns: np.ndarray) -> np.ndarray:
    corr = np.corrcoef(columns, rowvar=False)
    corr = 0.5 * (corr + corr.T)
    np.fill_diagonal(corr, 1.0)
    return corr


def monthly_statistics(series: FlowSeries, log_transform: bool = True) -> MonthlyStats:
    """Per-month moments and correlation matrices of a whole-year record.

    Requires at least 3 whole water years aligned to October. With the
    log-transform on (the default) every flow must be strictly positive.
    """
    matrix = series.year_matrix()
    n_years = matrix.shape[0]
    if n_years < 3:
        raise InsufficientYears(f"need >= 3 whole water years, have {n_years}")
    if log_transform:
        if np.any(matrix <= 0):
            raise NonPositiveFlowUnderLog(
                "log-transform requires strictly positive flows"
            )
        y = np.log(matrix)
    else:
        y = matrix.astype(np.float64)
    mean = y.mean(axis=0)
    std = y.std(axis=0, ddof=1)
    if np.any(std <= 0):
        dead = [MONTH_NAMES[i] for i in np.nonzero(std <= 0)[0]]
        raise DegenerateStatistics(
            f"zero variance across years for month(s): {', '.join(dead)}"
        )
    z = (y - mean) / std
    # Shifted July-June window: [Jul..Sep of year k, Oct..Jun of year k+1].
    shifted = np.concatenate([z[:-1, 9:12], z[1:, 0:9]], axis=1)
    return MonthlyStats(
        log_mean=mean,
        log_std=std,
        within_corr=_corrcoef(z),
        cross_corr=_corrcoef(shifted),
        n_years=n_years,
        log_transform=log_transform,
    )


def cholesky_factor(matrix: np.ndarray, jitter: float = 1e-10, attempts: int = 3) -> np.ndarray:
    """Lower-triangular L with L @ L.T == matrix.

    Sample correlation matrices are often semidefinite at machine precision,
    so up to `attempts` diagonal jitters of k * jitter are tried before
    giving up with NotPositiveDefinite.
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got shape {m.shape}")
    if not np.allclose(m, m.T, rtol=0.0, atol=1e-12):
        raise ValueError("matrix must be symmetric")
    eye = np.eye(m.shape[0])
    for k in range(attempts + 1):
        try:
            return np.linalg.cholesky(m + (k * jitter) * eye)
        except np.linalg.LinAlgError:
            continue
    raise NotPositiveDefinite(
        f"matrix not positive definite after {attempts} jitter attempts"
    )


@dataclass
class SyntheticGenConfig:
    """How many years to generate and from what seed."""

    years: int
    seed: int
    log_transform: bool = True

    def __post_init__(self) -> None:
        if self.years < 1:
            raise ConfigInvalid(f"years must be >= 1, got {self.years}")


def generate_synthetic_flows(
    stats: MonthlyStats, cfg: SyntheticGenConfig, history: FlowSeries
) -> FlowSeries:
    """Generate cfg.years whole water years of synthetic monthly flows.

    Historical standardized log-residuals are whitened with the inverse of
    the within-year Cholesky factor, bootstrapped independently by month,
    and recolored: July-September of each synthetic year and the whole
    first year come from the within-year factor, while October-June of
    every later year come from the shifted-window factor so that the
    year-boundary correlation carried by the July-June pairing survives.
    Deterministic for a fixed seed.
    """
    if cfg.log_transform != stats.log_transform:
        raise ConfigInvalid("log_transform flag differs between stats and generator config")
    matrix = history.year_matrix()
    if matrix.shape[0] != stats.n_years:
        raise ConfigInvalid(
            f"history has {matrix.shape[0]} whole years but stats were fit on {stats.n_years}"
        )
    if stats.log_transform:
        if np.any(matrix <= 0):
            raise NonPositiveFlowUnderLog("log-transform requires strictly positive flows")
        y = np.log(matrix)
    else:
        y = matrix.astype(np.float64)
    z = (y - stats.log_mean) / stats.log_std

    lower = cholesky_factor(stats.within_corr)
    lower_shifted = cholesky_factor(stats.cross_corr)
    # Whiten rows: w = z @ inv(L).T, so columns are unit-variance, uncorrelated.
    white = np.linalg.solve(lower, z.T).T

    rng = make_rng(cfg.seed)
    n_hist = white.shape[0]
    m = cfg.years
    picks = rng.integers(0, n_hist, size=(m, MONTHS_PER_YEAR))
    boot = white[picks, np.arange(MONTHS_PER_YEAR)[None, :]]

    synth = boot @ lower.T
    if m > 1:
        shifted_white = np.concatenate([boot[:-1, 9:12], boot[1:, 0:9]], axis=1)
        shifted = shifted_white @ lower_shifted.T
        synth[1:, 0:9] = shifted[:, 3:12]

    y_out = stats.log_mean + stats.log_std * synth
    flows = np.exp(y_out) if stats.log_transform else np.maximum(y_out, 0.0)
    start_year = history.water_year_at(len(history) - 1) + 1
    return FlowSeries(start_year, 0, flows.ravel())
