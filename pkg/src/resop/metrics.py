"""Deficit-based performance criteria and the sustainability index.

All criteria derive from the monthly supply deficit D_t = max(0, demand -
supplied). Reliability credits supplied water at most at demand so that
over-delivery cannot mask shortfall elsewhere; vulnerability normalizes the
mean deficit per failure month by total demand over the whole record.
Records are water-year aligned: index 0 is an October.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FactorOutOfRange, PartialYear, ZeroDemand
from .hydrology import MONTHS_PER_YEAR


@dataclass
class SupplyRecord:
    """Parallel per-month demand and supplied volumes [TAF], October-aligned."""

    demand: np.ndarray
    supplied: np.ndarray

    def __post_init__(self) -> None:
        self.demand = np.asarray(self.demand, dtype=np.float64)
        self.supplied = np.asarray(self.supplied, dtype=np.float64)
        if self.demand.shape != self.supplied.shape or self.demand.ndim != 1:
            raise ValueError("demand and supplied must be 1-D arrays of equal length")
        if np.any(self.demand < 0) or np.any(self.supplied < 0):
            raise ValueError("demand and supplied must be >= 0")

    def __len__(self) -> int:
        return int(self.demand.size)


@dataclass
class PerformanceReport:
    rel: float
    res: float
    vul: float
    max_deficit: float
    si: float
    avg_annual_power_gwh: float
    cum_reward: float
    zero_demand: bool = False  # degenerate record; rel/vul set by convention


def deficits(rec: SupplyRecord) -> np.ndarray:
    """Monthly deficit D_t = max(0, demand - supplied)."""
    return np.maximum(0.0, rec.demand - rec.supplied)


def reliability(rec: SupplyRecord) -> float:
    """Delivered fraction of total demand, crediting at most demand per month."""
    total = float(np.sum(rec.demand))
    if total <= 0:
        raise ZeroDemand("total demand is zero; reliability undefined")
    return float(np.sum(np.minimum(rec.supplied, rec.demand)) / total)


def resilience(deficit_series: np.ndarray) -> float:
    """Fraction of failure months followed immediately by a non-failure month.

    1.0 by convention when no failures occur; a trailing failure counts in
    the denominator but cannot be observed recovering.
    """
    d = np.asarray(deficit_series, dtype=np.float64)
    if d.size == 0:
        raise ValueError("deficit series must be nonempty")
    failures = d > 0
    n_fail = int(np.count_nonzero(failures))
    if n_fail == 0:
        return 1.0
    recoveries = int(np.count_nonzero(failures[:-1] & ~failures[1:]))
    return recoveries / n_fail


def vulnerability(rec: SupplyRecord) -> float:
    """Mean deficit per failure month, normalized by total demand; 0 if none."""
    total = float(np.sum(rec.demand))
    if total <= 0:
        raise ZeroDemand("total demand is zero; vulnerability undefined")
    d = deficits(rec)
    n_fail = int(np.count_nonzero(d > 0))
    if n_fail == 0:
        return 0.0
    return float((np.sum(d) / n_fail) / total)


def max_annual_deficit(rec: SupplyRecord) -> float:
    """Worst water year's deficit as a fraction of that year's demand."""
    if len(rec) % MONTHS_PER_YEAR != 0 or len(rec) == 0:
        raise PartialYear(f"record of {len(rec)} months does not span whole water years")
    d = deficits(rec).reshape(-1, MONTHS_PER_YEAR).sum(axis=1)
    x = rec.demand.reshape(-1, MONTHS_PER_YEAR).sum(axis=1)
    ratios = np.zeros_like(d)
    positive = x > 0
    ratios[positive] = d[positive] / x[positive]
    ratios[~positive & (d > 0)] = 1.0  # deficit against zero demand cannot happen, guard anyway
    return float(np.max(ratios))


def sustainability_index(rel: float, res: float, vul: float, max_deficit: float) -> float:
    """Geometric mean of rel, res, 1 - vul, and 1 - max_deficit."""
    for name, value in (("rel", rel), ("res", res), ("vul", vul),
                        ("max_deficit", max_deficit)):
        if not 0.0 <= value <= 1.0:
            raise FactorOutOfRange(f"{name} = {value} outside [0, 1]")
    return float((rel * res * (1.0 - vul) * (1.0 - max_deficit)) ** 0.25)


def report(traj) -> PerformanceReport:
    """Assemble every criterion for one trajectory (whole water years).

    `traj` needs array fields demand, release, power_gwh, reward plus
    start_month; supplied water is the release. A record with zero total
    demand is scored rel = 1, vul = 0 and flagged.
    """
    if traj.start_month != 0 or len(traj.demand) % MONTHS_PER_YEAR != 0:
        raise PartialYear("trajectory must start in October and span whole water years")
    rec = SupplyRecord(demand=traj.demand, supplied=traj.release)
    zero_demand = float(np.sum(rec.demand)) <= 0
    if zero_demand:
        rel, vul = 1.0, 0.0
    else:
        rel, vul = reliability(rec), vulnerability(rec)
    res = resilience(deficits(rec))
    max_def = max_annual_deficit(rec)
    n_years = len(rec) // MONTHS_PER_YEAR
    return PerformanceReport(
        rel=rel,
        res=res,
        vul=vul,
        max_deficit=max_def,
        si=sustainability_index(rel, res, vul, max_def),
        avg_annual_power_gwh=float(np.sum(traj.power_gwh) / n_years),
        cum_reward=float(np.sum(traj.reward)),
        zero_demand=zero_demand,
    )


REPORT_HEADER = "method,rel,res,vul,max_deficit,si,avg_annual_power_gwh,cum_reward"


def report_csv_row(method: str, rep: PerformanceReport) -> str:
    return ",".join([
        method, repr(rep.rel), repr(rep.res), repr(rep.vul), repr(rep.max_deficit),
        repr(rep.si), repr(rep.avg_annual_power_gwh), repr(rep.cum_reward),
    ])
