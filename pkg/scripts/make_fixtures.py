"""Regenerate the bundled Folsom-like fixtures under src/resop/data/.

The reservoir description and the 65-water-year monthly inflow record are
approximations with realistic seasonal statistics, not measured data; both
are config-replaceable. Everything here is seeded so the fixtures are
reproducible byte for byte.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "resop" / "data"

CAPACITY = 966.0          # TAF
MIN_STORAGE = 90.0        # TAF dead pool
BED_ELEVATION = 200.0     # ft
FULL_ELEVATION = 466.0    # ft
FULL_AREA = 11441.0       # acres
SHAPE_EXPONENT = 3.15     # storage ~ depth**p

MONTH_NAMES = ("oct", "nov", "dec", "jan", "feb", "mar",
               "apr", "may", "jun", "jul", "aug", "sep")

# Monthly median inflow [TAF] and log-space sigma, October first.
INFLOW_MEDIAN = np.array([90, 150, 250, 340, 380, 390, 330, 320, 220, 120, 80, 70.0])
INFLOW_LOG_SIGMA = np.array([0.45, 0.55, 0.65, 0.70, 0.65, 0.55,
                             0.45, 0.40, 0.40, 0.35, 0.30, 0.30])

# Monthly demand [TAF], irrigation-season peak.
DEMAND = np.array([150, 120, 100, 100, 110, 140, 200, 280, 350, 380, 340, 230.0])

# Monthly evaporation depth [in].
EVAPORATION = {"jan": 0.91, "feb": 1.61, "mar": 3.50, "apr": 3.50, "may": 8.07,
               "jun": 10.08, "jul": 11.50, "aug": 10.20, "sep": 7.64,
               "oct": 5.00, "nov": 2.05, "dec": 0.91}

# Flood-control rule curve [TAF]: full flood space Dec-Feb, linear ramps.
RULE_CURVE = {"oct": 966, "nov": 678, "dec": 391, "jan": 391, "feb": 391,
              "mar": 534, "apr": 678, "may": 822, "jun": 966, "jul": 966,
              "aug": 966, "sep": 966}

N_YEARS = 65
FIRST_WATER_YEAR = 1956    # Oct 1955 .. Sep 2020
SEED = 195510

# Dependence structure of the fixture record. Month-to-month persistence is
# high but decays over lags; the shared annual component stays moderate so
# same-year correlations at long lags look like real records.
MONTH_TO_MONTH_AR = 0.55   # lag-1 persistence of the monthly component
ANNUAL_AR = 0.45           # persistence of the shared annual wetness
ANNUAL_WEIGHT = 0.30       # share of the annual component in each month

# Climate episodes (water years): sustained drought and one large flood year.
DROUGHT_YEARS = range(1987, 1993)
DROUGHT_FACTOR = 0.65
FLOOD_YEAR = 1997
FLOOD_FACTOR = 1.8


def bathymetry_rows(n_rows: int = 13) -> list[tuple[float, float, float]]:
    depth_full = FULL_ELEVATION - BED_ELEVATION
    storages = np.linspace(0.0, CAPACITY ** (1 / SHAPE_EXPONENT), n_rows) ** SHAPE_EXPONENT
    storages[-1] = CAPACITY
    rows = []
    for s in storages:
        frac = (s / CAPACITY) ** (1.0 / SHAPE_EXPONENT)
        elevation = BED_ELEVATION + depth_full * frac
        area = FULL_AREA * frac ** (SHAPE_EXPONENT - 1.0)
        rows.append((round(float(s), 2), round(float(elevation), 2), round(float(area), 1)))
    return rows


def make_inflows() -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(SEED)))
    log_median = np.log(INFLOW_MEDIAN)
    z_month = 0.0
    wetness = 0.0
    flows = np.zeros((N_YEARS, 12))
    b = np.sqrt(1.0 - ANNUAL_WEIGHT**2)
    for y in range(N_YEARS):
        wetness = ANNUAL_AR * wetness + np.sqrt(1 - ANNUAL_AR**2) * rng.standard_normal()
        water_year = FIRST_WATER_YEAR + y
        for m in range(12):
            z_month = MONTH_TO_MONTH_AR * z_month + np.sqrt(1 - MONTH_TO_MONTH_AR**2) * rng.standard_normal()
            z = ANNUAL_WEIGHT * wetness + b * z_month
            flow = np.exp(log_median[m] + INFLOW_LOG_SIGMA[m] * z)
            if water_year in DROUGHT_YEARS:
                flow *= DROUGHT_FACTOR
            if water_year == FLOOD_YEAR:
                flow *= FLOOD_FACTOR
            flows[y, m] = flow
    return np.round(flows, 3)


def write_spec(path: Path) -> None:
    buf = io.StringIO()
    w = buf.write
    w("# Folsom-like single-reservoir description (approximate fixture).\n")
    w("# Volumes TAF, evaporation inches/month, elevations ft, turbine flow cms.\n")
    w("# release_bounds.max is the monthly operational release ceiling; the\n")
    w("# over-capacity penalty applies to total outflow beyond it.\n\n")
    w("[reservoir]\n")
    w(f"capacity = {CAPACITY}\n")
    w(f"min_storage = {MIN_STORAGE}\n")
    w("penalty_coefficient = 10.0\n\n")
    w("[turbine]\n")
    w("efficiency = 0.85\n")
    w("max_flow_cms = 230.0\n")
    w("tailwater_elevation_ft = 126.0\n\n")
    w("[release_bounds]\n")
    w("min = 0.0\n")
    # Monthly operational release ceiling. The instantaneous 130,000 cfs
    # safe-channel figure would aggregate to 7735 TAF/month, a bound no
    # monthly outflow approaches; 1000 TAF/month keeps the action range
    # meaningful and lets the over-capacity penalty bind in flood months.
    w("max = 1000.0\n\n")
    w("[bathymetry]\n")
    w("# storage,elevation,area\n")
    for s, e, a in bathymetry_rows():
        w(f"{s},{e},{a}\n")
    w("\n[rule_curve]\n")
    for m in MONTH_NAMES:
        w(f"{m},{float(RULE_CURVE[m])}\n")
    w("\n[demand]\n")
    for i, m in enumerate(MONTH_NAMES):
        w(f"{m},{DEMAND[i]}\n")
    w("\n[evaporation]\n")
    for m in MONTH_NAMES:
        w(f"{m},{EVAPORATION[m]}\n")
    path.write_text(buf.getvalue())


def write_inflows(path: Path) -> None:
    flows = make_inflows()
    lines = ["# Folsom-like synthetic monthly inflow fixture (seeded approximation).",
             "year,month,flow_taf"]
    for y in range(N_YEARS):
        water_year = FIRST_WATER_YEAR + y
        for m in range(12):
            month = (m + 9) % 12 + 1
            year = water_year - 1 if m <= 2 else water_year
            lines.append(f"{year},{month},{flows[y, m]}")
    path.write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    write_spec(DATA_DIR / "folsom_spec.cfg")
    write_inflows(DATA_DIR / "folsom_inflows.csv")
    print(f"wrote fixtures to {DATA_DIR}")
