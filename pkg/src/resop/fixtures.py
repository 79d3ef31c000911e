"""Paths to the bundled Folsom-like fixture files.

Both are approximations meant for tests, examples, and desk-scale runs;
real studies should point the CLI at their own files.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path


def _data_path(name: str) -> Path:
    return Path(str(resources.files("resop").joinpath("data", name)))


def folsom_spec_path() -> Path:
    """Reservoir description: bathymetry, rule curve, demand, evaporation."""
    return _data_path("folsom_spec.cfg")


def folsom_inflows_path() -> Path:
    """65 water years (Oct 1955 - Sep 2020) of monthly inflows, TAF."""
    return _data_path("folsom_inflows.csv")
