"""Exception types raised across the toolkit.

The CLI maps these onto exit codes: ConfigInvalid is a usage/configuration
problem (exit 2), everything else deriving from ToolkitError is a data or
domain error (exit 3). Anything unexpected is an internal fault (exit 4).
"""


class ToolkitError(Exception):
    """Base class for all domain errors raised by this package."""


class ConfigInvalid(ToolkitError):
    """A configuration file, flag combination, or run setting is unusable."""


# --- hydrology ---------------------------------------------------------

class MalformedRow(ToolkitError):
    """A CSV row could not be parsed into (year, month, flow)."""


class NonContiguousMonths(ToolkitError):
    """Successive CSV rows do not advance by exactly one calendar month."""


class NegativeFlow(ToolkitError):
    """An inflow volume below zero was encountered."""


class InsufficientYears(ToolkitError):
    """The series does not span enough whole water years."""


class NonPositiveFlowUnderLog(ToolkitError):
    """Log-transform requested but the series contains a flow <= 0."""


class DegenerateStatistics(ToolkitError):
    """A month has zero variance across years; correlations are undefined."""


class NotPositiveDefinite(ToolkitError):
    """Matrix is not positive definite even after jitter repair."""


# --- reservoir environment ---------------------------------------------

class OutOfTable(ToolkitError):
    """Storage lies outside the bathymetry table span."""


class FlowExceedsTurbine(ToolkitError):
    """Requested turbine flow exceeds the turbine release capacity."""


class StorageOutOfBounds(ToolkitError):
    """Storage outside [min_storage, capacity]."""


# --- neural nets --------------------------------------------------------

class ShapeMismatch(ToolkitError):
    """Array shapes are inconsistent with the network definition."""


class CheckpointUnreadable(ToolkitError):
    """A checkpoint file is missing, truncated, or inconsistent."""


# --- agents / replay ----------------------------------------------------

class InsufficientSamples(ToolkitError):
    """The replay buffer holds fewer transitions than the requested batch."""


# --- baselines ----------------------------------------------------------

class LengthMismatch(ToolkitError):
    """Two series that must align (e.g. replay releases vs inflows) differ."""


# --- metrics ------------------------------------------------------------

class ZeroDemand(ToolkitError):
    """Total demand is zero; the requested ratio is undefined."""


class PartialYear(ToolkitError):
    """The record does not span whole water years."""


class FactorOutOfRange(ToolkitError):
    """A sustainability factor lies outside its admissible range."""


# --- cli ----------------------------------------------------------------

class NoInputs(ToolkitError):
    """A command that needs at least one input file received none."""
