"""Exception types shared across the package.

Every error raised on a user-facing path derives from GridExpError so the
CLI can map failures to exit codes without matching on message text.
"""


class GridExpError(Exception):
    """Base class for all gridexp errors."""


# -- data model / parsing -------------------------------------------------

class MalformedFile(GridExpError):
    """Input file violates the documented grammar (message names file and field)."""


class ReferentialIntegrity(GridExpError):
    """A device references an id that does not exist (message names the id)."""


class NonUniformSpacing(GridExpError):
    """Time series timestamps are not uniformly spaced."""


class NegativeValue(GridExpError):
    """Negative value in a series whose role (load/wind) requires >= 0."""


class EmptySeries(GridExpError):
    """Time series file contains no data rows."""


class NonDivisibleResolution(GridExpError):
    """Requested resolution does not divide the source resolution."""


# -- experiment planning ---------------------------------------------------

class WindowOverrun(GridExpError):
    """Trial windows do not fit inside the annual data."""


# -- scenario generation ---------------------------------------------------

class DegenerateInterval(GridExpError):
    """Truncation interval [lo, hi] has lo >= hi."""


class InsufficientHistory(GridExpError):
    """Persistence forecast requested without a prior day of realization data."""


# -- formulations ----------------------------------------------------------

class HorizonMismatch(GridExpError):
    """Forecast data does not cover the requested model horizon."""


class InfeasibleInitialState(GridExpError):
    """Min-up/min-down seeding cannot be satisfied by any commitment."""


class CommitmentMissing(GridExpError):
    """Emulator model built without a fixed commitment for the interval."""


class NonIntegralBinary(GridExpError):
    """A binary variable's solved value is farther than tolerance from 0/1."""


class StatusNotOptimal(GridExpError):
    """Result extraction attempted on a non-Optimal solution."""


class ForecastLeakage(GridExpError):
    """Realization-provenance data reached a decision model (or vice versa)."""


# -- solver ----------------------------------------------------------------

class IntegralityPresent(GridExpError):
    """solve_lp called on a model with integer columns."""


class NumericalBreakdown(GridExpError):
    """Basis singular beyond repair attempts."""


# -- results ---------------------------------------------------------------

class IncompleteRun(GridExpError):
    """Metric computation attempted on an aborted or partial case run."""


class EmptyGroup(GridExpError):
    """Statistical aggregation requested for an empty record group."""


class IoFailure(GridExpError):
    """Report or manifest files could not be written."""
