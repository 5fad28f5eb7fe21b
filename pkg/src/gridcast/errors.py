"""Exception and warning types shared across the package."""


class GridcastError(Exception):
    """Base class for all gridcast errors."""


# --- time series core ---

class EmptyOverlap(GridcastError):
    """Series have no common time range to align on."""


class DegenerateSplit(GridcastError):
    """A train/test split would leave one side empty."""


class IndexMismatch(GridcastError):
    """Series that must share one hourly index do not."""


class EmptyHierarchy(GridcastError):
    """A hierarchical set has no substation members."""


# --- ingest ---

class ParseError(GridcastError):
    """Malformed input file; carries row/column location where known."""

    def __init__(self, message, path=None, row=None, column=None):
        loc = []
        if path is not None:
            loc.append(str(path))
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.path = path
        self.row = row
        self.column = column


class MissingZone(GridcastError):
    """Expected grid zone absent from a load file."""


class NonMonotonicTimestamps(GridcastError):
    """Duplicate or out-of-order timestamps for one series."""


# --- preprocess ---

class MalformedDay(GridcastError):
    """A calendar day has a number of readings other than 23, 24 or 25."""


class AllBad(GridcastError):
    """No usable (ok-flagged) value exists to interpolate from."""


class CalendarGap(GridcastError):
    """Holiday calendar does not cover the requested time span."""


# --- nn kernels ---

class ShapeMismatch(GridcastError):
    """Tensor shapes incompatible for the requested operation."""


class EmptyVariableList(GridcastError):
    """Variable selection called with no input variables."""


class MaskAllBlocked(GridcastError):
    """Attention mask leaves some query with no attendable position."""


# --- models ---

class SchemaMismatch(GridcastError):
    """Feature schema at forecast time differs from training time."""


class NonFiniteLoss(GridcastError):
    """Training loss became NaN/Inf; run aborted."""


class WindowTooShort(GridcastError):
    """Forecast window supplies fewer hours than the model requires."""


class NonConvergence(GridcastError):
    """Iterative estimation failed to converge within its budget."""


class SeriesTooShort(GridcastError):
    """Series too short for the requested model order or season."""


# --- evaluation ---

class ZeroActual(GridcastError):
    """MAPE undefined because some actual value is zero."""


class NoWindows(GridcastError):
    """Evaluation requested over an empty window set."""


class DegenerateVariance(GridcastError):
    """Welch test undefined: both samples have zero variance."""


class WindowSetMismatch(GridcastError):
    """Two reports do not cover the same evaluation windows."""


# --- cli / config ---

class ConfigError(GridcastError):
    """Invalid or unknown configuration fields."""

    def __init__(self, message, fields=()):
        if fields:
            message = f"{message}: {', '.join(fields)}"
        super().__init__(message)
        self.fields = tuple(fields)


# --- warnings ---

class GridcastWarning(UserWarning):
    """Base class for gridcast warnings."""


class StationCoverageWarning(GridcastWarning):
    """Weather stations have unequal hourly coverage; mean taken over available ones."""


class GapFillWarning(GridcastWarning):
    """A daily input had gap days that were forward-filled."""


class ConstantFeatureWarning(GridcastWarning):
    """A feature was constant on the training split and passes through unscaled."""


class BudgetExceedsSpace(GridcastWarning):
    """Search budget exceeds the number of distinct configurations; repeats allowed."""
