"""Exception hierarchy shared by all icnsim modules."""


class IcnSimError(Exception):
    """Base class for every error raised by icnsim."""


class TopologyError(IcnSimError, ValueError):
    """A topology failed validation (connectivity, ids, servers)."""


class ParseError(TopologyError):
    """Malformed line in a text input; carries the 1-based line number."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class RoutingError(IcnSimError, RuntimeError):
    """No route exists between two nodes, or a lookup hit an unknown id."""


class AggregationError(IcnSimError, ValueError):
    """Interest ranges cannot be merged into one contiguous range."""


class UndefinedMetricError(IcnSimError, ZeroDivisionError):
    """A ratio was requested whose denominator is zero."""


class ConfigError(IcnSimError, ValueError):
    """Invalid run configuration."""
