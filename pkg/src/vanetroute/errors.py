"""Exception hierarchy shared across the simulator."""


class SimError(Exception):
    """Base class for every error raised by vanetroute."""


class SchedulingInPast(SimError):
    pass


class InvalidDistParams(SimError, ValueError):
    pass


class InvalidConfig(SimError, ValueError):
    pass


class NonPositiveVariance(SimError, ValueError):
    pass


class NegativeRadius(SimError, ValueError):
    pass


class InsufficientSamples(SimError, ValueError):
    pass


class InvalidParams(SimError, ValueError):
    pass


class NonPositiveDistance(SimError, ValueError):
    pass


class InvalidShape(SimError, ValueError):
    pass


class RetryLimitExceeded(SimError):
    """Unicast frame exhausted its retries; carries the unreachable neighbour."""

    def __init__(self, neighbor, frame=None):
        super().__init__(f"retry limit exceeded towards node {neighbor}")
        self.neighbor = neighbor
        self.frame = frame


class InconsistentTopologySets(SimError, ValueError):
    pass


class NonPositiveDuration(SimError, ValueError):
    pass


class NoDeliveredPackets(SimError, ZeroDivisionError):
    pass


class DuplicateDelivery(SimError):
    pass


class ParseError(SimError, ValueError):
    def __init__(self, message, line=None, field=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.line = line
        self.field = field


class UnknownKey(ParseError):
    pass


class OutOfRangeValue(ParseError):
    pass
