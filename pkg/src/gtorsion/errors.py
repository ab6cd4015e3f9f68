"""Exception hierarchy shared by every module."""


class GTorsionError(Exception):
    """Base class for all package errors."""


class NumericalError(GTorsionError):
    """A pointwise computation broke down (singular metric, bad conditioning, ...).

    ``point`` carries the chart coordinates where it happened, when known.
    """

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = None if point is None else tuple(float(c) for c in point)


class SingularMetric(NumericalError):
    pass


class IllConditionedL(NumericalError):
    pass


class RankDeficient(NumericalError):
    pass


class OutOfDomain(GTorsionError):
    pass


class StencilOutOfDomain(OutOfDomain):
    pass


class EmptyDomain(GTorsionError):
    pass


class NotSkew(GTorsionError):
    pass


class NotInM(GTorsionError):
    pass


class NotInG(GTorsionError):
    pass


class ConfigError(GTorsionError):
    pass


class ScenarioFailure(GTorsionError):
    pass
