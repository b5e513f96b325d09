"""Exception hierarchy shared by the planning pipeline."""


class PlanningError(Exception):
    """Base class for every error raised by ssctraj."""


class DomainError(PlanningError, ValueError):
    """An argument lies outside the domain of a function."""


# frenet
class OutOfCaptureRange(PlanningError):
    pass


class OutOfRange(PlanningError):
    pass


# semantics
class InvalidHorizon(PlanningError, ValueError):
    pass


# corridor
class EmptyInput(PlanningError, ValueError):
    pass


class NonIncreasingTime(PlanningError, ValueError):
    pass


class SeedCubeCollision(PlanningError):
    """The box spanned by two consecutive seeds hits an occupied cell."""

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class EmptyFeasibleInterval(PlanningError):
    pass


# optimizer
class StartOutsideCorridor(PlanningError):
    pass


class GoalOutsideCorridor(PlanningError):
    pass


class Infeasible(PlanningError):
    """The QP has no solution. ``diagnostic`` holds solver status details."""

    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic or {}


class SolverNumericalFailure(PlanningError):
    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic or {}


class DimensionMismatch(PlanningError, ValueError):
    pass


# scenario_io
class ParseError(PlanningError):
    """Scenario document could not be parsed or validated.

    ``location`` is a ``(line, column)`` pair (1-based) when known, and
    ``field`` the dotted path of the offending field.
    """

    def __init__(self, message, field=None, location=None):
        where = []
        if field:
            where.append(f"field '{field}'")
        if location:
            where.append(f"line {location[0]}, column {location[1]}")
        full = f"{message} ({', '.join(where)})" if where else message
        super().__init__(full)
        self.field = field
        self.location = location


class SchemaVersionMismatch(ParseError):
    pass


class SeedCollision(PlanningError):
    """The scripted forward simulation drives into an obstacle."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class VerificationFailure(PlanningError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
