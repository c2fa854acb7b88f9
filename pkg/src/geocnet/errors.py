"""Exception hierarchy. Each class maps onto one CLI exit code."""


class GeocError(Exception):
    exit_code = 1


class ValidationError(GeocError, ValueError):
    """Bad parameters or malformed inputs."""

    exit_code = 2


class DomainError(ValidationError):
    """A value lies outside the domain of a local map."""


class TrajectoryEscapeError(ValidationError):
    """A simulated state left the map domain."""

    def __init__(self, step, node, value):
        self.step = step
        self.node = node
        self.value = value
        super().__init__(
            f"trajectory escaped the map domain at step {step} "
            f"(node {node}, value {value!r}); lower sigma or check the graph"
        )


class InputOutputError(GeocError, OSError):
    exit_code = 3


class EstimationError(GeocError, ArithmeticError):
    """Correlation-dimension estimation could not produce a slope."""

    exit_code = 4


class EmptyCurveError(EstimationError):
    pass


class DegenerateAbscissaError(EstimationError):
    pass


class PartialFailure(GeocError):
    """Some per-node or per-trial tasks failed; partial results exist."""

    exit_code = 5
