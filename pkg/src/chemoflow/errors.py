"""Exception types raised across the simulator."""


class ChemoflowError(Exception):
    pass


class InvalidDimensions(ChemoflowError, ValueError):
    pass


class DivergenceTooLarge(ChemoflowError):
    def __init__(self, max_div, tol):
        super().__init__(f"max |div u| = {max_div:.3e} exceeds tolerance {tol:.3e}")
        self.max_div = max_div
        self.tol = tol


class NoConvergence(ChemoflowError):
    def __init__(self, iterations, residual):
        super().__init__(f"no convergence after {iterations} iterations (residual {residual:.3e})")
        self.iterations = iterations
        self.residual = residual


class SimulationError(ChemoflowError):
    """Base for failures raised while advancing a state."""


class DtUnderflow(SimulationError):
    def __init__(self, dt, dt_min):
        super().__init__(f"time step {dt:.3e} fell below dt_min = {dt_min:.3e}")
        self.dt = dt
        self.dt_min = dt_min


class NegativeC(SimulationError):
    pass


class NegativeN(SimulationError):
    pass


class PositivityViolation(SimulationError):
    """Explicit transport stage went negative; the step is retried with a smaller dt."""


class BlowupSuspected(SimulationError):
    pass


class ConfigParseError(ChemoflowError):
    def __init__(self, line, message):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


class ConfigValidationError(ChemoflowError, ValueError):
    def __init__(self, field, reason):
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason


class CheckpointFormatError(ChemoflowError):
    pass


class SchemaError(ChemoflowError):
    def __init__(self, column, message=None):
        super().__init__(message or f"missing or unexpected column {column!r}")
        self.column = column


class ThresholdNotFound(ChemoflowError):
    pass


class AbsorbingAborted(ChemoflowError):
    def __init__(self, scale, reason):
        super().__init__(f"run at scale {scale} flagged blow-up: {reason}")
        self.scale = scale
        self.reason = reason
