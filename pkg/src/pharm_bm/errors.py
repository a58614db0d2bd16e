"""Exception types raised across the toolkit."""


class PharmError(Exception):
    """Base class for all toolkit errors."""


# convex kernel
class CurvatureFloorViolation(PharmError):
    pass


class OriginNotInterior(PharmError):
    pass


class NotInterior(PharmError):
    pass


class GenerationFailed(PharmError):
    pass


class DegenerateSet(PharmError):
    pass


# ring solver
class MeshQualityFailure(PharmError):
    pass


class NonConvergence(PharmError):
    def __init__(self, stage, iterations, grad_norm=float("nan")):
        self.stage = stage
        self.iterations = iterations
        self.grad_norm = grad_norm
        super().__init__(
            f"stage {stage} did not converge after {iterations} iterations "
            f"(gradient norm {grad_norm:.3e})"
        )


class OffsetOutsideRing(PharmError):
    pass


class LevelOutOfRange(PharmError):
    pass


class InvalidProblem(PharmError):
    pass


# measure / support coordinates
class LevelUnresolvable(PharmError):
    pass


class SingularLevel(PharmError):
    pass


class GridMismatch(PharmError):
    pass


# harness
class NeighborhoodTooLarge(PharmError):
    pass


class DataOutOfPresolveRange(PharmError):
    pass


class ConfigError(PharmError):
    pass
