"""Exception types. Every error carries the measured residual (or None)."""


class SimMapsError(ValueError):
    def __init__(self, message: str, residual: float | None = None):
        if residual is not None:
            message = f"{message} (residual={residual:.3e})"
        super().__init__(message)
        self.residual = residual


class DimensionMismatch(SimMapsError):
    pass


class DegenerateAnchors(SimMapsError):
    pass


class Unrealizable(SimMapsError):
    pass


class NotCongruent(SimMapsError):
    pass


class NotCommuting(SimMapsError):
    pass


class DiagonalizationFailed(SimMapsError):
    pass


class BadRates(SimMapsError):
    pass


class DriftNotOrthogonal(SimMapsError):
    pass


class TooManyPlanes(SimMapsError):
    pass


class EmptyCarrier(SimMapsError):
    pass


class MissingProducts(SimMapsError):
    pass


class NotDegenerate(SimMapsError):
    pass


class NegativeR(SimMapsError):
    pass


class NoConvergence(SimMapsError):
    pass


class AliasingSuspicion(SimMapsError):
    pass


class TooFewSamples(SimMapsError):
    pass


class NonUniformGrid(SimMapsError):
    pass
