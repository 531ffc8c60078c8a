"""Exception types shared across the package."""


class DimensionError(ValueError):
    """A point or density has the wrong spatial dimension."""


class DegenerateModelError(ValueError):
    """The class densities have no usable decision structure."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach its tolerance."""


class DegeneracyError(ArithmeticError):
    """An evolution law hit a (near) zero denominator.

    Attributes
    ----------
    denominator : float
        The offending denominator value.
    """

    def __init__(self, message: str, denominator: float):
        super().__init__(message)
        self.denominator = denominator


class EvolutionError(RuntimeError):
    """A boundary evolution could not be started or continued."""


class CertificateError(RuntimeError):
    """The constructive transport certificate could not be built."""


class CurveError(RuntimeError):
    """A front-tracked curve became invalid (self-intersection, transversality loss)."""
