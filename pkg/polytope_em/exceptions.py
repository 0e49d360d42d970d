from typing import Optional


class PolytopeEMError(Exception):
    """Base class for every error raised by polytope_em."""


class ExpressionError(PolytopeEMError, ValueError):
    def __init__(self, message: str, position: Optional[int] = None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class DimensionError(PolytopeEMError, ValueError):
    pass


class DerivativeOrderError(PolytopeEMError, ValueError):
    pass


class SingularMatrixError(PolytopeEMError, ValueError):
    pass


class DegenerateGeometryError(PolytopeEMError, ValueError):
    pass


class ConeMismatchError(PolytopeEMError, ValueError):
    pass


class QuadratureError(PolytopeEMError, ArithmeticError):
    pass


class CosetError(PolytopeEMError, ArithmeticError):
    """Coset enumeration disagrees with det K / |det H|."""


class ResidualImaginaryError(PolytopeEMError, ArithmeticError):
    pass


class ParityError(PolytopeEMError, ArithmeticError):
    """An odd-order Bernoulli factor at the origin does not vanish."""
