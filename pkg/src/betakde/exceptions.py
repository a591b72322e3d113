class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class QuadratureConvergenceError(RuntimeError):
    """Refining a quadrature rule moved a reported integral by more than the gate."""
