from typing import Optional


class NoetherAuditException(Exception):
    """Base exception class for the Noether audit engine"""
    pass


class ExpressionError(NoetherAuditException):
    """Raised when an expression leaves the supported expression class"""
    pass


class ExpressionSyntaxError(ExpressionError):
    """Raised when expression text does not follow the grammar"""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnknownSymbolError(ExpressionError):
    """Raised when expression text names a symbol the engine does not know"""

    def __init__(self, name: str, position: Optional[int] = None):
        where = f" at position {position}" if position is not None else ""
        super().__init__(f"Unknown symbol '{name}'{where}")
        self.name = name
        self.position = position


class RewriteRuleError(NoetherAuditException):
    """Raised when a rule set or a binding map is cyclic"""
    pass


class JetOrderError(NoetherAuditException):
    """Raised when accelerations reach the first-order total derivative"""
    pass


class VelocityDegreeError(NoetherAuditException):
    """Raised when an expression exceeds velocity degree 3"""
    pass


class PointSymmetryError(NoetherAuditException):
    """Raised when a generator coefficient depends on velocities"""
    pass


class NonlinearParameterError(NoetherAuditException):
    """Raised when a component solution is not linear in its parameters"""
    pass


class ClosureError(NoetherAuditException):
    """Raised when a bracket of basis fields leaves their span"""

    def __init__(self, message: str, pair=None, residual=None):
        super().__init__(message)
        self.pair = pair
        self.residual = residual


class LinearDependenceError(NoetherAuditException):
    """Raised when a basis of vector fields is linearly dependent"""
    pass


class MetricConfigError(NoetherAuditException):
    """Raised when a numeric metric is outside the closed-form family"""
    pass


class MetricConstraintError(NoetherAuditException):
    """Raised when a numeric metric violates the constraints of a case"""
    pass


class IntegrationError(NoetherAuditException):
    """Raised when a geodesic cannot be started"""
    pass


class UnboundAtomError(NoetherAuditException):
    """Raised when numeric evaluation meets an atom without a value"""
    pass


class UsageError(NoetherAuditException):
    """Raised on command-line usage errors"""
    pass


class InvariantViolationError(NoetherAuditException):
    """Raised when two independent computations disagree"""
    pass
