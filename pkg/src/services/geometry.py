import logging
import os
import re
from functools import lru_cache
from typing import Callable, Dict, List, Tuple

import numpy as np
import sympy

from ..config import settings
from ..models.geometry import ClosedForm, FunctionFamily, GeodesicState, MetricSpec, Trajectory
from ..models.symmetry import CaseSpec
from ..utils.exceptions import (
    ExpressionError,
    IntegrationError,
    InvariantViolationError,
    MetricConfigError,
    MetricConstraintError,
    UnboundAtomError,
)
from .parser import parse
from .symbolic import (
    ACCELERATIONS,
    COORDINATES,
    FUNCTION_NAMES,
    SPACETIME,
    VELOCITIES,
    RewriteRuleSet,
    function_atom,
    normalize,
    partial_diff,
    second_order_total_derivative,
)

logger = logging.getLogger(__name__)

# butcher tableau for RK4
A_RK4 = np.array([
    [0,   0,   0, 0],
    [0.5, 0,   0, 0],
    [0,   0.5, 0, 0],
    [0,   0,   1, 0]
])
B_RK4 = np.array([1/6, 1/3, 1/3, 1/6])
C_RK4 = np.array([0, 0.5, 0.5, 1.0])

NUMERIC_ARGUMENTS = COORDINATES + VELOCITIES

Matrix4 = Tuple[Tuple[sympy.Expr, ...], ...]


def _generic_metric() -> sympy.Matrix:
    A, B, C = (function_atom(name) for name in FUNCTION_NAMES)
    x = SPACETIME[1]
    return sympy.Matrix([
        [-1, 0, 0, 0],
        [0, A**2, 0, 0],
        [0, 0, B**2, -B**2 * x],
        [0, 0, -B**2 * x, C**2 + B**2 * x**2],
    ])


def _generic_inverse() -> sympy.Matrix:
    A, B, C = (function_atom(name) for name in FUNCTION_NAMES)
    x = SPACETIME[1]
    return sympy.Matrix([
        [-1, 0, 0, 0],
        [0, A**-2, 0, 0],
        [0, 0, B**-2 + x**2 * C**-2, x * C**-2],
        [0, 0, x * C**-2, C**-2],
    ])


def _normalized(matrix: sympy.Matrix, rules: RewriteRuleSet) -> Matrix4:
    return tuple(
        tuple(normalize(matrix[a, b], rules).to_expr() for b in range(4)) for a in range(4)
    )


@lru_cache(maxsize=None)
def _metric(rules: RewriteRuleSet) -> Matrix4:
    return _normalized(_generic_metric(), rules)


@lru_cache(maxsize=None)
def _inverse(rules: RewriteRuleSet) -> Matrix4:
    inverse = _normalized(_generic_inverse(), rules)
    product = sympy.Matrix(_metric(rules)) * sympy.Matrix(inverse) - sympy.eye(4)
    for a in range(4):
        for b in range(4):
            if not normalize(product[a, b], rules).is_zero:
                logger.error(f"g*g^-1 differs from the identity at ({a}, {b})")
                raise InvariantViolationError(f"Closed-form inverse metric fails at entry ({a}, {b})")
    return inverse


@lru_cache(maxsize=None)
def _lagrangian(rules: RewriteRuleSet) -> sympy.Expr:
    A, B, C = (function_atom(name) for name in FUNCTION_NAMES)
    x = SPACETIME[1]
    td, xd, yd, zd = VELOCITIES
    lagrangian = -td**2 + A**2 * xd**2 + B**2 * (yd**2 + x**2 * zd**2 - 2 * x * yd * zd) + C**2 * zd**2
    metric = sympy.Matrix(_metric(rules))
    velocity = sympy.Matrix(VELOCITIES)
    quadratic = (velocity.T * metric * velocity)[0, 0]
    if not normalize(lagrangian - quadratic, rules).is_zero:
        raise InvariantViolationError("Lagrangian differs from g_ab v^a v^b")
    return normalize(lagrangian, rules).to_expr()


@lru_cache(maxsize=None)
def _christoffel(rules: RewriteRuleSet) -> Tuple[Matrix4, ...]:
    metric = _metric(rules)
    inverse = _inverse(rules)
    derivatives = [[[partial_diff(metric[d][c], SPACETIME[b]) for c in range(4)] for d in range(4)]
                   for b in range(4)]
    symbols = []
    for a in range(4):
        rows = []
        for b in range(4):
            row = []
            for c in range(4):
                total = sum(
                    inverse[a][d] * (derivatives[b][d][c] + derivatives[c][d][b] - derivatives[d][b][c])
                    for d in range(4)
                )
                row.append(normalize(sympy.Rational(1, 2) * total, rules).to_expr())
            rows.append(tuple(row))
        symbols.append(tuple(rows))
    return tuple(symbols)


@lru_cache(maxsize=None)
def _accelerations(rules: RewriteRuleSet) -> Tuple[sympy.Expr, ...]:
    gamma = _christoffel(rules)
    accelerations = tuple(
        normalize(
            -sum(gamma[a][b][c] * VELOCITIES[b] * VELOCITIES[c] for b in range(4) for c in range(4)),
            rules,
        ).to_expr()
        for a in range(4)
    )
    # Euler-Lagrange cross-check: D(dL/dv^a) - dL/dx^a vanishes on the accelerations above
    lagrangian = _lagrangian(rules)
    on_shell = dict(zip(ACCELERATIONS, accelerations))
    for coordinate, velocity in zip(SPACETIME, VELOCITIES):
        euler_lagrange = (second_order_total_derivative(partial_diff(lagrangian, velocity))
                          - partial_diff(lagrangian, coordinate))
        if not normalize(euler_lagrange.xreplace(on_shell), rules).is_zero:
            logger.error(f"Christoffel and Euler-Lagrange accelerations disagree for {coordinate}")
            raise InvariantViolationError(f"Geodesic equation for {coordinate} fails the Euler-Lagrange check")
    return accelerations


def function_bindings(spec: MetricSpec) -> Dict[sympy.Symbol, sympy.Expr]:
    """Closed forms of A, B, C and their t-derivatives up to the closure depth."""
    t = SPACETIME[0]
    bindings: Dict[sympy.Symbol, sympy.Expr] = {}
    for form in spec.closed_forms:
        current = form.expr(t)
        for order in range(settings.max_derivative_order + 1):
            bindings[function_atom(form.name, order)] = current
            current = sympy.diff(current, t)
    return bindings


class GeometryService:
    def metric_components(self, spec: MetricSpec) -> Matrix4:
        matrix = _metric(spec.rules)
        if spec.numeric:
            bindings = function_bindings(spec)
            return tuple(tuple(entry.xreplace(bindings) for entry in row) for row in matrix)
        return matrix

    def inverse_metric(self, spec: MetricSpec) -> Matrix4:
        matrix = _inverse(spec.rules)
        if spec.numeric:
            bindings = function_bindings(spec)
            return tuple(tuple(entry.xreplace(bindings) for entry in row) for row in matrix)
        return matrix

    def lagrangian(self, spec: MetricSpec) -> sympy.Expr:
        return _lagrangian(spec.rules)

    def christoffel(self, spec: MetricSpec) -> Tuple[Matrix4, ...]:
        return _christoffel(spec.rules)

    def geodesic_accelerations(self, spec: MetricSpec) -> Tuple[sympy.Expr, ...]:
        return _accelerations(spec.rules)

    def numeric_function(self, expr, spec: MetricSpec) -> Callable:
        """Compile an expression to f(s, t, x, y, z, td, xd, yd, zd) with the closed forms bound."""
        bound = sympy.sympify(expr).xreplace(function_bindings(spec))
        unbound = sorted(str(a) for a in bound.free_symbols if a not in NUMERIC_ARGUMENTS)
        if unbound:
            raise UnboundAtomError(f"No numeric value for {', '.join(unbound)}")
        return sympy.lambdify(NUMERIC_ARGUMENTS, bound, modules="numpy")

    def parse_metric_config(self, text: str) -> MetricSpec:
        """Read ``A = 1, B = t, C = 2*t`` from inline text or from a file."""
        if os.path.isfile(text):
            with open(text, "r", encoding="utf-8") as handle:
                text = handle.read()
        forms: Dict[str, ClosedForm] = {}
        for statement in re.split(r"[;,\n]", text):
            statement = statement.split("#", 1)[0].strip()
            if not statement:
                continue
            name, sep, value = statement.partition("=")
            name = re.sub(r"\(\s*t\s*\)$", "", name.strip())
            if not sep or name not in FUNCTION_NAMES:
                raise MetricConfigError(f"Expected 'A = ...', 'B = ...' or 'C = ...', got '{statement}'")
            if name in forms:
                raise MetricConfigError(f"{name} is given twice")
            try:
                expr = parse(value)
            except ExpressionError as e:
                raise MetricConfigError(f"Cannot read {name}: {e}")
            forms[name] = self._classify(name, expr)
        for name in FUNCTION_NAMES:
            forms.setdefault(name, ClosedForm(name=name, family=FunctionFamily.CONSTANT, c=1))
        spec = MetricSpec(closed_forms=tuple(forms[name] for name in FUNCTION_NAMES))
        logger.debug(f"Numeric metric: {spec.description}")
        return spec

    @staticmethod
    def _classify(name: str, expr: sympy.Expr) -> ClosedForm:
        t = SPACETIME[0]
        if not expr.free_symbols <= {t}:
            raise MetricConfigError(f"{name} may depend on t only")
        expr = sympy.expand(expr)
        if t not in expr.free_symbols:
            if expr == 0:
                raise MetricConfigError(f"{name} must not vanish")
            return ClosedForm(name=name, family=FunctionFamily.CONSTANT, c=expr)
        polynomial = sympy.Poly(expr, t) if expr.is_polynomial(t) else None
        if polynomial is not None and polynomial.degree() == 1:
            c, d = polynomial.all_coeffs()
            return ClosedForm(name=name, family=FunctionFamily.LINEAR, c=c, d=d)
        coefficient, exponent = expr.as_coeff_exponent(t)
        if coefficient.free_symbols or coefficient * t**exponent != expr:
            raise MetricConfigError(f"{name} = {expr} is outside the family c, c*t + d, c*t^p")
        return ClosedForm(name=name, family=FunctionFamily.POWER, c=coefficient, p=exponent)

    def validate_metric(self, spec: MetricSpec, case: CaseSpec) -> None:
        """Check a numeric metric against the rules and nonvanishing constraints of a case."""
        bindings = function_bindings(spec)
        for symbol, replacement in case.rules.explicit:
            difference = sympy.simplify(symbol.xreplace(bindings) - replacement.xreplace(bindings))
            if difference != 0:
                raise MetricConstraintError(
                    f"Case {case.label} requires {symbol} = {replacement}; the metric {spec.description} gives "
                    f"{symbol} - ({replacement}) = {difference}"
                )
        for symbol in case.nonvanishing:
            if sympy.simplify(symbol.xreplace(bindings)) == 0:
                raise MetricConstraintError(
                    f"Case {case.label} requires {symbol} != 0; the metric {spec.description} gives {symbol} = 0"
                )

    def integrate_geodesic(self, spec: MetricSpec, ics: GeodesicState, h: float, n: int) -> Trajectory:
        """Classical fixed-step RK4 on the first-order system (position, velocity)."""
        if not spec.numeric:
            raise IntegrationError("Numeric integration needs a numeric metric")
        if h <= 0 or n < 0:
            raise IntegrationError(f"Invalid step {h} or step count {n}")

        acceleration = self.numeric_function(sympy.Matrix(self.geodesic_accelerations(spec)), spec)
        scale = [self.numeric_function(function_atom(name), spec) for name in FUNCTION_NAMES]

        def nondegenerate(s: float, state: np.ndarray) -> bool:
            if not np.all(np.isfinite(state)):
                return False
            args = (s, *state)
            return all(float(F(*args)) > 0 for F in scale)

        def rhs(s: float, state: np.ndarray) -> np.ndarray:
            accel = np.asarray(acceleration(s, *state), dtype=float).reshape(4)
            return np.concatenate([state[4:], accel])

        state = ics.as_array()
        if not nondegenerate(ics.s, state):
            raise IntegrationError(f"Metric {spec.description} is degenerate at the initial state")

        states: List[GeodesicState] = [ics]
        diverged = False
        s = ics.s
        stages = np.zeros((4, state.size))
        for step in range(n):
            for i in range(4):
                stage_state = state + h * (A_RK4[i, :i] @ stages[:i])
                stages[i] = rhs(s + C_RK4[i] * h, stage_state)
            candidate = state + h * (B_RK4 @ stages)
            s_next = ics.s + (step + 1) * h
            if not nondegenerate(s_next, candidate):
                logger.warning(f"Geodesic left the nondegenerate region at s = {s_next:.6g}; stopping")
                diverged = True
                break
            state, s = candidate, s_next
            states.append(GeodesicState.from_array(s, state))

        return Trajectory(states=states, step=h, metric=spec, diverged=diverged)


geometry_service = GeometryService()
