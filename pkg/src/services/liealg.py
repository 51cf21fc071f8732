import itertools
import logging
from typing import Dict, List, Optional, Sequence, Tuple

import sympy

from ..models.algebra import LeviVerdict, LieAlgebra, SubspaceQ, Vector, unit
from ..models.symmetry import Generator
from ..utils.exceptions import ClosureError, InvariantViolationError, LinearDependenceError
from .symbolic import COORDINATES, normalize, partial_diff

logger = logging.getLogger(__name__)

FieldKey = Tuple[int, tuple]


def apply_field(field: Generator, expr) -> sympy.Expr:
    """Directional derivative X(h) = sum_a X^a d_a h over s, t, x, y, z."""
    return sum((c * partial_diff(expr, q) for c, q in zip(field.components, COORDINATES)), sympy.S.Zero)


def field_vector(field: Generator) -> Dict[FieldKey, sympy.Rational]:
    """Rational coordinates of a field over (direction, monomial) pairs."""
    vector: Dict[FieldKey, sympy.Rational] = {}
    for direction, coefficient in enumerate(field.components):
        for term in normalize(coefficient).terms:
            vector[(direction, term.monomial)] = term.coefficient
    return vector


def _coefficient_matrix(fields: Sequence[Generator], extra: Optional[Generator] = None):
    vectors = [field_vector(f) for f in fields]
    target = field_vector(extra) if extra is not None else {}
    keys = sorted({k for v in vectors for k in v} | set(target), key=repr)
    matrix = sympy.Matrix(len(keys), len(fields), lambda r, c: vectors[c].get(keys[r], 0))
    column = sympy.Matrix(len(keys), 1, lambda r, _: target.get(keys[r], 0))
    return matrix, column


def field_rank(fields: Sequence[Generator]) -> int:
    if not fields:
        return 0
    matrix, _ = _coefficient_matrix(fields)
    return matrix.rank()


def expand_in_span(field: Generator, fields: Sequence[Generator]) -> Optional[Vector]:
    """Rational coordinates of field in the span of fields, or None when it lies outside."""
    if not fields:
        return () if not field_vector(field) else None
    matrix, column = _coefficient_matrix(fields, field)
    try:
        solution, free = matrix.gauss_jordan_solve(column)
    except ValueError:
        return None
    if free.shape[0]:
        solution = solution.subs({p: 0 for p in free})
    return tuple(sympy.Rational(v) for v in solution)


class LieAlgebraService:
    def commutator(self, X: Generator, Y: Generator) -> Generator:
        components = [
            normalize(apply_field(X, y) - apply_field(Y, x)).to_expr()
            for x, y in zip(X.components, Y.components)
        ]
        gauge = normalize(apply_field(X, Y.f) - apply_field(Y, X.f)).to_expr()
        name = f"[{X.name or 'X'}, {Y.name or 'Y'}]"
        return Generator(name=name, f=gauge, **dict(zip(("mu", "tau", "xi", "eta", "phi"), components)))

    def structure_constants(self, basis: Sequence[Generator]) -> LieAlgebra:
        basis = tuple(basis)
        n = len(basis)
        if field_rank(basis) < n:
            raise LinearDependenceError(
                f"Basis {', '.join(g.name or '?' for g in basis)} is linearly dependent"
            )
        zero = tuple(sympy.S.Zero for _ in range(n))
        table: List[List[Vector]] = [[zero] * n for _ in range(n)]
        for i, j in itertools.combinations(range(n), 2):
            bracket = self.commutator(basis[i], basis[j])
            coords = expand_in_span(bracket, basis)
            if coords is None:
                pair = (basis[i].name, basis[j].name)
                logger.info(f"Bracket {pair} leaves the span: {bracket.field_text()}")
                raise ClosureError(
                    f"[{pair[0]}, {pair[1]}] = {bracket.field_text()} is outside the span of the basis",
                    pair=pair,
                    residual=bracket,
                )
            table[i][j] = coords
            table[j][i] = tuple(-c for c in coords)
        algebra = LieAlgebra(basis=basis, constants=tuple(tuple(row) for row in table))
        self.check_jacobi(algebra)
        return algebra

    def check_jacobi(self, alg: LieAlgebra) -> None:
        n = alg.n
        for i, j, k in itertools.combinations(range(n), 3):
            ei, ej, ek = unit(n, i), unit(n, j), unit(n, k)
            total = [
                a + b + c
                for a, b, c in zip(
                    alg.bracket(alg.bracket(ei, ej), ek),
                    alg.bracket(alg.bracket(ej, ek), ei),
                    alg.bracket(alg.bracket(ek, ei), ej),
                )
            ]
            if any(v != 0 for v in total):
                raise InvariantViolationError(f"Jacobi identity fails on basis triple ({i + 1}, {j + 1}, {k + 1})")

    def killing_form(self, alg: LieAlgebra) -> sympy.Matrix:
        ads = [alg.ad(unit(alg.n, i)) for i in range(alg.n)]
        return sympy.Matrix(alg.n, alg.n, lambda i, j: (ads[i] * ads[j]).trace())

    def check_killing_invariance(self, alg: LieAlgebra, kappa: Optional[sympy.Matrix] = None) -> None:
        """kappa([x, y], z) + kappa(y, [x, z]) = 0 on basis triples."""
        kappa = kappa if kappa is not None else self.killing_form(alg)
        n = alg.n

        def form(u, v):
            return (sympy.Matrix([u]) * kappa * sympy.Matrix(v))[0, 0]

        for i, j, k in itertools.product(range(n), repeat=3):
            x, y, z = unit(n, i), unit(n, j), unit(n, k)
            if form(alg.bracket(x, y), z) + form(y, alg.bracket(x, z)) != 0:
                raise InvariantViolationError(f"Killing form is not ad-invariant at ({i + 1}, {j + 1}, {k + 1})")

    def _bracket_span(self, alg: LieAlgebra, left: SubspaceQ, right: SubspaceQ) -> SubspaceQ:
        return SubspaceQ.span(
            [alg.bracket(u, v) for u in left.rows for v in right.rows], alg.n
        )

    def derived_series(self, alg: LieAlgebra, start: Optional[SubspaceQ] = None) -> List[SubspaceQ]:
        series = [start if start is not None else SubspaceQ.whole(alg.n)]
        while not series[-1].is_zero:
            following = self._bracket_span(alg, series[-1], series[-1])
            if following == series[-1]:
                break
            series.append(following)
        return series

    def lower_central_series(self, alg: LieAlgebra) -> List[SubspaceQ]:
        whole = SubspaceQ.whole(alg.n)
        series = [whole]
        while not series[-1].is_zero:
            following = self._bracket_span(alg, whole, series[-1])
            if following == series[-1]:
                break
            series.append(following)
        return series

    def is_solvable(self, alg: LieAlgebra) -> bool:
        return self.derived_series(alg)[-1].is_zero

    def is_nilpotent(self, alg: LieAlgebra) -> bool:
        return self.lower_central_series(alg)[-1].is_zero

    def solvable_radical(self, alg: LieAlgebra) -> SubspaceQ:
        """Killing-orthogonal complement of [L, L]."""
        n = alg.n
        derived = self._bracket_span(alg, SubspaceQ.whole(n), SubspaceQ.whole(n))
        if derived.is_zero:
            radical = SubspaceQ.whole(n)
        else:
            constraints = sympy.Matrix([list(row) for row in derived.rows]) * self.killing_form(alg)
            radical = SubspaceQ.span([list(v) for v in constraints.nullspace()], n)

        for k in range(n):
            for row in radical.rows:
                if not radical.contains(alg.bracket(unit(n, k), row)):
                    raise InvariantViolationError("Computed radical is not an ideal")
        if not self.derived_series(alg, radical)[-1].is_zero:
            raise InvariantViolationError("Computed radical is not solvable")
        return radical

    def levi_check(self, alg: LieAlgebra, candidate: SubspaceQ) -> LeviVerdict:
        """Check that candidate is an sl(2, R) complement of the radical."""
        n = alg.n
        radical = self.solvable_radical(alg)
        if candidate.dim != 3:
            return LeviVerdict(False, f"candidate has dimension {candidate.dim}, not 3", radical_dim=radical.dim)
        rows = [list(r) for r in candidate.rows]
        for u, v in itertools.combinations(rows, 2):
            if not candidate.contains(alg.bracket(u, v)):
                return LeviVerdict(False, "candidate is not closed under the bracket", radical_dim=radical.dim)
        if candidate.intersection_dim(radical) != 0 or candidate.dim + radical.dim != n:
            return LeviVerdict(False, "candidate is not a complement of the radical", radical_dim=radical.dim)

        basis = sympy.Matrix(rows).T

        def local(vector) -> sympy.Matrix:
            solution, _ = basis.gauss_jordan_solve(sympy.Matrix(vector))
            return solution

        def ambient(coords) -> Vector:
            return tuple(sympy.Rational(v) for v in basis * sympy.Matrix(coords))

        grid = sorted(
            (c for c in itertools.product(range(-2, 3), repeat=3) if any(c)),
            key=lambda c: (sum(abs(v) for v in c), [-v for v in c]),
        )
        for coefficients in grid:
            h = ambient(coefficients)
            restricted = sympy.Matrix.hstack(*[local(alg.bracket(h, r)) for r in rows])
            eigenvalues = restricted.eigenvals()
            roots = sorted(eigenvalues, key=lambda v: sympy.re(v))
            if len(roots) != 3 or not all(r.is_rational for r in roots):
                continue
            low, mid, high = roots
            if mid != 0 or low != -high or high == 0:
                continue
            scale = sympy.Rational(2) / high
            h = tuple(scale * v for v in h)
            restricted = restricted * scale
            e = ambient((restricted - 2 * sympy.eye(3)).nullspace()[0])
            f0 = ambient((restricted + 2 * sympy.eye(3)).nullspace()[0])
            ef = alg.bracket(e, f0)
            pivot = next(k for k, v in enumerate(h) if v != 0)
            c = ef[pivot] / h[pivot]
            if c == 0 or any(a != c * b for a, b in zip(ef, h)):
                continue
            f = tuple(v / c for v in f0)
            holds = (
                alg.bracket(h, e) == tuple(2 * v for v in e)
                and alg.bracket(h, f) == tuple(-2 * v for v in f)
                and alg.bracket(e, f) == h
            )
            if holds:
                return LeviVerdict(True, h=h, e=e, f=f, radical_dim=radical.dim)
        return LeviVerdict(False, "no element with ad eigenvalues {-2, 0, 2}", radical_dim=radical.dim)

    def export_brackets(self, alg: LieAlgebra) -> List[Dict]:
        return [
            {"i": i + 1, "j": j + 1, "coeffs": [rational_text(c) for c in alg.constants[i][j]]}
            for i, j in itertools.combinations(range(alg.n), 2)
            if any(c != 0 for c in alg.constants[i][j])
        ]


def rational_text(value) -> str:
    value = sympy.Rational(value)
    return str(value.p) if value.q == 1 else f"{value.p}/{value.q}"


lie_service = LieAlgebraService()
