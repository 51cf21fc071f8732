"""Exact term-rewriting core.

Expressions are sympy expressions over a closed set of named atoms:

- coordinates ``s t x y z``
- velocities ``td xd yd zd`` and accelerations ``tdd xdd ydd zdd``
- metric-function atoms ``A B C`` and their t-derivatives ``A' A''`` ...
- parameters ``a1 .. a9 a b``
- jet atoms ``mu tau xi eta phi f`` with opaque partials such as ``tau_x``

Every expression of the supported class has a unique canonical form: a
Laurent polynomial (negative exponents on function atoms only) with exact
rational coefficients, terms sorted in descending graded-lex order.
"""
import logging
import re
from dataclasses import dataclass
from enum import Enum
from functools import cached_property, lru_cache, reduce
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Tuple

import sympy
from sympy.polys.orderings import grlex

from ..config import settings
from ..utils.exceptions import (
    ExpressionError,
    JetOrderError,
    RewriteRuleError,
    UnknownSymbolError,
    VelocityDegreeError,
)

logger = logging.getLogger(__name__)


class AtomKind(str, Enum):
    COORDINATE = "coordinate"
    VELOCITY = "velocity"
    ACCELERATION = "acceleration"
    FUNCTION = "function"
    PARAMETER = "parameter"
    JET = "jet"


COORDINATE_NAMES = ("s", "t", "x", "y", "z")
VELOCITY_NAMES = ("td", "xd", "yd", "zd")
ACCELERATION_NAMES = ("tdd", "xdd", "ydd", "zdd")
FUNCTION_NAMES = ("A", "B", "C")
PARAMETER_NAMES = tuple(f"a{i}" for i in range(1, 10)) + ("a", "b")
JET_NAMES = ("mu", "tau", "xi", "eta", "phi", "f")

_KIND_RANK = {
    AtomKind.COORDINATE: 0,
    AtomKind.VELOCITY: 1,
    AtomKind.ACCELERATION: 2,
    AtomKind.FUNCTION: 3,
    AtomKind.PARAMETER: 4,
    AtomKind.JET: 5,
}

_FUNCTION_RE = re.compile(r"^([ABC])('*)$")
_JET_RE = re.compile(r"^(mu|tau|xi|eta|phi|f)(?:_([stxyz]+))?$")


class AtomInfo(NamedTuple):
    kind: AtomKind
    base: str
    order: int
    derivatives: Tuple[str, ...] = ()


@lru_cache(maxsize=None)
def atom_info(name: str) -> AtomInfo:
    if name in COORDINATE_NAMES:
        return AtomInfo(AtomKind.COORDINATE, name, COORDINATE_NAMES.index(name))
    if name in VELOCITY_NAMES:
        return AtomInfo(AtomKind.VELOCITY, name, VELOCITY_NAMES.index(name))
    if name in ACCELERATION_NAMES:
        return AtomInfo(AtomKind.ACCELERATION, name, ACCELERATION_NAMES.index(name))
    if name in PARAMETER_NAMES:
        return AtomInfo(AtomKind.PARAMETER, name, PARAMETER_NAMES.index(name))
    match = _FUNCTION_RE.match(name)
    if match:
        return AtomInfo(AtomKind.FUNCTION, match.group(1), len(match.group(2)))
    match = _JET_RE.match(name)
    if match:
        derivatives = tuple(match.group(2) or "")
        ordered = tuple(sorted(derivatives, key=COORDINATE_NAMES.index))
        if derivatives != ordered:
            raise UnknownSymbolError(name)
        return AtomInfo(AtomKind.JET, match.group(1), JET_NAMES.index(match.group(1)), derivatives)
    raise UnknownSymbolError(name)


def atom_kind(symbol: sympy.Symbol) -> AtomKind:
    return atom_info(symbol.name).kind


def atom_sort_key(symbol: sympy.Symbol) -> tuple:
    info = atom_info(symbol.name)
    rank = _KIND_RANK[info.kind]
    if info.kind is AtomKind.FUNCTION:
        return (rank, FUNCTION_NAMES.index(info.base), info.order)
    if info.kind is AtomKind.JET:
        indices = tuple(COORDINATE_NAMES.index(d) for d in info.derivatives)
        return (rank, info.order, len(indices), indices)
    return (rank, info.order)


@lru_cache(maxsize=None)
def atom(name: str) -> sympy.Symbol:
    atom_info(name)
    return sympy.Symbol(name)


def function_atom(base: str, order: int = 0) -> sympy.Symbol:
    return atom(base + "'" * order)


def jet_atom(base: str, derivatives: Iterable[str] = ()) -> sympy.Symbol:
    ordered = sorted(derivatives, key=COORDINATE_NAMES.index)
    return atom(base + ("_" + "".join(ordered) if ordered else ""))


COORDINATES = tuple(atom(name) for name in COORDINATE_NAMES)
SPACETIME = COORDINATES[1:]
VELOCITIES = tuple(atom(name) for name in VELOCITY_NAMES)
ACCELERATIONS = tuple(atom(name) for name in ACCELERATION_NAMES)


def next_order(symbol: sympy.Symbol) -> sympy.Symbol:
    info = atom_info(symbol.name)
    if info.kind is not AtomKind.FUNCTION:
        raise ExpressionError(f"{symbol} is not a metric-function atom")
    return function_atom(info.base, info.order + 1)


def jet_partial(symbol: sympy.Symbol, coordinate: sympy.Symbol) -> sympy.Symbol:
    info = atom_info(symbol.name)
    return jet_atom(info.base, info.derivatives + (coordinate.name,))


def atoms_of_kind(expr, kind: AtomKind) -> List[sympy.Symbol]:
    symbols = sympy.sympify(expr).free_symbols
    return sorted((a for a in symbols if atom_kind(a) is kind), key=atom_sort_key)


@dataclass(frozen=True)
class Term:
    coefficient: sympy.Rational
    monomial: Tuple[Tuple[sympy.Symbol, int], ...] = ()

    @property
    def degree(self) -> int:
        return sum(exponent for _, exponent in self.monomial)

    def to_expr(self) -> sympy.Expr:
        return self.coefficient * sympy.Mul(*[a ** e for a, e in self.monomial])


@dataclass(frozen=True)
class CanonicalExpr:
    terms: Tuple[Term, ...] = ()

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def to_expr(self) -> sympy.Expr:
        return sympy.Add(*[term.to_expr() for term in self.terms])

    def atoms(self) -> List[sympy.Symbol]:
        found = {a for term in self.terms for a, _ in term.monomial}
        return sorted(found, key=atom_sort_key)

    def __len__(self) -> int:
        return len(self.terms)

    def __str__(self) -> str:
        from .parser import format_canonical
        return format_canonical(self)


ZERO = CanonicalExpr()


def _monomial_order(monomials: Iterable[tuple]):
    atoms_seen = sorted({a for mono in monomials for a, _ in mono}, key=atom_sort_key)
    index = {a: i for i, a in enumerate(atoms_seen)}

    def key(mono):
        vector = [0] * len(atoms_seen)
        for a, e in mono:
            vector[index[a]] = e
        return grlex(tuple(vector))

    return key


def _collect(expanded: sympy.Expr) -> CanonicalExpr:
    if expanded.has(sympy.zoo, sympy.nan, sympy.oo, -sympy.oo):
        raise ExpressionError("Expression divides by zero after rewriting")
    collected: Dict[tuple, sympy.Rational] = {}
    for term in sympy.Add.make_args(expanded):
        coeff, rest = term.as_coeff_Mul()
        if not coeff.is_Rational:
            raise ExpressionError(f"Non-rational coefficient {coeff} in {term}")
        powers: Dict[sympy.Symbol, int] = {}
        for factor in sympy.Mul.make_args(rest):
            if factor == sympy.S.One:
                continue
            base, exponent = factor.as_base_exp()
            if not isinstance(base, sympy.Symbol) or not exponent.is_Integer:
                raise ExpressionError(f"Factor {factor} is outside the supported expression class")
            if exponent < 0 and atom_kind(base) is not AtomKind.FUNCTION:
                raise ExpressionError(f"Negative power of {base}: only metric functions may divide")
            powers[base] = powers.get(base, 0) + int(exponent)
        monomial = tuple(sorted(((a, e) for a, e in powers.items() if e != 0),
                                key=lambda pair: atom_sort_key(pair[0])))
        collected[monomial] = collected.get(monomial, sympy.S.Zero) + coeff
    key = _monomial_order(collected)
    ordered = sorted(collected.items(), key=lambda item: key(item[0]), reverse=True)
    return CanonicalExpr(tuple(Term(sympy.Rational(c), m) for m, c in ordered if c != 0))


def _find_cycle(graph: Mapping[sympy.Symbol, Iterable[sympy.Symbol]]) -> Optional[List[sympy.Symbol]]:
    state: Dict[sympy.Symbol, int] = {}
    path: List[sympy.Symbol] = []

    def visit(node) -> Optional[List[sympy.Symbol]]:
        state[node] = 1
        path.append(node)
        for nxt in sorted(graph.get(node, ()), key=atom_sort_key):
            if nxt not in graph:
                continue
            if state.get(nxt) == 1:
                return path[path.index(nxt):] + [nxt]
            if state.get(nxt) is None:
                found = visit(nxt)
                if found:
                    return found
        state[node] = 2
        path.pop()
        return None

    for node in sorted(graph, key=atom_sort_key):
        if state.get(node) is None:
            found = visit(node)
            if found:
                return found
    return None


@dataclass(frozen=True)
class RewriteRuleSet:
    """Atom rewrite rules closed under t-differentiation of metric functions."""

    explicit: Tuple[Tuple[sympy.Symbol, sympy.Expr], ...] = ()
    rules: Tuple[Tuple[sympy.Symbol, sympy.Expr], ...] = ()

    @classmethod
    def build(cls, mapping: Mapping) -> "RewriteRuleSet":
        explicit: Dict[sympy.Symbol, sympy.Expr] = {}
        for key, value in mapping.items():
            symbol = atom(key) if isinstance(key, str) else key
            if not isinstance(symbol, sympy.Symbol):
                raise RewriteRuleError(f"Rule key {key} is not an atom")
            atom_info(symbol.name)
            explicit[symbol] = sympy.sympify(value)

        closed = dict(explicit)
        for symbol, replacement in explicit.items():
            if atom_kind(symbol) is not AtomKind.FUNCTION:
                continue
            current_atom, current = symbol, replacement
            while atom_info(current_atom.name).order < settings.max_derivative_order:
                current_atom = next_order(current_atom)
                current = sympy.expand(partial_diff(current, COORDINATES[1]))
                if current_atom in explicit:
                    break
                closed.setdefault(current_atom, current)

        graph = {k: v.free_symbols for k, v in closed.items()}
        cycle = _find_cycle(graph)
        if cycle:
            raise RewriteRuleError("Cyclic rewrite rules: " + " -> ".join(str(a) for a in cycle))

        def ordered(items):
            return tuple(sorted(items.items(), key=lambda pair: atom_sort_key(pair[0])))

        return cls(ordered(explicit), ordered(closed))

    @classmethod
    def empty(cls) -> "RewriteRuleSet":
        return cls()

    @cached_property
    def mapping(self) -> Dict[sympy.Symbol, sympy.Expr]:
        return dict(self.rules)

    def rule_for(self, symbol: sympy.Symbol) -> Optional[sympy.Expr]:
        found = self.mapping.get(symbol)
        if found is not None or atom_kind(symbol) is not AtomKind.FUNCTION:
            return found
        info = atom_info(symbol.name)
        if info.order <= settings.max_derivative_order:
            return None
        # beyond the eager closure depth: differentiate the deepest known rule
        top = function_atom(info.base, settings.max_derivative_order)
        replacement = self.mapping.get(top)
        if replacement is None:
            return None
        for _ in range(info.order - settings.max_derivative_order):
            replacement = partial_diff(replacement, COORDINATES[1])
        return replacement

    def apply(self, expr) -> sympy.Expr:
        expr = sympy.sympify(expr)
        if not self.rules:
            return expr
        for _ in range(len(self.rules) + settings.max_derivative_order + 2):
            replacements = {}
            for symbol in expr.free_symbols:
                replacement = self.rule_for(symbol)
                if replacement is not None:
                    replacements[symbol] = replacement
            if not replacements:
                return expr
            expr = expr.xreplace(replacements)
        raise RewriteRuleError("Rule application did not reach a fixpoint")

    def merged(self, other: Optional["RewriteRuleSet"]) -> "RewriteRuleSet":
        if not other:
            return self
        combined = dict(self.explicit)
        combined.update(dict(other.explicit))
        return RewriteRuleSet.build(combined)

    def __bool__(self) -> bool:
        return bool(self.rules)

    def __str__(self) -> str:
        from .parser import format_expr
        return "; ".join(f"{format_expr(k)} = {format_expr(v)}" for k, v in self.explicit)


EMPTY_RULES = RewriteRuleSet.empty()


def normalize(e, rules: Optional[RewriteRuleSet] = None) -> CanonicalExpr:
    if isinstance(e, CanonicalExpr):
        e = e.to_expr()
    expr = sympy.expand(sympy.sympify(e))
    if rules:
        expr = sympy.expand(rules.apply(expr))
    return _collect(expr)


def is_zero(e, rules: Optional[RewriteRuleSet] = None) -> bool:
    return normalize(e, rules).is_zero


def partial_diff(e, symbol: sympy.Symbol) -> sympy.Expr:
    """Partial derivative with metric functions chained through t and jet atoms through every coordinate."""
    expr = sympy.sympify(e)
    result = sympy.diff(expr, symbol)
    if atom_kind(symbol) is not AtomKind.COORDINATE:
        return result
    for a in sorted(expr.free_symbols, key=atom_sort_key):
        kind = atom_kind(a)
        if kind is AtomKind.FUNCTION and symbol.name == "t":
            result += sympy.diff(expr, a) * next_order(a)
        elif kind is AtomKind.JET:
            result += sympy.diff(expr, a) * jet_partial(a, symbol)
    return result


def total_derivative(e) -> sympy.Expr:
    expr = sympy.sympify(e)
    if atoms_of_kind(expr, AtomKind.ACCELERATION):
        raise JetOrderError(f"First-order total derivative applied to {expr}, which contains accelerations")
    result = partial_diff(expr, COORDINATES[0])
    for coordinate, velocity in zip(SPACETIME, VELOCITIES):
        result += velocity * partial_diff(expr, coordinate)
    return result


def second_order_total_derivative(e) -> sympy.Expr:
    expr = sympy.sympify(e)
    result = partial_diff(expr, COORDINATES[0])
    for coordinate, velocity, acceleration in zip(SPACETIME, VELOCITIES, ACCELERATIONS):
        result += velocity * partial_diff(expr, coordinate)
        result += acceleration * partial_diff(expr, velocity)
    return result


def substitute(e, bindings: Mapping) -> sympy.Expr:
    resolved = {}
    for key, value in bindings.items():
        symbol = atom(key) if isinstance(key, str) else key
        resolved[symbol] = sympy.sympify(value)
    cycle = _find_cycle({k: v.free_symbols for k, v in resolved.items()})
    if cycle:
        raise RewriteRuleError("Cyclic bindings: " + " -> ".join(str(a) for a in cycle))
    return sympy.sympify(e).xreplace(resolved)


def velocity_degree(e, rules: Optional[RewriteRuleSet] = None) -> int:
    canonical = e if isinstance(e, CanonicalExpr) else normalize(e, rules)
    degrees = [sum(k for a, k in term.monomial if atom_kind(a) is AtomKind.VELOCITY)
               for term in canonical.terms]
    return max(degrees, default=0)


def velocity_split(e, rules: Optional[RewriteRuleSet] = None) -> Dict[sympy.Expr, CanonicalExpr]:
    canonical = e if isinstance(e, CanonicalExpr) else normalize(e, rules)
    groups: Dict[tuple, List[Term]] = {}
    for term in canonical.terms:
        velocity_part = tuple((a, k) for a, k in term.monomial if atom_kind(a) is AtomKind.VELOCITY)
        rest = tuple((a, k) for a, k in term.monomial if atom_kind(a) is not AtomKind.VELOCITY)
        if sum(k for _, k in velocity_part) > 3:
            raise VelocityDegreeError(f"Velocity degree above 3 in term {term.to_expr()}")
        groups.setdefault(velocity_part, []).append(Term(term.coefficient, rest))

    key = _monomial_order([tuple((v, 1) for v in VELOCITIES)] + list(groups))
    split: Dict[sympy.Expr, CanonicalExpr] = {}
    for velocity_part in sorted(groups, key=key, reverse=True):
        monomial = sympy.Mul(*[a ** k for a, k in velocity_part])
        split[monomial] = _collect(sympy.Add(*[t.to_expr() for t in groups[velocity_part]]))
    return split


def recombine(split: Mapping[sympy.Expr, CanonicalExpr]) -> sympy.Expr:
    return sympy.Add(*[monomial * coefficient.to_expr() for monomial, coefficient in split.items()])


def content_normalize(c: CanonicalExpr) -> CanonicalExpr:
    """Divide by the rational content and make the leading coefficient positive."""
    if c.is_zero:
        return c
    numerators = [abs(term.coefficient.p) for term in c.terms]
    denominators = [term.coefficient.q for term in c.terms]
    content = sympy.Rational(reduce(sympy.igcd, numerators), reduce(sympy.ilcm, denominators))
    factor = (-1 if c.terms[0].coefficient < 0 else 1) / content
    return CanonicalExpr(tuple(Term(term.coefficient * factor, term.monomial) for term in c.terms))
