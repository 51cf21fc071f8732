"""Expression grammar.

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('-' | '+') unary | power
    power   := primary ('^' exponent)?
    exponent:= INT | '(' '-'? INT ')'
    primary := NUMBER | atom | '(' expr ')'
    atom    := IDENT | ('A'|'B'|'C') "'"* ('(' 't' ')')?

Whitespace is insignificant. Decimal literals are read as exact rationals.
"""
import logging
import re
from typing import List, NamedTuple, Tuple

import sympy

from .symbolic import (
    FUNCTION_NAMES,
    AtomKind,
    CanonicalExpr,
    RewriteRuleSet,
    atom,
    atom_info,
    atom_kind,
    normalize,
)
from ..utils.exceptions import ExpressionSyntaxError, UnknownSymbolError

logger = logging.getLogger(__name__)

_TOKEN_RE = re.compile(
    r"(?P<number>\d+(?:\.\d*)?|\.\d+)"
    r"|(?P<ident>[A-Za-z][A-Za-z0-9_]*)"
    r"|(?P<op>\*\*|[-+*/^()'])"
)


class Token(NamedTuple):
    kind: str
    text: str
    position: int


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    position = 0
    while position < len(text):
        if text[position].isspace():
            position += 1
            continue
        match = _TOKEN_RE.match(text, position)
        if not match:
            raise ExpressionSyntaxError(f"Unexpected character {text[position]!r}", position)
        kind = match.lastgroup
        value = match.group(kind)
        if value == "**":
            value = "^"
        tokens.append(Token(kind, value, position))
        position = match.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.index = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def _accept(self, text: str) -> bool:
        if self.current.kind == "op" and self.current.text == text:
            self.index += 1
            return True
        return False

    def _expect(self, text: str) -> Token:
        token = self.current
        if not self._accept(text):
            found = token.text or "end of input"
            raise ExpressionSyntaxError(f"Expected '{text}' but found '{found}'", token.position)
        return token

    def parse(self) -> sympy.Expr:
        expr = self._expression()
        if self.current.kind != "end":
            raise ExpressionSyntaxError(f"Unexpected '{self.current.text}'", self.current.position)
        return expr

    def _expression(self) -> sympy.Expr:
        result = self._term()
        while True:
            if self._accept("+"):
                result = result + self._term()
            elif self._accept("-"):
                result = result - self._term()
            else:
                return result

    def _term(self) -> sympy.Expr:
        result = self._unary()
        while True:
            if self._accept("*"):
                result = result * self._unary()
            elif self.current.kind == "op" and self.current.text == "/":
                position = self.current.position
                self.index += 1
                divisor = self._unary()
                if divisor == 0:
                    raise ExpressionSyntaxError("Division by zero", position)
                result = result / divisor
            else:
                return result

    def _unary(self) -> sympy.Expr:
        if self._accept("-"):
            return -self._unary()
        if self._accept("+"):
            return self._unary()
        return self._power()

    def _power(self) -> sympy.Expr:
        base = self._primary()
        if self._accept("^"):
            return base ** self._exponent()
        return base

    def _exponent(self) -> sympy.Integer:
        parenthesized = self._accept("(")
        negative = parenthesized and self._accept("-")
        token = self.current
        if token.kind != "number" or not token.text.isdigit():
            raise ExpressionSyntaxError("Exponents must be integers", token.position)
        self.index += 1
        if parenthesized:
            self._expect(")")
        value = int(token.text)
        return sympy.Integer(-value if negative else value)

    def _primary(self) -> sympy.Expr:
        token = self.current
        if token.kind == "number":
            self.index += 1
            return sympy.Rational(token.text)
        if token.kind == "ident":
            self.index += 1
            return self._atom(token)
        if self._accept("("):
            inner = self._expression()
            self._expect(")")
            return inner
        found = token.text or "end of input"
        raise ExpressionSyntaxError(f"Unexpected '{found}'", token.position)

    def _atom(self, token: Token) -> sympy.Symbol:
        name = token.text
        primes = 0
        while self._accept("'"):
            primes += 1
        if name in FUNCTION_NAMES:
            name += "'" * primes
            if self.current.kind == "op" and self.current.text == "(":
                argument = self.tokens[self.index + 1]
                if argument.kind != "ident" or argument.text != "t":
                    raise ExpressionSyntaxError("Metric functions take the argument (t)", argument.position)
                self.index += 2
                self._expect(")")
        elif primes:
            raise ExpressionSyntaxError(f"Only A, B, C may carry primes, not '{name}'", token.position)
        try:
            return atom(name)
        except UnknownSymbolError:
            raise UnknownSymbolError(name, token.position)


def parse(text: str) -> sympy.Expr:
    return _Parser(text).parse()


def _format_atom(symbol: sympy.Symbol) -> str:
    if atom_kind(symbol) is AtomKind.FUNCTION:
        return f"{symbol.name}(t)"
    return symbol.name


def _format_power(symbol: sympy.Symbol, exponent: int) -> str:
    text = _format_atom(symbol)
    if exponent == 1:
        return text
    if exponent < 0:
        return f"{text}^(-{-exponent})"
    return f"{text}^{exponent}"


def _format_rational(value: sympy.Rational) -> str:
    return str(value.p) if value.q == 1 else f"{value.p}/{value.q}"


def format_canonical(c: CanonicalExpr) -> str:
    if c.is_zero:
        return "0"
    pieces = []
    for i, term in enumerate(c.terms):
        magnitude = abs(term.coefficient)
        factors = [_format_power(a, e) for a, e in term.monomial]
        if magnitude != 1 or not factors:
            factors.insert(0, _format_rational(magnitude))
        body = "*".join(factors)
        negative = term.coefficient < 0
        if i == 0:
            pieces.append(f"-{body}" if negative else body)
        else:
            pieces.append(f" - {body}" if negative else f" + {body}")
    return "".join(pieces)


def format_expr(e, rules: RewriteRuleSet = None) -> str:
    if isinstance(e, sympy.Symbol):
        atom_info(e.name)
        return _format_atom(e)
    return format_canonical(normalize(e, rules))


def _split_statements(text: str) -> List[Tuple[str, int]]:
    statements = []
    offset = 0
    for chunk in re.split(r"([;,\n])", text):
        if chunk not in (";", ",", "\n") and chunk.strip():
            statements.append((chunk, offset))
        offset += len(chunk)
    return statements


def parse_constraints(text: str) -> Tuple[RewriteRuleSet, Tuple[sympy.Symbol, ...]]:
    """Parse ``A'' = 0; B = A; C'' != 0`` into rewrite rules and nonvanishing atoms."""
    rules = {}
    nonvanishing = []
    for statement, offset in _split_statements(text):
        match = re.match(r"^(.*?)(!=|≠|=)(.*)$", statement)
        if not match:
            raise ExpressionSyntaxError("Expected 'atom = expr' or 'atom != 0'", offset)
        lhs = parse(match.group(1))
        if not isinstance(lhs, sympy.Symbol):
            raise ExpressionSyntaxError("Left-hand side must be a single atom", offset)
        rhs = parse(match.group(3))
        if match.group(2) == "=":
            rules[lhs] = rhs
        else:
            if rhs != 0:
                raise ExpressionSyntaxError("Only '!= 0' constraints are supported", offset + match.start(3))
            nonvanishing.append(lhs)
    return RewriteRuleSet.build(rules), tuple(nonvanishing)


def parse_rules(text: str) -> RewriteRuleSet:
    return parse_constraints(text)[0]
