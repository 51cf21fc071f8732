import pytest
import sympy

from src.services.parser import format_expr, parse, parse_constraints, parse_rules, tokenize
from src.services.symbolic import atom, is_zero
from src.utils.exceptions import ExpressionSyntaxError, UnknownSymbolError


class TestTokenize:
    def test_tokens(self):
        kinds = [token.kind for token in tokenize("A'(t)^2 + 3")]
        assert kinds == ["ident", "op", "op", "ident", "op", "op", "number", "op", "number", "end"]

    def test_double_star_is_power(self):
        assert [token.text for token in tokenize("x**2")][:3] == ["x", "^", "2"]

    def test_unexpected_character(self):
        with pytest.raises(ExpressionSyntaxError) as exc_info:
            tokenize("x $ y")
        assert exc_info.value.position == 2


class TestParse:
    def test_function_atoms(self):
        assert parse("A'(t)^2") == atom("A'") ** 2
        assert parse("B''") == atom("B''")

    def test_power_aliases(self):
        assert parse("x**2") == parse("x^2")

    def test_precedence(self):
        assert is_zero(parse("-x^2 + 2*3") - (-atom("x") ** 2 + 6))

    def test_decimal_is_exact(self):
        assert parse("0.5*x") == sympy.Rational(1, 2) * atom("x")

    def test_negative_exponent(self):
        assert format_expr(parse("A^(-2)")) == "A(t)^(-2)"

    def test_unknown_symbol_position(self):
        with pytest.raises(UnknownSymbolError) as exc_info:
            parse("x + q")
        assert exc_info.value.name == "q"
        assert exc_info.value.position == 4

    def test_non_integer_exponent(self):
        with pytest.raises(ExpressionSyntaxError):
            parse("x^y")

    def test_division_by_literal_zero(self):
        with pytest.raises(ExpressionSyntaxError):
            parse("x/0")

    def test_unbalanced_parenthesis(self):
        with pytest.raises(ExpressionSyntaxError):
            parse("(x + y")

    def test_primes_only_on_metric_functions(self):
        with pytest.raises(ExpressionSyntaxError):
            parse("x'")

    def test_function_argument_must_be_t(self):
        with pytest.raises(ExpressionSyntaxError):
            parse("A(x)")

    def test_format_round_trip(self):
        text = "-A(t)^2*mu_s + 2*A(t)^2*xi_x + 2*A(t)*A'(t)*tau"
        assert format_expr(parse(text)) == text


class TestConstraints:
    def test_rules_and_nonvanishing(self):
        rules, nonvanishing = parse_constraints("A'' = 0; B = A, C'' != 0")
        assert is_zero(parse("A'''"), rules)
        assert is_zero(parse("B' - A'"), rules)
        assert nonvanishing == (atom("C''"),)

    def test_unicode_not_equal(self):
        _, nonvanishing = parse_constraints("B' ≠ 0")
        assert nonvanishing == (atom("B'"),)

    def test_only_nonzero_inequalities(self):
        with pytest.raises(ExpressionSyntaxError):
            parse_constraints("A != 1")

    def test_left_side_must_be_atom(self):
        with pytest.raises(ExpressionSyntaxError):
            parse_rules("A + B = 0")

    def test_empty_text(self):
        assert not parse_rules("")
