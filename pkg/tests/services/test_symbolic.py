import pytest
import sympy

from src.services.parser import format_expr, parse
from src.services.symbolic import (
    ACCELERATIONS,
    EMPTY_RULES,
    AtomKind,
    RewriteRuleSet,
    atom,
    atom_kind,
    content_normalize,
    is_zero,
    jet_atom,
    normalize,
    partial_diff,
    recombine,
    second_order_total_derivative,
    substitute,
    total_derivative,
    velocity_degree,
    velocity_split,
)
from src.utils.exceptions import (
    ExpressionError,
    JetOrderError,
    RewriteRuleError,
    UnknownSymbolError,
    VelocityDegreeError,
)


class TestAtoms:
    def test_atom_kinds(self):
        assert atom_kind(atom("s")) is AtomKind.COORDINATE
        assert atom_kind(atom("zd")) is AtomKind.VELOCITY
        assert atom_kind(atom("tdd")) is AtomKind.ACCELERATION
        assert atom_kind(atom("B''")) is AtomKind.FUNCTION
        assert atom_kind(atom("a7")) is AtomKind.PARAMETER
        assert atom_kind(atom("eta_xz")) is AtomKind.JET

    def test_unknown_atom(self):
        with pytest.raises(UnknownSymbolError):
            atom("w")

    def test_jet_partials_are_ordered(self):
        assert jet_atom("tau", ("x", "t")) == atom("tau_tx")
        with pytest.raises(UnknownSymbolError):
            atom("tau_xt")


class TestNormalize:
    def test_collects_like_terms(self):
        assert format_expr(parse("x*y + y*x")) == "2*x*y"

    def test_descending_graded_order(self):
        assert format_expr(parse("1 + x + x^2")) == "x^2 + x + 1"
        assert format_expr(parse("3*y + x")) == "x + 3*y"

    def test_zero_detection(self):
        assert is_zero(parse("(x + 1)^2 - x^2 - 2*x - 1"))
        assert normalize(0).is_zero

    def test_exact_rationals(self):
        assert format_expr(parse("x/3 + x/6")) == "1/2*x"

    def test_function_atoms_may_divide(self):
        canonical = normalize(parse("A^(-2)*A^3"))
        assert format_expr(canonical) == "A(t)"

    def test_coordinate_denominator_rejected(self):
        with pytest.raises(ExpressionError):
            normalize(parse("1/x"))

    def test_float_coefficient_rejected(self):
        with pytest.raises(ExpressionError):
            normalize(sympy.Float(1.5) * atom("x"))

    def test_division_by_zero_after_rewriting(self):
        rules = RewriteRuleSet.build({"A": 0})
        with pytest.raises(ExpressionError):
            normalize(parse("1/A"), rules)

    def test_content_normalize(self):
        canonical = content_normalize(normalize(parse("-4*x + 2*y")))
        assert format_expr(canonical) == "2*x - y"

    def test_order_of_operands_is_irrelevant(self):
        left = sympy.Add(atom("x") * atom("A"), atom("td") * atom("t"), sympy.Rational(1, 3), evaluate=False)
        right = sympy.Add(sympy.Rational(1, 3), atom("t") * atom("td"), atom("A") * atom("x"), evaluate=False)
        assert normalize(left) == normalize(right)

    def test_idempotent(self):
        rules = RewriteRuleSet.build({"C": atom("A"), "A''": 0})
        once = normalize(parse("C^2*zd^2 + A''*x - 2*A*C*td"), rules)
        assert normalize(once, rules) == once
        assert normalize(once) == once

    def test_deterministic_output(self):
        text = "B^2*x*eta_t - tau_z + C^2*phi_t"
        assert format_expr(parse(text)) == format_expr(parse(text))


class TestRewriteRules:
    def test_derivative_closure(self):
        rules = RewriteRuleSet.build({"A''": 0})
        assert is_zero(parse("A'''"), rules)
        assert not is_zero(parse("A'"), rules)

    def test_linear_function(self):
        rules = RewriteRuleSet.build({"A": parse("a*t")})
        assert is_zero(parse("A*A' - a^2*t"), rules)
        assert is_zero(parse("A''"), rules)

    def test_explicit_rules_win(self):
        rules = RewriteRuleSet.build({"A": parse("a*t"), "A'": parse("a")})
        assert dict(rules.explicit)[atom("A'")] == atom("a")

    def test_function_identification(self):
        rules = RewriteRuleSet.build({"C": atom("A")})
        assert is_zero(parse("C^2 - A^2"), rules)
        assert is_zero(parse("C' - A'"), rules)

    def test_cycle_rejected(self):
        with pytest.raises(RewriteRuleError):
            RewriteRuleSet.build({"A": atom("B"), "B": atom("A")})

    def test_merged(self):
        merged = RewriteRuleSet.build({"A'": 0}).merged(RewriteRuleSet.build({"C": atom("A")}))
        assert is_zero(parse("C'"), merged)
        assert EMPTY_RULES.merged(None) is EMPTY_RULES

    def test_text(self):
        assert str(RewriteRuleSet.build({"B": atom("A")})) == "B(t) = A(t)"


class TestDerivatives:
    def test_chain_rule_through_t(self):
        assert format_expr(partial_diff(parse("A^2"), atom("t"))) == "2*A(t)*A'(t)"
        assert partial_diff(parse("A^2"), atom("x")) == 0

    def test_jet_partials(self):
        assert partial_diff(atom("tau"), atom("x")) == atom("tau_x")
        assert partial_diff(atom("tau_x"), atom("t")) == atom("tau_tx")

    def test_total_derivative(self):
        assert format_expr(total_derivative(parse("t*x"))) == format_expr(parse("t*xd + x*td"))

    def test_total_derivative_of_jet_atom(self):
        expected = parse("mu_s + td*mu_t + xd*mu_x + yd*mu_y + zd*mu_z")
        assert is_zero(total_derivative(atom("mu")) - expected)

    def test_product_rule(self):
        f, g = parse("A*x"), parse("tau + y^2")
        expected = f * total_derivative(g) + g * total_derivative(f)
        assert is_zero(total_derivative(f * g) - expected)

    def test_total_derivative_of_a_function_of_s_and_t(self):
        derivative = substitute(total_derivative(atom("tau")), {"tau_x": 0, "tau_y": 0, "tau_z": 0})
        assert is_zero(derivative - parse("tau_s + td*tau_t"))

    def test_total_derivative_rejects_accelerations(self):
        with pytest.raises(JetOrderError):
            total_derivative(ACCELERATIONS[0])

    def test_second_order_total_derivative(self):
        assert is_zero(second_order_total_derivative(parse("td^2")) - parse("2*td*tdd"))


class TestSubstitution:
    def test_substitute(self):
        assert substitute(parse("tau_x + mu"), {"tau_x": 0, "mu": parse("s")}) == atom("s")

    def test_cyclic_bindings_rejected(self):
        with pytest.raises(RewriteRuleError):
            substitute(atom("x"), {"x": atom("y"), "y": atom("x")})


class TestVelocitySplit:
    def test_split_and_recombine(self):
        expr = parse("td*x + 3*td*y + xd^2 + z")
        split = velocity_split(expr)
        assert set(split) == {atom("td"), atom("xd") ** 2, sympy.S.One}
        assert format_expr(split[atom("td")]) == "x + 3*y"
        assert is_zero(recombine(split) - expr)

    def test_velocity_degree(self):
        assert velocity_degree(parse("td^3*x + xd")) == 3
        assert velocity_degree(parse("x")) == 0

    def test_degree_above_three(self):
        with pytest.raises(VelocityDegreeError):
            velocity_split(parse("td^2*xd^2"))
