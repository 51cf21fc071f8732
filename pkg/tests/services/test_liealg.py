import pytest
import sympy

from src.models.algebra import SubspaceQ, unit
from src.models.symmetry import Generator
from src.services.catalog import get_case
from src.services.liealg import LieAlgebraService, expand_in_span, field_rank, rational_text
from src.services.noether import noether_service
from src.utils.exceptions import ClosureError, LinearDependenceError


@pytest.fixture
def lie():
    return LieAlgebraService()


@pytest.fixture
def sl2_basis():
    return [Generator(name="X1", tau="1"), Generator(name="X2", tau="t"), Generator(name="X3", tau="t^2")]


class TestVectorFields:
    def test_commutator(self, lie):
        bracket = lie.commutator(Generator(xi="1", eta="z"), Generator(phi="-1"))
        assert bracket.field_text() == "d/dy"

    def test_commutator_gauge(self, lie):
        bracket = lie.commutator(Generator(mu="1"), Generator(tau="s", f="-2*t"))
        assert bracket.field_text() == "d/dt"

    def test_expand_in_span(self):
        fields = [Generator(tau="1"), Generator(tau="s")]
        assert expand_in_span(Generator(tau="3 - s/2"), fields) == (3, sympy.Rational(-1, 2))
        assert expand_in_span(Generator(tau="t"), fields) is None

    def test_field_rank(self):
        assert field_rank([Generator(eta="1"), Generator(eta="2")]) == 1


class TestStructureConstants:
    def test_sl2(self, lie, sl2_basis):
        alg = lie.structure_constants(sl2_basis)
        assert alg.constants[0][1] == (1, 0, 0)
        assert alg.constants[0][2] == (0, 2, 0)
        assert alg.constants[1][2] == (0, 0, 1)
        assert alg.constants[2][0] == (0, -2, 0)

    def test_dependent_basis(self, lie):
        with pytest.raises(LinearDependenceError):
            lie.structure_constants([Generator(tau="1"), Generator(tau="-2")])

    def test_closure_error_carries_the_pair(self, lie):
        with pytest.raises(ClosureError) as exc_info:
            lie.structure_constants([Generator(name="P", tau="1"), Generator(name="Q", tau="t^3")])
        assert exc_info.value.pair == ("P", "Q")
        assert exc_info.value.residual.field_text() == "3*t^2*d/dt"

    def test_export(self, lie, sl2_basis):
        exported = lie.export_brackets(lie.structure_constants(sl2_basis))
        assert exported[0] == {"i": 1, "j": 2, "coeffs": ["1", "0", "0"]}


class TestInvariants:
    def test_killing_form_of_sl2(self, lie, sl2_basis):
        alg = lie.structure_constants(sl2_basis)
        kappa = lie.killing_form(alg)
        assert kappa[1, 1] == 2
        assert kappa[0, 2] == kappa[2, 0] == -4
        assert kappa[0, 0] == 0
        lie.check_killing_invariance(alg, kappa)

    def test_sl2_is_perfect(self, lie, sl2_basis):
        alg = lie.structure_constants(sl2_basis)
        assert [s.dim for s in lie.derived_series(alg)] == [3]
        assert not lie.is_solvable(alg)
        assert lie.solvable_radical(alg).is_zero

    def test_levi_check_on_sl2(self, lie, sl2_basis):
        alg = lie.structure_constants(sl2_basis)
        verdict = lie.levi_check(alg, SubspaceQ.whole(3))
        assert verdict.holds
        assert verdict.h == (0, 2, 0)
        assert alg.bracket(verdict.e, verdict.f) == verdict.h

    def test_levi_check_rejects_wrong_dimension(self, lie, sl2_basis):
        alg = lie.structure_constants(sl2_basis)
        verdict = lie.levi_check(alg, SubspaceQ.span([unit(3, 0)], 3))
        assert not verdict.holds
        assert "dimension" in verdict.failed_condition

    def test_heisenberg(self, lie):
        alg = lie.structure_constants([Generator(xi="1", eta="z"), Generator(phi="-1"), Generator(eta="1")])
        assert [s.dim for s in lie.derived_series(alg)] == [3, 1, 0]
        assert [s.dim for s in lie.lower_central_series(alg)] == [3, 1, 0]
        assert lie.is_nilpotent(alg)
        assert lie.solvable_radical(alg).dim == 3


class TestCaseAlgebras:
    def test_case_two_series(self, lie, case_two):
        alg = lie.structure_constants(case_two.claimed_generators)
        assert [s.dim for s in lie.derived_series(alg)] == [7, 4, 1, 0]
        assert lie.is_solvable(alg)

    def test_case_one_levi_decomposition(self, lie, case_one):
        corrected, _ = noether_service.typo_correction(case_one)
        alg = lie.structure_constants(corrected)
        kappa = lie.killing_form(alg)
        assert kappa[1, 1] == sympy.Rational(5, 2)
        assert kappa[0, 3] == kappa[3, 0] == sympy.Rational(-5, 2)
        assert lie.solvable_radical(alg).dim == 5
        verdict = lie.levi_check(alg, SubspaceQ.span([unit(8, 0), unit(8, 1), unit(8, 3)], 8))
        assert verdict.holds
        assert verdict.radical_dim == 5

    @pytest.mark.parametrize("label", ["VIII", "IX"])
    def test_abelian_cases(self, lie, label):
        alg = lie.structure_constants(get_case(label).claimed_generators)
        assert alg.is_abelian
        assert [s.dim for s in lie.derived_series(alg)] == [alg.n, 0]


class TestRationalText:
    def test_rational_text(self):
        assert rational_text(sympy.Rational(-5, 2)) == "-5/2"
        assert rational_text(3) == "3"
