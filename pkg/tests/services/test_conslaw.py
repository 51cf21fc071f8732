import pytest
import sympy

from src.models.geometry import GeodesicState, MetricSpec
from src.models.symmetry import Generator, OnShellStatus, PhysicsLabel
from src.services.catalog import get_case
from src.services.conslaw import ConservationService
from src.services.geometry import geometry_service
from src.services.noether import noether_service
from src.services.parser import format_expr, parse
from src.services.symbolic import atom, is_zero


@pytest.fixture
def conservation():
    return ConservationService()


@pytest.fixture
def case_two_spec(case_two):
    return MetricSpec(rules=case_two.rules, label="II")


class TestFirstIntegral:
    def test_affine_translation_gives_minus_lagrangian(self, conservation, generic_spec):
        integral = conservation.first_integral(Generator(mu="1"), generic_spec)
        assert is_zero(integral.expression + geometry_service.lagrangian(generic_spec))
        assert integral.physics_label is PhysicsLabel.SCALING_OTHER

    def test_gauge_enters_with_a_minus_sign(self, conservation, case_two_spec):
        integral = conservation.first_integral(Generator(tau="s", f="-2*t"), case_two_spec)
        assert format_expr(integral.expression) == "-2*s*td + 2*t"

    @pytest.mark.parametrize("field, label", [
        (dict(tau="1"), PhysicsLabel.ENERGY),
        (dict(eta="1"), PhysicsLabel.MOMENTUM_Y),
        (dict(phi="-1"), PhysicsLabel.MOMENTUM_Z),
        (dict(xi="1", eta="z"), PhysicsLabel.SCALING_OTHER),
        (dict(tau="s", f="-2*t"), PhysicsLabel.SCALING_OTHER),
    ])
    def test_physics_labels(self, conservation, case_two_spec, field, label):
        integral = conservation.first_integral(Generator(**field), case_two_spec)
        assert integral.physics_label is label

    def test_momentum_along_y(self, conservation, generic_spec):
        integral = conservation.first_integral(Generator(eta="1"), generic_spec)
        assert is_zero(integral.expression - parse("2*B^2*yd - 2*B^2*x*zd"))

    def test_linear_in_the_generator(self, conservation, case_two, case_two_spec):
        boost = case_two.claimed_generators[1]
        momentum = Generator(eta="1")
        combined = conservation.first_integral(boost.scaled(3).plus(momentum), case_two_spec)
        parts = [conservation.first_integral(g, case_two_spec).expression for g in (boost, momentum)]
        assert is_zero(combined.expression - 3 * parts[0] - parts[1])


class TestOnShell:
    def test_case_two_integrals_are_conserved(self, conservation, case_two, case_two_spec):
        for g in case_two.claimed_generators:
            integral = conservation.on_shell_check(conservation.first_integral(g, case_two_spec), case_two_spec)
            assert integral.on_shell_status is OnShellStatus.PROVED, g.name

    @pytest.mark.parametrize("label", ["VII", "IX"])
    def test_verified_generators_are_conserved(self, conservation, label):
        case = get_case(label)
        spec = MetricSpec(rules=case.rules)
        for g in case.claimed_generators:
            integral = conservation.on_shell_check(conservation.first_integral(g, spec), spec)
            assert integral.on_shell_status is OnShellStatus.PROVED

    def test_verified_case_eight_generators_are_conserved(self, conservation):
        case = get_case("VIII")
        spec = MetricSpec(rules=case.rules)
        verified = [g for g in case.claimed_generators if noether_service.verify_generator(g, case).verified]
        assert [g.name for g in verified] == ["X1", "X3", "X4"]
        for g in verified:
            integral = conservation.on_shell_check(conservation.first_integral(g, spec), spec)
            assert integral.on_shell_status is OnShellStatus.PROVED, g.name

    def test_refuted_generator_fails(self, conservation):
        case = get_case("VIII")
        spec = MetricSpec(rules=case.rules)
        time_translation = case.claimed_generators[1]
        assert not noether_service.verify_generator(time_translation, case).verified
        integral = conservation.first_integral(time_translation, spec, verified=False)
        checked = conservation.on_shell_check(integral, spec)
        assert checked.on_shell_status is OnShellStatus.FAILED
        assert not checked.remainder.is_zero
        assert not checked.source_verified


class TestNumericDrift:
    @pytest.fixture
    def start(self):
        return GeodesicState(s=0.0, position=(0, 0, 0, 0), velocity=(1, 0.3, 0.2, 0.1))

    def test_case_two_drift(self, conservation, case_two, case_two_spec, start):
        metric = geometry_service.parse_metric_config("A = 1, B = 1, C = 1")
        trajectory = geometry_service.integrate_geodesic(metric, start, 1e-3, 1000)
        for g in case_two.claimed_generators:
            integral = conservation.on_shell_check(conservation.first_integral(g, case_two_spec), case_two_spec)
            drift = conservation.numeric_drift(integral, trajectory)
            assert drift.max_rel_drift < 1e-7
            assert drift.proved_on_shell

    @pytest.mark.slow
    def test_fourth_order_convergence(self, conservation, case_two, case_two_spec, start):
        metric = geometry_service.parse_metric_config("")
        integrals = [conservation.first_integral(g, case_two_spec) for g in case_two.claimed_generators]
        results = conservation.drift_convergence(integrals, metric, start, 0.2, 1.0)
        ratios = [ratio for _, _, ratio in results if ratio is not None]
        assert ratios
        assert all(ratio >= 12 for ratio in ratios)

    def test_planted_fault_drifts(self, conservation, case_two, case_two_spec, start):
        metric = geometry_service.parse_metric_config("")
        trajectory = geometry_service.integrate_geodesic(metric, start, 1e-2, 100)
        integral = conservation.first_integral(case_two.claimed_generators[0], case_two_spec)
        faulty = integral.model_copy(update={"expression": integral.expression + sympy.Rational(1, 10) * atom("s")})
        assert conservation.on_shell_check(faulty, case_two_spec).on_shell_status is OnShellStatus.FAILED
        drift = conservation.numeric_drift(faulty, trajectory)
        assert drift.max_abs_drift == pytest.approx(0.1, rel=1e-3)

    def test_constant_trajectory_has_no_drift(self, conservation, case_two, case_two_spec):
        metric = geometry_service.parse_metric_config("")
        rest = GeodesicState(s=0.0, position=(1, 0.5, 0, 0), velocity=(0, 0, 0, 0))
        trajectory = geometry_service.integrate_geodesic(metric, rest, 0.1, 10)
        for g in case_two.claimed_generators:
            drift = conservation.numeric_drift(conservation.first_integral(g, case_two_spec), trajectory)
            assert drift.max_abs_drift == 0

    def test_constant_integral_evaluates(self, conservation, start):
        metric = geometry_service.parse_metric_config("")
        trajectory = geometry_service.integrate_geodesic(metric, start, 0.1, 5)
        integral = conservation.first_integral(Generator(eta="1"), MetricSpec())
        values = conservation.evaluate(integral, trajectory)
        assert values.shape == (6,)
        assert values[0] == pytest.approx(0.4)
