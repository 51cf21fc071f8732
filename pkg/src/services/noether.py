import itertools
import logging
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import sympy

from ..models.geometry import MetricSpec
from ..models.reports import AuditReport, BracketResult, GeneratorResult, ReferenceMatch
from ..models.symmetry import (
    COMPONENT_FIELDS,
    CaseSpec,
    ClaimedBracket,
    DeterminingEquation,
    DeterminingSystem,
    Generator,
    ProlongedCoefficients,
    Verdict,
    VerdictStatus,
    combination_text,
)
from ..utils.exceptions import InvariantViolationError, NonlinearParameterError, PointSymmetryError
from .catalog import GENERAL_FINDINGS, REFERENCE_EQUATIONS
from .geometry import geometry_service
from .liealg import expand_in_span, field_vector, lie_service, rational_text
from .parser import format_expr, parse, parse_rules
from .symbolic import (
    COORDINATES,
    FUNCTION_NAMES,
    JET_NAMES,
    SPACETIME,
    VELOCITIES,
    AtomKind,
    CanonicalExpr,
    RewriteRuleSet,
    atom,
    atom_info,
    atom_kind,
    atoms_of_kind,
    content_normalize,
    jet_atom,
    next_order,
    normalize,
    partial_diff,
    total_derivative,
    velocity_split,
)

logger = logging.getLogger(__name__)

GENERIC = MetricSpec()


def jet_generator() -> Generator:
    """Generator whose coefficients and gauge are the opaque jet atoms mu, tau, xi, eta, phi, f."""
    return Generator(name="generic", **{name: jet_atom(name) for name in JET_NAMES})


def _pure_cube(key: sympy.Expr) -> bool:
    return any(key == v**3 for v in VELOCITIES)


def _key_degree(key: sympy.Expr) -> int:
    return int(sympy.Poly(key, *VELOCITIES).total_degree()) if key != 1 else 0


@lru_cache(maxsize=None)
def _template(rules: RewriteRuleSet) -> Tuple[Tuple[sympy.Expr, CanonicalExpr], ...]:
    residual = NoetherService().noether_residual(jet_generator(), MetricSpec(rules=rules))
    return tuple(velocity_split(residual, rules).items())


def _repair_candidates() -> List[str]:
    candidates = []
    for name in FUNCTION_NAMES:
        candidates.append(f"{name}' = 0")
    for name in FUNCTION_NAMES:
        candidates.append(f"{name} = a*t")
    candidates.extend(["B = A", "C = A", "C = B"])
    return candidates


class NoetherService:
    def prolong(self, g: Generator) -> ProlongedCoefficients:
        for value in (*g.components, g.f):
            if atoms_of_kind(value, AtomKind.VELOCITY) or atoms_of_kind(value, AtomKind.ACCELERATION):
                raise PointSymmetryError(f"Generator {g.name} depends on velocities")
        d_mu = total_derivative(g.mu)
        tau1, xi1, eta1, phi1 = (
            total_derivative(coefficient) - velocity * d_mu
            for coefficient, velocity in zip(g.components[1:], VELOCITIES)
        )
        return ProlongedCoefficients(tau1=tau1, xi1=xi1, eta1=eta1, phi1=phi1)

    def noether_residual(self, g: Generator, spec: MetricSpec = GENERIC) -> sympy.Expr:
        """X^1 L + L D_s mu - D_s f."""
        lagrangian = geometry_service.lagrangian(spec)
        prolonged = self.prolong(g)
        action = sum(
            (c * partial_diff(lagrangian, q) for c, q in zip(g.components, COORDINATES)), sympy.S.Zero
        )
        action += sum(
            (c * partial_diff(lagrangian, v) for c, v in zip(prolonged.components, VELOCITIES)), sympy.S.Zero
        )
        return sympy.expand(action + lagrangian * total_derivative(g.mu) - total_derivative(g.f))

    def residual_template(self, spec: MetricSpec = GENERIC) -> Dict[sympy.Expr, CanonicalExpr]:
        return dict(_template(spec.rules))

    def derive_determining_system(self, spec: MetricSpec = GENERIC) -> DeterminingSystem:
        logger.info(f"Deriving determining system for {spec.description} metric")
        template = self.residual_template(spec)
        pure_cube_zero = {jet_atom("mu", (q.name,)): 0 for q in SPACETIME}
        equations: List[DeterminingEquation] = []
        implied = []
        for key, coefficient in template.items():
            if _key_degree(key) == 3 and not _pure_cube(key):
                if not normalize(coefficient.to_expr().xreplace(pure_cube_zero), spec.rules).is_zero:
                    raise InvariantViolationError(
                        f"Mixed cubic key {format_expr(key)} does not follow from the pure-cube equations"
                    )
                implied.append(key)
                continue
            equations.append(DeterminingEquation(key=key, equation=content_normalize(coefficient)))
        logger.info(f"Determining system: {len(equations)} equations, {len(implied)} implied cubic keys")
        return DeterminingSystem(equations=tuple(equations), implied_keys=tuple(implied), template=template)

    def _jet_value(self, g: Generator, symbol: sympy.Symbol) -> sympy.Expr:
        info = atom_info(symbol.name)
        value = dict(zip(JET_NAMES, (*g.components, g.f)))[info.base]
        for coordinate in info.derivatives:
            value = partial_diff(value, atom(coordinate))
        return value

    def residual_from_template(self, g: Generator, spec: MetricSpec = GENERIC) -> sympy.Expr:
        """Residual by substituting g's coefficient derivatives into the split template."""
        total = sympy.S.Zero
        for key, coefficient in self.residual_template(spec).items():
            expr = coefficient.to_expr()
            bindings = {a: self._jet_value(g, a) for a in atoms_of_kind(expr, AtomKind.JET)}
            total += key * expr.xreplace(bindings)
        return total

    def check_dual_path(self, g: Generator, spec: MetricSpec = GENERIC) -> None:
        difference = self.noether_residual(g, spec) - self.residual_from_template(g, spec)
        if not normalize(difference, spec.rules).is_zero:
            logger.error(f"Residual paths disagree for {g.field_text()}")
            raise InvariantViolationError(f"Prolongation and template residuals disagree for {g.name}")

    def match_reference_equations(self, system: DeterminingSystem) -> List[ReferenceMatch]:
        computed = {e.equation: e for e in system.equations}
        matches = []
        for published_key, text in REFERENCE_EQUATIONS:
            reference = normalize(parse(text))
            found = computed.get(content_normalize(reference))
            if found is None:
                matches.append(ReferenceMatch(reference=format_expr(reference), published_key=published_key, matched=False))
                continue
            raw = normalize(system.template[found.key].to_expr())
            factor = raw.terms[0].coefficient / reference.terms[0].coefficient
            matches.append(ReferenceMatch(
                reference=format_expr(reference),
                published_key=published_key,
                computed_key=found.key_text,
                factor=rational_text(factor),
                matched=True,
            ))
        return matches

    def verify_generator(self, g: Generator, case: CaseSpec) -> Verdict:
        rules = case.rules
        residual = normalize(self.noether_residual(g, MetricSpec(rules=rules)), rules)
        literal_status = None
        if case.normalization:
            literal = normalize(self.noether_residual(g, MetricSpec(rules=case.constraints)), case.constraints)
            literal_status = VerdictStatus.VERIFIED if literal.is_zero else VerdictStatus.REFUTED
        if residual.is_zero:
            return Verdict(status=VerdictStatus.VERIFIED, residual=residual, literal_status=literal_status)
        offending = tuple(velocity_split(residual).items())
        logger.info(f"Case {case.label}: {g.name} refuted at {[format_expr(k) for k, _ in offending]}")
        return Verdict(
            status=VerdictStatus.REFUTED, residual=residual, offending=offending, literal_status=literal_status
        )

    def _consistent(self, rules: RewriteRuleSet, nonvanishing: Sequence[sympy.Symbol]) -> bool:
        explicit = dict(rules.explicit)
        t = SPACETIME[0]
        for symbol, replacement in explicit.items():
            if atom_kind(symbol) is AtomKind.FUNCTION and next_order(symbol) in explicit:
                if not normalize(partial_diff(replacement, t) - explicit[next_order(symbol)], rules).is_zero:
                    return False
        return all(not normalize(a, rules).is_zero for a in nonvanishing)

    def suggest_repair(self, g: Generator, case: CaseSpec) -> Optional[str]:
        """First extra constraint from a small candidate list under which g verifies."""
        for text in _repair_candidates():
            extra = parse_rules(text)
            (lhs, rhs), = extra.explicit
            if normalize(lhs - rhs, case.rules).is_zero:
                continue
            rules = case.rules.merged(extra)
            if not self._consistent(rules, case.nonvanishing):
                continue
            if normalize(self.noether_residual(g, MetricSpec(rules=rules)), rules).is_zero:
                return text
        return None

    def basis_from_solution(self, case: CaseSpec) -> List[Generator]:
        solution = case.component_solution
        values = (*solution.components, solution.f)
        zero = {p: 0 for p in case.parameters}
        for field, value in zip((*COMPONENT_FIELDS, "f"), values):
            if not normalize(value.xreplace(zero)).is_zero:
                raise NonlinearParameterError(f"Case {case.label}: {field} has a parameter-free part")
            for p in case.parameters:
                derivative = sympy.diff(value, p)
                if any(q in derivative.free_symbols for q in case.parameters):
                    raise NonlinearParameterError(f"Case {case.label}: {field} is not linear in {p}")
        basis = []
        for p in case.parameters:
            derived = [normalize(sympy.diff(v, p)).to_expr() for v in values]
            generator = Generator(name=p.name, f=derived[-1], **dict(zip(COMPONENT_FIELDS, derived[:-1])))
            if not (generator.is_null() and normalize(generator.f).is_zero):
                basis.append(generator)
        return basis

    def evaluate_bracket(self, claim: ClaimedBracket, generators: Sequence[Generator]) -> BracketResult:
        X, Y = generators[claim.i - 1], generators[claim.j - 1]
        computed = lie_service.commutator(X, Y)
        claimed_field = Generator()
        for k, c in claim.rhs.items():
            claimed_field = claimed_field.plus(generators[k - 1].scaled(c))
        difference = computed.plus(claimed_field.scaled(-1))
        field_match = not field_vector(difference)
        gauge_difference = normalize(difference.f)
        gauge_match = not any(atom_kind(a) is AtomKind.COORDINATE for a in gauge_difference.atoms())
        coords = expand_in_span(computed, generators)
        if coords is not None and field_vector(computed):
            computed_text = combination_text({k + 1: c for k, c in enumerate(coords)})
        else:
            computed_text = computed.field_text() if field_vector(computed) else "0"
        return BracketResult(
            i=claim.i, j=claim.j, claimed=claim.rhs_text, computed=computed_text,
            match=field_match and gauge_match, gauge_match=gauge_match,
        )

    def bracket_results(self, case: CaseSpec, generators: Sequence[Generator]) -> List[BracketResult]:
        results = [self.evaluate_bracket(claim, generators) for claim in case.claimed_brackets]
        if case.brackets_exhaustive:
            listed = {frozenset((c.i, c.j)) for c in case.claimed_brackets}
            for i, j in itertools.combinations(range(1, len(generators) + 1), 2):
                if frozenset((i, j)) in listed:
                    continue
                result = self.evaluate_bracket(ClaimedBracket(i=i, j=j), generators)
                if not result.match:
                    results.append(result)
        return results

    def typo_correction(self, case: CaseSpec) -> Tuple[List[Generator], List[str]]:
        """Substitute extracted generators for claimed ones outside the extracted span."""
        claimed = list(case.claimed_generators)
        extracted = self.basis_from_solution(case)
        outside_claimed = [g for g in extracted if expand_in_span(g, claimed) is None]
        findings: List[str] = []

        def matches(generators) -> int:
            return sum(self.evaluate_bracket(c, generators).match for c in case.claimed_brackets)

        for index, generator in enumerate(claimed):
            if expand_in_span(generator, extracted) is not None:
                continue
            best, best_score = None, matches(claimed)
            for substitute in outside_claimed:
                trial = list(claimed)
                trial[index] = substitute.with_components(substitute.components, name=generator.name)
                score = matches(trial)
                if score > best_score:
                    best, best_score = trial, score
            if best is not None:
                replacement = best[index]
                findings.append(
                    f"typo-corrected: {generator.name} = {generator.field_text()} is not in the span of the "
                    f"component solution; {replacement.field_text()} makes {best_score} of "
                    f"{len(case.claimed_brackets)} claimed brackets hold"
                )
                logger.info(f"Case {case.label}: {findings[-1]}")
                claimed = best
        return claimed, findings

    def _generator_result(self, g: Generator, verdict: Verdict, case: CaseSpec) -> GeneratorResult:
        result = GeneratorResult(name=g.name or "X", status=verdict.status.value, field=g.field_text())
        if not verdict.verified:
            result.residual = format_expr(verdict.residual)
            result.offending = [format_expr(k) for k, _ in verdict.offending]
            result.repair = self.suggest_repair(g, case)
        if verdict.literal_status is not None:
            result.normalization_required = verdict.needs_normalization
        return result

    def audit_case(self, case: CaseSpec) -> AuditReport:
        logger.info(f"Auditing case {case.label}")
        findings: List[str] = []

        generators = []
        for g in case.claimed_generators:
            verdict = self.verify_generator(g, case)
            result = self._generator_result(g, verdict, case)
            generators.append(result)
            if verdict.needs_normalization:
                findings.append(f"{g.name} holds only under the normalization {case.normalization}")
            elif not verdict.verified:
                text = f"{g.name} = {g.field_text()} is refuted under {case.constraint_text}"
                if result.repair:
                    text += f"; it holds if additionally {result.repair}"
                findings.append(text)

        extracted = self.basis_from_solution(case)
        basis = [self._generator_result(g, self.verify_generator(g, case), case) for g in extracted]
        missing = [g.name for g in extracted if expand_in_span(g, case.claimed_generators) is None]
        extra = [g.name for g in case.claimed_generators if expand_in_span(g, extracted) is None]
        if missing:
            findings.append(f"component-solution directions {', '.join(missing)} are not spanned by the generator list")
        if extra:
            findings.append(f"listed generators {', '.join(extra)} are not spanned by the component solution")

        corrected, corrections = self.typo_correction(case)
        findings.extend(corrections)
        brackets = self.bracket_results(case, corrected)
        for bracket in brackets:
            if not bracket.match:
                findings.append(
                    f"[X{bracket.i}, X{bracket.j}] is claimed {bracket.claimed} but computes to {bracket.computed}"
                )

        if case.normalization_note:
            findings.append(case.normalization_note)
        findings.extend(case.notes)

        report = AuditReport(
            case=case.label,
            constraints=case.constraint_text,
            generators=generators,
            brackets=brackets,
            findings=findings,
            basis=basis,
            verified_count=sum(r.status == VerdictStatus.VERIFIED.value for r in generators),
            bracket_matches=sum(b.match for b in brackets),
        )
        logger.info(
            f"Case {case.label}: {report.verified_count}/{len(generators)} generators verified, "
            f"{sum(b.match for b in brackets)}/{len(brackets)} brackets match"
        )
        return report

    def general_findings(self) -> List[str]:
        return list(GENERAL_FINDINGS)


noether_service = NoetherService()
