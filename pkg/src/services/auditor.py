import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence

from ..config import settings
from ..models.algebra import SubspaceQ, unit
from ..models.geometry import GeodesicState, MetricSpec
from ..models.reports import (
    AlgebraReport,
    AuditReport,
    ConserveReport,
    DeriveReport,
    EquationRecord,
    IntegralReport,
    LeviReport,
    SummaryClaimReport,
    SummaryLine,
)
from ..models.symmetry import Generator, combination_text
from ..utils.exceptions import ClosureError, LinearDependenceError
from .catalog import CASE_LABELS, TIME_TRANSLATION_CLAIMED, case_catalog, get_case
from .conslaw import conservation_service
from .geometry import geometry_service
from .liealg import expand_in_span, lie_service, rational_text
from .noether import noether_service
from .parser import format_expr

logger = logging.getLogger(__name__)

_SUMMARY_DIRECTIONS = (
    ("d/dt", Generator(name="d/dt", tau=1)),
    ("d/dy", Generator(name="d/dy", eta=1)),
    ("d/dz", Generator(name="d/dz", phi=1)),
)


def _vector_text(coords) -> str:
    return combination_text({k + 1: c for k, c in enumerate(coords)})


class AuditService:
    def derive(self) -> DeriveReport:
        start_time = time.time()
        system = noether_service.derive_determining_system()
        matches = noether_service.match_reference_equations(system)
        findings = []
        matched_keys = {m.computed_key for m in matches if m.matched}
        for equation in system.equations:
            if equation.key_text not in matched_keys:
                findings.append(f"computed equation at {equation.key_text} has no published counterpart")
        for match in matches:
            if not match.matched:
                findings.append(f"published equation {match.reference} is not reproduced")
            elif match.published_key is None:
                findings.append(f"published equation {match.reference} has no key in the published list; "
                                f"it is the {match.computed_key} coefficient")
            elif match.published_key != match.computed_key:
                findings.append(f"published equation {match.reference} is listed under {match.published_key} "
                                f"but is the {match.computed_key} coefficient")
        if system.implied_keys:
            findings.append(
                f"{len(system.implied_keys)} mixed cubic keys vanish once the pure-cube equations hold: "
                + ", ".join(format_expr(k) for k in system.implied_keys)
            )
        findings.extend(noether_service.general_findings())
        logger.info(f"Derivation finished in {time.time() - start_time:.2f}s")
        return DeriveReport(
            equations=[EquationRecord(monomial=e.key_text, equation=str(e.equation)) for e in system.equations],
            implied_keys=[format_expr(k) for k in system.implied_keys],
            matches=matches,
            findings=findings,
        )

    def audit(self, label: str) -> AuditReport:
        return noether_service.audit_case(get_case(label))

    def audit_many(self, labels: Sequence[str]) -> List[AuditReport]:
        cases = [get_case(label) for label in labels]
        with ThreadPoolExecutor(max_workers=max(1, settings.max_workers)) as executor:
            return list(executor.map(noether_service.audit_case, cases))

    def summary(self) -> SummaryClaimReport:
        lines = []
        findings = []
        for case in case_catalog():
            for name, direction in _SUMMARY_DIRECTIONS:
                claimed = case.label in TIME_TRANSLATION_CLAIMED if name == "d/dt" else True
                listed = any(expand_in_span(direction, [g]) is not None for g in case.claimed_generators)
                verified = noether_service.verify_generator(direction, case).verified
                lines.append(SummaryLine(
                    case=case.label, generator=name, claimed=claimed, listed=listed,
                    verified=verified, agrees=claimed == verified,
                ))
                if claimed != verified:
                    findings.append(
                        f"case {case.label}: {name} is {'claimed' if claimed else 'not claimed'} in the summary "
                        f"but is {'verified' if verified else 'refuted'} under {case.constraint_text}"
                    )

        maximal = max(case_catalog(), key=lambda c: len(c.claimed_generators))
        maximal_basis, _ = noether_service.typo_correction(maximal)
        containment = []
        for case in case_catalog():
            if case.label == maximal.label:
                continue
            outside = [g for g in case.claimed_generators if expand_in_span(g, maximal_basis) is None]
            if outside:
                containment.append(
                    f"case {case.label}: " + "; ".join(f"{g.name} = {g.field_text()}" for g in outside)
                    + f" outside the case {maximal.label} algebra"
                )
            else:
                containment.append(f"case {case.label}: contained in the case {maximal.label} algebra")
        if any("outside" in line for line in containment):
            findings.append(f"the case {maximal.label} algebra does not contain every other case's algebra")
        return SummaryClaimReport(lines=lines, containment=containment, findings=findings)

    def algebra(self, label: str) -> AlgebraReport:
        case = get_case(label)
        basis, findings = noether_service.typo_correction(case)
        unverified = [g.name for g in basis if not noether_service.verify_generator(g, case).verified]
        if unverified:
            findings.append(f"unverified members kept in the basis: {', '.join(unverified)}")
        report = AlgebraReport(case=case.label, n=len(basis), basis=[g.field_text() for g in basis],
                               unverified=unverified, findings=findings)
        try:
            alg = lie_service.structure_constants(basis)
        except (ClosureError, LinearDependenceError) as e:
            logger.warning(f"Case {case.label}: {e}")
            report.closed = False
            report.findings.append(f"refused: {e}")
            return report

        kappa = lie_service.killing_form(alg)
        lie_service.check_killing_invariance(alg, kappa)
        derived = lie_service.derived_series(alg)
        radical = lie_service.solvable_radical(alg)
        report.brackets = lie_service.export_brackets(alg)
        report.killing_form = [[rational_text(kappa[i, j]) for j in range(alg.n)] for i in range(alg.n)]
        report.derived_series = [s.dim for s in derived]
        report.lower_central_series = [s.dim for s in lie_service.lower_central_series(alg)]
        report.radical_dim = radical.dim
        report.solvable = derived[-1].is_zero
        report.nilpotent = lie_service.is_nilpotent(alg)

        if case.claimed_solvable is not None and case.claimed_solvable != report.solvable:
            report.findings.append(
                f"claimed {'solvable' if case.claimed_solvable else 'non-solvable'} but the derived series is "
                f"{report.derived_series}"
            )
        if case.claimed_derived_length is not None:
            length = len(derived) - 1 if report.solvable else None
            if length != case.claimed_derived_length:
                report.findings.append(f"claimed derived length {case.claimed_derived_length}, computed {length}")
        if case.claimed_killing_nonzero:
            nonzero = {(i + 1, j + 1) for i in range(alg.n) for j in range(i, alg.n) if kappa[i, j] != 0}
            claimed = {tuple(sorted(pair)) for pair in case.claimed_killing_nonzero}
            for i, j in sorted(nonzero - claimed):
                report.findings.append(f"kappa(X{i}, X{j}) = {rational_text(kappa[i - 1, j - 1])} is claimed zero")
            for i, j in sorted(claimed - nonzero):
                report.findings.append(f"kappa(X{i}, X{j}) is claimed nonzero but vanishes")
        if case.claimed_levi_factor:
            candidate = SubspaceQ.span([unit(alg.n, k - 1) for k in case.claimed_levi_factor], alg.n)
            verdict = lie_service.levi_check(alg, candidate)
            report.levi = LeviReport(
                candidate=[f"X{k}" for k in case.claimed_levi_factor],
                holds=verdict.holds,
                failed_condition=verdict.failed_condition,
                h=_vector_text(verdict.h) if verdict.h else None,
                e=_vector_text(verdict.e) if verdict.e else None,
                f=_vector_text(verdict.f) if verdict.f else None,
            )
            if not verdict.holds:
                report.findings.append(f"Levi factor claim refuted: {verdict.failed_condition}")
        logger.info(f"Case {case.label}: algebra of dimension {alg.n}, derived series {report.derived_series}")
        return report

    def conserve(
        self,
        label: str,
        metric_text: Optional[str],
        ics: Optional[Sequence[float]],
        step: float,
        smax: float,
    ) -> ConserveReport:
        case = get_case(label)
        metric = geometry_service.parse_metric_config(metric_text or "")
        geometry_service.validate_metric(metric, case)
        symbolic = MetricSpec(rules=case.rules, label=case.label)

        basis, findings = noether_service.typo_correction(case)
        integrals = []
        for g in basis:
            verified = noether_service.verify_generator(g, case).verified
            integral = conservation_service.first_integral(g, symbolic, verified=verified)
            integrals.append(conservation_service.on_shell_check(integral, symbolic))
            if not verified:
                findings.append(f"{g.name} is unverified; its integral is exploratory")

        report = ConserveReport(
            case=case.label,
            metric=metric.description,
            ics=list(ics) if ics else None,
            integrals=[
                IntegralReport(
                    generator=i.generator_name,
                    integral=i.text,
                    on_shell=i.on_shell_status.value,
                    physics_label=i.physics_label.value,
                    source_verified=i.source_verified,
                    remainder=None if i.remainder.is_zero else format_expr(i.remainder),
                )
                for i in integrals
            ],
            findings=findings,
        )
        if not ics:
            report.findings.append("no initial conditions given; numeric drift skipped")
            return report

        state = GeodesicState(s=0.0, position=tuple(ics[:4]), velocity=tuple(ics[4:]))
        trajectory = geometry_service.integrate_geodesic(metric, state, step, int(round(smax / step)))
        report.diverged = trajectory.diverged
        if trajectory.diverged:
            report.findings.append(f"trajectory stopped at s = {trajectory.smax:.6g} (degenerate metric)")
        for integral in integrals:
            drift = conservation_service.numeric_drift(integral, trajectory)
            report.drift.append(drift)
            if drift.proved_on_shell and drift.max_rel_drift >= settings.drift_tolerance:
                report.findings.append(
                    f"{drift.generator}: relative drift {drift.max_rel_drift:.3e} exceeds {settings.drift_tolerance:g}"
                )
        return report

    @staticmethod
    def labels(selector: str) -> List[str]:
        return list(CASE_LABELS) if selector == "all" else [selector]


audit_service = AuditService()
