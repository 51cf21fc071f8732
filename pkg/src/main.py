import argparse
import json
import logging
import sys
from typing import List, Optional, Sequence

from pydantic import BaseModel, ValidationError

from .config import settings
from .models.reports import AlgebraReport, AuditReport, ConserveReport, DeriveReport, SummaryClaimReport
from .models.requests import Command, OutputFormat, RunConfig
from .services.auditor import audit_service
from .utils.exceptions import (
    ExpressionError,
    IntegrationError,
    MetricConfigError,
    MetricConstraintError,
    UsageError,
)
from .utils.logger import setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INTERNAL = 2

# Errors in what the user asked for, as opposed to self-inconsistency of the engine
_USER_ERRORS = (
    UsageError, ValidationError, ExpressionError, MetricConfigError, MetricConstraintError, IntegrationError, OSError,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog=settings.service_name,
        description="Recompute and audit Noether symmetries of the Bianchi II geodesic Lagrangian",
    )
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--format", choices=[f.value for f in OutputFormat], default=OutputFormat.TEXT.value)
        sub.add_argument("--out", help="write the report to this file instead of stdout")

    derive = subparsers.add_parser(Command.DERIVE.value, help="print the determining system")
    common(derive)

    for command, help_text in (
        (Command.AUDIT, "audit claimed generators and brackets"),
        (Command.ALGEBRA, "export the structure of a case algebra"),
    ):
        sub = subparsers.add_parser(command.value, help=help_text)
        sub.add_argument("--case", default="all" if command is Command.AUDIT else None,
                         required=command is Command.ALGEBRA)
        common(sub)

    conserve = subparsers.add_parser(Command.CONSERVE.value, help="first integrals and numeric drift")
    conserve.add_argument("--case", required=True)
    conserve.add_argument("--metric", help="closed forms such as 'A=t^2, B=t, C=1', or a file holding them")
    conserve.add_argument("--ics", help="t,x,y,z,td,xd,yd,zd")
    conserve.add_argument("--step", type=float, default=settings.default_step)
    conserve.add_argument("--smax", type=float, default=settings.default_smax)
    common(conserve)
    return parser


def parse_config(argv: Optional[Sequence[str]] = None) -> RunConfig:
    args = build_parser().parse_args(argv)
    return RunConfig(
        command=args.command,
        case=getattr(args, "case", None) or "all",
        format=args.format,
        metric=getattr(args, "metric", None),
        ics=getattr(args, "ics", None),
        step=getattr(args, "step", settings.default_step),
        smax=getattr(args, "smax", settings.default_smax),
        out=args.out,
    )


def _bullets(findings: List[str]) -> List[str]:
    return [f"  - {finding}" for finding in findings]


def render_derive(report: DeriveReport) -> str:
    lines = [f"{len(report.equations)} determining equations"]
    width = max(len(e.monomial) for e in report.equations)
    for k, record in enumerate(report.equations, start=1):
        lines.append(f"  ({k:2d}) {record.monomial:<{width}}  {record.equation} = 0")
    if report.implied_keys:
        lines.append("implied keys: " + ", ".join(report.implied_keys))
    lines.append("findings:")
    lines.extend(_bullets(report.findings))
    return "\n".join(lines)


def render_audit(report: AuditReport) -> str:
    lines = [f"Case {report.case}: {report.constraints}"]
    for result in report.generators:
        lines.append(f"  {result.name:<4} {result.status:<9} {result.field}")
        if result.residual:
            lines.append(f"       residual: {result.residual}")
        if result.repair:
            lines.append(f"       repair: {result.repair}")
    for bracket in report.brackets:
        mark = "ok" if bracket.match else "MISMATCH"
        lines.append(f"  [X{bracket.i}, X{bracket.j}] claimed {bracket.claimed}, computed {bracket.computed}  {mark}")
    lines.append(
        f"  verified {report.verified_count}/{len(report.generators)}, "
        f"brackets matched {report.bracket_matches}/{len(report.brackets)}"
    )
    if report.findings:
        lines.append("  findings:")
        lines.extend("  " + line for line in _bullets(report.findings))
    return "\n".join(lines)


def render_summary(report: SummaryClaimReport) -> str:
    lines = ["Summary claims"]
    for line in report.lines:
        lines.append(
            f"  Case {line.case:<4} {line.generator}  claimed={'yes' if line.claimed else 'no':<3} "
            f"listed={'yes' if line.listed else 'no':<3} verified={'yes' if line.verified else 'no':<3} "
            f"{'agrees' if line.agrees else 'DISAGREES'}"
        )
    lines.extend(f"  {line}" for line in report.containment)
    if report.findings:
        lines.append("  findings:")
        lines.extend("  " + line for line in _bullets(report.findings))
    return "\n".join(lines)


def render_algebra(report: AlgebraReport) -> str:
    lines = [f"Case {report.case}: algebra of dimension {report.n}"]
    lines.extend(f"  X{k} = {field}" for k, field in enumerate(report.basis, start=1))
    if not report.closed:
        lines.append("  basis does not close")
    else:
        for bracket in report.brackets:
            terms = [f"{c}*X{k}" for k, c in enumerate(bracket["coeffs"], start=1) if c != "0"]
            lines.append(f"  [X{bracket['i']}, X{bracket['j']}] = {' + '.join(terms)}")
        lines.append("  Killing form:")
        lines.extend("    " + " ".join(f"{v:>5}" for v in row) for row in report.killing_form)
        lines.append(f"  derived series: {report.derived_series}")
        lines.append(f"  lower central series: {report.lower_central_series}")
        lines.append(f"  radical dimension: {report.radical_dim}")
        lines.append(f"  solvable: {report.solvable}, nilpotent: {report.nilpotent}")
        if report.levi:
            verdict = "holds" if report.levi.holds else f"fails ({report.levi.failed_condition})"
            lines.append(f"  Levi factor <{', '.join(report.levi.candidate)}>: {verdict}")
            if report.levi.holds:
                lines.append(f"    h = {report.levi.h}, e = {report.levi.e}, f = {report.levi.f}")
    if report.findings:
        lines.append("  findings:")
        lines.extend("  " + line for line in _bullets(report.findings))
    return "\n".join(lines)


def render_conserve(report: ConserveReport) -> str:
    lines = [f"Case {report.case}: metric {report.metric}"]
    for integral in report.integrals:
        lines.append(f"  {integral.generator:<4} [{integral.physics_label}] {integral.integral}  ({integral.on_shell})")
        if integral.remainder:
            lines.append(f"       D_s I = {integral.remainder}")
    for drift in report.drift:
        lines.append(
            f"  drift {drift.generator:<4} abs {drift.max_abs_drift:.3e} rel {drift.max_rel_drift:.3e} "
            f"(h = {drift.step:g}, s <= {drift.smax:g})"
        )
    if report.findings:
        lines.append("  findings:")
        lines.extend("  " + line for line in _bullets(report.findings))
    return "\n".join(lines)


def _dump(model: BaseModel) -> dict:
    return model.model_dump(mode="json", exclude_none=True)


def run(config: RunConfig) -> str:
    as_json = config.format is OutputFormat.JSON
    if config.command is Command.DERIVE:
        report = audit_service.derive()
        if as_json:
            return json.dumps([_dump(record) for record in report.equations], indent=2)
        return render_derive(report)

    if config.command is Command.AUDIT:
        reports = audit_service.audit_many(audit_service.labels(config.case))
        if config.case != "all":
            return json.dumps(_dump(reports[0]), indent=2) if as_json else render_audit(reports[0])
        summary = audit_service.summary()
        if as_json:
            return json.dumps({"cases": [_dump(r) for r in reports], "summary": _dump(summary)}, indent=2)
        return "\n\n".join([render_audit(r) for r in reports] + [render_summary(summary)])

    if config.case == "all":
        raise UsageError(f"{config.command.value} needs a single case")
    if config.command is Command.ALGEBRA:
        report = audit_service.algebra(config.case)
        return json.dumps(_dump(report), indent=2) if as_json else render_algebra(report)

    report = audit_service.conserve(config.case, config.metric, config.ics, config.step, config.smax)
    return json.dumps(_dump(report), indent=2) if as_json else render_conserve(report)


def main(argv: Optional[Sequence[str]] = None) -> int:
    setup_logging()
    try:
        config = parse_config(argv)
        logger.info(f"Running {config.command.value} for case {config.case}")
        output = run(config)
        if config.out:
            with open(config.out, "w", encoding="utf-8") as handle:
                handle.write(output + "\n")
            logger.info(f"Report written to {config.out}")
        else:
            print(output)
    except _USER_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:
        logger.debug("Internal error", exc_info=True)
        print(f"internal error: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
