from enum import Enum
from typing import Any, Dict, Optional, Tuple

import sympy
from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator

from ..services.parser import format_expr, parse
from ..services.symbolic import (
    EMPTY_RULES,
    ZERO,
    AtomKind,
    CanonicalExpr,
    RewriteRuleSet,
    atom_kind,
    normalize,
)
from ..utils.exceptions import PointSymmetryError

COMPONENT_FIELDS = ("mu", "tau", "xi", "eta", "phi")
DIRECTION_NAMES = ("s", "t", "x", "y", "z")


def _coerce_expr(value: Any) -> sympy.Expr:
    if isinstance(value, str):
        return parse(value)
    if isinstance(value, CanonicalExpr):
        return value.to_expr()
    return sympy.sympify(value)


class Generator(BaseModel):
    """X = mu d/ds + tau d/dt + xi d/dx + eta d/dy + phi d/dz with gauge f."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    name: Optional[str] = None
    mu: Any = Field(default=sympy.S.Zero, description="Coefficient of d/ds")
    tau: Any = Field(default=sympy.S.Zero, description="Coefficient of d/dt")
    xi: Any = Field(default=sympy.S.Zero, description="Coefficient of d/dx")
    eta: Any = Field(default=sympy.S.Zero, description="Coefficient of d/dy")
    phi: Any = Field(default=sympy.S.Zero, description="Coefficient of d/dz")
    f: Any = Field(default=sympy.S.Zero, description="Gauge function")

    @field_validator(*COMPONENT_FIELDS, "f", mode="before")
    @classmethod
    def _coerce(cls, value):
        return _coerce_expr(value)

    @model_validator(mode="after")
    def _point_symmetry(self):
        for field in (*COMPONENT_FIELDS, "f"):
            jet = [a for a in getattr(self, field).free_symbols
                   if atom_kind(a) in (AtomKind.VELOCITY, AtomKind.ACCELERATION)]
            if jet:
                raise PointSymmetryError(
                    f"Generator {self.name or ''} component {field} depends on {sorted(map(str, jet))}"
                )
        return self

    @field_serializer(*COMPONENT_FIELDS, "f")
    def _print(self, value):
        return format_expr(value)

    @property
    def components(self) -> Tuple[sympy.Expr, ...]:
        return (self.mu, self.tau, self.xi, self.eta, self.phi)

    def with_components(self, components, f=None, name: Optional[str] = None) -> "Generator":
        return Generator(
            name=name if name is not None else self.name,
            **dict(zip(COMPONENT_FIELDS, components)),
            f=self.f if f is None else f,
        )

    def scaled(self, factor) -> "Generator":
        factor = sympy.sympify(factor)
        return self.with_components([factor * c for c in self.components], f=factor * self.f)

    def plus(self, other: "Generator") -> "Generator":
        return self.with_components(
            [a + b for a, b in zip(self.components, other.components)], f=self.f + other.f
        )

    def without_gauge(self) -> "Generator":
        return self.with_components(self.components, f=sympy.S.Zero)

    def is_null(self) -> bool:
        return all(normalize(c).is_zero for c in self.components)

    def field_text(self) -> str:
        parts = []
        for direction, coefficient in zip(DIRECTION_NAMES, self.components):
            canonical = normalize(coefficient)
            if canonical.is_zero:
                continue
            text = str(canonical)
            if len(canonical) > 1:
                text = f"({text})"
            if text == "1":
                parts.append(f"d/d{direction}")
            elif text == "-1":
                parts.append(f"-d/d{direction}")
            else:
                parts.append(f"{text}*d/d{direction}")
        body = " + ".join(parts).replace("+ -", "- ") or "0"
        if not normalize(self.f).is_zero:
            body += f", f = {format_expr(self.f)}"
        return body


class ProlongedCoefficients(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    tau1: Any
    xi1: Any
    eta1: Any
    phi1: Any

    @property
    def components(self) -> Tuple[sympy.Expr, ...]:
        return (self.tau1, self.xi1, self.eta1, self.phi1)


class VerdictStatus(str, Enum):
    VERIFIED = "verified"
    REFUTED = "refuted"


class Verdict(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    status: VerdictStatus
    residual: Any = ZERO
    offending: Tuple[Tuple[Any, Any], ...] = Field(
        default=(), description="(velocity monomial, CanonicalExpr coefficient) pairs"
    )
    literal_status: Optional[VerdictStatus] = Field(
        None, description="Outcome under the literal case constraints when a normalization was needed"
    )

    @model_validator(mode="after")
    def _status_matches_residual(self):
        if (self.status is VerdictStatus.VERIFIED) != self.residual.is_zero:
            raise ValueError("verified status requires a zero residual")
        return self

    @property
    def verified(self) -> bool:
        return self.status is VerdictStatus.VERIFIED

    @property
    def needs_normalization(self) -> bool:
        return self.verified and self.literal_status is VerdictStatus.REFUTED


class DeterminingEquation(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    key: Any = Field(..., description="Velocity monomial, 1 for the constant key")
    equation: CanonicalExpr

    @property
    def key_text(self) -> str:
        return format_expr(self.key)


class DeterminingSystem(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    equations: Tuple[DeterminingEquation, ...]
    implied_keys: Tuple[Any, ...] = Field(
        default=(), description="Mixed cubic keys that vanish once the pure-cube equations hold"
    )
    template: Dict[Any, CanonicalExpr] = Field(default_factory=dict, description="Full velocity split of the residual")

    def __len__(self) -> int:
        return len(self.equations)

    def equation_for(self, key) -> Optional[DeterminingEquation]:
        key = _coerce_expr(key)
        return next((e for e in self.equations if e.key == key), None)


class ClaimedBracket(BaseModel):
    """A published commutator [X_i, X_j] = sum_k c_k X_k (1-based indices)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    i: int = Field(..., ge=1)
    j: int = Field(..., ge=1)
    rhs: Dict[int, Any] = Field(default_factory=dict)

    @field_validator("rhs", mode="before")
    @classmethod
    def _rationals(cls, value):
        return {int(k): sympy.Rational(v) for k, v in dict(value).items() if sympy.Rational(v) != 0}

    @property
    def rhs_text(self) -> str:
        return combination_text(self.rhs)

    @property
    def text(self) -> str:
        return f"[X{self.i}, X{self.j}] = {self.rhs_text}"


def combination_text(coefficients: Dict[int, Any]) -> str:
    parts = []
    for k in sorted(coefficients):
        c = sympy.Rational(coefficients[k])
        if c == 0:
            continue
        sign = "-" if c < 0 else "+"
        magnitude = abs(c)
        body = f"X{k}" if magnitude == 1 else f"{magnitude}*X{k}"
        parts.append((sign, body))
    if not parts:
        return "0"
    text = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, body in parts[1:]:
        text += f" {sign} {body}"
    return text


class CaseSpec(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    label: str
    constraint_text: str
    constraints: RewriteRuleSet
    nonvanishing: Tuple[Any, ...] = ()
    normalization: RewriteRuleSet = EMPTY_RULES
    normalization_note: Optional[str] = None
    component_solution: Generator
    parameters: Tuple[Any, ...]
    claimed_generators: Tuple[Generator, ...]
    claimed_brackets: Tuple[ClaimedBracket, ...] = ()
    brackets_exhaustive: bool = Field(True, description="All brackets not listed are claimed to vanish")
    claimed_solvable: Optional[bool] = None
    claimed_derived_length: Optional[int] = None
    claimed_killing_nonzero: Tuple[Tuple[int, int], ...] = ()
    claimed_levi_factor: Tuple[int, ...] = ()
    notes: Tuple[str, ...] = ()

    @property
    def rules(self) -> RewriteRuleSet:
        return self.constraints.merged(self.normalization)

    @property
    def generator_names(self) -> Tuple[str, ...]:
        return tuple(g.name or f"X{k}" for k, g in enumerate(self.claimed_generators, start=1))


class OnShellStatus(str, Enum):
    PROVED = "proved"
    FAILED = "failed"


class PhysicsLabel(str, Enum):
    ENERGY = "energy"
    MOMENTUM_Y = "momentum-y"
    MOMENTUM_Z = "momentum-z"
    SCALING_OTHER = "scaling/other"


class FirstIntegral(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    expression: Any
    generator: Generator
    on_shell_status: Optional[OnShellStatus] = None
    physics_label: Optional[PhysicsLabel] = None
    source_verified: bool = True
    remainder: Any = ZERO

    @property
    def generator_name(self) -> str:
        return self.generator.name or "X"

    @property
    def text(self) -> str:
        return format_expr(self.expression)
