import math
from enum import Enum
from typing import Any, List, Optional, Tuple

import numpy as np
import sympy
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..services.parser import format_expr
from ..services.symbolic import EMPTY_RULES, FUNCTION_NAMES, RewriteRuleSet, atom


class FunctionFamily(str, Enum):
    CONSTANT = "constant"
    LINEAR = "linear"
    POWER = "power"


class ClosedForm(BaseModel):
    """One metric function from the family {c, c*t + d, c*t^p}."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    name: str
    family: FunctionFamily
    c: Any
    d: Any = sympy.S.Zero
    p: Any = sympy.S.One

    @field_validator("name")
    @classmethod
    def _known_function(cls, value):
        if value not in FUNCTION_NAMES:
            raise ValueError(f"Unknown metric function '{value}'")
        return value

    @field_validator("c", "d", "p", mode="before")
    @classmethod
    def _exact(cls, value):
        return sympy.nsimplify(value) if isinstance(value, float) else sympy.sympify(value)

    def expr(self, t: sympy.Symbol) -> sympy.Expr:
        if self.family is FunctionFamily.CONSTANT:
            return self.c
        if self.family is FunctionFamily.LINEAR:
            return self.c * t + self.d
        return self.c * t ** self.p

    @property
    def text(self) -> str:
        return f"{self.name} = {format_expr(self.expr(atom('t')))}"


class MetricSpec(BaseModel):
    """Symbolic metric (case rules on A, B, C) or numeric metric (closed forms)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    rules: RewriteRuleSet = EMPTY_RULES
    closed_forms: Tuple[ClosedForm, ...] = ()
    label: Optional[str] = None

    @property
    def numeric(self) -> bool:
        return bool(self.closed_forms)

    def closed_form(self, name: str) -> Optional[ClosedForm]:
        return next((form for form in self.closed_forms if form.name == name), None)

    @property
    def description(self) -> str:
        if self.numeric:
            return ", ".join(form.text for form in self.closed_forms)
        return str(self.rules) or "generic"


class GeodesicState(BaseModel):
    s: float
    position: Tuple[float, float, float, float] = Field(..., description="(t, x, y, z)")
    velocity: Tuple[float, float, float, float] = Field(..., description="(td, xd, yd, zd)")

    @field_validator("position", "velocity")
    @classmethod
    def _finite(cls, value):
        if not all(math.isfinite(v) for v in value):
            raise ValueError("state components must be finite")
        return value

    def as_array(self) -> np.ndarray:
        return np.array(self.position + self.velocity, dtype=float)

    @classmethod
    def from_array(cls, s: float, values) -> "GeodesicState":
        values = [float(v) for v in values]
        return cls(s=s, position=tuple(values[:4]), velocity=tuple(values[4:]))


class Trajectory(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    states: List[GeodesicState]
    step: float = Field(..., gt=0)
    metric: MetricSpec
    diverged: bool = False

    @property
    def smax(self) -> float:
        return self.states[-1].s

    def as_array(self) -> np.ndarray:
        return np.array([state.as_array() for state in self.states])
