from typing import List, Optional

from pydantic import BaseModel, Field


class EquationRecord(BaseModel):
    monomial: str = Field(..., description="Velocity monomial key")
    equation: str = Field(..., description="Content- and sign-normalized coefficient, equated to zero")


class ReferenceMatch(BaseModel):
    reference: str = Field(..., description="Published equation")
    published_key: Optional[str] = None
    computed_key: Optional[str] = None
    factor: Optional[str] = Field(None, description="computed = factor * published before normalization")
    matched: bool


class DeriveReport(BaseModel):
    equations: List[EquationRecord]
    implied_keys: List[str] = Field(default_factory=list)
    matches: List[ReferenceMatch] = Field(default_factory=list)
    findings: List[str] = Field(default_factory=list)


class GeneratorResult(BaseModel):
    name: str
    status: str
    residual: Optional[str] = None
    field: Optional[str] = None
    offending: Optional[List[str]] = None
    normalization_required: Optional[bool] = None
    repair: Optional[str] = None


class BracketResult(BaseModel):
    i: int
    j: int
    claimed: str
    computed: str
    match: bool
    gauge_match: Optional[bool] = None


class AuditReport(BaseModel):
    case: str
    constraints: str
    generators: List[GeneratorResult]
    brackets: List[BracketResult]
    findings: List[str] = Field(default_factory=list)
    basis: List[GeneratorResult] = Field(default_factory=list, description="Generators extracted from the component solution")
    verified_count: int = 0
    bracket_matches: int = 0


class LeviReport(BaseModel):
    candidate: List[str]
    holds: bool
    failed_condition: Optional[str] = None
    h: Optional[str] = None
    e: Optional[str] = None
    f: Optional[str] = None


class AlgebraReport(BaseModel):
    case: str
    n: int
    basis: List[str]
    closed: bool = True
    brackets: List[dict] = Field(default_factory=list)
    killing_form: List[List[str]] = Field(default_factory=list)
    derived_series: List[int] = Field(default_factory=list)
    lower_central_series: List[int] = Field(default_factory=list)
    radical_dim: Optional[int] = None
    solvable: Optional[bool] = None
    nilpotent: Optional[bool] = None
    levi: Optional[LeviReport] = None
    unverified: List[str] = Field(default_factory=list)
    findings: List[str] = Field(default_factory=list)


class DriftReport(BaseModel):
    integral: str
    generator: str
    max_abs_drift: float
    max_rel_drift: float
    step: float
    smax: float
    proved_on_shell: bool


class IntegralReport(BaseModel):
    generator: str
    integral: str
    on_shell: str
    physics_label: str
    source_verified: bool
    remainder: Optional[str] = None


class ConserveReport(BaseModel):
    case: str
    metric: str
    ics: Optional[List[float]] = None
    integrals: List[IntegralReport]
    drift: List[DriftReport] = Field(default_factory=list)
    diverged: bool = False
    findings: List[str] = Field(default_factory=list)


class SummaryLine(BaseModel):
    case: str
    generator: str
    claimed: bool = Field(..., description="The summary attributes this symmetry to the case")
    listed: bool = Field(..., description="The case's own generator list contains it")
    verified: bool = Field(..., description="verify_generator outcome under the case constraints")
    agrees: bool


class SummaryClaimReport(BaseModel):
    lines: List[SummaryLine]
    containment: List[str] = Field(default_factory=list)
    findings: List[str] = Field(default_factory=list)
