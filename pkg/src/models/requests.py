from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, Field, field_validator

CASE_SELECTORS = ("I", "II", "III", "IV", "V", "VI", "VII", "VIII", "IX", "all")


class Command(str, Enum):
    DERIVE = "derive"
    AUDIT = "audit"
    ALGEBRA = "algebra"
    CONSERVE = "conserve"


class OutputFormat(str, Enum):
    TEXT = "text"
    JSON = "json"


class RunConfig(BaseModel):
    command: Command
    case: str = Field(default="all", description="Case label I..IX or all")
    format: OutputFormat = Field(default=OutputFormat.TEXT)
    metric: Optional[str] = Field(None, description="Numeric metric, inline text or a file path")
    ics: Optional[List[float]] = Field(None, description="t, x, y, z, td, xd, yd, zd")
    step: float = Field(..., gt=0, description="RK4 step")
    smax: float = Field(..., gt=0, description="End of the affine-parameter window")
    out: Optional[str] = Field(None, description="Write the report here instead of stdout")

    @field_validator("case", mode="before")
    @classmethod
    def _known_case(cls, value):
        value = str(value).strip()
        label = value if value == "all" else value.upper()
        if label not in CASE_SELECTORS:
            raise ValueError(f"unknown case '{value}'")
        return label

    @field_validator("ics", mode="before")
    @classmethod
    def _split_ics(cls, value):
        if isinstance(value, str):
            value = [part.strip() for part in value.split(",") if part.strip()]
        if value is not None and len(value) != 8:
            raise ValueError("initial conditions need 8 numbers: t,x,y,z,td,xd,yd,zd")
        return value
