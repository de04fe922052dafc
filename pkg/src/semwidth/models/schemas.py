import json
from typing import Any, Literal

from pydantic import Field

from .base import BaseModel

WidthClassName = Literal["tw", "pw", "ctw", "cpw", "owctw", "owcpw"]


class Limits(BaseModel):
    """Resource caps shared by every command; echoed in each report."""

    m: int = Field(default=3, ge=1, description="Refinement length bound for approximations")
    word_bound: int = Field(default=8, ge=0, description="Longest word per atom when enumerating expansions")
    treewidth_vertex_cap: int = Field(default=20, ge=1, description="Largest graph for exact tree-width")
    pathwidth_vertex_cap: int = Field(default=18, ge=1, description="Largest graph for exact path-width")
    max_generated: int = Field(default=200000, ge=1, description="Homomorphic images generated per approximation")
    max_expansions: int = Field(default=100000, ge=1, description="Expansions checked per containment test")
    relation_size_cap: int = Field(default=2000000, ge=1, description="Largest bag relation materialized by tw evaluation")
    cubic_constant: int = Field(default=8, ge=1, description="Constant of the cubic refinement bound for width one")
    spot_check_dbs: int = Field(default=5, ge=0, description="Random databases used to spot-check approximations")
    jobs: int = Field(default=1, ge=1, description="Worker processes for refinement fan-out")


class WidthArgs(BaseModel):
    path: str = Field(description="Query file, or '-' for stdin")
    query: str | None = Field(default=None, description="Name of the query to inspect; all queries when omitted")
    limits: Limits = Field(default_factory=Limits)


class ApproxArgs(BaseModel):
    path: str = Field(description="Query file, or '-' for stdin")
    query: str | None = Field(default=None, description="Name of the query; the first one when omitted")
    width_class: WidthClassName = Field(default="tw", description="Width class of the approximation")
    k: int = Field(default=2, ge=1)
    minimize: bool = Field(default=False, description="Drop disjuncts contained in another disjunct")
    output: str | None = Field(default=None, description="Write the approximation as a query file here")
    limits: Limits = Field(default_factory=Limits)

    class Config:
        json_schema_extra = {
            "example": {"path": "parity.q", "width_class": "tw", "k": 2, "limits": {"m": 2}},
        }


class DecideArgs(BaseModel):
    path: str = Field(description="Query file, or '-' for stdin")
    query: str | None = None
    width_class: Literal["tw", "pw"] = "tw"
    k: int = Field(default=2, ge=1)
    one_way: bool = Field(default=False, description="Ask for an equivalent union without inverse letters")
    limits: Limits = Field(default_factory=Limits)


class EvalArgs(BaseModel):
    query_path: str
    db_path: str
    query: str | None = None
    mode: Literal["naive", "tw", "pw"] = "naive"
    k_cap: int | None = Field(default=None, ge=0, description="Refuse decompositions wider than this")
    limits: Limits = Field(default_factory=Limits)


class ContainArgs(BaseModel):
    left_path: str
    right_path: str
    left_query: str | None = None
    right_query: str | None = None
    limits: Limits = Field(default_factory=Limits)


class ExpandArgs(BaseModel):
    path: str
    query: str | None = None
    bound: int = Field(default=1, ge=0, description="Longest word per atom")
    max_results: int = Field(default=1000, ge=1)


class RefineArgs(BaseModel):
    path: str
    query: str | None = None
    m: int = Field(default=2, ge=1, description="Longest atom refinement")
    max_results: int = Field(default=1000, ge=1)


class Report(BaseModel):
    command: str
    inputs_digest: str = Field(description="SHA-256 over the input texts")
    payload: dict[str, Any] = Field(default_factory=dict)
    exact: bool | None = None
    limits: Limits | None = None
    caps_hit: list[str] = Field(default_factory=list)
    notes: list[str] = Field(default_factory=list)

    def render_text(self) -> str:
        lines = [f"command: {self.command}", f"inputs: {self.inputs_digest}"]
        if self.exact is not None:
            lines.append(f"exact: {'yes' if self.exact else 'no'}")
        for key, value in self.payload.items():
            if isinstance(value, str) and "\n" in value:
                lines.append(f"{key}:")
                lines.extend(f"  {line}" for line in value.rstrip("\n").splitlines())
            else:
                lines.append(f"{key}: {json.dumps(value, sort_keys=True)}")
        if self.limits is not None:
            limits = ", ".join(f"{name}={value}" for name, value in self.limits.model_dump().items())
            lines.append(f"limits: {limits}")
        lines.append(f"caps hit: {', '.join(self.caps_hit) if self.caps_hit else 'none'}")
        lines.extend(f"note: {note}" for note in self.notes)
        return "\n".join(lines) + "\n"
