"""Pydantic schemas for declarative input files, run configuration and reports."""

from enum import Enum
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

SCHEMA_VERSION = "defects/1"


class OutputFormat(str, Enum):
    JSON = "json"
    TEXT = "text"


class DefectKind(str, Enum):
    TWIST = "twist"
    HOLE = "hole"
    THREADED_PUNCTURE = "threaded-puncture"


class Document(BaseModel):
    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    schema_: str = Field(SCHEMA_VERSION, alias="schema")
    name: str = ""

    @field_validator("schema_")
    @classmethod
    def check_schema(cls, value: str) -> str:
        if value != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema {value!r}, expected {SCHEMA_VERSION!r}")
        return value


# ---------------------------------------------------------------------------
# Excitation models
# ---------------------------------------------------------------------------


class GeneratorSpec(BaseModel):
    name: str
    dim: int = Field(ge=0)
    theta: Literal[1, -1] = 1


class WallSpec(BaseModel):
    name: str
    dim: Optional[int] = None
    images: Dict[str, List[str]]


class LabelSpec(BaseModel):
    """A non-eigenstate excitation kept as a label with metadata only."""

    name: str
    copies: List[int] = []
    note: str = ""


class ModelSpec(Document):
    kind: Literal["model"] = "model"
    D: int = Field(ge=2)
    generators: List[GeneratorSpec]
    braiding: List[List[int]]
    labels: List[LabelSpec] = []
    walls: List[WallSpec] = []


# ---------------------------------------------------------------------------
# Lattices and braid scripts
# ---------------------------------------------------------------------------


Boundary = Literal["rough", "smooth"]


class HoleSpec(BaseModel):
    """Hole given by explicit sites or by an inclusive rectangle x0, y0, x1, y1.

    Coordinates are doubled: vertices sit at (even, even), plaquettes at
    (odd, odd). Rough holes remove vertices, smooth holes remove plaquettes.
    """

    boundary: Boundary
    sites: List[List[int]] = []
    rect: Optional[List[int]] = None

    @model_validator(mode="after")
    def check_region(self) -> "HoleSpec":
        if not self.sites and self.rect is None:
            raise ValueError("a hole needs sites or a rectangle")
        for site in self.sites:
            if len(site) != 2:
                raise ValueError(f"site {site} is not a coordinate pair")
        if self.rect is not None and len(self.rect) != 4:
            raise ValueError("rect must be [x0, y0, x1, y1]")
        return self


class LatticeSpec(Document):
    kind: Literal["lattice"] = "lattice"
    width: int = Field(ge=1)
    height: int = Field(ge=1)
    top: Boundary = "rough"
    bottom: Boundary = "rough"
    left: Boundary = "smooth"
    right: Boundary = "smooth"
    periodic: bool = False
    holes: List[HoleSpec] = []


class BraidSpec(Document):
    kind: Literal["braid"] = "braid"
    lattice: LatticeSpec
    hole: int = 0
    path: List[List[int]] = []
    script: List[str] = []
    expected: Optional[Dict[str, str]] = None
    distance_floor: Optional[int] = None


# ---------------------------------------------------------------------------
# Defect schemes
# ---------------------------------------------------------------------------


class DefectSpec(BaseModel):
    id: str
    kind: DefectKind
    dim: int = 0
    wall: Optional[str] = None
    condensable: List[str] = []
    rough_copies: Optional[List[int]] = None


class RelationSpec(BaseModel):
    kind: Literal["threaded", "concentric"]
    outer: str
    inner: str


class QubitSpec(BaseModel):
    name: str
    x: str
    z: str


class TransformEntry(BaseModel):
    product: List[str]
    phase: int = 0


class MoveSpec(BaseModel):
    name: str
    kind: Literal["exchange", "monodromy"]
    defects: List[str]
    derived: bool = False
    transform: Dict[str, TransformEntry] = {}

    @field_validator("defects")
    @classmethod
    def check_pair(cls, value: List[str]) -> List[str]:
        if len(value) != 2 or value[0] == value[1]:
            raise ValueError("a braid move acts on two distinct defects")
        return value


class SchemeSpec(Document):
    kind: Literal["scheme"] = "scheme"
    model: str
    defects: List[DefectSpec] = []
    relations: List[RelationSpec] = []
    qubits: List[QubitSpec] = []
    moves: List[MoveSpec] = []


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------


class RunConfig(BaseModel):
    subcommand: str
    input: Optional[str] = None
    builtin: Optional[str] = None
    wall: Optional[str] = None
    n: Optional[int] = None
    gate: Optional[str] = None
    size: Optional[int] = None
    max_weight: Optional[int] = Field(None, ge=0)
    bound: int = Field(10_000, gt=0)
    branch_cap: int = Field(12, gt=0)
    distance_floor: int = Field(2, ge=0)
    format: OutputFormat = OutputFormat.JSON
    verify: bool = True
    out: Optional[str] = None

    @model_validator(mode="after")
    def check_register_size(self) -> "RunConfig":
        if self.n is not None and (self.n < 3 or self.n % 2 == 0):
            raise ValueError(f"N must be odd and at least 3, got {self.n}")
        return self


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


class EligibilityReport(BaseModel):
    model: str
    wall: str
    eligible: bool
    reason: str = ""
    condensable: List[str] = []
    witness_a: Optional[str] = None
    witness_b: Optional[str] = None
    fermion_dimension: Optional[int] = None
    twist_dimension: Optional[int] = None
    braid_check: Optional[bool] = None


class ModelCheckReport(BaseModel):
    model: str
    D: int
    valid: bool
    problems: List[str] = []
    eligibility: Optional[EligibilityReport] = None


class CodeValidationReport(BaseModel):
    valid: bool
    n: int
    k: int
    rank: int
    violation: Optional[str] = None
    pair: Optional[List[int]] = None


class DistanceResult(BaseModel):
    found: bool
    distance: Optional[int] = None
    searched_up_to: int
    witness: Optional[str] = None


class LatticeReport(BaseModel):
    n: int
    k: int
    validation: CodeValidationReport
    distance: Optional[DistanceResult] = None
    logicals: List[List[str]] = []
    generators: List[str] = []
    sketch: str = ""


class MoveReport(BaseModel):
    name: str
    kind: str
    defects: List[str]
    tableau: Dict[str, str]
    symplectic: bool


class SchemeReport(BaseModel):
    name: str
    qubits: List[str]
    moves: List[MoveReport]
    group_order: int
    truncated: bool
    all_clifford: bool


class DeformReport(BaseModel):
    n: int
    k: int
    steps: int
    tableau: Dict[str, str]
    expected: Optional[Dict[str, str]] = None
    passed: Optional[bool] = None
    byproduct: str


class ResourceCounts(BaseModel):
    gadgets: int = 0
    measurements: int = 0
    global_transversal: int = 0
    braids: int = 0


class BranchResult(BaseModel):
    outcomes: str
    passed: bool
    failing_input: Optional[str] = None


class BranchReport(BaseModel):
    target: str
    measurements: int
    branch_count: int
    passed_count: int
    verdict: bool
    branches: List[BranchResult] = []
    branches_truncated: bool = False
    first_failure: Optional[BranchResult] = None


class CompileReport(BaseModel):
    n: int
    gate: str
    program: List[str]
    resources: ResourceCounts
    dataflow_ok: bool
    verification: Optional[BranchReport] = None
