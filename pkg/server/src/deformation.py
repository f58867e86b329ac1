"""Code deformation by stabiliser measurements.

A hole moves one lattice step at a time: a ``carve`` step measures a single
qubit to extend the hole onto the next site, a ``fill`` step measures the
stabiliser of the vacated site to shrink it again. Logical representatives
are carried along so the net logical map of a closed braid can be read off.
"""

import logging
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np

from src.errors import (
    ConfigurationError,
    DefectError,
    DistanceFloorError,
    InvalidSpecError,
    LogicalMeasurementError,
    ParseError,
)
from src.lattice_code import (
    Hole,
    Lattice,
    Site,
    StabiliserCode,
    build_code,
    build_generators,
    build_planar_code,
    distance_bruteforce,
    interior_edges,
    validate_holes,
)
from src.models import BraidSpec, DeformReport
from src.pauli_algebra import (
    CliffordTableau,
    PauliOperator,
    commutes,
    equals_up_to_phase,
    express_in_basis,
    gf2_rank,
    gf2_solve,
    is_symplectic,
    multiply,
    tableau_from_images,
)

logger = logging.getLogger(__name__)

StepKind = Literal["carve", "fill"]


@dataclass(frozen=True)
class DeformationStep:
    kind: StepKind
    boundary: str
    target: Site

    def measurement(self, lattice: Lattice) -> PauliOperator:
        n = lattice.n
        if self.kind == "carve":
            if self.target not in lattice.index:
                raise InvalidSpecError(f"carve target {self.target} is not a qubit")
            letter = "Z" if self.boundary == "rough" else "X"
            return PauliOperator.single(n, lattice.index[self.target], letter)
        if self.boundary == "rough":
            if not lattice.has_vertex(self.target):
                raise InvalidSpecError(f"fill target {self.target} is not a vertex")
            return PauliOperator.on_support(n, lattice.star_edges(self.target), "X")
        if not lattice.has_plaquette(self.target):
            raise InvalidSpecError(f"fill target {self.target} is not a plaquette")
        return PauliOperator.on_support(n, lattice.plaquette_edges(self.target), "Z")

    def __str__(self) -> str:
        return f"{self.kind} {self.boundary} {self.target[0]} {self.target[1]}"


@dataclass
class BraidScript:
    steps: list[DeformationStep] = field(default_factory=list)
    hole: Optional[int] = None
    path: list[Site] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)

    def to_text(self) -> str:
        lines = []
        if self.hole is not None:
            walk = " ".join(f"{x},{y}" for x, y in self.path)
            lines.append(f"# hole {self.hole} path {walk}".rstrip())
        lines.extend(str(step) for step in self.steps)
        return "\n".join(lines)

    @classmethod
    def from_text(cls, text: str) -> "BraidScript":
        return cls(parse_steps(text.splitlines()))


def parse_steps(lines: Sequence[str]) -> list[DeformationStep]:
    steps = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 4 or parts[0] not in ("carve", "fill") or parts[1] not in ("rough", "smooth"):
            raise ParseError(f"expected '<carve|fill> <rough|smooth> x y', got {line!r}", line=lineno)
        try:
            target = (int(parts[2]), int(parts[3]))
        except ValueError:
            raise ParseError(f"bad coordinates in {line!r}", line=lineno) from None
        steps.append(DeformationStep(parts[0], parts[1], target))
    return steps


@dataclass
class DeformationState:
    """Current generators, logical representatives and Pauli frame.

    ``representatives`` holds X0, Z0, X1, Z1, ... of the initial basis as
    they are carried through the measurements.
    """

    n: int
    generators: list[PauliOperator]
    representatives: list[PauliOperator]
    frame: PauliOperator
    measurements: int = 0

    @classmethod
    def from_code(cls, code: StabiliserCode) -> "DeformationState":
        reps = [op for pair in code.logical_pairs for op in pair]
        return cls(code.n, list(code.generators), reps, PauliOperator.identity(code.n))

    @property
    def logical_pairs(self) -> list[tuple[PauliOperator, PauliOperator]]:
        reps = self.representatives
        return list(zip(reps[0::2], reps[1::2]))

    @property
    def code(self) -> StabiliserCode:
        return StabiliserCode(self.n, list(self.generators), self.logical_pairs)


def apply_measurement(
    state: DeformationState, measurement: PauliOperator, outcome: int = 1
) -> DeformationState:
    """Project onto the ``outcome`` eigenspace of ``measurement``, normalised to +1.

    A -1 outcome is absorbed into the frame by the generator that anticommutes
    with the measurement, so the stored generators always carry the +1 sign.
    """
    if measurement.n != state.n:
        raise InvalidSpecError(f"measurement acts on {measurement.n} qubits, code on {state.n}")
    if measurement.phase % 2:
        raise InvalidSpecError(f"measured operator {measurement} is not Hermitian")
    anticommuting = [i for i, g in enumerate(state.generators) if not commutes(g, measurement)]
    if not anticommuting:
        if all(commutes(rep, measurement) for rep in state.representatives):
            state.measurements += 1
            return state
        raise LogicalMeasurementError(f"logical measurement attempted: {measurement}")

    first, *others = anticommuting
    g = state.generators[first]
    for i in others:
        state.generators[i] = multiply(state.generators[i], g)
    state.representatives = [
        rep if commutes(rep, measurement) else multiply(rep, g)
        for rep in state.representatives
    ]
    state.generators[first] = measurement
    if outcome == -1:
        state.frame = multiply(state.frame, g).with_phase(0)
    state.measurements += 1
    return state


def byproduct_frame(state: DeformationState) -> PauliOperator:
    return state.frame


def same_group(a: Sequence[PauliOperator], b: Sequence[PauliOperator], n: int) -> bool:
    """Whether two generator lists generate the same signed stabiliser group."""
    rows_a = np.array([g.symplectic() for g in a], dtype=np.uint8).reshape(-1, 2 * n)
    rows_b = np.array([g.symplectic() for g in b], dtype=np.uint8).reshape(-1, 2 * n)
    rank = gf2_rank(rows_a)
    if rank != gf2_rank(rows_b) or rank != gf2_rank(np.concatenate([rows_a, rows_b])):
        return False
    for g in b:
        coeffs = gf2_solve(rows_a, g.symplectic())
        element = PauliOperator.identity(n)
        for idx in np.nonzero(coeffs)[0]:
            element = multiply(element, a[idx])
        if element.phase != g.phase:
            return False
    return True


# ---------------------------------------------------------------------------
# Scripts
# ---------------------------------------------------------------------------


def translation_steps(lattice: Lattice, hole: Hole, dx: int, dy: int) -> list[DeformationStep]:
    """Carve onto the translated sites, then fill the sites left behind."""
    old = {lattice.normalise(s) for s in hole.sites}
    moved = hole.shifted(dx, dy)
    new = {lattice.normalise(s) for s in moved.sites}
    steps = []
    for site in sorted(new - old):
        source = lattice.normalise((site[0] - dx, site[1] - dy))
        steps.append(DeformationStep("carve", hole.boundary, lattice.edge_between(source, site)))
    carved = {step.target for step in steps}
    joined = Hole(hole.boundary, frozenset(old | new))
    already = {lattice.edges[q] for q in interior_edges(lattice, hole)}
    for q in interior_edges(lattice, joined):
        edge = lattice.edges[q]
        ends = lattice.edge_endpoints(edge) if hole.boundary == "rough" else lattice.edge_faces(edge)
        if edge not in carved and edge not in already and set(ends) <= new:
            steps.append(DeformationStep("carve", hole.boundary, edge))
    for site in sorted(old - new):
        steps.append(DeformationStep("fill", hole.boundary, site))
    return steps


def move_hole(code: StabiliserCode, hole_id: int, path: Sequence[Sequence[int]]) -> BraidScript:
    """Script moving hole ``hole_id`` so its anchor site visits ``path`` in order.

    The anchor is the smallest site of the hole; each entry of ``path`` must be
    one lattice step (two doubled units) from the previous one.
    """
    if code.lattice is None:
        raise InvalidSpecError("move_hole needs a lattice-built code")
    if not 0 <= hole_id < len(code.holes):
        raise InvalidSpecError(f"no hole {hole_id}")
    lattice = code.lattice
    holes = list(code.holes)
    hole = holes[hole_id]
    anchor = min(hole.sites)
    script = BraidScript(hole=hole_id, path=[tuple(p) for p in path])
    for target in script.path:
        dx, dy = target[0] - anchor[0], target[1] - anchor[1]
        if sorted((abs(dx), abs(dy))) != [0, 2]:
            raise InvalidSpecError(f"path step {anchor} -> {target} is not one lattice step")
        moved = hole.shifted(dx, dy)
        others = holes[:hole_id] + holes[hole_id + 1:]
        # both the extended hole and its final position must be legal
        joined = Hole(hole.boundary, hole.sites | moved.sites)
        try:
            validate_holes(lattice, others + [joined])
        except InvalidSpecError as e:
            raise InvalidSpecError(f"path step {anchor} -> {target}: {e}") from None
        script.steps.extend(translation_steps(lattice, hole, dx, dy))
        hole, anchor = moved, target
    holes[hole_id] = hole
    logger.debug(f"Hole {hole_id} path of {len(script.path)} sites gives {len(script)} steps")
    return script


def reverse_path(start: Sequence[int], path: Sequence[Sequence[int]]) -> list[Site]:
    """Walk ``path`` backwards, ending at ``start``."""
    sites = [tuple(start)] + [tuple(p) for p in path]
    return sites[-2::-1]


def loop_path(center: Sequence[int], radius: int, start: Sequence[int]) -> list[Site]:
    """Clockwise ring of sites at Chebyshev ``radius`` around ``center``, back to ``start``.

    ``radius`` is in doubled units and ``start`` must lie on the ring.
    """
    cx, cy = center
    ring = []
    x, y = cx - radius, cy + radius
    for dx, dy in ((2, 0), (0, -2), (-2, 0), (0, 2)):
        for _ in range(radius):
            ring.append((x, y))
            x, y = x + dx, y + dy
    start = tuple(start)
    if start not in ring:
        raise InvalidSpecError(f"{start} is not on the ring of radius {radius} around {tuple(center)}")
    i = ring.index(start)
    return ring[i + 1:] + ring[: i + 1]


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------


@dataclass
class BraidResult:
    tableau: CliffordTableau
    state: DeformationState
    steps: int


def run_braid(
    code: StabiliserCode,
    script: BraidScript,
    rng: Optional[np.random.Generator] = None,
    distance_floor: Optional[int] = None,
) -> BraidResult:
    """Apply a script and return the induced logical tableau.

    Measurement outcomes are +1 unless ``rng`` is given, in which case they
    are drawn at random and absorbed into the frame. With ``distance_floor``
    every intermediate code is searched for a logical lighter than the floor.
    """
    if code.lattice is None:
        raise InvalidSpecError("run_braid needs a lattice-built code")
    state = DeformationState.from_code(code)
    for number, step in enumerate(script.steps, start=1):
        measurement = step.measurement(code.lattice)
        outcome = int(rng.choice([1, -1])) if rng is not None else 1
        apply_measurement(state, measurement, outcome)
        if distance_floor is not None and distance_floor > 1 and state.representatives:
            result = distance_bruteforce(state.code, max_weight=distance_floor - 1)
            if result.found:
                raise DistanceFloorError(
                    f"step {number} ({step}): logical of weight {result.distance} "
                    f"below floor {distance_floor}: {result.witness}"
                )
    if not same_group(state.generators, code.generators, code.n):
        raise ConfigurationError("script does not return the holes to their starting configuration")

    images = [
        express_in_basis(rep, state.generators, code.logical_pairs)
        for rep in state.representatives
    ]
    tableau = tableau_from_images(images[0::2], images[1::2])
    if not is_symplectic(tableau):
        raise DefectError("braid produced a non-symplectic logical map")
    logger.info(f"Braid of {len(script)} steps on n={code.n} k={code.k} done")
    return BraidResult(tableau, state, len(script))


def moved_holes(code: StabiliserCode, script: BraidScript) -> list[Hole]:
    """Hole configuration once the script's hole has walked its whole path."""
    holes = list(code.holes)
    if script.hole is not None and script.path:
        hole = holes[script.hole]
        last, anchor = script.path[-1], min(hole.sites)
        holes[script.hole] = hole.shifted(last[0] - anchor[0], last[1] - anchor[1])
    return holes


def final_configuration(code: StabiliserCode, script: BraidScript) -> list[PauliOperator]:
    return build_generators(code.lattice, moved_holes(code, script))


def reverse_script(code: StabiliserCode, script: BraidScript) -> BraidScript:
    """Script walking the same hole back from the end of ``script`` to its start."""
    if script.hole is None:
        raise InvalidSpecError("only scripts generated from a hole path can be reversed")
    start = min(code.holes[script.hole].sites)
    end_code = build_code(code.lattice, moved_holes(code, script))
    return move_hole(end_code, script.hole, reverse_path(start, script.path))


def load_braid(spec: BraidSpec) -> tuple[StabiliserCode, BraidScript, Optional[CliffordTableau]]:
    code = build_planar_code(spec.lattice)
    if spec.script:
        script = BraidScript(parse_steps(spec.script))
    else:
        script = move_hole(code, spec.hole, spec.path)
    expected = CliffordTableau.from_map(code.k, spec.expected) if spec.expected else None
    return code, script, expected


def run_braid_spec(spec: BraidSpec, rng: Optional[np.random.Generator] = None) -> DeformReport:
    code, script, expected = load_braid(spec)
    result = run_braid(code, script, rng=rng, distance_floor=spec.distance_floor)
    report = DeformReport(
        n=code.n,
        k=code.k,
        steps=result.steps,
        tableau=result.tableau.as_dict(),
        byproduct=str(byproduct_frame(result.state)),
    )
    if expected is not None:
        report.expected = expected.as_dict()
        report.passed = equals_up_to_phase(result.tableau, expected)
    return report
