"""Defect setups, path-descriptor logicals and the braid groups they induce.

Logical operators are named by the excitation they transport and the
topological class of its path: ``connects(a,b)`` for a string between two
defects (``vacuum`` stands for the outside), ``encloses(a)`` for a loop or
membrane around one defect and ``encloses_pair(a,b)`` for one around two.
Descriptors are written ``"<excitation>:<class>"``, optionally followed by
``"@<wall>,<wall>"`` listing the walls the path crosses.
"""

import logging
import re
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Literal, Optional, Sequence

import networkx as nx
import numpy as np

from src.anyon_model import (
    Excitation,
    ExcitationModel,
    boundary_condensate,
    braid_phase,
    builtin_model,
    clifford_eligibility,
    condensable_at_twist,
    condensate_group,
)
from src.errors import DefectError, ModelMismatchError, SchemeError
from src.models import (
    DefectKind,
    DefectSpec,
    MoveReport,
    MoveSpec,
    QubitSpec,
    RelationSpec,
    SchemeReport,
    SchemeSpec,
    TransformEntry,
)
from src.pauli_algebra import (
    CliffordTableau,
    GroupReport,
    PauliOperator,
    compose,
    generate_group,
    is_symplectic,
    multiply,
    tableau_from_images,
)
from src.utils import builtin_path, list_builtins, load_spec

logger = logging.getLogger(__name__)

VACUUM = "vacuum"
TopoKind = Literal["connects", "encloses", "encloses_pair"]

_DESCRIPTOR = re.compile(
    r"^\s*([^:\s]+)\s*:\s*(connects|encloses_pair|encloses)\s*\(([^)]*)\)\s*(?:@\s*(.*))?$"
)
_GENERAL = re.compile(r"^general\(\s*([^,\s]+)\s*,\s*([^)\s]+)\s*\)$")
_ARITY = {"connects": 2, "encloses": 1, "encloses_pair": 2}


# ---------------------------------------------------------------------------
# Path descriptors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TopoClass:
    kind: TopoKind
    defects: tuple[str, ...]

    def __post_init__(self):
        if len(self.defects) != _ARITY[self.kind]:
            raise SchemeError(f"{self.kind} takes {_ARITY[self.kind]} defect(s), got {len(self.defects)}")
        if len(set(self.defects)) != len(self.defects):
            raise SchemeError(f"{self.kind} needs distinct defects, got {self.defects}")
        if self.kind != "connects" and VACUUM in self.defects:
            raise SchemeError(f"{self.kind} cannot reference {VACUUM!r}")
        object.__setattr__(self, "defects", tuple(sorted(self.defects)))

    @property
    def enclosed(self) -> frozenset[str]:
        """Defects a loop class surrounds; empty for strings."""
        if self.kind == "connects":
            return frozenset()
        return frozenset(self.defects)

    @property
    def endpoints(self) -> tuple[str, ...]:
        return self.defects if self.kind == "connects" else ()

    def references(self, defect: str) -> bool:
        return defect in self.defects

    def __str__(self) -> str:
        return f"{self.kind}({','.join(self.defects)})"


@dataclass(frozen=True)
class PathDescriptor:
    excitation: Excitation
    topo: TopoClass
    wall_crossings: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "wall_crossings", tuple(sorted(self.wall_crossings)))

    @property
    def model(self) -> ExcitationModel:
        return self.excitation.model

    def __str__(self) -> str:
        text = f"{self.excitation.name}:{self.topo}"
        if self.wall_crossings:
            text += "@" + ",".join(self.wall_crossings)
        return text


def parse_descriptor(text: str, model: ExcitationModel) -> PathDescriptor:
    """Parse ``"e:connects(h1,h2)"``-style text against ``model``."""
    match = _DESCRIPTOR.match(text)
    if match is None:
        raise SchemeError(f"cannot parse path descriptor {text!r}")
    label, kind, args, walls = match.groups()
    defects = tuple(part.strip() for part in args.split(",") if part.strip())
    crossings = tuple(w.strip() for w in (walls or "").split(",") if w.strip())
    try:
        excitation = model.excitation(label)
    except DefectError as e:
        raise SchemeError(f"descriptor {text!r}: {e}") from None
    if excitation.is_vacuum:
        raise SchemeError(f"descriptor {text!r} transports the vacuum")
    return PathDescriptor(excitation, TopoClass(kind, defects), crossings)


def intersection_parity(s: TopoClass, t: TopoClass) -> int:
    """Parity of crossings between a string class and a loop class.

    A string crosses a loop once for each of its endpoints the loop
    encloses. Two strings, or two loops, never cross an odd number of times.
    """
    if s.kind == "connects" and t.kind != "connects":
        return len(set(s.endpoints) & t.enclosed) % 2
    if t.kind == "connects" and s.kind != "connects":
        return len(set(t.endpoints) & s.enclosed) % 2
    return 0


def descriptor_commutes(p: PathDescriptor, q: PathDescriptor) -> bool:
    if p.model is not q.model and p.model != q.model:
        raise ModelMismatchError(
            f"{p} belongs to model {p.model.name!r}, {q} to {q.model.name!r}"
        )
    if braid_phase(p.excitation, q.excitation) == 1:
        return True
    return intersection_parity(p.topo, q.topo) == 0


# ---------------------------------------------------------------------------
# Setups
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Defect:
    id: str
    kind: DefectKind
    dim: int
    condensable: tuple[Excitation, ...]
    wall: Optional[str] = None

    def condenses(self, e: Excitation) -> bool:
        return any(c.code == e.code for c in self.condensable)


@dataclass(frozen=True)
class Relation:
    kind: Literal["threaded", "concentric"]
    outer: str
    inner: str


@dataclass(frozen=True)
class EncodedQubit:
    name: str
    x: PathDescriptor
    z: PathDescriptor


@dataclass
class BraidMove:
    """Exchange or full monodromy of two defects.

    ``transform`` maps a descriptor to a formal product of descriptors and a
    power of i. A derived move has no table: each string ending on exactly
    one of the two defects picks up a loop of its excitation around the other.
    """

    name: str
    kind: Literal["exchange", "monodromy"]
    defects: tuple[str, str]
    derived: bool = False
    transform: dict[PathDescriptor, tuple[tuple[PathDescriptor, ...], int]] = field(
        default_factory=dict
    )


@dataclass
class DefectSetup:
    name: str
    model: ExcitationModel
    defects: dict[str, Defect]
    relations: list[Relation] = field(default_factory=list)
    qubits: list[EncodedQubit] = field(default_factory=list)
    moves: list[BraidMove] = field(default_factory=list)

    @property
    def k(self) -> int:
        return len(self.qubits)

    @property
    def labels(self) -> list[str]:
        return [q.name for q in self.qubits]

    @property
    def basis(self) -> list[PathDescriptor]:
        """X and Z descriptors interleaved: X of qubit 0, Z of qubit 0, ..."""
        return [d for q in self.qubits for d in (q.x, q.z)]

    @property
    def threaded(self) -> set[str]:
        return {r.inner for r in self.relations if r.kind == "threaded"}

    @property
    def walls(self) -> set[str]:
        return {d.wall for d in self.defects.values() if d.wall is not None}

    def move(self, name: str) -> BraidMove:
        for m in self.moves:
            if m.name == name:
                return m
        raise SchemeError(f"scheme {self.name!r} has no move {name!r}")

    def descriptor(self, text: str) -> PathDescriptor:
        d = parse_descriptor(text, self.model)
        problems = self.descriptor_problems(d)
        if problems:
            raise SchemeError(problems[0])
        return d

    def descriptor_problems(self, d: PathDescriptor) -> list[str]:
        if d.model != self.model:
            return [f"{d} belongs to model {d.model.name!r}, not {self.model.name!r}"]
        unknown = [name for name in d.topo.defects if name != VACUUM and name not in self.defects]
        if unknown:
            return [f"{d} references unknown defect {unknown[0]!r}"]
        problems = []
        ends = [name for name in d.topo.endpoints if name != VACUUM]
        for name in ends:
            if not self.defects[name].condenses(d.excitation):
                problems.append(f"{d.excitation.name} cannot condense at {name}, where {d} ends")
        if d.excitation.dim >= 1 and len(ends) == 2:
            loose = [name for name in ends if name not in self.threaded]
            if loose:
                problems.append(
                    f"{d} stretches a {d.excitation.dim}-dimensional excitation between "
                    f"defects no puncture threads: {', '.join(loose)}"
                )
        for w in d.wall_crossings:
            if w not in self.walls:
                problems.append(f"{d} crosses wall {w!r}, which no twist of the setup terminates")
        return problems


def _build_defect(model: ExcitationModel, spec: DefectSpec) -> Defect:
    if spec.id == VACUUM:
        raise SchemeError(f"{VACUUM!r} is reserved for the outside of the setup")
    if spec.kind == DefectKind.TWIST:
        if spec.wall is None:
            raise SchemeError(f"twist {spec.id} needs a wall")
        if spec.rough_copies is not None:
            raise SchemeError(f"twist {spec.id} cannot have rough copies")
        try:
            condensable = condensable_at_twist(model.wall(spec.wall))
            declared = {c.code for c in condensate_group(model, spec.condensable)}
        except DefectError as e:
            raise SchemeError(f"twist {spec.id}: {e}") from None
        if spec.condensable and declared != {c.code for c in condensable}:
            raise SchemeError(
                f"twist {spec.id}: declared condensable set {spec.condensable} does not "
                f"match wall {spec.wall!r}, which condenses {[c.name for c in condensable]}"
            )
        return Defect(spec.id, spec.kind, spec.dim, tuple(condensable), spec.wall)

    if spec.wall is not None:
        raise SchemeError(f"{spec.kind.value} {spec.id} cannot terminate a wall")
    names = list(spec.condensable)
    try:
        if spec.rough_copies is not None:
            names += boundary_condensate(model, spec.rough_copies)
        condensable = condensate_group(model, names)
    except DefectError as e:
        raise SchemeError(f"{spec.kind.value} {spec.id}: {e}") from None
    return Defect(spec.id, spec.kind, spec.dim, tuple(condensable))


def relation_problems(defects: dict[str, Defect], relations: Sequence[Relation]) -> list[str]:
    problems = []
    graph = nx.DiGraph()
    for r in relations:
        missing = [name for name in (r.outer, r.inner) if name not in defects]
        if missing:
            problems.append(f"{r.kind} relation references unknown defect {missing[0]!r}")
            continue
        if r.outer == r.inner:
            problems.append(f"{r.kind} relation of {r.outer} with itself")
            continue
        if r.kind == "threaded" and defects[r.outer].kind != DefectKind.THREADED_PUNCTURE:
            problems.append(f"{r.outer} threads {r.inner} but is not a threaded puncture")
        graph.add_edge(r.outer, r.inner)
    if not nx.is_directed_acyclic_graph(graph):
        cycle = nx.find_cycle(graph)
        problems.append(
            "relations form a cycle: " + " -> ".join(u for u, _ in cycle) + f" -> {cycle[0][0]}"
        )
    return problems


def pairing_problem(qubits: Sequence[EncodedQubit]) -> Optional[str]:
    """First violation of the canonical X/Z commutation pattern, if any."""
    for i, a in enumerate(qubits):
        if descriptor_commutes(a.x, a.z):
            return f"X{a.name} = {a.x} and Z{a.name} = {a.z} commute"
        for b in qubits[i + 1:]:
            for la, pa in ((f"X{a.name}", a.x), (f"Z{a.name}", a.z)):
                for lb, pb in ((f"X{b.name}", b.x), (f"Z{b.name}", b.z)):
                    if not descriptor_commutes(pa, pb):
                        return f"{la} = {pa} and {lb} = {pb} anticommute"
    return None


def qubit_basis(setup: DefectSetup) -> list[tuple[PathDescriptor, PathDescriptor]]:
    problem = pairing_problem(setup.qubits)
    if problem is not None:
        raise SchemeError(f"scheme {setup.name!r}: {problem}")
    return [(q.x, q.z) for q in setup.qubits]


# ---------------------------------------------------------------------------
# Braid moves
# ---------------------------------------------------------------------------


def _move_descriptor(setup: DefectSetup, move: str, text: str) -> PathDescriptor:
    try:
        return setup.descriptor(text)
    except SchemeError as e:
        raise SchemeError(f"move {move}: {e}") from None


def _build_move(setup: DefectSetup, spec: MoveSpec) -> BraidMove:
    for name in spec.defects:
        if name not in setup.defects:
            raise SchemeError(f"move {spec.name}: unknown defect {name!r}")
    if spec.derived:
        if spec.kind != "monodromy":
            raise SchemeError(f"move {spec.name}: only monodromies can be derived")
        if spec.transform:
            raise SchemeError(f"move {spec.name}: a derived move takes no transform table")

    transform = {}
    for key, entry in spec.transform.items():
        source = _move_descriptor(setup, spec.name, key)
        atoms = tuple(_move_descriptor(setup, spec.name, text) for text in entry.product)
        untouched = not any(source.topo.references(d) for d in spec.defects)
        if untouched and (atoms != (source,) or entry.phase % 4):
            raise SchemeError(
                f"move {spec.name} changes {source}, which references neither "
                f"{spec.defects[0]} nor {spec.defects[1]}"
            )
        if source not in setup.basis:
            logger.warning(f"Move {spec.name} transforms {source}, which is not a logical of the setup")
        transform[source] = (atoms, entry.phase % 4)
    return BraidMove(spec.name, spec.kind, (spec.defects[0], spec.defects[1]), spec.derived, transform)


def derived_atoms(setup: DefectSetup, move: BraidMove, d: PathDescriptor) -> tuple[PathDescriptor, ...]:
    ends = set(d.topo.endpoints)
    moved = set(move.defects)
    if len(ends & moved) != 1:
        return (d,)
    other = (moved - ends).pop()
    if all(braid_phase(d.excitation, c) == 1 for c in setup.defects[other].condensable):
        return (d,)
    return d, PathDescriptor(d.excitation, TopoClass("encloses", (other,)))


def move_image(
    setup: DefectSetup, move: BraidMove, d: PathDescriptor
) -> tuple[tuple[PathDescriptor, ...], int]:
    if move.derived:
        return derived_atoms(setup, move, d), 0
    return move.transform.get(d, ((d,), 0))


def logical_value(setup: DefectSetup, d: PathDescriptor) -> PauliOperator:
    """The encoded Pauli with the same commutation signature as ``d``."""
    x = np.array([not descriptor_commutes(d, q.z) for q in setup.qubits], dtype=np.uint8)
    z = np.array([not descriptor_commutes(d, q.x) for q in setup.qubits], dtype=np.uint8)
    return PauliOperator(x, z)


def _formal_commutes(left: Sequence[PathDescriptor], right: Sequence[PathDescriptor]) -> bool:
    flips = sum(not descriptor_commutes(p, q) for p in left for q in right)
    return flips % 2 == 0


def braid_action(setup: DefectSetup, move: BraidMove) -> CliffordTableau:
    """Logical Clifford induced by ``move`` on the encoded qubits."""
    if setup.k == 0:
        return CliffordTableau.identity(0)
    basis = setup.basis
    images = [move_image(setup, move, d) for d in basis]

    for i, j in combinations(range(len(basis)), 2):
        before = descriptor_commutes(basis[i], basis[j])
        if before != _formal_commutes(images[i][0], images[j][0]):
            raise SchemeError(
                f"move {move.name} does not preserve the commutation of {basis[i]} and {basis[j]}"
            )

    values = []
    for d, (atoms, phase) in zip(basis, images):
        value = PauliOperator.identity(setup.k)
        for atom in atoms:
            value = multiply(value, logical_value(setup, atom))
        value = value.with_phase(value.phase + phase)
        if not value.is_hermitian:
            raise SchemeError(f"move {move.name} maps {d} to the non-Hermitian {value}")
        values.append(value)

    tableau = tableau_from_images(values[0::2], values[1::2])
    if not is_symplectic(tableau):
        raise SchemeError(f"move {move.name} does not induce a Clifford map")
    logger.debug(f"Move {move.name} on {setup.name}: {tableau.as_dict(setup.labels)}")
    return tableau


def generate_braid_group(
    setup: DefectSetup, moves: Optional[Sequence[BraidMove]] = None, bound: int = 10_000
) -> GroupReport:
    moves = setup.moves if moves is None else moves
    tableaux = [braid_action(setup, m) for m in moves]
    if not tableaux:
        identity = CliffordTableau.identity(setup.k)
        return GroupReport(order=1, truncated=False, bound=bound, elements=[identity])
    return generate_group(tableaux, bound=bound)


def move_pair_problems(setup: DefectSetup) -> list[str]:
    """Exchanges whose square differs from the declared monodromy of the same pair."""
    exchanges = {frozenset(m.defects): m for m in setup.moves if m.kind == "exchange"}
    problems = []
    for m in setup.moves:
        e = exchanges.get(frozenset(m.defects))
        if m.kind != "monodromy" or e is None:
            continue
        half = braid_action(setup, e)
        if compose(half, half) != braid_action(setup, m):
            problems.append(f"exchange {e.name} squared differs from monodromy {m.name}")
    return problems


# ---------------------------------------------------------------------------
# Loading and built-in schemes
# ---------------------------------------------------------------------------


def setup_from_spec(spec: SchemeSpec, model: Optional[ExcitationModel] = None) -> DefectSetup:
    if model is None:
        try:
            model = builtin_model(spec.model)
        except DefectError as e:
            raise SchemeError(f"scheme {spec.name!r}: {e}") from None

    defects = {}
    for ds in spec.defects:
        if ds.id in defects:
            raise SchemeError(f"defect {ds.id!r} is declared twice")
        defects[ds.id] = _build_defect(model, ds)
    relations = [Relation(r.kind, r.outer, r.inner) for r in spec.relations]
    problems = relation_problems(defects, relations)
    if problems:
        raise SchemeError("; ".join(problems))

    setup = DefectSetup(spec.name or "scheme", model, defects, relations)
    for qs in spec.qubits:
        if qs.name in setup.labels:
            raise SchemeError(f"qubit {qs.name!r} is declared twice")
        try:
            x, z = setup.descriptor(qs.x), setup.descriptor(qs.z)
        except SchemeError as e:
            raise SchemeError(f"qubit {qs.name}: {e}") from None
        setup.qubits.append(EncodedQubit(qs.name, x, z))
    qubit_basis(setup)

    for ms in spec.moves:
        if any(m.name == ms.name for m in setup.moves):
            raise SchemeError(f"move {ms.name!r} is declared twice")
        setup.moves.append(_build_move(setup, ms))
    problems = move_pair_problems(setup)
    if problems:
        raise SchemeError("; ".join(problems))

    logger.info(
        f"Scheme {setup.name}: {len(defects)} defects, {setup.k} qubits, {len(setup.moves)} moves"
    )
    return setup


def load_scheme(path: str | Path) -> DefectSetup:
    return setup_from_spec(load_spec(path, SchemeSpec))


def general_scheme_spec(
    model: ExcitationModel, wall_name: str, name: Optional[str] = None
) -> SchemeSpec:
    """Two walls ending on concentric twist pairs, with a qubit in their fermion parity.

    X is a witness fermion transported between the outer twists of the two
    walls, Z the partner excitation enclosing the left pair. When the fermion
    is extended the twists are threaded by an extra puncture.
    """
    try:
        wall = model.wall(wall_name)
    except DefectError as e:
        raise SchemeError(str(e)) from None
    report = clifford_eligibility(model, wall)
    if not report.eligible:
        raise SchemeError(
            f"model {model.name!r} with wall {wall_name!r} is not eligible: {report.reason}"
        )

    extended = report.fermion_dimension >= 1
    outer_left, inner_left, outer_right, inner_right = (
        ("OL", "IL", "OR", "IR") if extended else ("TL", "BL", "TR", "BR")
    )
    twists = [outer_left, inner_left, outer_right, inner_right]
    defects = [
        DefectSpec(id=t, kind=DefectKind.TWIST, dim=report.twist_dimension, wall=wall_name)
        for t in twists
    ]
    relations = []
    if extended:
        relations += [
            RelationSpec(kind="concentric", outer=outer_left, inner=inner_left),
            RelationSpec(kind="concentric", outer=outer_right, inner=inner_right),
        ]
        defects.append(
            DefectSpec(
                id="P",
                kind=DefectKind.THREADED_PUNCTURE,
                dim=model.D - 1 - report.twist_dimension,
            )
        )
        relations += [RelationSpec(kind="threaded", outer="P", inner=t) for t in twists]

    x = f"{report.witness_a}:connects({outer_left},{outer_right})"
    z = f"{report.witness_b}:encloses_pair({outer_left},{inner_left})"
    moves = [
        MoveSpec(
            name="swap_left",
            kind="exchange",
            defects=[outer_left, inner_left],
            transform={x: TransformEntry(product=[x, z], phase=1)},
        ),
        MoveSpec(
            name="swap_diagonal",
            kind="exchange",
            defects=[inner_left, outer_right],
            transform={x: TransformEntry(product=[z]), z: TransformEntry(product=[x])},
        ),
        MoveSpec(
            name="loop_left",
            kind="monodromy",
            defects=[outer_left, inner_left],
            transform={x: TransformEntry(product=[x], phase=2)},
        ),
        MoveSpec(name="loop_diagonal", kind="monodromy", defects=[inner_left, outer_right]),
    ]
    return SchemeSpec(
        name=name or f"general({model.name},{wall_name})",
        model=model.name,
        defects=defects,
        relations=relations,
        qubits=[QubitSpec(name="q", x=x, z=z)],
        moves=moves,
    )


def general_scheme(
    model: ExcitationModel, wall_name: str, name: Optional[str] = None
) -> DefectSetup:
    return setup_from_spec(general_scheme_spec(model, wall_name, name), model=model)


_TEMPLATES = {"levin_wen_3d": "fermion", "selfdual_surface(4)": "hadamard"}
_SELFDUAL = re.compile(r"^selfdual_surface(?:\((\d+)\)|_(\d+)d)$")


def builtin_scheme(name: str) -> DefectSetup:
    """Scheme files under data/schemes, or one of the generated constructions.

    ``selfdual_surface(2k)`` and ``levin_wen_3d`` build the general twist
    construction on the matching model; ``general(model,wall)`` does so for
    any built-in model and wall.
    """
    match = _GENERAL.match(name)
    if match:
        model_name, wall_name = match.groups()
        try:
            model = builtin_model(model_name)
        except DefectError as e:
            raise SchemeError(str(e)) from None
        return general_scheme(model, wall_name, name)
    if _SELFDUAL.match(name):
        return general_scheme(builtin_model(name), "hadamard", name)
    if name in _TEMPLATES:
        return general_scheme(builtin_model(name), _TEMPLATES[name], name)
    try:
        path = builtin_path("schemes", name)
    except DefectError:
        raise SchemeError(
            f"unknown scheme {name!r}; available: {builtin_schemes()} or general(model,wall)"
        ) from None
    return load_scheme(path)


def builtin_schemes() -> list[str]:
    return sorted(list_builtins("schemes") + list(_TEMPLATES))


def scheme_report(setup: DefectSetup, bound: int = 10_000) -> SchemeReport:
    moves = []
    for m in setup.moves:
        tableau = braid_action(setup, m)
        moves.append(
            MoveReport(
                name=m.name,
                kind=m.kind,
                defects=list(m.defects),
                tableau=tableau.as_dict(setup.labels),
                symplectic=is_symplectic(tableau),
            )
        )
    group = generate_braid_group(setup, bound=bound)
    return SchemeReport(
        name=setup.name,
        qubits=setup.labels,
        moves=moves,
        group_order=group.order,
        truncated=group.truncated,
        all_clifford=all(is_symplectic(t) for t in group.elements),
    )
