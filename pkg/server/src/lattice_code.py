"""Microscopic 2D surface codes with rough/smooth boundaries and holes.

Qubits live on the edges of a square lattice. Coordinates are doubled so that
vertices are (even, even), plaquettes (odd, odd) and edges mixed. X-type
stabilisers sit on vertices (stars) and Z-type on plaquettes. A rough side or
hole removes vertices and so terminates Z-strings; a smooth one removes
plaquettes and terminates X-strings.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import networkx as nx
import numpy as np

from src.errors import InvalidSpecError, ParseError
from src.models import CodeValidationReport, DistanceResult, HoleSpec, LatticeReport, LatticeSpec
from src.pauli_algebra import (
    PauliOperator,
    commutes,
    gf2_nullspace,
    gf2_rank,
    multiply,
    symplectic_product,
)

logger = logging.getLogger(__name__)

Site = tuple[int, int]
SIDES = ("top", "bottom", "left", "right")
DEFAULT_DISTANCE_BUDGET = 2_000_000


@dataclass(frozen=True)
class Hole:
    boundary: str
    sites: frozenset[Site]

    @classmethod
    def from_spec(cls, spec: HoleSpec) -> "Hole":
        sites = {tuple(s) for s in spec.sites}
        if spec.rect is not None:
            x0, y0, x1, y1 = spec.rect
            parity = 0 if spec.boundary == "rough" else 1
            sites.update(
                (x, y)
                for x in range(min(x0, x1), max(x0, x1) + 1)
                for y in range(min(y0, y1), max(y0, y1) + 1)
                if x % 2 == parity and y % 2 == parity
            )
        return cls(spec.boundary, frozenset(sites))

    def to_spec(self) -> HoleSpec:
        return HoleSpec(boundary=self.boundary, sites=[list(s) for s in sorted(self.sites)])

    def shifted(self, dx: int, dy: int) -> "Hole":
        return Hole(self.boundary, frozenset((x + dx, y + dy) for x, y in self.sites))


class Lattice:
    """Edge/vertex/plaquette layout of a planar or periodic patch without holes."""

    def __init__(self, spec: LatticeSpec):
        self.spec = spec
        self.width = spec.width
        self.height = spec.height
        self.periodic = spec.periodic
        self.sides = {side: getattr(spec, side) for side in SIDES}
        self.X = 2 * self.width
        self.Y = 2 * self.height

        if self.periodic:
            xs, ys = range(self.X), range(self.Y)
        else:
            xs, ys = range(self.X + 1), range(self.Y + 1)
        self.edges: list[Site] = sorted(
            ((x, y) for x in xs for y in ys if (x + y) % 2 == 1 and self._edge_exists((x, y))),
            key=lambda s: (s[1], s[0]),
        )
        self.index = {e: i for i, e in enumerate(self.edges)}
        self.vertices: list[Site] = sorted(
            (
                (x, y)
                for x in xs
                for y in ys
                if x % 2 == 0 and y % 2 == 0 and self._vertex_exists((x, y))
            ),
            key=lambda s: (s[1], s[0]),
        )
        self.plaquettes: list[Site] = sorted(
            ((x, y) for x in xs for y in ys if x % 2 == 1 and y % 2 == 1),
            key=lambda s: (s[1], s[0]),
        )
        self._vertex_set = set(self.vertices)
        self._plaquette_set = set(self.plaquettes)

    @property
    def n(self) -> int:
        return len(self.edges)

    def normalise(self, site: Site) -> Site:
        if self.periodic:
            return (site[0] % self.X, site[1] % self.Y)
        return site

    def _removed_side(self, site: Site) -> Optional[str]:
        """Rough side whose vertex row contains ``site``, if any."""
        x, y = site
        if y == 0 and self.sides["bottom"] == "rough":
            return "bottom"
        if y == self.Y and self.sides["top"] == "rough":
            return "top"
        if x == 0 and self.sides["left"] == "rough":
            return "left"
        if x == self.X and self.sides["right"] == "rough":
            return "right"
        return None

    def _vertex_exists(self, v: Site) -> bool:
        return self.periodic or self._removed_side(v) is None

    def _edge_exists(self, e: Site) -> bool:
        if self.periodic:
            return True
        x, y = e
        if x % 2 == 1:
            # horizontal edge lies along a rough side row
            return not (
                (y == 0 and self.sides["bottom"] == "rough")
                or (y == self.Y and self.sides["top"] == "rough")
            )
        return not (
            (x == 0 and self.sides["left"] == "rough")
            or (x == self.X and self.sides["right"] == "rough")
        )

    def _neighbours(self, site: Site) -> list[Site]:
        x, y = site
        return [self.normalise(s) for s in ((x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1))]

    def star_edges(self, v: Site) -> list[int]:
        return [self.index[e] for e in self._neighbours(v) if e in self.index]

    def plaquette_edges(self, p: Site) -> list[int]:
        return [self.index[e] for e in self._neighbours(p) if e in self.index]

    def edge_endpoints(self, e: Site) -> tuple[Site, Site]:
        x, y = e
        if x % 2 == 1:
            return self.normalise((x - 1, y)), self.normalise((x + 1, y))
        return self.normalise((x, y - 1)), self.normalise((x, y + 1))

    def edge_faces(self, e: Site) -> tuple[Site, Site]:
        x, y = e
        if x % 2 == 1:
            return self.normalise((x, y - 1)), self.normalise((x, y + 1))
        return self.normalise((x - 1, y)), self.normalise((x + 1, y))

    def edge_between(self, a: Site, b: Site) -> Site:
        """Edge shared by two sites of the same kind one lattice step apart."""
        dx, dy = b[0] - a[0], b[1] - a[1]
        if self.periodic:
            dx = (dx + self.X // 2) % self.X - self.X // 2
            dy = (dy + self.Y // 2) % self.Y - self.Y // 2
        if sorted((abs(dx), abs(dy))) != [0, 2]:
            raise InvalidSpecError(f"sites {a} and {b} are not adjacent")
        return self.normalise((a[0] + dx // 2, a[1] + dy // 2))

    def has_vertex(self, v: Site) -> bool:
        return self.normalise(v) in self._vertex_set

    def has_plaquette(self, p: Site) -> bool:
        return self.normalise(p) in self._plaquette_set

    def in_bulk(self, site: Site) -> bool:
        if self.periodic:
            return True
        x, y = site
        return 2 <= x <= self.X - 2 and 2 <= y <= self.Y - 2

    def side_of(self, site: Site) -> Optional[str]:
        """Side owning a position outside the kept layout, for boundary nodes."""
        x, y = site
        removed = self._removed_side(site)
        if removed is not None:
            return removed
        if y < 0:
            return "bottom"
        if y > self.Y:
            return "top"
        if x < 0:
            return "left"
        if x > self.X:
            return "right"
        return None

    def bulk_count(self, boundary: str) -> int:
        """Number of bulk vertices (rough) or plaquettes (smooth)."""
        if boundary == "rough":
            return (self.width - 1) * (self.height - 1)
        return max(self.width - 2, 0) * max(self.height - 2, 0)

    def separation(self, a: Site, b: Site) -> int:
        dx, dy = abs(a[0] - b[0]), abs(a[1] - b[1])
        if self.periodic:
            dx, dy = min(dx, self.X - dx), min(dy, self.Y - dy)
        return max(dx, dy)


@dataclass
class StabiliserCode:
    n: int
    generators: list[PauliOperator]
    logical_pairs: list[tuple[PauliOperator, PauliOperator]] = field(default_factory=list)
    lattice: Optional[Lattice] = field(default=None, repr=False)
    holes: tuple[Hole, ...] = ()

    @property
    def rank(self) -> int:
        return generator_rank(self.generators, self.n)

    @property
    def k(self) -> int:
        return self.n - self.rank

    def to_text(self) -> str:
        lines = [f"# n={self.n} k={self.k}"]
        lines.extend(str(g) for g in self.generators)
        for j, (xl, zl) in enumerate(self.logical_pairs):
            lines.append(f"# X{j} {xl}")
            lines.append(f"# Z{j} {zl}")
        return "\n".join(lines)

    @classmethod
    def from_text(cls, text: str) -> "StabiliserCode":
        generators: list[PauliOperator] = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                op = PauliOperator.from_string(line)
            except ValueError as e:
                raise ParseError(str(e), line=lineno) from None
            if generators and op.n != generators[0].n:
                raise ParseError(
                    f"generator acts on {op.n} qubits, expected {generators[0].n}", line=lineno
                )
            generators.append(op)
        if not generators:
            raise ParseError("no generators found")
        code = cls(generators[0].n, generators)
        try:
            code.logical_pairs = extract_logicals(code)
        except InvalidSpecError as e:
            logger.warning(f"No logical basis for parsed code: {e}")
        return code

    def sketch(self) -> str:
        return sketch(self.lattice, self.holes) if self.lattice is not None else ""


def generator_matrix(generators: Sequence[PauliOperator], n: int) -> np.ndarray:
    if not generators:
        return np.zeros((0, 2 * n), dtype=np.uint8)
    return np.array([g.symplectic() for g in generators], dtype=np.uint8)


def generator_rank(generators: Sequence[PauliOperator], n: int) -> int:
    return gf2_rank(generator_matrix(generators, n))


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


def holes_from_spec(spec: LatticeSpec) -> tuple[Hole, ...]:
    return tuple(Hole.from_spec(h) for h in spec.holes)


def validate_holes(lattice: Lattice, holes: Sequence[Hole]) -> None:
    seen: dict[Site, int] = {}
    for i, hole in enumerate(holes):
        if not hole.sites:
            raise InvalidSpecError(f"hole {i} is empty")
        for site in hole.sites:
            parity_ok = (
                site[0] % 2 == 0 and site[1] % 2 == 0
                if hole.boundary == "rough"
                else site[0] % 2 == 1 and site[1] % 2 == 1
            )
            if not parity_ok:
                kind = "vertex" if hole.boundary == "rough" else "plaquette"
                raise InvalidSpecError(f"hole {i}: site {site} is not a {kind}")
            if not lattice.in_bulk(site):
                raise InvalidSpecError(f"hole {i}: site {site} touches the outer boundary")
            if lattice.normalise(site) in seen:
                raise InvalidSpecError(
                    f"hole {i}: site {site} already belongs to hole {seen[lattice.normalise(site)]}"
                )
            seen[lattice.normalise(site)] = i
        if not lattice.periodic and len(hole.sites) >= lattice.bulk_count(hole.boundary):
            raise InvalidSpecError(f"hole {i} covers the whole bulk")
    for (i, a), (j, b) in itertools.combinations(enumerate(holes), 2):
        for s, t in itertools.product(a.sites, b.sites):
            if lattice.separation(s, t) < 3:
                raise InvalidSpecError(f"holes {i} and {j} are adjacent at {s} and {t}")


def interior_edges(lattice: Lattice, hole: Hole) -> list[int]:
    sites = {lattice.normalise(s) for s in hole.sites}
    out = []
    for e in lattice.edges:
        ends = lattice.edge_endpoints(e) if hole.boundary == "rough" else lattice.edge_faces(e)
        if ends[0] in sites and ends[1] in sites:
            out.append(lattice.index[e])
    return out


def build_generators(lattice: Lattice, holes: Sequence[Hole]) -> list[PauliOperator]:
    """Stars, then plaquettes, then single-qubit terms freezing hole interiors."""
    n = lattice.n
    rough = {lattice.normalise(s) for h in holes if h.boundary == "rough" for s in h.sites}
    smooth = {lattice.normalise(s) for h in holes if h.boundary == "smooth" for s in h.sites}
    generators = []
    for v in lattice.vertices:
        if v not in rough:
            support = lattice.star_edges(v)
            if support:
                generators.append(PauliOperator.on_support(n, support, "X"))
    for p in lattice.plaquettes:
        if p not in smooth:
            generators.append(PauliOperator.on_support(n, lattice.plaquette_edges(p), "Z"))
    for hole in holes:
        letter = "Z" if hole.boundary == "rough" else "X"
        for q in interior_edges(lattice, hole):
            generators.append(PauliOperator.single(n, q, letter))
    return generators


def build_planar_code(spec: LatticeSpec) -> StabiliserCode:
    lattice = Lattice(spec)
    holes = holes_from_spec(spec)
    return build_code(lattice, holes)


def build_code(lattice: Lattice, holes: Sequence[Hole]) -> StabiliserCode:
    holes = tuple(holes)
    validate_holes(lattice, holes)
    code = StabiliserCode(lattice.n, build_generators(lattice, holes), lattice=lattice, holes=holes)
    code.logical_pairs = extract_logicals(code)
    logger.debug(f"Built code n={code.n} k={code.k} holes={len(holes)}")
    return code


def planar_patch(d: int, holes: Sequence[HoleSpec] = ()) -> LatticeSpec:
    """Rough top/bottom, smooth left/right patch of distance ``d``."""
    return LatticeSpec(width=d - 1, height=d, holes=list(holes))


def toric_lattice(width: int, height: int) -> LatticeSpec:
    return LatticeSpec(width=width, height=height, periodic=True)


def hole_punch(code: StabiliserCode, region: Iterable[Sequence[int]], boundary_type: str) -> StabiliserCode:
    if code.lattice is None:
        raise InvalidSpecError("hole_punch needs a lattice-built code")
    hole = Hole(boundary_type, frozenset(tuple(s) for s in region))
    return build_code(code.lattice, code.holes + (hole,))


def remove_hole(code: StabiliserCode, index: int) -> StabiliserCode:
    if code.lattice is None:
        raise InvalidSpecError("remove_hole needs a lattice-built code")
    if not 0 <= index < len(code.holes):
        raise InvalidSpecError(f"no hole {index}")
    holes = code.holes[:index] + code.holes[index + 1:]
    return build_code(code.lattice, holes)


def lattice_spec_of(code: StabiliserCode) -> LatticeSpec:
    return code.lattice.spec.model_copy(update={"holes": [h.to_spec() for h in code.holes]})


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def validate(code: StabiliserCode) -> CodeValidationReport:
    gens = code.generators
    report = CodeValidationReport(valid=True, n=code.n, k=code.n, rank=0)

    def fail(message: str, pair: Optional[list[int]] = None) -> CodeValidationReport:
        report.valid = False
        report.violation = message
        report.pair = pair
        return report

    for i, g in enumerate(gens):
        if g.n != code.n:
            return fail(f"generator {i} acts on {g.n} qubits", [i])
    report.rank = code.rank
    report.k = code.n - report.rank
    for i, g in enumerate(gens):
        if g.weight == 0:
            return fail(f"generator {i} is the identity", [i])
    for i, j in itertools.combinations(range(len(gens)), 2):
        if not commutes(gens[i], gens[j]):
            return fail(f"generators {i} and {j} anticommute", [i, j])
    for i, g in enumerate(gens):
        if g.phase != 0:
            return fail(f"generator {i} has phase {g.phase}: the group contains -I", [i])
    matrix = generator_matrix(gens, code.n)
    for relation in gf2_nullspace(matrix.T):
        members = np.nonzero(relation)[0].tolist()
        prod = PauliOperator.identity(code.n)
        for idx in members:
            prod = multiply(prod, gens[idx])
        if prod.phase != 0:
            return fail("a product of generators equals -I: the group contains -I", members)
    for j, (xl, zl) in enumerate(code.logical_pairs):
        for i, g in enumerate(gens):
            if not commutes(xl, g) or not commutes(zl, g):
                return fail(f"logical pair {j} anticommutes with generator {i}", [j, i])
    for a, (xa, za) in enumerate(code.logical_pairs):
        for b, (xb, zb) in enumerate(code.logical_pairs):
            expected = 1 if a == b else 0
            if symplectic_product(xa, zb) != expected:
                return fail(f"logical X{a} and Z{b} have the wrong commutation", [a, b])
            if a < b and (symplectic_product(xa, xb) or symplectic_product(za, zb)):
                return fail(f"logical pairs {a} and {b} do not commute", [a, b])
    if len(code.logical_pairs) != report.k:
        return fail(f"k = {report.k} but {len(code.logical_pairs)} logical pairs are present")
    return report


# ---------------------------------------------------------------------------
# Logical operators
# ---------------------------------------------------------------------------


def centraliser_basis(generators: Sequence[PauliOperator], n: int) -> list[PauliOperator]:
    """Basis of all Paulis commuting with every generator."""
    matrix = generator_matrix(generators, n)
    # (x, z) commutes with (gx, gz) iff gz.x + gx.z = 0
    swapped = np.concatenate([matrix[:, n:], matrix[:, :n]], axis=1)
    kernel = gf2_nullspace(swapped)
    return [PauliOperator(v[:n], v[n:]) for v in kernel]


def extract_logicals(
    code: StabiliserCode,
    candidates: Optional[Sequence[tuple[PauliOperator, PauliOperator]]] = None,
) -> list[tuple[PauliOperator, PauliOperator]]:
    """Symplectic Gram-Schmidt over hinted candidate pairs then the centraliser.

    Candidates default to the geometric strings and loops of the lattice, so
    hole qubits come out in the string/loop picture. The result is
    deterministic for a given generator order.
    """
    k = code.k
    if k == 0:
        return []
    if candidates is None:
        candidates = geometric_candidates(code) if code.lattice is not None else []

    pool: list[tuple[PauliOperator, bool]] = []
    for xl, zl in candidates:
        if all(commutes(xl, g) and commutes(zl, g) for g in code.generators):
            pool.append((xl, True))
            pool.append((zl, False))
        else:
            logger.debug("Dropping a candidate pair that does not commute with the code")
    pool.extend((op, False) for op in centraliser_basis(code.generators, code.n))

    ops = [op for op, _ in pool]
    hinted = [flag for _, flag in pool]
    pairs: list[tuple[PauliOperator, PauliOperator]] = []
    while ops and len(pairs) < k:
        a = ops.pop(0)
        partner = None
        # a hinted operator prefers the candidate listed right after it
        if hinted.pop(0) and ops and symplectic_product(a, ops[0]):
            partner = 0
        if partner is None:
            partner = next((i for i, c in enumerate(ops) if symplectic_product(a, c)), None)
        if partner is None:
            continue
        b = ops.pop(partner)
        hinted.pop(partner)
        a, b = a.with_phase(0), b.with_phase(0)
        pairs.append((a, b))
        reduced = []
        for c in ops:
            with_b, with_a = symplectic_product(c, b), symplectic_product(c, a)
            if with_b:
                c = multiply(c, a)
            if with_a:
                c = multiply(c, b)
            reduced.append(c.with_phase(0))
        ops = reduced
    if len(pairs) != k:
        raise InvalidSpecError(f"found {len(pairs)} logical pairs but k = {k}: inconsistent code")
    return pairs


def _hole_nodes(lattice: Lattice, holes: Sequence[Hole], boundary: str) -> dict[Site, tuple]:
    return {
        lattice.normalise(s): ("hole", i)
        for i, h in enumerate(holes)
        if h.boundary == boundary
        for s in h.sites
    }


def _node(lattice: Lattice, site: Site, hole_nodes: dict, exists) -> tuple:
    if site in hole_nodes:
        return hole_nodes[site]
    if exists(site):
        return ("site", site)
    return ("side", lattice.side_of(site))


def primal_graph(lattice: Lattice, holes: Sequence[Hole]) -> nx.Graph:
    """Vertices as nodes, qubits as edges; rough holes and sides contracted."""
    hole_nodes = _hole_nodes(lattice, holes, "rough")
    graph = nx.Graph()
    for e in lattice.edges:
        a, b = (_node(lattice, s, hole_nodes, lattice.has_vertex) for s in lattice.edge_endpoints(e))
        if a != b and not graph.has_edge(a, b):
            graph.add_edge(a, b, qubit=lattice.index[e])
    return graph


def dual_graph(lattice: Lattice, holes: Sequence[Hole]) -> nx.Graph:
    """Plaquettes as nodes, qubits as edges; smooth holes and sides contracted."""
    hole_nodes = _hole_nodes(lattice, holes, "smooth")
    graph = nx.Graph()
    for e in lattice.edges:
        a, b = (_node(lattice, s, hole_nodes, lattice.has_plaquette) for s in lattice.edge_faces(e))
        if a != b and not graph.has_edge(a, b):
            graph.add_edge(a, b, qubit=lattice.index[e])
    return graph


def _shortest_string(graph: nx.Graph, source: tuple, targets: Sequence[tuple]) -> Optional[list[int]]:
    if source not in graph:
        return None
    lengths = nx.single_source_shortest_path_length(graph, source)
    reachable = sorted((lengths[t], repr(t), t) for t in targets if t in lengths and t != source)
    if not reachable:
        return None
    target = reachable[0][2]
    path = nx.shortest_path(graph, source, target)
    return [graph.edges[u, v]["qubit"] for u, v in zip(path, path[1:])]


def _side_nodes(lattice: Lattice, boundary: str) -> list[tuple]:
    if lattice.periodic:
        return []
    return [("side", side) for side in SIDES if lattice.sides[side] == boundary]


def hole_loop(lattice: Lattice, hole: Hole) -> PauliOperator:
    """Product of the stabilisers removed by a hole: a loop around it."""
    sites = {lattice.normalise(s) for s in hole.sites}
    support = []
    for e in lattice.edges:
        ends = lattice.edge_endpoints(e) if hole.boundary == "rough" else lattice.edge_faces(e)
        if (ends[0] in sites) != (ends[1] in sites):
            support.append(lattice.index[e])
    return PauliOperator.on_support(lattice.n, support, "X" if hole.boundary == "rough" else "Z")


def geometric_candidates(code: StabiliserCode) -> list[tuple[PauliOperator, PauliOperator]]:
    """String/loop logical pairs for the patch and for each hole.

    Rough hole: X = Z-string to the nearest rough side or rough hole, Z =
    X-loop around the hole. Smooth hole: X = Z-loop, Z = X-string to the
    nearest smooth side or smooth hole. Patch with two rough and two smooth
    sides: X = Z-string across, Z = X-string across.
    """
    lattice, holes, n = code.lattice, code.holes, code.n
    primal = primal_graph(lattice, holes)
    dual = dual_graph(lattice, holes)
    pairs = []

    rough_sides = _side_nodes(lattice, "rough")
    smooth_sides = _side_nodes(lattice, "smooth")
    if len(rough_sides) >= 2 and len(smooth_sides) >= 2:
        z_path = _shortest_string(primal, rough_sides[0], rough_sides[1:])
        x_path = _shortest_string(dual, smooth_sides[0], smooth_sides[1:])
        if z_path and x_path:
            pairs.append(
                (PauliOperator.on_support(n, z_path, "Z"), PauliOperator.on_support(n, x_path, "X"))
            )

    for i, hole in enumerate(holes):
        node = ("hole", i)
        loop = hole_loop(lattice, hole)
        if hole.boundary == "rough":
            others = [("hole", j) for j, h in enumerate(holes) if h.boundary == "rough" and j != i]
            path = _shortest_string(primal, node, rough_sides + others)
            if path:
                pairs.append((PauliOperator.on_support(n, path, "Z"), loop))
        else:
            others = [("hole", j) for j, h in enumerate(holes) if h.boundary == "smooth" and j != i]
            path = _shortest_string(dual, node, smooth_sides + others)
            if path:
                pairs.append((loop, PauliOperator.on_support(n, path, "X")))
    return pairs


def support_graph(code: StabiliserCode, op: PauliOperator, kind: str) -> nx.MultiGraph:
    """Support of ``op`` drawn on the primal (``kind="primal"``) or dual lattice."""
    lattice = code.lattice
    boundary = "rough" if kind == "primal" else "smooth"
    hole_nodes = _hole_nodes(lattice, code.holes, boundary)
    exists = lattice.has_vertex if kind == "primal" else lattice.has_plaquette
    ends_of = lattice.edge_endpoints if kind == "primal" else lattice.edge_faces
    graph = nx.MultiGraph()
    for q in op.support:
        e = lattice.edges[q]
        a, b = (_node(lattice, s, hole_nodes, exists) for s in ends_of(e))
        graph.add_edge(a, b, qubit=q)
    return graph


def is_string_between(graph: nx.MultiGraph, ends: set) -> bool:
    """Connected support whose odd-degree nodes all lie in ``ends``."""
    if graph.number_of_edges() == 0 or not nx.is_connected(graph):
        return False
    odd = {node for node, deg in graph.degree() if deg % 2}
    return odd <= ends and bool(set(graph.nodes) & ends)


def is_closed_loop(graph: nx.MultiGraph) -> bool:
    if graph.number_of_edges() == 0 or not nx.is_connected(graph):
        return False
    return all(deg == 2 for _, deg in graph.degree())


# ---------------------------------------------------------------------------
# Distance
# ---------------------------------------------------------------------------


def _work_units(n: int, weight: int) -> int:
    return math.comb(n, weight) * 3 ** weight


def distance_bruteforce(
    code: StabiliserCode,
    max_weight: int,
    budget: int = DEFAULT_DISTANCE_BUDGET,
    chunk: int = 2048,
) -> DistanceResult:
    """Smallest weight of a Pauli commuting with the code but acting on the logicals.

    The search is stratified by weight; it stops at ``max_weight`` or when
    the next stratum would exceed ``budget`` work units.
    """
    n = code.n
    if code.k == 0 or max_weight <= 0:
        return DistanceResult(found=False, searched_up_to=0)
    logicals = [op for pair in code.logical_pairs for op in pair]

    letters = [PauliOperator.single(1, 0, ch) for ch in "XYZ"]
    syn = np.zeros((n, 3, len(code.generators)), dtype=np.uint8)
    sig = np.zeros((n, 3, len(logicals)), dtype=np.uint8)
    gx = np.array([g.x for g in code.generators], dtype=np.uint8).reshape(-1, n)
    gz = np.array([g.z for g in code.generators], dtype=np.uint8).reshape(-1, n)
    lx = np.array([op.x for op in logicals], dtype=np.uint8).reshape(-1, n)
    lz = np.array([op.z for op in logicals], dtype=np.uint8).reshape(-1, n)
    for t, letter in enumerate(letters):
        xb, zb = int(letter.x[0]), int(letter.z[0])
        syn[:, t, :] = ((xb * gz + zb * gx) % 2).T
        sig[:, t, :] = ((xb * lz + zb * lx) % 2).T
    syn = np.packbits(syn, axis=-1)
    sig = np.packbits(sig, axis=-1)

    spent = 0
    searched = 0
    for weight in range(1, max_weight + 1):
        cost = _work_units(n, weight)
        if spent + cost > budget:
            logger.info(f"Distance search stopped before weight {weight}: budget {budget} exhausted")
            break
        spent += cost
        assignments = np.array(list(itertools.product(range(3), repeat=weight)), dtype=np.intp)
        combos = itertools.combinations(range(n), weight)
        while True:
            block = np.array(list(itertools.islice(combos, chunk)), dtype=np.intp)
            if block.size == 0:
                break
            syndrome = np.zeros((len(block), len(assignments), syn.shape[-1]), dtype=np.uint8)
            signature = np.zeros((len(block), len(assignments), sig.shape[-1]), dtype=np.uint8)
            for i in range(weight):
                q = block[:, i][:, None]
                t = assignments[:, i][None, :]
                syndrome ^= syn[q, t]
                signature ^= sig[q, t]
            hits = np.argwhere(~syndrome.any(axis=-1) & signature.any(axis=-1))
            if hits.size:
                c, a = hits[0]
                x = np.zeros(n, dtype=np.uint8)
                z = np.zeros(n, dtype=np.uint8)
                for qubit, letter in zip(block[c], assignments[a]):
                    x[qubit] = letters[letter].x[0]
                    z[qubit] = letters[letter].z[0]
                witness = PauliOperator(x, z)
                return DistanceResult(
                    found=True, distance=weight, searched_up_to=weight, witness=str(witness)
                )
        searched = weight
    return DistanceResult(found=False, searched_up_to=searched)


# ---------------------------------------------------------------------------
# Text sketch
# ---------------------------------------------------------------------------


def sketch(lattice: Lattice, holes: Sequence[Hole] = ()) -> str:
    """ASCII drawing with the top side first: '+' vertex, '-'/'|' qubits, R/S holes."""
    rough = {lattice.normalise(s) for h in holes if h.boundary == "rough" for s in h.sites}
    smooth = {lattice.normalise(s) for h in holes if h.boundary == "smooth" for s in h.sites}
    xmax = lattice.X - 1 if lattice.periodic else lattice.X
    ymax = lattice.Y - 1 if lattice.periodic else lattice.Y
    rows = []
    for y in range(ymax, -1, -1):
        row = []
        for x in range(xmax + 1):
            site = (x, y)
            if x % 2 == 0 and y % 2 == 0:
                row.append("R" if site in rough else ("+" if lattice.has_vertex(site) else " "))
            elif x % 2 == 1 and y % 2 == 1:
                row.append("S" if site in smooth else " ")
            elif site in lattice.index:
                row.append("-" if x % 2 == 1 else "|")
            else:
                row.append(" ")
        rows.append("".join(row).rstrip())
    return "\n".join(rows)


def lattice_report(
    spec: LatticeSpec,
    max_weight: Optional[int] = None,
    budget: int = DEFAULT_DISTANCE_BUDGET,
) -> LatticeReport:
    code = build_planar_code(spec)
    report = LatticeReport(
        n=code.n,
        k=code.k,
        validation=validate(code),
        logicals=[[str(xl), str(zl)] for xl, zl in code.logical_pairs],
        generators=[str(g) for g in code.generators],
        sketch=code.sketch(),
    )
    if max_weight:
        report.distance = distance_bruteforce(code, max_weight=max_weight, budget=budget)
    return report
