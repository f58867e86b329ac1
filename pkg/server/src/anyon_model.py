"""Abelian Z2^k excitation models, domain walls and the fermion-condensation test."""

import logging
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from src.errors import InvalidSpecError, ModelMismatchError
from src.models import (
    EligibilityReport,
    GeneratorSpec,
    LabelSpec,
    ModelCheckReport,
    ModelSpec,
    WallSpec,
)
from src.pauli_algebra import gf2_rank
from src.utils import builtin_path, list_builtins, load_spec

logger = logging.getLogger(__name__)

VACUUM_NAMES = ("1", "vacuum")
_SELFDUAL = re.compile(r"^selfdual_surface(?:\((\d+)\)|_(\d+)d)$")
_COPY_NAME = re.compile(r"^([em])(\d+)$")


def _log_sign(value: int) -> int:
    return 0 if value == 1 else 1


@dataclass(frozen=True)
class ExcitationModel:
    name: str
    D: int
    names: tuple[str, ...]
    gen_dims: tuple[int, ...]
    theta_gen: tuple[int, ...]
    B: tuple[tuple[int, ...], ...]
    labels: tuple[LabelSpec, ...] = field(default=(), compare=False, repr=False)
    wall_specs: tuple[WallSpec, ...] = field(default=(), compare=False, repr=False)

    @property
    def k(self) -> int:
        return len(self.names)

    @cached_property
    def _log_theta(self) -> np.ndarray:
        return np.array([_log_sign(t) for t in self.theta_gen], dtype=np.int64)

    @cached_property
    def _log_B(self) -> np.ndarray:
        return np.array([[_log_sign(v) for v in row] for row in self.B], dtype=np.int64)

    # -- construction ---------------------------------------------------------

    @classmethod
    def from_spec(cls, spec: ModelSpec) -> "ExcitationModel":
        model = cls.unchecked(spec)
        problems = model.problems()
        if problems:
            raise InvalidSpecError(f"model {spec.name!r}: {problems[0]}")
        for wall in spec.walls:
            model.wall(wall.name)
        return model

    @classmethod
    def unchecked(cls, spec: ModelSpec) -> "ExcitationModel":
        return cls(
            name=spec.name,
            D=spec.D,
            names=tuple(g.name for g in spec.generators),
            gen_dims=tuple(g.dim for g in spec.generators),
            theta_gen=tuple(g.theta for g in spec.generators),
            B=tuple(tuple(row) for row in spec.braiding),
            labels=tuple(spec.labels),
            wall_specs=tuple(spec.walls),
        )

    def to_spec(self) -> ModelSpec:
        return ModelSpec(
            name=self.name,
            D=self.D,
            generators=[
                GeneratorSpec(name=n, dim=d, theta=t)
                for n, d, t in zip(self.names, self.gen_dims, self.theta_gen)
            ],
            braiding=[list(row) for row in self.B],
            labels=list(self.labels),
            walls=list(self.wall_specs),
        )

    def problems(self) -> list[str]:
        """Every violated model invariant, in a fixed order."""
        k = self.k
        found: list[str] = []
        if len(set(self.names)) != k:
            found.append("generator names are not unique")
        if any(n in VACUUM_NAMES for n in self.names):
            found.append("generator names may not shadow the vacuum label")
        if len(self.B) != k or any(len(row) != k for row in self.B):
            return found + [f"braiding matrix must be {k}x{k}"]
        for i in range(k):
            for j in range(k):
                if self.B[i][j] not in (1, -1):
                    found.append(f"B({self.names[i]},{self.names[j]}) must be +1 or -1")
                elif self.B[i][j] != self.B[j][i]:
                    found.append(f"B is not symmetric at ({self.names[i]},{self.names[j]})")
            if self.B[i][i] != 1:
                found.append(f"B({self.names[i]},{self.names[i]}) must be +1")
        for name, dim in zip(self.names, self.gen_dims):
            if not 0 <= dim <= self.D - 2:
                found.append(f"{name} has dimension {dim} outside [0, {self.D - 2}]")
        for i in range(k):
            for j in range(i + 1, k):
                if self.B[i][j] == -1 and self.gen_dims[i] + self.gen_dims[j] != self.D - 2:
                    found.append(
                        f"{self.names[i]} and {self.names[j]} braid nontrivially "
                        f"but their dimensions do not sum to D-2={self.D - 2}"
                    )
        if not found and k <= 8 and not self.statistics_consistent():
            found.append("composite statistics are inconsistent")
        return found

    def statistics_consistent(self) -> bool:
        """Check theta(a+b) = theta(a) theta(b) B(a,b) over all pairs."""
        vectors = _all_vectors(self.k)
        theta = self._theta_table(vectors)
        braid = (vectors @ self._log_B @ vectors.T) % 2
        codes = np.arange(1 << self.k)
        fused = codes[:, None] ^ codes[None, :]
        return bool(np.all(theta[fused] == (theta[:, None] + theta[None, :] + braid) % 2))

    def _theta_table(self, vectors: np.ndarray) -> np.ndarray:
        upper = np.triu(self._log_B, 1)
        cross = np.einsum("ai,ij,aj->a", vectors, upper, vectors)
        return (vectors @ self._log_theta + cross) % 2

    # -- excitations ----------------------------------------------------------

    def vacuum(self) -> "Excitation":
        return Excitation(self, (0,) * self.k)

    def generator(self, name: str) -> "Excitation":
        try:
            i = self.names.index(name)
        except ValueError:
            raise InvalidSpecError(f"model {self.name!r} has no generator {name!r}") from None
        bits = [0] * self.k
        bits[i] = 1
        return Excitation(self, tuple(bits))

    def from_code(self, code: int) -> "Excitation":
        return Excitation(self, tuple((code >> i) & 1 for i in range(self.k)))

    def excitation(self, label: str | Sequence[str]) -> "Excitation":
        """Parse a label such as ``"em"``, ``"e1*m2"`` or ``["e", "m"]``."""
        if not isinstance(label, str):
            result = self.vacuum()
            for part in label:
                result = fuse(result, self.excitation(part))
            return result
        text = re.sub(r"[\s*+·]", "", label)
        if text in VACUUM_NAMES or text == "":
            return self.vacuum()
        ordered = sorted(self.names, key=len, reverse=True)
        result = self.vacuum()
        pos = 0
        while pos < len(text):
            match = next((n for n in ordered if text.startswith(n, pos)), None)
            if match is None:
                raise InvalidSpecError(f"cannot parse excitation {label!r} in model {self.name!r}")
            result = fuse(result, self.generator(match))
            pos += len(match)
        return result

    def all_excitations(self) -> list["Excitation"]:
        return [self.from_code(code) for code in range(1 << self.k)]

    def wall(self, name: str) -> "DomainWall":
        for spec in self.wall_specs:
            if spec.name == name:
                return make_wall(self, spec.name, spec.images, spec.dim)
        raise InvalidSpecError(f"model {self.name!r} has no wall {name!r}")

    @property
    def wall_names(self) -> list[str]:
        return [w.name for w in self.wall_specs]


def _all_vectors(k: int) -> np.ndarray:
    codes = np.arange(1 << k)
    return ((codes[:, None] >> np.arange(k)[None, :]) & 1).astype(np.int64)


@dataclass(frozen=True)
class Excitation:
    model: ExcitationModel = field(compare=False, repr=False)
    bits: tuple[int, ...]

    @property
    def code(self) -> int:
        return sum(b << i for i, b in enumerate(self.bits))

    @property
    def is_vacuum(self) -> bool:
        return not any(self.bits)

    @property
    def name(self) -> str:
        if self.is_vacuum:
            return "1"
        return "".join(n for n, b in zip(self.model.names, self.bits) if b)

    @property
    def dim(self) -> int:
        """Spatial dimension: the largest generator dimension present (0 for the vacuum)."""
        dims = [d for d, b in zip(self.model.gen_dims, self.bits) if b]
        return max(dims) if dims else 0

    def vector(self) -> np.ndarray:
        return np.array(self.bits, dtype=np.int64)

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class DomainWall:
    model: ExcitationModel = field(compare=False, repr=False)
    name: str
    phi: tuple[tuple[int, ...], ...]
    wall_dim: int

    def matrix(self) -> np.ndarray:
        """Row i is the image of generator i."""
        return np.array(self.phi, dtype=np.int64)


def _check_same_model(*items) -> None:
    first = items[0].model
    for item in items[1:]:
        if item.model is not first and item.model != first:
            raise ModelMismatchError(
                f"{item} belongs to model {item.model.name!r}, expected {first.name!r}"
            )


def fuse(a: Excitation, b: Excitation) -> Excitation:
    _check_same_model(a, b)
    return Excitation(a.model, tuple(x ^ y for x, y in zip(a.bits, b.bits)))


def statistics(a: Excitation) -> int:
    vector = a.vector()[None, :]
    return 1 - 2 * int(a.model._theta_table(vector)[0])


def braid_phase(a: Excitation, b: Excitation) -> int:
    _check_same_model(a, b)
    return 1 - 2 * int(a.vector() @ a.model._log_B @ b.vector() % 2)


def wall_apply(w: DomainWall, a: Excitation) -> Excitation:
    _check_same_model(w, a)
    image = (a.vector() @ w.matrix()) % 2
    return Excitation(a.model, tuple(int(v) for v in image))


def is_generalised_fermion(a: Excitation) -> bool:
    return statistics(a) == -1


def condensable_at_twist(w: DomainWall) -> list[Excitation]:
    """Composites ``g ⊕ phi(g)`` that condense at a twist terminating ``w``."""
    found = {}
    for g in w.model.all_excitations():
        c = fuse(g, wall_apply(w, g))
        found.setdefault(c.code, c)
    return [found[code] for code in sorted(found)]


def wall_problems(w: DomainWall) -> list[str]:
    model = w.model
    found = []
    if gf2_rank(w.matrix()) != model.k:
        found.append(f"wall {w.name!r} is not invertible")
        return found
    if not 1 <= w.wall_dim <= model.D - 1:
        found.append(f"wall {w.name!r} has dimension {w.wall_dim} outside [1, {model.D - 1}]")
    gens = [model.from_code(1 << i) for i in range(model.k)]
    for g in gens:
        image = wall_apply(w, g)
        if statistics(image) != statistics(g):
            found.append(f"wall {w.name!r} changes the statistics of {g.name}")
        if image.dim != g.dim:
            found.append(f"wall {w.name!r} maps {g.name} (dim {g.dim}) to {image.name} (dim {image.dim})")
    for g in gens:
        for h in gens:
            if braid_phase(wall_apply(w, g), wall_apply(w, h)) != braid_phase(g, h):
                found.append(f"wall {w.name!r} changes the braiding of {g.name} and {h.name}")
    return found


def make_wall(
    model: ExcitationModel,
    name: str,
    images: dict[str, Sequence[str]],
    dim: int | None = None,
) -> DomainWall:
    """Build and validate a wall from generator images (each a list of generator names)."""
    unknown = set(images) - set(model.names)
    if unknown:
        raise InvalidSpecError(f"wall {name!r} maps unknown generators {sorted(unknown)}")
    rows = []
    for gen in model.names:
        target = images.get(gen, [gen])
        rows.append(model.excitation(list(target)).bits)
    wall = DomainWall(model, name, tuple(rows), model.D - 1 if dim is None else dim)
    problems = wall_problems(wall)
    if problems:
        raise InvalidSpecError(problems[0])
    return wall


def permutation_wall(model: ExcitationModel, name: str, mapping: dict[str, str]) -> DomainWall:
    return make_wall(model, name, {k: [v] for k, v in mapping.items()})


def clifford_eligibility(model: ExcitationModel, w: DomainWall) -> EligibilityReport:
    """Look for a condensable fermion a and partner b with phi(b) = a ⊕ b."""
    _check_same_model(model.vacuum(), w)
    condensable = condensable_at_twist(w)
    report = EligibilityReport(
        model=model.name,
        wall=w.name,
        eligible=False,
        condensable=[c.name for c in condensable],
    )
    fermions = [a for a in condensable if is_generalised_fermion(a)]
    if len(condensable) == 1:
        report.reason = "only the vacuum condenses at the twist"
        return report
    if not fermions:
        report.reason = "no generalised fermion condenses at the twist"
        return report

    first_failure = None
    for a in fermions:
        for b in model.all_excitations():
            if b.is_vacuum or wall_apply(w, b) != fuse(a, b):
                continue
            braid_ok = braid_phase(b, fuse(a, b)) == -1
            dims_ok = a.dim + b.dim == model.D - 2
            if braid_ok and dims_ok:
                report.eligible = True
                report.reason = "condensable generalised fermion found"
                report.witness_a = a.name
                report.witness_b = b.name
                report.fermion_dimension = a.dim
                report.twist_dimension = 2 * a.dim
                report.braid_check = True
                logger.debug(f"Eligible: model={model.name} wall={w.name} a={a.name} b={b.name}")
                return report
            if first_failure is None:
                first_failure = (a, b, braid_ok, dims_ok)

    if first_failure is None:
        report.reason = "no excitation b with phi(b) = a*b for a condensable fermion a"
    else:
        a, b, braid_ok, dims_ok = first_failure
        report.witness_a, report.witness_b = a.name, b.name
        report.braid_check = braid_ok
        report.reason = (
            f"b={b.name} does not braid with a*b"
            if not braid_ok
            else f"dim({a.name}) + dim({b.name}) != D-2"
        )
    return report


def embed(model: ExcitationModel, extra: str = "t") -> ExcitationModel:
    """Append a trivial boson factor; walls act on it as the identity."""
    if extra in model.names:
        raise InvalidSpecError(f"model {model.name!r} already has a generator {extra!r}")
    B = [list(row) + [1] for row in model.B] + [[1] * (model.k + 1)]
    walls = tuple(
        WallSpec(name=w.name, dim=w.dim, images={**w.images, extra: [extra]})
        for w in model.wall_specs
    )
    return ExcitationModel(
        name=f"{model.name}+{extra}",
        D=model.D,
        names=model.names + (extra,),
        gen_dims=model.gen_dims + (0,),
        theta_gen=model.theta_gen + (1,),
        B=tuple(tuple(row) for row in B),
        labels=model.labels,
        wall_specs=walls,
    )


def boundary_condensate(model: ExcitationModel, rough_copies: Iterable[int]) -> list[str]:
    """Labels condensing at a boundary that is rough for the given copies.

    ``e_i`` condenses where copy i is rough, ``m_i`` where it is smooth, and a
    label spanning copies i and j condenses when either of them is rough.
    """
    rough = set(rough_copies)
    out = []
    for name in model.names:
        match = _COPY_NAME.match(name)
        if match is None:
            raise InvalidSpecError(f"generator {name!r} is not of the form e<i>/m<i>")
        charge, copy = match.group(1), int(match.group(2))
        if (charge == "e") == (copy in rough):
            out.append(name)
    for label in model.labels:
        if rough.intersection(label.copies):
            out.append(label.name)
    return out


def condensate_group(model: ExcitationModel, names: Iterable[str]) -> list[Excitation]:
    """Subgroup generated by the eigenstate labels in ``names``."""
    extra = {label.name for label in model.labels}
    elements = {0: model.vacuum()}
    for name in names:
        if name in extra:
            continue
        g = model.excitation(name)
        for e in list(elements.values()):
            f = fuse(e, g)
            elements.setdefault(f.code, f)
    return [elements[c] for c in sorted(elements)]


# ---------------------------------------------------------------------------
# Built-in model library
# ---------------------------------------------------------------------------


def load_model(path: str | Path) -> ExcitationModel:
    return ExcitationModel.from_spec(load_spec(path, ModelSpec))


def selfdual_model(D: int) -> ExcitationModel:
    """Self-dual surface code in D = 2k dimensions: e and m both of dimension k-1."""
    if D < 2 or D % 2:
        raise InvalidSpecError(f"self-dual surface codes need even D >= 2, got {D}")
    spec = load_spec(builtin_path("models", "selfdual_surface_4d"), ModelSpec)
    k = D // 2
    spec = spec.model_copy(
        update={
            "name": f"selfdual_surface_{D}d",
            "D": D,
            "generators": [g.model_copy(update={"dim": k - 1}) for g in spec.generators],
            "walls": [w.model_copy(update={"dim": D - 1}) for w in spec.walls],
        }
    )
    return ExcitationModel.from_spec(spec)


def builtin_model(name: str) -> ExcitationModel:
    match = _SELFDUAL.match(name)
    if match:
        return selfdual_model(int(match.group(1) or match.group(2)))
    return load_model(builtin_path("models", name))


def builtin_models() -> list[str]:
    return list_builtins("models")


def model_check(spec: ModelSpec, wall: Optional[str] = None) -> ModelCheckReport:
    """Validate a model document and run the Clifford test on one of its walls.

    Without ``wall`` the first declared wall is used; a model with no walls is
    only validated.
    """
    model = ExcitationModel.unchecked(spec)
    report = ModelCheckReport(model=spec.name, D=spec.D, valid=False, problems=model.problems())
    if report.problems:
        return report
    names = model.wall_names
    wall = wall or (names[0] if names else None)
    if wall is None:
        report.valid = True
        return report
    if wall not in names:
        report.problems = [f"no wall {wall!r} in model {spec.name!r}; available: {names}"]
        return report
    try:
        domain_wall = model.wall(wall)
    except InvalidSpecError as e:
        report.problems = [f"wall {wall!r}: {e}"]
        return report
    report.valid = True
    report.eligibility = clifford_eligibility(model, domain_wall)
    return report
