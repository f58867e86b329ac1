"""Pauli and Clifford arithmetic in binary-symplectic form.

A PauliOperator on n qubits is stored as two uint8 bit vectors and a phase
exponent: the operator is ``i**phase`` times the tensor product of letters,
with the letter for x=z=1 being Y (so Y = iXZ and XZ = -iY).
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from src.errors import DefectError, SizeMismatchError

logger = logging.getLogger(__name__)

_PREFIXES = {0: "+", 1: "i", 2: "-", 3: "-i"}
_PARSE_PREFIXES = (("-i", 3), ("+i", 1), ("i", 1), ("-", 2), ("+", 0))
_LETTERS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}


# ---------------------------------------------------------------------------
# GF(2) helpers
# ---------------------------------------------------------------------------


def _as_bits(a) -> np.ndarray:
    return (np.asarray(a) & 1).astype(np.uint8)


def gf2_rref(matrix) -> tuple[np.ndarray, list[int]]:
    """Row-reduce a bit matrix. Returns the reduced matrix and pivot columns."""
    A = _as_bits(matrix).copy()
    if A.ndim != 2:
        raise ValueError("gf2_rref expects a 2D array")
    m, n = A.shape
    pivots: list[int] = []
    r = 0
    for c in range(n):
        if r >= m:
            break
        rows = np.nonzero(A[r:, c])[0]
        if rows.size == 0:
            continue
        p = r + int(rows[0])
        if p != r:
            A[[r, p], :] = A[[p, r], :]
        ones = np.nonzero(A[:, c])[0]
        ones = ones[ones != r]
        if ones.size:
            A[ones, :] ^= A[r, :]
        pivots.append(c)
        r += 1
    return A, pivots


def gf2_rank(matrix) -> int:
    A = _as_bits(matrix)
    if A.size == 0:
        return 0
    return len(gf2_rref(A)[1])


def gf2_solve(rows, target) -> np.ndarray | None:
    """Find coefficients c with ``c @ rows == target`` (mod 2), or None."""
    A = _as_bits(rows)
    b = _as_bits(target).reshape(-1)
    m = A.shape[0]
    if m == 0:
        return np.zeros(0, dtype=np.uint8) if not b.any() else None
    aug = np.concatenate([A.T, b[:, None]], axis=1)
    reduced, pivots = gf2_rref(aug)
    if m in pivots:
        return None
    coeffs = np.zeros(m, dtype=np.uint8)
    for r, c in enumerate(pivots):
        coeffs[c] = reduced[r, m]
    return coeffs


def gf2_nullspace(matrix) -> np.ndarray:
    """Basis (as rows) of the right kernel ``{v : matrix @ v == 0}``."""
    A = _as_bits(matrix)
    n = A.shape[1]
    if A.shape[0] == 0:
        return np.eye(n, dtype=np.uint8)
    reduced, pivots = gf2_rref(A)
    free = [c for c in range(n) if c not in set(pivots)]
    basis = np.zeros((len(free), n), dtype=np.uint8)
    for t, f in enumerate(free):
        basis[t, f] = 1
        for r, p in enumerate(pivots):
            basis[t, p] = reduced[r, f]
    return basis


# ---------------------------------------------------------------------------
# Pauli operators
# ---------------------------------------------------------------------------


class PauliOperator:
    """Immutable n-qubit Pauli operator ``i**phase * P_1 ⊗ ... ⊗ P_n``."""

    __slots__ = ("x", "z", "phase")

    def __init__(self, x, z, phase: int = 0):
        x = _as_bits(x).reshape(-1)
        z = _as_bits(z).reshape(-1)
        if x.shape != z.shape:
            raise SizeMismatchError(
                f"x and z bit vectors differ in length ({x.size} vs {z.size})"
            )
        x.flags.writeable = False
        z.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "phase", int(phase) % 4)

    def __setattr__(self, name, value):
        raise AttributeError("PauliOperator is immutable")

    @property
    def n(self) -> int:
        return int(self.x.size)

    @classmethod
    def identity(cls, n: int) -> "PauliOperator":
        return cls(np.zeros(n, dtype=np.uint8), np.zeros(n, dtype=np.uint8))

    @classmethod
    def single(cls, n: int, qubit: int, letter: str) -> "PauliOperator":
        xb, zb = _LETTERS[letter.upper()]
        x = np.zeros(n, dtype=np.uint8)
        z = np.zeros(n, dtype=np.uint8)
        x[qubit], z[qubit] = xb, zb
        return cls(x, z)

    @classmethod
    def on_support(cls, n: int, support: Iterable[int], letter: str) -> "PauliOperator":
        """The same letter on every qubit of ``support``."""
        xb, zb = _LETTERS[letter.upper()]
        x = np.zeros(n, dtype=np.uint8)
        z = np.zeros(n, dtype=np.uint8)
        idx = list(support)
        x[idx] = xb
        z[idx] = zb
        return cls(x, z)

    @classmethod
    def from_string(cls, text: str) -> "PauliOperator":
        text = text.strip()
        phase = 0
        for prefix, value in _PARSE_PREFIXES:
            if text.startswith(prefix):
                phase = value
                text = text[len(prefix):]
                break
        text = text.upper()
        try:
            bits = [_LETTERS[ch] for ch in text]
        except KeyError as e:
            raise ValueError(f"invalid Pauli letter {e.args[0]!r}") from None
        if not bits:
            raise ValueError("empty Pauli string")
        x, z = zip(*bits)
        return cls(np.array(x), np.array(z), phase)

    def __str__(self) -> str:
        letters = "".join(
            "IXZY"[int(xb) | (int(zb) << 1)] for xb, zb in zip(self.x, self.z)
        )
        return _PREFIXES[self.phase] + letters

    def __repr__(self) -> str:
        return f"PauliOperator({str(self)!r})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliOperator):
            return NotImplemented
        return (
            self.phase == other.phase
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
        )

    def __hash__(self) -> int:
        return hash((self.phase, self.x.tobytes(), self.z.tobytes()))

    def __mul__(self, other: "PauliOperator") -> "PauliOperator":
        return multiply(self, other)

    @property
    def weight(self) -> int:
        return int(np.count_nonzero(self.x | self.z))

    @property
    def support(self) -> list[int]:
        return np.nonzero(self.x | self.z)[0].tolist()

    @property
    def is_hermitian(self) -> bool:
        return self.phase % 2 == 0

    def is_identity(self) -> bool:
        return self.phase == 0 and not self.x.any() and not self.z.any()

    def same_bits(self, other: "PauliOperator") -> bool:
        return np.array_equal(self.x, other.x) and np.array_equal(self.z, other.z)

    def with_phase(self, phase: int) -> "PauliOperator":
        return PauliOperator(self.x, self.z, phase)

    def inverse(self) -> "PauliOperator":
        return PauliOperator(self.x, self.z, -self.phase)

    def symplectic(self) -> np.ndarray:
        return np.concatenate([self.x, self.z])

    def tensor(self, other: "PauliOperator") -> "PauliOperator":
        return PauliOperator(
            np.concatenate([self.x, other.x]),
            np.concatenate([self.z, other.z]),
            self.phase + other.phase,
        )


def _check_sizes(p: PauliOperator, q: PauliOperator) -> None:
    if p.n != q.n:
        raise SizeMismatchError(f"operators act on {p.n} and {q.n} qubits")


def _product_phase(x1, z1, x2, z2) -> int:
    # exponent of i picked up per qubit when multiplying letter forms
    x1 = x1.astype(np.int64)
    z1 = z1.astype(np.int64)
    x2 = x2.astype(np.int64)
    z2 = z2.astype(np.int64)
    g = np.where(
        (x1 == 1) & (z1 == 1),
        z2 - x2,
        np.where(x1 == 1, z2 * (2 * x2 - 1), np.where(z1 == 1, x2 * (1 - 2 * z2), 0)),
    )
    return int(g.sum())


def multiply(p: PauliOperator, q: PauliOperator) -> PauliOperator:
    _check_sizes(p, q)
    phase = p.phase + q.phase + _product_phase(p.x, p.z, q.x, q.z)
    return PauliOperator(p.x ^ q.x, p.z ^ q.z, phase)


def symplectic_product(p: PauliOperator, q: PauliOperator) -> int:
    _check_sizes(p, q)
    return int((np.count_nonzero(p.x & q.z) + np.count_nonzero(p.z & q.x)) % 2)


def commutes(p: PauliOperator, q: PauliOperator) -> bool:
    return symplectic_product(p, q) == 0


def product(ops: Sequence[PauliOperator], n: int | None = None) -> PauliOperator:
    """Ordered product of a list of operators."""
    if not ops:
        if n is None:
            raise ValueError("empty product needs an explicit qubit count")
        return PauliOperator.identity(n)
    result = ops[0]
    for op in ops[1:]:
        result = multiply(result, op)
    return result


def random_pauli(n: int, rng: np.random.Generator) -> PauliOperator:
    return PauliOperator(
        rng.integers(0, 2, n), rng.integers(0, 2, n), int(rng.integers(0, 4))
    )


# ---------------------------------------------------------------------------
# Clifford tableaux
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CliffordTableau:
    """Images of each X_i and Z_i under conjugation by a Clifford unitary."""

    n: int
    x_images: tuple[PauliOperator, ...]
    z_images: tuple[PauliOperator, ...]

    def __post_init__(self):
        object.__setattr__(self, "x_images", tuple(self.x_images))
        object.__setattr__(self, "z_images", tuple(self.z_images))
        if len(self.x_images) != self.n or len(self.z_images) != self.n:
            raise SizeMismatchError("tableau needs exactly n X images and n Z images")
        for image in self.x_images + self.z_images:
            if image.n != self.n:
                raise SizeMismatchError(
                    f"image {image} does not act on {self.n} qubits"
                )

    # -- constructors -------------------------------------------------------

    @classmethod
    def identity(cls, n: int) -> "CliffordTableau":
        return cls(
            n,
            [PauliOperator.single(n, i, "X") for i in range(n)],
            [PauliOperator.single(n, i, "Z") for i in range(n)],
        )

    @classmethod
    def from_map(cls, n: int, images: dict[str, str]) -> "CliffordTableau":
        """Identity tableau with some images replaced, keyed like ``"X0"``."""
        xs = [PauliOperator.single(n, i, "X") for i in range(n)]
        zs = [PauliOperator.single(n, i, "Z") for i in range(n)]
        for key, value in images.items():
            target = xs if key[0].upper() == "X" else zs
            target[int(key[1:])] = PauliOperator.from_string(value)
        return cls(n, xs, zs)

    @classmethod
    def hadamard(cls, n: int, q: int) -> "CliffordTableau":
        t = cls.identity(n)
        xs, zs = list(t.x_images), list(t.z_images)
        xs[q] = PauliOperator.single(n, q, "Z")
        zs[q] = PauliOperator.single(n, q, "X")
        return cls(n, xs, zs)

    @classmethod
    def phase(cls, n: int, q: int) -> "CliffordTableau":
        t = cls.identity(n)
        xs = list(t.x_images)
        xs[q] = PauliOperator.single(n, q, "Y")
        return cls(n, xs, t.z_images)

    @classmethod
    def cnot(cls, n: int, control: int, target: int) -> "CliffordTableau":
        if control == target:
            raise ValueError("CNOT needs distinct control and target")
        t = cls.identity(n)
        xs, zs = list(t.x_images), list(t.z_images)
        xs[control] = multiply(xs[control], PauliOperator.single(n, target, "X"))
        zs[target] = multiply(PauliOperator.single(n, control, "Z"), zs[target])
        return cls(n, xs, zs)

    @classmethod
    def cz(cls, n: int, a: int, b: int) -> "CliffordTableau":
        if a == b:
            raise ValueError("CZ needs two distinct qubits")
        t = cls.identity(n)
        xs = list(t.x_images)
        xs[a] = multiply(xs[a], PauliOperator.single(n, b, "Z"))
        xs[b] = multiply(PauliOperator.single(n, a, "Z"), xs[b])
        return cls(n, xs, t.z_images)

    @classmethod
    def swap(cls, n: int, a: int, b: int) -> "CliffordTableau":
        t = cls.identity(n)
        xs, zs = list(t.x_images), list(t.z_images)
        xs[a], xs[b] = xs[b], xs[a]
        zs[a], zs[b] = zs[b], zs[a]
        return cls(n, xs, zs)

    @classmethod
    def pauli(cls, p: PauliOperator) -> "CliffordTableau":
        """Conjugation by the Pauli ``p``: flips the sign of anticommuting images."""
        n = p.n
        t = cls.identity(n)
        xs = [img.with_phase(2 * symplectic_product(img, p)) for img in t.x_images]
        zs = [img.with_phase(2 * symplectic_product(img, p)) for img in t.z_images]
        return cls(n, xs, zs)

    # -- inspection ---------------------------------------------------------

    def images(self) -> tuple[PauliOperator, ...]:
        return self.x_images + self.z_images

    def key(self, ignore_signs: bool = False) -> bytes:
        parts = []
        for image in self.images():
            parts.append(image.x.tobytes())
            parts.append(image.z.tobytes())
            if not ignore_signs:
                parts.append(bytes([image.phase]))
        return b"".join(parts)

    def to_table(self, labels: Sequence[str] | None = None) -> str:
        labels = list(labels) if labels is not None else [str(i) for i in range(self.n)]
        rows = []
        for i, label in enumerate(labels):
            rows.append(f"X{label} -> {self.x_images[i]}")
            rows.append(f"Z{label} -> {self.z_images[i]}")
        return "\n".join(rows)

    def as_dict(self, labels: Sequence[str] | None = None) -> dict[str, str]:
        labels = list(labels) if labels is not None else [str(i) for i in range(self.n)]
        out = {}
        for i, label in enumerate(labels):
            out[f"X{label}"] = str(self.x_images[i])
            out[f"Z{label}"] = str(self.z_images[i])
        return out

    def __str__(self) -> str:
        return self.to_table()


def _check_tableaux(t1: CliffordTableau, t2: CliffordTableau) -> None:
    if t1.n != t2.n:
        raise SizeMismatchError(f"tableaux act on {t1.n} and {t2.n} qubits")


def conjugate(t: CliffordTableau, p: PauliOperator) -> PauliOperator:
    """Return ``U p U^dagger`` for the Clifford ``U`` described by ``t``."""
    if t.n != p.n:
        raise SizeMismatchError(f"tableau acts on {t.n} qubits, operator on {p.n}")
    # p = i^(phase + sum x_j z_j) * prod_j X_j^x_j Z_j^z_j
    phase = p.phase + int(np.count_nonzero(p.x & p.z))
    result = PauliOperator.identity(t.n).with_phase(phase)
    for j in np.nonzero(p.x | p.z)[0]:
        if p.x[j]:
            result = multiply(result, t.x_images[j])
        if p.z[j]:
            result = multiply(result, t.z_images[j])
    return result


def compose(t1: CliffordTableau, t2: CliffordTableau) -> CliffordTableau:
    """Tableau of ``t2 ∘ t1``: t1 is applied first."""
    _check_tableaux(t1, t2)
    return CliffordTableau(
        t1.n,
        [conjugate(t2, img) for img in t1.x_images],
        [conjugate(t2, img) for img in t1.z_images],
    )


def compose_all(tableaux: Sequence[CliffordTableau], n: int) -> CliffordTableau:
    result = CliffordTableau.identity(n)
    for t in tableaux:
        result = compose(result, t)
    return result


def inverse(t: CliffordTableau) -> CliffordTableau:
    """Inverse by repeated composition; Clifford tableaux have finite order."""
    power = t
    previous = CliffordTableau.identity(t.n)
    for _ in range(10_000):
        if is_identity(power):
            return previous
        previous = power
        power = compose(power, t)
    raise DefectError("tableau order exceeds the inverse search limit")


def equals_up_to_phase(t1: CliffordTableau, t2: CliffordTableau) -> bool:
    _check_tableaux(t1, t2)
    return all(a.same_bits(b) for a, b in zip(t1.images(), t2.images()))


def is_identity(t: CliffordTableau) -> bool:
    return all(a == b for a, b in zip(t.images(), CliffordTableau.identity(t.n).images()))


def is_symplectic(t: CliffordTableau) -> bool:
    """Images are Hermitian, independent and obey the canonical commutation pattern."""
    n = t.n
    images = t.images()
    if not all(img.is_hermitian for img in images):
        return False
    for i in range(n):
        for j in range(n):
            expected = 1 if i == j else 0
            if symplectic_product(t.x_images[i], t.z_images[j]) != expected:
                return False
            if i < j and symplectic_product(t.x_images[i], t.x_images[j]):
                return False
            if i < j and symplectic_product(t.z_images[i], t.z_images[j]):
                return False
    matrix = np.array([img.symplectic() for img in images], dtype=np.uint8)
    return gf2_rank(matrix) == 2 * n


# ---------------------------------------------------------------------------
# Group enumeration
# ---------------------------------------------------------------------------


@dataclass
class GroupReport:
    order: int
    truncated: bool
    bound: int
    elements: list[CliffordTableau] = field(default_factory=list, repr=False)
    ignore_signs: bool = False

    def contains(self, t: CliffordTableau) -> bool:
        key = t.key(self.ignore_signs)
        return any(e.key(self.ignore_signs) == key for e in self.elements)


def generate_group(
    generators: Sequence[CliffordTableau],
    bound: int = 10_000,
    ignore_signs: bool = False,
) -> GroupReport:
    """Breadth-first closure of ``generators`` under composition.

    Elements are keyed by their images including signs, which identifies
    Clifford unitaries modulo global phase. With ``ignore_signs`` the key drops
    image signs too, enumerating the group modulo Paulis.
    """
    if not generators:
        raise ValueError("generate_group needs at least one generator")
    n = generators[0].n
    for g in generators:
        if g.n != n:
            raise SizeMismatchError("generators act on different qubit counts")

    start = CliffordTableau.identity(n)
    seen = {start.key(ignore_signs): start}
    queue = deque([start])
    truncated = False
    while queue:
        current = queue.popleft()
        for g in generators:
            nxt = compose(current, g)
            k = nxt.key(ignore_signs)
            if k in seen:
                continue
            if len(seen) >= bound:
                truncated = True
                queue.clear()
                break
            seen[k] = nxt
            queue.append(nxt)

    logger.debug(f"Group closure: {len(seen)} elements (truncated={truncated})")
    return GroupReport(
        order=len(seen),
        truncated=truncated,
        bound=bound,
        elements=list(seen.values()),
        ignore_signs=ignore_signs,
    )


# ---------------------------------------------------------------------------
# Logical decomposition
# ---------------------------------------------------------------------------


def express_in_basis(
    p: PauliOperator,
    stabilisers: Sequence[PauliOperator],
    logical_pairs: Sequence[tuple[PauliOperator, PauliOperator]],
) -> PauliOperator:
    """Write ``p`` as a k-qubit logical Pauli modulo the stabiliser group.

    The returned operator's phase is exact on the +1 eigenspace of the
    stabilisers (letters use Y = iXZ at the logical level as well).
    """
    k = len(logical_pairs)
    a = np.array([symplectic_product(p, zl) for _, zl in logical_pairs], dtype=np.uint8)
    b = np.array([symplectic_product(p, xl) for xl, _ in logical_pairs], dtype=np.uint8)

    logical = PauliOperator.identity(p.n)
    for j, (xl, zl) in enumerate(logical_pairs):
        if a[j]:
            logical = multiply(logical, xl)
        if b[j]:
            logical = multiply(logical, zl)

    residual = multiply(logical.inverse(), p)
    if stabilisers:
        rows = np.array([s.symplectic() for s in stabilisers], dtype=np.uint8)
        coeffs = gf2_solve(rows, residual.symplectic())
    else:
        coeffs = np.zeros(0, dtype=np.uint8) if residual.weight == 0 else None
    if coeffs is None:
        raise DefectError(f"{p} is not a logical operator of the given code")
    group_element = PauliOperator.identity(p.n)
    for idx in np.nonzero(coeffs)[0]:
        group_element = multiply(group_element, stabilisers[idx])
    c = residual.phase - group_element.phase
    return PauliOperator(a, b, c - int(np.count_nonzero(a & b)))


def tableau_from_images(
    x_images: Sequence[PauliOperator], z_images: Sequence[PauliOperator]
) -> CliffordTableau:
    k = len(x_images)
    return CliffordTableau(k, list(x_images), list(z_images))
