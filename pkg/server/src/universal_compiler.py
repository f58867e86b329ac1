"""Logical-level compiler and branch verifier for the five-defect universal scheme.

The register holds N data qubits ``1..N`` and two ancillas ``a`` and ``b``.
Data qubits ``2k-1`` and ``2k`` share defect pair ``k``; qubit ``N`` lives on
the threaded defect. Programs are flat instruction lists in which gadgets are
delimited by ``begin``/``end`` markers so the dataflow can be audited.
"""

import hashlib
import logging
from dataclasses import dataclass, field
from itertools import islice, product
from typing import Optional, Sequence

import numpy as np

from src.errors import CapExceededError, ParseError, ProgramError
from src.models import BranchReport, BranchResult, CompileReport, ResourceCounts

logger = logging.getLogger(__name__)

ANCILLAS = ("a", "b")
PREPS = ("prep_z", "prep_x")
MEASUREMENTS = ("meas_x", "meas_z")
PAULIS = ("x", "z")
GLOBALS = ("global_cz12", "global_ccz")
GADGETS = ("H", "I")
DEFAULT_CAP = 12
BRANCH_LISTING = 64
TOLERANCE = 1e-7


@dataclass(frozen=True)
class LogicalRegister:
    n: int

    def __post_init__(self):
        if self.n < 3 or self.n % 2 == 0:
            raise ProgramError(f"N must be odd and at least 3, got {self.n}")

    @property
    def data(self) -> list[str]:
        return [str(q) for q in range(1, self.n + 1)]

    @property
    def labels(self) -> list[str]:
        return self.data + list(ANCILLAS)

    @property
    def size(self) -> int:
        return self.n + 2

    @property
    def pairs(self) -> int:
        return (self.n - 1) // 2

    @property
    def threaded(self) -> str:
        return str(self.n)

    def index(self, label: str) -> int:
        if label == "a":
            return self.n
        if label == "b":
            return self.n + 1
        if label.isdigit() and 1 <= int(label) <= self.n:
            return int(label) - 1
        raise ProgramError(f"no qubit {label!r} in a register with N={self.n}")

    def pair_of(self, label: str) -> Optional[int]:
        self.index(label)
        if label in ANCILLAS or label == self.threaded:
            return None
        return (int(label) + 1) // 2

    def partner(self, label: str) -> Optional[str]:
        k = self.pair_of(label)
        if k is None:
            return None
        return str(2 * k) if int(label) % 2 else str(2 * k - 1)


@dataclass(frozen=True)
class Instruction:
    op: str
    qubits: tuple[str, ...] = ()
    bit: Optional[str] = None
    condition: Optional[str] = None
    pair: Optional[int] = None
    gadget: Optional[str] = None

    def __str__(self) -> str:
        if self.op == "begin":
            return f"begin {self.gadget} {' '.join(self.qubits)}"
        if self.op in MEASUREMENTS:
            return f"{self.op} {self.qubits[0]} -> {self.bit}"
        if self.op in PAULIS and self.condition is not None:
            return f"{self.op} {self.qubits[0]} if {self.condition}"
        if self.op == "braid_cnot":
            return f"braid_cnot {self.pair}"
        return " ".join((self.op,) + self.qubits)

    @property
    def is_gate(self) -> bool:
        return self.op in ("cz", "braid_cnot") + GLOBALS or (
            self.op in PAULIS and self.condition is None
        )


@dataclass
class LogicalProgram:
    register: LogicalRegister
    instructions: list[Instruction] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.instructions)

    @property
    def bits(self) -> list[str]:
        return [ins.bit for ins in self.instructions if ins.op in MEASUREMENTS]

    @property
    def measurements(self) -> int:
        return len(self.bits)

    def listing(self) -> list[str]:
        return [str(ins) for ins in self.instructions]

    def to_text(self) -> str:
        return "\n".join([f"register {self.register.n}"] + self.listing())

    def without(self, position: int) -> "LogicalProgram":
        kept = self.instructions[:position] + self.instructions[position + 1:]
        return LogicalProgram(self.register, kept)

    @classmethod
    def from_text(cls, text: str) -> "LogicalProgram":
        register = None
        instructions = []
        depth = 0
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if register is None:
                if len(parts) != 2 or parts[0] != "register" or not parts[1].isdigit():
                    raise ParseError(f"expected 'register N', got {line!r}", line=lineno)
                try:
                    register = LogicalRegister(int(parts[1]))
                except ProgramError as exc:
                    raise ParseError(str(exc), line=lineno) from None
                continue
            instruction = parse_instruction(parts, lineno)
            problem = instruction_problem(register, instruction)
            if problem:
                raise ParseError(problem, line=lineno)
            if instruction.op == "begin":
                if depth:
                    raise ParseError("gadgets do not nest", line=lineno)
                depth = 1
            elif instruction.op == "end":
                if not depth:
                    raise ParseError("'end' without 'begin'", line=lineno)
                depth = 0
            instructions.append(instruction)
        if register is None:
            raise ParseError("empty program, expected 'register N'")
        if depth:
            raise ParseError("unterminated gadget")
        return cls(register, instructions)


def parse_instruction(parts: Sequence[str], lineno: int) -> Instruction:
    op, args = parts[0], list(parts[1:])
    shape = None
    if op in PREPS and len(args) == 1:
        return Instruction(op, (args[0],))
    if op in MEASUREMENTS:
        if len(args) == 3 and args[1] == "->":
            return Instruction(op, (args[0],), bit=args[2])
        shape = f"{op} <qubit> -> <bit>"
    elif op in PAULIS:
        if len(args) == 1:
            return Instruction(op, (args[0],))
        if len(args) == 3 and args[1] == "if":
            return Instruction(op, (args[0],), condition=args[2])
        shape = f"{op} <qubit> [if <bit>]"
    elif op == "cz":
        if len(args) == 2:
            return Instruction(op, tuple(args))
        shape = "cz <qubit> <qubit>"
    elif op in GLOBALS + ("end",):
        if not args:
            return Instruction(op)
        shape = op
    elif op == "braid_cnot":
        if len(args) == 1 and args[0].isdigit():
            return Instruction(op, pair=int(args[0]))
        shape = "braid_cnot <pair>"
    elif op == "begin":
        if len(args) == 3 and args[0] in GADGETS:
            return Instruction(op, tuple(args[1:]), gadget=args[0])
        shape = "begin <H|I> <from> <to>"
    elif op in PREPS:
        shape = f"{op} <qubit>"
    if shape is None:
        raise ParseError(f"unknown instruction {op!r}", line=lineno)
    raise ParseError(f"expected '{shape}', got {' '.join(parts)!r}", line=lineno)


def instruction_problem(register: LogicalRegister, instruction: Instruction) -> Optional[str]:
    """Why an instruction is not valid on this register, or ``None``."""
    for label in instruction.qubits:
        try:
            register.index(label)
        except ProgramError as exc:
            return str(exc)
    if instruction.op == "cz":
        x, y = instruction.qubits
        if x == y:
            return f"cz needs two distinct qubits, got {x} twice"
        if register.threaded not in (x, y):
            return f"cz is transversal only with qubit {register.threaded}, got {x} {y}"
    if instruction.op == "braid_cnot" and not 1 <= instruction.pair <= register.pairs:
        return f"no defect pair {instruction.pair} for N={register.n}"
    if instruction.op == "begin" and instruction.qubits[0] == instruction.qubits[1]:
        return "a gadget must move its state to another qubit"
    return None


class DataflowTracker:
    """Follows where each data qubit's state sits while a program runs.

    Data ``q`` starts on qubit ``q``; only a gadget may move it, and it moves
    when the gadget measures its source.
    """

    def __init__(self, register: LogicalRegister):
        self.register = register
        self.holder: dict[str, Optional[str]] = {label: label for label in register.data}
        self.holder.update({label: None for label in ANCILLAS})
        self.bits: set[str] = set()
        self.gadget: Optional[Instruction] = None
        self.consumed = False

    def check(self, instruction: Instruction) -> Optional[str]:
        op = instruction.op
        qubit = instruction.qubits[0] if instruction.qubits else None
        if op in PREPS and self.holder[qubit] is not None:
            return f"prep on {qubit} which holds data {self.holder[qubit]}"
        if op in MEASUREMENTS:
            if instruction.bit in self.bits:
                return f"bit {instruction.bit} assigned twice"
            self.bits.add(instruction.bit)
            if self.holder[qubit] is not None:
                return self._consume(qubit)
        if instruction.condition is not None and instruction.condition not in self.bits:
            return f"condition {instruction.condition} used before its measurement"
        if op == "begin":
            source, dest = instruction.qubits
            if self.holder[source] is None:
                return f"gadget source {source} holds no data"
            if self.holder[dest] is not None:
                return f"gadget target {dest} already holds data {self.holder[dest]}"
            self.gadget, self.consumed = instruction, False
        if op == "end":
            gadget, self.gadget = self.gadget, None
            if gadget is not None and not self.consumed:
                return f"gadget {gadget.qubits[0]} -> {gadget.qubits[1]} never measures its source"
        return None

    def _consume(self, qubit: str) -> Optional[str]:
        if self.gadget is None or self.consumed or self.gadget.qubits[0] != qubit:
            return f"measures {qubit} which holds data {self.holder[qubit]}"
        dest = self.gadget.qubits[1]
        self.holder[dest], self.holder[qubit] = self.holder[qubit], None
        self.consumed = True
        return None

    def finish(self) -> list[str]:
        problems = []
        for label, data in self.holder.items():
            if label in ANCILLAS and data is not None:
                problems.append(f"ancilla {label} ends holding data {data}")
            elif label not in ANCILLAS and data != label:
                where = next((loc for loc, d in self.holder.items() if d == label), None)
                problems.append(f"data {label} ends on {where}")
        return problems


class ProgramBuilder:
    def __init__(self, register: LogicalRegister):
        self.register = register
        self.instructions: list[Instruction] = []
        self.tracker = DataflowTracker(register)

    @property
    def threaded(self) -> str:
        return self.register.threaded

    def emit(self, instruction: Instruction):
        problem = instruction_problem(self.register, instruction) or self.tracker.check(instruction)
        if problem:
            raise ProgramError(problem)
        self.instructions.append(instruction)

    def prep(self, qubit: str, basis: str = "z"):
        self.emit(Instruction(f"prep_{basis}", (qubit,)))

    def measure(self, qubit: str, basis: str) -> str:
        bit = f"m{len(self.tracker.bits) + 1}"
        self.emit(Instruction(f"meas_{basis}", (qubit,), bit=bit))
        return bit

    def pauli(self, kind: str, qubit: str, condition: Optional[str] = None):
        self.emit(Instruction(kind, (qubit,), condition=condition))

    def cz(self, x: str, y: str):
        other = y if x == self.threaded else x
        self.emit(Instruction("cz", (self.threaded, other)))

    def global_cz12(self):
        self.emit(Instruction("global_cz12"))

    def global_ccz(self):
        self.emit(Instruction("global_ccz"))

    def braid(self, pair: int):
        self.emit(Instruction("braid_cnot", pair=pair))

    # gadgets

    def gadget_h(self, source: str, dest: str):
        """Move the state on ``source`` to ``dest`` with a Hadamard applied."""
        direct = self.threaded in (source, dest)
        if not direct and {source, dest} != set(ANCILLAS):
            raise ProgramError(f"no CZ route between {source} and {dest}")
        self.emit(Instruction("begin", (source, dest), gadget="H"))
        if direct:
            self.prep(dest, "x")
            self.cz(source, dest)
        else:
            # the pair CZs cancel; CZ_ab only acts once dest is |+>
            self.prep(dest, "z")
            self.global_cz12()
            self.prep(dest, "x")
            self.global_cz12()
        bit = self.measure(source, "x")
        self.pauli("x", dest, bit)
        self.emit(Instruction("end"))

    def gadget_i(self, source: str, dest: str):
        """Move the state on ``source`` to ``dest`` through a pair braid."""
        pair, forward = self._cnot_route(source, dest)
        spectator = "b" if "a" in (source, dest) else None
        if spectator is None and self.tracker.holder["a"] is not None:
            raise ProgramError(f"braid of pair {pair} needs ancilla a free")
        self.emit(Instruction("begin", (source, dest), gadget="I"))
        self.prep(dest, "z" if forward else "x")
        if spectator:
            self.prep(spectator, "x")
        self.braid(pair)
        if spectator:
            self.prep(spectator, "z")
        bit = self.measure(source, "x" if forward else "z")
        self.pauli("z" if forward else "x", dest, bit)
        self.emit(Instruction("end"))

    def _cnot_route(self, source: str, dest: str) -> tuple[int, bool]:
        # braid k is CNOT(a -> 2k-1) . CNOT(2k -> b); forward when source controls
        for data, ancilla, forward in ((source, dest, False), (dest, source, True)):
            if ancilla not in ANCILLAS or data in ANCILLAS:
                continue
            pair = self.register.pair_of(data)
            odd = pair is not None and int(data) % 2 == 1
            if pair is not None and odd == (ancilla == "a"):
                if ancilla == "b":
                    forward = not forward
                return pair, forward
        raise ProgramError(f"no CNOT route between {source} and {dest}")

    # logical gates

    def _data(self, *labels: str) -> list[str]:
        for label in labels:
            if label not in self.register.data:
                raise ProgramError(f"{label!r} is not a data qubit of the N={self.register.n} register")
        if len(set(labels)) != len(labels):
            raise ProgramError(f"qubits must be distinct, got {', '.join(labels)}")
        return list(labels)

    def hadamard(self, qubit: str):
        (qubit,) = self._data(qubit)
        n = self.threaded
        if qubit == n:
            moves = [("H", n, "a"), ("H", "a", "b"), ("H", "b", n)]
        else:
            near, far = ("a", "b") if int(qubit) % 2 else ("b", "a")
            moves = [
                ("I", qubit, near),
                ("H", near, far),
                ("H", n, near),
                ("H", far, n),
                ("H", n, qubit),
                ("H", near, n),
            ]
        for kind, source, dest in moves:
            (self.gadget_h if kind == "H" else self.gadget_i)(source, dest)

    def controlled_z(self, x: str, y: str):
        x, y = self._data(x, y)
        n = self.threaded
        if n in (x, y):
            self.cz(x, y)
            return
        self.swap(y, n)
        self.cz(n, x)
        self.swap(y, n)

    def swap(self, x: str, y: Optional[str] = None):
        n = self.threaded
        y = n if y is None else y
        x, y = self._data(x, y)
        if n in (x, y):
            self._swap_threaded(y if x == n else x)
            return
        for label in (x, y, x):
            self._swap_threaded(label)

    def _swap_threaded(self, x: str):
        n = self.threaded
        for flank in (n, x, n):
            self.hadamard(flank)
            self.cz(n, x)
            self.hadamard(flank)

    def ccz(self, x: str, y: str, z: str):
        triple = sorted(self._data(x, y, z), key=int)
        n = self.threaded
        swaps = []
        if n not in triple:
            swaps.append((triple[2], n))
            triple[2] = n
        u, v = triple[0], triple[1]
        partner = self.register.partner(u)
        if partner != v:
            swaps.append((v, partner))
        for pair in swaps:
            self.swap(*pair)
        self._aligned_ccz(self.register.pair_of(u))
        for pair in reversed(swaps):
            self.swap(*pair)

    def _aligned_ccz(self, pair: int):
        if self.register.n == 3:
            self.global_ccz()
            return
        first = str(2 * pair - 1)
        self.gadget_i(first, "a")
        self.prep(first, "z")
        self.prep("b", "z")
        self.global_ccz()
        self.gadget_i("a", first)
        self.global_ccz()

    def apply(self, gate: str, qubits: Sequence[str]):
        handlers = {"H": self.hadamard, "CZ": self.controlled_z, "CCZ": self.ccz, "SWAP": self.swap}
        arity = {"H": (1,), "CZ": (2,), "CCZ": (3,), "SWAP": (1, 2)}
        if gate not in handlers:
            raise ProgramError(f"unknown gate {gate!r}")
        if len(qubits) not in arity[gate]:
            raise ProgramError(f"{gate} takes {' or '.join(map(str, arity[gate]))} qubits, got {len(qubits)}")
        handlers[gate](*qubits)

    def build(self) -> LogicalProgram:
        problems = self.tracker.finish()
        if problems:
            raise ProgramError("; ".join(problems))
        return LogicalProgram(self.register, list(self.instructions))


def parse_gates(text: str) -> list[tuple[str, tuple[str, ...]]]:
    """Parse ``h:3``, ``ccz:1,2,5``, ``swap:1`` style gate lists joined by ``;``."""
    gates = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        name, sep, args = chunk.partition(":")
        qubits = tuple(q.strip() for q in args.split(",") if q.strip())
        if not sep or not qubits:
            raise ParseError(f"expected '<gate>:<qubit>[,<qubit>...]', got {chunk!r}")
        gates.append((name.strip().upper(), qubits))
    return gates


def compile_circuit(register: LogicalRegister, gates: Sequence[tuple[str, Sequence[str]]]) -> LogicalProgram:
    builder = ProgramBuilder(register)
    for gate, qubits in gates:
        builder.apply(gate, [str(q) for q in qubits])
    program = builder.build()
    logger.debug(
        f"Compiled {len(gates)} gates for N={register.n}: "
        f"{len(program)} instructions, {program.measurements} measurements"
    )
    return program


def compile_h(register: LogicalRegister, qubit) -> LogicalProgram:
    return compile_circuit(register, [("H", (qubit,))])


def compile_ccz(register: LogicalRegister, x, y, z) -> LogicalProgram:
    return compile_circuit(register, [("CCZ", (x, y, z))])


def compile_swap(register: LogicalRegister, x, y=None) -> LogicalProgram:
    return compile_circuit(register, [("SWAP", (x,) if y is None else (x, y))])


def compile_cz(register: LogicalRegister, x, y) -> LogicalProgram:
    return compile_circuit(register, [("CZ", (x, y))])


def resource_count(program: LogicalProgram) -> ResourceCounts:
    ops = [ins.op for ins in program.instructions]
    return ResourceCounts(
        gadgets=ops.count("begin"),
        measurements=sum(ops.count(op) for op in MEASUREMENTS),
        global_transversal=ops.count("cz") + sum(ops.count(op) for op in GLOBALS),
        braids=ops.count("braid_cnot"),
    )


def dataflow_problems(program: LogicalProgram) -> list[str]:
    """Every dataflow violation of a program; empty when it is well formed."""
    tracker = DataflowTracker(program.register)
    problems = []
    for position, instruction in enumerate(program.instructions, start=1):
        problem = instruction_problem(program.register, instruction) or tracker.check(instruction)
        if problem:
            problems.append(f"instruction {position} ({instruction}): {problem}")
    return problems + tracker.finish()


# ---------------------------------------------------------------------------
# Dense simulation
# ---------------------------------------------------------------------------

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
BASIS = {"z": np.array([1, 0], dtype=complex), "x": np.array([1, 1], dtype=complex) / np.sqrt(2)}


def _apply_single(state: np.ndarray, matrix: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(matrix, state, axes=([1], [axis])), 0, axis)


def _select(ndim: int, fixed: dict[int, int]) -> tuple:
    index = [slice(None)] * ndim
    for axis, value in fixed.items():
        index[axis] = value
    return tuple(index)


def _phase_flip(state: np.ndarray, axes: Sequence[int]):
    state[_select(state.ndim, {axis: 1 for axis in axes})] *= -1


def _cnot(state: np.ndarray, control: int, target: int):
    index = _select(state.ndim, {control: 1})
    state[index] = np.flip(state[index], axis=target - (control < target)).copy()


def apply_gate(register: LogicalRegister, state: np.ndarray, instruction: Instruction) -> np.ndarray:
    """Apply a unitary instruction to the leading ``N + 2`` axes of ``state``."""
    state = state.copy()
    index = register.index
    a, b, n = index("a"), index("b"), index(register.threaded)
    op = instruction.op
    if op == "x":
        state = np.flip(state, axis=index(instruction.qubits[0])).copy()
    elif op == "z":
        _phase_flip(state, [index(instruction.qubits[0])])
    elif op == "cz":
        _phase_flip(state, [index(q) for q in instruction.qubits])
    elif op == "global_cz12":
        _phase_flip(state, [a, b])
        for k in range(register.pairs):
            _phase_flip(state, [2 * k, 2 * k + 1])
    elif op == "global_ccz":
        _phase_flip(state, [a, b, n])
        for k in range(register.pairs):
            _phase_flip(state, [2 * k, 2 * k + 1, n])
    elif op == "braid_cnot":
        k = instruction.pair
        _cnot(state, a, 2 * k - 2)
        _cnot(state, 2 * k - 1, b)
    else:
        raise ProgramError(f"{instruction} is not a unitary instruction")
    return state


def instruction_matrix(register: LogicalRegister, instruction: Instruction) -> np.ndarray:
    """Dense ``2^(N+2)`` matrix of a unitary instruction; qubit 1 is the leading bit."""
    if not instruction.is_gate:
        raise ProgramError(f"{instruction} is not a unitary instruction")
    dim = 2 ** register.size
    columns = np.eye(dim, dtype=complex).reshape((2,) * register.size + (dim,))
    return apply_gate(register, columns, instruction).reshape(dim, dim)


def _project(state: np.ndarray, axis: int, basis: str, outcome: int) -> np.ndarray:
    """Keep one measurement outcome and reset the measured qubit to |0>."""
    if basis == "x":
        state = _apply_single(state, HADAMARD, axis)
    kept = np.take(state, outcome, axis=axis)
    return np.stack([kept, np.zeros_like(kept)], axis=axis)


def _prepare(state: np.ndarray, axis: int, basis: str) -> tuple[np.ndarray, Optional[int]]:
    """Re-prepare one qubit.

    Returns the new state, or the index of the input column that loses the
    most weight when the qubit is still entangled with the rest.
    """
    moved = np.moveaxis(state, axis, 0)
    rows = moved.reshape(2, -1)
    gram = rows @ rows.conj().T
    trace = np.real(np.trace(gram))
    _, vectors = np.linalg.eigh(gram)
    keep = vectors[:, -1]
    if abs(np.linalg.det(gram)) > 1e-9 * trace ** 2:
        lost = rows - np.outer(keep, keep.conj() @ rows)
        per_input = np.linalg.norm(lost.reshape(-1, moved.shape[-1]), axis=0)
        return state, int(np.argmax(per_input))
    rest = keep.conj() @ rows
    prepared = np.outer(BASIS[basis], rest).reshape(moved.shape)
    return np.moveaxis(prepared, 0, axis), None


def _fingerprint(state: np.ndarray) -> str:
    flat = state.ravel()
    magnitude = np.abs(flat)
    pivot = flat[np.flatnonzero(magnitude > 1e-6 * magnitude.max())[0]]
    canonical = np.round(flat / pivot, 9) + 0.0
    return hashlib.blake2b(canonical.tobytes(), digest_size=16).hexdigest()


def basis_label(index: int, n: int) -> str:
    return f"|{index:0{n}b}>"


def target_unitary(n: int, gates: Sequence[tuple[str, Sequence[str]]]) -> np.ndarray:
    """Product of the named gates on ``n`` data qubits, first gate applied first."""
    dim = 2 ** n
    bits = (np.arange(dim)[:, None] >> (n - 1 - np.arange(n))) & 1
    total = np.eye(dim, dtype=complex)
    for gate, qubits in gates:
        positions = [int(q) - 1 for q in qubits]
        if gate == "H":
            factors = [HADAMARD if q == positions[0] else np.eye(2) for q in range(n)]
            matrix = factors[0]
            for factor in factors[1:]:
                matrix = np.kron(matrix, factor)
        elif gate in ("CZ", "CCZ"):
            matrix = np.diag(np.where(bits[:, positions].all(axis=1), -1, 1).astype(complex))
        elif gate == "SWAP":
            x, y = positions[0], positions[1] if len(positions) > 1 else n - 1
            swapped = bits.copy()
            swapped[:, [x, y]] = swapped[:, [y, x]]
            images = swapped @ (1 << (n - 1 - np.arange(n)))
            matrix = np.zeros((dim, dim), dtype=complex)
            matrix[images, np.arange(dim)] = 1
        else:
            raise ProgramError(f"unknown gate {gate!r}")
        total = matrix @ total
    return total


# ---------------------------------------------------------------------------
# Branch verification
# ---------------------------------------------------------------------------


@dataclass
class Subtree:
    """Verdicts for every branch below one point of the program."""

    total: int
    passed: int
    branches: list[tuple[str, bool, Optional[str]]]
    truncated: bool = False
    first_failure: Optional[tuple[str, Optional[str]]] = None

    @classmethod
    def leaf(cls, passed: bool, failing_input: Optional[str] = None) -> "Subtree":
        failure = None if passed else ("", failing_input)
        return cls(1, int(passed), [("", passed, failing_input)], False, failure)

    @classmethod
    def uniform(cls, measurements: int, passed: bool, failing_input: Optional[str] = None) -> "Subtree":
        total = 2 ** measurements
        listing = islice(product("01", repeat=measurements), BRANCH_LISTING)
        branches = [("".join(bits), passed, failing_input) for bits in listing]
        failure = None if passed else ("0" * measurements, failing_input)
        return cls(total, total if passed else 0, branches, total > BRANCH_LISTING, failure)

    @classmethod
    def vacuous(cls, measurements: int) -> "Subtree":
        """Every branch below an outcome that cannot occur."""
        return cls.uniform(measurements, True)

    @classmethod
    def failed(cls, measurements: int, failing_input: str) -> "Subtree":
        """Every branch below a point where data was already lost."""
        return cls.uniform(measurements, False, failing_input)

    def prefixed(self, bit: str) -> "Subtree":
        failure = None
        if self.first_failure is not None:
            failure = (bit + self.first_failure[0], self.first_failure[1])
        branches = [(bit + outcomes, ok, failing) for outcomes, ok, failing in self.branches]
        return Subtree(self.total, self.passed, branches, self.truncated, failure)

    @staticmethod
    def merge(left: "Subtree", right: "Subtree") -> "Subtree":
        branches = left.branches + right.branches
        return Subtree(
            left.total + right.total,
            left.passed + right.passed,
            branches[:BRANCH_LISTING],
            left.truncated or right.truncated or len(branches) > BRANCH_LISTING,
            left.first_failure or right.first_failure,
        )


class BranchWalker:
    """Depth-first walk over measurement outcomes.

    Branches that reach a measurement with the same state (up to a scalar)
    and the same values for the bits still read later share one subtree.
    """

    def __init__(self, program: LogicalProgram, target: np.ndarray):
        self.program = program
        self.register = program.register
        self.target = target
        self.norm = np.vdot(target, target)
        self.memo: dict[tuple, Subtree] = {}
        self.visited = 0
        count = len(program.instructions)
        self.live: list[frozenset] = [frozenset()] * (count + 1)
        self.remaining = [0] * (count + 1)
        for pc in range(count - 1, -1, -1):
            instruction = program.instructions[pc]
            read = {instruction.condition} if instruction.condition else set()
            self.live[pc] = self.live[pc + 1] | read
            self.remaining[pc] = self.remaining[pc + 1] + (instruction.op in MEASUREMENTS)

    def initial_state(self) -> np.ndarray:
        dim = 2 ** self.register.n
        state = np.zeros((dim, 4, dim), dtype=complex)
        state[:, 0, :] = np.eye(dim)
        return state.reshape((2,) * self.register.size + (dim,))

    def walk(self, pc: int, state: np.ndarray, values: dict[str, int]) -> Subtree:
        instructions = self.program.instructions
        while pc < len(instructions) and instructions[pc].op not in MEASUREMENTS:
            instruction = instructions[pc]
            if instruction.op in PREPS:
                label = instruction.qubits[0]
                state, lost = _prepare(state, self.register.index(label), instruction.op[-1])
                if lost is not None:
                    logger.debug(f"prep on {label} at instruction {pc + 1} discards entangled data")
                    self.visited += 1
                    return Subtree.failed(self.remaining[pc], basis_label(lost, self.register.n))
            else:
                state = self.step(state, instruction, values)
            pc += 1
        if pc == len(instructions):
            self.visited += 1
            return self.compare(state)

        read = tuple(sorted((bit, values[bit]) for bit in self.live[pc] if bit in values))
        key = (pc, _fingerprint(state), read)
        if key in self.memo:
            return self.memo[key]

        measurement = instructions[pc]
        axis = self.register.index(measurement.qubits[0])
        basis = measurement.op[-1]
        norm = np.linalg.norm(state)
        children = []
        for outcome in (0, 1):
            projected = _project(state, axis, basis, outcome)
            weight = np.linalg.norm(projected)
            if weight <= 1e-9 * norm:
                child = Subtree.vacuous(self.remaining[pc + 1])
            else:
                child = self.walk(pc + 1, projected / weight, {**values, measurement.bit: outcome})
            children.append(child.prefixed(str(outcome)))
        subtree = Subtree.merge(*children)
        self.memo[key] = subtree
        return subtree

    def step(self, state: np.ndarray, instruction: Instruction, values: dict[str, int]) -> np.ndarray:
        op = instruction.op
        if op in ("begin", "end"):
            return state
        if instruction.condition is not None:
            if not values[instruction.condition]:
                return state
            instruction = Instruction(op, instruction.qubits)
        return apply_gate(self.register, state, instruction)

    def compare(self, state: np.ndarray) -> Subtree:
        n = self.register.n
        dim = 2 ** n
        total = np.linalg.norm(state)
        kept = state[..., 0, 0, :].reshape(dim, dim)
        if total ** 2 - np.linalg.norm(kept) ** 2 > (TOLERANCE * total) ** 2:
            stray = state.reshape(dim, 4, dim)[:, 1:, :]
            column = int(np.argmax(np.linalg.norm(stray, axis=(0, 1))))
            logger.debug(f"Ancillas not returned to |00> for input {basis_label(column, n)}")
            return Subtree.leaf(False, basis_label(column, n))
        scale = np.vdot(self.target, kept) / self.norm
        residual = np.linalg.norm(kept - scale * self.target, axis=0)
        if abs(scale) < TOLERANCE * total or residual.max() > TOLERANCE * total:
            return Subtree.leaf(False, basis_label(int(np.argmax(residual)), n))
        return Subtree.leaf(True)


def verify(
    program: LogicalProgram,
    target: np.ndarray,
    label: str = "",
    cap: int = DEFAULT_CAP,
) -> BranchReport:
    """Check every measurement branch of ``program`` against ``target``.

    A branch passes when the ancillas end in |00> and the operator it applies
    to the data qubits is ``target`` up to a scalar, tested column by column
    over the whole computational basis. A prep on a qubit still entangled with
    the data fails every branch below it. Compiled programs leave the ancillas
    as their last gadget measured them, with no closing reset.
    """
    register = program.register
    if register.size > cap:
        raise CapExceededError(
            f"N={register.n} needs {register.size} simulated qubits, above the cap of {cap}; "
            "raise the branch cap or pick a smaller N"
        )
    dim = 2 ** register.n
    target = np.asarray(target, dtype=complex)
    if target.shape != (dim, dim):
        raise ProgramError(f"target must be {dim}x{dim} for N={register.n}, got {target.shape}")
    measured = set()
    for position, instruction in enumerate(program.instructions, start=1):
        problem = instruction_problem(register, instruction)
        if instruction.condition is not None and instruction.condition not in measured:
            problem = f"condition {instruction.condition} used before its measurement"
        if problem:
            raise ProgramError(f"instruction {position}: {problem}")
        if instruction.bit is not None:
            measured.add(instruction.bit)

    logger.info(f"Verifying {label or 'program'}: {program.measurements} measurements on N={register.n}")
    walker = BranchWalker(program, target)
    subtree = walker.walk(0, walker.initial_state(), {})
    logger.info(
        f"{subtree.passed}/{subtree.total} branches pass "
        f"({walker.visited} evaluated, {len(walker.memo)} shared subtrees)"
    )

    first_failure = None
    if subtree.first_failure is not None:
        outcomes, failing = subtree.first_failure
        first_failure = BranchResult(outcomes=outcomes, passed=False, failing_input=failing)
    return BranchReport(
        target=label,
        measurements=program.measurements,
        branch_count=subtree.total,
        passed_count=subtree.passed,
        verdict=subtree.passed == subtree.total,
        branches=[
            BranchResult(outcomes=outcomes, passed=ok, failing_input=failing)
            for outcomes, ok, failing in subtree.branches
        ],
        branches_truncated=subtree.truncated,
        first_failure=first_failure,
    )


def compile_report(n: int, gate: str, run_verify: bool = True, cap: int = DEFAULT_CAP) -> CompileReport:
    register = LogicalRegister(n)
    gates = parse_gates(gate)
    program = compile_circuit(register, gates)
    verification = None
    if run_verify:
        verification = verify(program, target_unitary(n, gates), label=gate, cap=cap)
    return CompileReport(
        n=n,
        gate=gate,
        program=program.listing(),
        resources=resource_count(program),
        dataflow_ok=not dataflow_problems(program),
        verification=verification,
    )
