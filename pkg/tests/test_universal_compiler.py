"""Tests for src.universal_compiler."""

from functools import reduce

import numpy as np
import pytest

from src.errors import CapExceededError, ParseError, ProgramError
from src.universal_compiler import (
    Instruction,
    LogicalProgram,
    LogicalRegister,
    ProgramBuilder,
    compile_ccz,
    compile_circuit,
    compile_cz,
    compile_h,
    compile_report,
    compile_swap,
    dataflow_problems,
    instruction_matrix,
    parse_gates,
    resource_count,
    target_unitary,
    verify,
)

N3 = LogicalRegister(3)
N5 = LogicalRegister(5)
HADAMARD = np.array([[1, 1], [1, -1]]) / np.sqrt(2)


def kron(*factors):
    return reduce(np.kron, factors)


def h_on(n, qubit):
    return kron(*[HADAMARD if q == qubit else np.eye(2) for q in range(1, n + 1)])


def phase_diagonal(size, *groups):
    """Diagonal of prod (-1)^(product of bits) over the groups, qubit 0 leading."""
    signs = np.ones(2 ** size)
    for index in range(2 ** size):
        bits = [(index >> (size - 1 - q)) & 1 for q in range(size)]
        for group in groups:
            if all(bits[q] for q in group):
                signs[index] *= -1
    return np.diag(signs)


def ccz_on(n, x, y, z):
    return phase_diagonal(n, (x - 1, y - 1, z - 1))


def parsed(text):
    return LogicalProgram.from_text(text)


class TestRegister:
    def test_labels(self):
        assert N3.labels == ["1", "2", "3", "a", "b"]
        assert N3.size == 5
        assert N5.pairs == 2

    @pytest.mark.parametrize("n", [1, 4, 6])
    def test_rejects_even_or_small(self, n):
        with pytest.raises(ProgramError, match="odd"):
            LogicalRegister(n)

    def test_pairs(self):
        assert N5.pair_of("4") == 2
        assert N5.partner("3") == "4"
        assert N5.partner("2") == "1"
        assert N5.partner("5") is None
        assert N5.pair_of("a") is None

    def test_unknown_label(self):
        with pytest.raises(ProgramError, match="no qubit"):
            N3.index("4")


class TestSemantics:
    def test_global_ccz_matches_membrane_product(self):
        # qubit order 1, 2, 3, a, b
        matrix = instruction_matrix(N3, Instruction("global_ccz"))
        assert np.allclose(matrix, phase_diagonal(5, (3, 4, 2), (0, 1, 2)))

    def test_global_ccz_five_qubits(self):
        matrix = instruction_matrix(N5, Instruction("global_ccz"))
        expected = phase_diagonal(7, (5, 6, 4), (0, 1, 4), (2, 3, 4))
        assert np.allclose(matrix, expected)

    def test_global_cz12(self):
        assert np.allclose(
            instruction_matrix(N3, Instruction("global_cz12")),
            phase_diagonal(5, (3, 4), (0, 1)),
        )
        assert np.allclose(
            instruction_matrix(N5, Instruction("global_cz12")),
            phase_diagonal(7, (5, 6), (0, 1), (2, 3)),
        )

    def test_global_ccz_with_b_zero_is_ccz123(self):
        matrix = instruction_matrix(N3, Instruction("global_ccz"))
        b_zero = np.arange(32)[np.arange(32) % 2 == 0]
        a_zero = b_zero[(b_zero >> 1) % 2 == 0]
        block = matrix[np.ix_(a_zero, a_zero)]
        assert np.allclose(block, ccz_on(3, 1, 2, 3))

    def test_braid_cnot_targets(self):
        matrix = instruction_matrix(N3, Instruction("braid_cnot", pair=1))
        # |000 a=1 b=0> -> qubit 1 flipped; |010 00> -> b flipped
        assert matrix[0b10010, 0b00010] == 1
        assert matrix[0b01001, 0b01000] == 1
        assert matrix[0b00100, 0b00100] == 1

    @pytest.mark.parametrize("pair", [1, 2])
    def test_braid_cnot_squares_to_identity(self, pair):
        matrix = instruction_matrix(N5, Instruction("braid_cnot", pair=pair))
        assert np.allclose(matrix @ matrix, np.eye(2 ** 7))

    def test_cz_with_threaded_qubit(self):
        matrix = instruction_matrix(N3, Instruction("cz", ("3", "a")))
        assert np.allclose(matrix, phase_diagonal(5, (2, 3)))

    def test_conditional_pauli_has_no_matrix(self):
        with pytest.raises(ProgramError, match="not a unitary"):
            instruction_matrix(N3, Instruction("x", ("a",), condition="m1"))


class TestTargets:
    def test_swap_with_threaded_qubit(self):
        swap = target_unitary(3, [("SWAP", ("1",))])
        assert swap[0b001, 0b100] == 1
        assert np.allclose(swap @ swap, np.eye(8))

    def test_swap_pair(self):
        assert target_unitary(3, [("SWAP", ("1", "2"))])[0b010, 0b100] == 1

    def test_gate_order(self):
        sequence = target_unitary(3, [("H", ("1",)), ("CZ", ("1", "3"))])
        assert np.allclose(sequence, phase_diagonal(3, (0, 2)) @ h_on(3, 1))

    def test_parse_gates(self):
        assert parse_gates("h:3; ccz:1,2,5") == [("H", ("3",)), ("CCZ", ("1", "2", "5"))]
        with pytest.raises(ParseError):
            parse_gates("h3")


class TestGadgets:
    def test_h_gadget_on_threaded_qubit(self):
        assert compile_h(N3, 3).listing() == [
            "begin H 3 a", "prep_x a", "cz 3 a", "meas_x 3 -> m1", "x a if m1", "end",
            "begin H a b", "prep_z b", "global_cz12", "prep_x b", "global_cz12",
            "meas_x a -> m2", "x b if m2", "end",
            "begin H b 3", "prep_x 3", "cz 3 b", "meas_x b -> m3", "x 3 if m3", "end",
        ]

    def test_no_cz_route(self):
        with pytest.raises(ProgramError, match="no CZ route"):
            ProgramBuilder(N3).gadget_h("1", "a")

    def test_no_cnot_route(self):
        with pytest.raises(ProgramError, match="no CNOT route"):
            ProgramBuilder(N3).gadget_i("3", "a")
        with pytest.raises(ProgramError, match="no CNOT route"):
            ProgramBuilder(N3).gadget_i("2", "a")

    def test_b_route_needs_a_free(self):
        builder = ProgramBuilder(N3)
        builder.gadget_i("1", "a")
        with pytest.raises(ProgramError, match="ancilla a free"):
            builder.gadget_i("2", "b")

    def test_gadget_target_must_be_empty(self):
        builder = ProgramBuilder(N3)
        builder.gadget_h("3", "a")
        with pytest.raises(ProgramError, match="already holds data"):
            builder.gadget_i("1", "a")

    @pytest.mark.parametrize("data,ancilla", [("1", "a"), ("2", "b")])
    def test_i_gadget_there_and_back(self, data, ancilla):
        builder = ProgramBuilder(N3)
        builder.gadget_i(data, ancilla)
        builder.gadget_i(ancilla, data)
        program = builder.build()
        report = verify(program, np.eye(8))
        assert report.verdict
        assert report.branch_count == 4

    def test_build_requires_data_home(self):
        builder = ProgramBuilder(N3)
        builder.gadget_h("3", "a")
        with pytest.raises(ProgramError, match="ends holding data 3"):
            builder.build()


class TestCompileH:
    @pytest.mark.parametrize("qubit,measurements", [(1, 6), (2, 6), (3, 3)])
    def test_verifies_in_every_branch(self, qubit, measurements):
        program = compile_h(N3, qubit)
        assert program.measurements == measurements
        report = verify(program, h_on(3, qubit), label=f"h:{qubit}")
        assert report.verdict
        assert report.branch_count == 2 ** measurements
        assert report.passed_count == report.branch_count
        assert len(report.branches) == 2 ** measurements
        assert not report.branches_truncated

    def test_quoted_sequence_for_qubit_1(self):
        gadgets = [line for line in compile_h(N3, 1).listing() if line.startswith("begin")]
        assert gadgets == [
            "begin I 1 a", "begin H a b", "begin H 3 a",
            "begin H b 3", "begin H 3 1", "begin H a 3",
        ]

    def test_even_qubit_goes_through_b(self):
        gadgets = [line for line in compile_h(N3, 2).listing() if line.startswith("begin")]
        assert gadgets[:2] == ["begin I 2 b", "begin H b a"]

    def test_twice_is_identity(self):
        program = compile_circuit(N3, [("H", ("1",)), ("H", ("1",))])
        assert verify(program, np.eye(8)).verdict

    def test_resources(self):
        assert resource_count(compile_h(N3, 3)).model_dump() == dict(
            gadgets=3, measurements=3, global_transversal=4, braids=0
        )
        assert resource_count(compile_h(N3, 1)).model_dump() == dict(
            gadgets=6, measurements=6, global_transversal=6, braids=1
        )

    def test_data_qubit_only(self):
        with pytest.raises(ProgramError, match="not a data qubit"):
            compile_h(N3, "a")


class TestMutation:
    def test_dropping_a_correction_fails_where_it_fires(self):
        program = compile_h(N3, 3)
        corrections = [
            (position, ins) for position, ins in enumerate(program.instructions)
            if ins.condition is not None
        ]
        assert len(corrections) == 3
        for position, ins in corrections:
            report = verify(program.without(position), h_on(3, 3))
            bit = program.bits.index(ins.condition)
            failing = {b.outcomes for b in report.branches if not b.passed}
            assert failing == {b.outcomes for b in report.branches if b.outcomes[bit] == "1"}
            assert report.passed_count == 4
            assert not report.verdict
            assert report.first_failure.outcomes[bit] == "1"

    def test_dataflow_unaffected_by_mutation(self):
        program = compile_h(N3, 3)
        assert dataflow_problems(program.without(4)) == []


class TestCompileCCZ:
    def test_aligned_triple_on_three_qubits(self):
        program = compile_ccz(N3, 1, 2, 3)
        assert program.listing() == ["global_ccz"]
        report = verify(program, ccz_on(3, 1, 2, 3))
        assert report.verdict
        assert report.branch_count == 1

    def test_self_inverse(self):
        program = compile_circuit(N3, [("CCZ", ("1", "2", "3"))] * 2)
        assert verify(program, np.eye(8)).verdict

    def test_isolation_protocol(self):
        program = compile_ccz(N5, 1, 2, 5)
        assert program.listing() == [
            "begin I 1 a", "prep_x a", "prep_x b", "braid_cnot 1", "prep_z b",
            "meas_z 1 -> m1", "x a if m1", "end",
            "prep_z 1", "prep_z b", "global_ccz",
            "begin I a 1", "prep_z 1", "prep_x b", "braid_cnot 1", "prep_z b",
            "meas_x a -> m2", "z 1 if m2", "end",
            "global_ccz",
        ]
        assert resource_count(program).model_dump() == dict(
            gadgets=2, measurements=2, global_transversal=2, braids=2
        )

    def test_qubits_must_be_distinct(self):
        with pytest.raises(ProgramError, match="distinct"):
            compile_ccz(N3, 1, 1, 3)


class TestSwapAndCZ:
    def test_swap_with_threaded_qubit(self):
        program = compile_swap(N3, 1)
        assert program.measurements == 24
        assert verify(program, target_unitary(3, [("SWAP", ("1",))])).verdict

    def test_swap_twice(self):
        program = compile_circuit(N3, [("SWAP", ("2",))] * 2)
        assert verify(program, np.eye(8)).verdict

    def test_cz_direct(self):
        program = compile_cz(N3, 3, 1)
        assert program.listing() == ["cz 3 1"]
        assert verify(program, phase_diagonal(3, (0, 2))).verdict

    def test_cz_through_swaps(self):
        program = compile_cz(N3, 1, 2)
        assert program.measurements == 48
        assert verify(program, phase_diagonal(3, (0, 1))).verdict


@pytest.mark.slow
class TestFiveQubits:
    def test_ccz_125(self):
        report = verify(compile_ccz(N5, 1, 2, 5), ccz_on(5, 1, 2, 5))
        assert report.verdict
        assert report.branch_count == 4

    def test_ccz_135(self):
        program = compile_ccz(N5, 1, 3, 5)
        report = verify(program, ccz_on(5, 1, 3, 5))
        assert report.verdict
        assert report.branch_count == 2 ** program.measurements
        assert report.branches_truncated

    def test_swap_1(self):
        assert verify(compile_swap(N5, 1), target_unitary(5, [("SWAP", ("1",))])).verdict

    def test_h_4(self):
        program = compile_h(N5, 4)
        assert "braid_cnot 2" in program.listing()
        assert verify(program, h_on(5, 4)).verdict


class TestVerify:
    def test_empty_program(self):
        report = verify(LogicalProgram(N3), np.eye(8))
        assert report.verdict
        assert report.branch_count == 1
        assert report.branches[0].outcomes == ""

    def test_impossible_outcome_passes_vacuously(self):
        report = verify(parsed("register 3\nmeas_z a -> m1"), np.eye(8))
        assert (report.branch_count, report.passed_count) == (2, 2)

    def test_failure_names_the_input(self):
        report = verify(parsed("register 3\nx 1"), np.eye(8))
        assert not report.verdict
        assert report.first_failure.failing_input == "|000>"

    def test_dirty_ancilla_fails(self):
        report = verify(parsed("register 3\nx a"), np.eye(8))
        assert not report.verdict

    def test_global_phase_is_ignored(self):
        program = parsed("register 3\nx 1\nz 1\nx 1\nz 1")
        assert verify(program, np.eye(8)).verdict

    def test_cap(self):
        with pytest.raises(CapExceededError, match="cap of 4"):
            verify(compile_h(N3, 3), h_on(3, 3), cap=4)

    def test_target_shape(self):
        with pytest.raises(ProgramError, match="8x8"):
            verify(LogicalProgram(N3), np.eye(4))

    def test_prep_on_entangled_qubit_fails_the_branch(self):
        report = verify(parsed("register 3\nprep_x 1"), np.eye(8))
        assert report.verdict is False
        assert report.branch_count == 1
        assert report.first_failure.failing_input is not None

    def test_lost_data_fails_every_later_branch(self):
        report = verify(parsed("register 3\nprep_z 1\nmeas_z a -> m1\nmeas_z b -> m2"), np.eye(8))
        assert (report.branch_count, report.passed_count) == (4, 0)
        assert report.first_failure.outcomes == "00"

    def test_stray_ancilla_flip_after_compilation(self):
        program = compile_h(N3, 3)
        dirty = LogicalProgram(N3, program.instructions + [Instruction("x", ("a",))])
        report = verify(dirty, h_on(3, 3))
        assert report.branch_count == 8
        assert report.passed_count == 0

    def test_condition_before_measurement(self):
        with pytest.raises(ProgramError, match="before its measurement"):
            verify(parsed("register 3\nx a if m1\nmeas_z a -> m1"), np.eye(8))

    def test_report(self):
        report = compile_report(3, "h:3")
        assert report.dataflow_ok
        assert report.resources.measurements == 3
        assert report.verification.verdict
        assert report.verification.branch_count == 8
        assert compile_report(3, "h:3", run_verify=False).verification is None


class TestDataflow:
    @pytest.mark.parametrize(
        "gates", [[("H", ("1",))], [("CCZ", ("1", "2", "3"))], [("SWAP", ("1", "2"))]]
    )
    def test_compiled_programs_are_clean(self, gates):
        assert dataflow_problems(compile_circuit(N3, gates)) == []

    def test_prep_on_data(self):
        problems = dataflow_problems(parsed("register 3\nprep_x 2"))
        assert problems == ["instruction 1 (prep_x 2): prep on 2 which holds data 2"]

    def test_measuring_data_outside_a_gadget(self):
        problems = dataflow_problems(parsed("register 3\nmeas_z 1 -> m1"))
        assert problems == ["instruction 1 (meas_z 1 -> m1): measures 1 which holds data 1"]

    def test_bits(self):
        problems = dataflow_problems(
            parsed("register 3\nx a if m1\nmeas_z a -> m1\nmeas_z b -> m1")
        )
        assert "condition m1 used before its measurement" in problems[0]
        assert "bit m1 assigned twice" in problems[1]

    def test_gadget_must_consume_its_source(self):
        problems = dataflow_problems(parsed("register 3\nbegin H 3 a\nprep_x a\nend"))
        assert "never measures its source" in problems[0]


class TestTextFormat:
    def test_round_trip(self):
        program = compile_h(N5, 4)
        again = LogicalProgram.from_text(program.to_text())
        assert again.register == N5
        assert again.instructions == program.instructions

    @pytest.mark.parametrize(
        "text,message",
        [
            ("register 4", "line 1: N must be odd"),
            ("register 3\ncz 1 2", "line 2: cz is transversal only with qubit 3"),
            ("register 3\nbraid_cnot 2", "line 2: no defect pair 2"),
            ("register 3\nend", "line 2: 'end' without 'begin'"),
            ("register 3\nbegin H 3 a", "unterminated gadget"),
            ("register 3\nrotate 1", "line 2: unknown instruction"),
            ("register 3\nmeas_x 1 m1", "line 2: expected 'meas_x <qubit> -> <bit>'"),
            ("", "expected 'register N'"),
        ],
    )
    def test_parse_errors(self, text, message):
        with pytest.raises(ParseError, match=message):
            parsed(text)

    def test_comments_are_skipped(self):
        program = parsed("# H on the threaded qubit\nregister 3\n\nglobal_ccz")
        assert program.listing() == ["global_ccz"]
