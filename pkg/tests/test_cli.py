"""Tests for the command-line front end."""

import json

import pytest

from cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestModelCheck:
    def test_eligible_builtin(self, capsys):
        code, out, _ = run(capsys, "model-check", "--builtin", "surface_2d")
        assert code == 0
        report = json.loads(out)
        assert report["eligibility"]["witness_a"] == "em"

    def test_ineligible_wall_exits_one(self, capsys):
        code, _, _ = run(capsys, "model-check", "--builtin", "surface_2d", "--wall", "identity")
        assert code == 1

    def test_text_format(self, capsys):
        code, out, _ = run(capsys, "model-check", "--builtin", "surface_2d", "--format", "text")
        assert code == 0
        assert out.startswith("model surface_2d (D=2): valid")
        assert "wall hadamard: eligible" in out

    def test_missing_source(self, capsys):
        code, _, err = run(capsys, "model-check")
        assert code == 2
        assert "needs --input or --builtin" in err

    def test_unreadable_input(self, capsys, tmp_path):
        bad = tmp_path / "model.json"
        bad.write_text("{not json")
        code, _, err = run(capsys, "model-check", "--input", str(bad))
        assert code == 2
        assert "error:" in err


class TestSchemeBraid:
    def test_builtin_scheme(self, capsys):
        code, out, _ = run(capsys, "scheme-braid", "--builtin", "twist_2d_surface")
        assert code == 0
        assert json.loads(out)["group_order"] == 24

    def test_unknown_scheme(self, capsys):
        code, _, _ = run(capsys, "scheme-braid", "--builtin", "nope")
        assert code == 2


class TestLatticeBuild:
    def test_patch_to_file(self, capsys, tmp_path):
        out_file = tmp_path / "patch.json"
        code, out, _ = run(
            capsys, "lattice-build", "--size", "3", "--max-weight", "3", "--out", str(out_file)
        )
        assert code == 0
        assert out == ""
        report = json.loads(out_file.read_text())
        assert (report["n"], report["k"]) == (13, 1)
        assert report["distance"]["distance"] == 3

    def test_needs_a_lattice(self, capsys):
        code, _, err = run(capsys, "lattice-build")
        assert code == 2
        assert "--size" in err


class TestDeformRun:
    def test_builtin_braid(self, capsys):
        code, out, _ = run(capsys, "deform-run", "--builtin", "rough_around_smooth")
        assert code == 0
        assert json.loads(out)["passed"] is True

    def test_unknown_braid(self, capsys):
        code, _, err = run(capsys, "deform-run", "--builtin", "nope")
        assert code == 2
        assert "unknown built-in braid" in err


class TestCompile:
    def test_hadamard(self, capsys):
        code, out, _ = run(capsys, "compile", "--n", "3", "--gate", "h:3")
        assert code == 0
        report = json.loads(out)
        assert report["verification"]["verdict"]
        assert report["resources"]["measurements"] == 3

    def test_text_listing(self, capsys):
        code, out, _ = run(capsys, "compile", "--n", "3", "--gate", "h:3", "--no-verify", "--format", "text")
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "register 3"
        assert "begin H 3 a" in lines
        assert not any("branches pass" in line for line in lines)

    def test_even_register_rejected(self, capsys):
        code, _, err = run(capsys, "compile", "--n", "4", "--gate", "h:1")
        assert code == 2
        assert "error:" in err

    def test_bad_gate(self, capsys):
        code, _, _ = run(capsys, "compile", "--n", "3", "--gate", "t:1")
        assert code == 2

    def test_branch_cap(self, capsys):
        code, _, err = run(capsys, "compile", "--n", "5", "--gate", "h:1", "--branch-cap", "6")
        assert code == 2
        assert "above the cap of 6" in err


@pytest.mark.parametrize("argv", [[], ["frobnicate"], ["compile", "--n", "three"]])
def test_usage_errors(capsys, argv):
    assert main(argv) == 2


def test_lattice_text_export(capsys):
    code, out, _ = run(capsys, "lattice-build", "--size", "3", "--format", "text")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "n=13 k=1 valid=True"
    assert len(lines[lines.index("generators:") + 1:]) == 12
