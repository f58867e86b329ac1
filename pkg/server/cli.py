"""Command-line front end.

Exit codes: 0 success, 1 negative verdict, 2 usage or input error.
"""

import argparse
import logging
import sys
from typing import Optional, Sequence

from pydantic import BaseModel, ValidationError

from src.anyon_model import builtin_model, model_check
from src.defect_scheme import builtin_scheme, load_scheme, scheme_report
from src.deformation import run_braid_spec
from src.errors import DefectError
from src.lattice_code import lattice_report, planar_patch
from src.models import (
    BraidSpec,
    CompileReport,
    DeformReport,
    LatticeReport,
    LatticeSpec,
    ModelCheckReport,
    ModelSpec,
    OutputFormat,
    RunConfig,
    SchemeReport,
)
from src.universal_compiler import compile_report
from src.utils import builtin_path, load_spec, setup_logging, write_output

logger = logging.getLogger(__name__)

SUBCOMMANDS = ("model-check", "scheme-braid", "lattice-build", "deform-run", "compile", "serve")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="defects", description=__doc__.splitlines()[0])
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--input", help="declarative JSON document")
    parser.add_argument("--builtin", help="name of a built-in model, scheme or braid")
    parser.add_argument("--wall", help="domain wall to test (model-check)")
    parser.add_argument("--n", type=int, help="data qubits of the universal register")
    parser.add_argument("--gate", help="gates to compile, e.g. h:3 or ccz:1,2,5;swap:1")
    parser.add_argument("--size", type=int, help="planar patch distance (lattice-build)")
    parser.add_argument("--max-weight", type=int, help="distance search limit (lattice-build)")
    parser.add_argument("--bound", type=int, default=10_000, help="group enumeration bound")
    parser.add_argument("--branch-cap", type=int, default=12, help="simulated qubit cap")
    parser.add_argument("--distance-floor", type=int, default=2)
    parser.add_argument("--format", choices=[f.value for f in OutputFormat], default="json")
    parser.add_argument("--no-verify", action="store_true", help="compile without branch verification")
    parser.add_argument("--out", help="write the report here instead of stdout")
    parser.add_argument("--host", default="0.0.0.0")
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        subcommand=args.subcommand,
        input=args.input,
        builtin=args.builtin,
        wall=args.wall,
        n=args.n,
        gate=args.gate,
        size=args.size,
        max_weight=args.max_weight,
        bound=args.bound,
        branch_cap=args.branch_cap,
        distance_floor=args.distance_floor,
        format=args.format,
        verify=not args.no_verify,
        out=args.out,
    )


class UsageError(Exception):
    pass


def _source(config: RunConfig, what: str) -> str:
    if config.input is None and config.builtin is None:
        raise UsageError(f"{config.subcommand} needs --input or --builtin {what}")
    return config.input or config.builtin


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_model_check(config: RunConfig) -> tuple[ModelCheckReport, bool]:
    _source(config, "<model>")
    if config.input is not None:
        spec = load_spec(config.input, ModelSpec)
    else:
        spec = builtin_model(config.builtin).to_spec()
    report = model_check(spec, config.wall)
    eligible = report.eligibility.eligible if report.eligibility else True
    return report, report.valid and eligible


def cmd_scheme_braid(config: RunConfig) -> tuple[SchemeReport, bool]:
    _source(config, "<scheme>")
    setup = load_scheme(config.input) if config.input else builtin_scheme(config.builtin)
    report = scheme_report(setup, bound=config.bound)
    return report, report.all_clifford


def cmd_lattice_build(config: RunConfig) -> tuple[LatticeReport, bool]:
    if config.input is not None:
        spec = load_spec(config.input, LatticeSpec)
    elif config.size is not None:
        spec = planar_patch(config.size)
    else:
        raise UsageError("lattice-build needs --input or --size")
    report = lattice_report(spec, max_weight=config.max_weight)
    return report, report.validation.valid


def cmd_deform_run(config: RunConfig) -> tuple[DeformReport, bool]:
    path = config.input or builtin_path("braids", _source(config, "<braid>"))
    spec = load_spec(path, BraidSpec)
    if spec.distance_floor is None:
        spec = spec.model_copy(update={"distance_floor": config.distance_floor})
    report = run_braid_spec(spec)
    return report, report.passed is not False


def cmd_compile(config: RunConfig) -> tuple[CompileReport, bool]:
    if config.n is None or config.gate is None:
        raise UsageError("compile needs --n and --gate")
    report = compile_report(config.n, config.gate, run_verify=config.verify, cap=config.branch_cap)
    verified = report.verification is None or report.verification.verdict
    return report, report.dataflow_ok and verified


COMMANDS = {
    "model-check": cmd_model_check,
    "scheme-braid": cmd_scheme_braid,
    "lattice-build": cmd_lattice_build,
    "deform-run": cmd_deform_run,
    "compile": cmd_compile,
}


# ---------------------------------------------------------------------------
# Text rendering
# ---------------------------------------------------------------------------


def _tableau_lines(tableau: dict[str, str]) -> list[str]:
    return [f"  {key} -> {value}" for key, value in tableau.items()]


def render_text(report: BaseModel) -> str:
    if isinstance(report, ModelCheckReport):
        lines = [f"model {report.model} (D={report.D}): {'valid' if report.valid else 'invalid'}"]
        lines += [f"  problem: {p}" for p in report.problems]
        e = report.eligibility
        if e is not None and e.eligible:
            lines.append(
                f"wall {e.wall}: eligible, a={e.witness_a} b={e.witness_b} "
                f"twist dimension {e.twist_dimension}"
            )
        elif e is not None:
            lines.append(f"wall {e.wall}: not eligible ({e.reason})")
        return "\n".join(lines)
    if isinstance(report, SchemeReport):
        lines = [f"scheme {report.name}: {len(report.qubits)} qubits {' '.join(report.qubits)}"]
        for move in report.moves:
            lines.append(f"{move.name} ({move.kind} {','.join(move.defects)})")
            lines += _tableau_lines(move.tableau)
        suffix = " (truncated)" if report.truncated else ""
        lines.append(f"group order {report.group_order}{suffix}")
        return "\n".join(lines)
    if isinstance(report, LatticeReport):
        lines = [f"n={report.n} k={report.k} valid={report.validation.valid}"]
        if report.validation.violation:
            lines.append(f"  violation: {report.validation.violation}")
        if report.distance is not None:
            d = report.distance
            found = f"distance {d.distance}" if d.found else "no logical"
            lines.append(f"{found} (searched up to weight {d.searched_up_to})")
        for i, (xl, zl) in enumerate(report.logicals):
            lines.append(f"logical {i}: X {xl}  Z {zl}")
        if report.sketch:
            lines.append(report.sketch)
        lines.append("generators:")
        lines += report.generators
        return "\n".join(lines)
    if isinstance(report, DeformReport):
        lines = [f"n={report.n} k={report.k} steps={report.steps}"]
        lines += _tableau_lines(report.tableau)
        if report.passed is not None:
            lines.append("matches expected gate" if report.passed else "differs from expected gate")
        return "\n".join(lines)
    if isinstance(report, CompileReport):
        lines = [f"register {report.n}"] + report.program
        r = report.resources
        lines.append(
            f"# gadgets={r.gadgets} measurements={r.measurements} "
            f"transversal={r.global_transversal} braids={r.braids}"
        )
        v = report.verification
        if v is not None:
            lines.append(f"# {v.passed_count}/{v.branch_count} branches pass")
            if v.first_failure is not None:
                lines.append(
                    f"# first failure: outcomes {v.first_failure.outcomes or '-'} "
                    f"input {v.first_failure.failing_input}"
                )
        return "\n".join(lines)
    return report.model_dump_json(indent=2)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    setup_logging(logging.DEBUG if args.verbose else logging.INFO)

    try:
        config = config_from_args(args)
    except ValidationError as e:
        print(f"error: {e.errors()[0]['msg']}", file=sys.stderr)
        return 2
    logger.debug(f"Running {config.subcommand} with {config.model_dump(exclude_none=True)}")

    if config.subcommand == "serve":
        from server import serve

        serve(config, host=args.host, port=args.port)
        return 0

    try:
        report, ok = COMMANDS[config.subcommand](config)
    except (UsageError, DefectError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2

    if config.format == OutputFormat.TEXT:
        text = render_text(report)
    else:
        text = report.model_dump_json(indent=2)
    write_output(text, config.out)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
