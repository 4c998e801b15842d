"""Command-line front end.

Subcommands:

    dof        mobility counts for a mechanism (builder name or JSON file)
    nullspace  orthonormal basis of the feasible velocity space, as JSON
    simulate   run one scenario file (or a --batch directory) to CSV
    verify     run a scenario and check its trajectory invariants
    demo       build a named mechanism and show what it does

Exit codes: 0 success, 1 validation error, 2 solver error, 3 failed
verification.  Relative output paths inside a scenario file resolve
against the scenario file's directory, so a batch run drops its
artifacts next to the scenarios themselves.  `simulate --batch` runs the
files concurrently; set GEARNET_THREADS to cap the worker count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .builders import BUILDERS, build_by_name
from .dynamics import Drive, Scenario, SimOptions, simulate, write_trajectory_csv
from .errors import (
    GearnetError,
    GraphValidationError,
    InfeasiblePrescription,
    ScenarioError,
    SingularKKT,
    UnderdeterminedExternal,
)
from .kinematics import mobility, nullspace_basis
from .mechanism import MechanismGraph, Viscous
from .scenario_io import load_scenario
from .verification import check_invariants

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_SOLVER = 2
EXIT_VERIFICATION = 3


class _UsageError(Exception):
    """Bad command line; printed to stderr and mapped to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); keep 2 for solver errors
        raise _UsageError(f"{self.prog}: error: {message}")


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.handler(args)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_VALIDATION
    except (
        ScenarioError,
        GraphValidationError,
        InfeasiblePrescription,
        UnderdeterminedExternal,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SingularKKT as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except GearnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def _build_parser() -> _Parser:
    parser = _Parser(prog="gearnet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_dof = sub.add_parser("dof", help="mobility counts for a mechanism")
    _add_mechanism_args(p_dof)
    p_dof.add_argument("--json", action="store_true", help="emit the report as JSON")
    p_dof.set_defaults(handler=_cmd_dof)

    p_null = sub.add_parser("nullspace", help="feasible velocity basis as JSON")
    _add_mechanism_args(p_null)
    p_null.set_defaults(handler=_cmd_nullspace)

    p_sim = sub.add_parser("simulate", help="run scenario file(s) to trajectory CSV")
    p_sim.add_argument("scenario", nargs="?", help="scenario JSON file")
    p_sim.add_argument(
        "--batch", metavar="DIR", help="run every *.json scenario in DIR concurrently"
    )
    p_sim.add_argument(
        "--verify", action="store_true", help="also check invariants and write a report"
    )
    p_sim.set_defaults(handler=_cmd_simulate)

    p_ver = sub.add_parser("verify", help="run a scenario and check its invariants")
    p_ver.add_argument("scenario", help="scenario JSON file")
    p_ver.add_argument("--report", metavar="PATH", help="write the JSON report here")
    p_ver.set_defaults(handler=_cmd_verify)

    p_demo = sub.add_parser("demo", help="build a named mechanism and show what it does")
    p_demo.add_argument("name", choices=sorted(BUILDERS), help="mechanism to demonstrate")
    p_demo.add_argument(
        "--equal-loads",
        action="store_true",
        help="run the canonical equal-load scenario (3ood only)",
    )
    p_demo.set_defaults(handler=_cmd_demo)
    return parser


def _add_mechanism_args(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--mechanism",
        required=True,
        metavar="NAME_OR_FILE",
        help=f"builder name ({', '.join(sorted(BUILDERS))}) or mechanism JSON file",
    )
    p.add_argument(
        "--param",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="builder parameter, repeatable (numbers parsed as floats)",
    )


def _resolve_mechanism(spec: str, params: list[str]) -> MechanismGraph:
    kwargs = {}
    for item in params:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ScenarioError(f"--param: expected KEY=VALUE, got {item!r}")
        try:
            kwargs[key] = float(raw)
        except ValueError:
            kwargs[key] = raw
    if spec in BUILDERS:
        return build_by_name(spec, **kwargs)
    path = Path(spec)
    if path.is_file():
        if kwargs:
            raise ScenarioError("--param: only valid with a builder name")
        return MechanismGraph.load(path)
    raise ScenarioError(
        f"--mechanism: {spec!r} is neither a builder name "
        f"({', '.join(sorted(BUILDERS))}) nor an existing file"
    )


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def _cmd_dof(args) -> int:
    graph = _resolve_mechanism(args.mechanism, args.param)
    report = mobility(graph)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        print(f"mechanism: {args.mechanism}")
        print(f"shafts={report.n_shafts} constraints={report.n_constraints} rank={report.rank}")
        print(f"external_dof={report.external_dof} nullity={report.nullity}")
    return EXIT_OK


def _cmd_nullspace(args) -> int:
    graph = _resolve_mechanism(args.mechanism, args.param)
    basis = nullspace_basis(graph)
    doc = {
        "shafts": graph.shaft_names(),
        "nullity": basis.shape[1],
        "basis": [basis[:, k].tolist() for k in range(basis.shape[1])],
    }
    print(json.dumps(doc, indent=2))
    return EXIT_OK


def _cmd_simulate(args) -> int:
    if (args.scenario is None) == (args.batch is None):
        raise _UsageError("gearnet simulate: error: give a scenario file or --batch DIR")
    if args.batch is not None:
        return _run_batch(Path(args.batch), args.verify)
    code, lines = _run_scenario_file(Path(args.scenario), args.verify)
    for line in lines:
        print(line)
    return code


def _cmd_verify(args) -> int:
    sf = load_scenario(args.scenario)
    traj = simulate(sf.scenario)
    report = check_invariants(traj)
    for line in report.summary_lines():
        print(line)
    report_path = args.report or sf.report_path
    if report_path is not None:
        target = _resolve_output(Path(args.scenario), report_path)
        report.write(target)
        print(f"report written to {target}")
    if not report.all_passed():
        return EXIT_VERIFICATION
    print("all applicable checks passed")
    return EXIT_OK


def _cmd_demo(args) -> int:
    if args.equal_loads and args.name != "3ood":
        raise _UsageError("gearnet demo: error: --equal-loads only applies to the 3ood demo")
    graph = build_by_name(args.name)
    report = mobility(graph)
    print(f"demo: {args.name}")
    print(
        f"shafts={report.n_shafts} constraints={report.n_constraints} "
        f"external={','.join(graph.external_names())}"
    )
    print(f"external_dof={report.external_dof} nullity={report.nullity}")
    if args.name == "3ood" and args.equal_loads:
        return _demo_equal_loads(graph)
    extra = {
        "2od": "one input splits to two outputs; equal loads turn at the input speed",
        "3ood": "rerun with --equal-loads for the canonical end-to-end scenario",
        "initial": "a single mobility mode: every feasible motion moves all outputs together",
        "2-2d": "two differential pairs behind a splitter; near outputs react more than far ones",
        "multi-axle": "planetary splitter chain; each axle pair divides its share independently",
    }
    print(extra[args.name])
    return EXIT_OK


def _demo_equal_loads(graph: MechanismGraph) -> int:
    """Velocity-driven input at 20 rad/s, identical viscous loads on all outputs."""
    outputs = graph.meta["outputs"]
    scenario = Scenario(
        graph=graph,
        drive=Drive.velocity(20.0),
        loads={name: Viscous(1.0) for name in outputs},
        options=SimOptions(duration=0.5, dt=1e-4),
        name="equal-loads",
    )
    traj = simulate(scenario)
    w_in = traj.omega_of(scenario.drive_shaft())[-1]
    speeds = " ".join(f"{name}={traj.omega_of(name)[-1]:.6f}" for name in outputs)
    print(f"equal-load run: input {w_in:.1f} rad/s, outputs {speeds} rad/s")
    tau_in = traj.drive_torque[-1]
    p_out = sum(1.0 * traj.omega_of(name)[-1] ** 2 for name in outputs)
    print(
        f"input torque {tau_in:.6f}, power in {w_in * tau_in:.6f} W, "
        f"power out {p_out:.6f} W"
    )
    report = check_invariants(traj)
    for line in report.summary_lines():
        print(line)
    if not report.all_passed():
        return EXIT_VERIFICATION
    print("all applicable checks passed")
    return EXIT_OK


# --------------------------------------------------------------------------
# scenario execution
# --------------------------------------------------------------------------


def _resolve_output(scenario_path: Path, target: str | Path) -> Path:
    target = Path(target)
    return target if target.is_absolute() else scenario_path.parent / target


def _run_scenario_file(path: Path, verify: bool) -> tuple[int, list[str]]:
    """Simulate one scenario file; returns (exit code, stdout lines)."""
    sf = load_scenario(path)
    traj = simulate(sf.scenario)
    csv_path = _resolve_output(path, sf.trajectory_path or path.with_suffix(".csv").name)
    write_trajectory_csv(traj, csv_path)
    lines = [f"{path}: wrote {csv_path}"]
    if verify or sf.report_path is not None:
        report = check_invariants(traj)
        if sf.report_path is not None:
            report_path = _resolve_output(path, sf.report_path)
            report.write(report_path)
            lines.append(f"{path}: wrote {report_path}")
        n_ok = sum(1 for r in report.applicable() if r.passed)
        lines.append(f"{path}: {n_ok}/{len(report.applicable())} applicable checks passed")
        if verify and not report.all_passed():
            for r in report.failed():
                lines.append(
                    f"{path}: FAIL {r.check} (max rel residual {r.max_rel_residual:.3e})"
                )
            return EXIT_VERIFICATION, lines
    return EXIT_OK, lines


def _batch_workers() -> int:
    env = os.environ.get("GEARNET_THREADS", "").strip()
    if env:
        try:
            workers = int(env)
        except ValueError:
            raise ScenarioError(f"GEARNET_THREADS: expected an integer, got {env!r}") from None
        if workers < 1:
            raise ScenarioError(f"GEARNET_THREADS: must be >= 1, got {workers}")
        return workers
    return os.cpu_count() or 1


def _run_batch(directory: Path, verify: bool) -> int:
    if not directory.is_dir():
        raise ScenarioError(f"--batch: {directory} is not a directory")
    files = sorted(directory.glob("*.json"))
    if not files:
        raise ScenarioError(f"--batch: no *.json scenario files in {directory}")

    def run_one(path: Path) -> tuple[int, list[str]]:
        try:
            return _run_scenario_file(path, verify)
        except (ScenarioError, GraphValidationError, GearnetError, OSError) as exc:
            return EXIT_VALIDATION, [f"{path}: error: {exc}"]

    with ThreadPoolExecutor(max_workers=_batch_workers()) as pool:
        results = list(pool.map(run_one, files))
    worst = EXIT_OK
    for code, lines in results:
        for line in lines:
            print(line)
        worst = max(worst, code)
    print(f"batch: {sum(1 for c, _ in results if c == EXIT_OK)}/{len(files)} scenarios succeeded")
    return worst


if __name__ == "__main__":
    sys.exit(main())
