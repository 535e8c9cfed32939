"""
Command-line entry point: check, solve, catalog, export and converge.

Exit codes: 0 success, 1 mathematical failure, 2 configuration error.
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from dotenv import load_dotenv
from pydantic import ValidationError

from immerse.controller.controller import check_response, solve_response
from immerse.geometry.errors import CONFIGURATION_ERRORS, MATHEMATICAL_ERRORS
from immerse.models.models import RunConfig
from immerse.service.service import convergence_study, obtain_catalog, obtain_check, obtain_solve
from immerse.store.exports import export_archive, save_solution, write_csv, write_json, write_obj

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


def load_config(path: str, args: argparse.Namespace) -> RunConfig:
    """RunConfig from a JSON file with the command-line overrides applied."""
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, ValueError) as e:
        logger.error(f"Error reading config {path}: {e}")
        raise
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "step_refine", None) is not None:
        overrides["step_refine"] = args.step_refine
    if getattr(args, "force", False):
        overrides["force"] = True
    raw.update(overrides)
    if getattr(args, "out", None) is not None:
        raw.setdefault("output", {})["dir"] = args.out
    if getattr(args, "tol", None) is not None:
        key = "check" if args.command == "check" else "verify"
        raw.setdefault("tolerances", {})[key] = args.tol
    return RunConfig.model_validate(raw)


def _out_dir(config: RunConfig) -> Path:
    return Path(config.output.dir)


# ---------------------------------------------------------
# Commands
# ---------------------------------------------------------
def cmd_check(args) -> int:
    config = load_config(args.config, args)
    outcome = obtain_check(config, Path(args.config).parent)
    response = check_response(config, outcome)
    write_json(_out_dir(config) / f"{config.name}_report.json", response.model_dump())
    print(outcome.report.to_frame()[["name", "form", "max_norm", "rms"]].to_string(index=False))
    if not outcome.passed:
        print(f"FAILED: {', '.join(response.violated)} above {outcome.tol:g}")
        return EXIT_FAILURE
    print(f"PASSED: every residual below {outcome.tol:g}")
    return EXIT_OK


def cmd_solve(args) -> int:
    config = load_config(args.config, args)
    outcome = obtain_solve(config, Path(args.config).parent)
    solution = outcome.solution
    out, name, formats = _out_dir(config), config.name, config.output.formats
    if "json" in formats:
        write_json(out / f"{name}_solution.json", solve_response(config, outcome, include_points=False).model_dump())
    if "obj" in formats:
        write_obj(out / f"{name}.obj", solution.display_points(), solution.grid.shape, name)
    if "csv" in formats:
        write_csv(out / f"{name}.csv", solution.to_frame())
    if "npz" in formats:
        save_solution(out / f"{name}.npz", solution)
    for key, value in outcome.solution.verification.residuals().items():
        print(f"{key:>20}: {value:.3e}")
    if outcome.alignment is not None:
        print(f"{'alignment_error':>20}: {outcome.alignment.max_error:.3e}")
    if not outcome.passed:
        print(f"FAILED: {', '.join(outcome.failed)}")
        return EXIT_FAILURE
    print("PASSED")
    return EXIT_OK


def cmd_catalog(args) -> int:
    catalog = obtain_catalog(args.model)
    if args.json:
        print(json.dumps(catalog, indent=2))
        return EXIT_OK
    print(f"Model families ({len(catalog['models'])}):")
    for entry in catalog["models"]:
        print(f"  {entry['family']:<18} {entry['description']}")
        if args.model:
            for key, value in entry["params"].items():
                print(f"      {key}: {value}")
            for constraint in entry["constraints"]:
                print(f"      constraint: {constraint}")
            print(f"      curvature: {entry['curvature']}")
    print(f"G-structure variants ({len(catalog['structures'])}):")
    for entry in catalog["structures"]:
        print(f"  {entry['kind']:<24} G = {entry['group']:<26} fields: {', '.join(entry['fields'])}")
    return EXIT_OK


def cmd_export(args) -> int:
    written = export_archive(args.archive, args.out or ".", tuple(args.format), args.name)
    for kind, path in written.items():
        print(f"{kind}: {path}")
    return EXIT_OK


def cmd_converge(args) -> int:
    config = load_config(args.config, args)
    table = convergence_study(config, args.levels)
    write_csv(_out_dir(config) / f"{config.name}_convergence.csv", table)
    print(table.to_string(index=False))
    return EXIT_OK


COMMANDS = {
    "check": cmd_check,
    "solve": cmd_solve,
    "catalog": cmd_catalog,
    "export": cmd_export,
    "converge": cmd_converge,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="immerse", description="G-structure preserving immersions")
    sub = parser.add_subparsers(dest="command", required=True)

    def run_options(p):
        p.add_argument("config", help="JSON run configuration")
        p.add_argument("--seed", type=int, help="Seed of the random residual samples")
        p.add_argument("--tol", type=float, help="Pass threshold (check or verification)")
        p.add_argument("--out", help="Output directory")
        p.add_argument("--step-refine", type=int, help="Integration substeps per grid edge")
        p.add_argument("--force", action="store_true", help="Solve even when the residual gate fails")

    run_options(sub.add_parser("check", help="Evaluate the compatibility equations"))
    run_options(sub.add_parser("solve", help="Reconstruct and verify the immersion"))
    converge = sub.add_parser("converge", help="Error under successive grid refinements")
    run_options(converge)
    converge.add_argument("--levels", type=int, default=3)

    catalog = sub.add_parser("catalog", help="List model families and G-structure variants")
    catalog.add_argument("--model", help="Show one model family in detail")
    catalog.add_argument("--json", action="store_true", help="Machine-readable output")

    export = sub.add_parser("export", help="Convert a solution archive to OBJ/CSV")
    export.add_argument("archive", help=".npz archive written by solve")
    export.add_argument("--out", help="Output directory")
    export.add_argument("--format", nargs="+", choices=["obj", "csv"], default=["obj", "csv"])
    export.add_argument("--name", help="Output file stem")
    return parser


def main(argv=None) -> int:
    load_dotenv()
    environment = os.getenv("ENVIRONMENT", "development")
    logging.basicConfig(
        format='%(asctime)s %(levelname)-8s %(message)s',
        level=logging.DEBUG if environment == "development" else logging.INFO,
        datefmt='%Y-%m-%d %H:%M:%S',
    )
    logging.getLogger("httpx").setLevel(logging.WARNING)

    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ValidationError, OSError, json.JSONDecodeError) + CONFIGURATION_ERRORS as e:
        logger.error(f"Configuration error: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except MATHEMATICAL_ERRORS as e:
        logger.error(f"Mathematical failure: {e}")
        print(f"failed: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
