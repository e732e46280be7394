# src/deq_app/main.py
"""
deq: density-equalizing maps from the command line.

    deq flatten      --input face.off --population pop.csv --out map.obj --svg map.svg --report r.json
    deq areapreserve --input peaks.off --out map.obj
    deq remesh       --input face.off --population pop.csv --out remeshed.obj
    deq verify       --input face.off

Exit codes: 0 success, 1 invalid input or flags, 2 diffusion did not converge.
"""

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional

# Add the 'src' directory to the Python path
sys.path.append(str(Path(__file__).resolve().parent.parent))

import colorlog
from dotenv import load_dotenv
from rich.console import Console

from deq_library.error_handler import (
    EXIT_NON_CONVERGENCE,
    EXIT_OK,
    EXIT_VALIDATION,
    DeqError,
    classify_error,
    is_validation_error,
)
from deq_library.run_config import RunDefaults
from deq_library.utils.paths import get_env_file
from deq_library.utils.resilient_io import safe_mkdir

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

lib_logger = logging.getLogger("deq_library")


class DeqArgumentParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with the validation code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _gap_spacing(value: str) -> Optional[float]:
    if value == "auto":
        return None
    try:
        spacing = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'auto' or a number, got '{value}'")
    if not spacing > 0.0:
        raise argparse.ArgumentTypeError(f"gap spacing must be positive, got {value}")
    return spacing


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", required=True, help="Input mesh (.off or .obj).")
    parser.add_argument("--log-dir", help="Write deq.log and failures.log here.")
    parser.add_argument("--verbose", action="store_true", help="Log DEBUG messages.")


def _add_pipeline(parser: argparse.ArgumentParser, population: bool) -> None:
    _add_common(parser)
    if population:
        parser.add_argument(
            "--population", help="CSV of face_index,population (default: face areas)."
        )
        parser.add_argument("--regions", help="CSV of face_index,region_id.")
        parser.add_argument(
            "--rules", help="CSV of region_id,multiplier applied to the region areas."
        )
    parser.add_argument("--init", choices=("tutte", "authalic"), default="tutte")
    parser.add_argument(
        "--strict-init",
        action="store_true",
        help="Fall back to Tutte when the authalic map has flipped faces.",
    )
    parser.add_argument("--out", help="Output mesh (.obj or .off).")
    parser.add_argument("--svg", help="SVG drawing of the final map.")
    parser.add_argument("--report", help="JSON run report.")
    parser.add_argument("--dump-density", help="CSV of face_index,density for land faces.")
    parser.add_argument("--no-stroke", action="store_true", help="Draw faces without edges.")
    parser.add_argument("--sea", action="store_true", help="Draw the sea in the SVG.")
    parser.add_argument("--eps", type=float, help="Stopping threshold on sd/mean of density.")
    parser.add_argument("--max-iter", type=int, help="Iteration cap.")
    parser.add_argument(
        "--velocity", choices=("fick", "raw-gradient"), default="fick"
    )
    parser.add_argument("--shrink", type=float, help="Land radius inside the unit disk.")
    parser.add_argument("--truncate-radius", type=float, help="Sea truncation radius.")
    parser.add_argument("--gap-spacing", type=_gap_spacing, default=None, help="'auto' or a number.")
    parser.add_argument(
        "--sea-density-weighted",
        action="store_true",
        help="Sea density is the area-weighted mean of the land density.",
    )
    parser.add_argument("--seed", type=int, help="Seed of the triangulation retry jitter.")


def build_parser() -> argparse.ArgumentParser:
    parser = DeqArgumentParser(
        prog="deq", description="Density-equalizing flattening maps of disk meshes."
    )
    commands = parser.add_subparsers(dest="command", required=True)

    flatten = commands.add_parser("flatten", help="Density-equalizing map for a population.")
    _add_pipeline(flatten, population=True)

    areapreserve = commands.add_parser(
        "areapreserve", help="Area-preserving planar parameterization."
    )
    _add_pipeline(areapreserve, population=False)

    remesh = commands.add_parser("remesh", help="Remesh the surface through the map.")
    _add_pipeline(remesh, population=True)
    spacing = remesh.add_mutually_exclusive_group()
    spacing.add_argument("--spacing", type=float, help="Sample spacing on the map.")
    spacing.add_argument("--samples", type=int, help="Approximate number of samples.")

    verify = commands.add_parser(
        "verify", help="Check topology, boundary convexity and initial flips."
    )
    _add_common(verify)
    verify.add_argument("--init", choices=("tutte", "authalic"), default="tutte")
    return parser


def _configure_logging(verbose: bool, log_dir: Optional[Path]) -> List[logging.Handler]:
    """Attach console (and file) handlers to the root logger; returns them for removal."""
    console_handler = colorlog.StreamHandler(sys.stderr)
    console_handler.setLevel(logging.DEBUG if verbose else logging.INFO)
    console_handler.setFormatter(
        colorlog.ColoredFormatter(
            "%(log_color)s%(message)s",
            log_colors={
                "DEBUG": "cyan",
                "INFO": "green",
                "WARNING": "yellow",
                "ERROR": "red",
                "CRITICAL": "red,bg_white",
            },
        )
    )
    handlers: List[logging.Handler] = [console_handler]

    if log_dir is not None and safe_mkdir(log_dir, lib_logger):
        from deq_library.failure_logger import configure_failure_logger
        from deq_library.utils.paths import get_logs_dir

        logs_dir = get_logs_dir(log_dir)
        file_handler = logging.FileHandler(logs_dir / "deq.log", encoding="utf-8")
        file_handler.setLevel(logging.DEBUG if verbose else logging.INFO)
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handlers.append(file_handler)
        configure_failure_logger(logs_dir)

    root_logger = logging.getLogger()
    root_logger.setLevel(logging.DEBUG)
    for handler in handlers:
        root_logger.addHandler(handler)

    # Silence noisy third-party loggers
    logging.getLogger("matplotlib").setLevel(logging.WARNING)
    return handlers


def _release_logging(handlers: List[logging.Handler]) -> None:
    root_logger = logging.getLogger()
    for handler in handlers:
        root_logger.removeHandler(handler)
        handler.close()


def _population_spec(args: argparse.Namespace, n_faces: int):
    from deq_app.population_io import read_population_csv, read_region_csv, read_rules_csv
    from deq_library.error_handler import ConfigurationError
    from deq_library.population import PopulationSpec

    if getattr(args, "population", None) and getattr(args, "regions", None):
        raise ConfigurationError("use either --population or --regions/--rules, not both")
    if getattr(args, "population", None):
        return PopulationSpec(
            mode="per_face_file", values=read_population_csv(args.population, n_faces)
        )
    if getattr(args, "regions", None) or getattr(args, "rules", None):
        if not (args.regions and args.rules):
            raise ConfigurationError("--regions and --rules must be given together")
        return PopulationSpec.region_scaled(
            read_region_csv(args.regions, n_faces), read_rules_csv(args.rules)
        )
    return PopulationSpec(mode="area")


def _configs(args: argparse.Namespace):
    from deq_library.diffusion import DiffusionConfig
    from deq_library.sea import SeaConfig

    cfg = DiffusionConfig(
        epsilon=args.eps if args.eps is not None else RunDefaults.epsilon(),
        max_iterations=(
            args.max_iter if args.max_iter is not None else RunDefaults.max_iterations()
        ),
        velocity_mode=args.velocity.replace("-", "_"),
    )
    sea_cfg = SeaConfig(
        shrink_radius=args.shrink if args.shrink is not None else RunDefaults.shrink_radius(),
        truncate_radius=(
            args.truncate_radius
            if args.truncate_radius is not None
            else RunDefaults.truncate_radius()
        ),
        gap_spacing=args.gap_spacing,
        density_weighted=args.sea_density_weighted,
        seed=args.seed,
    )
    return cfg, sea_cfg


def _flags_echo(args: argparse.Namespace) -> Dict[str, Any]:
    skipped = {"command", "input", "log_dir", "verbose"}
    return {k: v for k, v in vars(args).items() if k not in skipped}


def _write_density_dump(path: str, density) -> None:
    from deq_library.utils.resilient_io import write_text_atomic

    rows = ["face_index,density"]
    rows += [f"{i},{value:.17g}" for i, value in enumerate(density.tolist())]
    write_text_atomic(path, "\n".join(rows) + "\n")
    lib_logger.info(f"Wrote land face densities to {path}")


def _run_pipeline(args: argparse.Namespace, console: Console) -> int:
    import numpy as np

    from deq_app.run_report import RunReport, print_summary
    from deq_app.svg_writer import write_svg
    from deq_library.diffusion import achieved_density
    from deq_library.mesh_io import load_mesh, save_mesh
    from deq_library.pipeline import equalize

    mesh = load_mesh(args.input)
    spec = _population_spec(args, mesh.n_faces)
    cfg, sea_cfg = _configs(args)

    with console.status("[dim]Equalizing density...", spinner="dots"):
        result = equalize(
            mesh, spec, init=args.init, cfg=cfg, sea_cfg=sea_cfg, strict_init=args.strict_init
        )

    land_map = result.land_map
    density = achieved_density(result.population, np.asarray(land_map.signed_areas))
    outputs: Dict[str, str] = {}

    if args.command == "remesh":
        from deq_library.remesh import RemeshSpec, remesh_surface

        with console.status("[dim]Remeshing...", spinner="dots"):
            remeshed = remesh_surface(
                mesh,
                land_map,
                RemeshSpec(sample_spacing=args.spacing, sample_count=args.samples),
            )
        if args.out:
            save_mesh(remeshed, args.out)
            outputs["mesh"] = args.out
    elif args.out:
        save_mesh(land_map, args.out)
        outputs["mesh"] = args.out

    if args.svg:
        drawn = result.final_map if args.sea else land_map
        write_svg(drawn, density, args.svg, include_sea=args.sea, stroke=not args.no_stroke)
        outputs["svg"] = args.svg
    if args.dump_density:
        _write_density_dump(args.dump_density, density)
        outputs["density"] = args.dump_density
    if args.report:
        RunReport(
            command=args.command,
            input_path=str(args.input),
            pipeline=result.report,
            flags=_flags_echo(args),
            outputs=outputs,
        ).write(args.report)

    print_summary(result.report, console)
    if not result.report.diffusion.converged:
        return EXIT_NON_CONVERGENCE
    return EXIT_OK


def _run_verify(args: argparse.Namespace, console: Console) -> int:
    from rich.table import Table

    from deq_library.boundary import flatten_boundary, verify_convex_simple
    from deq_library.flatten import check_no_flips, initial_flatten
    from deq_library.mesh import boundary_loop_ccw, planar_embedding, validate_disk_topology
    from deq_library.mesh_io import load_mesh

    mesh = load_mesh(args.input)
    diagnostics = validate_disk_topology(mesh)
    table = Table(title=f"verify {Path(args.input).name}", show_header=False)
    table.add_column("check", style="bold")
    table.add_column("value")
    for key, value in diagnostics.to_dict().items():
        table.add_row(key, str(value))

    status = EXIT_OK
    if not diagnostics.is_disk:
        for reason in diagnostics.failure_reasons():
            lib_logger.error(f"Not a disk: {reason}")
        status = EXIT_VALIDATION
    else:
        planar = planar_embedding(mesh)
        if planar is not None:
            table.add_row("planar input", "yes (used as the initial map)")
            table.add_row("initial flips", str(check_no_flips(planar)))
        else:
            flat = flatten_boundary(boundary_loop_ccw(mesh))
            convexity = verify_convex_simple(flat)
            for key, value in convexity.to_dict().items():
                table.add_row(f"boundary {key}", str(value))
            if convexity.passes:
                initial = initial_flatten(mesh, args.init, boundary=flat)
                table.add_row(f"initial flips ({args.init})", str(check_no_flips(initial)))
            else:
                status = EXIT_VALIDATION
    console.print(table)
    return status


def main(argv: Optional[List[str]] = None) -> int:
    """Run the CLI; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_VALIDATION

    # Explicit flags win over the environment, which .env only fills in
    load_dotenv(get_env_file(), override=False)
    log_dir = args.log_dir or RunDefaults.log_dir()
    handlers = _configure_logging(args.verbose, Path(log_dir) if log_dir else None)
    console = Console(stderr=True)
    started = time.time()

    try:
        if args.command == "verify":
            return _run_verify(args, console)
        return _run_pipeline(args, console)
    except (DeqError, OSError) as e:
        classified = classify_error(e)
        if log_dir:
            from deq_library.failure_logger import log_failure

            log_failure(e, {"command": args.command, "input": str(args.input)})
        elif is_validation_error(classified):
            lib_logger.error(f"Invalid input: {type(e).__name__}: {e}")
        else:
            lib_logger.error(f"Run failed ({classified.error_type}): {type(e).__name__}: {e}")
            lib_logger.debug("Failure traceback", exc_info=True)
        return classified.exit_code
    finally:
        lib_logger.debug(f"deq {args.command} finished in {time.time() - started:.2f}s")
        _release_logging(handlers)


if __name__ == "__main__":
    sys.exit(main())
