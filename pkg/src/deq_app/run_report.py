# src/deq_app/run_report.py
"""
JSON run report of the CLI, plus its console rendering.

The schema is versioned; keys are emitted in a fixed order so two identical
runs differ only in `wall_time`.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from rich.console import Console
from rich.table import Table

from deq_library.pipeline import PipelineReport
from deq_library.utils.resilient_io import safe_write_json

lib_logger = logging.getLogger("deq_library")

SCHEMA_VERSION = 1


def _finite(value: Any) -> Any:
    """Replace non-finite floats (which JSON cannot carry) with None."""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _finite(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(v) for v in value]
    return value


@dataclass(frozen=True)
class RunReport:
    """One CLI run: input, the pipeline report and the flags it ran with."""

    command: str
    input_path: str
    pipeline: PipelineReport
    flags: Dict[str, Any] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return self.pipeline.diffusion.iterations

    @property
    def trace(self) -> List[float]:
        return list(self.pipeline.diffusion.trace)

    def to_dict(self) -> Dict[str, Any]:
        diffusion = self.pipeline.diffusion
        density = diffusion.land_density
        data = {
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "input": self.input_path,
            "faces": self.pipeline.n_faces,
            "vertices": self.pipeline.n_vertices,
            "init": self.pipeline.init_kind,
            "iterations": diffusion.iterations,
            "converged": diffusion.converged,
            "dt": diffusion.dt,
            "trace": list(diffusion.trace),
            "land_density": {
                "median": density.median,
                "iqr": density.iqr,
                "sd_over_mean": density.sd_over_mean,
            },
            "wall_time": self.pipeline.wall_time,
            "flags": dict(sorted(self.flags.items())),
            "outputs": dict(sorted(self.outputs.items())),
            "details": self.pipeline.to_dict(),
        }
        return _finite(data)

    def write(self, path: Union[str, Path]) -> None:
        """Write the report as JSON. Raises MeshWriteError on failure."""
        safe_write_json(path, self.to_dict(), lib_logger)
        lib_logger.info(f"Wrote run report to {path}")


def print_summary(report: PipelineReport, console: Optional[Console] = None) -> None:
    """Table of the headline numbers of one run."""
    console = console or Console()
    diffusion = report.diffusion
    table = Table(title="Density-equalizing map", show_header=False)
    table.add_column("quantity", style="bold")
    table.add_column("value")
    table.add_row("faces / vertices", f"{report.n_faces} / {report.n_vertices}")
    table.add_row("initial map", report.init_kind)
    table.add_row("initial flips", str(report.initial_flips))
    table.add_row(
        "iterations",
        f"{diffusion.iterations}"
        + ("" if diffusion.converged else " [yellow](iteration cap reached)[/yellow]"),
    )
    table.add_row("time step", f"{diffusion.dt:.4g}")
    table.add_row(
        "land density median / IQR",
        f"{diffusion.land_density.median:.4f} / {diffusion.land_density.iqr:.4f}",
    )
    table.add_row("land density sd/mean", f"{diffusion.land_density.sd_over_mean:.3e}")
    if report.area_ratio is not None:
        table.add_row(
            "area ratio median / sd/mean",
            f"{report.area_ratio.median:.4f} / {report.area_ratio.sd_over_mean:.3e}",
        )
    table.add_row("wall time", f"{report.wall_time:.2f}s")
    console.print(table)
