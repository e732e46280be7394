# src/deq_library/pipeline.py
"""
End-to-end density-equalizing maps of disk surfaces.

    validate -> flatten (skipped for planar input) -> land density
    -> sea -> diffusion -> strip the sea
"""

import logging
import time
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .boundary import ConvexityReport, flatten_boundary, verify_convex_simple
from .diffusion import DensityStats, DiffusionConfig, DiffusionReport, run_to_convergence
from .error_handler import TopologyError
from .flatten import check_no_flips, initial_flatten
from .mesh import (
    MeshDiagnostics,
    PlanarMap,
    TriMesh,
    boundary_loop_ccw,
    planar_embedding,
    validate_disk_topology,
)
from .population import PopulationSpec, resolve_population
from .sea import AugmentedMap, SeaConfig, build_sea, extend_density

lib_logger = logging.getLogger("deq_library")


@dataclass(frozen=True)
class PipelineReport:
    """Everything measured along one density_equalize run."""

    n_vertices: int
    n_faces: int
    init_kind: str
    planar_input: bool
    diagnostics: MeshDiagnostics
    boundary: Optional[ConvexityReport]
    initial_flips: int
    flattening_density: DensityStats
    sea: dict
    diffusion: DiffusionReport
    area_ratio: Optional[DensityStats] = None
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        data = {
            "faces": self.n_faces,
            "vertices": self.n_vertices,
            "init": self.init_kind,
            "planar_input": self.planar_input,
            "diagnostics": self.diagnostics.to_dict(),
            "boundary": self.boundary.to_dict() if self.boundary else None,
            "initial_flips": self.initial_flips,
            "flattening_density": self.flattening_density.to_dict(),
            "sea": dict(self.sea),
            "diffusion": self.diffusion.to_dict(),
        }
        if self.area_ratio is not None:
            data["area_ratio"] = self.area_ratio.to_dict()
        return data


@dataclass(frozen=True, eq=False)
class EqualizationResult:
    """Intermediate and final maps of one run, for callers that need more than the land."""

    mesh: TriMesh
    population: np.ndarray
    initial_map: PlanarMap
    augmented: AugmentedMap
    final_map: PlanarMap
    land_map: PlanarMap
    report: PipelineReport


def flattening_density_stats(mesh: TriMesh, planar_map: PlanarMap) -> DensityStats:
    """
    Spread of 3D face area over flattened face area, normalized by the ratio
    of the totals (1 everywhere for an area-preserving flattening).
    """
    flat_areas = np.abs(np.asarray(planar_map.signed_areas))[: mesh.n_faces]
    areas = np.asarray(mesh.face_areas)
    ratio = (areas / flat_areas) / (areas.sum() / flat_areas.sum())
    return DensityStats.of(ratio)


def _require_disk(mesh: TriMesh) -> MeshDiagnostics:
    diagnostics = validate_disk_topology(mesh)
    if not diagnostics.is_disk:
        raise TopologyError(
            "input is not a simply-connected open surface: "
            + "; ".join(diagnostics.failure_reasons())
        )
    return diagnostics


def equalize(
    mesh: TriMesh,
    spec: Optional[PopulationSpec] = None,
    init: str = "tutte",
    cfg: Optional[DiffusionConfig] = None,
    sea_cfg: Optional[SeaConfig] = None,
    strict_init: bool = False,
) -> EqualizationResult:
    """
    Run the whole pipeline and keep every intermediate map.

    Raises:
        TopologyError: the mesh is not a disk
        DensityError / ConfigurationError: bad population
        FlippedFaceError, TriangulationError, SolverError: numerical failures
        NonConvergenceError: only with cfg.require_convergence
    """
    started = time.perf_counter()
    spec = spec or PopulationSpec(mode="area")
    cfg = cfg or DiffusionConfig()
    sea_cfg = sea_cfg or SeaConfig()

    diagnostics = _require_disk(mesh)
    population = resolve_population(mesh, spec)

    initial_map = planar_embedding(mesh)
    convexity = None
    if initial_map is not None:
        lib_logger.info("Input is planar; using it as the initial map")
        init_kind = "planar"
    else:
        flat_boundary = flatten_boundary(boundary_loop_ccw(mesh))
        convexity = verify_convex_simple(flat_boundary)
        initial_map = initial_flatten(mesh, init, strict=strict_init, boundary=flat_boundary)
        init_kind = init
    flips = check_no_flips(initial_map)
    flattening = flattening_density_stats(mesh, initial_map)
    lib_logger.info(
        f"Initial map ({init_kind}): {flips} flipped faces, area distortion "
        f"IQR {flattening.iqr:.4f}"
    )

    rho_f_land = population / np.abs(np.asarray(initial_map.signed_areas))
    augmented = build_sea(initial_map, sea_cfg)
    density = extend_density(augmented, rho_f_land, weighted=sea_cfg.density_weighted)

    surface_area = float(np.sum(mesh.face_areas))
    final_map, diffusion_report = run_to_convergence(
        augmented,
        density,
        cfg,
        total_area=surface_area,
        target_land_area=surface_area,
    )
    land_map = final_map.land_only()

    report = PipelineReport(
        n_vertices=mesh.n_vertices,
        n_faces=mesh.n_faces,
        init_kind=init_kind,
        planar_input=init_kind == "planar",
        diagnostics=diagnostics,
        boundary=convexity,
        initial_flips=flips,
        flattening_density=flattening,
        sea=augmented.stats(),
        diffusion=diffusion_report,
        area_ratio=(
            DensityStats.of(np.asarray(mesh.face_areas) / np.asarray(land_map.signed_areas))
            if spec.mode == "area"
            else None
        ),
        wall_time=time.perf_counter() - started,
    )
    return EqualizationResult(
        mesh=mesh,
        population=population,
        initial_map=initial_map,
        augmented=augmented,
        final_map=final_map,
        land_map=land_map,
        report=report,
    )


def density_equalize(
    mesh: TriMesh,
    spec: Optional[PopulationSpec] = None,
    init: str = "tutte",
    cfg: Optional[DiffusionConfig] = None,
    sea_cfg: Optional[SeaConfig] = None,
    strict_init: bool = False,
) -> Tuple[PlanarMap, PipelineReport]:
    """Density-equalizing map of `mesh` for the population `spec`; returns the land map."""
    result = equalize(mesh, spec, init, cfg, sea_cfg, strict_init)
    return result.land_map, result.report


def area_preserving_parameterize(
    mesh: TriMesh,
    init: str = "tutte",
    cfg: Optional[DiffusionConfig] = None,
    sea_cfg: Optional[SeaConfig] = None,
    strict_init: bool = False,
) -> Tuple[PlanarMap, PipelineReport]:
    """
    Planar parameterization preserving face areas: density_equalize with the
    3D face areas as population. report.area_ratio holds the per-face
    (3D area / final planar area) statistics.
    """
    return density_equalize(
        mesh, PopulationSpec(mode="area"), init, cfg, sea_cfg, strict_init
    )
