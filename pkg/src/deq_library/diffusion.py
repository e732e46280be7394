# src/deq_library/diffusion.py
"""
Density diffusion on a deforming planar map.

Each step assembles the cotangent Laplacian on the current geometry, takes
one backward Euler step of the vertex density, and moves every vertex along
the density flux. The loop stops once the spread of the face density
(sd / mean) drops below epsilon, then rescales the map so the land keeps
its area.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np

from .error_handler import ConfigurationError, DensityError, NonConvergenceError
from .mesh import PlanarMap
from .operators import (
    DensityField,
    TransitionSet,
    area_weighted_fv,
    cotan_laplacian,
    face_gradient,
    has_nonnegative_weights,
    transitions,
)
from .run_config import RunDefaults
from .sea import AugmentedMap
from .sparse_linalg import solve_spd

lib_logger = logging.getLogger("deq_library")

VELOCITY_MODES = ("fick", "raw_gradient")


@dataclass(frozen=True)
class DiffusionConfig:
    """
    Attributes:
        epsilon: stop once sd(rho_F) / mean(rho_F) < epsilon
        max_iterations: iteration cap
        velocity_mode: "fick" moves vertices with -grad(rho) / rho,
            "raw_gradient" with +grad(rho)
        solve_method: SPD solve method passed to solve_spd
        solver_tol: relative residual tolerance (default RunDefaults.solver_tol())
        require_convergence: raise NonConvergenceError at the cap instead of warning
    """

    epsilon: float = field(default_factory=RunDefaults.epsilon)
    max_iterations: int = field(default_factory=RunDefaults.max_iterations)
    velocity_mode: str = "fick"
    solve_method: str = "auto"
    solver_tol: Optional[float] = None
    require_convergence: bool = False

    def __post_init__(self):
        if not self.epsilon > 0.0:
            raise ConfigurationError(f"epsilon must be positive, got {self.epsilon}")
        if self.max_iterations < 0:
            raise ConfigurationError(
                f"max_iterations must be >= 0, got {self.max_iterations}"
            )
        if self.velocity_mode not in VELOCITY_MODES:
            raise ConfigurationError(
                f"unknown velocity mode '{self.velocity_mode}' "
                f"(use one of {', '.join(VELOCITY_MODES)})"
            )


@dataclass(frozen=True, eq=False)
class DiffusionState:
    """Map and density after `iteration` steps; `trace` holds sd/mean per step."""

    map: PlanarMap
    density: DensityField
    iteration: int
    dt: float
    trace: Tuple[float, ...] = ()


@dataclass(frozen=True)
class DensityStats:
    median: float
    iqr: float
    sd_over_mean: float
    minimum: float
    maximum: float

    @classmethod
    def of(cls, values: np.ndarray) -> "DensityStats":
        values = np.asarray(values, dtype=float)
        q1, median, q3 = np.percentile(values, [25.0, 50.0, 75.0])
        return cls(
            median=float(median),
            iqr=float(q3 - q1),
            sd_over_mean=stopping_functional(values),
            minimum=float(values.min()),
            maximum=float(values.max()),
        )

    def to_dict(self) -> dict:
        return {
            "median": self.median,
            "iqr": self.iqr,
            "sd_over_mean": self.sd_over_mean,
            "min": self.minimum,
            "max": self.maximum,
        }


@dataclass(frozen=True)
class DiffusionReport:
    """
    Outcome of run_to_convergence.

    land_density is the achieved density per land face, population over
    final area, normalized so a perfectly equalized map scores 1.
    scale_factor / scale_center describe the final similarity applied to
    the map.
    """

    iterations: int
    dt: float
    trace: List[float]
    converged: bool
    scale_factor: float
    scale_center: Tuple[float, float]
    land_density: DensityStats
    initial_land_density: DensityStats
    flipped_land_faces: int = 0
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "dt": self.dt,
            "converged": self.converged,
            "trace": list(self.trace),
            "scale_factor": self.scale_factor,
            "land_density": self.land_density.to_dict(),
            "initial_land_density": self.initial_land_density.to_dict(),
            "flipped_land_faces": self.flipped_land_faces,
        }


def stopping_functional(rho_f: np.ndarray) -> float:
    """Population standard deviation over mean."""
    rho_f = np.asarray(rho_f, dtype=float)
    return float(np.std(rho_f) / np.mean(rho_f))


def compute_timestep(rho_f0: np.ndarray, total_area: float) -> float:
    """dt = min(min/mean, mean/max) of the initial face density, times the area."""
    rho_f0 = np.asarray(rho_f0, dtype=float)
    if np.any(rho_f0 <= 0.0):
        raise DensityError("time step needs strictly positive densities")
    mean = float(rho_f0.mean())
    ratio = min(float(rho_f0.min()) / mean, mean / float(rho_f0.max()))
    return ratio * float(total_area)


def _land_areas(planar_map: PlanarMap) -> np.ndarray:
    return np.asarray(planar_map.signed_areas)[planar_map.land_mask]


def achieved_density(population: np.ndarray, areas: np.ndarray) -> np.ndarray:
    """Population over area per face, normalized by the ratio of the totals."""
    population = np.asarray(population, dtype=float)
    areas = np.asarray(areas, dtype=float)
    return (population / areas) / (population.sum() / areas.sum())


def diffusion_step(
    state: DiffusionState,
    cfg: Optional[DiffusionConfig] = None,
    transition_set: Optional[TransitionSet] = None,
) -> DiffusionState:
    """
    One backward Euler step followed by advection.

    Solves (D - dt L) rho_V_new = D rho_V on the current map, converts the
    face gradients of rho_V_new to vertices with the current face areas as
    weights, moves vertices by dt * velocity and averages rho_V_new back onto
    faces. `transition_set` only supplies the topological m_vf.

    Raises:
        DensityError: the solve produced a non-positive vertex density
    """
    cfg = cfg or DiffusionConfig()
    current = state.map
    dt = state.dt
    rho_v = np.asarray(state.density.rho_v)
    ops = transition_set or transitions(current)

    laplacian = cotan_laplacian(current)
    D = laplacian.D
    rho_v_new, report = solve_spd(
        (D - dt * laplacian.L).tocsr(),
        D @ rho_v,
        tol=cfg.solver_tol,
        method=cfg.solve_method,
    )
    bad = np.nonzero(~(rho_v_new > 0.0))[0]
    if bad.size:
        raise DensityError(
            f"vertex density became non-positive at {bad.size} vertices after step "
            f"{state.iteration + 1}; the input population is too extreme"
        )
    if has_nonnegative_weights(laplacian):
        slack = 1e-9 * float(rho_v.max())
        if rho_v_new.min() < rho_v.min() - slack or rho_v_new.max() > rho_v.max() + slack:
            lib_logger.debug(
                f"Step {state.iteration + 1}: density left the range of the previous step"
            )

    gradient_v = area_weighted_fv(current) @ face_gradient(current, rho_v_new)
    if cfg.velocity_mode == "fick":
        velocity = -gradient_v / rho_v_new[:, None]
    else:
        velocity = gradient_v
    moved = current.with_coords(current.coords + dt * velocity)

    flipped = np.nonzero((np.asarray(moved.signed_areas) <= 0.0) & moved.land_mask)[0]
    if flipped.size:
        lib_logger.warning(
            f"Step {state.iteration + 1}: {flipped.size} land faces flipped "
            f"(first: {flipped[:10].tolist()})"
        )

    rho_f_new = ops.m_vf @ rho_v_new
    spread = stopping_functional(rho_f_new)
    lib_logger.debug(
        f"Step {state.iteration + 1}: sd/mean {spread:.4e}, solve residual "
        f"{report.residual:.2e} ({report.method})"
    )
    return DiffusionState(
        map=moved,
        density=DensityField(rho_f_new, rho_v_new),
        iteration=state.iteration + 1,
        dt=dt,
        trace=state.trace + (spread,),
    )


def _land_centroid(planar_map: PlanarMap) -> np.ndarray:
    areas = _land_areas(planar_map)
    centroids = planar_map.coords[planar_map.faces[planar_map.land_mask]].mean(axis=1)
    return (areas[:, None] * centroids).sum(axis=0) / areas.sum()


def run_to_convergence(
    augmented: Union[AugmentedMap, PlanarMap],
    density: DensityField,
    cfg: Optional[DiffusionConfig] = None,
    total_area: Optional[float] = None,
    target_land_area: Optional[float] = None,
) -> Tuple[PlanarMap, DiffusionReport]:
    """
    Iterate diffusion_step until sd/mean of the face density is below
    epsilon or the iteration cap is reached, then scale the map about the
    land centroid so the land area equals `target_land_area`.

    Args:
        augmented: land + sea map (an AugmentedMap or its PlanarMap)
        density: initial densities over all faces
        cfg: stopping and velocity settings
        total_area: area multiplying the time step (default: initial land area)
        target_land_area: land area after the final rescale (default: initial
            land area)

    Returns:
        (final land + sea map, DiffusionReport)

    Raises:
        NonConvergenceError: cap reached with cfg.require_convergence set
    """
    cfg = cfg or DiffusionConfig()
    started = time.perf_counter()
    planar_map = augmented.map if isinstance(augmented, AugmentedMap) else augmented

    initial_areas = _land_areas(planar_map)
    initial_land_area = float(initial_areas.sum())
    total_area = initial_land_area if total_area is None else float(total_area)
    target = initial_land_area if target_land_area is None else float(target_land_area)

    rho_f0 = np.asarray(density.rho_f)
    dt = compute_timestep(rho_f0, total_area)
    population = rho_f0[planar_map.land_mask] * initial_areas
    ops = transitions(planar_map)

    state = DiffusionState(planar_map, density, iteration=0, dt=dt)
    spread = stopping_functional(rho_f0)
    lib_logger.info(
        f"Diffusion start: {planar_map.n_faces} faces, dt {dt:.4g}, sd/mean {spread:.4e}"
    )
    while spread >= cfg.epsilon and state.iteration < cfg.max_iterations:
        state = diffusion_step(state, cfg, ops)
        spread = state.trace[-1]
    converged = spread < cfg.epsilon

    final_map = state.map
    final_areas = _land_areas(final_map)
    scale = math.sqrt(target / float(final_areas.sum()))
    center = _land_centroid(final_map)
    final_map = final_map.with_coords(center + (final_map.coords - center) * scale)
    final_areas = final_areas * scale * scale

    achieved = achieved_density(population, final_areas)
    initial = achieved_density(population, initial_areas)
    flipped = int(np.count_nonzero(final_areas <= 0.0))

    report = DiffusionReport(
        iterations=state.iteration,
        dt=dt,
        trace=list(state.trace),
        converged=converged,
        scale_factor=scale,
        scale_center=(float(center[0]), float(center[1])),
        land_density=DensityStats.of(achieved),
        initial_land_density=DensityStats.of(initial),
        flipped_land_faces=flipped,
        wall_time=time.perf_counter() - started,
    )
    if converged:
        lib_logger.info(
            f"Converged after {report.iterations} iterations; land density median "
            f"{report.land_density.median:.4f}, IQR {report.land_density.iqr:.4f}"
        )
    else:
        lib_logger.warning(
            f"Diffusion stopped at the iteration cap ({cfg.max_iterations}) with "
            f"sd/mean {spread:.4e} >= {cfg.epsilon:g}"
        )
        if cfg.require_convergence:
            raise NonConvergenceError(report)
    return final_map, report


def displacement_profile(
    augmented: AugmentedMap, final_map: PlanarMap, report: DiffusionReport
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Radius and displacement of every sea vertex, in the normalized frame of
    the sea construction, with the final rescale undone.

    Returns:
        (radii of the initial positions, displacement magnitudes)
    """
    center = np.asarray(report.scale_center)
    unscaled = center + (final_map.coords - center) / report.scale_factor
    sea = augmented.map.provenance < 0
    initial = augmented.to_normalized(augmented.map.coords[sea])
    moved = augmented.to_normalized(unscaled[sea])
    return np.linalg.norm(initial, axis=1), np.linalg.norm(moved - initial, axis=1)


def power_law_slope(
    radii: np.ndarray, displacements: np.ndarray, min_radius: float = 1.0
) -> float:
    """Least-squares slope of log(displacement) against log(radius) for radius > min_radius."""
    radii = np.asarray(radii, dtype=float)
    displacements = np.asarray(displacements, dtype=float)
    usable = (radii > min_radius) & (displacements > 0.0)
    if np.count_nonzero(usable) < 2:
        raise ValueError("need at least two positive displacements beyond min_radius")
    slope, _ = np.polyfit(np.log(radii[usable]), np.log(displacements[usable]), 1)
    return float(slope)
