# src/deq_library/__init__.py
import logging
from typing import TYPE_CHECKING

from .error_handler import DeqError
from .mesh import PlanarMap, TriMesh
from .mesh_io import load_mesh, save_mesh

logging.getLogger("deq_library").addHandler(logging.NullHandler())

# For type checkers, import the heavy entry points statically.
# At runtime they are lazy-loaded via __getattr__ (triangle, matplotlib).
if TYPE_CHECKING:
    from .pipeline import (
        PipelineReport,
        area_preserving_parameterize,
        density_equalize,
        equalize,
    )
    from .population import PopulationSpec
    from .diffusion import DiffusionConfig
    from .sea import SeaConfig
    from .remesh import RemeshSpec, remesh_surface

__all__ = [
    "DeqError",
    "TriMesh",
    "PlanarMap",
    "load_mesh",
    "save_mesh",
    "PipelineReport",
    "density_equalize",
    "area_preserving_parameterize",
    "equalize",
    "PopulationSpec",
    "DiffusionConfig",
    "SeaConfig",
    "RemeshSpec",
    "remesh_surface",
]

_LAZY = {
    "PipelineReport": "pipeline",
    "density_equalize": "pipeline",
    "area_preserving_parameterize": "pipeline",
    "equalize": "pipeline",
    "PopulationSpec": "population",
    "DiffusionConfig": "diffusion",
    "SeaConfig": "sea",
    "RemeshSpec": "remesh",
    "remesh_surface": "remesh",
}


def __getattr__(name):
    """Lazy-load the pipeline entry points to speed up module import."""
    module_name = _LAZY.get(name)
    if module_name is not None:
        import importlib

        module = importlib.import_module(f".{module_name}", __name__)
        return getattr(module, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
