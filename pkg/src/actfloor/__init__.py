"""Human-centric floorplan toolkit: activity simulation, retrieval-based
generation, vectorization, and evaluation utilities."""

from .core import (
    BoundaryImage,
    RasterFloorplan,
    RoomLabel,
    extract_boundary,
    load_floorplan,
    save_floorplan,
    split_dataset,
)
from .errors import ActfloorError

__version__ = "0.1.0"

__all__ = [
    "ActfloorError",
    "BoundaryImage",
    "RasterFloorplan",
    "RoomLabel",
    "extract_boundary",
    "load_floorplan",
    "save_floorplan",
    "split_dataset",
    "__version__",
]
