"""Certified computation with planar two-map self-affine IFS attractors."""

from .core import (
    AffineMap,
    BoundingSet,
    EventualAddress,
    SystemSpec,
    Word,
    affine_of_word,
    bounding_set,
    normalize_system,
    project,
    project_prefix,
    project_words,
)
from .geometry import ConvexPolygon, Disc

__version__ = "0.1.0"

__all__ = [
    "AffineMap",
    "BoundingSet",
    "ConvexPolygon",
    "Disc",
    "EventualAddress",
    "SystemSpec",
    "Word",
    "affine_of_word",
    "bounding_set",
    "normalize_system",
    "project",
    "project_prefix",
    "project_words",
    "__version__",
]
