"""Discrete Willmore/Helfrich geometry, volume-constrained Willmore flow and
inequality diagnostics on closed triangle meshes."""

from .errors import (
    ConfigError,
    DegenerateMesh,
    DomainError,
    IoError,
    ParseError,
    StepFailed,
    TopologyError,
)
from .mesh import TriangleMesh, TopologyReport, dilate, load_mesh, save_mesh, validate

__version__ = "0.1.0"
