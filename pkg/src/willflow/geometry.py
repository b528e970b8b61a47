"""Per-vertex discrete curvature and differential operators.

Conventions: vertex areas are barycentric (one third of each incident face),
the Laplace-Beltrami operator is the cotangent Laplacian divided by the vertex
area, and normals point outward.  With ``Δf = -2 H ν`` a round sphere of
radius ``r`` has ``H = +1/r`` and ``K = 1/r**2``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import DegenerateMesh, DomainError
from .mesh import DEGENERATE_AREA_FACTOR, TriangleMesh

logger = logging.getLogger(__name__)

#: vertex normals with a weighted-sum norm below this are undefined
NORMAL_EPS = 1e-12


@dataclass(frozen=True)
class VertexField:
    """Per-vertex scalar or 3-vector values tied to one mesh."""

    mesh_id: int
    values: np.ndarray
    kind: str  # "scalar" or "vector"

    def __post_init__(self):
        if self.kind not in ("scalar", "vector"):
            raise DomainError(f"unknown field kind {self.kind!r}")
        if not np.all(np.isfinite(self.values)):
            raise DegenerateMesh("vertex field has non-finite entries")

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __len__(self):
        return len(self.values)


def _field(mesh: TriangleMesh, values, kind="scalar") -> VertexField:
    values = np.asarray(values, dtype=np.float64)
    values.setflags(write=False)
    return VertexField(mesh.mesh_id, values, kind)


class Geometry(NamedTuple):
    va: np.ndarray  # barycentric vertex areas
    normals: np.ndarray  # unit outward vertex normals
    hvec: np.ndarray  # mean-curvature vector Δf/2 = -H ν
    H: np.ndarray
    K: np.ndarray
    cots: np.ndarray  # per-corner cotangents (F, 3)
    min_face_area: float


def geometry(mesh: TriangleMesh) -> Geometry:
    """All per-vertex curvature data of a mesh, computed once and cached."""
    cached = mesh._cache.get("geometry")
    if cached is not None:
        return cached
    va, nsum, lapx, angle_sum, cots, min_area = kernels.vertex_geometry(mesh)
    threshold = DEGENERATE_AREA_FACTOR * mesh.bbox_diag() ** 2
    if not min_area > threshold:
        raise DegenerateMesh(f"face area {min_area:.3g} below threshold {threshold:.3g}")
    if not np.all(np.isfinite(cots)):
        raise DegenerateMesh("cotangent weights overflowed")
    nn = np.linalg.norm(nsum, axis=1)
    # nsum carries twice the face areas; the documented threshold is on sum(A_f n_f)
    if np.any(0.5 * nn < NORMAL_EPS):
        raise DegenerateMesh("vertex normal undefined (area-weighted normals cancel)")
    normals = nsum / nn[:, None]
    hvec = lapx / (2.0 * va[:, None])
    mag = np.linalg.norm(hvec, axis=1)
    H = np.where(np.einsum("ij,ij->i", hvec, normals) > 0.0, -mag, mag)
    K = (2.0 * np.pi - angle_sum) / va
    for a in (va, normals, hvec, H, K, cots):
        a.setflags(write=False)
    geo = Geometry(va, normals, hvec, H, K, cots, min_area)
    mesh._cache["geometry"] = geo
    return geo


def vertex_areas(mesh: TriangleMesh) -> VertexField:
    return _field(mesh, geometry(mesh).va)


def vertex_normals(mesh: TriangleMesh) -> VertexField:
    """Area-weighted average of incident face normals, normalized."""
    return _field(mesh, geometry(mesh).normals, "vector")


def mean_curvature(mesh: TriangleMesh):
    """Return ``(H, Hvec)``.

    ``Hvec`` is the cotangent position Laplacian over twice the vertex area,
    i.e. ``Δf / 2``, which points inward on convex regions.  The scalar ``H``
    is its magnitude, signed positive when ``Hvec`` opposes the outward normal.
    """
    g = geometry(mesh)
    return _field(mesh, g.H), _field(mesh, g.hvec, "vector")


def gauss_curvature(mesh: TriangleMesh) -> VertexField:
    """Angle defect divided by vertex area."""
    return _field(mesh, geometry(mesh).K)


def _values_for(mesh: TriangleMesh, u) -> np.ndarray:
    if isinstance(u, VertexField):
        if u.mesh_id != mesh.mesh_id:
            raise DomainError("vertex field belongs to a different mesh")
        u = u.values
    u = np.asarray(u, dtype=np.float64)
    if len(u) != mesh.n_vertices:
        raise DomainError(f"field has {len(u)} values for {mesh.n_vertices} vertices")
    return u


def laplace_beltrami(mesh: TriangleMesh, u) -> VertexField:
    """Cotangent Laplace-Beltrami of a scalar field (negative semidefinite)."""
    g = geometry(mesh)
    vals = _values_for(mesh, u)
    lap = kernels.cot_laplacian(mesh.faces, g.cots, vals)
    if vals.ndim == 1:
        return _field(mesh, lap / g.va)
    return _field(mesh, lap / g.va[:, None], "vector")


def curvature_norms(mesh: TriangleMesh):
    """Return ``(|A|^2, |A0|^2)`` per vertex.

    ``|A0|^2 = 2 (H^2 - K)`` is clamped at zero, and ``|A|^2`` is assembled as
    ``2 H^2 + |A0|^2`` so the two stay consistent after clamping.
    """
    g = geometry(mesh)
    raw = 2.0 * (g.H**2 - g.K)
    neg = raw < 0.0
    if np.any(neg):
        logger.debug(
            "clamped |A0|^2 at %d vertices, integrated magnitude %.3g",
            int(neg.sum()),
            float(-np.sum(raw[neg] * g.va[neg])),
        )
    a0 = np.maximum(raw, 0.0)
    a2 = 2.0 * g.H**2 + a0
    return _field(mesh, a2), _field(mesh, a0)
