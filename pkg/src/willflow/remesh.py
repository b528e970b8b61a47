"""Mesh-quality maintenance for long flows: Delaunay edge flips followed by
tangential vertex smoothing.

Neither operation changes the topology.  A remesh that would move area or
enclosed volume by more than ``max_relative_change`` is scaled back and, in
the worst case, skipped.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import functionals as fn
from .errors import DegenerateMesh, DomainError, WillflowError
from .mesh import TriangleMesh, require_valid, validate

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RemeshParams:
    flip: bool = True
    smooth_iterations: int = 1
    smooth_weight: float = 0.3
    #: largest angle (radians) between the two face normals of a flippable edge
    max_flip_dihedral: float = 0.5
    max_relative_change: float = 0.005

    def __post_init__(self):
        if self.smooth_iterations < 0 or not 0 <= self.smooth_weight <= 1:
            raise DomainError("smoothing needs iterations >= 0 and weight in [0, 1]")
        if not self.max_relative_change > 0:
            raise DomainError("max_relative_change must be positive")


def min_angles(mesh: TriangleMesh) -> np.ndarray:
    """Smallest interior angle of every face, in radians."""
    p = mesh.positions[mesh.faces]
    out = np.full(len(p), np.pi)
    for j in range(3):
        u = p[:, (j + 1) % 3] - p[:, j]
        v = p[:, (j + 2) % 3] - p[:, j]
        cross = np.linalg.norm(np.cross(u, v), axis=1)
        out = np.minimum(out, np.arctan2(cross, np.einsum("ij,ij->i", u, v)))
    return out


def _cot(p, a, b):
    # cotangent of the angle at p between rays to a and b
    u, v = a - p, b - p
    return float(np.dot(u, v) / np.linalg.norm(np.cross(u, v)))


def flip_edges(mesh: TriangleMesh, max_dihedral: float = 0.5, max_passes: int = 10) -> TriangleMesh:
    """Flip non-Delaunay edges whose two faces are nearly coplanar."""
    pos = mesh.positions
    faces = [list(f) for f in mesh.faces.tolist()]
    where = {}  # directed edge (a, b) -> face index
    for fi, (a, b, c) in enumerate(faces):
        where[(a, b)] = where[(b, c)] = where[(c, a)] = fi
    valence = np.bincount(mesh.edges.ravel(), minlength=mesh.n_vertices)
    cos_max = math.cos(max_dihedral)

    def third(f, a, b):
        for v in faces[f]:
            if v != a and v != b:
                return v

    flips = 0
    for _ in range(max_passes):
        changed = False
        for a, b in sorted(k for k in where if k[0] < k[1]):
            if (a, b) not in where:
                continue
            f1, f2 = where[(a, b)], where[(b, a)]
            c, d = third(f1, a, b), third(f2, b, a)
            if c == d or (c, d) in where or valence[a] <= 3 or valence[b] <= 3:
                continue
            pa, pb, pc, pd = pos[a], pos[b], pos[c], pos[d]
            if _cot(pc, pa, pb) + _cot(pd, pa, pb) >= 0.0:
                continue
            n1 = np.cross(pb - pa, pc - pa)
            n2 = np.cross(pa - pb, pd - pb)
            m1 = np.cross(pd - pa, pc - pa)
            m2 = np.cross(pc - pb, pd - pb)
            if np.dot(n1, n2) < cos_max * np.linalg.norm(n1) * np.linalg.norm(n2):
                continue
            # the new faces must keep the orientation of the old ones
            if np.dot(m1, n1 + n2) <= 0.0 or np.dot(m2, n1 + n2) <= 0.0:
                continue
            for e in ((a, b), (b, c), (c, a), (b, a), (a, d), (d, b)):
                del where[e]
            faces[f1] = [a, d, c]
            faces[f2] = [b, c, d]
            where[(a, d)] = where[(d, c)] = where[(c, a)] = f1
            where[(b, c)] = where[(c, d)] = where[(d, b)] = f2
            valence[a] -= 1
            valence[b] -= 1
            valence[c] += 1
            valence[d] += 1
            flips += 1
            changed = True
        if not changed:
            break
    logger.debug("flipped %d edges", flips)
    return TriangleMesh(pos, np.array(faces, dtype=np.int64))


def tangential_smooth(mesh: TriangleMesh, iterations: int = 1, weight: float = 0.3) -> TriangleMesh:
    """Move each vertex toward the area-weighted centroid of its incident
    faces, keeping only the component in the vertex tangent plane."""
    f = mesh.faces
    V = mesh.n_vertices
    for _ in range(iterations):
        p = mesh.positions
        tri = p[f]
        n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        area = 0.5 * np.linalg.norm(n, axis=1)
        cen = tri.mean(axis=1)
        flat = f.ravel()
        w = np.bincount(flat, np.repeat(area, 3), V)
        target = np.stack(
            [np.bincount(flat, np.repeat(area * cen[:, k], 3), V) for k in range(3)], axis=1
        ) / w[:, None]
        normal = np.stack([np.bincount(flat, np.repeat(n[:, k], 3), V) for k in range(3)], axis=1)
        normal /= np.linalg.norm(normal, axis=1)[:, None]
        d = target - p
        d -= np.einsum("ij,ij->i", d, normal)[:, None] * normal
        mesh = mesh.with_positions(p + weight * d)
    return mesh


def _relative_changes(before: TriangleMesh, after: TriangleMesh):
    a0, v0 = fn.area(before), fn.enclosed_volume(before)
    da = abs(fn.area(after) - a0) / a0
    dv = abs(fn.enclosed_volume(after) - v0) / abs(v0) if v0 != 0 else 0.0
    return da, dv


def _acceptable(before, after, chi, limit) -> bool:
    try:
        report = require_valid(after)
    except WillflowError:
        return False
    if report.euler_characteristic != chi:
        return False
    da, dv = _relative_changes(before, after)
    return da < limit and dv < limit


def remesh(mesh: TriangleMesh, quality: RemeshParams | None = None) -> TriangleMesh:
    """Improve triangle quality without changing topology, area or volume by
    more than ``quality.max_relative_change``."""
    q = quality or RemeshParams()
    report = validate(mesh)
    if not report.ok:
        raise DegenerateMesh("remesh needs a valid, non-degenerate mesh")
    chi = report.euler_characteristic
    limit = q.max_relative_change
    flipped = flip_edges(mesh, q.max_flip_dihedral) if q.flip else mesh
    if not _acceptable(mesh, flipped, chi, limit):
        flipped = mesh
    weight = q.smooth_weight
    for _ in range(6):
        if q.smooth_iterations == 0 or weight == 0.0:
            break
        out = tangential_smooth(flipped, q.smooth_iterations, weight)
        if _acceptable(mesh, out, chi, limit):
            return out
        weight *= 0.5
    return flipped
