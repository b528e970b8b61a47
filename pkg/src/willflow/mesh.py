"""Indexed triangle meshes: representation, validation, OBJ I/O and dilations.

A :class:`TriangleMesh` is the discrete stand-in for an immersion of a closed
surface.  Faces are ordered counterclockwise when seen from outside, so the
divergence-theorem volume of a convex body is positive.  Meshes are immutable;
every transform returns a new mesh.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateMesh, DomainError, IoError, ParseError, TopologyError

#: faces with area below ``DEGENERATE_AREA_FACTOR * bbox_diag**2`` are degenerate
DEGENERATE_AREA_FACTOR = 1e-14

_ids = itertools.count(1)


class TriangleMesh:
    """Closed oriented triangle mesh with read-only vertex and face arrays.

    Derived quantities (edges, per-vertex geometry) are cached on first use,
    which is safe because neither array can be modified after construction.
    """

    __slots__ = ("positions", "faces", "mesh_id", "_cache")

    def __init__(self, positions, faces):
        pos = np.array(positions, dtype=np.float64, copy=True)
        fac = np.array(faces, dtype=np.int64, copy=True)
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise DomainError(f"positions must have shape (V, 3), got {pos.shape}")
        if fac.size == 0:
            fac = fac.reshape(0, 3)
        if fac.ndim != 2 or fac.shape[1] != 3:
            raise DomainError(f"faces must have shape (F, 3), got {fac.shape}")
        if fac.size and (fac.min() < 0 or fac.max() >= len(pos)):
            raise DomainError("face vertex index out of range")
        if not np.all(np.isfinite(pos)):
            raise DomainError("positions must be finite")
        pos.setflags(write=False)
        fac.setflags(write=False)
        self.positions = pos
        self.faces = fac
        self.mesh_id = next(_ids)
        self._cache = {}

    @property
    def n_vertices(self) -> int:
        return len(self.positions)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def edges(self) -> np.ndarray:
        """Unique undirected edges as sorted index pairs, shape (E, 2)."""
        if "edges" not in self._cache:
            he = _half_edges(self.faces)
            und = np.sort(he, axis=1)
            self._cache["edges"] = np.unique(und, axis=0)
        return self._cache["edges"]

    def edge_lengths(self) -> np.ndarray:
        e = self.edges
        return np.linalg.norm(self.positions[e[:, 1]] - self.positions[e[:, 0]], axis=1)

    def face_areas(self) -> np.ndarray:
        p = self.positions
        f = self.faces
        n = np.cross(p[f[:, 1]] - p[f[:, 0]], p[f[:, 2]] - p[f[:, 0]])
        return 0.5 * np.linalg.norm(n, axis=1)

    def bbox_diag(self) -> float:
        if len(self.positions) == 0:
            return 0.0
        return float(np.linalg.norm(self.positions.max(axis=0) - self.positions.min(axis=0)))

    def with_positions(self, positions) -> "TriangleMesh":
        """Same connectivity, new vertex positions (faces array is shared)."""
        new = TriangleMesh.__new__(TriangleMesh)
        pos = np.array(positions, dtype=np.float64, copy=True)
        if pos.shape != self.positions.shape:
            raise DomainError("positions shape must match the mesh")
        pos.setflags(write=False)
        new.positions = pos
        new.faces = self.faces
        new.mesh_id = next(_ids)
        new._cache = {}
        if "edges" in self._cache:
            new._cache["edges"] = self._cache["edges"]
        return new

    def flipped(self) -> "TriangleMesh":
        """Reverse the orientation of every face."""
        return TriangleMesh(self.positions, self.faces[:, ::-1])

    def __repr__(self):
        return f"TriangleMesh(V={self.n_vertices}, F={self.n_faces})"


def _half_edges(faces: np.ndarray) -> np.ndarray:
    return np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])


@dataclass(frozen=True)
class TopologyReport:
    is_closed: bool
    is_manifold: bool
    is_oriented: bool
    euler_characteristic: int
    genus: Optional[int]  # None when the surface is not closed, manifold and oriented
    min_face_area: float
    min_edge_length: float
    max_edge_length: float
    area_threshold: float

    @property
    def is_degenerate(self) -> bool:
        return not self.min_face_area > self.area_threshold

    @property
    def ok(self) -> bool:
        return (
            self.is_closed
            and self.is_manifold
            and self.is_oriented
            and not self.is_degenerate
            and self.genus is not None
            and self.genus >= 0
        )


def validate(mesh: TriangleMesh) -> TopologyReport:
    """Inspect closedness, manifoldness, orientation and degeneracy."""
    faces = mesh.faces
    V, F = mesh.n_vertices, mesh.n_faces
    threshold = DEGENERATE_AREA_FACTOR * mesh.bbox_diag() ** 2
    if F == 0:
        return TopologyReport(False, False, False, V, None, 0.0, 0.0, 0.0, threshold)

    distinct = (
        (faces[:, 0] != faces[:, 1]) & (faces[:, 1] != faces[:, 2]) & (faces[:, 0] != faces[:, 2])
    )
    he = _half_edges(faces)
    und = np.sort(he, axis=1)
    und_key = und[:, 0] * V + und[:, 1]
    uniq, counts = np.unique(und_key, return_counts=True)
    E = len(uniq)

    is_closed = bool(np.all(counts >= 2))
    is_manifold = bool(np.all(counts <= 2)) and bool(distinct.all())

    dir_key = he[:, 0] * V + he[:, 1]
    rev_key = he[:, 1] * V + he[:, 0]
    dir_sorted = np.sort(dir_key)
    unique_dir = len(np.unique(dir_key)) == len(dir_key)
    pos = np.searchsorted(dir_sorted, rev_key)
    pos = np.minimum(pos, len(dir_sorted) - 1)
    has_rev = dir_sorted[pos] == rev_key
    is_oriented = bool(unique_dir and has_rev.all())

    valence = np.bincount(faces.ravel(), minlength=V)
    if np.any(valence < 3):
        is_manifold = False
    if is_manifold and is_closed and is_oriented:
        is_manifold = _vertex_links_are_disks(faces, V)

    chi = int(V - E + F)
    genus = None
    if is_closed and is_manifold and is_oriented and chi % 2 == 0:
        genus = (2 - chi) // 2

    areas = mesh.face_areas()
    lengths = np.linalg.norm(mesh.positions[und[:, 1]] - mesh.positions[und[:, 0]], axis=1)
    return TopologyReport(
        is_closed=is_closed,
        is_manifold=is_manifold,
        is_oriented=is_oriented,
        euler_characteristic=chi,
        genus=genus,
        min_face_area=float(areas.min()),
        min_edge_length=float(lengths.min()),
        max_edge_length=float(lengths.max()),
        area_threshold=threshold,
    )


def _vertex_links_are_disks(faces: np.ndarray, V: int) -> bool:
    # With oriented, edge-manifold faces, each face contributes the directed
    # link edge (b -> c) to vertex a; the link is one cycle iff following
    # successors from any start visits every link edge.
    a = faces.ravel()
    b = np.roll(faces, -1, axis=1).ravel()
    c = np.roll(faces, -2, axis=1).ravel()
    order = np.argsort(a, kind="stable")
    a, b, c = a[order], b[order], c[order]
    bounds = np.searchsorted(a, np.arange(V + 1))
    for v in range(V):
        lo, hi = bounds[v], bounds[v + 1]
        succ = dict(zip(b[lo:hi].tolist(), c[lo:hi].tolist()))
        start = b[lo]
        cur, steps = start, 0
        while True:
            cur = succ.get(cur)
            steps += 1
            if cur is None or steps > hi - lo:
                return False
            if cur == start:
                break
        if steps != hi - lo:
            return False
    return True


def require_valid(mesh: TriangleMesh) -> TopologyReport:
    """Validate and raise on the first problem found."""
    rep = validate(mesh)
    if not rep.is_closed:
        raise TopologyError("mesh has an open boundary")
    if not rep.is_manifold:
        raise TopologyError("mesh has a non-manifold edge or vertex")
    if not rep.is_oriented:
        raise TopologyError("mesh faces are not consistently oriented")
    if rep.genus is None or rep.genus < 0:
        raise TopologyError(f"unsupported Euler characteristic {rep.euler_characteristic}")
    if rep.is_degenerate:
        raise DegenerateMesh(
            f"face area {rep.min_face_area:.3g} below threshold {rep.area_threshold:.3g}"
        )
    return rep


def parse_obj(text: str) -> TriangleMesh:
    """Parse the ``v``/``f`` OBJ subset; anything else is a ParseError."""
    verts = []
    faces = []
    face_lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        kind = tok[0]
        if kind == "v":
            if len(tok) != 4:
                raise ParseError("vertex record needs exactly 3 coordinates", lineno)
            try:
                xyz = [float(t) for t in tok[1:]]
            except ValueError:
                raise ParseError(f"bad coordinate in {line!r}", lineno) from None
            if not all(np.isfinite(xyz)):
                raise ParseError("non-finite coordinate", lineno)
            verts.append(xyz)
        elif kind == "f":
            if len(tok) != 4:
                raise ParseError("face record needs exactly 3 vertex indices", lineno)
            try:
                idx = [int(t) for t in tok[1:]]
            except ValueError:
                raise ParseError(f"bad vertex index in {line!r}", lineno) from None
            if min(idx) < 1:
                raise ParseError("vertex indices are 1-based and positive", lineno)
            faces.append([i - 1 for i in idx])
            face_lines.append(lineno)
        else:
            raise ParseError(f"unsupported record type {kind!r}", lineno)
    n = len(verts)
    for idx, lineno in zip(faces, face_lines):
        if max(idx) >= n:
            raise ParseError(f"face references vertex {max(idx) + 1} of {n}", lineno)
    return TriangleMesh(np.array(verts, dtype=np.float64).reshape(-1, 3), faces)


def load_mesh(path) -> TriangleMesh:
    try:
        with open(path, "r", encoding="ascii") as fh:
            text = fh.read()
    except UnicodeDecodeError as exc:
        raise ParseError(f"non-ASCII content: {exc}") from None
    except OSError as exc:
        raise IoError(str(exc)) from exc
    mesh = parse_obj(text)
    require_valid(mesh)
    return mesh


def format_obj(mesh: TriangleMesh) -> str:
    # repr() of a float is the shortest string that round-trips exactly
    lines = [f"v {x!r} {y!r} {z!r}" for x, y, z in mesh.positions.tolist()]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces.tolist()]
    return "\n".join(lines) + "\n"


def save_mesh(mesh: TriangleMesh, path) -> None:
    text = format_obj(mesh)
    try:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoError(f"cannot write {os.fspath(path)}: {exc}") from exc


def dilate(mesh: TriangleMesh, alpha: float, p=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Return the mesh with positions ``alpha * (x - p)``."""
    if not alpha > 0:
        raise DomainError(f"dilation factor must be positive, got {alpha}")
    p = np.asarray(p, dtype=np.float64)
    return mesh.with_positions(alpha * (mesh.positions - p))


def transform(mesh: TriangleMesh, rotation=None, translation=None) -> TriangleMesh:
    """Apply ``x -> R x + t`` to every vertex."""
    pos = mesh.positions
    if rotation is not None:
        pos = pos @ np.asarray(rotation, dtype=np.float64).T
    if translation is not None:
        pos = pos + np.asarray(translation, dtype=np.float64)
    return mesh.with_positions(pos)
