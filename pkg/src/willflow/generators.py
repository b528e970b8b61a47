"""Deterministic closed-surface generators.

Every generator returns a valid, outward-oriented :class:`TriangleMesh`.
Spheres of revolution (dumbbells, shells) are sampled along their profile
curve with a spacing that follows the local circumference, so triangles stay
close to equilateral away from the poles.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError
from .mesh import TriangleMesh

MAX_ICOSPHERE_LEVEL = 7

_PHI = (1.0 + math.sqrt(5.0)) / 2.0
_ICOSA_VERTS = np.array(
    [
        (-1, _PHI, 0), (1, _PHI, 0), (-1, -_PHI, 0), (1, -_PHI, 0),
        (0, -1, _PHI), (0, 1, _PHI), (0, -1, -_PHI), (0, 1, -_PHI),
        (_PHI, 0, -1), (_PHI, 0, 1), (-_PHI, 0, -1), (-_PHI, 0, 1),
    ],
    dtype=np.float64,
)
_ICOSA_FACES = np.array(
    [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ],
    dtype=np.int64,
)


def _subdivide(verts: np.ndarray, faces: np.ndarray):
    """Split every triangle into four, projecting new midpoints to the unit sphere."""
    V = len(verts)
    e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    key = np.sort(e, axis=1)
    uniq, inv = np.unique(key[:, 0] * V + key[:, 1], return_inverse=True)
    a, b = uniq // V, uniq % V
    mid = verts[a] + verts[b]
    mid /= np.linalg.norm(mid, axis=1)[:, None]
    F = len(faces)
    m01, m12, m20 = (V + inv[k * F : (k + 1) * F] for k in range(3))
    v0, v1, v2 = faces.T
    new_faces = np.concatenate(
        [
            np.stack([v0, m01, m20], axis=1),
            np.stack([v1, m12, m01], axis=1),
            np.stack([v2, m20, m12], axis=1),
            np.stack([m01, m12, m20], axis=1),
        ]
    )
    return np.concatenate([verts, mid]), new_faces


def _unit_icosphere(level: int):
    verts = _ICOSA_VERTS / np.linalg.norm(_ICOSA_VERTS, axis=1)[:, None]
    faces = _ICOSA_FACES
    for _ in range(level):
        verts, faces = _subdivide(verts, faces)
    return verts, faces


def gen_icosphere(level: int = 3, radius: float = 1.0) -> TriangleMesh:
    """Icosahedron subdivided ``level`` times; ``V = 10 * 4**level + 2``."""
    if int(level) != level or not 0 <= level <= MAX_ICOSPHERE_LEVEL:
        raise DomainError(f"icosphere level must be an integer in [0, {MAX_ICOSPHERE_LEVEL}]")
    if not radius > 0:
        raise DomainError("radius must be positive")
    verts, faces = _unit_icosphere(int(level))
    return TriangleMesh(radius * verts, faces)


def gen_geodesic_sphere(frequency: int = 4, radius: float = 1.0) -> TriangleMesh:
    """Icosahedron with every face split into ``frequency**2`` triangles,
    projected to the sphere; ``V = 10 * frequency**2 + 2``.

    Frequency ``2**level`` gives the same vertex set as :func:`gen_icosphere`
    (midpoint subdivision) up to ordering; other frequencies fill the gaps
    between icosphere levels.
    """
    nu = int(frequency)
    if nu != frequency or not 1 <= nu <= 2**MAX_ICOSPHERE_LEVEL:
        raise DomainError(f"frequency must be an integer in [1, {2**MAX_ICOSPHERE_LEVEL}]")
    if not radius > 0:
        raise DomainError("radius must be positive")
    base = _ICOSA_VERTS / np.linalg.norm(_ICOSA_VERTS, axis=1)[:, None]
    a, b = np.meshgrid(np.arange(nu + 1), np.arange(nu + 1), indexing="ij")
    keep = a + b <= nu
    a, b = a[keep], b[keep]
    local = -np.ones((nu + 1, nu + 1), dtype=np.int64)
    local[a, b] = np.arange(len(a))
    up = [(i, j) for i in range(nu) for j in range(nu - i)]
    down = [(i, j) for i in range(nu - 1) for j in range(nu - 1 - i)]
    tri = np.array(
        [(local[i, j], local[i + 1, j], local[i, j + 1]) for i, j in up]
        + [(local[i + 1, j], local[i + 1, j + 1], local[i, j + 1]) for i, j in down],
        dtype=np.int64,
    )
    pts, faces = [], []
    for fi, (A, B, C) in enumerate(_ICOSA_FACES):
        P = base[A] + (a[:, None] * (base[B] - base[A]) + b[:, None] * (base[C] - base[A])) / nu
        pts.append(P / np.linalg.norm(P, axis=1)[:, None])
        faces.append(tri + fi * len(a))
    pts = np.concatenate(pts)
    faces = np.concatenate(faces)
    # merge the copies of points shared by neighboring faces
    key = np.round(pts * 2**30).astype(np.int64)
    _, first, inv = np.unique(key, axis=0, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    verts = pts[first[order]]
    return TriangleMesh(radius * verts, rank[inv.ravel()][faces])


def gen_ellipsoid(a: float, b: float, c: float, level: int = 3) -> TriangleMesh:
    """Unit icosphere mapped by ``diag(a, b, c)``."""
    if not (a > 0 and b > 0 and c > 0):
        raise DomainError("ellipsoid semi-axes must be positive")
    if int(level) != level or not 0 <= level <= MAX_ICOSPHERE_LEVEL:
        raise DomainError(f"level must be an integer in [0, {MAX_ICOSPHERE_LEVEL}]")
    verts, faces = _unit_icosphere(int(level))
    return TriangleMesh(verts * np.array([a, b, c]), faces)


def gen_torus(R: float, r: float, n_major: int = 32, n_minor: int = 32) -> TriangleMesh:
    """Structured torus of revolution around the z axis (genus 1)."""
    if not R > r > 0:
        raise DomainError("torus needs R > r > 0")
    if n_major < 8 or n_minor < 8:
        raise DomainError("torus resolutions must be at least 8")
    n_major, n_minor = int(n_major), int(n_minor)
    th = 2.0 * np.pi * np.arange(n_major) / n_major
    ph = 2.0 * np.pi * np.arange(n_minor) / n_minor
    T, P = np.meshgrid(th, ph, indexing="ij")
    ring = R + r * np.cos(P)
    pos = np.stack([ring * np.cos(T), ring * np.sin(T), r * np.sin(P)], axis=-1).reshape(-1, 3)
    i, j = np.meshgrid(np.arange(n_major), np.arange(n_minor), indexing="ij")
    i, j = i.ravel(), j.ravel()
    ip, jp = (i + 1) % n_major, (j + 1) % n_minor
    a = i * n_minor + j
    b = ip * n_minor + j
    c = ip * n_minor + jp
    d = i * n_minor + jp
    faces = np.concatenate([np.stack([a, b, c], axis=1), np.stack([a, c, d], axis=1)])
    return TriangleMesh(pos, faces)


def _resample_profile(rho, z, n_theta, floor):
    """Pick profile samples whose spacing tracks the ring circumference.

    ``rho, z`` is a dense polyline from pole to pole.  The target spacing is
    the height of an equilateral triangle on the ring, but never below
    ``floor``.
    """
    seg = np.hypot(np.diff(rho), np.diff(z))
    s = np.concatenate([[0.0], np.cumsum(seg)])
    width = np.maximum(np.sqrt(3.0) / 2.0 * 2.0 * np.pi * rho / n_theta, floor)
    dn = seg / (0.5 * (width[1:] + width[:-1]))
    N = np.concatenate([[0.0], np.cumsum(dn)])
    m = max(int(round(N[-1])), 4)
    targets = np.linspace(0.0, N[-1], m + 1)
    sk = np.interp(targets, N, s)
    rk = np.interp(sk, s, rho)
    zk = np.interp(sk, s, z)
    rk[0] = rk[-1] = 0.0
    return rk, zk


def surface_of_revolution(rho, z, n_theta: int) -> TriangleMesh:
    """Revolve a pole-to-pole profile around the z axis.

    ``rho[0]`` and ``rho[-1]`` must be zero; interior samples positive.
    Consecutive rings are offset by half a step to keep triangles acute.
    """
    rho = np.asarray(rho, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    m = len(rho) - 1
    if m < 2 or rho[0] != 0.0 or rho[-1] != 0.0 or np.any(rho[1:-1] <= 0):
        raise DomainError("profile must run from pole to pole with positive interior radii")
    n = int(n_theta)
    rings = m - 1
    k = np.arange(1, m)[:, None]
    theta = 2.0 * np.pi * (np.arange(n)[None, :] + 0.5 * k) / n
    ring_pos = np.stack(
        [rho[1:-1, None] * np.cos(theta), rho[1:-1, None] * np.sin(theta),
         np.broadcast_to(z[1:-1, None], theta.shape)],
        axis=-1,
    ).reshape(-1, 3)
    pos = np.concatenate([[[0.0, 0.0, z[0]]], ring_pos, [[0.0, 0.0, z[-1]]]])
    pole0, pole1 = 0, 1 + rings * n

    def vid(ring, j):  # ring is 1-based
        return 1 + (ring - 1) * n + (j % n)

    j = np.arange(n)
    faces = [np.stack([np.full(n, pole0), vid(1, j), vid(1, j + 1)], axis=1)]
    for r in range(1, rings):
        faces.append(np.stack([vid(r, j), vid(r + 1, j), vid(r, j + 1)], axis=1))
        faces.append(np.stack([vid(r, j + 1), vid(r + 1, j), vid(r + 1, j + 1)], axis=1))
    faces.append(np.stack([np.full(n, pole1), vid(rings, j + 1), vid(rings, j)], axis=1))
    faces = np.concatenate(faces)
    mesh = TriangleMesh(pos, faces)
    p = mesh.positions
    f = mesh.faces
    vol = np.sum(np.einsum("ij,ij->i", p[f[:, 0]], np.cross(p[f[:, 1]], p[f[:, 2]])))
    return mesh if vol > 0 else mesh.flipped()


def _neck_junction(R, a, b):
    """Height where ``a cosh(z/b)`` meets a radius-R sphere tangentially, and
    the resulting sphere-center height."""

    def radius_at(zt):
        ch, sh = math.cosh(zt / b), math.sinh(zt / b)
        return a * ch * math.sqrt(1.0 + (a / b * sh) ** 2) - R

    hi = b
    while radius_at(hi) < 0:
        hi *= 2.0
    zt = brentq(radius_at, 0.0, hi, xtol=1e-15)
    rho_t = a * math.cosh(zt / b)
    slope = a / b * math.sinh(zt / b)
    return zt, zt + slope * rho_t


def dumbbell_separation(sphere_r: float, neck_radius: float) -> float:
    """Center distance at which a catenoid neck meets both spheres tangentially."""
    _, c = _neck_junction(float(sphere_r), float(neck_radius), float(neck_radius))
    return 2.0 * c


def _dumbbell_profile(R, a, c, dense=4000):
    if abs(2.0 * c - dumbbell_separation(R, a)) <= 1e-12 * c:
        b = a
    else:
        # stretch the neck, a cosh(z/b), until the tangent junction lands at c
        def miss(bb):
            return _neck_junction(R, a, bb)[1] - c

        lo, hi = a, a
        if miss(a) < 0:
            while miss(hi) < 0:
                hi *= 1.5
                if hi > 1e3 * R:
                    raise DomainError("separation too large for this neck")
        else:
            while miss(lo) > 0:
                lo /= 1.5
                if lo < 1e-6 * a:
                    raise DomainError("separation too small for this neck")
        b = brentq(miss, lo, hi, xtol=1e-14 * a)
    zt, _ = _neck_junction(R, a, b)
    zn = np.linspace(-zt, zt, dense)
    neck = np.stack([a * np.cosh(zn / b), zn], axis=1)
    phi_t = math.atan2(a * math.cosh(zt / b), zt - c)
    phi = np.linspace(0.0, phi_t, dense)
    cap = np.stack([R * np.sin(phi), c + R * np.cos(phi)], axis=1)  # pole -> junction
    top = cap[::-1]
    bottom = cap * np.array([1.0, -1.0])
    pts = np.concatenate([bottom[:-1], neck, top[1:]])
    rho = pts[:, 0].copy()
    rho[0] = rho[-1] = 0.0
    return rho, pts[:, 1]


def gen_dumbbell(
    sphere_r: float = 1.0,
    neck_radius: float = 0.3,
    separation: float | None = None,
    resolution: int = 32,
) -> TriangleMesh:
    """Two spheres joined by a catenoid-like neck (genus 0).

    The neck is ``a cosh(z/b)`` with waist ``a = neck_radius``, meeting each
    sphere tangentially.  With the default ``separation`` (distance between
    sphere centers) ``b = a`` and the neck is an exact catenoid, so the
    Willmore energy tends to that of two spheres as the neck closes.  Other
    separations stretch or squeeze the neck.
    """
    R, a = float(sphere_r), float(neck_radius)
    if not 0 < a < R:
        raise DomainError("dumbbell needs 0 < neck_radius < sphere_r")
    if resolution < 8:
        raise DomainError("resolution must be at least 8")
    if separation is None:
        separation = dumbbell_separation(R, a)
    if not separation > 0:
        raise DomainError("separation must be positive")
    rho, zz = _dumbbell_profile(R, a, 0.5 * float(separation))
    floor = math.sqrt(3.0) * math.pi * a / resolution
    rk, zk = _resample_profile(rho, zz, resolution, floor)
    return surface_of_revolution(rk, zk, resolution)


def _shell_profile(R, t, theta_n, dense=6000):
    ri = R - t
    n_arc = dense
    phi_o = np.linspace(np.pi, theta_n, n_arc)
    outer = np.stack([R * np.sin(phi_o), R * np.cos(phi_o)], axis=1)
    u = np.array([math.sin(theta_n), math.cos(theta_n)])
    v = np.array([-math.cos(theta_n), math.sin(theta_n)])
    C = (R - 0.5 * t) * u
    psi = np.linspace(0.0, np.pi, max(dense // 4, 200))
    lip = C + 0.5 * t * (np.cos(psi)[:, None] * u + np.sin(psi)[:, None] * v)
    phi_i = np.linspace(theta_n, np.pi, n_arc)
    inner = np.stack([ri * np.sin(phi_i), ri * np.cos(phi_i)], axis=1)
    pts = np.concatenate([outer, lip[1:-1], inner])
    rho = np.abs(pts[:, 0])
    rho[0] = rho[-1] = 0.0
    return rho, pts[:, 1]


def gen_shell(
    outer_r: float = 1.0,
    thickness: float = 0.1,
    neck_radius: float = 0.15,
    resolution: int = 32,
) -> TriangleMesh:
    """Hollow ball: outer and inner spheres joined by a rounded lip around a hole.

    The surface bounds the solid shell between the two spheres, so the inner
    sphere is oriented toward the center and the enclosed volume is about
    ``4 pi outer_r**2 thickness`` for thin shells.  ``neck_radius`` is the
    radius of the hole at the top.
    """
    R, t, a = float(outer_r), float(thickness), float(neck_radius)
    if not R > 0:
        raise DomainError("outer radius must be positive")
    if not 0 < t < R / 4:
        raise DomainError("shell needs 0 < thickness < outer_r / 4")
    if not 0 < a < 0.5 * (R - t):
        raise DomainError("shell needs 0 < neck_radius < (outer_r - thickness) / 2")
    if resolution < 8:
        raise DomainError("resolution must be at least 8")

    def hole(th):
        return (R - 0.5 * t) * math.sin(th) - 0.5 * t * math.cos(th) - a

    theta_n = brentq(hole, 0.0, 0.5 * np.pi)
    rho, zz = _shell_profile(R, t, theta_n)
    floor = min(math.sqrt(3.0) * math.pi * a / resolution, math.pi * t / 16.0)
    rk, zk = _resample_profile(rho, zz, resolution, floor)
    return surface_of_revolution(rk, zk, resolution)


def jitter(mesh: TriangleMesh, amplitude: float, seed: int) -> TriangleMesh:
    """Displace vertices by Gaussian noise scaled by ``amplitude`` times the shortest edge."""
    if amplitude == 0:
        return mesh
    if amplitude < 0:
        raise DomainError("jitter amplitude must be non-negative")
    rng = np.random.default_rng(seed)
    scale = amplitude * float(np.min(mesh.edge_lengths()))
    return mesh.with_positions(mesh.positions + scale * rng.standard_normal(mesh.positions.shape))
