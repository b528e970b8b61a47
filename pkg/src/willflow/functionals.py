"""Global surface functionals, the L2 gradient of the Helfrich energy and its
finite-difference oracle.

The Helfrich energy here is the special case ``E_lam = W + lam * vol`` with
zero spontaneous curvature and no area term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from . import kernels
from .errors import DomainError
from .geometry import VertexField, _field, curvature_norms, geometry
from .mesh import TriangleMesh

#: Sign of the curvature part of the ascent gradient, ``-(ΔH + 2H(H^2-K))``.
#: Fixed by requiring agreement with the finite-difference gradient on a
#: (2, 1, 1) ellipsoid; see :func:`calibrate_curvature_sign`.
CURVATURE_SIGN = -1.0

DENSITY_RADII = 12


@dataclass(frozen=True)
class SurfaceDiagnostics:
    area: float
    volume: float
    willmore: float
    e_lambda: float
    lambda_: float
    iso_ratio: float
    diameter: float
    density_ratio_sup: float
    a0_integral: float
    a2_integral: float
    willmore_gap_8pi: float

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            key = "lambda" if f.name == "lambda_" else f.name
            out[key] = float(getattr(self, f.name))
        return out

    @classmethod
    def keys(cls):
        return ["lambda" if f.name == "lambda_" else f.name for f in fields(cls)]


def area(mesh: TriangleMesh) -> float:
    return float(np.sum(mesh.face_areas()))


def enclosed_volume(mesh: TriangleMesh) -> float:
    """Signed volume by the divergence theorem; positive for outward faces."""
    return float(kernels.enclosed_volume(mesh))


def willmore_energy(mesh: TriangleMesh) -> float:
    g = geometry(mesh)
    return float(np.sum(g.H**2 * g.va))


def helfrich_energy(mesh: TriangleMesh, lam: float) -> float:
    return willmore_energy(mesh) + lam * enclosed_volume(mesh)


def isoperimetric_ratio(mesh: TriangleMesh) -> float:
    """``(6 sqrt(pi))**(1/3) |vol|**(1/3) / area**(1/2)``; equals 1 on round spheres."""
    a = area(mesh)
    if not a > 0:
        raise DomainError("isoperimetric ratio needs positive area")
    return (6.0 * math.sqrt(math.pi)) ** (1.0 / 3.0) * abs(enclosed_volume(mesh)) ** (
        1.0 / 3.0
    ) / math.sqrt(a)


def diameter(mesh: TriangleMesh) -> float:
    """Largest distance between two vertices (exact, quadratic in V)."""
    return float(kernels.max_pairwise_distance(mesh.positions))


def min_edge_length(mesh: TriangleMesh) -> float:
    return float(kernels.min_edge_length(mesh.positions, mesh.edges))


def default_radii(mesh: TriangleMesh, n: int = DENSITY_RADII) -> np.ndarray:
    """Log-spaced radii from the shortest edge to the diameter."""
    return np.geomspace(min_edge_length(mesh), diameter(mesh), n)


def clipped_area_table(mesh: TriangleMesh, radii, centers=None) -> np.ndarray:
    """Area of the surface inside ``B_r(x)`` for vertex centers and radii."""
    if centers is None:
        centers = mesh.positions
    return kernels.clipped_areas(mesh, centers, np.asarray(radii, dtype=np.float64))


def density_ratio_sup(mesh: TriangleMesh, radii=None) -> float:
    """Max over vertex centers and the radius grid of clipped area / r^2."""
    if radii is None:
        radii = default_radii(mesh)
    radii = np.asarray(radii, dtype=np.float64).ravel()
    if radii.size == 0:
        raise DomainError("density ratio needs at least one radius")
    if np.any(radii <= 0) or np.any(np.diff(radii) < 0):
        raise DomainError("radii must be positive and ascending")
    table = clipped_area_table(mesh, radii)
    return float(np.max(table / radii[None, :] ** 2))


def curvature_integrals(mesh: TriangleMesh):
    """Return ``(∫|A0|^2 dμ, ∫|A|^2 dμ)``."""
    g = geometry(mesh)
    a2, a0 = curvature_norms(mesh)
    return float(np.sum(a0.values * g.va)), float(np.sum(a2.values * g.va))


def _curvature_part(mesh: TriangleMesh) -> np.ndarray:
    g = geometry(mesh)
    lapH = kernels.cot_laplacian(mesh.faces, g.cots, g.H) / g.va
    return lapH + 2.0 * g.H * (g.H**2 - g.K)


def gradient_field(mesh: TriangleMesh, lam: float) -> VertexField:
    """L2 gradient (ascent direction) of ``W + lam * vol`` from the curvature formula.

    Per vertex ``g = (-(ΔH + 2H(H^2 - K)) + lam) ν``; the flow moves along
    ``-g``, which for a sphere is ``(-lam) ν``, a shrinking sphere.
    """
    g = geometry(mesh)
    s = CURVATURE_SIGN * _curvature_part(mesh) + lam
    return _field(mesh, s[:, None] * g.normals, "vector")


#: default central-difference step relative to the shortest edge; the
#: truncation error scales with (h / min_edge)**2
FD_STEP_FACTOR = 1e-5


def default_fd_step(mesh: TriangleMesh) -> float:
    return FD_STEP_FACTOR * min_edge_length(mesh)


def fd_gradient(mesh: TriangleMesh, lam: float, h: float | None = None) -> VertexField:
    """Central-difference gradient of the discrete energy, divided by vertex area."""
    if h is None:
        h = default_fd_step(mesh)
    if not h > 0:
        raise DomainError("finite-difference step must be positive")
    g = geometry(mesh)
    euclid = kernels.fd_gradient(mesh, lam, h)
    return _field(mesh, euclid / g.va[:, None], "vector")


def l2_norm(mesh: TriangleMesh, field) -> float:
    """``(Σ |u(v)|^2 A(v))^(1/2)`` for a scalar or vector vertex field."""
    va = geometry(mesh).va
    u = np.asarray(field, dtype=np.float64)
    sq = u**2 if u.ndim == 1 else np.sum(u**2, axis=1)
    return float(math.sqrt(np.sum(sq * va)))


def gradient_relative_error(mesh: TriangleMesh, lam: float, h: float | None = None) -> float:
    """Relative L2 distance between the formula gradient and the FD oracle."""
    gf = gradient_field(mesh, lam).values
    gd = fd_gradient(mesh, lam, h).values
    return l2_norm(mesh, gf - gd) / l2_norm(mesh, gd)


def scaling_identity_residual(mesh: TriangleMesh, lam: float, p=(0.0, 0.0, 0.0), which="fd"):
    """Residual of ``∫ g·(f - p) dμ = 3 lam vol``, normalized by ``1 + |3 lam vol|``."""
    if which == "fd":
        g = fd_gradient(mesh, lam).values
    elif which == "formula":
        g = gradient_field(mesh, lam).values
    else:
        raise DomainError(f"unknown gradient {which!r}; expected 'fd' or 'formula'")
    va = geometry(mesh).va
    x = mesh.positions - np.asarray(p, dtype=np.float64)
    lhs = float(np.sum(np.einsum("ij,ij->i", g, x) * va))
    rhs = 3.0 * lam * enclosed_volume(mesh)
    return abs(lhs - rhs) / (1.0 + abs(rhs))


def calibrate_curvature_sign(mesh: TriangleMesh | None = None) -> float:
    """Sign that makes the formula curvature term agree with the FD gradient.

    Evaluated with ``lam = 0`` on a level-4 (2, 1, 1) ellipsoid by default.
    """
    if mesh is None:
        from .generators import gen_ellipsoid

        mesh = gen_ellipsoid(2.0, 1.0, 1.0, 4)
    g = geometry(mesh)
    part = _curvature_part(mesh)[:, None] * g.normals
    fd = fd_gradient(mesh, 0.0).values
    inner = float(np.sum(np.einsum("ij,ij->i", part, fd) * g.va))
    return 1.0 if inner > 0 else -1.0


def diagnostics(mesh: TriangleMesh, lam: float = 0.0, radii=None) -> SurfaceDiagnostics:
    a = area(mesh)
    vol = enclosed_volume(mesh)
    W = willmore_energy(mesh)
    a0i, a2i = curvature_integrals(mesh)
    return SurfaceDiagnostics(
        area=a,
        volume=vol,
        willmore=W,
        e_lambda=W + lam * vol,
        lambda_=float(lam),
        iso_ratio=isoperimetric_ratio(mesh),
        diameter=diameter(mesh),
        density_ratio_sup=density_ratio_sup(mesh, radii),
        a0_integral=a0i,
        a2_integral=a2i,
        willmore_gap_8pi=8.0 * math.pi - W,
    )
