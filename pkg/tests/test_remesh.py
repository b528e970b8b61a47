import numpy as np
import pytest

from conftest import tetrahedron
from willflow import DomainError, validate
from willflow import functionals as fn
from willflow.errors import DegenerateMesh
from willflow.generators import gen_ellipsoid, gen_icosphere, gen_torus, jitter
from willflow.mesh import TriangleMesh
from willflow.remesh import RemeshParams, flip_edges, min_angles, remesh, tangential_smooth


def stretched_sphere():
    # squash the icosphere's latitude spacing toward the poles
    m = gen_icosphere(3)
    p = m.positions.copy()
    p[:, 2] = np.sign(p[:, 2]) * np.abs(p[:, 2]) ** 0.6
    p /= np.linalg.norm(p, axis=1)[:, None]
    return m.with_positions(p)


def relative_change(a, b):
    da = abs(fn.area(b) - fn.area(a)) / fn.area(a)
    dv = abs(fn.enclosed_volume(b) - fn.enclosed_volume(a)) / abs(fn.enclosed_volume(a))
    return da, dv


def test_isotropic_sphere_near_fixed_point(ico3):
    out = remesh(ico3)
    move = np.abs(out.positions - ico3.positions).max()
    assert move < 1e-3 * ico3.bbox_diag()


@pytest.mark.parametrize(
    "mesh", [stretched_sphere(), gen_ellipsoid(3, 1, 1, 3), jitter(gen_torus(2, 1, 24, 16), 0.2, seed=1)], ids=str
)
def test_contract(mesh):
    out = remesh(mesh)
    assert validate(out).ok
    assert validate(out).euler_characteristic == validate(mesh).euler_characteristic
    assert max(relative_change(mesh, out)) < 0.005


@pytest.mark.parametrize("mesh", [stretched_sphere(), gen_ellipsoid(3, 1, 1, 3)], ids=str)
def test_min_angle_quantile_improves(mesh):
    before = np.quantile(min_angles(mesh), 0.1)
    after = np.quantile(min_angles(remesh(mesh)), 0.1)
    assert after > before


def test_flips_keep_topology():
    m = gen_ellipsoid(3, 1, 1, 3)
    out = flip_edges(m, max_dihedral=0.5)
    assert validate(out).ok
    assert (out.n_vertices, out.n_faces) == (m.n_vertices, m.n_faces)
    assert not np.array_equal(np.sort(out.faces, axis=1), np.sort(m.faces, axis=1))


def test_no_flips_on_sharp_edges():
    # a regular tetrahedron has no flippable edge: every dihedral is sharp
    t = tetrahedron()
    assert np.array_equal(flip_edges(t).faces, t.faces)


def test_smoothing_is_tangential(ico3):
    out = tangential_smooth(ico3, iterations=1, weight=0.5)
    r = np.linalg.norm(out.positions, axis=1)
    # tangent moves off a unit sphere only raise the radius at second order
    assert np.abs(r - 1.0).max() < 1e-3


def test_zero_weight_is_identity(ico3):
    out = remesh(ico3, RemeshParams(flip=False, smooth_weight=0.0))
    assert np.array_equal(out.positions, ico3.positions)


def test_params_validation():
    with pytest.raises(DomainError):
        RemeshParams(smooth_weight=2.0)
    with pytest.raises(DomainError):
        RemeshParams(max_relative_change=0.0)


def test_rejects_invalid_mesh(ico3):
    with pytest.raises(DegenerateMesh):
        remesh(TriangleMesh(ico3.positions, ico3.faces[:-1]))
