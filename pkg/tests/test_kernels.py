import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from willflow import kernels
from willflow import functionals as fn
from willflow.generators import gen_dumbbell, gen_ellipsoid, gen_torus, jitter

compiled = pytest.mark.skipif("compiled" not in kernels.available_backends(), reason="extension not built")

MESHES = [
    jitter(gen_ellipsoid(1.5, 1.0, 0.7, 2), 0.1, seed=2),
    gen_torus(2.0, 1.0, 16, 12),
    gen_dumbbell(1.0, 0.3, resolution=12),
]


@pytest.fixture
def restore_backend():
    name = kernels.backend_name()
    yield
    kernels.use_backend(name)


def test_python_backend_always_available():
    assert "python" in kernels.available_backends()
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


@compiled
def test_compiled_selected_by_default():
    assert kernels.get_backend().BACKEND == "compiled"


@compiled
@pytest.mark.parametrize("mesh", MESHES, ids=str)
def test_backend_parity(mesh):
    py, cy = kernels.get_backend("python"), kernels.get_backend("compiled")
    pos, faces = mesh.positions, mesh.faces
    for a, b in zip(py.vertex_geometry(pos, faces), cy.vertex_geometry(pos, faces)):
        assert np.allclose(a, b, rtol=1e-12, atol=1e-12)
    assert np.allclose(py.energy(pos, faces, 0.7), cy.energy(pos, faces, 0.7), rtol=1e-12)
    assert py.enclosed_volume(pos, faces) == pytest.approx(cy.enclosed_volume(pos, faces), rel=1e-13)
    h = fn.default_fd_step(mesh)
    g1, g2 = py.fd_gradient(pos, faces, 0.7, h), cy.fd_gradient(pos, faces, 0.7, h)
    assert np.allclose(g1, g2, rtol=1e-6, atol=1e-6 * np.abs(g1).max())
    radii = np.array([0.1, 0.5, 2.0])
    assert np.allclose(py.clipped_areas(pos, faces, pos[:20], radii), cy.clipped_areas(pos, faces, pos[:20], radii), rtol=1e-12, atol=1e-14)
    assert py.max_pairwise_distance(pos) == cy.max_pairwise_distance(pos)
    assert py.min_edge_length(pos, mesh.edges) == cy.min_edge_length(pos, mesh.edges)


@compiled
@given(c=st.tuples(*[st.floats(-1, 2)] * 3), r=st.floats(0.01, 3.0))
def test_triangle_clip_parity(c, r):
    py, cy = kernels.get_backend("python"), kernels.get_backend("compiled")
    p = [np.array([0.0, 0, 0]), np.array([1.0, 0.2, 0]), np.array([0.3, 0.8, 0.4])]
    a = py.triangle_ball_area(*p, np.array(c), r)
    b = cy.triangle_ball_area(*p, np.array(c), r)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-15)


@compiled
def test_functionals_agree_across_backends(restore_backend):
    m = MESHES[0]
    out = {}
    for name in ("python", "compiled"):
        kernels.use_backend(name)
        fresh = m.with_positions(m.positions)  # drop cached geometry
        out[name] = fn.diagnostics(fresh, 1.0).to_dict()
    for key, v in out["python"].items():
        assert v == pytest.approx(out["compiled"][key], rel=1e-11)
