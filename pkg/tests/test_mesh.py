import math
import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import cube, tetrahedron
from willflow import (
    DomainError,
    IoError,
    ParseError,
    TopologyError,
    TriangleMesh,
    dilate,
    load_mesh,
    save_mesh,
    validate,
)
from willflow.errors import DegenerateMesh
from willflow.functionals import area, enclosed_volume, willmore_energy
from willflow.generators import gen_icosphere, gen_torus
from willflow.mesh import format_obj, parse_obj, require_valid


def write(tmp_path, text, name="m.obj"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_load_tetrahedron(tmp_path):
    path = tmp_path / "tet.obj"
    save_mesh(tetrahedron(), path)
    m = load_mesh(path)
    rep = validate(m)
    assert (m.n_vertices, m.n_faces) == (4, 4)
    assert rep.euler_characteristic == 2 and rep.genus == 0


def test_out_of_range_index_reports_line(tmp_path):
    lines = ["v 0 0 0"] * 8 + ["f 1 2 3", "f 1 2 9"]
    with pytest.raises(ParseError) as info:
        load_mesh(write(tmp_path, "\n".join(lines)))
    assert info.value.line == 10


@pytest.mark.parametrize(
    "text, line",
    [
        ("v 0 0 0\nvt 0 0\n", 2),
        ("v 0 0\n", 1),
        ("# c\nv 0 0 x\n", 2),
        ("v 0 0 0\nf 1 2\n", 2),
        ("v 0 0 0\nf 0 1 1\n", 2),
        ("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3/1\n", 4),
    ],
)
def test_malformed_lines(text, line):
    with pytest.raises(ParseError) as info:
        parse_obj(text)
    assert info.value.line == line


def test_cube_euler_characteristic():
    rep = validate(cube())
    assert rep.euler_characteristic == 8 - 18 + 12 == 2


def test_comments_and_blank_lines():
    m = parse_obj("# tet\n\n" + format_obj(tetrahedron()) + "\n# end\n")
    assert m.n_faces == 4


def test_open_mesh_rejected(tmp_path):
    tet = tetrahedron()
    open_mesh = TriangleMesh(tet.positions, tet.faces[:3])
    assert not validate(open_mesh).is_closed
    assert validate(open_mesh).genus is None
    path = tmp_path / "open.obj"
    path.write_text(format_obj(open_mesh))
    with pytest.raises(TopologyError):
        load_mesh(path)


def test_inconsistent_orientation_rejected():
    tet = tetrahedron()
    faces = tet.faces.copy()
    faces[0] = faces[0][::-1]
    rep = validate(TriangleMesh(tet.positions, faces))
    assert rep.is_closed and not rep.is_oriented
    with pytest.raises(TopologyError):
        require_valid(TriangleMesh(tet.positions, faces))


def test_non_manifold_edge_rejected():
    # two tetrahedra sharing one edge: that edge has four faces
    t = tetrahedron()
    p = np.vstack([t.positions, t.positions[2:] + [0.0, 0.0, 3.0]])
    f2 = t.faces.copy()
    f2[f2 >= 2] += 2
    m = TriangleMesh(p, np.vstack([t.faces, f2]))
    assert not validate(m).is_manifold


def test_pinched_vertex_rejected():
    # two tetrahedra glued at a single vertex
    t = tetrahedron()
    p = np.vstack([t.positions, t.positions[1:] + [3.0, 0.0, 0.0]])
    f2 = t.faces.copy()
    f2[f2 >= 1] += 3
    m = TriangleMesh(p, np.vstack([t.faces, f2]))
    assert not validate(m).is_manifold


def test_degenerate_face_flagged():
    t = tetrahedron()
    p = t.positions.copy()
    p[3] = 0.5 * (p[0] + p[1])  # face (0, 3, 1) collapses to a segment
    rep = validate(TriangleMesh(p, t.faces))
    assert rep.is_degenerate and not rep.ok
    with pytest.raises(DegenerateMesh):
        require_valid(TriangleMesh(p, t.faces))


def test_torus_genus_one():
    rep = validate(gen_torus(2.0, 1.0, 16, 16))
    assert rep.euler_characteristic == 0 and rep.genus == 1


def test_validate_is_pure(ico3):
    before = ico3.positions.copy()
    assert validate(ico3) == validate(ico3)
    assert np.array_equal(before, ico3.positions)


def test_mesh_is_immutable(ico3):
    with pytest.raises(ValueError):
        ico3.positions[0, 0] = 5.0
    with pytest.raises(ValueError):
        ico3.faces[0, 0] = 1


@pytest.mark.parametrize("mesh", [tetrahedron(), gen_icosphere(3)], ids=["tet", "ico3"])
def test_round_trip(tmp_path, mesh):
    path = tmp_path / "m.obj"
    save_mesh(mesh, path)
    back = load_mesh(path)
    assert np.array_equal(back.positions, mesh.positions)
    assert np.array_equal(back.faces, mesh.faces)
    # writing again gives the same bytes
    path2 = tmp_path / "m2.obj"
    save_mesh(back, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_positions_parsed_exactly():
    m = parse_obj("v 0.1 0.2 0.30000000000000004\nv 1 0 0\nv 0 1 0\nf 1 2 3\n")
    assert m.positions[0].tolist() == [0.1, 0.2, 0.30000000000000004]


def test_save_unwritable(tmp_path):
    with pytest.raises(IoError):
        save_mesh(tetrahedron(), tmp_path / "missing" / "dir" / "m.obj")


def test_load_missing_file(tmp_path):
    with pytest.raises(IoError):
        load_mesh(tmp_path / "nope.obj")


def test_every_edge_twice_opposite(ico3):
    f = ico3.faces
    he = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    directed = {tuple(e) for e in he.tolist()}
    assert len(directed) == len(he)
    assert all((b, a) in directed for a, b in directed)


def test_dilate_identity(ico3):
    assert np.array_equal(dilate(ico3, 1.0).positions, ico3.positions)


def test_dilate_homogeneity(ico3):
    big = dilate(ico3, 2.0)
    assert area(big) == pytest.approx(4.0 * area(ico3), rel=1e-12)
    assert enclosed_volume(big) == pytest.approx(8.0 * enclosed_volume(ico3), rel=1e-12)
    assert willmore_energy(big) == pytest.approx(willmore_energy(ico3), rel=1e-12)


def test_translation_keeps_volume(ico3):
    moved = dilate(ico3, 1.0, (1.0, 0.0, 0.0))
    assert enclosed_volume(moved) == pytest.approx(enclosed_volume(ico3), rel=1e-10)


@pytest.mark.parametrize("alpha", [0.0, -1.0, math.nan])
def test_dilate_rejects_bad_alpha(ico3, alpha):
    with pytest.raises(DomainError):
        dilate(ico3, alpha)


@given(alpha=st.floats(0.01, 100.0), p=st.tuples(*[st.floats(-10, 10)] * 3))
def test_dilate_inverse(alpha, p):
    m = tetrahedron()
    back = dilate(dilate(m, alpha, (0.0, 0.0, 0.0)), 1.0 / alpha, (0.0, 0.0, 0.0))
    assert np.allclose(back.positions, m.positions, rtol=0, atol=1e-14 * 4)
    shifted = dilate(m, alpha, p)
    assert np.allclose(shifted.positions, alpha * (m.positions - np.array(p)))


def test_flipped_orientation():
    m = tetrahedron()
    assert validate(m.flipped()).is_oriented
    assert enclosed_volume(m.flipped()) == pytest.approx(-enclosed_volume(m))


def test_bad_shapes():
    with pytest.raises(DomainError):
        TriangleMesh(np.zeros((3, 2)), [[0, 1, 2]])
    with pytest.raises(DomainError):
        TriangleMesh(np.zeros((3, 3)), [[0, 1, 5]])
    with pytest.raises(DomainError):
        TriangleMesh([[0, 0, math.inf]] * 3, [[0, 1, 2]])


def test_unicode_rejected(tmp_path):
    path = tmp_path / "u.obj"
    path.write_bytes("v 0 0 0 é\n".encode("utf-8"))
    with pytest.raises(ParseError):
        load_mesh(path)
    assert os.path.exists(path)
