import warnings

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from polysmooth.bench import CUBE_FACES
from polysmooth.mesh import (
    Box,
    DegenerateCellError,
    LShape,
    MeshError,
    NonSimpleVertexError,
    Polytope,
    PolytopeMesh,
    cvt_energy,
    generate_cvt_mesh,
    is_star_convex,
    lloyd,
    simplex_moments,
    subdivide_to_simplices,
)

from .conftest import UNIT_SQUARE, convex_polygon, regular_polygon

TRI = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


# -- simplex moments ---------------------------------------------------------


def test_reference_triangle_moments():
    A, c, I = simplex_moments(TRI)
    assert A == pytest.approx(0.5)
    np.testing.assert_allclose(c, [1 / 3, 1 / 3])


def test_reference_triangle_second_moments_symbolic():
    x, y = sp.symbols("x y")
    third = sp.Rational(1, 3)
    Ixx = sp.integrate(sp.integrate((x - third) ** 2, (y, 0, 1 - x)), (x, 0, 1))
    Ixy = sp.integrate(sp.integrate((x - third) * (y - third), (y, 0, 1 - x)), (x, 0, 1))
    assert Ixx == sp.Rational(1, 36)
    _, _, I = simplex_moments(TRI)
    assert I[0, 0] == pytest.approx(float(Ixx), rel=1e-14)
    assert I[1, 1] == pytest.approx(float(Ixx), rel=1e-14)
    assert I[0, 1] == pytest.approx(float(Ixy), rel=1e-14)


def test_tetrahedron_moments_symbolic():
    x, y, z = sp.symbols("x y z")
    c = sp.Rational(1, 4)
    f = (x - c) * (z - c)
    val = sp.integrate(sp.integrate(sp.integrate(f, (z, 0, 1 - x - y)), (y, 0, 1 - x)), (x, 0, 1))
    V = np.vstack([np.zeros(3), np.eye(3)])
    m, cen, I = simplex_moments(V)
    assert m == pytest.approx(1 / 6)
    np.testing.assert_allclose(cen, 0.25)
    assert I[0, 2] == pytest.approx(float(val), rel=1e-13)


def test_first_moments_vanish_about_centroid(rng):
    from polysmooth.quadrature import simplex_rule

    for dim in (2, 3):
        V = rng.normal(size=(dim + 1, dim))
        if np.linalg.det(V[1:] - V[0]) < 0:
            V[[1, 2]] = V[[2, 1]]
        m, c, I = simplex_moments(V)
        bary, w = simplex_rule(dim, 2)
        first = m * (w @ (bary @ V - c))
        assert np.abs(first).max() <= 1e-12 * m * np.ptp(V)
        assert np.all(np.linalg.eigvalsh(I) >= -1e-15)
        np.testing.assert_allclose(I, I.T)


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.floats(-3, 3), min_size=6, max_size=6),
    st.lists(st.floats(-50, 50), min_size=2, max_size=2),
)
def test_moments_translation_covariant(coords, shift):
    V = np.array(coords).reshape(3, 2)
    if abs(np.linalg.det(V[1:] - V[0])) < 1e-3:
        return
    m1, c1, I1 = simplex_moments(V) if np.linalg.det(V[1:] - V[0]) > 0 else simplex_moments(V[[0, 2, 1]])
    W = V + np.array(shift)
    m2, c2, I2 = simplex_moments(W) if np.linalg.det(W[1:] - W[0]) > 0 else simplex_moments(W[[0, 2, 1]])
    scale = np.ptp(V) ** 2
    assert m2 == pytest.approx(m1, rel=1e-12)
    np.testing.assert_allclose(c2, c1 + shift, atol=1e-12 * max(1.0, np.abs(shift).max()))
    np.testing.assert_allclose(I2, I1, atol=1e-12 * scale * m1 + 1e-13)


def test_degenerate_simplex_rejected():
    with pytest.raises(DegenerateCellError):
        simplex_moments(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]))


# -- subdivision ---------------------------------------------------------------


def test_unit_square_subdivision():
    cells = subdivide_to_simplices(Polytope(UNIT_SQUARE))
    assert len(cells) == 4
    np.testing.assert_allclose(cells.measure, 0.25, rtol=1e-14)


def test_regular_hexagon_subdivision_congruent():
    hexagon = regular_polygon(6)
    cells = subdivide_to_simplices(hexagon)
    assert len(cells) == 6
    total = 1.5 * np.sqrt(3.0)
    np.testing.assert_allclose(cells.measure, total / 6, rtol=1e-13)


def test_subdivision_from_index_loop():
    cells = subdivide_to_simplices([0, 1, 2, 3], UNIT_SQUARE)
    assert len(cells.cells()) == 4
    assert cells.cells()[0].measure == pytest.approx(0.25)


def test_unit_cube_split_by_diagonals_gives_twelve_tets():
    nodes = np.array([[(i >> k) & 1 for k in range(3)] for i in range(8)], dtype=float)
    cube = Polytope(nodes, CUBE_FACES, face_split="diagonal")
    cells = subdivide_to_simplices(cube)
    assert len(cells) == 12
    assert cells.measure.sum() == pytest.approx(1.0, rel=1e-14)
    assert len(subdivide_to_simplices(Polytope(nodes, CUBE_FACES))) == 24


def test_subcells_add_no_nodes(pentagon):
    cells = pentagon.subcells
    verts = cells.vertices.reshape(-1, 2)
    known = np.vstack([pentagon.coords, pentagon.center])
    d = np.linalg.norm(verts[:, None] - known[None], axis=-1).min(axis=1)
    assert d.max() < 1e-14


def test_subcell_measures_sum_to_element(rng):
    for _ in range(10):
        poly = convex_polygon(rng, rng.integers(3, 10))
        assert poly.subcells.measure.sum() == pytest.approx(poly.measure, rel=1e-12)


def test_star_convexity_checks():
    pent = regular_polygon(5)
    assert is_star_convex(pent, pent.center)
    lshape = Polytope(np.array([[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]], dtype=float))
    assert lshape.is_star_convex([0.5, 0.5])
    assert not is_star_convex(lshape, [1.8, 1.8])
    assert not is_star_convex(Polytope(UNIT_SQUARE), [2.0, 2.0])
    assert not is_star_convex([0, 1, 2], [0.5, 0.5], np.array([[0, 0], [1, 1], [2, 2.0]]))


def test_nonconvex_polygon_warns_but_validates():
    arrow = Polytope(np.array([[0, 0], [2, 1], [0, 2], [0.7, 1.0]], dtype=float))
    with pytest.warns(UserWarning, match="not convex"):
        arrow.validate()


def test_clockwise_and_self_intersecting_loops_rejected():
    with pytest.raises(MeshError, match="counter-clockwise"):
        Polytope(UNIT_SQUARE[::-1]).validate()
    bowtie = np.array([[0, 0], [1, 1], [1, 0], [0, 1]], dtype=float)
    with pytest.raises(MeshError):
        Polytope(bowtie).validate()


def test_nonplanar_face_rejected():
    nodes = np.array([[(i >> k) & 1 for k in range(3)] for i in range(8)], dtype=float)
    nodes[7, 2] = 1.2
    with pytest.raises(MeshError, match="planar"):
        Polytope(nodes, CUBE_FACES).validate()


def test_non_simple_vertex_rejected():
    # square pyramid: apex touches four faces
    P = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0], [0.5, 0.5, 1.0]])
    faces = [[0, 3, 2, 1], [0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]]
    with pytest.raises(NonSimpleVertexError, match="perturb"):
        Polytope(P, faces).vertex_facets


# -- CVT meshes ------------------------------------------------------------------


def test_single_seed_gives_whole_square():
    mesh = generate_cvt_mesh(Box((0.0, 0.0), (1.0, 1.0)), 1, 0, rng_seed=3)
    assert mesh.n_elements == 1
    assert mesh.n_nodes == 4
    assert mesh.polytope(0).measure == pytest.approx(1.0)


def test_quadrant_seeds_give_four_squares():
    seeds = np.array([[0.25, 0.25], [0.75, 0.25], [0.25, 0.75], [0.75, 0.75]])
    mesh = generate_cvt_mesh(Box((0.0, 0.0), (1.0, 1.0)), 4, 0, seeds=seeds)
    assert mesh.n_elements == 4
    for e in range(4):
        assert mesh.polytope(e).measure == pytest.approx(0.25, rel=1e-12)
        assert len(mesh.elements[e]) == 4


def test_cvt_areas_sum_to_one():
    mesh = generate_cvt_mesh(Box((0.0, 0.0), (1.0, 1.0)), 10, 50, rng_seed=7)
    assert abs(mesh.measure() - 1.0) <= 1e-12
    mesh.validate(1.0)


def test_cvt_is_deterministic():
    a = generate_cvt_mesh(Box((0.0, 0.0), (1.0, 1.0)), 20, 5, rng_seed=11)
    b = generate_cvt_mesh(Box((0.0, 0.0), (1.0, 1.0)), 20, 5, rng_seed=11)
    assert np.array_equal(a.nodes, b.nodes)
    assert a.elements == b.elements


def test_lloyd_energy_non_increasing(rng):
    for box in (Box((0.0, 0.0), (1.0, 1.0)), Box((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))):
        history = []
        lloyd(box.sample(rng, 15), box, 8, history)
        e = np.array(history)
        assert np.all(np.diff(e) <= 1e-10 * e[:-1])


def test_cvt_energy_matches_history(rng):
    box = Box((0.0, 0.0), (1.0, 1.0))
    seeds = box.sample(rng, 6)
    history = []
    lloyd(seeds, box, 1, history)
    assert cvt_energy(seeds, box) == pytest.approx(history[0])


def test_seed_collision_reported():
    seeds = np.array([[0.3, 0.3], [0.3, 0.3], [0.8, 0.8]])
    with pytest.raises(Exception, match="seed|collide|[Qq]hull"):
        generate_cvt_mesh(Box((0.0, 0.0), (1.0, 1.0)), 3, 0, seeds=seeds)


def test_3d_mesh_tiles_cube(mesh3d):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        mesh3d.validate(1.0)
    for e in range(mesh3d.n_elements):
        p = mesh3d.polytope(e)
        assert p.subcells.measure.sum() == pytest.approx(p.measure, rel=1e-12)


def test_boundary_tags_cover_box(mesh2d, mesh3d):
    assert set(mesh2d.boundary) == {"xmin", "xmax", "ymin", "ymax"}
    assert set(mesh3d.boundary) == {"xmin", "xmax", "ymin", "ymax", "zmin", "zmax"}
    tagged = sum(len(v) for v in mesh3d.boundary.values())
    assert tagged == len(mesh3d.boundary_facets())


def test_lshape_mesh_is_conforming():
    dom = LShape(1.0, 0.5)
    mesh = generate_cvt_mesh(dom, 30, 5, rng_seed=2)
    mesh.validate(dom.measure)
    tags = set(mesh.boundary)
    assert {"xsym", "ysym", "xmax", "ymax", "hole_x", "hole_y", "zmin", "zmax"} <= tags
    # no interior face is left single: all untagged facets are paired
    assert sum(len(v) for v in mesh.boundary.values()) == len(mesh.boundary_facets())


def test_lshape_2d():
    dom = LShape(1.0)
    mesh = generate_cvt_mesh(dom, 12, 5, rng_seed=2)
    assert mesh.measure() == pytest.approx(3.0, rel=1e-12)


def test_json_roundtrip(tmp_path, mesh2d, mesh3d):
    for mesh in (mesh2d, mesh3d):
        path = tmp_path / f"m{mesh.dim}.json"
        mesh.save(path)
        back = PolytopeMesh.load(path)
        np.testing.assert_array_equal(back.nodes, mesh.nodes)
        for e in range(mesh.n_elements):
            assert back.polytope(e).measure == pytest.approx(mesh.polytope(e).measure, rel=1e-14)
        assert {k: len(v) for k, v in back.boundary.items()} == {
            k: len(v) for k, v in mesh.boundary.items()
        }


def test_vtk_export(tmp_path, mesh2d, mesh3d):
    for mesh in (mesh2d, mesh3d):
        path = tmp_path / f"m{mesh.dim}.vtk"
        mesh.write_vtk(path, {"u": np.zeros((mesh.n_nodes, mesh.dim))})
        text = path.read_text()
        assert "DATASET UNSTRUCTURED_GRID" in text
        assert f"CELL_TYPES {mesh.n_elements}" in text
        assert "VECTORS u double" in text
        types = text.split("CELL_TYPES")[1].split()[1 : 1 + mesh.n_elements]
        assert set(types) == {"7" if mesh.dim == 2 else "42"}


def test_missing_node_detected():
    mesh = PolytopeMesh(UNIT_SQUARE, [[0, 1, 2, 7]])
    with pytest.raises((MeshError, IndexError)):
        mesh.validate()
