import warnings

import numpy as np
import pytest
import sympy as sp
from sympy.parsing.sympy_parser import (
    convert_xor,
    implicit_multiplication_application,
    parse_expr,
    standard_transformations,
)

from polysmooth.exact import (
    LINEAR_PATCH,
    QUADRATIC_PATCH,
    CantileverSolution,
    QuadraticField,
    SeriesTruncationWarning,
    TorsionSolution,
    elasticity_tensor,
    parse_polynomial,
)
from polysmooth.smoothing import Material

_RULES = standard_transformations + (implicit_multiplication_application, convert_xor)
MAT = {2: Material(1.0, 0.3, "plane-stress"), 3: Material(1.0, 0.3, "3d")}


def _sympy_body_force(components, C):
    """``-div sigma`` of a polynomial field, symbolically."""
    d = len(components)
    X = sp.symbols("x y z")[:d]
    names = dict(zip("xyz", X))
    u = [parse_expr(c, local_dict=names, transformations=_RULES) for c in components]
    eps = [[(sp.diff(u[i], X[j]) + sp.diff(u[j], X[i])) / 2 for j in range(d)] for i in range(d)]
    C4 = elasticity_tensor(C)
    sig = [[sum(C4[i, j, k, l] * eps[k][l] for k in range(d) for l in range(d))
            for j in range(d)] for i in range(d)]
    b = [-sum(sp.diff(sig[i][j], X[j]) for j in range(d)) for i in range(d)]
    return np.array([float(sp.simplify(v)) for v in b])


def test_parse_polynomial():
    assert parse_polynomial("0.1+0.2x+0.2x+0.1z^2-xy", 3) == {
        (0, 0, 0): 0.1, (1, 0, 0): 0.4, (0, 0, 2): 0.1, (1, 1, 0): -1.0,
    }
    with pytest.raises(ValueError):
        parse_polynomial("0.1+z", 2)
    with pytest.raises(ValueError):
        parse_polynomial("0.1+#", 2)


@pytest.mark.parametrize("dim", [2, 3])
def test_quadratic_body_force_matches_symbolic(dim):
    C = MAT[dim].C
    field = QuadraticField(QUADRATIC_PATCH[dim], C)
    np.testing.assert_allclose(field.b, _sympy_body_force(QUADRATIC_PATCH[dim], C),
                               rtol=1e-13, atol=1e-15)


def test_quadratic_2d_body_force_closed_form():
    C = MAT[2].C
    b = QuadraticField(QUADRATIC_PATCH[2], C).b
    expect = [-0.2 * C[0, 0] - 0.15 * C[0, 1] - 0.55 * C[2, 2],
              -0.1 * C[0, 1] - 0.2 * C[1, 1] - 0.2 * C[2, 2]]
    np.testing.assert_allclose(b, expect, rtol=1e-14)


def test_quadratic_3d_body_force_in_plane_components():
    C = MAT[3].C
    b = QuadraticField(QUADRATIC_PATCH[3], C).b
    bx = -0.3 * C[0, 0] - 0.2 * C[0, 1] - 0.15 * C[0, 2] - 0.6 * C[3, 3] - 0.35 * C[5, 5]
    by = -0.15 * C[0, 1] - 0.3 * C[1, 1] - 0.2 * C[1, 2] - 0.55 * C[3, 3] - 0.4 * C[4, 4]
    np.testing.assert_allclose(b[:2], [bx, by], rtol=1e-14)


@pytest.mark.parametrize("dim", [2, 3])
def test_linear_fields_are_load_free(dim):
    field = QuadraticField(LINEAR_PATCH[dim], MAT[dim].C)
    np.testing.assert_array_equal(field.b, 0.0)
    x = np.random.default_rng(0).normal(size=(5, dim))
    np.testing.assert_allclose(field.grad(x), np.broadcast_to(field.B, (5, dim, dim)))


def test_quadratic_gradient_matches_fd():
    field = QuadraticField(QUADRATIC_PATCH[3], MAT[3].C)
    x = np.array([[0.3, 0.7, 0.2]])
    h = 1e-6
    fd = np.column_stack([(field.u(x + h * e) - field.u(x - h * e))[0] / (2 * h)
                          for e in np.eye(3)])
    np.testing.assert_allclose(field.grad(x)[0], fd, atol=1e-9)


def test_cantilever_stress_closed_form():
    beam = CantileverSolution()
    rng = np.random.default_rng(1)
    x = np.column_stack([rng.uniform(0, beam.L, 50), rng.uniform(-1, 1, 50)])
    s = beam.stress(x)
    ref = beam.stress_closed_form(x)
    np.testing.assert_allclose(s, ref, atol=1e-12 * np.abs(ref).max())


def test_cantilever_is_equilibrated_and_loaded():
    beam = CantileverSolution()
    X, Y = sp.symbols("x y")
    L, D, nu, P, E = beam.L, beam.D, beam.nu, beam.P, beam.E
    I = D**3 / 12
    ux = P * Y / (6 * E * I) * ((6 * L - 3 * X) * X + (2 + nu) * (Y**2 - D**2 / 4))
    uy = -P / (6 * E * I) * (3 * nu * Y**2 * (L - X) + (4 + 5 * nu) * D**2 * X / 4
                             + (3 * L - X) * X**2)
    f = sp.lambdify((X, Y), [sp.diff(ux, X), sp.diff(ux, Y), sp.diff(uy, X), sp.diff(uy, Y)])
    pts = np.array([[1.0, 0.3], [7.0, -0.8]])
    np.testing.assert_allclose(beam.grad(pts).reshape(2, 4),
                               np.array([f(*p) for p in pts]), rtol=1e-12)
    # the end shear integrates to -P
    y = np.linspace(-1, 1, 2001)
    t = beam.traction([1.0, 0.0])(np.column_stack([np.full_like(y, beam.L), y]))
    assert np.trapezoid(t[:, 1], y) == pytest.approx(-beam.P, rel=1e-6)
    assert beam.tip_deflection() == pytest.approx(-2.565625e-3, rel=1e-12)


def test_torsion_warping_is_harmonic_and_sides_traction_free():
    with pytest.warns(SeriesTruncationWarning):
        bar = TorsionSolution()
    rng = np.random.default_rng(2)
    x = rng.uniform(-0.9, 0.9, size=(20, 3))
    h = 1e-4
    lap = sum(bar.warping(x + h * e) - 2 * bar.warping(x) + bar.warping(x - h * e)
              for e in np.eye(3)[:2]) / h**2
    assert np.abs(lap).max() <= 1e-5
    for side in (-1.0, 1.0):
        pts = rng.uniform(-1, 1, size=(10, 3))
        pts[:, 0] = side
        assert np.abs(bar.traction([side, 0.0, 0.0])(pts)).max() <= 1e-12 * bar.G
    np.testing.assert_allclose(bar.stress(x), bar.stress_closed_form(x), atol=1e-12)


def test_torsion_truncation_residual_on_y_faces():
    # the y = +-b faces are free only in the limit N -> infinity
    y = np.linspace(-1, 1, 401)
    pts = np.column_stack([y, np.ones_like(y), np.zeros_like(y)])
    res = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SeriesTruncationWarning)
        for N in (10, 40, 160):
            res.append(np.abs(TorsionSolution(N=N).traction([0, 1.0, 0])(pts)).max())
    assert res[0] > res[1] > res[2]
    assert res[1] < 2e-2 * TorsionSolution.G


def test_torsion_parameters():
    with pytest.raises(ValueError):
        TorsionSolution(N=0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        # a single term is far from converged, so the warning fires
        with pytest.raises(SeriesTruncationWarning):
            TorsionSolution(N=1)
    with pytest.warns(SeriesTruncationWarning, match="N=40"):
        bar = TorsionSolution(beta=2.0)
    assert bar.E == pytest.approx(2 * bar.G * 1.3)
    assert bar.u([[0.2, 0.3, 1.0]])[0, 0] == pytest.approx(-0.6)
