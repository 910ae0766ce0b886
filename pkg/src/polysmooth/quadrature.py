"""Quadrature rules on lines, triangles and tetrahedra.

Rules are returned in barycentric form: ``(bary, weights)`` with ``bary`` of
shape ``(npts, d + 1)`` and ``weights`` summing to one, so that the physical
rule on a simplex with vertex array ``V`` is ``bary @ V`` with weights scaled
by the simplex measure.
"""

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi


@lru_cache(maxsize=None)
def gauss_line(npts):
    """Gauss-Legendre rule on the unit segment in barycentric form."""
    x, w = np.polynomial.legendre.leggauss(npts)
    t = 0.5 * (x + 1.0)
    bary = np.column_stack([1.0 - t, t])
    return bary, 0.5 * w


def _triangle_degree2():
    a, b = 2.0 / 3.0, 1.0 / 6.0
    bary = np.array([[a, b, b], [b, a, b], [b, b, a]])
    return bary, np.full(3, 1.0 / 3.0)


def _tet_degree2():
    a = 0.5854101966249685
    b = 0.1381966011250105
    bary = np.full((4, 4), b)
    np.fill_diagonal(bary, a)
    return bary, np.full(4, 0.25)


def _collapsed(dim, npts):
    # Conical product (Stroud) rule: Gauss-Jacobi in collapsed coordinates.
    # Exact for total degree 2 * npts - 1.
    factors = []
    for k in range(dim):
        alpha = dim - 1 - k
        x, w = roots_jacobi(npts, alpha, 0.0)
        t = 0.5 * (x + 1.0)
        factors.append((t, w / 2.0 ** (alpha + 1)))
    grids = np.meshgrid(*[f[0] for f in factors], indexing="ij")
    wgrids = np.meshgrid(*[f[1] for f in factors], indexing="ij")
    ts = [g.ravel() for g in grids]
    w = np.prod([g.ravel() for g in wgrids], axis=0)
    # Map the unit cube to the simplex: each collapsed coordinate peels off a
    # fraction of what remains.
    npt = ts[0].size
    bary = np.zeros((npt, dim + 1))
    remaining = np.ones(npt)
    for k in range(dim):
        bary[:, k + 1] = remaining * ts[k]
        remaining = remaining * (1.0 - ts[k])
    bary[:, 0] = remaining
    # Jacobian of the collapse gives a total weight of 1/dim!; normalise.
    w = w / w.sum()
    return bary, w


@lru_cache(maxsize=None)
def simplex_rule(dim, degree):
    """Quadrature rule on the ``dim``-simplex exact to total ``degree``.

    Degree 2 uses the classic symmetric 3-point (triangle) and 4-point
    (tetrahedron) rules. Higher degrees use a collapsed Gauss-Jacobi product.
    """
    if dim not in (2, 3):
        raise ValueError(f"unsupported simplex dimension {dim}")
    if degree <= 1:
        bary = np.full((1, dim + 1), 1.0 / (dim + 1))
        return bary, np.ones(1)
    if degree == 2:
        return _triangle_degree2() if dim == 2 else _tet_degree2()
    npts = degree // 2 + 1
    return _collapsed(dim, npts)


@lru_cache(maxsize=None)
def facet_rule(dim, npts=None):
    """Boundary rule for one facet of a ``dim``-simplex.

    2D facets are segments (2-point Gauss by default); 3D facets are
    triangles (3-point symmetric rule by default). ``npts`` raises the order:
    in 2D it is the number of Gauss points, in 3D the polynomial degree.
    """
    if dim == 2:
        return gauss_line(npts or 2)
    if dim == 3:
        return simplex_rule(2, npts or 2)
    raise ValueError(f"unsupported dimension {dim}")
