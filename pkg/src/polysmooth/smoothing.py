"""Strain smoothing on simplex subcells: LS1, LS3n and CS element operators.

Each element is fanned into simplices about its vertex mean. On a subcell
the smoothed derivative of a basis function is linear,

    phi~_{I,j}(x) = phi~_{I,j}(x_c) + (x - x_c) . grad phi~_{I,j}(x_c),

and its coefficients solve ``W d_j = f_j``: the divergence theorem tested
against ``q = {1, x, y(, z)}``, with boundary terms from Gauss points on the
subcell facets and the domain term ``int phi_I`` replaced by its second-order
Taylor expansion about the centroid (LS1) or by an interior Gauss rule
(LS3n). CS keeps only ``q = 1``.
"""

from collections import Counter
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import basis
from .mesh import DegenerateCellError, Polytope, SmoothingCell, Subcells, _as_subcells
from .quadrature import facet_rule, simplex_rule

SCHEMES = ("ls1", "ls3n", "cs")

#: Interior evaluation points used to form element matrices, per scheme.
interior_points = Counter()


def reset_counters():
    interior_points.clear()


# ---------------------------------------------------------------------------
# material


@dataclass(frozen=True)
class Material:
    """Isotropic linear elastic material.

    ``model`` is ``"plane-stress"``, ``"plane-strain"`` or ``"3d"``.
    """

    E: float
    nu: float
    model: str = "plane-stress"

    def __post_init__(self):
        if not -1.0 < self.nu < 0.5:
            raise ValueError(f"Poisson ratio {self.nu} outside (-1, 0.5)")
        if self.E <= 0:
            raise ValueError("Young's modulus must be positive")
        if self.model not in ("plane-stress", "plane-strain", "3d"):
            raise ValueError(f"unknown material model {self.model!r}")

    @property
    def dim(self):
        return 3 if self.model == "3d" else 2

    @property
    def G(self):
        return self.E / (2.0 * (1.0 + self.nu))

    @cached_property
    def C(self):
        """Constitutive matrix in Voigt form.

        Strain order: ``(xx, yy, xy)`` in 2D and ``(xx, yy, zz, xy, yz, zx)``
        in 3D, with engineering shear strains.
        """
        E, nu = self.E, self.nu
        if self.model == "plane-stress":
            return E / (1 - nu**2) * np.array(
                [[1, nu, 0], [nu, 1, 0], [0, 0, (1 - nu) / 2]]
            )
        lam = E * nu / ((1 + nu) * (1 - 2 * nu))
        mu = self.G
        if self.model == "plane-strain":
            return np.array(
                [[lam + 2 * mu, lam, 0], [lam, lam + 2 * mu, 0], [0, 0, mu]]
            )
        C = np.zeros((6, 6))
        C[:3, :3] = lam
        C[np.arange(3), np.arange(3)] += 2 * mu
        C[np.arange(3, 6), np.arange(3, 6)] = mu
        return C


def strain_matrix(grads):
    """Strain-displacement matrix from basis gradients.

    ``grads`` has shape ``(..., n, d)``; the result ``(..., v, n * d)`` acts
    on node-major displacement vectors ``[u1x, u1y, (u1z,) u2x, ...]``.
    """
    grads = np.asarray(grads)
    *lead, n, d = grads.shape
    gx = grads[..., 0]
    gy = grads[..., 1]
    if d == 2:
        B = np.zeros((*lead, 3, n, 2))
        B[..., 0, :, 0] = gx
        B[..., 1, :, 1] = gy
        B[..., 2, :, 0] = gy
        B[..., 2, :, 1] = gx
    else:
        gz = grads[..., 2]
        B = np.zeros((*lead, 6, n, 3))
        B[..., 0, :, 0] = gx
        B[..., 1, :, 1] = gy
        B[..., 2, :, 2] = gz
        B[..., 3, :, 0] = gy
        B[..., 3, :, 1] = gx
        B[..., 4, :, 1] = gz
        B[..., 4, :, 2] = gy
        B[..., 5, :, 0] = gz
        B[..., 5, :, 2] = gx
    return B.reshape(*lead, B.shape[-3], n * d)


# ---------------------------------------------------------------------------
# the W d = f system


def _check_moments(measure, moments, vertices):
    ell = np.sqrt(((vertices[:, :, None] - vertices[:, None]) ** 2).sum(-1)).max(axis=(1, 2))
    scaled = moments / (measure * ell**2)[:, None, None]
    cond = np.linalg.cond(scaled)
    bad = ~np.isfinite(cond) | (cond > 1e12)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise DegenerateCellError(f"smoothing cell {i} is degenerate (cond {cond[i]:.2e})")


def assemble_W(cell, origin=None):
    """Moment matrix of the linear smoothing system for one cell.

    Rows correspond to ``q = 1, x, y(, z)`` measured from ``origin``
    (default: the coordinate origin)::

        [[A,        0,      0   ],
         [A x_c,    I_xx,   I_xy],
         [A y_c,    I_xy,   I_yy]]
    """
    d = cell.centroid.shape[0]
    o = np.zeros(d) if origin is None else np.asarray(origin, dtype=float)
    _check_moments(
        np.array([cell.measure]), cell.second_moments[None], cell.vertex_coords[None]
    )
    W = np.zeros((d + 1, d + 1))
    W[0, 0] = cell.measure
    W[1:, 0] = cell.measure * (cell.centroid - o)
    W[1:, 1:] = cell.second_moments
    return W


def facet_points(cells, npts=None):
    """Gauss points on every subcell facet.

    Returns ``points (s, d+1, g, d)`` and physical weights ``(s, d+1, g)``.
    """
    V = cells.vertices
    s, k, d = V.shape
    bary, w = facet_rule(d, npts)
    pts = np.empty((s, k, len(w), d))
    for f in range(k):
        idx = [i for i in range(k) if i != f]
        pts[:, f] = np.einsum("gi,sid->sgd", bary, V[:, idx, :])
    wts = cells.facet_measures[:, :, None] * w[None, None, :]
    return pts, wts


def _boundary_moments(poly, cells, npts, origin):
    """``int_{dc} phi_I q_k n_j`` for all subcells, nodes, q and directions.

    Returns ``M (s, n, d + 1, d)`` with axis 2 indexing ``q = 1, x - o, ...``.
    """
    pts, wts = facet_points(cells, npts)
    s, k, g, d = pts.shape
    phi = basis.values(poly, pts.reshape(-1, d)).reshape(s, k, g, -1)
    q = np.concatenate([np.ones((s, k, g, 1)), pts - origin[:, None, None, :]], axis=-1)
    return np.einsum(
        "sfg,sfgn,sfgq,sfj->snqj", wts, phi, q, cells.facet_normals, optimize=True
    )


@dataclass
class SmoothedBasis:
    """Smoothed basis derivatives at subcell centroids.

    ``first[s, I, j]`` is ``phi~_{I,j}(x_c)`` and ``second[s, I, j, k]`` its
    derivative along ``x_k``, for every subcell ``s`` of the element.
    """

    first: np.ndarray
    second: np.ndarray
    cells: Subcells

    def d_vector(self, node, direction, cell=0):
        """The solution vector ``d_j`` of one node, direction and cell."""
        return np.concatenate(
            [[self.first[cell, node, direction]], self.second[cell, node, direction]]
        )

    def at(self, points, cell):
        """Smoothed gradients of all nodes at ``points`` inside ``cell``."""
        dx = np.atleast_2d(points) - self.cells.centroid[cell]
        return self.first[cell][None] + np.einsum("njk,pk->pnj", self.second[cell], dx)


def _solve_cells(cells, M, domain, origin):
    """Solve ``W d_j = f_j`` for every subcell with one factorisation each."""
    s, n, _, d = M.shape
    A = cells.measure
    _check_moments(A, cells.second_moments, cells.vertices)
    W = np.zeros((s, d + 1, d + 1))
    W[:, 0, 0] = A
    W[:, 1:, 0] = A[:, None] * (cells.centroid - origin)
    W[:, 1:, 1:] = cells.second_moments
    rhs = M.copy()
    # the domain term int phi_I dq/dx_j only survives in the row q = x_j
    idx = np.arange(d)
    rhs[:, :, idx + 1, idx] -= domain[:, :, None]
    sol = np.linalg.solve(W, rhs.transpose(0, 2, 1, 3).reshape(s, d + 1, n * d))
    sol = sol.reshape(s, d + 1, n, d)
    first = sol[:, 0]  # (s, n, j)
    second = sol[:, 1:].transpose(0, 2, 3, 1)  # (s, n, j, k)
    return first, second


def _poly(element, nodes=None):
    if isinstance(element, Polytope):
        return element
    return basis._as_polytope(element, nodes)


def _taylor_integral(cells, values, hessians):
    """``A f(x_c) + 1/2 I : Hess f(x_c)`` per subcell (trailing axes kept)."""
    return cells.measure[:, None] * values + 0.5 * np.einsum(
        "skl,snkl->sn", cells.second_moments, hessians
    )


def smoothed_basis(cells, element, nodes=None, facet_npts=None, origin="centroid",
                   domain_rule="taylor"):
    """Smoothed derivatives and their gradients at subcell centroids.

    Parameters
    ----------
    cells : Subcells, SmoothingCell or list of SmoothingCell
    element : Polytope (or index loop / face list with ``nodes``)
    facet_npts : int, optional
        Raises the boundary quadrature order (see :func:`facet_rule`).
    origin : "centroid" or "global"
        Origin of the smoothing monomials. Both span the same space; the
        centroid origin is better conditioned.
    domain_rule : "taylor" or int
        ``"taylor"`` evaluates ``int phi_I`` from the centroid value and
        Hessian (LS1); an integer is the degree of an interior simplex rule
        (LS3n uses 2).
    """
    poly = _poly(element, nodes)
    cells = _as_subcells(cells)
    d = poly.dim
    if origin == "centroid":
        o = cells.centroid
    else:
        o = np.zeros_like(cells.centroid)
    M = _boundary_moments(poly, cells, facet_npts, o)
    domain = domain_integrals(poly, cells, domain_rule)
    first, second = _solve_cells(cells, M, domain, o)
    return SmoothedBasis(first, second, cells)


def domain_integrals(poly, cells, rule="taylor"):
    """``int_c phi_I`` per subcell and node, by Taylor expansion or Gauss."""
    if rule == "taylor":
        ev = basis.evaluate(poly, cells.centroid)
        return _taylor_integral(cells, ev.values, ev.hessians)
    bary, w = simplex_rule(poly.dim, int(rule))
    pts = np.einsum("gi,sid->sgd", bary, cells.vertices)
    phi = basis.values(poly, pts.reshape(-1, poly.dim)).reshape(len(cells), len(w), -1)
    return cells.measure[:, None] * np.einsum("g,sgn->sn", w, phi)


def assemble_f(cell, element, node_index, direction, nodes=None, origin=None,
               facet_npts=None):
    """Right-hand side ``f_j`` of one node and direction on one cell.

    Row ``k`` holds ``int_{dc} phi_I q_k n_j`` by facet Gauss quadrature,
    minus the Taylor-expanded ``int_c phi_I`` in the row where
    ``dq_k / dx_j = 1``.
    """
    poly = _poly(element, nodes)
    cells = _as_subcells(cell)
    d = poly.dim
    o = np.zeros((1, d)) if origin is None else np.asarray(origin, float).reshape(1, d)
    M = _boundary_moments(poly, cells, facet_npts, o)
    domain = domain_integrals(poly, cells, "taylor")
    f = M[0, node_index, :, direction].copy()
    f[direction + 1] -= domain[0, node_index]
    return f


# ---------------------------------------------------------------------------
# element operators


def _check_dim(poly, material):
    if poly.dim != material.dim:
        raise ValueError(
            f"{material.model} material used on a {poly.dim}D element"
        )


def element_stiffness_ls1(element, material, nodes=None, facet_npts=None, cells=None):
    """One-point linear smoothing stiffness (Taylor-expanded, closed form)."""
    poly = _poly(element, nodes)
    _check_dim(poly, material)
    cells = poly.subcells if cells is None else cells
    sb = smoothed_basis(cells, poly, facet_npts=facet_npts)
    interior_points["ls1"] += len(cells)
    return _ls1_from_smoothed(sb, material)


def _gram_stiffness(G, C):
    """``sum_g G_g^T C G_g`` as one product ``H^T H`` with ``C = L L^T``."""
    L = np.linalg.cholesky(C)
    H = np.matmul(L.T, G).reshape(-1, G.shape[-1])
    K = H.T @ H
    return 0.5 * (K + K.T)


def _ls1_from_smoothed(sb, material):
    """``sum_c A B0^T C B0 + sum_kl I_kl dB_k^T C dB_l``.

    The moment term is diagonalised per cell, ``I = V diag(lam) V^T``, so it
    becomes ``d`` weighted Gram terms of ``sum_k V_km dB_k``.
    """
    cells = sb.cells
    B0 = strain_matrix(sb.first)  # (s, v, q)
    dB = strain_matrix(sb.second.transpose(0, 3, 1, 2))  # (s, k, v, q)
    d = dB.shape[1]
    lam, V = np.linalg.eigh(cells.second_moments)
    root = np.sqrt(np.clip(lam, 0.0, None))
    G = np.concatenate(
        [
            np.sqrt(cells.measure)[:, None, None, None] * B0[:, None],
            np.matmul(
                np.swapaxes(V * root[:, None, :], 1, 2), dB.reshape(len(root), d, -1)
            ).reshape(dB.shape),
        ],
        axis=1,
    )
    return _gram_stiffness(G, material.C)


def element_stiffness_ls3n(element, material, nodes=None, interior_degree=2,
                           facet_npts=None, cells=None):
    """Linear smoothing with an interior simplex rule per subcell.

    With the default degree-2 rule this uses 3 (2D) or 4 (3D) points per
    subcell for both the domain term and the stiffness integral.
    """
    poly = _poly(element, nodes)
    _check_dim(poly, material)
    cells = poly.subcells if cells is None else cells
    sb = smoothed_basis(cells, poly, facet_npts=facet_npts, domain_rule=interior_degree)
    bary, w = simplex_rule(poly.dim, interior_degree)
    pts = np.einsum("gi,sid->sgd", bary, cells.vertices)
    dx = pts - cells.centroid[:, None, :]
    grads = sb.first[:, None] + np.einsum("snjk,sgk->sgnj", sb.second, dx)
    B = strain_matrix(grads)  # (s, g, v, q)
    interior_points["ls3n"] += len(cells) * len(w)
    wts = cells.measure[:, None] * w[None, :]
    return _gram_stiffness(np.sqrt(wts)[:, :, None, None] * B, material.C)


def element_stiffness_cs(element, material, nodes=None, facet_npts=None, cells=None):
    """Constant smoothing: one smoothed gradient per subcell (2D only)."""
    poly = _poly(element, nodes)
    _check_dim(poly, material)
    if poly.dim != 2:
        raise NotImplementedError("constant smoothing is only provided in 2D")
    cells = poly.subcells if cells is None else cells
    g = constant_smoothed_gradients(poly, cells, facet_npts)
    B = strain_matrix(g)
    return np.einsum("s,svi,vw,swj->ij", cells.measure, B, material.C, B, optimize=True)


def constant_smoothed_gradients(poly, cells, facet_npts=None):
    """``(1 / A) int_{dc} phi_I n`` per subcell, shape ``(s, n, d)``."""
    M = _boundary_moments(poly, cells, facet_npts, cells.centroid)
    return M[:, :, 0, :] / cells.measure[:, None, None]


def element_stiffness(element, material, scheme="ls1", nodes=None, **options):
    scheme = scheme.lower()
    if scheme == "ls1":
        return element_stiffness_ls1(element, material, nodes, **options)
    if scheme == "ls3n":
        return element_stiffness_ls3n(element, material, nodes, **options)
    if scheme == "cs":
        return element_stiffness_cs(element, material, nodes, **options)
    raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


def _field(b, points):
    if callable(b):
        return np.asarray(b(points), dtype=float)
    b = np.asarray(b, dtype=float)
    return np.broadcast_to(b, points.shape).copy()


def body_force_vector(element, body_force, nodes=None, scheme="ls1", cells=None):
    """Consistent nodal body force of one element.

    LS1 uses the Taylor expansion of ``phi^T b`` about each subcell
    centroid with ``b`` frozen at the centroid; LS3n the degree-2 interior
    rule; CS the subcell centroid value.
    """
    poly = _poly(element, nodes)
    cells = poly.subcells if cells is None else cells
    d = poly.dim
    if body_force is None:
        return np.zeros(poly.n_vertices * d)
    if scheme == "ls3n":
        bary, w = simplex_rule(d, 2)
        pts = np.einsum("gi,sid->sgd", bary, cells.vertices).reshape(-1, d)
        phi = basis.values(poly, pts)
        b = _field(body_force, pts)
        wts = (cells.measure[:, None] * w[None, :]).ravel()
        return np.einsum("p,pn,pi->ni", wts, phi, b).ravel()
    b = _field(body_force, cells.centroid)
    if scheme == "cs":
        phi = basis.values(poly, cells.centroid)
        return np.einsum("s,sn,si->ni", cells.measure, phi, b).ravel()
    ev = basis.evaluate(poly, cells.centroid)
    weights = _taylor_integral(cells, ev.values, ev.hessians)
    return np.einsum("sn,si->ni", weights, b).ravel()


def _fd_hessian(f, X, step):
    d = X.shape[1]
    H = np.empty((X.shape[0], d, d))
    E = np.eye(d) * step
    f0 = f(X)
    for i in range(d):
        H[:, i, i] = (f(X + E[i]) - 2 * f0 + f(X - E[i])) / step**2
        for j in range(i + 1, d):
            H[:, i, j] = H[:, j, i] = (
                f(X + E[i] + E[j]) - f(X + E[i] - E[j])
                - f(X - E[i] + E[j]) + f(X - E[i] - E[j])
            ) / (4 * step**2)
    return H


def integrate_function(element, f, hessian=None, nodes=None):
    """One point per subcell quadrature of a scalar field over a polytope.

    ``sum_c [A f(x_c) + 1/2 I_c : Hess f(x_c)]``, exact for quadratics.
    ``f`` maps points ``(p, d)`` to values ``(p,)``; ``hessian`` maps them
    to ``(p, d, d)``. Without it a central difference with step
    ``1e-5 * diameter`` is used, which limits the attainable accuracy.
    """
    poly = _poly(element, nodes)
    cells = poly.subcells
    X = cells.centroid
    vals = np.asarray(f(X), dtype=float)
    if hessian is None:
        H = _fd_hessian(f, X, 1e-5 * poly.diameter)
    else:
        H = np.asarray(hessian(X), dtype=float)
    interior_points["integrate"] += len(cells)
    return float(
        (cells.measure * vals).sum()
        + 0.5 * np.einsum("skl,skl->", cells.second_moments, H)
    )


def integrate_dense(element, f, degree=4, nodes=None):
    """Reference integral by a degree-``degree`` rule on every fan simplex."""
    poly = _poly(element, nodes)
    cells = poly.subcells
    bary, w = simplex_rule(poly.dim, degree)
    pts = np.einsum("gi,sid->sgd", bary, cells.vertices)
    vals = np.asarray(f(pts.reshape(-1, poly.dim))).reshape(len(cells), len(w))
    return float(np.einsum("s,g,sg->", cells.measure, w, vals))
