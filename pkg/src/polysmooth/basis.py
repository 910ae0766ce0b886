"""Wachspress generalized barycentric coordinates with derivatives.

For a vertex ``v`` with incident facets ``F(v)`` the weight is
``w_v = det(n_f : f in F(v)) / prod_{f in F(v)} h_f(x)`` where
``h_f(x) = (x_f - x) . n_f`` is the distance to facet ``f``; the
coordinates are ``phi_v = w_v / sum_u w_u``. Writing ``p_f = n_f / h_f``,

    grad w_v = w_v R_v,   Hess w_v = w_v (R_v R_v^T + sum_f p_f p_f^T),

with ``R_v = sum_{f in F(v)} p_f``; derivatives of ``phi`` follow from the
quotient rule applied twice.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .mesh import MeshError, Polytope, _polytope_from_indices


class BasisError(ValueError):
    """Query point outside the element or on its boundary."""


@dataclass
class BasisEval:
    """Basis values and derivatives at one or more points.

    Single-point evaluations have shapes ``(n,)``, ``(n, d)``, ``(n, d, d)``;
    batched ones carry a leading point axis.
    """

    values: np.ndarray
    gradients: np.ndarray
    hessians: np.ndarray


def _arrays(poly):
    return (
        np.ascontiguousarray(poly.facet_normals),
        np.ascontiguousarray(poly.facet_offsets),
        np.ascontiguousarray(poly.vertex_facets, dtype=np.int64),
        np.ascontiguousarray(poly.vertex_constants),
    )


def _as_polytope(element, nodes):
    if isinstance(element, Polytope):
        return element
    if nodes is None:
        raise MeshError("node coordinates required")
    return _polytope_from_indices(element, np.asarray(nodes, dtype=float))


def distances(poly, points):
    """``h_f(x)`` for every facet, shape ``(p, m)``."""
    return poly.facet_offsets[None, :] - np.atleast_2d(points) @ poly.facet_normals.T


def values(poly, points):
    """Basis values anywhere in the closed element, shape ``(p, n)``."""
    pts = np.ascontiguousarray(np.atleast_2d(points), dtype=float)
    N, off, vf, c = _arrays(poly)
    return kernels.wachspress_values(N, off, vf, c, pts, poly.diameter)


def evaluate(poly, points, check=True):
    """Values, gradients and Hessians at strictly interior points (batched)."""
    pts = np.ascontiguousarray(np.atleast_2d(points), dtype=float)
    if check:
        h = distances(poly, pts)
        if np.any(h <= 1e-12 * poly.diameter):
            raise BasisError(
                f"element {poly.index}: query point on or outside the boundary"
            )
    N, off, vf, c = _arrays(poly)
    phi, grad, hess = kernels.wachspress_derivatives(N, off, vf, c, pts)
    return BasisEval(phi, grad, hess)


def _single(element, nodes, query_point, dim):
    poly = _as_polytope(element, nodes)
    if poly.dim != dim:
        raise MeshError(f"expected a {dim}D element")
    ev = evaluate(poly, np.asarray(query_point, dtype=float)[None])
    return BasisEval(ev.values[0], ev.gradients[0], ev.hessians[0])


def wachspress_2d(element, nodes, query_point):
    """Wachspress basis of a polygon at one interior point.

    ``element`` is a :class:`~polysmooth.mesh.Polytope` or a CCW index loop
    into ``nodes``.
    """
    return _single(element, nodes, query_point, 2)


def wachspress_3d(element, nodes, query_point):
    """Wachspress basis of a simple polyhedron at one interior point.

    ``element`` is a :class:`~polysmooth.mesh.Polytope` or a list of outward
    face loops into ``nodes``. Vertices must have exactly three incident
    faces. With a face list the basis functions are ordered by first
    appearance of each node in ``element``.
    """
    return _single(element, nodes, query_point, 3)
