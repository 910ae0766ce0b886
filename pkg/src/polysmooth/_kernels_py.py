"""Pure numpy implementations of the hot kernels.

Every function here has a compiled twin in ``_kernels.pyx`` with the same
signature; :mod:`polysmooth.kernels` picks one at import.
"""

import numpy as np


def wachspress_values(normals, offsets, vertex_facets, vertex_const, points, scale):
    """Wachspress values in product form (valid on the element boundary).

    ``phi_v = c_v prod_{f not at v} h_f / sum_u c_u prod_{f not at u} h_f``.
    """
    h = (offsets[None, :] - points @ normals.T) / scale  # (p, m)
    n, m = vertex_facets.shape[0], normals.shape[0]
    away = np.ones((n, m), dtype=bool)
    away[np.arange(n)[:, None], vertex_facets] = False
    prod = np.prod(np.where(away[None], h[:, None, :], 1.0), axis=2)  # (p, n)
    num = vertex_const[None, :] * prod
    return num / num.sum(axis=1, keepdims=True)


def wachspress_derivatives(normals, offsets, vertex_facets, vertex_const, points):
    """Values, gradients and Hessians at strictly interior points.

    Returns ``phi (p, n)``, ``grad (p, n, d)``, ``hess (p, n, d, d)``.

    With ``s_f`` the basis mass on facet ``f`` and ``t_f = 1 - s_f`` summed
    directly over the other vertices, ``grad phi_v = phi_v D_v`` where
    ``D_v = sum_f a_vf p_f`` and ``a_vf = t_f`` if ``v`` lies on ``f``, else
    ``-s_f``. Every ``a_vf p_f`` stays bounded as ``h_f -> 0``, which keeps
    the derivatives accurate close to the boundary.
    """
    h = offsets[None, :] - points @ normals.T  # (p, m)
    n, m = vertex_facets.shape[0], normals.shape[0]
    on = np.zeros((n, m), dtype=bool)
    on[np.arange(n)[:, None], vertex_facets] = True
    hn = h / h.max(axis=1, keepdims=True)
    prod = np.prod(np.where(on[None], 1.0, hn[:, None, :]), axis=2)
    num = vertex_const[None, :] * prod
    phi = num / num.sum(axis=1, keepdims=True)  # (p, n)
    s = phi @ on
    t = phi @ ~on
    a = np.where(on[None], t[:, None, :], -s[:, None, :])  # (p, n, m)
    pf = normals[None, :, :] / h[:, :, None]  # scaled normals (p, m, d)
    D = np.einsum("pnm,pmi->pni", a, pf)
    grad = phi[..., None] * D
    S = np.einsum("pnm,pmi,pmj->pnij", a, pf, pf, optimize=True)
    DD = D[..., :, None] * D[..., None, :]
    M = np.einsum("pn,pnij->pij", phi, DD)
    hess = phi[..., None, None] * (DD + S - M[:, None])
    return phi, grad, hess
