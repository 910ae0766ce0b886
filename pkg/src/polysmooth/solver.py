"""Global assembly, boundary conditions, linear solve and error measures."""

import logging
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg, splu
from scipy.spatial import cKDTree

from . import basis
from .mesh import Polytope, _newell_normal
from .quadrature import facet_rule, gauss_line, simplex_rule
from .smoothing import body_force_vector, element_stiffness

logger = logging.getLogger(__name__)


class AssemblyError(RuntimeError):
    """An element operator failed; the message names the element."""


class SingularSystemError(RuntimeError):
    """The constrained stiffness matrix is singular or indefinite."""


@dataclass
class BoundaryCondition:
    """Prescribed displacements and tractions.

    ``dirichlet`` maps a node to its prescribed displacement vector; ``nan``
    entries leave that component free. ``neumann`` maps a boundary facet
    (node tuple) to a traction field ``t(x)``, ``(p, d) -> (p, d)``.
    """

    dirichlet: dict = field(default_factory=dict)
    neumann: dict = field(default_factory=dict)

    @classmethod
    def from_tags(cls, mesh, dirichlet=None, neumann=None, components=None):
        """Build conditions from boundary tags.

        ``dirichlet`` and ``neumann`` map tags to fields of ``x``;
        ``components`` optionally restricts a Dirichlet tag to some
        displacement components (e.g. ``{"xsym": [0]}``).
        """
        dirichlet = dirichlet or {}
        neumann = neumann or {}
        components = components or {}
        bc = cls()
        d = mesh.dim
        for tag, func in dirichlet.items():
            ids = mesh.boundary_nodes([tag])
            vals = np.asarray(func(mesh.nodes[ids]), dtype=float).reshape(len(ids), d)
            comps = components.get(tag)
            for node, v in zip(ids, vals):
                cur = bc.dirichlet.get(int(node), np.full(d, np.nan))
                sel = range(d) if comps is None else comps
                for k in sel:
                    cur[k] = v[k]
                bc.dirichlet[int(node)] = cur
        dset = {frozenset(f) for t in dirichlet for f in mesh.boundary.get(t, [])}
        for tag, func in neumann.items():
            for f in mesh.boundary.get(tag, []):
                if frozenset(f) in dset and not components:
                    raise ValueError(f"facet {f} is both Dirichlet and Neumann")
                bc.neumann[tuple(f)] = func
        return bc

    def dofs(self, dim):
        dofs, vals = [], []
        for node in sorted(self.dirichlet):
            v = self.dirichlet[node]
            for k in range(dim):
                if np.isfinite(v[k]):
                    dofs.append(node * dim + k)
                    vals.append(v[k])
        return np.array(dofs, dtype=int), np.array(vals, dtype=float)


@dataclass
class GlobalSystem:
    """Assembled ``K u = f`` before constraint elimination."""

    K: sp.csr_matrix
    f: np.ndarray
    dirichlet_dofs: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    dirichlet_values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    mesh: object = None

    @property
    def dim(self):
        return 1 if self.mesh is None else self.mesh.dim


@dataclass
class DisplacementField:
    """Nodal displacements ``u (n_nodes, d)`` on a mesh."""

    values: np.ndarray
    mesh: object = None

    @property
    def vector(self):
        return self.values.ravel()

    def at(self, points):
        """Interpolated displacement at arbitrary points of the domain."""
        return evaluate_field(self.mesh, self.values, points)


def _dofs(ids, d):
    return (np.asarray(ids)[:, None] * d + np.arange(d)).ravel()


def assemble(mesh, material, scheme="ls1", body_force=None, bcs=None, **options):
    """Assemble the global stiffness and load for ``mesh``.

    Elements are processed in index order and scattered through a single
    COO build, so repeated assemblies are bit-identical.
    """
    d = mesh.dim
    ndof = mesh.n_nodes * d
    rows, cols, data = [], [], []
    f = np.zeros(ndof)
    for e in range(mesh.n_elements):
        poly, ids = mesh.polytope_with_ids(e)
        try:
            Ke = element_stiffness(poly, material, scheme, **options)
            fe = body_force_vector(poly, body_force, scheme=scheme.lower())
        except Exception as exc:
            raise AssemblyError(f"element {e}: {exc}") from exc
        dofs = _dofs(ids, d)
        r, c = np.meshgrid(dofs, dofs, indexing="ij")
        rows.append(r.ravel())
        cols.append(c.ravel())
        data.append(Ke.ravel())
        np.add.at(f, dofs, fe)
    K = sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(ndof, ndof),
    ).tocsr()
    bcs = bcs or BoundaryCondition()
    for facet, traction in bcs.neumann.items():
        ids, fe = traction_vector(mesh.nodes, facet, traction)
        np.add.at(f, _dofs(ids, d), fe)
    dofs, vals = bcs.dofs(d)
    return GlobalSystem(K, f, dofs, vals, mesh)


def _face_frame(P):
    n = _newell_normal(P)
    n /= np.linalg.norm(n)
    e1 = P[1] - P[0]
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    return e1, e2


def traction_vector(nodes, facet, traction, npts=None):
    """Consistent nodal forces of a traction on one boundary facet.

    2D edges use 2-point Gauss with the linear edge basis. 3D faces are
    fanned into triangles about the face vertex mean and integrated with
    the 3-point rule against the face's own Wachspress basis.
    """
    ids = np.asarray(facet, dtype=int)
    P = nodes[ids]
    d = P.shape[1]
    if d == 2:
        bary, w = gauss_line(npts or 2)
        x = bary @ P
        length = np.linalg.norm(P[1] - P[0])
        t = np.asarray(traction(x), dtype=float).reshape(-1, 2)
        fe = np.einsum("g,gn,gi->ni", w * length, bary, t)
        return ids, fe.ravel()
    e1, e2 = _face_frame(P)
    Q = np.column_stack([(P - P[0]) @ e1, (P - P[0]) @ e2])
    face = Polytope(Q)
    c = P.mean(axis=0)
    bary, w = facet_rule(3, npts)
    pts, wts = [], []
    k = len(ids)
    for i in range(k):
        T = np.array([c, P[i], P[(i + 1) % k]])
        area = 0.5 * np.linalg.norm(np.cross(T[1] - T[0], T[2] - T[0]))
        pts.append(bary @ T)
        wts.append(w * area)
    pts = np.vstack(pts)
    wts = np.concatenate(wts)
    local = np.column_stack([(pts - P[0]) @ e1, (pts - P[0]) @ e2])
    phi = basis.values(face, local)
    t = np.asarray(traction(pts), dtype=float).reshape(-1, 3)
    fe = np.einsum("g,gn,gi->ni", wts, phi, t)
    return ids, fe.ravel()


# ---------------------------------------------------------------------------
# solve


_MODE_NAMES = {
    2: ["translation x", "translation y", "rotation xy"],
    3: ["translation x", "translation y", "translation z",
        "rotation yz", "rotation zx", "rotation xy"],
}


def rigid_modes(nodes):
    """Rigid-body displacement modes as columns, shape ``(n * d, r)``."""
    X = nodes - nodes.mean(axis=0)
    n, d = X.shape
    scale = max(np.abs(X).max(), 1e-300)
    X = X / scale
    modes = []
    for k in range(d):
        m = np.zeros((n, d))
        m[:, k] = 1.0
        modes.append(m.ravel())
    if d == 2:
        modes.append(np.column_stack([-X[:, 1], X[:, 0]]).ravel())
    else:
        x, y, z = X.T
        zero = np.zeros(n)
        modes.append(np.column_stack([zero, -z, y]).ravel())
        modes.append(np.column_stack([z, zero, -x]).ravel())
        modes.append(np.column_stack([-y, x, zero]).ravel())
    return np.column_stack(modes)


def _check_rigid_modes(system):
    mesh = system.mesh
    d = mesh.dim
    R = rigid_modes(mesh.nodes)
    Rc = R[system.dirichlet_dofs]
    if Rc.shape[0] == 0:
        free = list(range(R.shape[1]))
        raise SingularSystemError(
            "stiffness is singular: unconstrained rigid modes "
            + ", ".join(_MODE_NAMES[d][k] for k in free)
        )
    _, s, Vt = np.linalg.svd(Rc, full_matrices=True)
    rank = int(np.sum(s > 1e-8 * s.max()))
    if rank < R.shape[1]:
        null = Vt[rank:]
        names = sorted({_MODE_NAMES[d][int(np.argmax(np.abs(v)))] for v in null})
        raise SingularSystemError(
            "stiffness is singular: unconstrained rigid modes " + ", ".join(names)
        )


def solve(system, rtol=1e-10):
    """Eliminate Dirichlet dofs and solve the remaining SPD system.

    Direct sparse LU with iterative refinement; conjugate gradients is the
    fallback when the residual ``||K u - f|| / ||f||`` stays above ``rtol``.
    """
    K = system.K.tocsr()
    ndof = K.shape[0]
    u = np.zeros(ndof)
    cdofs = np.asarray(system.dirichlet_dofs, dtype=int)
    u[cdofs] = system.dirichlet_values
    if system.mesh is not None:
        _check_rigid_modes(system)
    free = np.setdiff1d(np.arange(ndof), cdofs)
    Kff = K[free][:, free].tocsc()
    rhs = system.f[free] - K[free][:, cdofs] @ u[cdofs]
    if free.size:
        try:
            lu = splu(Kff)
        except RuntimeError as exc:
            raise SingularSystemError(f"constrained stiffness is singular: {exc}") from exc
        piv = np.abs(lu.U.diagonal())
        if piv.min() <= 1e-14 * piv.max():
            raise SingularSystemError(
                f"constrained stiffness is singular: smallest pivot {piv.min():.3e} "
                f"(largest {piv.max():.3e})"
            )
        x = lu.solve(rhs)
        norm = np.linalg.norm(rhs)
        for _ in range(3):
            r = rhs - Kff @ x
            if norm == 0 or np.linalg.norm(r) <= rtol * norm:
                break
            x += lu.solve(r)
        res = np.linalg.norm(rhs - Kff @ x)
        if norm > 0 and res > rtol * norm:
            logger.warning("direct solve residual %.2e; falling back to CG", res / norm)
            x, _ = cg(Kff, rhs, x0=x, rtol=rtol * 0.1, maxiter=10 * free.size)
            res = np.linalg.norm(rhs - Kff @ x)
            if res > rtol * norm:
                raise SingularSystemError(
                    f"solver did not reach the residual contract ({res / norm:.2e})"
                )
        u[free] = x
    if system.mesh is None:
        return DisplacementField(u, None)
    return DisplacementField(u.reshape(-1, system.mesh.dim), system.mesh)


def strain_energy(field, system):
    """``1/2 u^T K u`` with the unconstrained stiffness."""
    u = field.vector if isinstance(field, DisplacementField) else np.ravel(field)
    return 0.5 * float(u @ (system.K @ u))


# ---------------------------------------------------------------------------
# post-processing


ErrorNorms = namedtuple("ErrorNorms", ["l2", "h1", "relative"])


def error_norms(field, exact_u, exact_grad, mesh=None, degree=4):
    """Relative L2 norm and H1 seminorm of ``u_h - u``.

    Integrals use a degree-``degree`` Gauss rule on every fan simplex with
    the compatible (Wachspress) values and gradients, independent of the
    assembly scheme. ``exact_grad`` returns ``(p, d, d)`` with
    ``[:, i, j] = du_i / dx_j``. When the exact norms vanish the absolute
    norms are returned and ``relative`` is False.
    """
    mesh = field.mesh if mesh is None else mesh
    U = field.values
    d = mesh.dim
    bary, w = simplex_rule(d, degree)
    e0 = u0 = e1 = u1 = 0.0
    for e in range(mesh.n_elements):
        poly, ids = mesh.polytope_with_ids(e)
        cells = poly.subcells
        pts = np.einsum("gi,sid->sgd", bary, cells.vertices).reshape(-1, d)
        wts = (cells.measure[:, None] * w[None, :]).ravel()
        ev = basis.evaluate(poly, pts, check=False)
        Ue = U[ids]
        uh = ev.values @ Ue
        gh = np.einsum("pnj,ni->pij", ev.gradients, Ue)
        ue = np.asarray(exact_u(pts), dtype=float).reshape(-1, d)
        ge = np.asarray(exact_grad(pts), dtype=float).reshape(-1, d, d)
        e0 += wts @ ((uh - ue) ** 2).sum(axis=1)
        u0 += wts @ (ue**2).sum(axis=1)
        e1 += wts @ ((gh - ge) ** 2).sum(axis=(1, 2))
        u1 += wts @ (ge**2).sum(axis=(1, 2))
    if u0 == 0.0 or u1 == 0.0:
        return ErrorNorms(np.sqrt(e0), np.sqrt(e1), False)
    return ErrorNorms(np.sqrt(e0 / u0), np.sqrt(e1 / u1), True)


def evaluate_field(mesh, values, points, tol=1e-9):
    """Interpolate nodal ``values`` at ``points`` (inside or on the boundary)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    centers = np.array([mesh.polytope(e).center for e in range(mesh.n_elements)])
    tree = cKDTree(centers)
    out = np.empty((len(points), values.shape[1]))
    k = min(16, mesh.n_elements)
    for i, x in enumerate(points):
        _, cand = tree.query(x, k=k)
        for e in np.atleast_1d(cand):
            poly, ids = mesh.polytope_with_ids(int(e))
            h = basis.distances(poly, x)
            if np.all(h >= -tol * poly.diameter):
                out[i] = basis.values(poly, x)[0] @ values[ids]
                break
        else:
            raise ValueError(f"point {x} is not inside the mesh")
    return out
