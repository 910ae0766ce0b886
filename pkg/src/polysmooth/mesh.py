"""Polytope meshes: geometry, simplex subdivision, moments and CVT generation.

A 2D element is a counter-clockwise loop of node indices. A 3D element is a
list of planar faces, each a node-index loop oriented counter-clockwise when
seen from outside the element.
"""

import json
import logging
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from math import factorial

import numpy as np
from scipy.spatial import ConvexHull, Voronoi, cKDTree

logger = logging.getLogger(__name__)


class MeshError(ValueError):
    """Raised for invalid or degenerate mesh geometry."""


class DegenerateCellError(MeshError):
    """A simplex (or smoothing cell) has vanishing measure."""


class NonSimpleVertexError(MeshError):
    """A polyhedron vertex is not incident to exactly three faces."""


# ---------------------------------------------------------------------------
# simplex moments


def simplex_moments(vertices):
    """Measure, centroid and centroidal second-moment tensor of a simplex.

    Parameters
    ----------
    vertices : array_like, shape (d + 1, d)

    Returns
    -------
    measure : float
    centroid : ndarray, shape (d,)
    second_moments : ndarray, shape (d, d)
        ``int (x - c)(x - c)^T dx`` over the simplex.
    """
    V = np.asarray(vertices, dtype=float)
    m, c, I = simplex_moments_batch(V[None])
    if m[0] <= 0.0:
        raise DegenerateCellError("degenerate simplex")
    return float(m[0]), c[0], I[0]


def simplex_moments_batch(V):
    """Vectorised :func:`simplex_moments` over an array ``(s, d + 1, d)``.

    Returns signed measures; callers decide what counts as degenerate.
    """
    V = np.asarray(V, dtype=float)
    d = V.shape[-1]
    E = V[:, 1:, :] - V[:, :1, :]
    measure = np.linalg.det(E) / factorial(d)
    centroid = V.mean(axis=1)
    # int x x^T over a simplex = |T| / ((d+1)(d+2)) * (sum v v^T + S S^T)
    Vc = V - centroid[:, None, :]
    S = Vc.sum(axis=1)
    outer = np.einsum("sai,saj->sij", Vc, Vc) + np.einsum("si,sj->sij", S, S)
    second = np.abs(measure)[:, None, None] * outer / ((d + 1) * (d + 2))
    return measure, centroid, second


def simplex_facets(V):
    """Outward unit normals and measures of the facets of simplices.

    Facet ``k`` is opposite vertex ``k``.

    Returns
    -------
    normals : ndarray, shape (s, d + 1, d)
    measures : ndarray, shape (s, d + 1)
    """
    V = np.asarray(V, dtype=float)
    s, npt, d = V.shape
    normals = np.empty((s, npt, d))
    measures = np.empty((s, npt))
    for k in range(npt):
        idx = [i for i in range(npt) if i != k]
        F = V[:, idx, :]
        if d == 2:
            t = F[:, 1] - F[:, 0]
            n = np.column_stack([t[:, 1], -t[:, 0]])
            area = np.linalg.norm(n, axis=1)
        else:
            n = np.cross(F[:, 1] - F[:, 0], F[:, 2] - F[:, 0])
            area = 0.5 * np.linalg.norm(n, axis=1)
            n = 0.5 * n
        n = n / np.where(area > 0, area, 1.0)[:, None]
        # orient away from the opposite vertex
        side = np.einsum("si,si->s", V[:, k] - F[:, 0], n)
        n = np.where((side > 0)[:, None], -n, n)
        normals[:, k] = n
        measures[:, k] = area
    return normals, measures


# ---------------------------------------------------------------------------
# smoothing cells


@dataclass
class SmoothingCell:
    """One simplex of an element's fan subdivision."""

    vertex_coords: np.ndarray
    measure: float
    centroid: np.ndarray
    second_moments: np.ndarray
    parent_element: int
    facet_normals: np.ndarray
    facet_measures: np.ndarray

    @property
    def diameter(self):
        V = self.vertex_coords
        return float(max(np.linalg.norm(a - b) for a in V for b in V))


@dataclass
class Subcells:
    """Batched smoothing cells of one element (leading axis = subcell)."""

    vertices: np.ndarray  # (s, d+1, d)
    measure: np.ndarray  # (s,)
    centroid: np.ndarray  # (s, d)
    second_moments: np.ndarray  # (s, d, d)
    facet_normals: np.ndarray  # (s, d+1, d)
    facet_measures: np.ndarray  # (s, d+1)
    parent_element: int = -1

    def __len__(self):
        return self.measure.shape[0]

    def cells(self):
        return [
            SmoothingCell(
                self.vertices[i],
                float(self.measure[i]),
                self.centroid[i],
                self.second_moments[i],
                self.parent_element,
                self.facet_normals[i],
                self.facet_measures[i],
            )
            for i in range(len(self))
        ]


def _as_subcells(cells):
    """Accept a :class:`Subcells`, one :class:`SmoothingCell` or a list."""
    if isinstance(cells, Subcells):
        return cells
    if isinstance(cells, SmoothingCell):
        cells = [cells]
    return Subcells(
        np.array([c.vertex_coords for c in cells]),
        np.array([c.measure for c in cells]),
        np.array([c.centroid for c in cells]),
        np.array([c.second_moments for c in cells]),
        np.array([c.facet_normals for c in cells]),
        np.array([c.facet_measures for c in cells]),
        cells[0].parent_element,
    )


def make_subcells(simplices, parent=-1, diameter=None):
    V = np.asarray(simplices, dtype=float)
    d = V.shape[-1]
    measure, centroid, second = simplex_moments_batch(V)
    if diameter is None:
        diameter = np.ptp(V.reshape(-1, d), axis=0).max()
    bad = measure <= 1e-14 * diameter**d
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise DegenerateCellError(
            f"degenerate subcell {i} of element {parent}: measure {measure[i]:.3e}"
        )
    normals, fmeas = simplex_facets(V)
    return Subcells(V, measure, centroid, second, normals, fmeas, parent)


# ---------------------------------------------------------------------------
# polytope geometry


def _polygon_area(P):
    x, y = P[:, 0], P[:, 1]
    return 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)


def _newell_normal(P):
    n = np.zeros(3)
    Q = np.roll(P, -1, axis=0)
    n[0] = np.sum((P[:, 1] - Q[:, 1]) * (P[:, 2] + Q[:, 2]))
    n[1] = np.sum((P[:, 2] - Q[:, 2]) * (P[:, 0] + Q[:, 0]))
    n[2] = np.sum((P[:, 0] - Q[:, 0]) * (P[:, 1] + Q[:, 1]))
    return 0.5 * n  # length = polygon area


def _segments_cross(p1, p2, q1, q2):
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    return d1 * d2 < 0 and d3 * d4 < 0


class Polytope:
    """Geometry of a single polygon or polyhedron.

    Parameters
    ----------
    coords : array_like, shape (n, d)
        Vertex coordinates. In 2D they form a counter-clockwise loop.
    faces : list of sequence of int, optional
        3D only: faces as loops of local vertex indices, outward oriented.
    face_split : {"centroid", "diagonal"}
        How 3D faces with more than three vertices are triangulated for the
        subdivision: fan from the face vertex mean, or fan from the first
        face vertex.
    index : int
        Element index, used in error messages.
    """

    def __init__(self, coords, faces=None, face_split="centroid", index=-1):
        self.coords = np.asarray(coords, dtype=float)
        self.dim = self.coords.shape[1]
        self.index = index
        self.face_split = face_split
        if self.dim == 2:
            n = len(self.coords)
            self.faces = [np.array([i, (i + 1) % n]) for i in range(n)]
        elif self.dim == 3:
            if faces is None:
                raise MeshError("3D polytope requires faces")
            self.faces = [np.asarray(f, dtype=int) for f in faces]
        else:
            raise MeshError(f"unsupported dimension {self.dim}")

    @property
    def n_vertices(self):
        return len(self.coords)

    @cached_property
    def center(self):
        """Virtual point of the fan subdivision (vertex mean)."""
        return self.coords.mean(axis=0)

    @cached_property
    def diameter(self):
        P = self.coords
        return float(np.sqrt(((P[:, None] - P[None]) ** 2).sum(-1)).max())

    @cached_property
    def facet_normals(self):
        """Unit outward normals of edges (2D) or faces (3D)."""
        P = self.coords
        if self.dim == 2:
            t = P[[f[1] for f in self.faces]] - P[[f[0] for f in self.faces]]
            n = np.column_stack([t[:, 1], -t[:, 0]])
        else:
            n = np.array([_newell_normal(P[f]) for f in self.faces])
        norm = np.linalg.norm(n, axis=1)
        if np.any(norm <= 1e-14 * self.diameter ** (self.dim - 1)):
            raise MeshError(f"element {self.index}: degenerate facet")
        return n / norm[:, None]

    @cached_property
    def facet_offsets(self):
        """``n_f . v_f`` using the first vertex of each facet."""
        P = self.coords
        return np.array(
            [self.facet_normals[k] @ P[f[0]] for k, f in enumerate(self.faces)]
        )

    @cached_property
    def vertex_facets(self):
        """Local facet indices incident to each vertex.

        In 3D they are ordered counter-clockwise as seen from outside.
        """
        n = self.n_vertices
        if self.dim == 2:
            return np.array([[(i - 1) % n, i] for i in range(n)])
        inc = [[] for _ in range(n)]
        for k, f in enumerate(self.faces):
            for v in f:
                inc[v].append(k)
        out = np.empty((n, 3), dtype=int)
        for v, fs in enumerate(inc):
            if len(fs) != 3:
                raise NonSimpleVertexError(
                    f"element {self.index}: vertex {v} has {len(fs)} incident "
                    "faces (need exactly 3); perturb the vertex or merge faces"
                )
            N = self.facet_normals[fs]
            o = N.sum(axis=0)
            o /= np.linalg.norm(o)
            e1 = N[0] - (N[0] @ o) * o
            e1 /= np.linalg.norm(e1)
            e2 = np.cross(o, e1)
            ang = np.arctan2(N @ e2, N @ e1)
            out[v] = np.asarray(fs)[np.argsort(ang)]
        return out

    @cached_property
    def vertex_constants(self):
        """Signed ``det`` of the incident facet normals for each vertex."""
        N = self.facet_normals[self.vertex_facets]
        if self.dim == 2:
            c = N[:, 0, 0] * N[:, 1, 1] - N[:, 0, 1] * N[:, 1, 0]
        else:
            c = np.linalg.det(N)
        if np.any(np.abs(c) < 1e-12):
            v = int(np.flatnonzero(np.abs(c) < 1e-12)[0])
            raise MeshError(f"element {self.index}: flat vertex {v}")
        return c

    @cached_property
    def is_convex(self):
        h = self.facet_offsets[None, :] - self.coords @ self.facet_normals.T
        return bool(np.all(h >= -1e-10 * self.diameter))

    def validate(self, tol=1e-10):
        P = self.coords
        if self.dim == 2:
            if _polygon_area(P) <= 0:
                raise MeshError(f"element {self.index}: loop is not counter-clockwise")
            n = len(P)
            for i in range(n):
                for j in range(i + 2, n):
                    if i == 0 and j == n - 1:
                        continue
                    if _segments_cross(P[i], P[(i + 1) % n], P[j], P[(j + 1) % n]):
                        raise MeshError(f"element {self.index}: self-intersecting loop")
        else:
            for k, f in enumerate(self.faces):
                dist = P[f] @ self.facet_normals[k] - self.facet_offsets[k]
                if np.max(np.abs(dist)) > tol * self.diameter:
                    raise MeshError(f"element {self.index}: face {k} is not planar")
            if self.measure <= 0:
                raise MeshError(f"element {self.index}: faces are not outward oriented")
        if not self.is_convex:
            warnings.warn(
                f"element {self.index} is not convex; Wachspress positivity is not "
                "guaranteed",
                stacklevel=2,
            )

    def _fan_triangles(self):
        """Boundary triangles (3D) as coordinate arrays ``(t, 3, 3)``."""
        P = self.coords
        tris = []
        for f in self.faces:
            Q = P[f]
            if len(f) == 3:
                tris.append(Q)
            elif self.face_split == "diagonal":
                for i in range(1, len(f) - 1):
                    tris.append(np.array([Q[0], Q[i], Q[i + 1]]))
            else:
                c = Q.mean(axis=0)
                for i in range(len(f)):
                    tris.append(np.array([c, Q[i], Q[(i + 1) % len(f)]]))
        return np.array(tris)

    def fan_simplices(self, point=None):
        """Simplices joining ``point`` (default: the center) to the boundary."""
        p = self.center if point is None else np.asarray(point, dtype=float)
        if self.dim == 2:
            P = self.coords
            Q = np.roll(P, -1, axis=0)
            return np.stack([np.broadcast_to(p, P.shape), P, Q], axis=1)
        T = self._fan_triangles()
        return np.concatenate([np.broadcast_to(p, (len(T), 1, 3)), T], axis=1)

    @cached_property
    def measure(self):
        m, _, _ = simplex_moments_batch(self.fan_simplices())
        return float(m.sum())

    @cached_property
    def centroid(self):
        m, c, _ = simplex_moments_batch(self.fan_simplices())
        return (m[:, None] * c).sum(axis=0) / m.sum()

    def is_star_convex(self, point):
        m, _, _ = simplex_moments_batch(self.fan_simplices(point))
        return bool(np.all(m > 0))

    @cached_property
    def subcells(self):
        return subdivide_to_simplices(self)


def subdivide_to_simplices(element, nodes=None):
    """Fan subdivision of ``element`` about its vertex mean.

    ``element`` is a :class:`Polytope`, or an index loop / face list
    together with ``nodes``. Returns a :class:`Subcells` batch; use
    ``.cells()`` for a list of :class:`SmoothingCell`.
    """
    if not isinstance(element, Polytope):
        element = _polytope_from_indices(element, np.asarray(nodes, dtype=float))
    if not element.is_star_convex(element.center):
        raise MeshError(f"element {element.index} is not star-convex about its center")
    S = element.fan_simplices()
    cells = make_subcells(S, parent=element.index, diameter=element.diameter)
    return cells


def _polytope_from_indices(element, nodes, index=-1, face_split="centroid"):
    if nodes.shape[1] == 2:
        loop = np.asarray(element, dtype=int)
        return Polytope(nodes[loop], index=index)
    verts, faces = _local_faces(element)
    return Polytope(nodes[verts], faces, face_split=face_split, index=index)


def _local_faces(faces):
    verts = []
    where = {}
    local = []
    for f in faces:
        lf = []
        for v in f:
            v = int(v)
            if v not in where:
                where[v] = len(verts)
                verts.append(v)
            lf.append(where[v])
        local.append(lf)
    return np.array(verts, dtype=int), local


def is_star_convex(element, point, nodes=None):
    """True iff every fan simplex from ``point`` has positive signed measure."""
    try:
        if not isinstance(element, Polytope):
            element = _polytope_from_indices(element, np.asarray(nodes, dtype=float))
        return element.is_star_convex(point)
    except (MeshError, np.linalg.LinAlgError):
        return False


# ---------------------------------------------------------------------------
# mesh container


@dataclass
class PolytopeMesh:
    """Nodes, polytope elements and tagged boundary facets.

    ``elements[e]`` is a CCW node loop (2D) or a list of outward face loops
    (3D). ``boundary`` maps a tag to a list of boundary facets given as node
    tuples (an edge in 2D, a face loop in 3D), oriented outward.
    """

    nodes: np.ndarray
    elements: list
    boundary: dict = field(default_factory=dict)
    face_split: str = "centroid"

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self._cache = {}

    @property
    def dim(self):
        return self.nodes.shape[1]

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def n_elements(self):
        return len(self.elements)

    def element_vertices(self, e):
        """Global node ids of element ``e`` in local vertex order."""
        return self.polytope_with_ids(e)[1]

    def polytope(self, e):
        return self.polytope_with_ids(e)[0]

    def polytope_with_ids(self, e):
        if e not in self._cache:
            el = self.elements[e]
            if self.dim == 2:
                ids = np.asarray(el, dtype=int)
                poly = Polytope(self.nodes[ids], index=e)
            else:
                ids, faces = _local_faces(el)
                poly = Polytope(
                    self.nodes[ids], faces, face_split=self.face_split, index=e
                )
            self._cache[e] = (poly, ids)
        return self._cache[e]

    def facets(self, e):
        """Element facets as global node tuples (outward orientation)."""
        el = self.elements[e]
        if self.dim == 2:
            n = len(el)
            return [(int(el[i]), int(el[(i + 1) % n])) for i in range(n)]
        return [tuple(int(v) for v in f) for f in el]

    def boundary_facets(self):
        """Facets owned by exactly one element: list of (facet, element)."""
        count = {}
        for e in range(self.n_elements):
            for f in self.facets(e):
                key = frozenset(f)
                if key in count:
                    count[key] = None
                else:
                    count[key] = (f, e)
        return [v for v in count.values() if v is not None]

    def tag_boundary(self, classifier):
        """Assign tags to boundary facets with ``classifier(centroid, normal)``.

        ``classifier`` returns a tag string (or None to leave untagged).
        """
        tags = {}
        for f, _ in self.boundary_facets():
            P = self.nodes[list(f)]
            c = P.mean(axis=0)
            if self.dim == 2:
                t = P[1] - P[0]
                n = np.array([t[1], -t[0]])
            else:
                n = _newell_normal(P)
            n = n / np.linalg.norm(n)
            tag = classifier(c, n)
            if tag is not None:
                tags.setdefault(tag, []).append(tuple(f))
        self.boundary = tags
        return tags

    def boundary_nodes(self, tags=None):
        tags = self.boundary.keys() if tags is None else tags
        out = set()
        for t in tags:
            for f in self.boundary.get(t, []):
                out.update(f)
        return np.array(sorted(out), dtype=int)

    def measure(self):
        return sum(self.polytope(e).measure for e in range(self.n_elements))

    def h(self):
        """Mesh size: ``(measure / n_elements) ** (1 / d)``."""
        return (self.measure() / self.n_elements) ** (1.0 / self.dim)

    def validate(self, domain_measure=None, tol=1e-10):
        n = self.n_nodes
        for e in range(self.n_elements):
            for f in self.facets(e):
                if min(f) < 0 or max(f) >= n:
                    raise MeshError(f"element {e} references a missing node")
            self.polytope(e).validate()
        if domain_measure is not None:
            total = self.measure()
            if abs(total - domain_measure) > tol * domain_measure:
                raise MeshError(
                    f"element measures sum to {total!r}, domain measure is "
                    f"{domain_measure!r}"
                )

    # -- serialisation ----------------------------------------------------

    def to_dict(self):
        data = {"dim": self.dim, "nodes": self.nodes.tolist()}
        if self.dim == 2:
            data["elements"] = [[int(v) for v in el] for el in self.elements]
            data["boundary"] = {t: [list(f) for f in fs] for t, fs in self.boundary.items()}
            return data
        faces, where = [], {}
        elements = []
        for el in self.elements:
            ref = []
            for f in el:
                f = [int(v) for v in f]
                key = frozenset(f)
                if key in where:
                    k = where[key]
                    # stored orientation belongs to the first owner
                    ref.append(k if faces[k] == f else ~k)
                else:
                    where[key] = len(faces)
                    ref.append(len(faces))
                    faces.append(f)
            elements.append(ref)
        data["faces"] = faces
        data["elements"] = elements
        data["boundary"] = {
            t: [where[frozenset(f)] for f in fs] for t, fs in self.boundary.items()
        }
        return data

    @classmethod
    def from_dict(cls, data):
        nodes = np.asarray(data["nodes"], dtype=float)
        if nodes.shape[1] == 2:
            elements = [list(el) for el in data["elements"]]
            boundary = {t: [tuple(f) for f in fs] for t, fs in data.get("boundary", {}).items()}
            return cls(nodes, elements, boundary)
        faces = data["faces"]
        elements = [
            [list(faces[k]) if k >= 0 else list(reversed(faces[~k])) for k in el]
            for el in data["elements"]
        ]
        boundary = {t: [tuple(faces[k]) for k in fs] for t, fs in data.get("boundary", {}).items()}
        return cls(nodes, elements, boundary)

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def write_vtk(self, path, point_data=None):
        """Legacy ASCII VTK: POLYGON cells in 2D, POLYHEDRON cells in 3D."""
        P = self.nodes
        if self.dim == 2:
            P = np.column_stack([P, np.zeros(len(P))])
        lines = ["# vtk DataFile Version 4.2", "polytope mesh", "ASCII",
                 "DATASET UNSTRUCTURED_GRID", f"POINTS {len(P)} double"]
        lines += [" ".join(repr(float(x)) for x in p) for p in P]
        cells, types = [], []
        for e in range(self.n_elements):
            if self.dim == 2:
                el = [int(v) for v in self.elements[e]]
                cells.append([len(el)] + el)
                types.append(7)
            else:
                ids = self.element_vertices(e)
                stream = [len(ids)] + [int(v) for v in ids]
                stream.append(len(self.elements[e]))
                for f in self.elements[e]:
                    stream += [len(f)] + [int(v) for v in f]
                cells.append([len(stream)] + stream)
                types.append(42)
        size = sum(len(c) for c in cells)
        lines.append(f"CELLS {len(cells)} {size}")
        lines += [" ".join(map(str, c)) for c in cells]
        lines.append(f"CELL_TYPES {len(cells)}")
        lines += [str(t) for t in types]
        if point_data:
            lines.append(f"POINT_DATA {len(P)}")
            for name, values in point_data.items():
                values = np.asarray(values, dtype=float)
                if values.ndim == 2:
                    if values.shape[1] == 2:
                        values = np.column_stack([values, np.zeros(len(values))])
                    lines.append(f"VECTORS {name} double")
                    lines += [" ".join(repr(float(x)) for x in v) for v in values]
                else:
                    lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
                    lines += [repr(float(x)) for x in values]
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# domains and centroidal Voronoi meshes


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``[lower, upper]`` in 2D or 3D."""

    lower: tuple
    upper: tuple

    @property
    def dim(self):
        return len(self.lower)

    @property
    def measure(self):
        return float(np.prod(np.subtract(self.upper, self.lower)))

    @property
    def size(self):
        return float(np.max(np.subtract(self.upper, self.lower)))

    def sample(self, rng, n):
        lo, hi = np.asarray(self.lower, float), np.asarray(self.upper, float)
        return lo + (hi - lo) * rng.random((n, self.dim))

    def classify(self, centroid, normal, tol=1e-9):
        """Boundary tag (``xmin``, ``ymax``, ...) for an outward facet."""
        axes = "xyz"
        for k in range(self.dim):
            if abs(centroid[k] - self.lower[k]) < tol * self.size and normal[k] < -0.5:
                return axes[k] + "min"
            if abs(centroid[k] - self.upper[k]) < tol * self.size and normal[k] > 0.5:
                return axes[k] + "max"
        return None


@dataclass(frozen=True)
class LShape:
    """L-shaped domain: ``[0, 2a]^2`` minus ``[0, a)^2``, extruded in 3D.

    The re-entrant corner sits at ``(a, a)``. With ``thickness`` set the
    domain is the prism of that cross-section over ``[0, thickness]``.
    """

    a: float
    thickness: float = None

    @property
    def dim(self):
        return 2 if self.thickness is None else 3

    @property
    def measure(self):
        m = 3.0 * self.a**2
        return m if self.thickness is None else m * self.thickness

    @property
    def size(self):
        return 2.0 * self.a if self.thickness is None else max(2.0 * self.a, self.thickness)

    @property
    def corner_box(self):
        a = self.a
        if self.thickness is None:
            return Box((a, a), (2 * a, 2 * a))
        return Box((a, a, 0.0), (2 * a, 2 * a, self.thickness))

    def classify(self, centroid, normal, tol=1e-9):
        a, s = self.a, self.size
        x, y = centroid[0], centroid[1]
        if abs(x) < tol * s and normal[0] < -0.5:
            return "xsym"
        if abs(y) < tol * s and normal[1] < -0.5:
            return "ysym"
        if abs(x - 2 * a) < tol * s and normal[0] > 0.5:
            return "xmax"
        if abs(y - 2 * a) < tol * s and normal[1] > 0.5:
            return "ymax"
        if abs(x - a) < tol * s and normal[0] < -0.5:
            return "hole_x"
        if abs(y - a) < tol * s and normal[1] < -0.5:
            return "hole_y"
        if self.thickness is not None:
            if abs(centroid[2]) < tol * s and normal[2] < -0.5:
                return "zmin"
            if abs(centroid[2] - self.thickness) < tol * s and normal[2] > 0.5:
                return "zmax"
        return None


def _mirror(points, box):
    out = []
    for k in range(box.dim):
        for bound in (box.lower[k], box.upper[k]):
            q = points.copy()
            q[:, k] = 2.0 * bound - q[:, k]
            out.append(q)
    return np.vstack([points] + out)


def _polygon_order(P):
    c = P.mean(axis=0)
    return np.argsort(np.arctan2(P[:, 1] - c[1], P[:, 0] - c[0]))


def _voronoi(seeds, box):
    n = len(seeds)
    pts = _mirror(seeds, box)
    # Qz keeps qhull stable on the co-spherical sets introduced by mirroring.
    return Voronoi(pts, qhull_options="Qbb Qc Qz"), n


def _cell_centroids(seeds, box):
    """Centroids, measures and CVT energy terms of the clipped cells."""
    vor, n = _voronoi(seeds, box)
    d = box.dim
    cents = np.empty((n, d))
    meas = np.empty(n)
    energy = 0.0
    for i in range(n):
        region = vor.regions[vor.point_region[i]]
        P = vor.vertices[region]
        if d == 2:
            P = P[_polygon_order(P)]
            c0 = P.mean(axis=0)
            S = np.stack([np.broadcast_to(c0, P.shape), P, np.roll(P, -1, axis=0)], axis=1)
        else:
            hull = ConvexHull(P)
            c0 = P.mean(axis=0)
            T = P[hull.simplices]
            S = np.concatenate([np.broadcast_to(c0, (len(T), 1, 3)), T], axis=1)
        m, c, I = simplex_moments_batch(S)
        m = np.abs(m)
        meas[i] = m.sum()
        cents[i] = (m[:, None] * c).sum(axis=0) / meas[i]
        # sum of int |x - seed|^2 over the fan simplices
        dc = c - seeds[i]
        energy += np.trace(I, axis1=1, axis2=2).sum() + (m * (dc**2).sum(axis=1)).sum()
    return cents, meas, energy


def cvt_energy(seeds, box):
    """``sum_i int_{cell_i} |x - seed_i|^2`` for the clipped Voronoi diagram."""
    return _cell_centroids(np.asarray(seeds, dtype=float), box)[2]


def lloyd(seeds, box, iterations, history=None):
    """Lloyd relaxation of ``seeds`` inside ``box``."""
    seeds = np.asarray(seeds, dtype=float).copy()
    for _ in range(iterations):
        cents, _, energy = _cell_centroids(seeds, box)
        if history is not None:
            history.append(energy)
        seeds = cents
    if history is not None:
        history.append(_cell_centroids(seeds, box)[2])
    return seeds


def _check_collisions(seeds, size):
    tree = cKDTree(seeds)
    pairs = tree.query_pairs(1e-10 * size)
    if pairs:
        i, j = sorted(pairs)[0]
        raise MeshError(f"seeds {i} and {j} collide after relaxation")


class _VertexMerger:
    """Merge coordinates closer than ``tol`` into shared node ids."""

    def __init__(self, tol):
        self.tol = tol
        self.points = []
        self.grid = {}

    def add(self, p):
        key = tuple(np.floor(p / self.tol).astype(np.int64))
        for off in np.ndindex(*(3,) * len(key)):
            k = tuple(a + b - 1 for a, b in zip(key, off))
            for idx in self.grid.get(k, ()):
                if np.linalg.norm(self.points[idx] - p) <= self.tol:
                    return idx
        idx = len(self.points)
        self.points.append(np.array(p, dtype=float))
        self.grid.setdefault(key, []).append(idx)
        return idx


def _snap(P, box, tol):
    P = P.copy()
    for k in range(box.dim):
        for b in (box.lower[k], box.upper[k]):
            P[np.abs(P[:, k] - b) < tol, k] = b
    return P


def _box_cells_2d(seeds, box, merger):
    vor, n = _voronoi(seeds, box)
    tol = merger.tol
    V = _snap(vor.vertices, box, tol)
    cells = []
    for i in range(n):
        region = vor.regions[vor.point_region[i]]
        if -1 in region:
            raise MeshError(f"unbounded cell for seed {i}")
        P = V[region]
        P = P[_polygon_order(P)]
        loop = []
        for p in P:
            idx = merger.add(p)
            if not loop or loop[-1] != idx:
                loop.append(idx)
        if loop[0] == loop[-1]:
            loop.pop()
        cells.append(loop)
    return cells


def _order_face(P, normal):
    c = P.mean(axis=0)
    e1 = P[0] - c
    e1 -= (e1 @ normal) * normal
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(normal, e1)
    return np.argsort(np.arctan2((P - c) @ e2, (P - c) @ e1))


def _box_cells_3d(seeds, box, merger):
    vor, n = _voronoi(seeds, box)
    tol = merger.tol
    V = _snap(vor.vertices, box, tol)
    gid = {}
    faces = [[] for _ in range(n)]
    for (p, q), rv in zip(vor.ridge_points, vor.ridge_vertices):
        if p >= n and q >= n:
            continue
        if -1 in rv:
            raise MeshError("unbounded ridge")
        ids = []
        for v in rv:
            if v not in gid:
                gid[v] = merger.add(V[v])
            g = gid[v]
            if g not in ids:
                ids.append(g)
        if len(ids) < 3:
            continue
        P = np.array([merger.points[g] for g in ids])
        normal = vor.points[q] - vor.points[p]
        normal /= np.linalg.norm(normal)
        area = np.linalg.norm(_newell_normal(P[_order_face(P, normal)]))
        if area <= 1e-16 * box.size**2:
            continue
        order = _order_face(P, normal)
        loop = [ids[k] for k in order]
        if p < n:
            faces[p].append(loop)  # normal points from p to q: outward for p
        if q < n:
            faces[q].append(loop[::-1])
    return faces


def _reflect_cells(cells, axis, plane, merger, dim):
    out = []
    for cell in cells:
        if dim == 2:
            loop = []
            for g in cell:
                p = merger.points[g].copy()
                p[axis] = 2 * plane - p[axis]
                loop.append(merger.add(p))
            out.append(loop[::-1])
        else:
            fs = []
            for f in cell:
                lf = []
                for g in f:
                    p = merger.points[g].copy()
                    p[axis] = 2 * plane - p[axis]
                    lf.append(merger.add(p))
                fs.append(lf[::-1])
            out.append(fs)
    return out


def _remove_unused(nodes, elements, dim):
    used = sorted({v for el in elements for f in (el if dim == 3 else [el]) for v in f})
    remap = {old: new for new, old in enumerate(used)}
    nodes = nodes[used]
    if dim == 2:
        elements = [[remap[v] for v in el] for el in elements]
    else:
        elements = [[[remap[v] for v in f] for f in el] for el in elements]
    return nodes, elements


def generate_cvt_mesh(domain, n_seeds, lloyd_iterations=20, rng_seed=0, seeds=None):
    """Clipped centroidal Voronoi mesh of a box or L-shaped domain.

    Parameters
    ----------
    domain : Box or LShape
    n_seeds : int
        Number of generators. For an :class:`LShape` this is the total; one
        third of it is relaxed in the corner square and mirrored into the
        two arms, which keeps the arms' interfaces conforming.
    lloyd_iterations : int
        Lloyd sweeps applied before the final tessellation.
    rng_seed : int
        Seed of the uniform initial generator positions.
    seeds : array_like, optional
        Explicit initial generators (overrides ``n_seeds`` and ``rng_seed``).

    Returns
    -------
    PolytopeMesh
        With boundary facets tagged by ``domain.classify``.
    """
    if isinstance(domain, LShape):
        box = domain.corner_box
        count = max(1, int(round(n_seeds / 3)))
    else:
        box = domain
        count = n_seeds
    if seeds is None:
        if count < 1:
            raise MeshError("need at least one seed")
        rng = np.random.default_rng(rng_seed)
        seeds = box.sample(rng, count)
    else:
        seeds = np.asarray(seeds, dtype=float)
    if domain.measure <= 0:
        raise MeshError("domain has zero measure")
    seeds = lloyd(seeds, box, lloyd_iterations)
    _check_collisions(seeds, box.size)

    merger = _VertexMerger(1e-10 * box.size)
    if box.dim == 2:
        cells = _box_cells_2d(seeds, box, merger)
    else:
        cells = _box_cells_3d(seeds, box, merger)
    if isinstance(domain, LShape):
        a = domain.a
        left = _reflect_cells(cells, 0, a, merger, box.dim)
        bottom = _reflect_cells(cells, 1, a, merger, box.dim)
        cells = cells + left + bottom
    nodes = np.array(merger.points)
    nodes, cells = _remove_unused(nodes, cells, box.dim)
    mesh = PolytopeMesh(nodes, cells)
    for e in range(mesh.n_elements):
        poly = mesh.polytope(e)
        if not poly.is_star_convex(poly.center):
            raise MeshError(f"element {e} is not star-convex about its center")
    mesh.tag_boundary(domain.classify)
    logger.debug("generated %d elements, %d nodes", mesh.n_elements, mesh.n_nodes)
    return mesh
