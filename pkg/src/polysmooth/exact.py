"""Closed-form elasticity fields used as benchmark references.

Each field exposes ``u(x)`` ``(p, d)``, ``grad(x)`` ``(p, d, d)`` with
``[:, i, j] = du_i/dx_j``, ``stress(x)`` ``(p, d, d)`` and
``body_force(x)`` ``(p, d)``.
"""

import re
import warnings
from dataclasses import dataclass

import numpy as np

from .smoothing import Material

_VOIGT = {
    2: {(0, 0): 0, (1, 1): 1, (0, 1): 2, (1, 0): 2},
    3: {(0, 0): 0, (1, 1): 1, (2, 2): 2, (0, 1): 3, (1, 0): 3,
        (1, 2): 4, (2, 1): 4, (2, 0): 5, (0, 2): 5},
}


def elasticity_tensor(C):
    """Fourth-order tensor from a Voigt matrix with engineering shears."""
    d = 2 if C.shape[0] == 3 else 3
    idx = _VOIGT[d]
    C4 = np.empty((d,) * 4)
    for i in range(d):
        for j in range(d):
            for k in range(d):
                for l in range(d):
                    C4[i, j, k, l] = C[idx[i, j], idx[k, l]]
    return C4


class FieldBase:
    dim = None
    C = None

    def strain(self, x):
        g = self.grad(x)
        return 0.5 * (g + np.swapaxes(g, 1, 2))

    def stress(self, x):
        return np.einsum("ijkl,pkl->pij", elasticity_tensor(self.C), self.strain(x))

    def traction(self, normal):
        """Traction field ``sigma(x) n`` for a fixed outward normal."""
        n = np.asarray(normal, dtype=float)
        return lambda x: self.stress(np.atleast_2d(x)) @ n

    def energy_density(self, x):
        return 0.5 * np.einsum("pij,pij->p", self.stress(x), self.strain(x))


_TERM = re.compile(r"([+-]?)\s*(\d+(?:\.\d*)?|\.\d+)?\s*((?:[xyz](?:\^\d+)?)*)")


def parse_polynomial(text, dim):
    """Coefficients of a polynomial written like ``0.1+0.2x+0.15xy+0.1z^2``.

    Returns a dict mapping exponent tuples to coefficients; repeated
    monomials are summed.
    """
    out = {}
    s = text.replace(" ", "")
    pos = 0
    while pos < len(s):
        m = _TERM.match(s, pos)
        if m is None or m.end() == pos:
            raise ValueError(f"cannot parse polynomial near {s[pos:]!r}")
        sign, coef, mono = m.groups()
        c = float(coef) if coef else 1.0
        if sign == "-":
            c = -c
        exp = [0] * dim
        for var, power in re.findall(r"([xyz])(?:\^(\d+))?", mono):
            k = "xyz".index(var)
            if k >= dim:
                raise ValueError(f"variable {var} in a {dim}D polynomial")
            exp[k] += int(power) if power else 1
        out[tuple(exp)] = out.get(tuple(exp), 0.0) + c
        pos = m.end()
    return out


class QuadraticField(FieldBase):
    """Vector field with polynomial components of degree at most two.

    ``u_i = c_i + B_i . x + x . Q_i x``. The body force that makes it an
    exact solution, ``b = -div C eps(u)``, is constant and computed from
    the second derivatives.
    """

    def __init__(self, components, C):
        self.dim = len(components)
        self.C = np.asarray(C, dtype=float)
        d = self.dim
        self.c = np.zeros(d)
        self.B = np.zeros((d, d))
        self.Q = np.zeros((d, d, d))
        for i, comp in enumerate(components):
            terms = parse_polynomial(comp, d) if isinstance(comp, str) else comp
            for exp, v in terms.items():
                deg = sum(exp)
                nz = [k for k in range(d) for _ in range(exp[k])]
                if deg == 0:
                    self.c[i] += v
                elif deg == 1:
                    self.B[i, nz[0]] += v
                elif deg == 2:
                    j, k = nz
                    self.Q[i, j, k] += 0.5 * v
                    self.Q[i, k, j] += 0.5 * v
                else:
                    raise ValueError("only polynomials up to degree two")
        H = 2.0 * self.Q
        self.b = -np.einsum("ijkl,kjl->i", elasticity_tensor(self.C), H)

    def u(self, x):
        x = np.atleast_2d(x)
        return self.c + x @ self.B.T + np.einsum("pj,ijk,pk->pi", x, self.Q, x)

    def grad(self, x):
        x = np.atleast_2d(x)
        return self.B + 2.0 * np.einsum("ijk,pk->pij", self.Q, x)

    def body_force(self, x):
        return np.broadcast_to(self.b, np.atleast_2d(x).shape).copy()


LINEAR_PATCH = {
    2: ["0.1+0.1x+0.2y", "0.05+0.15x+0.1y"],
    3: ["0.1+0.1x+0.2y+0.2z", "0.05+0.15x+0.1y+0.2z", "0.05+0.1x+0.2y+0.2z"],
}

# The 3D data carries "0.2x+0.2x" as given; both terms are kept.
QUADRATIC_PATCH = {
    2: ["0.1x^2+0.1xy+0.2y^2", "0.05x^2+0.15xy+0.1y^2"],
    3: [
        "0.1+0.2x+0.2x+0.1z+0.15x^2+0.2y^2+0.1z^2+0.15xy+0.1yz+0.1zx",
        "0.15+0.1x+0.1y+0.2z+0.2x^2+0.15y^2+0.1z^2+0.2xy+0.1yz+0.2zx",
        "0.15+0.15x+0.2y+0.1z+0.15x^2+0.1y^2+0.2z^2+0.1xy+0.2yz+0.15zx",
    ],
}


@dataclass
class CantileverSolution(FieldBase):
    """Plane-stress beam ``[0, L] x [-D/2, D/2]`` under a parabolic end shear.

    Clamped (in the exact-displacement sense) at ``x = 0``, loaded at
    ``x = L`` by a total shear ``-P``.
    """

    L: float = 10.0
    D: float = 2.0
    E: float = 3.0e7
    nu: float = 0.25
    P: float = 150.0
    dim = 2

    @property
    def I(self):  # noqa: E743
        return self.D**3 / 12.0

    @property
    def C(self):
        return Material(self.E, self.nu, "plane-stress").C

    def u(self, x):
        x = np.atleast_2d(x)
        X, Y = x[:, 0], x[:, 1]
        L, D, nu = self.L, self.D, self.nu
        k = self.P / (6 * self.E * self.I)
        ux = k * Y * ((6 * L - 3 * X) * X + (2 + nu) * (Y**2 - D**2 / 4))
        uy = -k * (3 * nu * Y**2 * (L - X) + (4 + 5 * nu) * D**2 * X / 4
                   + (3 * L - X) * X**2)
        return np.column_stack([ux, uy])

    def grad(self, x):
        x = np.atleast_2d(x)
        X, Y = x[:, 0], x[:, 1]
        L, D, nu = self.L, self.D, self.nu
        k = self.P / (6 * self.E * self.I)
        g = np.empty((len(x), 2, 2))
        g[:, 0, 0] = k * Y * (6 * L - 6 * X)
        g[:, 0, 1] = k * ((6 * L - 3 * X) * X + (2 + nu) * (3 * Y**2 - D**2 / 4))
        g[:, 1, 0] = -k * (-3 * nu * Y**2 + (4 + 5 * nu) * D**2 / 4
                           + 6 * L * X - 3 * X**2)
        g[:, 1, 1] = -k * 6 * nu * Y * (L - X)
        return g

    def stress_closed_form(self, x):
        x = np.atleast_2d(x)
        X, Y = x[:, 0], x[:, 1]
        s = np.zeros((len(x), 2, 2))
        s[:, 0, 0] = self.P * (self.L - X) * Y / self.I
        s[:, 0, 1] = s[:, 1, 0] = self.P / (2 * self.I) * (Y**2 - self.D**2 / 4)
        return s

    def body_force(self, x):
        return np.zeros_like(np.atleast_2d(x))

    def tip_deflection(self):
        return float(self.u(np.array([[self.L, 0.0]]))[0, 1])


class SeriesTruncationWarning(UserWarning):
    """The last retained series term is not negligible."""


@dataclass
class TorsionSolution(FieldBase):
    """Saint-Venant torsion of the bar ``[-a, a] x [-b, b] x [0, L]``.

    ``u = beta (-yz, xz, psi)`` with the warping function
    ``psi = xy + sum_n A_n sin(k_n x) sinh(k_n y) / cosh(k_n b)``,
    ``k_n = (2n - 1) pi / (2a)``. The truncated series is itself harmonic,
    so its stresses are exactly consistent with the truncated displacement.
    """

    beta: float = 1.0
    a: float = 1.0
    b: float = 1.0
    G: float = 1.0 / 2.6
    N: int = 40
    nu: float = 0.3
    dim = 3

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("at least one series term is required")
        n = np.arange(1, self.N + 1)
        m = 2 * n - 1
        self.k = m * np.pi / (2 * self.a)
        self.A = 32 * self.a**2 * (-1.0) ** n / (np.pi**3 * m**3)
        ratio = np.abs(self.A[1:] / self.A[:-1])
        if np.any(ratio >= 1):
            raise ValueError("series terms do not decay")
        if abs(self.A[-1]) > 1e-12 * abs(self.A[0]):
            warnings.warn(
                f"torsion series truncated at N={self.N}: last term is "
                f"{abs(self.A[-1] / self.A[0]):.1e} of the first",
                SeriesTruncationWarning,
                stacklevel=2,
            )

    @property
    def E(self):
        return 2 * self.G * (1 + self.nu)

    @property
    def C(self):
        return Material(self.E, self.nu, "3d").C

    def _terms(self, x):
        X, Y = x[:, :1], x[:, 1:2]
        k = self.k[None, :]
        chb = np.cosh(k * self.b)
        return X, Y, k, np.sinh(k * Y) / chb, np.cosh(k * Y) / chb

    def warping(self, x):
        x = np.atleast_2d(x)
        X, Y, k, sh, _ = self._terms(x)
        return x[:, 0] * x[:, 1] + (self.A * np.sin(k * X) * sh).sum(axis=1)

    def u(self, x):
        x = np.atleast_2d(x)
        X, Y, Z = x.T
        b = self.beta
        return np.column_stack([-b * Y * Z, b * X * Z, b * self.warping(x)])

    def grad(self, x):
        x = np.atleast_2d(x)
        Xc, Yc, k, sh, ch = self._terms(x)
        X, Y, Z = x.T
        b = self.beta
        psi_x = Y + (self.A * k * np.cos(k * Xc) * sh).sum(axis=1)
        psi_y = X + (self.A * k * np.sin(k * Xc) * ch).sum(axis=1)
        g = np.zeros((len(x), 3, 3))
        g[:, 0, 1], g[:, 0, 2] = -b * Z, -b * Y
        g[:, 1, 0], g[:, 1, 2] = b * Z, b * X
        g[:, 2, 0], g[:, 2, 1] = b * psi_x, b * psi_y
        return g

    def stress_closed_form(self, x):
        x = np.atleast_2d(x)
        Xc, Yc, k, sh, ch = self._terms(x)
        Gb = self.G * self.beta
        sxz = Gb * (self.A * k * np.cos(k * Xc) * sh).sum(axis=1)
        syz = Gb * (2 * x[:, 0] + (self.A * k * np.sin(k * Xc) * ch).sum(axis=1))
        s = np.zeros((len(x), 3, 3))
        s[:, 0, 2] = s[:, 2, 0] = sxz
        s[:, 1, 2] = s[:, 2, 1] = syz
        return s

    def body_force(self, x):
        return np.zeros_like(np.atleast_2d(x))
