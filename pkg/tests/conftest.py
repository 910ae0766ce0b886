import numpy as np
import pytest

from polysmooth.bench import hexahedron
from polysmooth.mesh import Box, Polytope, generate_cvt_mesh


def convex_polygon(rng, n, center=(0.0, 0.0), radii=(1.0, 0.7), min_gap=0.25):
    """Vertices on a random ellipse, CCW, with a minimum angular gap."""
    while True:
        t = np.sort(rng.uniform(0, 2 * np.pi, n))
        gaps = np.diff(np.r_[t, t[0] + 2 * np.pi])
        if gaps.min() > min_gap * 2 * np.pi / n:
            break
    rot = rng.uniform(0, np.pi)
    P = np.column_stack([radii[0] * np.cos(t), radii[1] * np.sin(t)])
    R = np.array([[np.cos(rot), -np.sin(rot)], [np.sin(rot), np.cos(rot)]])
    return Polytope(P @ R.T + np.asarray(center))


def star_polygon(rng, n, center=(1.5, 2.0)):
    """Possibly non-convex polygon, star-shaped about its vertex mean."""
    while True:
        t = np.sort(rng.uniform(0, 2 * np.pi, n))
        if np.diff(np.r_[t, t[0] + 2 * np.pi]).min() < 0.3 * 2 * np.pi / n:
            continue
        r = rng.uniform(0.5, 1.0, n)
        poly = Polytope(np.column_stack([r * np.cos(t), r * np.sin(t)]) + center)
        if poly.is_star_convex(poly.center):
            return poly


def regular_polygon(n, radius=1.0, center=(0.0, 0.0)):
    t = 2 * np.pi * np.arange(n) / n
    return Polytope(radius * np.column_stack([np.cos(t), np.sin(t)]) + center)


UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def square():
    return Polytope(UNIT_SQUARE)


@pytest.fixture
def pentagon():
    return Polytope(np.array([[0.0, 0.0], [2.0, -0.3], [2.6, 1.4], [1.1, 2.5], [-0.4, 1.5]]))


@pytest.fixture
def cube():
    return hexahedron(np.random.default_rng(0), distortion=0.0)


@pytest.fixture
def distorted_hex():
    return hexahedron(np.random.default_rng(3), distortion=0.3)


@pytest.fixture(scope="session")
def mesh2d():
    return generate_cvt_mesh(Box((0.0, 0.0), (1.0, 1.0)), 30, 10, rng_seed=4)


@pytest.fixture(scope="session")
def mesh3d():
    return generate_cvt_mesh(Box((0.0, 0.0, 0.0), (1.0, 1.0, 1.0)), 12, 5, rng_seed=4)


# -- acceptance summary --------------------------------------------------------

_ACCEPTANCE = {}


@pytest.fixture
def record():
    """Store one summary line per acceptance criterion."""

    def _record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        _ACCEPTANCE[number] = line
        print(line)

    return _record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[k])
