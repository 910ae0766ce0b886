from math import factorial

import numpy as np
import pytest

from polysmooth.quadrature import facet_rule, gauss_line, simplex_rule


def _monomial_integral(exps):
    # int over the unit simplex of prod x_i^a_i = prod a_i! / (d + sum a)!
    d = len(exps)
    return np.prod([factorial(a) for a in exps]) / factorial(d + sum(exps))


def _exponents(dim, degree):
    if dim == 2:
        return [(a, b) for a in range(degree + 1) for b in range(degree + 1 - a)]
    return [
        (a, b, c)
        for a in range(degree + 1)
        for b in range(degree + 1 - a)
        for c in range(degree + 1 - a - b)
    ]


@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("degree", [1, 2, 3, 4, 6])
def test_simplex_rule_exact_on_reference_simplex(dim, degree):
    bary, w = simplex_rule(dim, degree)
    V = np.vstack([np.zeros(dim), np.eye(dim)])
    x = bary @ V
    vol = 1.0 / factorial(dim)
    for exps in _exponents(dim, degree):
        approx = vol * np.sum(w * np.prod(x**np.array(exps), axis=1))
        assert approx == pytest.approx(_monomial_integral(exps), rel=1e-13, abs=1e-15)


def test_degree_two_rules_have_classic_point_counts():
    assert len(simplex_rule(2, 2)[1]) == 3
    assert len(simplex_rule(3, 2)[1]) == 4
    assert len(simplex_rule(2, 1)[1]) == 1


def test_gauss_line_integrates_cubics():
    bary, w = gauss_line(2)
    t = bary[:, 1]
    for k in range(4):
        assert np.sum(w * t**k) == pytest.approx(1.0 / (k + 1), rel=1e-14)


def test_facet_rules():
    assert len(facet_rule(2)[1]) == 2
    assert len(facet_rule(3)[1]) == 3
    assert len(facet_rule(2, 4)[1]) == 4
    with pytest.raises(ValueError):
        facet_rule(4)
    with pytest.raises(ValueError):
        simplex_rule(1, 2)
