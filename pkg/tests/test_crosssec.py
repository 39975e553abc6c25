import math

import numpy as np
from scipy.integrate import quad

from barrier_scatter.crosssec import (born_limit_value, line_integral,
                                      total_cross_section)
from barrier_scatter.potential import PotentialModel


def test_line_transform_closed_form_matches_quadrature(aniso2):
    model, _ = aniso2
    rng = np.random.default_rng(5)
    for _ in range(4):
        th = rng.uniform(0.0, 2.0 * math.pi)
        omega = np.array([math.cos(th), math.sin(th)])
        y = rng.uniform(-1.5, 1.5) * np.array([-omega[1], omega[0]])
        closed = line_integral(model, omega, y, analytic=True)
        numeric = line_integral(model, omega, y, analytic=False)
        assert abs(closed - numeric) <= 1e-8 * abs(closed)


def test_total_cross_section_matches_direct_quadrature(radial2):
    model, _ = radial2
    omega = np.array([1.0, 0.0])
    E, h = 1.0, 0.25
    res = total_cross_section(model, omega, E, h)
    scale = 0.5 / (math.sqrt(2.0 * E) * h)
    X = lambda y: line_integral(model, omega, np.array([0.0, y]))
    want, _ = quad(lambda y: 4.0 * math.sin(scale * X(y)) ** 2,
                   -12.0, 12.0, epsabs=1e-12, epsrel=1e-12, limit=800)
    assert abs(res.value - want) <= 1e-8 * want


def test_rotational_symmetry_of_the_cross_section(radial2):
    model, _ = radial2
    E, h = 1.0, 0.3
    a = total_cross_section(model, np.array([1.0, 0.0]), E, h)
    b = total_cross_section(model, np.array([0.6, 0.8]), E, h)
    assert abs(a.value - b.value) <= 1e-8 * a.value


def test_weak_coupling_limit_is_quadratic(radial2):
    model, _ = radial2
    omega = np.array([1.0, 0.0])
    E, h = 1.0, 0.1
    born = born_limit_value(model, omega, E, h)
    for eps in (1e-2, 1e-3):
        sig = total_cross_section(model.scaled(eps), omega, E, h).value
        assert abs(sig / eps ** 2 - born) <= 0.01 * born
