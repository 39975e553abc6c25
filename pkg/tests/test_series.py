import math

import numpy as np
import pytest

from barrier_scatter.potential import (PotentialModel, barrier_spectrum,
                                       factorial_mi, multi_indices)
from barrier_scatter.series import (TruncatedSeries, apply_L,
                                    c1_resonant_closed_form,
                                    c1_resonant_ingredients, classify_case,
                                    eikonal_taylor, ghat_j_coeffs,
                                    ker_cap_im_dimension, kernel_dimension,
                                    m1_coefficient, m2_coefficient,
                                    phi1_taylor, phi_jhat2, solve_transport,
                                    transport_matrix)


def _grad_dot_dict(a: dict, b: dict, n: int) -> dict:
    """Independent polynomial grad(a) . grad(b) on coefficient dicts."""
    out = {}
    for al, ca in a.items():
        for be, cb in b.items():
            for j in range(n):
                if al[j] == 0 or be[j] == 0:
                    continue
                g = tuple(x + y - (2 if k == j else 0)
                          for k, (x, y) in enumerate(zip(al, be)))
                out[g] = out.get(g, 0.0) + al[j] * be[j] * ca * cb
    return out


def test_eikonal_jet_is_exactly_quadratic_for_the_local_model():
    m = PotentialModel(kind="quadratic-local", n=2, E0=1.0,
                       q=np.array([1.0, 2.0]))
    spec = barrier_spectrum(m)
    phi = eikonal_taylor(m, spec, N=6)
    want = {(2, 0): 0.5, (0, 2): 1.0}
    for a, c in phi.coeffs.items():
        assert abs(c - want.get(a, 0.0)) < 1e-14


def test_eikonal_orders_three_and_four_match_closed_forms(cubic2):
    # independent route: the degree-d coefficient is minus the degree-d
    # coefficient of (1/2)|grad phi_<d|^2 + V - E0 over the rate pairing
    model, spec = cubic2
    phi = eikonal_taylor(model, spec, N=4)
    V = model.taylor_coefficients(4)
    lams = np.array(spec.lambdas)
    # degree 3: c_a = -V_a / (lam . a)
    for a in multi_indices(2, 3):
        want = -V.get(a, 0.0) / float(lams @ a)
        assert abs(phi[a] - want) <= 1e-12 * max(1.0, abs(want))
    # degree 4: include the quadratic correction from the cubic jet
    phi3 = {a: phi[a] for a in multi_indices(2, 3)}
    gg = _grad_dot_dict(phi3, phi3, 2)
    for a in multi_indices(2, 4):
        want = -(V.get(a, 0.0) + 0.5 * gg.get(a, 0.0)) / float(lams @ a)
        assert abs(phi[a] - want) <= 1e-10 * max(1.0, abs(want))


def test_eikonal_jet_satisfies_the_equation(cubic2):
    model, spec = cubic2
    N = 6
    phi = eikonal_taylor(model, spec, N)
    V = TruncatedSeries(2, N, model.taylor_coefficients(N))
    from barrier_scatter.series import grad_dot
    resid = grad_dot(phi, phi).scale(0.5) + V
    for a, c in resid.coeffs.items():
        if sum(a) == 0:
            assert abs(c - model.E0) < 1e-13
        elif sum(a) <= N:
            assert abs(c) < 1e-12


def test_transport_kernel_dimension_counts_resonant_monomials():
    m = PotentialModel(kind="quadratic-local", n=2, E0=1.0,
                       q=np.array([1.0, 2.0]))
    spec = barrier_spectrum(m)
    phi = eikonal_taylor(m, spec, N=6)
    lams = np.array(spec.lambdas)
    basis = [a for d in range(7) for a in multi_indices(2, d)]
    for mu in spec.mu_seq[:4]:
        A = transport_matrix(phi, mu, 6)
        want = sum(1 for a in basis if abs(lams @ a - mu) < 1e-9)
        assert kernel_dimension(A) == want
        assert ker_cap_im_dimension(A, power=2) == 0


def test_transport_solution_solves_the_equation(cubic2):
    model, spec = cubic2
    phi = eikonal_taylor(model, spec, N=6)
    F = TruncatedSeries(2, 5, {(1, 1): 0.3, (3, 0): -0.2})
    sol = solve_transport(phi, spec, mu=spec.lambdas[0], F=F, N=5)
    resid = apply_L(phi, sol.series) - sol.series.scale(spec.lambdas[0]) - F
    assert max(abs(c) for a, c in resid.coeffs.items() if sum(a) <= 5) < 1e-8
    # kernel elements really are annihilated
    for k in sol.kernel:
        r = apply_L(phi, k) - k.scale(spec.lambdas[0])
        assert max((abs(c) for a, c in r.coeffs.items() if sum(a) <= 5),
                   default=0.0) < 1e-8


def test_first_profile_phase_has_the_prescribed_linear_part(cubic2):
    model, spec = cubic2
    g1 = np.array([-0.642734901, 0.0])
    p1 = phi1_taylor(model, spec, g1, N=4)
    l1 = spec.lambdas[0]
    assert abs(p1[(1, 0)] - (-2.0 * l1 * g1[0])) < 1e-10
    assert abs(p1[(0, 1)]) < 1e-10


def test_quadratic_profile_jet_reproduces_the_quadratic_coupling(cubic2):
    model, spec = cubic2
    rng = np.random.default_rng(3)
    for _ in range(5):
        g1m = rng.normal(size=2)
        g1p = rng.normal(size=2)
        jet = phi_jhat2(model, spec, g1m)
        val = sum(c * float(np.prod(g1p ** np.array(a)))
                  for a, c in jet.coeffs.items())
        m2 = m2_coefficient(model, spec, g1m, g1p)
        assert abs(val - m2) <= 1e-12 * max(1.0, abs(m2))


def test_resonant_source_coefficients_agree_between_the_two_routes():
    # double-entry: one route assembles the coefficients from transported
    # jets, the other writes them directly in derivatives of V
    rng = np.random.default_rng(7)
    for _ in range(3):
        cub = {}
        for a in multi_indices(2, 3):
            cub[a] = float(rng.normal() * 0.05)
        model = PotentialModel(kind="gaussian-plus-cubic", n=2, E0=1.0,
                               Q=np.diag([1.0, 4.0]), cubic=cub)
        spec = barrier_spectrum(model)
        g1 = rng.normal(size=2)
        g1[1] = 0.0  # the slow-rate coefficient lives on the slow axis
        ghat1, _ = ghat_j_coeffs(model, spec, g1)
        ghat0_res = {b: float(rng.normal() * 0.1)
                     for b in spec.I1(2 * spec.lambdas[0])}
        A = c1_resonant_ingredients(model, spec, g1, ghat1, ghat0_res)
        B = c1_resonant_closed_form(model, spec, g1, ghat0_res)
        assert set(A) == set(B)
        for a in A:
            assert abs(A[a] - B[a]) <= 1e-10 * max(1.0, abs(A[a]))


def test_local_trapped_coefficients_at_the_doubled_rate(cubic2):
    model, spec = cubic2
    g1 = np.array([-0.642734901, 0.0])
    ghat1, ghat0 = ghat_j_coeffs(model, spec, g1)
    d3 = model.derivative_tensor(3)
    # independent assembly of the source vector S
    S = np.zeros(2)
    for k in range(2):
        for a in multi_indices(2, 2):
            g = list(a)
            g[k] += 1
            S[k] += d3[tuple(g)] / factorial_mi(a) * float(
                np.prod(g1 ** np.array(a)))
    l1, l2 = spec.lambdas
    assert abs(ghat1[1] - S[1] / (4 * l1)) < 1e-14      # resonant direction
    assert abs(ghat0[0] + S[0] / ((2 * l1 + l1) * (2 * l1 - l1))) < 1e-14
    assert math.isnan(ghat0[1])


def test_coupling_classification_cases():
    m = PotentialModel(kind="quadratic-local", n=2, E0=1.0,
                       q=np.array([1.0, 2.0]))
    spec = barrier_spectrum(m)
    ga = {1: np.array([0.5, 0.0])}
    gb = {1: np.array([0.3, 0.0])}
    c = classify_case(spec, ga, gb)
    assert c.case == "a" and c.k == 1
    zero = {1: np.array([0.0, 0.0])}
    c = classify_case(spec, zero, gb, m2=-0.4)
    assert c.case == "b"
    c = classify_case(spec, zero, gb, m2=0.0, m1=0.2)
    assert c.case == "c"
    with pytest.raises(ValueError):
        classify_case(spec, zero, gb, m2=0.0, m1=0.0)


def test_cubic_coupling_is_symmetric_in_the_two_sides(cubic2):
    model, spec = cubic2
    rng = np.random.default_rng(11)
    g1m = rng.normal(size=2)
    g1p = rng.normal(size=2)
    _, gh0m = ghat_j_coeffs(model, spec, g1m)
    _, gh0p = ghat_j_coeffs(model, spec, g1p)
    gh0m = np.nan_to_num(gh0m)
    gh0p = np.nan_to_num(gh0p)
    a = m1_coefficient(model, spec, g1m, g1p, gh0m, gh0p)
    b = m1_coefficient(model, spec, g1p, g1m, gh0p, gh0m)
    assert abs(a - b) < 1e-12 * max(1.0, abs(a))
