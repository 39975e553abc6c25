import math

import numpy as np

from barrier_scatter.oracles import (asymptotic_sweep, chi_cut,
                                     oscillatory_integral, predicted_full,
                                     predicted_leading, quasimode_norms,
                                     resolvent_lower_bound_check, smooth_step)


def test_smooth_step_shape_and_derivative():
    assert smooth_step(-0.5) == 0.0
    assert smooth_step(1.5) == 1.0
    assert abs(smooth_step(0.5) - 0.5) < 1e-12
    eps = 1e-6
    for s in (0.2, 0.5, 0.8):
        fd = (smooth_step(s + eps) - smooth_step(s - eps)) / (2 * eps)
        assert abs(fd - smooth_step(s, order=1)) < 1e-7


def test_cutoff_is_one_then_zero():
    assert chi_cut(0.1) == 1.0
    assert chi_cut(0.25) == 1.0
    assert chi_cut(0.5) == 0.0
    assert 0.0 < chi_cut(0.35) < 1.0


def test_oscillatory_integral_matches_full_prediction():
    lam = 1e4
    got = oscillatory_integral(lam, 1.0, 1.0)
    want = predicted_full(lam, 1.0, 1)
    assert abs(got - want) <= 1e-9 * abs(want)


def test_half_power_no_log_reduces_to_fresnel():
    # alpha = 1/2, beta = 0: Gamma(1/2) e^{i pi/4} / sqrt(lam)
    lam = 1e4
    got = oscillatory_integral(lam, 0.5, 0.0)
    want = math.sqrt(math.pi / lam) * np.exp(1j * math.pi / 4.0)
    assert abs(got - want) <= 1e-7 * abs(want)


def test_leading_prediction_has_the_right_decay():
    a = predicted_leading(1e3, 0.5, 1.0)
    b = predicted_leading(1e5, 0.5, 1.0)
    ratio = abs(a) / abs(b)
    want = math.sqrt(1e5 / 1e3) * math.log(1e3) / math.log(1e5)
    assert abs(ratio - want) <= 1e-12 * want


def test_sweep_reports_small_decreasing_errors():
    chk = asymptotic_sweep(1.5, 1.0, (1e3, 1e4, 1e5))
    assert chk.rel_errors[1] < 0.05
    assert chk.decreasing
    assert chk.meta["full"] is True


def test_quasimode_norm_and_residual_are_positive():
    r = quasimode_norms([1.0], 1e-3)
    assert r.norm_u > 0 and r.norm_resid > 0
    assert r.ratio > 100.0
    assert 0.1 < r.bound_const < 10.0


def test_quasimode_product_structure_in_two_dimensions():
    # independent factors: the 2D norm is the product of the 1D norms
    r1 = quasimode_norms([1.0], 1e-3)
    r2 = quasimode_norms([1.0, 1.0], 1e-3)
    assert abs(r2.norm_u - r1.norm_u ** 2) <= 1e-10 * r1.norm_u ** 2


def test_resolvent_growth_rate():
    chk = resolvent_lower_bound_check([1.0])
    assert 0.95 <= chk.slope_log_corrected <= 1.05
    assert chk.correction_increasing
    assert np.all(chk.bound_consts > 0.5) and np.all(chk.bound_consts < 2.0)
