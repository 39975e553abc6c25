"""Independent numerical oracles for the singular-amplitude asymptotics.

Two families:

1. Model oscillatory integrals int_0^infty e^{i lam t} t^{alpha-1}
   (-ln t)^beta chi(t) dt, evaluated by contour rotation plus weighted
   quadrature, and compared against their closed large-lam expansions.
   These integrals are the mechanism that converts the trapped-pair
   time correlation into the fractional powers of h in the amplitude.

2. A barrier-top quasimode for the exact quadratic model, whose norm
   ratios reproduce the h^{-1} sqrt|ln h| blowup of the resolvent at
   the critical energy.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy.integrate import IntegrationWarning, quad

CHI_FLAT_END = 0.25   # chi == 1 on [0, CHI_FLAT_END]
CHI_SUPPORT_END = 0.45

QM_ALPHA = 5.0 / 12.0   # spatial cutoff scale h^alpha
QM_BETA = 11.0 / 48.0   # inner cutoff scale h^{2 beta}


# ----------------------------------------------------------------------
# smooth bump machinery with explicit derivatives
def _sigma(s: float) -> float:
    return math.exp(-1.0 / s) if s > 0.0 else 0.0


def _sigma_d1(s: float) -> float:
    return math.exp(-1.0 / s) / s**2 if s > 0.0 else 0.0


def _sigma_d2(s: float) -> float:
    if s <= 0.0:
        return 0.0
    return math.exp(-1.0 / s) * (1.0 / s**4 - 2.0 / s**3)


def smooth_step(s: float, order: int = 0) -> float:
    """C^infty step: 0 for s <= 0, 1 for s >= 1; order in {0, 1, 2}
    selects the derivative."""
    if s <= 0.0:
        return 0.0
    if s >= 1.0:
        return 1.0 if order == 0 else 0.0
    a, b = _sigma(s), _sigma(1.0 - s)
    d = a + b
    if order == 0:
        return a / d
    a1, b1 = _sigma_d1(s), -_sigma_d1(1.0 - s)
    d1 = a1 + b1
    if order == 1:
        return (a1 * d - a * d1) / d**2
    a2, b2 = _sigma_d2(s), _sigma_d2(1.0 - s)
    d2 = a2 + b2
    return ((a2 * d - a * d2) * d - 2.0 * d1 * (a1 * d - a * d1)) / d**3


def chi_cut(t: float) -> float:
    """Cutoff of the model integral: 1 on [0, CHI_FLAT_END], smooth
    decay to 0 at CHI_SUPPORT_END."""
    if t <= CHI_FLAT_END:
        return 1.0
    if t >= CHI_SUPPORT_END:
        return 0.0
    return 1.0 - smooth_step((t - CHI_FLAT_END) / (CHI_SUPPORT_END - CHI_FLAT_END))


# ----------------------------------------------------------------------
def _F(t: complex, alpha: complex, beta: complex) -> complex:
    """t^{alpha-1} (-ln t)^beta, principal branches, upper half plane."""
    lt = cmath.log(t)
    return cmath.exp((alpha - 1.0) * lt) * cmath.exp(beta * cmath.log(-lt))


def _laplace_leg(lam: float, g, cut: float = 60.0) -> complex:
    """int_0^infty e^{-v} g(v / lam) dv / lam, complex g."""
    with warnings.catch_warnings():
        # the integrable endpoint singularity (Re(alpha) < 1) triggers a
        # subdivision warning while the estimate is already converged
        warnings.simplefilter("ignore", IntegrationWarning)
        re, _ = quad(lambda v: math.exp(-v) * g(v / lam).real, 0.0, cut,
                     epsabs=1e-14, epsrel=1e-13, limit=300)
        im, _ = quad(lambda v: math.exp(-v) * g(v / lam).imag, 0.0, cut,
                     epsabs=1e-14, epsrel=1e-13, limit=300)
    return complex(re, im) / lam


def oscillatory_integral(lam: float, alpha: complex, beta: complex) -> complex:
    """int_0^infty e^{i lam t} t^{alpha - 1} (-ln t)^beta chi(t) dt.

    Contour rotation on [0, CHI_FLAT_END] (chi == 1 there, and the
    integrand is analytic in the upper half plane), weighted oscillatory
    quadrature on the cutoff shoulder. Needs Re(alpha) > 0 and lam > 0.
    """
    if lam <= 0:
        raise ValueError("lam must be positive (conjugate for lam < 0)")
    if complex(alpha).real <= 0:
        raise ValueError("Re(alpha) must be positive")
    c = CHI_FLAT_END
    # rotated legs: int_0^c e^{i lam t} F dt
    #   = i int_0^inf e^{-lam u} F(i u) du
    #     - i e^{i lam c} int_0^inf e^{-lam u} F(c + i u) du
    leg0 = 1j * _laplace_leg(lam, lambda u: _F(1j * u, alpha, beta)
                             if u > 0 else 0.0)
    legc = 1j * cmath.exp(1j * lam * c) * _laplace_leg(
        lam, lambda u: _F(c + 1j * u, alpha, beta))
    piece1 = leg0 - legc

    def g(t: float) -> complex:
        return _F(t, alpha, beta) * chi_cut(t)

    rc, _ = quad(lambda t: g(t).real, c, CHI_SUPPORT_END, weight="cos",
                 wvar=lam, epsabs=1e-14, epsrel=1e-13, limit=400)
    rs, _ = quad(lambda t: g(t).real, c, CHI_SUPPORT_END, weight="sin",
                 wvar=lam, epsabs=1e-14, epsrel=1e-13, limit=400)
    ic, _ = quad(lambda t: g(t).imag, c, CHI_SUPPORT_END, weight="cos",
                 wvar=lam, epsabs=1e-14, epsrel=1e-13, limit=400)
    is_, _ = quad(lambda t: g(t).imag, c, CHI_SUPPORT_END, weight="sin",
                  wvar=lam, epsabs=1e-14, epsrel=1e-13, limit=400)
    piece2 = complex(rc - is_, rs + ic)
    return piece1 + piece2


def predicted_leading(lam: float, alpha: complex, beta: complex) -> complex:
    """Leading closed form Gamma(alpha) (ln lam)^beta (-i lam)^{-alpha},
    with (-i lam)^{-alpha} = e^{i alpha pi / 2} lam^{-alpha}."""
    ga = complex(mpmath.gamma(alpha))
    return ga * cmath.exp(beta * cmath.log(math.log(lam))) \
        * cmath.exp(1j * complex(alpha) * math.pi / 2.0) \
        * cmath.exp(-complex(alpha) * math.log(lam))


def predicted_full(lam: float, alpha: complex, beta: int) -> complex:
    """All-orders closed form for integer beta:
    (-i lam)^{-alpha} sum_j C(beta, j) Gamma^{(j)}(alpha) (-1)^j
    (ln(-i lam))^{beta - j}, with ln(-i lam) = ln lam - i pi/2."""
    if beta != int(beta) or beta < 0:
        raise ValueError("full prediction needs integer beta >= 0")
    beta = int(beta)
    lnmil = complex(math.log(lam), -math.pi / 2.0)
    total = 0j
    for j in range(beta + 1):
        gj = complex(mpmath.diff(mpmath.gamma, complex(alpha), j))
        total += math.comb(beta, j) * gj * (-1.0) ** j * lnmil ** (beta - j)
    return cmath.exp(1j * complex(alpha) * math.pi / 2.0) \
        * cmath.exp(-complex(alpha) * math.log(lam)) * total


@dataclass
class AsymptoticCheck:
    lam_grid: np.ndarray
    numeric: np.ndarray
    predicted: np.ndarray
    rel_errors: np.ndarray
    decreasing: bool
    meta: dict = field(default_factory=dict)


def asymptotic_sweep(alpha: complex, beta: complex,
                     lam_grid=(1e3, 1e4, 1e5),
                     full: bool | None = None) -> AsymptoticCheck:
    """Numeric-vs-predicted comparison over a grid of frequencies.

    Integer beta uses the all-orders prediction; otherwise the leading
    one (whose own error decays only logarithmically)."""
    lam_grid = np.asarray(lam_grid, dtype=float)
    if full is None:
        full = (complex(beta).imag == 0.0
                and float(complex(beta).real).is_integer()
                and complex(beta).real >= 0)
    numeric = np.array([oscillatory_integral(l, alpha, beta)
                        for l in lam_grid])
    if full:
        predicted = np.array([predicted_full(l, alpha, int(complex(beta).real))
                              for l in lam_grid])
    else:
        predicted = np.array([predicted_leading(l, alpha, beta)
                              for l in lam_grid])
    rel = np.abs(numeric - predicted) / np.abs(predicted)
    # once both errors sit at the quadrature noise floor their ordering
    # is roundoff, so those pairs count as decreased
    floor = 1e-7
    decreasing = bool(all(b < a or (a < floor and b < floor)
                          for a, b in zip(rel[:-1], rel[1:])))
    return AsymptoticCheck(lam_grid=lam_grid, numeric=numeric,
                           predicted=predicted, rel_errors=rel,
                           decreasing=decreasing, meta={"full": full,
                                                        "noise_floor": floor})


# ----------------------------------------------------------------------
# quasimode for the exact quadratic barrier
def _chi_mono(x: float, order: int = 0) -> float:
    """Nondecreasing C^infty profile: x on (0, 1], 2 for x >= 2."""
    if x <= 1.0:
        if order == 0:
            return x
        return 1.0 if order == 1 else 0.0
    if x >= 2.0:
        return 2.0 if order == 0 else 0.0
    s = smooth_step(x - 1.0)
    s1 = smooth_step(x - 1.0, 1)
    s2 = smooth_step(x - 1.0, 2)
    if order == 0:
        return x + (2.0 - x) * s
    if order == 1:
        return 1.0 - s + (2.0 - x) * s1
    return -2.0 * s1 + (2.0 - x) * s2


def _phi_bump(t: float, order: int = 0) -> float:
    """Even bump: 1 on [-1, 1], support [-2, 2]."""
    a = abs(t)
    if a <= 1.0:
        return 1.0 if order == 0 else 0.0
    if a >= 2.0:
        return 0.0
    s = 2.0 - a
    sgn = 1.0 if t >= 0 else -1.0
    if order == 0:
        return smooth_step(s)
    if order == 1:
        return -sgn * smooth_step(s, 1)
    return smooth_step(s, 2)


def _v_profile(t: float, h: float, alpha: float = QM_ALPHA,
               beta: float = QM_BETA) -> tuple[float, float, float]:
    """v(t) = phi(t / h^alpha) chi(h^beta t^{-1/2}) and two derivatives,
    for t > 0."""
    ha = h**alpha
    hb = h**beta
    w1 = _phi_bump(t / ha)
    w1p = _phi_bump(t / ha, 1) / ha
    w1pp = _phi_bump(t / ha, 2) / ha**2
    s = hb / math.sqrt(t)
    if s >= 2.0:
        w2, w2p_t, w2pp_t = 2.0, 0.0, 0.0
    else:
        sp = -0.5 * hb * t**-1.5
        spp = 0.75 * hb * t**-2.5
        c0 = _chi_mono(s)
        c1 = _chi_mono(s, 1)
        c2 = _chi_mono(s, 2)
        w2 = c0
        w2p_t = c1 * sp
        w2pp_t = c2 * sp * sp + c1 * spp
    v = w1 * w2
    vp = w1p * w2 + w1 * w2p_t
    vpp = w1pp * w2 + 2.0 * w1p * w2p_t + w1 * w2pp_t
    return v, vp, vpp


@dataclass
class QuasimodeReport:
    h: float
    lambdas: tuple[float, ...]
    norm_u: float
    norm_resid: float
    ratio: float
    bound_const: float
    cubic_moment_const: float
    meta: dict = field(default_factory=dict)


def _qm_pieces(lam: float, h: float) -> tuple[float, float, complex, float]:
    """(I, N, c, T3) for one direction: I = ||u_k||^2, N = ||L_k u_k||^2,
    c = <L_k u_k, u_k>, T3 = || |t|^{3/2} u_k ||^2 (for the cubic-error
    moment)."""
    ha = h**QM_ALPHA
    hb2 = h ** (2 * QM_BETA)
    pts = sorted({hb2 / 4.0, hb2, ha, 2.0 * ha})

    def seg(f):
        total = 0.0
        a = 0.0
        for b in pts:
            val, _ = quad(f, a, b, epsabs=1e-15, epsrel=1e-11, limit=200)
            total += val
            a = b
        return 2.0 * total  # even in t

    I = seg(lambda t: _v_profile(t, h)[0] ** 2)

    def AB(t):
        v, vp, vpp = _v_profile(t, h)
        A = 0.5 * h * h * vpp
        B = 0.5 * h * lam * (2.0 * t * vp + v)
        return v, A, B

    N = seg(lambda t: (lambda v, A, B: A * A + B * B)(*AB(t)))
    cre = seg(lambda t: (lambda v, A, B: -A * v)(*AB(t)))
    cim = seg(lambda t: (lambda v, A, B: -B * v)(*AB(t)))
    T3 = seg(lambda t: t**3 * _v_profile(t, h)[0] ** 2)
    return I, N, complex(cre, cim), T3


def quasimode_norms(lambdas, h: float) -> QuasimodeReport:
    """Norms of the barrier-top quasimode of the exact quadratic model
    P = -(h^2/2) Laplacian - sum lambda_j^2 x_j^2 / 2 at energy 0.

    u(x) = prod_j e^{i lambda_j x_j^2 / 2 h} phi(x_j / h^a)
           chi(h^b / |x_j|^{1/2}),  a = 5/12, b = 11/48.
    """
    lambdas = tuple(float(l) for l in np.atleast_1d(lambdas))
    n = len(lambdas)
    I = np.empty(n)
    N = np.empty(n)
    c = np.empty(n, dtype=complex)
    T3 = np.empty(n)
    for k, lam in enumerate(lambdas):
        I[k], N[k], c[k], T3[k] = _qm_pieces(lam, h)
    norm_u2 = float(np.prod(I))
    resid2 = 0.0
    for k in range(n):
        resid2 += N[k] * np.prod(np.delete(I, k))
    for k in range(n):
        for kp in range(n):
            if kp == k:
                continue
            rest = norm_u2 / (I[k] * I[kp])
            resid2 += float((c[k] * np.conj(c[kp])).real) * rest
    resid2 = max(resid2, 0.0)
    norm_u = math.sqrt(norm_u2)
    norm_resid = math.sqrt(resid2)
    lh = abs(math.log(h))
    bound_const = norm_u / (h ** (QM_BETA * n) * lh ** (n / 2.0))
    # || |x|^3 u || <~ h^{3 alpha} ||u||: the cubic-moment constant
    m3 = 0.0
    for k in range(n):
        m3 += T3[k] * np.prod(np.delete(I, k))
    cubic_moment_const = math.sqrt(m3) / (h ** (3 * QM_ALPHA) * norm_u)
    return QuasimodeReport(h=h, lambdas=lambdas, norm_u=norm_u,
                           norm_resid=norm_resid,
                           ratio=norm_u / norm_resid,
                           bound_const=bound_const,
                           cubic_moment_const=cubic_moment_const,
                           meta={"I": I.tolist(), "N": N.tolist()})


@dataclass
class ResolventCheck:
    h_grid: np.ndarray
    ratios: np.ndarray
    slope_raw: float
    slope_log_corrected: float
    bound_consts: np.ndarray
    correction_increasing: bool
    meta: dict = field(default_factory=dict)


def resolvent_lower_bound_check(lambdas, h_grid=None) -> ResolventCheck:
    """Quasimode ratios ||u|| / ||(P - E0) u|| over an h grid.

    The ratio grows like h^{-1} sqrt|ln h|; slope_log_corrected is the
    fitted power of 1/h after dividing out sqrt|ln h| (expected 1), and
    slope_raw the fit without that correction."""
    if h_grid is None:
        h_grid = np.logspace(-4, -2, 9)
    h_grid = np.asarray(h_grid, dtype=float)
    reports = [quasimode_norms(lambdas, h) for h in h_grid]
    ratios = np.array([r.ratio for r in reports])
    lh = np.abs(np.log(h_grid))
    x = np.log(1.0 / h_grid)
    slope_raw = float(np.polyfit(x, np.log(ratios), 1)[0])
    slope_corr = float(np.polyfit(x, np.log(ratios / np.sqrt(lh)), 1)[0])
    # ratio * h ~ sqrt|ln h| should grow as h decreases
    corrected = (ratios * h_grid)[np.argsort(h_grid)[::-1]]
    increasing = bool(np.all(np.diff(corrected) > 0))
    return ResolventCheck(h_grid=h_grid, ratios=ratios,
                          slope_raw=slope_raw,
                          slope_log_corrected=slope_corr,
                          bound_consts=np.array([r.bound_const for r in reports]),
                          correction_increasing=increasing,
                          meta={"reports": reports})
