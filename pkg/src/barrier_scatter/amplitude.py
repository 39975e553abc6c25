"""Leading amplitude coefficients at the barrier-top energy.

The amplitude splits into regular contributions (one per transversal
scattering trajectory) and a singular contribution carried by the pair
of trapped trajectories. The singular coefficient comes in three forms
depending on which coupling between the two trapped expansions is the
first to survive: a rate below the doubled bottom rate ('a'), the
quadratic coupling at the doubled rate ('b'), or the cubic one ('c').
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as sp_gamma

from .manifolds import TrappedTrajectory
from .potential import BarrierSpectrum
from .series import CouplingData


@dataclass
class SigmaE:
    """Spectral exponent Sigma(E, h) = sum(lambda)/2 - i (E - E0)/h,
    parametrized by the scaled offset z with E = E0 + z h."""

    lambdas: tuple[float, ...]
    z: float

    @property
    def value(self) -> complex:
        return complex(sum(self.lambdas) / 2.0, -self.z)


def sigma_E(spec: BarrierSpectrum, z: float) -> SigmaE:
    return SigmaE(lambdas=spec.lambdas, z=float(z))


def c_constant(E: float, n: int) -> complex:
    """Dimensional constant of the amplitude normalization:
    -2 pi (2E)^{-(n-1)/4} (2 pi)^{(n-1)/2} e^{-i (n-3) pi / 4}."""
    if E <= 0:
        raise ValueError("energy must be positive")
    return (-2.0 * math.pi
            * (2.0 * E) ** (-(n - 1) / 4.0)
            * (2.0 * math.pi) ** ((n - 1) / 2.0)
            * cmath.exp(-1j * (n - 3) * math.pi / 4.0))


def principal_power(w: complex, p: complex) -> complex:
    """w**p on the principal branch, rejecting the cut ]-inf, 0]."""
    if w.imag == 0.0 and w.real <= 0.0:
        raise ValueError("argument lies on the branch cut ]-inf, 0]")
    return cmath.exp(p * cmath.log(w))


@dataclass
class AmplitudeResult:
    """One amplitude term: value(h) = coefficient * e^{i action / h}
    * h^{h_exponent} * |ln h|^{log_power}."""

    kind: str                  # 'regular', 'singular-a', 'singular-b', 'singular-c'
    action: float
    coefficient: complex
    h_exponent: complex = 0.0
    log_power: complex = 0.0
    convention: str = "direct"
    meta: dict = field(default_factory=dict)

    def value_at(self, h: float) -> complex:
        if not 0.0 < h < 1.0:
            raise ValueError("h must lie in (0, 1)")
        lh = abs(math.log(h))
        return (self.coefficient
                * cmath.exp(1j * self.action / h)
                * cmath.exp(self.h_exponent * math.log(h))
                * cmath.exp(self.log_power * math.log(lh)))


def leading_regular_coefficient(sigma_hat: float, nu_inf: int,
                                S_inf: float) -> AmplitudeResult:
    """Leading term of one transversal trajectory:
    e^{i S / h} e^{-i nu pi / 2} / sqrt(sigma_hat)."""
    if sigma_hat <= 0:
        raise ValueError("angular density must be positive")
    coeff = cmath.exp(-1j * nu_inf * math.pi / 2.0) / math.sqrt(sigma_hat)
    return AmplitudeResult(kind="regular", action=S_inf, coefficient=coeff)


def _common_singular_prefactor(E: float, n: int, spec: BarrierSpectrum,
                               minus: TrappedTrajectory,
                               plus: TrappedTrajectory) -> complex:
    lams = spec.lambdas
    ll = plus.ll
    lam_ll = spec.mu_seq[ll - 1]
    l1 = lams[0]
    pref = (c_constant(E, n) * math.sqrt(E) / math.pi ** (1.0 - n / 2.0))
    pref *= np.prod(np.array(lams)) ** (-0.5)
    pref *= (2.0 * l1 * lam_ll) ** 1.5
    pref *= cmath.exp(-1j * plus.nu * math.pi / 2.0)
    pref *= cmath.exp(-1j * minus.nu * math.pi / 2.0)
    pref *= (minus.D * plus.D) ** (-0.5)
    g1_minus = minus.g_coeffs[(1, 0)]
    gll_plus = plus.g_coeffs[(ll, 0)]
    pref *= float(np.linalg.norm(g1_minus)) * float(np.linalg.norm(gll_plus))
    return pref


def leading_singular_coefficient(coupling: CouplingData,
                                 spec: BarrierSpectrum,
                                 sigma: SigmaE, E: float,
                                 minus: TrappedTrajectory,
                                 plus: TrappedTrajectory) -> AmplitudeResult:
    """Leading coefficient of the trapped-pair contribution.

    The branch of the complex power is the principal one; 'convention'
    records the half plane the power argument lives in ('direct' for
    Re > 0 reached from below, 'conjugate' for the reflected case).
    """
    n = spec.n
    l1 = spec.lambdas[0]
    Sig = sigma.value
    pref = _common_singular_prefactor(E, n, spec, minus, plus)
    phase_n = cmath.exp(1j * (n * math.pi / 4.0 - math.pi / 2.0))
    action = minus.action + plus.action
    if coupling.case == "a":
        k = coupling.k
        mu_k = spec.mu_seq[k - 1]
        inner = coupling.inner_products[k - 1]
        arg = 2j * mu_k * inner
        coeff = (pref * phase_n / mu_k
                 * sp_gamma(Sig / mu_k)
                 * principal_power(arg, -Sig / mu_k))
        conv = "direct" if inner < 0 else "conjugate"
        return AmplitudeResult(kind="singular-a", action=action,
                               coefficient=coeff,
                               h_exponent=Sig / mu_k - 0.5,
                               log_power=0.0, convention=conv,
                               meta={"k": k, "mu_k": mu_k, "inner": inner})
    if coupling.case == "b":
        m2 = coupling.m2
        arg = -1j * complex(m2)
        coeff = (pref * phase_n
                 * sp_gamma(Sig / (2.0 * l1))
                 * (2.0 * l1) ** (Sig / l1 - 1.0)
                 * principal_power(arg, -Sig / (2.0 * l1)))
        conv = "direct" if m2 > 0 else "conjugate"
        return AmplitudeResult(kind="singular-b", action=action,
                               coefficient=coeff,
                               h_exponent=Sig / (2.0 * l1) - 0.5,
                               log_power=-Sig / l1, convention=conv,
                               meta={"m2": m2})
    if coupling.case == "c":
        m1 = coupling.m1
        arg = -1j * complex(m1)
        coeff = (pref * phase_n
                 * sp_gamma(Sig / (2.0 * l1))
                 * (2.0 * l1) ** (Sig / (2.0 * l1) - 1.0)
                 * principal_power(arg, -Sig / (2.0 * l1)))
        conv = "direct" if m1 > 0 else "conjugate"
        return AmplitudeResult(kind="singular-c", action=action,
                               coefficient=coeff,
                               h_exponent=Sig / (2.0 * l1) - 0.5,
                               log_power=-Sig / (2.0 * l1), convention=conv,
                               meta={"m1": m1})
    raise ValueError(f"unknown coupling case {coupling.case!r}")


def gamma_factor_identity_check(lambda1: float, z: float) -> tuple[float, float]:
    """(|Gamma(1/2 - i z / lambda1)|^2, pi / cosh(pi z / lambda1)).

    The two must agree; this pins the Gamma factor entering the
    modulus of the singular coefficient on the critical line."""
    from scipy.special import loggamma
    g = cmath.exp(2.0 * loggamma(0.5 - 1j * z / lambda1).real)
    return float(g.real), math.pi / math.cosh(math.pi * z / lambda1)


def assemble_amplitude(terms: list[AmplitudeResult], h: float
                       ) -> tuple[complex, list[complex]]:
    """Total amplitude at h plus the individual term values."""
    vals = [t.value_at(h) for t in terms]
    return sum(vals), vals
