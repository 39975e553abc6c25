"""Total cross-section in the semiclassical small-h regime.

For fast decay the total cross-section localizes on the classically
free sine factor of the line-transform of the potential:
sigma(omega, E, h) = 4 int_{omega^perp} sin^2( X(y) / (2 sqrt(2E) h) ) dy
with X(y) = int_R V(y + s omega) ds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .potential import PotentialModel
from .scatter import perp_basis


@dataclass
class CrossSectionResult:
    omega: np.ndarray
    E: float
    h: float
    value: float
    truncation_radius: float
    meta: dict = field(default_factory=dict)


def line_integral(model: PotentialModel, omega: np.ndarray,
                  y: np.ndarray, analytic: bool | None = None) -> float:
    """X(y) = int_R V(y + s omega) ds, y in omega^perp.

    Uses the closed gaussian form when available, otherwise adaptive
    quadrature."""
    omega = np.asarray(omega, dtype=float)
    omega = omega / np.linalg.norm(omega)
    y = np.asarray(y, dtype=float)
    if analytic is None:
        analytic = model.kind in ("gaussian", "anisotropic-gaussian")
    if analytic:
        if model.kind not in ("gaussian", "anisotropic-gaussian"):
            raise ValueError("closed form available only for gaussian kinds")
        q = np.diag(model.Q)
        a = float(np.sum(q * omega * omega))
        b = float(np.sum(q * omega * y))
        c = float(np.sum(q * y * y))
        # int E0 exp(-(a s^2 + 2 b s + c)/2) ds
        return model.E0 * math.sqrt(2.0 * math.pi / a) \
            * math.exp(-(c - b * b / a) / 2.0)
    val, _ = quad(lambda s: float(model.eval(y + s * omega)),
                  -np.inf, np.inf, epsabs=1e-13, epsrel=1e-12)
    return val


def _sin2_integrand(model: PotentialModel, omega: np.ndarray, E: float,
                    h: float):
    scale = 0.5 / (math.sqrt(2.0 * E) * h)

    def f(y_perp_coords: np.ndarray, B: np.ndarray) -> float:
        X = line_integral(model, omega, B @ y_perp_coords)
        return 4.0 * math.sin(scale * X) ** 2

    return f


def _truncation_radius(model: PotentialModel, omega: np.ndarray, E: float,
                       h: float, tol: float = 1e-14) -> float:
    """Radius beyond which 4 sin^2(X/(2 sqrt(2E) h)) <= 4 (X scale)^2
    drops below tol, from the gaussian envelope of X."""
    scale = 0.5 / (math.sqrt(2.0 * E) * h)
    q = np.diag(model.Q) if model.Q is not None else np.ones(model.n)
    qmin = float(np.min(q))
    # |X(y)| <= C exp(-qmin |y|^2 / 2); generous constant
    C = abs(model.E0) * math.sqrt(2.0 * math.pi / qmin) * 4.0
    # solve 4 (scale C)^2 exp(-qmin R^2) = tol
    inner = 4.0 * (scale * C) ** 2 / tol
    return math.sqrt(max(math.log(inner), 1.0) / qmin)


def total_cross_section(model: PotentialModel, omega: np.ndarray, E: float,
                        h: float, tol: float = 1e-12) -> CrossSectionResult:
    """sigma(omega, E, h) by adaptive quadrature over omega^perp.

    Supported for n = 2 and n = 3; the transverse integral is truncated
    where the gaussian envelope bounds the tail below tolerance."""
    omega = np.asarray(omega, dtype=float)
    omega = omega / np.linalg.norm(omega)
    n = model.n
    if n not in (2, 3):
        raise ValueError("total cross-section implemented for n in {2, 3}")
    B = perp_basis(omega)
    f = _sin2_integrand(model, omega, E, h)
    Rtr = _truncation_radius(model, omega, E, h)
    if n == 2:
        # the integrand oscillates on scale ~ h, so allow many panels
        limit = max(400, int(20.0 * Rtr / h))
        val, err = quad(lambda u: f(np.array([u]), B), -Rtr, Rtr,
                        epsabs=tol, epsrel=tol, limit=limit)
    else:
        from scipy.integrate import dblquad
        val, err = dblquad(lambda v, u: f(np.array([u, v]), B),
                           -Rtr, Rtr, lambda u: -Rtr, lambda u: Rtr,
                           epsabs=tol * 10, epsrel=1e-10)
    return CrossSectionResult(omega=omega, E=E, h=h, value=float(val),
                              truncation_radius=Rtr,
                              meta={"quad_error": float(err)})


def born_limit_value(model: PotentialModel, omega: np.ndarray, E: float,
                     h: float) -> float:
    """Weak-coupling quadratic form: 4 int (X(y) / (2 sqrt(2E) h))^2 dy.

    sigma for the scaled potential eps*V divided by eps^2 converges to
    this as eps -> 0."""
    omega = np.asarray(omega, dtype=float)
    omega = omega / np.linalg.norm(omega)
    n = model.n
    B = perp_basis(omega)
    scale = 0.5 / (math.sqrt(2.0 * E) * h)
    Rtr = _truncation_radius(model, omega, E, h) + 5.0

    def u2(yc: np.ndarray) -> float:
        X = line_integral(model, omega, B @ yc)
        return 4.0 * (scale * X) ** 2

    if n == 2:
        val, _ = quad(lambda u: u2(np.array([u])), -Rtr, Rtr,
                      epsabs=1e-13, epsrel=1e-12, limit=400)
    elif n == 3:
        from scipy.integrate import dblquad
        val, _ = dblquad(lambda v, u: u2(np.array([u, v])),
                         -Rtr, Rtr, lambda u: -Rtr, lambda u: Rtr,
                         epsabs=1e-11, epsrel=1e-10)
    else:
        raise ValueError("supported for n in {2, 3}")
    return float(val)
