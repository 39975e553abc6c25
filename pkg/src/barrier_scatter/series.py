"""Formal power series at the barrier top: eikonal phase, transport
operator L = grad(phi+) . grad, its kernel/image structure at each rate,
and the coupling coefficients entering the singular amplitude.

Series are stored as {multi-index: coefficient} in monomial form
(phi = sum c_alpha x^alpha), truncated at a fixed total degree.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .potential import (BarrierSpectrum, MultiIndex, PotentialModel,
                        factorial_mi, multi_indices)

DEFAULT_TRUNCATION = 6
# series comparisons are relative with this absolute floor
SERIES_FLOOR = 1e-14
RANK_TOL = 1e-9


# ----------------------------------------------------------------------
@dataclass
class TruncatedSeries:
    """Polynomial/jet sum_{|alpha| <= N} c_alpha x^alpha."""

    n: int
    N: int
    coeffs: dict[MultiIndex, float] = field(default_factory=dict)

    def copy(self) -> "TruncatedSeries":
        return TruncatedSeries(self.n, self.N, dict(self.coeffs))

    def __getitem__(self, alpha: MultiIndex) -> float:
        return self.coeffs.get(tuple(alpha), 0.0)

    def set(self, alpha: MultiIndex, value: float):
        self.coeffs[tuple(alpha)] = value

    def __add__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        out = self.copy()
        for a, c in other.coeffs.items():
            out.coeffs[a] = out.coeffs.get(a, 0.0) + c
        return out

    def __sub__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        return self + other.scale(-1.0)

    def scale(self, s: float) -> "TruncatedSeries":
        return TruncatedSeries(self.n, self.N,
                               {a: s * c for a, c in self.coeffs.items()})

    def __mul__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        out: dict[MultiIndex, float] = {}
        for a, ca in self.coeffs.items():
            if ca == 0.0:
                continue
            for b, cb in other.coeffs.items():
                if cb == 0.0:
                    continue
                g = tuple(x + y for x, y in zip(a, b))
                if sum(g) > self.N:
                    continue
                out[g] = out.get(g, 0.0) + ca * cb
        return TruncatedSeries(self.n, self.N, out)

    def diff(self, i: int) -> "TruncatedSeries":
        out: dict[MultiIndex, float] = {}
        for a, c in self.coeffs.items():
            if a[i] == 0:
                continue
            b = list(a)
            b[i] -= 1
            out[tuple(b)] = out.get(tuple(b), 0.0) + c * a[i]
        return TruncatedSeries(self.n, self.N, out)

    def degree_part(self, d: int) -> "TruncatedSeries":
        return TruncatedSeries(self.n, self.N,
                               {a: c for a, c in self.coeffs.items()
                                if sum(a) == d})

    def eval(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        total = 0.0
        for a, c in self.coeffs.items():
            total += c * float(np.prod(x ** np.array(a)))
        return total

    def derivative_at_zero(self, alpha: MultiIndex) -> float:
        """d^alpha of this jet at 0 (coefficient times alpha!)."""
        return self[alpha] * factorial_mi(alpha)

    def max_abs(self) -> float:
        return max((abs(c) for c in self.coeffs.values()), default=0.0)

    def close_to(self, other: "TruncatedSeries", rtol: float = 1e-10) -> bool:
        keys = set(self.coeffs) | set(other.coeffs)
        scale = max(self.max_abs(), other.max_abs(), SERIES_FLOOR)
        return all(abs(self[a] - other[a]) <= rtol * scale + SERIES_FLOOR
                   for a in keys)


def basis_indices(n: int, N: int) -> list[MultiIndex]:
    out = []
    for d in range(N + 1):
        out.extend(multi_indices(n, d))
    return out


def grad_dot(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    out = TruncatedSeries(a.n, a.N, {})
    for i in range(a.n):
        out = out + a.diff(i) * b.diff(i)
    return out


# ----------------------------------------------------------------------
def eikonal_taylor(model: PotentialModel, spec: BarrierSpectrum,
                   N: int = DEFAULT_TRUNCATION) -> TruncatedSeries:
    """Jet of the outgoing phase phi+ at 0: (1/2)|grad phi|^2 + V = E0,
    phi = sum_j lambda_j x_j^2 / 2 + higher order.

    Solved degree by degree; the degree-d coefficient is
    c_alpha = -(residual)_alpha / (lambda . alpha), always non-resonant.
    """
    n = model.n
    lams = spec.lambdas
    V = TruncatedSeries(n, N, model.taylor_coefficients(N))
    phi = TruncatedSeries(n, N, {})
    for j in range(n):
        e2 = [0] * n
        e2[j] = 2
        phi.set(tuple(e2), lams[j] / 2.0)
    for d in range(3, N + 1):
        resid = grad_dot(phi, phi).scale(0.5) + V
        zero = (0,) * n
        resid.coeffs[zero] = resid.coeffs.get(zero, 0.0) - model.E0
        for alpha in multi_indices(n, d):
            r = resid[alpha]
            if r != 0.0:
                phi.set(alpha, phi[alpha] - r / spec.lam_dot(alpha))
    return phi


def apply_L(phi: TruncatedSeries, u: TruncatedSeries) -> TruncatedSeries:
    """Transport operator L u = grad(phi) . grad(u)."""
    return grad_dot(phi, u)


def transport_matrix(phi: TruncatedSeries, mu: float, N: int) -> np.ndarray:
    """Matrix of (L - mu) on span{x^alpha : |alpha| <= N}."""
    n = phi.n
    basis = basis_indices(n, N)
    pos = {a: i for i, a in enumerate(basis)}
    A = np.zeros((len(basis), len(basis)))
    for j, alpha in enumerate(basis):
        u = TruncatedSeries(n, N, {alpha: 1.0})
        Lu = apply_L(phi, u)
        for beta, c in Lu.coeffs.items():
            if beta in pos:
                A[pos[beta], j] += c
        A[j, j] -= mu
    return A


def _nullspace(A: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    _, s, vt = np.linalg.svd(A)
    scale = s[0] if s.size and s[0] > 0 else 1.0
    rank = int(np.sum(s > tol * scale))
    return vt[rank:].T


def _rank(A: np.ndarray, tol: float = RANK_TOL) -> int:
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def kernel_dimension(A: np.ndarray, tol: float = RANK_TOL) -> int:
    return A.shape[1] - _rank(A, tol)


def in_image(A: np.ndarray, F: np.ndarray, tol: float = 1e-8) -> bool:
    x, *_ = np.linalg.lstsq(A, F, rcond=None)
    resid = np.linalg.norm(A @ x - F)
    return resid <= tol * max(1.0, np.linalg.norm(F))


def ker_cap_im_dimension(A: np.ndarray, power: int = 1,
                         tol: float = RANK_TOL) -> int:
    """dim( Ker(A) intersect Im(A^power) )."""
    K = _nullspace(A, tol)
    B = np.linalg.matrix_power(A, power)
    rB = _rank(B, tol)
    if K.shape[1] == 0 or rB == 0:
        return 0
    # dim(K cap Im B) = dim K + rank B - rank [K | B]
    stacked = np.hstack([K, B])
    return K.shape[1] + rB - _rank(stacked, tol)


# ----------------------------------------------------------------------
def psi_map(phi: TruncatedSeries, spec: BarrierSpectrum) -> np.ndarray:
    """Resonant coupling matrix at rate 2*lambda_1:
    Psi[alpha, beta] = d^alpha d^beta phi+ (0) / alpha!,
    rows alpha in I2(lambda_1), columns beta in I1(2 lambda_1)."""
    l1 = spec.lambdas[0]
    rows = spec.I2(l1)
    cols = spec.I1(2 * l1)
    out = np.zeros((len(rows), len(cols)))
    for i, alpha in enumerate(rows):
        for j, beta in enumerate(cols):
            g = tuple(a + b for a, b in zip(alpha, beta))
            out[i, j] = phi.derivative_at_zero(g) / factorial_mi(alpha)
    return out


@dataclass
class TransportSolution:
    """Solution u of (L - mu) u = F on the truncated monomial space.

    kernel holds a canonical basis of Ker(L - mu); free_values are the
    coefficients along that basis that were added to the minimum-norm
    particular solution (default all zero). residual_norm > 0 signals an
    obstruction (F not in the image)."""

    series: TruncatedSeries
    mu: float
    kernel: list[TruncatedSeries]
    free_values: np.ndarray
    residual_norm: float
    solvable: bool
    obstruction: np.ndarray | None = None


def _canonical_kernel_functionals(spec: BarrierSpectrum, mu: float,
                                  phi: TruncatedSeries,
                                  basis: list[MultiIndex]) -> np.ndarray:
    """Rows of coefficient functionals that gauge-fix the kernel basis.

    Below the doubled bottom rate: the degree-1 coefficients on the
    rate-mu eigendirections. At mu = 2*lambda_1: the degree-2
    coefficients on I2(lambda_1) plus the projections of the degree-1
    block (on I1(2 lambda_1)) onto Ker Psi."""
    n = spec.n
    l1 = spec.lambdas[0]
    pos = {a: i for i, a in enumerate(basis)}
    rows = []
    if spec.rate_equal(mu, 2 * l1):
        for alpha in spec.I2(l1):
            r = np.zeros(len(basis))
            r[pos[alpha]] = 1.0
            rows.append(r)
        cols = spec.I1(2 * l1)
        if cols:
            Psi = psi_map(phi, spec)
            W = _nullspace(Psi)
            for k in range(W.shape[1]):
                r = np.zeros(len(basis))
                for j, beta in enumerate(cols):
                    r[pos[beta]] = W[j, k]
                rows.append(r)
    else:
        for beta in spec.I1(mu):
            r = np.zeros(len(basis))
            r[pos[beta]] = 1.0
            rows.append(r)
    return np.array(rows) if rows else np.zeros((0, len(basis)))


def solve_transport(phi: TruncatedSeries, spec: BarrierSpectrum, mu: float,
                    F: TruncatedSeries | None = None,
                    free_values: np.ndarray | dict | None = None,
                    N: int | None = None,
                    obstruction_tol: float = 1e-8) -> TransportSolution:
    """Solve (L - mu) u = F for a jet u of degree <= N.

    Resonant directions (the kernel of L - mu) are fixed by free
    coefficients, default 0. When F is not in the image the solution is
    the least-squares one and `solvable` is False.
    """
    n = phi.n
    if N is None:
        N = phi.N
    if F is None:
        F = TruncatedSeries(n, N, {})
    basis = basis_indices(n, N)
    pos = {a: i for i, a in enumerate(basis)}
    A = transport_matrix(phi, mu, N)
    b = np.zeros(len(basis))
    for a, c in F.coeffs.items():
        if a in pos:
            b[pos[a]] = c
    u, *_ = np.linalg.lstsq(A, b, rcond=None)
    resid = A @ u - b
    resid_norm = float(np.linalg.norm(resid))
    solvable = resid_norm <= obstruction_tol * max(1.0, np.linalg.norm(b))

    K = _nullspace(A)
    kernel: list[TruncatedSeries] = []
    fv = np.zeros(K.shape[1])
    if K.shape[1] > 0:
        C = _canonical_kernel_functionals(spec, mu, phi, basis)
        if C.shape[0] == K.shape[1]:
            G = C @ K
            if abs(np.linalg.det(G)) > 1e-12:
                K = K @ np.linalg.inv(G)
        # subtract the particular solution's components along the gauge
        if C.shape[0] == K.shape[1] and K.shape[1] > 0:
            coords = C @ u
            u = u - K @ coords
            if free_values is not None:
                if isinstance(free_values, dict):
                    fv = np.zeros(K.shape[1])
                    for idx, val in free_values.items():
                        fv[idx] = val
                else:
                    fv = np.asarray(free_values, dtype=float)
                u = u + K @ fv
        for k in range(K.shape[1]):
            coeffs = {a: K[pos[a], k] for a in basis
                      if abs(K[pos[a], k]) > SERIES_FLOOR}
            kernel.append(TruncatedSeries(n, N, coeffs))
    series = TruncatedSeries(n, N, {a: u[pos[a]] for a in basis
                                    if abs(u[pos[a]]) > SERIES_FLOOR})
    return TransportSolution(series=series, mu=mu, kernel=kernel,
                             free_values=fv, residual_norm=resid_norm,
                             solvable=solvable,
                             obstruction=resid if not solvable else None)


# ----------------------------------------------------------------------
def phi1_taylor(model: PotentialModel, spec: BarrierSpectrum,
                g1_minus: np.ndarray, N: int = DEFAULT_TRUNCATION,
                phi: TruncatedSeries | None = None) -> TruncatedSeries:
    """Jet of the first transported profile phase: the kernel element of
    (L - lambda_1) with linear part -2 lambda_1 g1 . x."""
    if phi is None:
        phi = eikonal_taylor(model, spec, max(N + 1, DEFAULT_TRUNCATION + 1))
    l1 = spec.lambdas[0]
    sol = solve_transport(phi, spec, l1, N=N)
    out = TruncatedSeries(model.n, N, {})
    for k, beta in enumerate(spec.I1(l1)):
        j = int(np.argmax(beta))
        coef = -2.0 * l1 * float(g1_minus[j])
        out = out + sol.kernel[k].scale(coef)
    return out


def ghat_j_coeffs(model: PotentialModel, spec: BarrierSpectrum,
                  g1: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Local expansion data of the trapped trajectory at the doubled
    bottom rate: x(t) ~ g1 e^{-l1 t} + (ghat1 t + ghat0) e^{-2 l1 t} + ...

    Returns (ghat1, ghat0_offres). ghat1 is supported on the rate-2*l1
    eigendirections; ghat0 is determined by the local data only off
    those directions (its resonant components depend on the global
    trajectory and are returned as nan).
    """
    n = model.n
    l1 = spec.lambdas[0]
    d3 = model.derivative_tensor(3)
    S = np.zeros(n)
    for k in range(n):
        for alpha in multi_indices(n, 2):
            g = list(alpha)
            g[k] += 1
            ga = np.prod(np.asarray(g1) ** np.array(alpha))
            S[k] += d3[tuple(g)] / factorial_mi(alpha) * float(ga)
    ghat1 = np.zeros(n)
    ghat0 = np.full(n, np.nan)
    for k in range(n):
        if spec.rate_equal(spec.lambdas[k], 2 * l1):
            ghat1[k] = S[k] / (4.0 * l1)
        else:
            lk = spec.lambdas[k]
            ghat0[k] = -S[k] / ((2 * l1 + lk) * (2 * l1 - lk))
    return ghat1, ghat0


def m2_coefficient(model: PotentialModel, spec: BarrierSpectrum,
                   g1_minus: np.ndarray, g1_plus: np.ndarray) -> float:
    """Quadratic resonant coupling through the doubled-rate directions."""
    n = model.n
    l1 = spec.lambdas[0]
    d3 = model.derivative_tensor(3)
    total = 0.0
    for beta in spec.I1(2 * l1):
        j = int(np.argmax(beta))
        minus = 0.0
        plus = 0.0
        for alpha in spec.I2(l1):
            g = list(alpha)
            g[j] += 1
            d = d3[tuple(g)] / factorial_mi(alpha)
            minus += d * float(np.prod(np.asarray(g1_minus) ** np.array(alpha)))
            plus += d * float(np.prod(np.asarray(g1_plus) ** np.array(alpha)))
        total += minus * plus
    return -total / (8.0 * l1)


def phi_jhat2(model: PotentialModel, spec: BarrierSpectrum,
              g1_minus: np.ndarray) -> TruncatedSeries:
    """Quadratic jet of the doubled-rate profile phase correction; its
    value at g1_plus reproduces the quadratic coupling coefficient."""
    n = model.n
    l1 = spec.lambdas[0]
    d3 = model.derivative_tensor(3)
    out = TruncatedSeries(n, 2, {})
    for beta in spec.I1(2 * l1):
        j = int(np.argmax(beta))
        minus = 0.0
        for b in spec.I2(l1):
            g = list(b)
            g[j] += 1
            minus += d3[tuple(g)] / factorial_mi(b) * float(
                np.prod(np.asarray(g1_minus) ** np.array(b)))
        for alpha in spec.I2(l1):
            g = list(alpha)
            g[j] += 1
            c = d3[tuple(g)] / factorial_mi(alpha)
            out.set(alpha, out[alpha] - minus * c / (8.0 * l1))
    return out


def m1_coefficient(model: PotentialModel, spec: BarrierSpectrum,
                   g1_minus: np.ndarray, g1_plus: np.ndarray,
                   ghat0_minus: np.ndarray, ghat0_plus: np.ndarray) -> float:
    """Cubic-order coupling used when the quadratic one vanishes.

    ghat0_minus/plus are the e^{-2 l1 t} coefficient vectors of the two
    trapped trajectories (only components outside the doubled-rate
    eigendirections enter when those directions are absent).
    """
    n = model.n
    l1 = spec.lambdas[0]
    lams = spec.lambdas
    d3 = model.derivative_tensor(3)
    d4 = model.derivative_tensor(4)
    I2l1 = spec.I2(l1)
    res_dirs = {int(np.argmax(b)) for b in spec.I1(2 * l1)}

    def pw(v, alpha):
        return float(np.prod(np.asarray(v) ** np.array(alpha)))

    total = 0.0
    for j in range(n):
        for alpha in I2l1:
            g = list(alpha)
            g[j] += 1
            d = d3[tuple(g)] / factorial_mi(alpha)
            total -= d * (pw(g1_minus, alpha) * float(ghat0_plus[j])
                          + float(ghat0_minus[j]) * pw(g1_plus, alpha))
    for alpha in I2l1:
        for beta in I2l1:
            ab = tuple(a + b for a, b in zip(alpha, beta))
            C = -d4[ab]
            for j in range(n):
                if j in res_dirs:
                    continue
                ga = list(alpha)
                ga[j] += 1
                gb = list(beta)
                gb[j] += 1
                C += (4 * l1**2 / (lams[j]**2 * (4 * l1**2 - lams[j]**2))) \
                    * d3[tuple(ga)] * d3[tuple(gb)]
            for j in range(n):
                for gamma in multi_indices(n, 2):
                    delta = tuple(a - g for a, g in zip(ab, gamma))
                    if any(d < 0 for d in delta):
                        continue
                    gg = list(gamma)
                    gg[j] += 1
                    dd = list(delta)
                    dd[j] += 1
                    C -= (factorial_mi(ab) / (factorial_mi(gamma) * factorial_mi(delta))) \
                        * d3[tuple(gg)] * d3[tuple(dd)] / (2.0 * lams[j]**2)
            total += (pw(g1_minus, alpha) / factorial_mi(alpha)) \
                * (pw(g1_plus, beta) / factorial_mi(beta)) * C
    return total


# ----------------------------------------------------------------------
def c1_resonant_ingredients(model: PotentialModel, spec: BarrierSpectrum,
                            g1_minus: np.ndarray, ghat1: np.ndarray,
                            ghat0_res: dict[MultiIndex, float],
                            N: int = DEFAULT_TRUNCATION
                            ) -> dict[MultiIndex, float]:
    """Resonant degree-2 source coefficients of the doubled-rate
    transport equation, assembled from the transported-phase route:
    second/third derivatives of phi1, fourth derivatives of phi+, and
    the local trapped-trajectory data (ghat1, resonant ghat0)."""
    n = model.n
    l1 = spec.lambdas[0]
    phi = eikonal_taylor(model, spec, max(N + 1, 5))
    p1 = phi1_taylor(model, spec, g1_minus, N=max(N, 4), phi=phi)
    grad_p1_0 = np.array([p1.derivative_at_zero(tuple(np.eye(n, dtype=int)[j]))
                          for j in range(n)])

    def dgrad_p1(alpha: MultiIndex) -> np.ndarray:
        out = np.zeros(n)
        for j in range(n):
            g = list(alpha)
            g[j] += 1
            out[j] = p1.derivative_at_zero(tuple(g))
        return out

    res_cols = spec.I1(2 * l1)
    # e^{-2 l1 t} profile linear coefficients on the resonant directions
    c0_res: dict[MultiIndex, float] = {}
    for beta in res_cols:
        j = int(np.argmax(beta))
        c0_res[beta] = (-4.0 * l1 * float(ghat0_res[beta])
                        + 2.0 * float(ghat1[j])
                        - float(np.dot(dgrad_p1(beta), g1_minus)))
    out: dict[MultiIndex, float] = {}
    for alpha in spec.I2(l1):
        val = -np.dot(dgrad_p1(alpha), grad_p1_0) / factorial_mi(alpha)
        for beta in spec.I1(l1):
            gamma = tuple(a - b for a, b in zip(alpha, beta))
            if any(g < 0 for g in gamma) or sum(gamma) != 1:
                continue
            if gamma not in spec.I1(l1):
                continue
            val -= 0.5 * float(np.dot(dgrad_p1(beta), dgrad_p1(gamma)))
        for beta in res_cols:
            g = tuple(a + b for a, b in zip(alpha, beta))
            val -= (phi.derivative_at_zero(g) / factorial_mi(alpha)) * c0_res[beta]
        for j in range(n):
            beta = tuple(np.eye(n, dtype=int)[j])
            if beta in res_cols:
                continue
            g = tuple(a + b for a, b in zip(alpha, beta))
            val -= (phi.derivative_at_zero(g) / factorial_mi(alpha)) \
                * float(np.dot(grad_p1_0, dgrad_p1(beta))) \
                / (2.0 * l1 - spec.lambdas[j])
        out[alpha] = val
    return out


def c1_resonant_closed_form(model: PotentialModel, spec: BarrierSpectrum,
                            g1_minus: np.ndarray,
                            ghat0_res: dict[MultiIndex, float]
                            ) -> dict[MultiIndex, float]:
    """Same resonant source coefficients written directly in derivatives
    of V and the trapped-trajectory data (independent route, used as a
    double-entry check against c1_resonant_ingredients)."""
    n = model.n
    l1 = spec.lambdas[0]
    lams = spec.lambdas
    d3 = model.derivative_tensor(3)
    d4 = model.derivative_tensor(4)
    I2l1 = spec.I2(l1)
    res_cols = spec.I1(2 * l1)
    res_dirs = {int(np.argmax(b)) for b in res_cols}

    def pw(v, alpha):
        return float(np.prod(np.asarray(v) ** np.array(alpha)))

    out: dict[MultiIndex, float] = {}
    for alpha in I2l1:
        val = 0.0
        for gamma in res_cols:
            g = tuple(a + b for a, b in zip(alpha, gamma))
            val -= (d3[g] / factorial_mi(alpha)) * float(ghat0_res[gamma])
        for beta in I2l1:
            brace = 0.0
            for j in range(n):
                if j in res_dirs:
                    continue
                lg = lams[j]
                ga = list(alpha)
                ga[j] += 1
                gb = list(beta)
                gb[j] += 1
                brace += (8.0 * l1**2
                          / ((2 * l1 - lg) * lg * (2 * l1 + lg) ** 2)) \
                    * d3[tuple(ga)] * d3[tuple(gb)]
            for j in res_dirs:
                ga = list(alpha)
                ga[j] += 1
                gb = list(beta)
                gb[j] += 1
                brace += d3[tuple(ga)] * d3[tuple(gb)] / (4.0 * l1**2)
            ab = tuple(a + b for a, b in zip(alpha, beta))
            brace -= d4[ab]
            pair = 0.0
            for gamma in multi_indices(n, 2):
                delta = tuple(a - g for a, g in zip(ab, gamma))
                if any(d < 0 for d in delta):
                    continue
                for j in range(n):
                    gg = list(gamma)
                    gg[j] += 1
                    dd = list(delta)
                    dd[j] += 1
                    pair += (d3[tuple(gg)] / factorial_mi(gamma)) \
                        * (d3[tuple(dd)] / factorial_mi(delta)) / lams[j]**2
            brace -= 0.5 * factorial_mi(ab) * pair
            for j in range(n):
                ga = list(alpha)
                ga[j] += 1
                gb = list(beta)
                gb[j] += 1
                brace += 4.0 * l1**2 / (lams[j]**2 * (2 * l1 + lams[j])**2) \
                    * d3[tuple(ga)] * d3[tuple(gb)]
            val += (pw(g1_minus, beta) / factorial_mi(beta)) \
                * brace / factorial_mi(alpha)
        out[alpha] = val
    return out


# ----------------------------------------------------------------------
@dataclass
class CouplingData:
    """Classification of the trapped-pair coupling.

    case: 'a' (some rate below the doubled bottom rate couples the two
    trapped trajectories), 'b' (all such couplings vanish but the
    quadratic coefficient does not), or 'c' (cubic coefficient rules).
    k is the 1-based rate index of the first coupling in case 'a'.
    """

    case: str
    k: int | None
    inner_products: tuple[float, ...]
    m2: float | None = None
    m1: float | None = None


def classify_case(spec: BarrierSpectrum,
                  g_minus: dict[int, np.ndarray],
                  g_plus: dict[int, np.ndarray],
                  m2: float | None = None, m1: float | None = None,
                  tol: float = 1e-9) -> CouplingData:
    """Decide which leading singular-amplitude formula applies.

    g_minus/g_plus map the rate index j (1-based, below jhat) to the
    leading expansion coefficient vectors of the two trapped
    trajectories. Couplings are <g_j^- , g_j^+> with a relative floor.
    """
    inner = []
    for j in range(1, spec.jhat):
        gm = np.asarray(g_minus[j], dtype=float)
        gp = np.asarray(g_plus[j], dtype=float)
        inner.append(float(np.dot(gm, gp)))
        scale = max(np.linalg.norm(gm) * np.linalg.norm(gp), SERIES_FLOOR)
        if abs(inner[-1]) > tol * scale:
            return CouplingData(case="a", k=j, inner_products=tuple(inner),
                                m2=m2, m1=m1)
    if m2 is not None and abs(m2) > tol:
        return CouplingData(case="b", k=None, inner_products=tuple(inner),
                            m2=m2, m1=m1)
    if m1 is not None and abs(m1) > tol:
        return CouplingData(case="c", k=None, inner_products=tuple(inner),
                            m2=m2, m1=m1)
    raise ValueError("all leading couplings vanish; no shipped formula applies")
