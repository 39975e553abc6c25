"""Barrier potentials with a non-degenerate maximum at the origin.

Every model exposes fast closed-form evaluation/gradient for trajectory
integration, exact partial derivatives at the origin for the series
machinery, and the rate data derived from the Hessian at the top.

All models are stored in the coordinate frame that diagonalizes the
Hessian at the origin; the rotation applied at construction is kept on
the model. Rates are sorted in increasing order.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import sympy as sp

MultiIndex = tuple[int, ...]

# models are analytic near 0; derivative cache is capped here
MAX_DERIVATIVE_ORDER = 8

# relative tolerance for deciding two rates are equal
RATE_EQ_RTOL = 1e-12

KINDS = (
    "quadratic-local",
    "gaussian",
    "anisotropic-gaussian",
    "gaussian-plus-cubic",
    "user-tabulated-derivatives",
)


def multi_indices(n: int, order: int) -> list[MultiIndex]:
    """All multi-indices alpha in N^n with |alpha| == order."""
    if n == 1:
        return [(order,)]
    out = []
    for head in range(order + 1):
        for tail in multi_indices(n - 1, order - head):
            out.append((head,) + tail)
    return out


def factorial_mi(alpha: MultiIndex) -> float:
    out = 1.0
    for a in alpha:
        out *= math.factorial(a)
    return out


def _rotate_cubic(coeffs: dict[MultiIndex, float], rot: np.ndarray) -> dict[MultiIndex, float]:
    """Rewrite sum c_alpha x^alpha (|alpha|=3) in coordinates x = R y."""
    n = rot.shape[0]
    out: dict[MultiIndex, float] = {}
    for alpha, c in coeffs.items():
        # expand the product of |alpha| linear forms (R y)_i
        factors = []
        for i, a in enumerate(alpha):
            factors.extend([rot[i]] * a)
        for combo in itertools.product(range(n), repeat=len(factors)):
            coef = c
            for f, j in zip(factors, combo):
                coef *= f[j]
            beta = [0] * n
            for j in combo:
                beta[j] += 1
            beta_t = tuple(beta)
            out[beta_t] = out.get(beta_t, 0.0) + coef
    return {a: c for a, c in out.items() if abs(c) > 0.0}


@dataclass
class PotentialModel:
    """Smooth decaying potential with V(0) = E0 > 0 and negative definite
    Hessian at the origin.

    Parameters are interpreted per `kind`:

    - "quadratic-local":  V = E0 - sum lambda_j^2 x_j^2 / 2  (no decay;
      meant for local/series work and exact-dynamics oracles); the rate
      vector (lambda_1, ..., lambda_n) is passed in `q`.
    - "gaussian":  V = E0 exp(-|x|^2 q / 2), scalar q > 0.
    - "anisotropic-gaussian":  V = E0 exp(-x.Q x / 2), Q sym. pos. def.
    - "gaussian-plus-cubic":  anisotropic gaussian plus
      (sum_{|alpha|=3} c_alpha x^alpha) exp(-|x|^2 / 2).
    - "user-tabulated-derivatives": derivatives at 0 given directly
      (series-only; eval/gradient work on a truncated Taylor polynomial).
    """

    kind: str
    n: int
    E0: float = 0.5
    Q: np.ndarray | None = None
    q: float = 1.0
    cubic: dict[MultiIndex, float] = field(default_factory=dict)
    derivs: dict[MultiIndex, float] = field(default_factory=dict)
    rotation: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown potential kind: {self.kind!r}")
        if self.kind != "user-tabulated-derivatives" and self.E0 <= 0:
            raise ValueError("barrier height E0 must be positive")
        self.rotation = np.eye(self.n)
        if self.kind == "gaussian":
            if self.Q is not None:
                raise ValueError("the isotropic 'gaussian' kind takes the "
                                 "scalar q; pass Q to 'anisotropic-gaussian'")
            self.Q = self.q * np.eye(self.n)
        if self.kind in ("anisotropic-gaussian", "gaussian-plus-cubic"):
            Q = np.asarray(self.Q, dtype=float)
            if Q.shape != (self.n, self.n) or not np.allclose(Q, Q.T, atol=1e-13):
                raise ValueError("Q must be a symmetric (n, n) matrix")
            w, R = np.linalg.eigh(Q)
            if np.any(w <= 0):
                raise ValueError("Q must be positive definite")
            # ascending eigenvalues give ascending rates; rotate once here
            if not np.allclose(Q, np.diag(np.diag(Q)), atol=1e-14):
                self.rotation = R
                self.Q = np.diag(w)
                if self.cubic:
                    self.cubic = _rotate_cubic(self.cubic, R)
            else:
                order = np.argsort(np.diag(Q), kind="stable")
                if not np.array_equal(order, np.arange(self.n)):
                    P = np.eye(self.n)[:, order]
                    self.rotation = P
                    self.Q = np.diag(np.diag(Q)[order])
                    if self.cubic:
                        self.cubic = _rotate_cubic(self.cubic, P)
        if self.kind == "gaussian-plus-cubic":
            for alpha in self.cubic:
                if len(alpha) != self.n or sum(alpha) != 3:
                    raise ValueError("cubic coefficients must have |alpha| = 3")
        if self.kind == "user-tabulated-derivatives":
            self.derivs = {tuple(a): float(c) for a, c in self.derivs.items()}
            zero = (0,) * self.n
            self.E0 = self.derivs.get(zero, self.E0)
        self._deriv_cache: dict[int, dict[MultiIndex, float]] = {}
        self._check_barrier()

    # ------------------------------------------------------------------
    def _check_barrier(self):
        g = self.gradient(np.zeros(self.n))
        if np.max(np.abs(g)) > 1e-12:
            raise ValueError("origin is not a critical point")
        H = self.hessian0()
        w = np.linalg.eigvalsh(H)
        if np.any(w >= 0):
            raise ValueError("Hessian at the origin must be negative definite")

    def hessian0(self) -> np.ndarray:
        """Hessian of V at the origin (diagonal in the model frame)."""
        if self.kind == "quadratic-local":
            return -np.diag(np.asarray(self.q, dtype=float) ** 2)
        if self.kind in ("gaussian", "anisotropic-gaussian", "gaussian-plus-cubic"):
            return -self.E0 * np.asarray(self.Q)
        H = np.zeros((self.n, self.n))
        for i in range(self.n):
            for j in range(self.n):
                alpha = [0] * self.n
                alpha[i] += 1
                alpha[j] += 1
                H[i, j] = self.derivs.get(tuple(alpha), 0.0)
        return H

    # ------------------------------------------------------------------
    def eval(self, x: np.ndarray) -> float | np.ndarray:
        """V(x); accepts shape (n,) or (..., n)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "quadratic-local":
            lam2 = np.asarray(self.q, dtype=float) ** 2
            return self.E0 - 0.5 * np.sum(lam2 * x**2, axis=-1)
        if self.kind in ("gaussian", "anisotropic-gaussian", "gaussian-plus-cubic"):
            qd = np.diag(self.Q)
            val = self.E0 * np.exp(-0.5 * np.sum(qd * x**2, axis=-1))
            if self.kind == "gaussian-plus-cubic" and self.cubic:
                cub = np.zeros(np.shape(val))
                for alpha, c in self.cubic.items():
                    cub = cub + c * np.prod(x ** np.array(alpha), axis=-1)
                val = val + cub * np.exp(-0.5 * np.sum(x**2, axis=-1))
            return val
        # tabulated: truncated Taylor polynomial
    # (series work only; not meant for far-field trajectories)
        val = np.zeros(np.shape(x)[:-1])
        for alpha, c in self.derivs.items():
            val = val + (c / factorial_mi(alpha)) * np.prod(x ** np.array(alpha), axis=-1)
        return val

    def gradient(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "quadratic-local":
            lam2 = np.asarray(self.q, dtype=float) ** 2
            return -lam2 * x
        if self.kind in ("gaussian", "anisotropic-gaussian", "gaussian-plus-cubic"):
            qd = np.diag(self.Q)
            gauss = self.E0 * np.exp(-0.5 * np.sum(qd * x**2, axis=-1))
            grad = -qd * x * np.expand_dims(gauss, -1)
            if self.kind == "gaussian-plus-cubic" and self.cubic:
                env = np.exp(-0.5 * np.sum(x**2, axis=-1))
                cub = np.zeros(np.shape(env))
                dcub = np.zeros(np.shape(x))
                for alpha, c in self.cubic.items():
                    mono = c * np.prod(x ** np.array(alpha), axis=-1)
                    cub = cub + mono
                    for i, a in enumerate(alpha):
                        if a == 0:
                            continue
                        beta = list(alpha)
                        beta[i] -= 1
                        dcub[..., i] += c * a * np.prod(x ** np.array(beta), axis=-1)
                grad = grad + np.expand_dims(env, -1) * (
                    dcub - x * np.expand_dims(cub, -1)
                )
            return grad
        grad = np.zeros_like(x)
        for alpha, c in self.derivs.items():
            for i, a in enumerate(alpha):
                if a == 0:
                    continue
                beta = list(alpha)
                beta[i] -= 1
                grad[..., i] += (c / factorial_mi(alpha)) * a * np.prod(
                    x ** np.array(beta), axis=-1
                )
        return grad

    # ------------------------------------------------------------------
    def _sympy_expr(self):
        xs = sp.symbols(f"x0:{self.n}", real=True)
        if self.kind == "quadratic-local":
            lam2 = np.atleast_1d(np.asarray(self.q, dtype=float)) ** 2
            expr = sp.Float(self.E0) - sum(
                sp.Rational(1, 2) * float(l2) * xi**2 for l2, xi in zip(lam2, xs)
            )
            return xs, expr
        if self.kind in ("gaussian", "anisotropic-gaussian", "gaussian-plus-cubic"):
            qd = np.diag(self.Q)
            expr = sp.Float(self.E0) * sp.exp(
                -sum(float(qj) * xi**2 for qj, xi in zip(qd, xs)) / 2
            )
            if self.kind == "gaussian-plus-cubic" and self.cubic:
                cub = sum(
                    float(c) * sp.prod([xi**a for xi, a in zip(xs, alpha)])
                    for alpha, c in self.cubic.items()
                )
                expr = expr + cub * sp.exp(-sum(xi**2 for xi in xs) / 2)
            return xs, expr
        raise RuntimeError("tabulated models have no closed form")

    def derivative_tensor(self, order: int) -> dict[MultiIndex, float]:
        """Partial derivatives of V at 0: alpha -> d^alpha V(0), |alpha|=order.

        These are plain derivatives, not Taylor coefficients.
        """
        if order < 0 or order > MAX_DERIVATIVE_ORDER:
            raise ValueError(f"order must be in [0, {MAX_DERIVATIVE_ORDER}]")
        if order in self._deriv_cache:
            return dict(self._deriv_cache[order])
        if self.kind == "user-tabulated-derivatives":
            out = {a: c for a, c in self.derivs.items() if sum(a) == order}
            for alpha in multi_indices(self.n, order):
                out.setdefault(alpha, 0.0)
        elif self.kind == "quadratic-local":
            out = {alpha: 0.0 for alpha in multi_indices(self.n, order)}
            if order == 0:
                out[(0,) * self.n] = self.E0
            elif order == 2:
                lam2 = np.atleast_1d(np.asarray(self.q, dtype=float)) ** 2
                for i in range(self.n):
                    alpha = [0] * self.n
                    alpha[i] = 2
                    out[tuple(alpha)] = -float(lam2[i])
        else:
            xs, expr = self._sympy_expr()
            zero = {xi: 0 for xi in xs}
            out = {}
            for alpha in multi_indices(self.n, order):
                d = expr
                for xi, a in zip(xs, alpha):
                    if a:
                        d = sp.diff(d, xi, a)
                out[alpha] = float(d.subs(zero))
        self._deriv_cache[order] = dict(out)
        return out

    def taylor_coefficients(self, max_order: int) -> dict[MultiIndex, float]:
        """Taylor coefficients d^alpha V(0)/alpha! for |alpha| <= max_order."""
        out = {}
        for m in range(max_order + 1):
            for alpha, c in self.derivative_tensor(m).items():
                out[alpha] = c / factorial_mi(alpha)
        return out

    def scaled(self, factor: float) -> "PotentialModel":
        """Model whose potential is factor * V (barrier top scales too)."""
        if self.kind == "quadratic-local":
            raise ValueError("scaling a quadratic-local model is not supported")
        if self.kind == "user-tabulated-derivatives":
            return PotentialModel(
                kind=self.kind, n=self.n,
                derivs={a: factor * c for a, c in self.derivs.items()},
            )
        cubic = {a: factor * c for a, c in self.cubic.items()}
        if self.kind == "gaussian":
            return PotentialModel(kind=self.kind, n=self.n,
                                  E0=factor * self.E0, q=self.q)
        return PotentialModel(
            kind=self.kind, n=self.n, E0=factor * self.E0,
            Q=np.array(self.Q), q=self.q, cubic=cubic,
        )


# ----------------------------------------------------------------------
@dataclass(frozen=True)
class BarrierSpectrum:
    """Rate data at the barrier top.

    lambdas: increasing rates lambda_j (lambda_j^2 = eigenvalues of -Hess V(0))
    mu_seq:  increasing sequence of all nonzero N-combinations of the rates
    jhat:    1-based index with mu_jhat == 2 * lambda_1
    muhat_seq: nonneg. N-combinations of {lambda_k} and {lambda_k - lambda_1}
    """

    lambdas: tuple[float, ...]
    E0: float
    mu_seq: tuple[float, ...]
    jhat: int
    muhat_seq: tuple[float, ...]

    @property
    def n(self) -> int:
        return len(self.lambdas)

    def rate_equal(self, a: float, b: float) -> bool:
        scale = max(abs(a), abs(b), self.lambdas[0])
        return abs(a - b) <= RATE_EQ_RTOL * scale

    def index_set(self, m: int, mu: float) -> list[MultiIndex]:
        """Multi-indices beta = 1_{k_1} + ... + 1_{k_m} with every
        lambda_{k_i} equal to mu (so beta is supported on the rate-mu
        eigenspace and |beta| = m)."""
        n = self.n
        which = [j for j in range(n) if self.rate_equal(self.lambdas[j], mu)]
        out = []
        for combo in itertools.combinations_with_replacement(which, m):
            beta = [0] * n
            for j in combo:
                beta[j] += 1
            out.append(tuple(beta))
        return out

    def I1(self, mu: float | None = None) -> list[MultiIndex]:
        """|beta| = 1; without mu this is all of {1_1, ..., 1_n}."""
        if mu is None:
            out = []
            for j in range(self.n):
                beta = [0] * self.n
                beta[j] = 1
                out.append(tuple(beta))
            return out
        return self.index_set(1, mu)

    def I2(self, mu: float | None = None) -> list[MultiIndex]:
        if mu is None:
            return multi_indices(self.n, 2)
        return self.index_set(2, mu)

    def n1(self, mu: float) -> int:
        return len(self.index_set(1, mu))

    def n2(self, mu: float) -> int:
        n1 = self.n1(mu)
        assert len(self.index_set(2, mu)) == n1 * (n1 + 1) // 2
        return n1 * (n1 + 1) // 2

    def lam_dot(self, alpha: MultiIndex) -> float:
        return float(sum(l * a for l, a in zip(self.lambdas, alpha)))


def _combination_ladder(rates: list[float], count: int, include_zero: bool,
                        rtol: float) -> list[float]:
    """First `count` distinct values of sum_j m_j r_j, m_j in N (not all 0
    unless include_zero), in increasing order. Rates must be positive...
    except that a zero rate (lambda_1 - lambda_1) only contributes the
    zero value itself."""
    pos = sorted(r for r in rates if r > rtol)
    out: list[float] = [0.0] if (include_zero or not pos) else []
    if pos:
        cap = (count + 2) * pos[-1]
        heap: list[float] = []
        for r in pos:
            heapq.heappush(heap, r)
        while len(out) < count and heap:
            v = heapq.heappop(heap)
            if any(abs(v - s) <= rtol * max(v, s, 1.0) for s in out[-4:]):
                continue
            out.append(v)
            for r in pos:
                if v + r <= cap:
                    heapq.heappush(heap, v + r)
    return out[:count]


def barrier_spectrum(model: PotentialModel, count: int = 12) -> BarrierSpectrum:
    """Rates and combination ladders at the barrier top."""
    H = model.hessian0()
    w = np.linalg.eigvalsh(-H)
    if np.any(w <= 0):
        raise ValueError("Hessian at the origin must be negative definite")
    lambdas = tuple(float(v) for v in np.sort(np.sqrt(w)))
    rtol = RATE_EQ_RTOL
    mu_seq = _combination_ladder(list(lambdas), count, include_zero=False, rtol=rtol)
    l1 = lambdas[0]
    jhat = None
    for i, mu in enumerate(mu_seq):
        if abs(mu - 2 * l1) <= rtol * 2 * l1:
            jhat = i + 1
            break
    if jhat is None:
        raise RuntimeError("combination ladder too short to contain 2*lambda_1")
    muhat_rates = list(lambdas) + [l - l1 for l in lambdas]
    muhat_seq = _combination_ladder(muhat_rates, count, include_zero=True, rtol=rtol)
    return BarrierSpectrum(
        lambdas=lambdas, E0=float(model.E0),
        mu_seq=tuple(mu_seq), jhat=jhat, muhat_seq=tuple(muhat_seq),
    )


def index_sets(spec: BarrierSpectrum, m: int, mu: float) -> list[MultiIndex]:
    """Module-level alias for BarrierSpectrum.index_set."""
    return spec.index_set(m, mu)
