"""Classical scattering data at fixed energy.

Trajectories are launched from a far incoming asymptote
x(t) ~ sqrt(2E) omega t + z (z in the hyperplane orthogonal to omega),
integrated through the interaction region, and read off on the outgoing
asymptote. The module produces the asymptotic momentum map, its angular
density, renormalized actions, and the focal-point count entering the
regular amplitude phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq, root

from .dynamics import (DEFAULT_ATOL, DEFAULT_RTOL, PhasePoint, Trajectory,
                       _hessian_func, _rhs, hamiltonian)
from .potential import PotentialModel

DEFAULT_LAUNCH_RADIUS = 20.0
ESCAPE_FACTOR = 10.0  # escape radius = factor * launch radius
DEFAULT_T_MAX = 200.0
LAUNCH_POTENTIAL_TOL = 1e-8


@dataclass
class ScatteringData:
    """One scattering trajectory at energy E in direction pair (omega, theta)."""

    omega: np.ndarray
    z: np.ndarray          # impact parameter, coordinates in perp_basis(omega)
    E: float
    theta: np.ndarray      # outgoing direction xi_inf / |xi_inf|
    xi_inf: np.ndarray
    S_inf: float | None = None
    nu_inf: int | None = None
    sigma_hat: float | None = None
    extra: dict = field(default_factory=dict)


def perp_basis(omega: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of omega^perp, shape (n, n-1)."""
    omega = np.asarray(omega, dtype=float)
    n = omega.size
    M = np.column_stack([omega] + [np.eye(n)[:, j] for j in range(n)])
    Q, _ = np.linalg.qr(M)
    B = Q[:, 1:n]
    # fix signs for determinism
    for j in range(B.shape[1]):
        i = int(np.argmax(np.abs(B[:, j])))
        if B[i, j] < 0:
            B[:, j] = -B[:, j]
    return B


def incoming_initialize(model: PotentialModel, omega: np.ndarray,
                        z: np.ndarray, E: float,
                        R: float = DEFAULT_LAUNCH_RADIUS
                        ) -> tuple[PhasePoint, float]:
    """Launch state on the incoming asymptote at distance ~R.

    Returns (point, t0) with t0 = -R / sqrt(2E); the momentum is scaled
    onto the energy shell at the launch point, which matches the free
    asymptote to first order in the (tiny) launch-point potential.
    """
    omega = np.asarray(omega, dtype=float)
    omega = omega / np.linalg.norm(omega)
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.size == model.n - 1:
        z = perp_basis(omega) @ z
    if abs(float(np.dot(z, omega))) > 1e-12:
        raise ValueError("impact parameter must be orthogonal to omega")
    v = math.sqrt(2.0 * E)
    t0 = -R / v
    x0 = v * omega * t0 + z
    V0 = float(model.eval(x0))
    if abs(V0) > LAUNCH_POTENTIAL_TOL * E:
        raise ValueError(
            "launch radius too small: |V| at the launch point is "
            f"{abs(V0):.3e}, not negligible against E={E}")
    kin = 2.0 * (E - V0)
    xi0 = math.sqrt(kin) * omega
    return PhasePoint(x0, xi0), t0


def shoot(model: PotentialModel, omega: np.ndarray, z: np.ndarray, E: float,
          R: float = DEFAULT_LAUNCH_RADIUS, t_max: float = DEFAULT_T_MAX,
          rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
          dense: bool = False) -> Trajectory:
    """Integrate one scattering trajectory until escape or t_max.

    meta['outcome'] is 'escaped' or 'trapped'; escape means
    |x| > ESCAPE_FACTOR * R with x . xi > 0.
    """
    start, t0 = incoming_initialize(model, omega, z, E, R)
    n = model.n
    R_esc = ESCAPE_FACTOR * R

    def escape(t, y):
        return float(np.linalg.norm(y[:n]) - R_esc)

    escape.terminal = True
    escape.direction = 1.0
    t_eval = None
    if dense:
        t_eval = np.linspace(t0, t0 + t_max, 2001)
    sol = solve_ivp(_rhs(model), (t0, t0 + t_max), start.as_state(),
                    method="DOP853", rtol=rtol, atol=atol,
                    t_eval=t_eval, events=escape)
    if not sol.success and sol.status != 1:
        raise RuntimeError(f"integration failed: {sol.message}")
    states = sol.y.T
    times = sol.t
    outcome = "trapped"
    if sol.status == 1:
        outcome = "escaped"
        times = np.append(times, sol.t_events[0][0])
        states = np.vstack([states, sol.y_events[0][0]])
    traj = Trajectory(times=times, states=states,
                      energy=hamiltonian(model, start.as_state()),
                      meta={"outcome": outcome, "t0": t0, "omega": omega,
                            "z": np.atleast_1d(z), "R": R})
    return traj


def asymptotic_momentum(model: PotentialModel, omega: np.ndarray,
                        z: np.ndarray, E: float,
                        R: float = DEFAULT_LAUNCH_RADIUS,
                        t_max: float = DEFAULT_T_MAX) -> np.ndarray | None:
    """xi_inf on the energy shell, or None when the trajectory is trapped."""
    traj = shoot(model, omega, z, E, R=R, t_max=t_max)
    if traj.meta["outcome"] != "escaped":
        return None
    xi = traj.xi(-1)
    return math.sqrt(2.0 * E) * xi / np.linalg.norm(xi)


def angular_density(model: PotentialModel, omega: np.ndarray, z: np.ndarray,
                    E: float, step: float = 1e-5,
                    R: float = DEFAULT_LAUNCH_RADIUS) -> float:
    """|det d theta(z) / d z|^{-1}: density of impact parameters per unit
    solid angle of the outgoing direction, by central differences.

    Uses coordinates of theta in perp_basis(theta_center), which is a
    chart of the sphere with unit metric distortion at the center.
    """
    omega = np.asarray(omega, dtype=float) / np.linalg.norm(np.asarray(omega, float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    n = model.n
    if n == 1:
        raise ValueError("angular density needs n >= 2")
    B = perp_basis(omega)

    def theta_of(zc: np.ndarray) -> np.ndarray:
        xi = asymptotic_momentum(model, omega, B @ zc, E, R=R)
        if xi is None:
            raise RuntimeError("trajectory is trapped; no angular density")
        return xi / np.linalg.norm(xi)

    zc = z if z.size == n - 1 else B.T @ z
    th0 = theta_of(zc)
    Bt = perp_basis(th0)
    D = np.zeros((n - 1, n - 1))
    for j in range(n - 1):
        dz = np.zeros(n - 1)
        dz[j] = step
        tp = theta_of(zc + dz)
        tm = theta_of(zc - dz)
        D[:, j] = Bt.T @ (tp - tm) / (2 * step)
    det = abs(np.linalg.det(D))
    if det < 1e-300:
        raise RuntimeError("degenerate direction map (focal configuration)")
    return 1.0 / det


def find_regular_trajectories(model: PotentialModel, omega: np.ndarray,
                              theta: np.ndarray, E: float,
                              z_extent: float = 6.0, grid: int = 61,
                              R: float = DEFAULT_LAUNCH_RADIUS,
                              tol: float = 1e-10) -> list[ScatteringData]:
    """All impact parameters (within the scan box) scattering omega -> theta.

    Scans a grid in omega^perp coordinates, refines sign changes /
    near-zeros of the transverse deflection residual with a root solve,
    and deduplicates. Trapped grid points are skipped: trajectories whose
    outgoing direction equals theta only in the infinite-time trapped
    limit are singular, not regular, and are handled by the
    trapped-manifold machinery.
    """
    omega = np.asarray(omega, dtype=float) / np.linalg.norm(np.asarray(omega, float))
    theta = np.asarray(theta, dtype=float) / np.linalg.norm(np.asarray(theta, float))
    n = model.n
    if n == 1:
        raise ValueError("regular-trajectory search needs n >= 2")
    B = perp_basis(omega)
    Bt = perp_basis(theta)
    v = math.sqrt(2.0 * E)

    def residual(zc: np.ndarray) -> np.ndarray | None:
        xi = asymptotic_momentum(model, omega, B @ np.atleast_1d(zc), E, R=R)
        if xi is None:
            return None
        u = xi / np.linalg.norm(xi)
        if np.dot(u, theta) < -0.99999:
            # antipodal chart breakdown; replace by a large residual
            return Bt.T @ u + 10.0
        # theta itself has coordinates 0 in this chart
        return Bt.T @ u

    sols: list[np.ndarray] = []
    if n == 2:
        us = np.linspace(-z_extent, z_extent, grid)
        vals = []
        for u in us:
            r = residual(np.array([u]))
            vals.append(np.nan if r is None else float(r[0]))
        vals = np.array(vals)
        for i in range(grid - 1):
            a, b = vals[i], vals[i + 1]
            if np.isnan(a) or np.isnan(b):
                continue
            if a == 0.0:
                sols.append(np.array([us[i]]))
            elif a * b < 0:
                f = lambda u: float(residual(np.array([u]))[0])
                sols.append(np.array([brentq(f, us[i], us[i + 1], xtol=tol)]))
    else:
        axes = [np.linspace(-z_extent, z_extent, grid)] * (n - 1)
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        res_norms = []
        for p in pts:
            r = residual(p)
            res_norms.append(np.inf if r is None else float(np.linalg.norm(r)))
        res_norms = np.array(res_norms)
        order = np.argsort(res_norms)
        for idx in order[: min(8, len(order))]:
            if not np.isfinite(res_norms[idx]):
                continue
            sol = root(lambda p: residual(p), pts[idx], method="hybr",
                       options={"xtol": tol})
            if sol.success and np.linalg.norm(residual(sol.x)) < 1e-7:
                sols.append(np.asarray(sol.x))
    # deduplicate
    uniq: list[np.ndarray] = []
    for s in sols:
        if all(np.linalg.norm(s - u) > 1e-6 * max(1.0, z_extent) for u in uniq):
            uniq.append(s)
    out = []
    for zc in sorted(uniq, key=lambda s: tuple(s)):
        xi = asymptotic_momentum(model, omega, B @ zc, E, R=R)
        out.append(ScatteringData(omega=omega, z=zc, E=E,
                                  theta=xi / np.linalg.norm(xi), xi_inf=xi))
    return out


def action_regular(model: PotentialModel, omega: np.ndarray, z: np.ndarray,
                   E: float, R: float = DEFAULT_LAUNCH_RADIUS) -> float:
    """Renormalized action int (|xi|^2 - 2E) dt, with the divergent free
    part removed by straight-line tails on both asymptotes."""
    omega = np.asarray(omega, dtype=float) / np.linalg.norm(np.asarray(omega, float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.size == model.n - 1:
        z = perp_basis(omega) @ z
    start, t0 = incoming_initialize(model, omega, z, E, R)
    n = model.n
    v = math.sqrt(2.0 * E)
    R_esc = ESCAPE_FACTOR * R

    def f(t, y):
        dy = np.empty(2 * n + 1)
        dy[:n] = y[n: 2 * n]
        dy[n: 2 * n] = -model.gradient(y[:n])
        dy[2 * n] = float(np.dot(y[n: 2 * n], y[n: 2 * n])) - 2.0 * E
        return dy

    def escape(t, y):
        return float(np.linalg.norm(y[:n]) - R_esc)

    escape.terminal = True
    escape.direction = 1.0
    y0 = np.concatenate([start.as_state(), [0.0]])
    sol = solve_ivp(f, (t0, t0 + DEFAULT_T_MAX), y0, method="DOP853",
                    rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL, events=escape)
    if sol.status != 1:
        raise RuntimeError("trajectory did not escape; no regular action")
    y_end = sol.y_events[0][0]
    core = float(y_end[2 * n])
    # incoming tail: along x = v omega t + z, |xi|^2 - 2E = -2V to leading
    # order in V (energy-shell correction is O(V^2/E), below tolerance
    # thanks to the launch-point potential bound)
    tail_in = quad(lambda t: -2.0 * model.eval(v * omega * t + z),
                   -np.inf, t0, epsabs=1e-14, epsrel=1e-12)[0]
    x_end, xi_end = y_end[:n], y_end[n: 2 * n]
    u = xi_end / np.linalg.norm(xi_end)
    tail_out = quad(lambda s: -2.0 * model.eval(x_end + u * s),
                    0.0, np.inf, epsabs=1e-14, epsrel=1e-12)[0]
    return core + tail_in + tail_out


def jacobian_determinants(model: PotentialModel, omega: np.ndarray,
                          z: np.ndarray, E: float,
                          R: float = DEFAULT_LAUNCH_RADIUS,
                          samples: int = 800) -> tuple[np.ndarray, np.ndarray]:
    """det d x(t) / d(t, z) along a scattering trajectory.

    The t-column is the velocity; the z-columns come from the variational
    flow of the incoming-asymptote parametrization (impact parameter
    varying in perp_basis(omega) with the momentum kept on the energy
    shell). Returns (times, dets).
    """
    from .dynamics import variational_flow

    omega = np.asarray(omega, dtype=float) / np.linalg.norm(np.asarray(omega, float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.size == model.n - 1:
        z = perp_basis(omega) @ z
    start, t0 = incoming_initialize(model, omega, z, E, R)
    n = model.n
    B = perp_basis(omega)
    grad0 = model.gradient(start.x)
    s0 = np.linalg.norm(start.xi)
    M0 = np.zeros((2 * n, n - 1))
    for j in range(n - 1):
        M0[:n, j] = B[:, j]
        M0[n:, j] = -(np.dot(grad0, B[:, j]) / s0) * omega
    # time horizon: reach the escape radius, found by a plain shot first
    base = shoot(model, omega, z, E, R=R)
    if base.meta["outcome"] != "escaped":
        raise RuntimeError("trapped trajectory has no scattering Jacobian")
    t_end = base.times[-1]
    t_eval = np.linspace(t0, t_end, samples)
    traj = variational_flow(model, start, (t0, t_end), t_eval=t_eval, M0=M0)
    dets = np.empty(len(traj.times))
    for i in range(len(traj.times)):
        cols = [traj.states[i, n:]]
        for j in range(n - 1):
            cols.append(traj.jacobians[i][:n, j])
        dets[i] = np.linalg.det(np.column_stack(cols))
    return traj.times, dets


def count_sign_changes(values: np.ndarray, floor_frac: float = 1e-9) -> int:
    """Strict sign changes of a sampled function, ignoring |v| below
    floor_frac * max|v| (touching zero without crossing does not count)."""
    values = np.asarray(values, dtype=float)
    floor = floor_frac * float(np.max(np.abs(values)))
    signs = [float(np.sign(v)) for v in values if abs(v) > floor]
    count = 0
    for a, b in zip(signs, signs[1:]):
        if a * b < 0:
            count += 1
    return count


def maslov_index(model_or_dets, omega=None, z=None, E=None,
                 R: float = DEFAULT_LAUNCH_RADIUS) -> int:
    """Focal-point count: sign changes of det d x / d(t, z).

    Call either with (model, omega, z, E) to integrate the trajectory, or
    with a precomputed array of determinant samples.
    """
    if isinstance(model_or_dets, PotentialModel):
        _, dets = jacobian_determinants(model_or_dets, omega, z, E, R=R)
    else:
        dets = np.asarray(model_or_dets, dtype=float)
    return count_sign_changes(dets)
