"""Trapped trajectories at the barrier-top energy and their asymptotic
expansion data.

An incoming trajectory at energy E0 is trapped when it converges to the
fixed point instead of escaping. This module locates the trapped impact
parameter, extracts the expansion coefficients
x(t) ~ sum_j sum_m g_{j,m} t^m e^{-mu_j t}, and computes the
renormalized action, the weighted Jacobian limit, and the focal count
that enter the singular amplitude. Outgoing trapped data come from the
time-reversed problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, solve_ivp

from .dynamics import _rhs, variational_flow
from .potential import BarrierSpectrum, PotentialModel
from .scatter import (DEFAULT_LAUNCH_RADIUS, count_sign_changes,
                      incoming_initialize, perp_basis)

CORE_RADIUS = 1.0          # where the exit-side indicator is read
# trapped trajectories are fitted down to |x| ~ 1e-7; the integrator has
# to be tighter than the generic default for the coefficients to converge
TRAP_RTOL = 1e-13
TRAP_ATOL = 1e-14
EXIT_RADIUS = 5.0          # |x| beyond this counts as escaped
FIT_WINDOW = (1e-7, 1e-2)  # |x| window for coefficient extraction
COND_LIMIT = 1e8


@dataclass
class TrappedTrajectory:
    """Expansion data of one trapped trajectory.

    side: 'incoming' (converges as t -> +inf) or 'outgoing'
    (emanates from the fixed point, converges as t -> -inf).
    g_coeffs maps (j, m) [1-based rate index, polynomial order] to the
    coefficient vector of t^m e^{-+ mu_j t}.
    """

    side: str
    direction: np.ndarray
    z_star: np.ndarray
    E: float
    g_coeffs: dict[tuple[int, int], np.ndarray]
    action: float
    D: float
    nu: int
    ll: int | None = None
    diagnostics: dict = field(default_factory=dict)


# ----------------------------------------------------------------------
def _trapped_rhs_shot(model: PotentialModel, omega: np.ndarray,
                      z: np.ndarray, E: float, R: float, t_max: float,
                      rtol: float = TRAP_RTOL, atol: float = TRAP_ATOL):
    """Integrate until escape past EXIT_RADIUS (after entering the core)
    or t_max. Returns (times, states, t0)."""
    start, t0 = incoming_initialize(model, omega, z, E, R)
    n = model.n

    def exiting(t, y):
        return float(np.linalg.norm(y[:n]) - EXIT_RADIUS)

    exiting.terminal = True
    exiting.direction = 1.0
    sol = solve_ivp(_rhs(model), (t0, t0 + t_max), start.as_state(),
                    method="DOP853", rtol=rtol, atol=atol,
                    dense_output=True, events=exiting)
    return sol, t0


def _exit_indicator(model: PotentialModel, spec: BarrierSpectrum,
                    omega: np.ndarray, z: np.ndarray, E: float,
                    R: float, t_max: float) -> tuple[float, np.ndarray | None]:
    """(time spent inside the core, unstable-mode coefficients at exit).

    The coefficients c_j = (lambda_j x_j + xi_j) / (2 lambda_j) grow like
    e^{+lambda_j t}; their sign pattern flips across the trapped impact
    parameter. None when the trajectory never leaves (numerically trapped)
    or never enters the core.
    """
    n = model.n
    sol, _ = _trapped_rhs_shot(model, omega, z, E, R, t_max)
    r = np.linalg.norm(sol.y[:n], axis=0)
    inside = r < CORE_RADIUS
    dwell = float(np.sum(np.diff(sol.t)[inside[:-1]])) if len(sol.t) > 1 else 0.0
    if not np.any(inside):
        return 0.0, None
    if sol.status != 1:
        return dwell, None
    y_exit = sol.y_events[0][0]
    lams = np.array(spec.lambdas)
    c = (lams * y_exit[:n] + y_exit[n:]) / (2.0 * lams)
    return dwell, c


def find_trapped_impact(model: PotentialModel, spec: BarrierSpectrum,
                        omega: np.ndarray, E: float | None = None,
                        extent: float = 0.8, grid: int = 33,
                        R: float = DEFAULT_LAUNCH_RADIUS,
                        t_max: float = 120.0,
                        sweeps: int = 3) -> np.ndarray:
    """Impact parameter (perp-basis coordinates) of the trapped incoming
    trajectory at energy E (default: the barrier-top energy).

    Coarse scan of the core dwell time, then per-coordinate bisection on
    the sign of the exit-mode coefficients projected onto a fixed
    reference exit direction. n = 1 has no impact parameter; the head-on
    trajectory must itself be trapped.
    """
    omega = np.asarray(omega, dtype=float)
    omega = omega / np.linalg.norm(omega)
    if E is None:
        E = spec.E0
    n = model.n
    if n == 1:
        # no impact parameter; the head-on trajectory is trapped exactly
        # when E = E0 (roundoff eventually expels it, so ask only that it
        # reaches deep into the core)
        sol, _ = _trapped_rhs_shot(model, omega, np.zeros(1), E, R, t_max)
        if float(np.min(np.abs(sol.y[0]))) > 1e-3:
            raise RuntimeError("head-on trajectory does not reach the "
                               "fixed point; not trapped")
        return np.zeros(0)

    B = perp_basis(omega)
    dim = n - 1

    def indicator(u: np.ndarray):
        return _exit_indicator(model, spec, omega, B @ u, E, R, t_max)

    # coarse scan for the best dwell time
    axes = [np.linspace(-extent, extent, grid)] * dim
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    best_u, best_dwell = None, -1.0
    cache: dict[tuple, tuple] = {}
    for p in pts:
        d, c = indicator(p)
        cache[tuple(p)] = (d, c)
        if d > best_dwell:
            best_dwell, best_u = d, p.copy()
    if best_dwell <= 0.0:
        raise RuntimeError("no trajectory in the scan box reaches the core")

    u = best_u.copy()
    h0 = (2 * extent) / (grid - 1)
    for sweep in range(sweeps):
        for k in range(dim):
            # bracket along coordinate k around the current point
            step = h0 / (4.0 ** sweep)
            lo = u.copy()
            hi = u.copy()
            lo[k] -= step
            hi[k] += step
            _, c_lo = indicator(lo)
            _, c_hi = indicator(hi)
            tries = 0
            while (c_lo is None or c_hi is None) and tries < 4:
                # an endpoint is itself (numerically) trapped; shrink
                step *= 0.3
                lo[k] = u[k] - step
                hi[k] = u[k] + step
                _, c_lo = indicator(lo)
                _, c_hi = indicator(hi)
                tries += 1
            if c_lo is None or c_hi is None:
                continue
            ref = c_lo / np.linalg.norm(c_lo)
            s_lo = 1.0
            s_hi = float(np.sign(np.dot(c_hi, ref)))
            if s_lo * s_hi > 0:
                raise RuntimeError(
                    "exit side does not flip across the dwell maximum; "
                    "widen the scan box or refine the grid")
            a, b = lo[k], hi[k]
            for _ in range(80):
                mid = 0.5 * (a + b)
                if mid == a or mid == b:
                    break
                um = u.copy()
                um[k] = mid
                _, c_m = indicator(um)
                if c_m is None:
                    # numerically trapped already; tighten from both sides
                    break
                if np.dot(c_m, ref) > 0:
                    a = mid
                else:
                    b = mid
            u[k] = 0.5 * (a + b)
    return u


# ----------------------------------------------------------------------
def trapped_shoot(model: PotentialModel, omega: np.ndarray, z_coords: np.ndarray,
                  E: float, R: float = DEFAULT_LAUNCH_RADIUS,
                  t_max: float = 120.0, samples: int = 4000):
    """Dense trapped trajectory, cut at the closest approach to the
    fixed point (beyond it the unstable contamination takes over).

    Returns (times, states, t0)."""
    omega = np.asarray(omega, dtype=float)
    omega = omega / np.linalg.norm(omega)
    n = model.n
    z = perp_basis(omega) @ z_coords if z_coords.size == n - 1 else z_coords
    sol, t0 = _trapped_rhs_shot(model, omega, z, E, R, t_max)
    ts = np.linspace(sol.t[0], sol.t[-1], samples)
    ys = sol.sol(ts).T
    r = np.linalg.norm(ys[:, :n], axis=1) + np.linalg.norm(ys[:, n:], axis=1)
    i_min = int(np.argmin(r))
    return ts[: i_min + 1], ys[: i_min + 1], t0


def extract_expandible_coeffs(times: np.ndarray, xs: np.ndarray,
                              spec: BarrierSpectrum, J: int = 3,
                              window: tuple[float, float] = FIT_WINDOW
                              ) -> tuple[dict[tuple[int, int], np.ndarray], dict]:
    """Fit x(t) ~ sum_{j<=J} g_{j,0} e^{-mu_j t} + g_{jhat,1} t e^{-mu_jhat t}
    on the window given in |x|.

    Sequential peeling (slowest rate first, constant fit of the
    rate-compensated residual on the latest part of the window) followed
    by a joint least-squares refinement. Raises when the scaled design
    matrix is ill conditioned.
    """
    xs = np.asarray(xs, dtype=float)
    r = np.linalg.norm(xs, axis=1)
    lo, hi = window
    mask = (r >= lo) & (r <= hi)
    if np.sum(mask) < 20:
        raise RuntimeError("fit window too small; trajectory does not "
                           "resolve the requested |x| range")
    t = times[mask]
    y = xs[mask]
    tref = t[0]
    mus = spec.mu_seq[:J]
    jhat = spec.jhat
    cols = []
    labels: list[tuple[int, int]] = []
    for j, mu in enumerate(mus, start=1):
        cols.append(np.exp(-mu * (t - tref)))
        labels.append((j, 0))
        if j == jhat:
            cols.append((t - tref) * np.exp(-mu * (t - tref)))
            labels.append((j, 1))
    # columns absorbing the unstable contamination (launch and impact
    # errors excite growing modes that would otherwise bias the fit)
    n_grow = 0
    for lam in sorted(set(spec.lambdas)):
        cols.append(np.exp(lam * (t - t[-1])))
        labels.append((-1, n_grow))
        n_grow += 1
    A = np.column_stack(cols)
    scales = np.linalg.norm(A, axis=0)
    As = A / scales
    cond = float(np.linalg.cond(As))
    if cond > COND_LIMIT:
        raise RuntimeError(f"design matrix condition {cond:.2e} exceeds "
                           f"{COND_LIMIT:.0e}; shrink the window or J")

    # sequential peeling, slowest rate first
    resid = y.copy()
    peel: dict[tuple[int, int], np.ndarray] = {}
    stage_residuals = []
    for j, mu in enumerate(mus, start=1):
        w = np.exp(mu * (t - tref))
        tail = slice(int(0.55 * len(t)), None)
        if j == jhat:
            # linear fit in t of the compensated residual
            comp = resid[tail] * w[tail, None]
            tt = (t - tref)[tail]
            M = np.column_stack([np.ones_like(tt), tt])
            sol, *_ = np.linalg.lstsq(M, comp, rcond=None)
            peel[(j, 0)] = sol[0]
            peel[(j, 1)] = sol[1]
            resid = resid - (np.exp(-mu * (t - tref))[:, None] * sol[0]
                             + ((t - tref) * np.exp(-mu * (t - tref)))[:, None] * sol[1])
        else:
            comp = resid[tail] * w[tail, None]
            peel[(j, 0)] = comp.mean(axis=0)
            resid = resid - np.exp(-mu * (t - tref))[:, None] * peel[(j, 0)]
        stage_residuals.append(float(np.max(np.abs(resid))))

    # joint refinement
    sol, *_ = np.linalg.lstsq(As, y, rcond=None)
    sol = sol / scales[:, None]
    out: dict[tuple[int, int], np.ndarray] = {}
    grow: dict[int, np.ndarray] = {}
    for row, (j, m) in enumerate(labels):
        if j < 0:
            grow[m] = sol[row].copy()
        else:
            out[(j, m)] = sol[row].copy()
    # undo the time shift: coefficients refer to the global time variable
    for (j, m) in list(out.keys()):
        mu = mus[j - 1]
        out[(j, m)] = out[(j, m)] * math.exp(mu * tref)
    if (jhat, 1) in out:
        out[(jhat, 0)] = out[(jhat, 0)] - tref * out[(jhat, 1)]
    diag = {"cond": cond, "stage_residuals": stage_residuals,
            "window_t": (float(t[0]), float(t[-1])),
            "fit_rms": float(np.sqrt(np.mean((A @ sol - y) ** 2))),
            "growing_modes": grow, "peel": peel}
    return out, diag


def trapped_action(model: PotentialModel, omega: np.ndarray,
                   z_coords: np.ndarray, E: float,
                   R: float = DEFAULT_LAUNCH_RADIUS,
                   t_max: float = 120.0) -> float:
    """Renormalized action of the incoming trapped trajectory:
    int (|xi|^2 - 2 E0 1_{t<0}) dt with a straight-line incoming tail and
    an exponential outgoing tail."""
    omega = np.asarray(omega, dtype=float)
    omega = omega / np.linalg.norm(omega)
    n = model.n
    z = perp_basis(omega) @ z_coords if z_coords.size == n - 1 else z_coords
    start, t0 = incoming_initialize(model, omega, z, E, R)
    lam1 = None

    def f_pre(t, y):
        # t < 0 branch: integrand |xi|^2 - 2E
        dy = np.empty(2 * n + 1)
        dy[:n] = y[n: 2 * n]
        dy[n: 2 * n] = -model.gradient(y[:n])
        dy[2 * n] = float(np.dot(y[n: 2 * n], y[n: 2 * n])) - 2.0 * E
        return dy

    def f_post(t, y):
        dy = np.empty(2 * n + 1)
        dy[:n] = y[n: 2 * n]
        dy[n: 2 * n] = -model.gradient(y[:n])
        dy[2 * n] = float(np.dot(y[n: 2 * n], y[n: 2 * n]))
        return dy

    y0 = np.concatenate([start.as_state(), [0.0]])
    sol1 = solve_ivp(f_pre, (t0, 0.0), y0, method="DOP853",
                     rtol=TRAP_RTOL, atol=TRAP_ATOL)
    y_mid = sol1.y[:, -1]

    # integrate forward, tracking the phase-space distance minimum
    sol2 = solve_ivp(f_post, (0.0, t_max), y_mid, method="DOP853",
                     rtol=TRAP_RTOL, atol=TRAP_ATOL, dense_output=True)
    ts = np.linspace(0.0, sol2.t[-1], 4000)
    ys = sol2.sol(ts).T
    rr = np.linalg.norm(ys[:, :n], axis=1) + np.linalg.norm(ys[:, n:], axis=1)
    i_min = int(np.argmin(rr))
    core = float(ys[i_min, 2 * n])
    xi_end = ys[i_min, n: 2 * n]
    from .potential import barrier_spectrum
    lam1 = barrier_spectrum(model).lambdas[0]
    tail_out = float(np.dot(xi_end, xi_end)) / (2.0 * lam1)
    v = math.sqrt(2.0 * E)
    tail_in = quad(lambda t: -2.0 * model.eval(v * omega * t + z),
                   -np.inf, t0, epsabs=1e-14, epsrel=1e-12)[0]
    return tail_in + core + tail_out


def jacobian_dets_trapped(model: PotentialModel, omega: np.ndarray,
                          z_coords: np.ndarray, E: float,
                          R: float = DEFAULT_LAUNCH_RADIUS,
                          t_max: float = 120.0, samples: int = 1500
                          ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(times, dets, |x|) of det d x / d(t, z) along the trapped
    trajectory, in the launch parametrization."""
    omega = np.asarray(omega, dtype=float)
    omega = omega / np.linalg.norm(omega)
    n = model.n
    z = perp_basis(omega) @ z_coords if z_coords.size == n - 1 else z_coords
    start, t0 = incoming_initialize(model, omega, z, E, R)
    B = perp_basis(omega)
    grad0 = model.gradient(start.x)
    s0 = np.linalg.norm(start.xi)
    M0 = np.zeros((2 * n, n - 1))
    for j in range(n - 1):
        M0[:n, j] = B[:, j]
        M0[n:, j] = -(np.dot(grad0, B[:, j]) / s0) * omega
    # cut at closest approach, like the scalar shot
    ts_cut, ys_cut, _ = trapped_shoot(model, omega, z_coords, E, R=R, t_max=t_max)
    t_end = ts_cut[-1]
    t_eval = np.linspace(t0, t_end, samples)
    if n > 1:
        traj = variational_flow(model, start, (t0, t_end), t_eval=t_eval, M0=M0,
                                rtol=TRAP_RTOL, atol=TRAP_ATOL)
    else:
        from .dynamics import flow
        traj = flow(model, start, (t0, t_end), t_eval=t_eval,
                    rtol=TRAP_RTOL, atol=TRAP_ATOL)
    dets = np.empty(samples)
    radii = np.empty(samples)
    for i in range(samples):
        cols = [traj.states[i, n:]]
        for j in range(n - 1):
            cols.append(traj.jacobians[i][:n, j])
        dets[i] = np.linalg.det(np.column_stack(cols))
        radii[i] = np.linalg.norm(traj.states[i, :n])
    return t_eval, dets, radii


def maslov_determinant(model: PotentialModel, spec: BarrierSpectrum,
                       omega: np.ndarray, z_coords: np.ndarray,
                       E: float, rate_index: int = 1,
                       R: float = DEFAULT_LAUNCH_RADIUS,
                       window: tuple[float, float] = (1e-5, 1e-2),
                       osc_tol: float = 0.01) -> tuple[float, dict]:
    """Weighted Jacobian limit
    D = lim |det d x / d(t,z)| e^{-(sum lambda - 2 lambda_r) t}
    along the trapped trajectory (r = rate_index, 1-based).

    Certified by requiring the relative oscillation of the weighted
    product over the last time decade of the window to stay below
    osc_tol. Returns (D, diagnostics)."""
    times, dets, radii = jacobian_dets_trapped(model, omega, z_coords, E, R=R)
    lams = np.array(spec.lambdas)
    w_rate = float(np.sum(lams) - 2.0 * lams[rate_index - 1])
    lo, hi = window
    mask = (radii >= lo) & (radii <= hi)
    if np.sum(mask) < 10:
        raise RuntimeError("Jacobian window not resolved; extend t_max "
                           "or loosen the window")
    tw = times[mask]
    W = np.abs(dets[mask]) * np.exp(-w_rate * tw)
    t_last = tw[-1]
    span = tw[-1] - tw[0]
    late = tw >= t_last - max(0.25 * span, 1.0)
    Wl = W[late]
    osc = float((Wl.max() - Wl.min()) / max(Wl[-1], 1e-300))
    if osc > osc_tol:
        raise RuntimeError(f"weighted Jacobian not converged "
                           f"(oscillation {osc:.2e} over the last decade)")
    D = float(Wl[-1])
    diag = {"oscillation": osc, "window_t": (float(tw[0]), float(tw[-1])),
            "nu_candidate": count_sign_changes(dets)}
    return D, diag


def ll_index(g_coeffs: dict[tuple[int, int], np.ndarray],
             spec: BarrierSpectrum, tol: float = 1e-6) -> int:
    """1-based index of the first nonvanishing expansion coefficient;
    its rate must be one of the barrier rates."""
    scale = max(np.linalg.norm(v) for v in g_coeffs.values())
    for j in sorted({j for (j, m) in g_coeffs if m == 0}):
        if np.linalg.norm(g_coeffs[(j, 0)]) > tol * scale:
            mu = spec.mu_seq[j - 1]
            if not any(spec.rate_equal(mu, l) for l in spec.lambdas):
                raise RuntimeError("leading expansion rate is not an "
                                   "eigenvalue rate; inconsistent fit")
            return j
    raise RuntimeError("all expansion coefficients vanish")


def trapped_trajectory(model: PotentialModel, spec: BarrierSpectrum,
                       direction: np.ndarray, side: str = "incoming",
                       E: float | None = None, J: int = 3,
                       extent: float = 0.8, grid: int = 33,
                       R: float = DEFAULT_LAUNCH_RADIUS,
                       t_max: float = 120.0) -> TrappedTrajectory:
    """Full trapped-trajectory pipeline for one side.

    'incoming' uses the given direction as the incoming direction omega;
    'outgoing' solves the time-reversed problem with direction -theta and
    maps coefficients back (t^m picks up (-1)^m; actions, Jacobian limits
    and focal counts are reversal invariant)."""
    if E is None:
        E = spec.E0
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    omega = direction if side == "incoming" else -direction
    z_star = find_trapped_impact(model, spec, omega, E=E, extent=extent,
                                 grid=grid, R=R, t_max=t_max)
    ts, ys, _ = trapped_shoot(model, omega, z_star, E, R=R, t_max=t_max)
    n = model.n
    g, diag = extract_expandible_coeffs(ts, ys[:, :n], spec, J=J)
    action = trapped_action(model, omega, z_star, E, R=R, t_max=t_max)
    if side == "outgoing":
        g = {(j, m): ((-1.0) ** m) * v for (j, m), v in g.items()}
    ll = ll_index(g, spec)
    rate_index = 1 if side == "incoming" else ll
    D, ddiag = maslov_determinant(model, spec, omega, z_star, E,
                                  rate_index=rate_index, R=R)
    nu = ddiag["nu_candidate"]
    diag.update(ddiag)
    return TrappedTrajectory(side=side, direction=direction, z_star=z_star,
                             E=E, g_coeffs=g, action=action, D=D, nu=nu,
                             ll=ll, diagnostics=diag)


def hessian_limit_check(model: PotentialModel, spec: BarrierSpectrum,
                        omega: np.ndarray, z_coords: np.ndarray,
                        E: float | None = None, x_eval: float = 1e-4,
                        R: float = DEFAULT_LAUNCH_RADIUS,
                        t_max: float = 120.0) -> np.ndarray:
    """Graph Hessian d xi / d x of the transported incoming-manifold
    tangent plane, read off where |x(t)| first drops to x_eval.

    Converges to diag(lambda_1, ..., -lambda_nu, ..., lambda_n) with the
    sign flip on the incoming eigendirection."""
    if E is None:
        E = spec.E0
    omega = np.asarray(omega, dtype=float)
    omega = omega / np.linalg.norm(omega)
    n = model.n
    z = perp_basis(omega) @ z_coords if z_coords.size == n - 1 else z_coords
    start, t0 = incoming_initialize(model, omega, z, E, R)
    grad0 = model.gradient(start.x)
    s0 = np.linalg.norm(start.xi)
    # tangent frame of the incoming-asymptote manifold at launch:
    # the flow direction plus the impact-parameter variations
    M0 = np.zeros((2 * n, n))
    M0[:n, 0] = start.xi
    M0[n:, 0] = -grad0
    B = perp_basis(omega)
    for j in range(n - 1):
        M0[:n, j + 1] = B[:, j]
        M0[n:, j + 1] = -(np.dot(grad0, B[:, j]) / s0) * omega
    ts, ys, _ = trapped_shoot(model, omega, z_coords, E, R=R, t_max=t_max)
    radii = np.linalg.norm(ys[:, :n], axis=1)
    hit = np.nonzero(radii <= x_eval)[0]
    if hit.size == 0:
        raise RuntimeError(f"trajectory does not reach |x| = {x_eval}")
    t_end = ts[hit[0]]
    traj = variational_flow(model, start, (t0, t_end), M0=M0,
                            rtol=TRAP_RTOL, atol=TRAP_ATOL)
    Mend = traj.jacobians[-1]
    X = Mend[:n, :]
    Xi = Mend[n:, :]
    return Xi @ np.linalg.inv(X)
