"""Independent numerical oracles.

Nothing here shares solver machinery with the package: the equilibrium
oracle minimizes a penalized elastic energy with its own damped Newton, the
stiffness oracle differentiates the force-deflection map, and the assembly
oracle solves the stacked least-squares form of the quadratic energy.
"""
import numpy as np

from vjmkit.chain import ChainConfiguration, chain_jacobians, forward_geometry
from vjmkit.chain_solver import (
    SolveOptions,
    chain_force_deflection,
    chain_stiffness,
    solve_chain_equilibrium,
)
from vjmkit.spatial import PoseDisplacement, apply_displacement, unskew

TIGHT = SolveOptions(pose_tol=1e-12, step_tol=1e-12)


def _penalty_terms(chain, x, t_target, mu_t, mu_r):
    n_q = chain.n_passive
    cfg = ChainConfiguration(x[:n_q], x[n_q:])
    g = forward_geometry(chain, cfg)
    J_q, J_t = chain_jacobians(chain, cfg)
    J = np.hstack([J_q, J_t])
    dp = g.d - t_target.d
    M = g.R @ t_target.R.T
    # gradient of the Frobenius rotation gap 3 - tr(R R*') along a world twist
    a = unskew(M - M.T)
    th = x[n_q:] - chain.preload
    E = 0.5 * th @ chain.stiffness @ th
    E += 0.5 * mu_t * (dp @ dp) + mu_r * (3.0 - np.trace(M))
    grad = np.zeros(x.shape)
    grad[n_q:] = chain.stiffness @ th
    grad += mu_t * (J[:3].T @ dp) + mu_r * (J[3:].T @ a)
    return E, grad, dp, a


def _penalty_grad(chain, x, t_target, mu_t, mu_r):
    return _penalty_terms(chain, x, t_target, mu_t, mu_r)[1:]


def penalty_wrench(chain, t_target, mu_t, x0=None, grad_tol=None):
    """Wrench holding the chain at t_target, from penalized minimization.

    Returns (wrench 6-vector, solution x). The rotational penalty weight is
    mu_t * L^2 so both constraint parts stiffen together; the wrench estimate
    is the penalty force, exact only in the mu -> infinity limit.

    Two-phase damped Newton: far from the optimum, steps come from a
    positive-shifted Hessian and are accepted on energy decrease, which
    cannot terminate on a saddle; once energy differences sink below
    roundoff inside the attraction basin, acceptance switches to
    gradient-norm decrease and Newton polishes down to the gradient's own
    noise floor.
    """
    L = chain.characteristic_length
    mu_r = mu_t * L * L
    n = chain.n_passive + chain.n_spring
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    if grad_tol is None:
        grad_tol = 1e-12 * mu_t
    h = 1e-7

    def terms(x):
        return _penalty_terms(chain, x, t_target, mu_t, mu_r)

    E0, g0, dp, a = terms(x)
    polish = False
    for _ in range(200):
        gn = np.linalg.norm(g0)
        if gn <= grad_tol:
            break
        H = np.zeros((n, n))
        for j in range(n):
            e = np.zeros(n)
            e[j] = h
            H[:, j] = (terms(x + e)[1] - terms(x - e)[1]) / (2.0 * h)
        H = (H + H.T) / 2.0
        if not polish:
            w = np.linalg.eigvalsh(H)
            if w[0] <= 1e-14 * abs(w[-1]):
                H = H + (2.0 * abs(w[0]) + 1e-12 * abs(w[-1])) * np.eye(n)
        try:
            step = np.linalg.solve(H, -g0)
        except np.linalg.LinAlgError:
            step = -g0 / np.linalg.norm(H, ord=np.inf)
        scale = 1.0
        improved = False
        for _halve in range(40):
            E_t, g_try, dp_t, a_t = terms(x + scale * step)
            ok = np.linalg.norm(g_try) < gn if polish else E_t < E0
            if ok:
                x = x + scale * step
                E0, g0, dp, a = E_t, g_try, dp_t, a_t
                improved = True
                break
            scale *= 0.5
        if not improved:
            if polish:
                break  # roundoff floor of the gradient itself
            if gn <= 1e-3 * mu_t:
                # energy is roundoff-flat near its minimum; finish with
                # pure Newton accepted on gradient decrease
                polish = True
                continue
            raise RuntimeError("penalty oracle stalled during descent")
    if np.linalg.norm(g0) > 1e3 * grad_tol:
        raise RuntimeError("penalty oracle did not converge")
    return np.concatenate([-mu_t * dp, -mu_r * a]), x


def penalty_wrench_extrapolated(chain, t_target, k_scale):
    """Richardson-extrapolated penalty wrench (error O(1/mu) eliminated).

    k_scale must be a translational stiffness scale (N/mm); overshooting it
    amplifies pose roundoff by mu and floors the achievable accuracy.
    """
    mu1, mu2 = 1e4 * k_scale, 1e6 * k_scale
    # the mu2 solve's stopping error passes straight into the extrapolation,
    # so its gradient budget must stay near the evaluation roundoff floor
    F1, x1 = penalty_wrench(chain, t_target, mu1, grad_tol=1e-14 * mu1)
    F2, _ = penalty_wrench(chain, t_target, mu2, x0=x1, grad_tol=1e-14 * mu2)
    return (mu2 * F2 - mu1 * F1) / (mu2 - mu1)


def fd_cartesian_stiffness(chain, state, h=1e-6, options=TIGHT):
    """Central finite differences of the raw force-deflection map."""
    t_eq = state.target
    K = np.zeros((6, 6))
    for j in range(6):
        cols = []
        for s in (h, -h):
            d = np.zeros(6)
            d[j] = s
            t_j = apply_displacement(t_eq, PoseDisplacement.from_vector(d))
            F = chain_force_deflection(
                chain, t_j, t_eq, init=state.configuration, options=options
            )
            cols.append(F.as_vector())
        K[:, j] = (cols[0] - cols[1]) / (2.0 * h)
    return K


def assembly_least_squares(K_ref, eps_ref):
    """Minimizer of sum_i |K_i^(1/2) (eps_i - dt)|^2 via one stacked lstsq."""
    blocks = []
    rhs = []
    for K, e in zip(K_ref, eps_ref):
        w, V = np.linalg.eigh((K + K.T) / 2.0)
        S = (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T
        blocks.append(S)
        rhs.append(S @ e)
    A = np.vstack(blocks)
    b = np.concatenate(rhs)
    dt, *_ = np.linalg.lstsq(A, b, rcond=None)
    return dt


def translational_scale(chain):
    """Penalty weight scale in N/mm; rotational springs enter through the
    lever arm of the chain length."""
    labels = chain.spring_axis_labels()
    diag = np.diag(chain.stiffness)
    k_t = max((d for d, l in zip(diag, labels) if l.startswith("t")), default=0.0)
    k_r = max((d for d, l in zip(diag, labels) if l.startswith("r")), default=0.0)
    return max(k_t, k_r / chain.characteristic_length ** 2, 1.0)


def solve_with_small_end_moment(chain, target, t0, m_tol=1.0):
    """Equilibrium under an essentially pure-force load.

    The raw force-deflection map differs from the stiffness linearization by
    a half-skew of the moment held at the end frame, so force-only loads are
    the ones whose finite differences the analytic K_C must reproduce.
    Forces still excite every load-Hessian block through the lever arms.
    """
    state = solve_chain_equilibrium(chain, target, t0, options=TIGHT)
    for _ in range(24):
        m = state.wrench.m
        if np.linalg.norm(m) <= m_tol:
            return state
        K_rr = chain_stiffness(chain, state).K_C[3:, 3:]
        dphi = np.linalg.solve(K_rr, m)
        # soft rotational modes make the full Newton correction overshoot
        size = np.linalg.norm(dphi)
        if size > 0.05:
            dphi *= 0.05 / size
        target = PoseDisplacement(target.p, target.phi - dphi)
        state = solve_chain_equilibrium(
            chain, target, t0, init=state.configuration, options=TIGHT
        )
    raise AssertionError("could not null the end moment")
