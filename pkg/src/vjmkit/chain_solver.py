"""Nonlinear chain equilibrium under a pose constraint, and its linearization.

The equilibrium of a chain held at a target pose t is the configuration
(q, theta) and end wrench F satisfying

    g(q, theta) = t
    J_q' F      = 0                    (passive joints carry no load)
    J_th' F     = K_th0 (theta - theta0)   (spring constitutive law)

F is the external wrench that must be applied at the chain end-point to
hold it there; signs follow that convention throughout.

The iteration linearizes the kinematics at the current iterate and solves
the saddle block system

    [ 0     J_q   J_th ] [F']    [ (t - g) + J_q q + J_th theta ]
    [ J_q'  0     0    ] [q']  = [ 0                            ]
    [ J_th' 0    -K    ] [th']   [ -K theta0                    ]

for the next iterate directly. Chains whose coordinates span fewer than six
end directions are handled by projecting the pose rows onto the row space
of [J_q J_th]; the returned wrench then has no component along the
unmodeled (rigid) directions, and targets with a component outside the
span do not converge, which is reported honestly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chain import ChainConfiguration, ChainModel, chain_jacobians, forward_geometry, load_hessians
from .errors import (
    BucklingDetected,
    MaxIterationsExceeded,
    SingularJacobian,
    SingularSystem,
)
from .spatial import (
    PoseDisplacement,
    RigidTransform,
    Wrench,
    apply_displacement,
    pose_difference,
    symmetrize,
)

_RANK_TOL = 1e-10


@dataclass(frozen=True)
class SolveOptions:
    """Chain solver tolerances; defaults are the package-wide ones.

    pose_tol / step_tol use the mixed mm/rad 6-vector norm, force_tol the
    mixed N / N*mm norm. step_limit_frac caps each iteration's coordinate
    step at that fraction of the chain's characteristic length so the
    solver tracks one equilibrium branch instead of jumping.
    """

    pose_tol: float = 1e-9
    step_tol: float = 1e-9
    force_tol: float = 1e-9
    max_iterations: int = 100
    step_limit_frac: float = 0.1


@dataclass(frozen=True)
class ChainState:
    """Converged chain equilibrium."""

    configuration: ChainConfiguration
    wrench: Wrench
    target: RigidTransform
    residual: float
    iterations: int


@dataclass(frozen=True)
class StiffnessTriple:
    """Linearized response at a converged state.

    K_C (6x6) maps end displacement to end wrench; K_Cq (n_q x 6) and
    K_Ct (n_theta x 6) map end displacement to passive and spring
    coordinate changes. deficient_dirs columns span end directions the
    springs do not reach (K_C reports zero there, not infinite stiffness).
    """

    K_C: np.ndarray
    K_Cq: np.ndarray
    K_Ct: np.ndarray
    deficient_dirs: np.ndarray = field(default_factory=lambda: np.zeros((6, 0)))


def unloaded_state(chain: ChainModel) -> ChainState:
    """Zero-wrench equilibrium at the nominal configuration (theta = preload)."""
    cfg = chain.nominal_configuration()
    return ChainState(
        configuration=cfg,
        wrench=Wrench.zero(),
        target=forward_geometry(chain, cfg),
        residual=0.0,
        iterations=0,
    )


def solve_chain_equilibrium(
    chain: ChainModel,
    target: PoseDisplacement,
    t0: RigidTransform,
    init: ChainConfiguration | None = None,
    options: SolveOptions | None = None,
) -> ChainState:
    """Solve the pose-constrained equilibrium for target displaced from t0.

    target is the displacement of the end frame relative to t0. init warm
    starts the iteration; the default is the nominal configuration.
    """
    opts = options or SolveOptions()
    t_target = apply_displacement(t0, target)
    cfg = init if init is not None else chain.nominal_configuration()
    chain._check_cfg(cfg)
    n_q, n_t = chain.n_passive, chain.n_spring
    n = n_q + n_t
    K = chain.stiffness
    theta0 = chain.preload
    step_cap = opts.step_limit_frac * chain.characteristic_length

    q = cfg.q.copy()
    theta = cfg.theta.copy()
    last_step = np.inf
    best_residual = np.inf
    for it in range(opts.max_iterations + 1):
        g = forward_geometry(chain, ChainConfiguration(q, theta))
        r = pose_difference(t_target, g).as_vector()
        res = float(np.linalg.norm(r))
        best_residual = min(best_residual, res)
        if res <= opts.pose_tol and last_step <= opts.step_tol:
            return _finish(chain, q, theta, t_target, res, it)
        if it == opts.max_iterations:
            raise MaxIterationsExceeded(
                f"chain solve: {opts.max_iterations} iterations, pose residual {best_residual:.3e}",
                residual=best_residual,
            )

        J_q, J_t = chain_jacobians(chain, ChainConfiguration(q, theta))
        J = np.hstack([J_q, J_t]) if n else np.zeros((6, 0))
        if n == 0:
            raise SingularSystem("chain has no coordinates; pose cannot deflect")
        U, s, _ = np.linalg.svd(J, full_matrices=True)
        rank = int(np.sum(s > _RANK_TOL * max(s[0], 1.0)))
        if rank == 0:
            raise SingularSystem("chain Jacobian vanished; kinematic singularity")
        Ur = U[:, :rank]
        Aq = Ur.T @ J_q
        At = Ur.T @ J_t
        M = np.zeros((rank + n, rank + n))
        M[:rank, rank : rank + n_q] = Aq
        M[:rank, rank + n_q :] = At
        M[rank : rank + n_q, :rank] = Aq.T
        M[rank + n_q :, :rank] = At.T
        M[rank + n_q :, rank + n_q :] = -K
        rhs = np.zeros(rank + n)
        rhs[:rank] = Ur.T @ r + Aq @ q + At @ theta
        rhs[rank + n_q :] = -K @ theta0
        try:
            sol = np.linalg.solve(M, rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularSystem("equilibrium block matrix is singular") from exc
        q_new = sol[rank : rank + n_q]
        theta_new = sol[rank + n_q :]
        step = np.concatenate([q_new - q, theta_new - theta])
        step_norm = float(np.linalg.norm(step))
        if step_norm > step_cap:
            step *= step_cap / step_norm
            step_norm = step_cap
        q = q + step[:n_q]
        theta = theta + step[n_q:]
        last_step = step_norm

    raise MaxIterationsExceeded("chain solve: iteration loop exited abnormally")


def _finish(chain, q, theta, t_target, res, iterations) -> ChainState:
    # Re-fit F at the converged configuration: least-squares on the
    # equilibrium conditions gives a minimal-norm wrench with no component
    # along directions the chain cannot transmit.
    cfg = ChainConfiguration(q, theta)
    J_q, J_t = chain_jacobians(chain, cfg)
    tau = chain.stiffness @ (theta - chain.preload)
    A = np.vstack([J_q.T, J_t.T])
    b = np.concatenate([np.zeros(chain.n_passive), tau])
    F, *_ = np.linalg.lstsq(A, b, rcond=None)
    return ChainState(
        configuration=cfg,
        wrench=Wrench.from_vector(F),
        target=t_target,
        residual=res,
        iterations=iterations,
    )


def chain_force_deflection(
    chain: ChainModel,
    t: RigidTransform,
    t0: RigidTransform,
    init: ChainConfiguration | None = None,
    options: SolveOptions | None = None,
) -> Wrench:
    """Wrench required at the end-point to hold the chain at pose t."""
    disp = pose_difference(t, t0)
    return solve_chain_equilibrium(chain, disp, t0, init=init, options=options).wrench


def chain_stiffness(chain: ChainModel, state: ChainState) -> StiffnessTriple:
    """Linearized stiffness at a converged state, load terms included.

    Eliminates the spring and passive blocks of the equilibrium
    linearization. k = (K_th0 - H_tt)^-1 must stay positive definite;
    losing that is reported as buckling. The end-space operator
    (J_th k J_th')^-1 is built on the spanned subspace by eigendecomposition
    when the springs reach fewer than six directions.
    """
    cfg = state.configuration
    n_q = chain.n_passive
    J_q, J_t = chain_jacobians(chain, cfg)
    H_qq, H_qt, H_tq, H_tt = load_hessians(chain, cfg, state.wrench)

    A = chain.stiffness - H_tt
    try:
        c = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise BucklingDetected(
            "spring stiffness minus load hessian lost positive definiteness"
        ) from exc
    k = np.linalg.inv(c.T) @ np.linalg.inv(c)
    k = (k + k.T) / 2.0

    P = J_t @ k @ J_t.T
    P = (P + P.T) / 2.0
    w, V = np.linalg.eigh(P)
    tol = max(w.max(), 0.0) * _RANK_TOL
    keep = w > tol
    if not np.any(keep):
        raise SingularJacobian("springs transmit no end-point motion")
    K_C0 = (V[:, keep] / w[keep]) @ V[:, keep].T
    deficient = V[:, ~keep]

    if n_q:
        B = J_q + J_t @ k @ H_tq  # end motion per passive motion, springs relaxing
        C = J_q.T + H_qt @ k @ J_t.T
        inner = H_qq + H_qt @ k @ H_tq - C @ K_C0 @ B
        try:
            K_Cq = -np.linalg.solve(inner, C @ K_C0)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobian(
                "passive directions not resolvable through the spring metric"
            ) from exc
        K_C = K_C0 - K_C0 @ B @ K_Cq
    else:
        K_Cq = np.zeros((0, 6))
        K_C = K_C0
    K_Ct = k @ (J_t.T @ K_C + H_tq @ K_Cq)
    K_C = symmetrize(K_C, tol=1e-8, what="chain stiffness")
    return StiffnessTriple(K_C=K_C, K_Cq=K_Cq, K_Ct=K_Ct, deficient_dirs=deficient)
