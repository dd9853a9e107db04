"""Loaded-mode operations on a parallel model: force at a pose, pose under a
force, and target compensation.

manipulator_force evaluates the exact nonlinear force-deflection map: each
chain is driven to the attachment pose implied by the platform pose and the
resulting end wrenches are transported to the reference point. The inverse
map and the compensation routines are damped Newton iterations on top of it,
using the aggregated tangent stiffness.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .aggregation import ParallelModel, chain_errors
from .chain_solver import SolveOptions, solve_chain_equilibrium
from .chain_solver import chain_stiffness as _chain_stiffness
from .errors import (
    BucklingDetected,
    DimensionMismatch,
    MaxIterationsExceeded,
    NotConverged,
    SingularStiffness,
    VjmError,
)
from .spatial import (
    PoseDisplacement,
    RigidTransform,
    Wrench,
    adapter_jacobian,
    apply_displacement,
    pose_difference,
    transport_wrench,
)


@dataclass(frozen=True)
class LoadedSolveSettings:
    """Tolerances and budgets for the loaded-mode Newton loops.

    wrench_tol bounds the residual wrench norm measured in interface units
    (forces N, moments N*m); alpha_comp is the compensation damping factor.
    comp_pos_tol / comp_rot_tol bound the verified pose mismatch a
    compensated command may leave (mm, rad).
    """

    wrench_tol: float = 1e-9
    max_outer: int = 100
    continuation_steps: int = 10
    alpha_comp: float = 0.5
    comp_pos_tol: float = 1e-6
    comp_rot_tol: float = 1e-8
    chain_options: SolveOptions = field(default_factory=SolveOptions)

    def __post_init__(self):
        if not self.wrench_tol > 0.0:
            raise DimensionMismatch("wrench_tol must be positive")
        if self.max_outer < 1:
            raise DimensionMismatch("max_outer must be at least 1")
        if self.continuation_steps < 1:
            raise DimensionMismatch("continuation_steps must be at least 1")
        if not 0.0 < self.alpha_comp < 1.0:
            raise DimensionMismatch("alpha_comp must lie in (0, 1)")


@dataclass(frozen=True)
class LoadedState:
    """Platform pose with the per-chain equilibria behind it.

    total is the external wrench at the reference point that the chains
    jointly balance at pose t; K_c is the aggregated tangent stiffness there
    (None when the evaluation skipped it).
    """

    t: RigidTransform
    chain_states: tuple
    total: Wrench
    K_c: np.ndarray | None


def manipulator_force(
    model: ParallelModel,
    t: RigidTransform,
    warm=None,
    with_stiffness: bool = True,
    options: SolveOptions | None = None,
) -> LoadedState:
    """External wrench required at the reference point to hold pose t.

    warm may be a LoadedState or a list of per-chain initial configurations.
    """
    if isinstance(warm, LoadedState):
        inits = [s.configuration for s in warm.chain_states]
    elif warm is None:
        inits = [None] * model.n_chains
    else:
        inits = list(warm)
        if len(inits) != model.n_chains:
            raise DimensionMismatch("one warm configuration per chain required")

    states = []
    total = np.zeros(6)
    K_c = np.zeros((6, 6))
    for i, chain in enumerate(model.chains):
        v_cur = t.R @ model.adapters[i]
        target_end = RigidTransform(t.R, t.d + v_cur)
        disp = pose_difference(target_end, model.end_frames[i])
        try:
            st = solve_chain_equilibrium(
                chain, disp, model.end_frames[i], init=inits[i], options=options
            )
        except VjmError as exc:
            exc.args = (f"chain {i}: {exc}",)
            raise
        states.append(st)
        total += transport_wrench(st.wrench, v_cur).as_vector()
        if with_stiffness:
            J = adapter_jacobian(v_cur)
            K_c += J.T @ _chain_stiffness(chain, st).K_C @ J
    state = LoadedState(
        t=t,
        chain_states=tuple(states),
        total=Wrench.from_vector(total),
        K_c=(K_c + K_c.T) / 2.0 if with_stiffness else None,
    )
    return state


def _with_stiffness(model: ParallelModel, state: LoadedState) -> LoadedState:
    """Fill in K_c from the already-solved chain states (no re-solve)."""
    if state.K_c is not None:
        return state
    K_c = np.zeros((6, 6))
    for i, chain in enumerate(model.chains):
        v_cur = state.t.R @ model.adapters[i]
        J = adapter_jacobian(v_cur)
        K_c += J.T @ _chain_stiffness(chain, state.chain_states[i]).K_C @ J
    return LoadedState(
        t=state.t,
        chain_states=state.chain_states,
        total=state.total,
        K_c=(K_c + K_c.T) / 2.0,
    )


def _wrench_norm(vec: np.ndarray) -> float:
    """Residual norm in interface units: forces in N, moments in N*m."""
    return float(np.sqrt(vec[:3] @ vec[:3] + (vec[3:] @ vec[3:]) * 1e-6))


def _newton_step(K_c: np.ndarray, residual: np.ndarray) -> np.ndarray:
    w = np.linalg.eigvalsh(K_c)
    if w.min() <= 1e-12 * max(abs(w.max()), 1e-300):
        raise SingularStiffness(
            "aggregated stiffness is singular; cannot take a Newton step"
        )
    return np.linalg.solve(K_c, residual)


def _solve_for_wrench(
    model: ParallelModel,
    F_target: np.ndarray,
    t_init: RigidTransform,
    warm,
    settings: LoadedSolveSettings,
    alpha_label: float,
    tol: float | None = None,
):
    """Damped Newton on f(t) = F_target starting from t_init.

    The tangent stiffness is only assembled at accepted iterates; line-search
    trials evaluate the wrench alone.
    """
    tol = settings.wrench_tol if tol is None else tol
    t = t_init
    state = manipulator_force(
        model, t, warm=warm, with_stiffness=False, options=settings.chain_options
    )
    res = F_target - state.total.as_vector()
    best = _wrench_norm(res)
    for _ in range(settings.max_outer):
        if best <= tol:
            return _with_stiffness(model, state)
        state = _with_stiffness(model, state)
        step = _newton_step(state.K_c, res)
        scale = 1.0
        for _halve in range(30):
            t_try = apply_displacement(t, PoseDisplacement.from_vector(scale * step))
            trial = manipulator_force(
                model, t_try, warm=state, with_stiffness=False,
                options=settings.chain_options,
            )
            r_try = _wrench_norm(F_target - trial.total.as_vector())
            if r_try < best or r_try <= tol:
                t, state = t_try, trial
                res = F_target - state.total.as_vector()
                best = r_try
                break
            scale *= 0.5
        else:
            raise NotConverged(
                "loaded-mode Newton stalled", residual=best, alpha=alpha_label
            )
    if best <= tol:
        return _with_stiffness(model, state)
    raise NotConverged(
        "loaded-mode Newton ran out of iterations", residual=best, alpha=alpha_label
    )


def unloaded_shift(
    model: ParallelModel,
    settings: LoadedSolveSettings | None = None,
    warm=None,
) -> tuple:
    """Zero-load equilibrium pose shift of a (possibly non-perfect) model.

    Returns (shift, state): shift is the equilibrium displacement from the
    commanded pose t0, found by the exact nonlinear balance (the linearized
    assembly estimate is its first Newton step).
    """
    settings = settings or LoadedSolveSettings()
    if isinstance(warm, LoadedState):
        try:
            state = _solve_for_wrench(
                model, np.zeros(6), warm.t, warm, settings, alpha_label=0.0
            )
            return pose_difference(state.t, model.t0), state
        except (NotConverged, SingularStiffness, BucklingDetected, MaxIterationsExceeded):
            pass  # warm guess too far off; restart from the commanded pose
    state = _solve_for_wrench(
        model, np.zeros(6), model.t0, None, settings, alpha_label=0.0
    )
    return pose_difference(state.t, model.t0), state


def invert_compliance(
    model: ParallelModel,
    wrench: Wrench,
    settings: LoadedSolveSettings | None = None,
    warm=None,
) -> LoadedState:
    """Pose at which the model balances the given external wrench.

    Cold starts ramp the load linearly over continuation_steps stages to
    stay on the unloaded equilibrium branch; a warm state close to the
    solution skips the ramp.
    """
    settings = settings or LoadedSolveSettings()
    F = wrench.as_vector()
    if isinstance(warm, LoadedState):
        try:
            return _solve_for_wrench(model, F, warm.t, warm, settings, alpha_label=1.0)
        except (NotConverged, SingularStiffness, BucklingDetected, MaxIterationsExceeded):
            pass  # warm guess too far off; fall back to the full ramp
    state = None
    t = model.t0
    n = settings.continuation_steps
    stage_tol = max(settings.wrench_tol, 1e-5)
    for j in range(1, n + 1):
        alpha = j / n
        state = _solve_for_wrench(
            model, alpha * F, t, state, settings, alpha_label=alpha,
            tol=settings.wrench_tol if j == n else stage_tol,
        )
        t = state.t
    return state


def compensate_target(
    model: ParallelModel,
    wrench: Wrench,
    t_desired: RigidTransform,
    settings: LoadedSolveSettings | None = None,
    t_init: RigidTransform | None = None,
) -> RigidTransform:
    """Commanded pose whose loaded equilibrium lands on t_desired.

    Damped fixed-point iteration: command <- command + alpha_comp * (desired
    - achieved). Requires the model's retarget hook; every iteration rebuilds
    the model (actuators re-solved) at the trial command. When the model is
    only translation-commandable the loop closes on the position alone: the
    orientation under load is set by the elasticity, not the command, so a
    rotation correction would wander without converging. t_init seeds the
    command (e.g. with the correction found at a neighboring pose).
    """
    settings = settings or LoadedSolveSettings()
    translation_only = model.commandable == "translation"
    t_cmd = t_init if t_init is not None else t_desired
    loaded = None
    for _ in range(settings.max_outer):
        trial = model.retarget_common(t_cmd)
        loaded = invert_compliance(trial, wrench, settings, warm=loaded)
        miss = pose_difference(t_desired, loaded.t)
        if translation_only:
            miss = PoseDisplacement(miss.p, np.zeros(3))
        if (
            float(np.linalg.norm(miss.p)) <= settings.comp_pos_tol
            and float(np.linalg.norm(miss.phi)) <= settings.comp_rot_tol
        ):
            return t_cmd
        t_cmd = apply_displacement(t_cmd, miss.scaled(settings.alpha_comp))
    raise NotConverged(
        "target compensation did not reach the pose tolerance",
        residual=float(miss.norm()),
        alpha=1.0,
    )


def compensate_with_errors(
    model: ParallelModel,
    wrench: Wrench,
    t_desired: RigidTransform,
    errors=None,
    settings: LoadedSolveSettings | None = None,
) -> list:
    """Per-chain commanded poses cancelling both load and geometric errors.

    Splits the correction into a common part (load compensation on the
    non-perfect model plus its no-load assembly shift, which together
    approximate the perfect model's load compensation) and a per-chain part
    subtracting each chain's own zero-strain error, expressed at the
    reference point. The returned commands both place the loaded platform at
    t_desired and remove the error-induced internal loading.
    """
    settings = settings or LoadedSolveSettings()
    if errors is None:
        errors = chain_errors(model)
    if len(errors) != model.n_chains:
        raise DimensionMismatch("one zero-strain error per chain required")

    t_cmd = compensate_target(model, wrench, t_desired, settings)
    dt0 = pose_difference(t_cmd, t_desired).as_vector()
    dte, _ = unloaded_shift(model, settings)
    dte = dte.as_vector()

    targets = []
    for i in range(model.n_chains):
        v = model.adapter_world(i)
        eps_ref = adapter_jacobian(-v) @ errors[i].as_vector()
        d_i = dt0 + dte - eps_ref
        targets.append(apply_displacement(t_desired, PoseDisplacement.from_vector(d_i)))
    return targets
