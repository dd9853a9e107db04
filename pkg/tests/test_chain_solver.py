import numpy as np
import pytest

from conftest import SPRING_ALL, random_chain
from oracles import (
    TIGHT,
    _penalty_grad,
    fd_cartesian_stiffness,
    penalty_wrench_extrapolated,
    solve_with_small_end_moment,
    translational_scale,
)
from vjmkit.chain import (
    ChainConfiguration,
    ChainModel,
    ConstTransform,
    VirtualSpring,
    chain_jacobians,
    forward_geometry,
)
from vjmkit.chain_solver import (
    ChainState,
    SolveOptions,
    chain_force_deflection,
    chain_stiffness,
    solve_chain_equilibrium,
    unloaded_state,
)
from vjmkit.errors import BucklingDetected, MaxIterationsExceeded
from vjmkit.spatial import (
    PoseDisplacement,
    RigidTransform,
    Wrench,
    apply_displacement,
    pose_difference,
)


def rand_target(rng, p=1.0, r=0.01):
    return PoseDisplacement(p * rng.uniform(-1, 1, 3), r * rng.uniform(-1, 1, 3))


def nominal_pose(chain):
    return forward_geometry(chain, chain.nominal_configuration())


def equilibrium_defect(chain, state):
    """Max violation of the three equilibrium conditions (mixed units)."""
    cfg = state.configuration
    F = state.wrench.as_vector()
    J_q, J_t = chain_jacobians(chain, cfg)
    pose = pose_difference(forward_geometry(chain, cfg), state.target).norm()
    passive = np.abs(J_q.T @ F).max() if chain.n_passive else 0.0
    spring = np.abs(
        J_t.T @ F - chain.stiffness @ (cfg.theta - chain.preload)
    ).max()
    return max(pose, passive, spring)


def test_equilibrium_conditions_on_random_chains():
    rng = np.random.default_rng(11)
    for k in range(15):
        chain = random_chain(rng, preload=(k % 3 == 0))
        t0 = nominal_pose(chain)
        state = solve_chain_equilibrium(chain, rand_target(rng), t0)
        assert equilibrium_defect(chain, state) < 1e-7


def test_pure_translation_is_hookean():
    K = np.diag([12.0, 7.0, 30.0, 9e3, 8e3, 7e3])
    chain = ChainModel(
        elements=(ConstTransform(RigidTransform.identity()), VirtualSpring(SPRING_ALL)),
        stiffness=K,
    )
    t0 = nominal_pose(chain)
    d = np.array([0.4, -1.2, 0.8])
    state = solve_chain_equilibrium(chain, PoseDisplacement(d, np.zeros(3)), t0)
    assert np.abs(state.wrench.f - K[:3, :3] @ d).max() < 1e-12
    assert np.abs(state.wrench.m).max() < 1e-12


def test_unloaded_and_preloaded_nominal_state():
    rng = np.random.default_rng(13)
    chain = random_chain(rng, preload=True)
    st = unloaded_state(chain)
    assert st.wrench.norm() == 0.0
    # solving for the nominal pose must return to theta = preload, F = 0
    solved = solve_chain_equilibrium(chain, PoseDisplacement.zero(), st.target)
    assert np.abs(solved.configuration.theta - chain.preload).max() < 1e-9
    assert solved.wrench.norm() < 1e-6


def test_warm_start_agrees_with_cold():
    rng = np.random.default_rng(17)
    chain = random_chain(rng)
    t0 = nominal_pose(chain)
    target = rand_target(rng)
    cold = solve_chain_equilibrium(chain, target, t0)
    nudge = ChainConfiguration(
        cold.configuration.q + 0.01 * rng.standard_normal(chain.n_passive),
        cold.configuration.theta + 0.001 * rng.standard_normal(chain.n_spring),
    )
    warm = solve_chain_equilibrium(chain, target, t0, init=nudge)
    assert np.abs(warm.wrench.as_vector() - cold.wrench.as_vector()).max() < 1e-6
    assert warm.iterations <= cold.iterations


def test_penalty_gradient_self_check():
    # validates the oracle before the oracle validates the solver
    rng = np.random.default_rng(19)
    chain = random_chain(rng)
    t0 = nominal_pose(chain)
    t_target = apply_displacement(t0, rand_target(rng))
    mu_t = 100.0
    mu_r = mu_t * chain.characteristic_length ** 2
    n = chain.n_passive + chain.n_spring
    x = 0.01 * rng.standard_normal(n)

    def energy(x):
        cfg = ChainConfiguration(x[: chain.n_passive], x[chain.n_passive:])
        g = forward_geometry(chain, cfg)
        th = cfg.theta - chain.preload
        e = 0.5 * th @ chain.stiffness @ th
        e += 0.5 * mu_t * np.sum((g.d - t_target.d) ** 2)
        e += mu_r * (3.0 - np.trace(g.R @ t_target.R.T))
        return e

    grad, _, _ = _penalty_grad(chain, x, t_target, mu_t, mu_r)
    h = 1e-6
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        fd = (energy(x + e) - energy(x - e)) / (2.0 * h)
        assert abs(fd - grad[j]) < 1e-5 * max(abs(fd), 1.0)


def test_wrench_matches_penalty_oracle():
    rng = np.random.default_rng(23)
    for _ in range(4):
        chain = random_chain(rng)
        t0 = nominal_pose(chain)
        target = rand_target(rng, p=0.8, r=0.008)
        state = solve_chain_equilibrium(chain, target, t0, options=TIGHT)
        F_oracle = penalty_wrench_extrapolated(
            chain, apply_displacement(t0, target), translational_scale(chain)
        )
        F = state.wrench.as_vector()
        rel = np.linalg.norm(F - F_oracle) / np.linalg.norm(F_oracle)
        assert rel < 5e-6


def test_stiffness_matches_force_deflection_differences():
    rng = np.random.default_rng(29)
    for _ in range(3):
        chain = random_chain(rng)
        t0 = nominal_pose(chain)
        state = solve_with_small_end_moment(chain, rand_target(rng, p=0.5), t0)
        K = chain_stiffness(chain, state).K_C
        K_fd = fd_cartesian_stiffness(chain, state)
        rel = np.linalg.norm(K - K_fd) / np.linalg.norm(K)
        assert rel < 1e-4


def test_stiffness_chart_corrected_differences_large_moment():
    # with the chart-weighted moment difference the agreement survives large
    # held moments; this pins the convention rather than dodging it
    rng = np.random.default_rng(31)
    chain = random_chain(rng, passive=False)
    t0 = nominal_pose(chain)
    state = solve_chain_equilibrium(
        chain, rand_target(rng, p=0.8, r=0.02), t0, options=TIGHT
    )
    K = chain_stiffness(chain, state).K_C
    h = 1e-6
    K_fd = np.zeros((6, 6))
    for j in range(6):
        cols = []
        for s in (h, -h):
            d = np.zeros(6)
            d[j] = s
            t_j = apply_displacement(state.target, PoseDisplacement.from_vector(d))
            st = solve_chain_equilibrium(
                chain, pose_difference(t_j, state.target), state.target,
                init=state.configuration, options=TIGHT,
            )
            # left Jacobian of the chart displacement, to first order in d
            phi = d[3:]
            J_l = np.eye(3) + 0.5 * np.array(
                [[0, -phi[2], phi[1]], [phi[2], 0, -phi[0]], [-phi[1], phi[0], 0]]
            )
            cols.append(np.concatenate([st.wrench.f, J_l.T @ st.wrench.m]))
        K_fd[:, j] = (cols[0] - cols[1]) / (2.0 * h)
    rel = np.linalg.norm(K - K_fd) / np.linalg.norm(K)
    assert rel < 2e-5


def test_stiffness_annihilates_passive_directions_unloaded():
    rng = np.random.default_rng(37)
    for _ in range(5):
        chain = random_chain(rng)
        if chain.n_passive == 0:
            continue
        st = unloaded_state(chain)
        triple = chain_stiffness(chain, st)
        J_q, _ = chain_jacobians(chain, st.configuration)
        assert np.abs(triple.K_C @ J_q).max() < 1e-8 * np.abs(triple.K_C).max()


def test_buckling_guard():
    L = 50.0
    k = 2.0e4  # N*mm/rad
    chain = ChainModel(
        elements=(
            VirtualSpring(("ry",)),
            ConstTransform(RigidTransform.from_translation([L, 0.0, 0.0])),
        ),
        stiffness=np.array([[k]]),
    )
    cfg = chain.nominal_configuration()
    target = forward_geometry(chain, cfg)
    safe = ChainState(cfg, Wrench(np.array([-0.5 * k / L, 0, 0])), target, 0.0, 0)
    chain_stiffness(chain, safe)  # subcritical load is fine
    critical = ChainState(cfg, Wrench(np.array([-1.1 * k / L, 0, 0])), target, 0.0, 0)
    with pytest.raises(BucklingDetected):
        chain_stiffness(chain, critical)


def test_deficient_chain_solves_in_span_only():
    chain = ChainModel(
        elements=(ConstTransform(RigidTransform.identity()), VirtualSpring(("tx",))),
        stiffness=np.array([[4.0]]),
    )
    t0 = nominal_pose(chain)
    st = solve_chain_equilibrium(chain, PoseDisplacement(np.array([0.5, 0, 0]), np.zeros(3)), t0)
    assert abs(st.wrench.f[0] - 2.0) < 1e-12
    triple = chain_stiffness(chain, st)
    assert triple.deficient_dirs.shape == (6, 5)
    assert abs(triple.K_C[0, 0] - 4.0) < 1e-12
    with pytest.raises(MaxIterationsExceeded):
        solve_chain_equilibrium(
            chain, PoseDisplacement(np.array([0.0, 0.3, 0.0]), np.zeros(3)), t0
        )


def test_force_deflection_zero_at_reference():
    rng = np.random.default_rng(41)
    chain = random_chain(rng)
    t0 = nominal_pose(chain)
    F = chain_force_deflection(chain, t0, t0)
    assert F.norm() < 1e-9


def test_solver_options_validation_and_budget():
    rng = np.random.default_rng(43)
    chain = random_chain(rng, passive=False)
    t0 = nominal_pose(chain)
    with pytest.raises(MaxIterationsExceeded):
        solve_chain_equilibrium(
            chain, rand_target(rng), t0, options=SolveOptions(max_iterations=1)
        )
