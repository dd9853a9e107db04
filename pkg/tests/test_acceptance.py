"""End-to-end acceptance checks.

Each criterion is one test: stated tolerance, stated runtime budget where
applicable, one pass/fail line from the runner. The oracles (penalty
minimization, finite differences, stacked least squares, scipy minimizers)
are independent of the library's solvers.
"""
import time

import numpy as np
import pytest
import scipy.optimize

from conftest import SPRING_ALL, rand_spd, rand_transform, random_chain, toy_parallel, toy_spring_matrix
from oracles import (
    TIGHT,
    penalty_wrench_extrapolated,
    fd_cartesian_stiffness,
    solve_with_small_end_moment,
    translational_scale,
)
from vjmkit.aggregation import assemble_nonperfect, chain_errors
from vjmkit.chain import (
    ActuatedFrozen,
    ChainModel,
    ConstTransform,
    PassiveJoint,
    VirtualSpring,
    forward_geometry,
)
from vjmkit.chain_solver import SolveOptions, chain_stiffness, solve_chain_equilibrium
from vjmkit.cli import main as cli_main
from vjmkit.loaded import (
    LoadedSolveSettings,
    invert_compliance,
    manipulator_force,
    unloaded_shift,
)
from vjmkit.orthoglide import (
    ErrorCase,
    MillingScenario,
    OrthoglideParams,
    build_orthoglide,
    run_assembly_study,
    run_milling_study,
)
from vjmkit.spatial import (
    PoseDisplacement,
    RigidTransform,
    Wrench,
    adapter_jacobian,
    apply_displacement,
)

FINE = LoadedSolveSettings(
    wrench_tol=1e-12,
    chain_options=SolveOptions(pose_tol=1e-12, step_tol=1e-12),
)
Q_POINTS = ["Q1", "Q2", "Q3", "Q4", "Q5"]


def rand_target(rng, p=1.0, r=0.01):
    return PoseDisplacement(p * rng.uniform(-1, 1, 3), r * rng.uniform(-1, 1, 3))


def nominal_pose(chain):
    return forward_geometry(chain, chain.nominal_configuration())


def relative_balance(model, wrenches, offsets):
    total = np.zeros(6)
    scale = 0.0
    for off, w in zip(offsets, wrenches):
        t = adapter_jacobian(off).T @ w.as_vector()
        total += t
        scale += np.linalg.norm(t)
    return np.linalg.norm(total) / max(scale, 1e-6)


def test_criterion_01_stiffness_matches_force_deflection_fd():
    start = time.monotonic()
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(50):
        chain = random_chain(rng)
        t0 = nominal_pose(chain)
        state = solve_with_small_end_moment(chain, rand_target(rng, p=0.5, r=0.005), t0)
        K = chain_stiffness(chain, state).K_C
        K_fd = fd_cartesian_stiffness(chain, state)
        worst = max(worst, np.linalg.norm(K_fd - K) / np.linalg.norm(K))
    elapsed = time.monotonic() - start
    assert worst < 1e-4
    assert elapsed < 30.0
    print(f"criterion 01 PASS: worst relative Frobenius gap {worst:.2e}, {elapsed:.1f}s")


def small_random_chain(rng):
    """Short chains keep the penalty oracle's roundoff floor far below 1e-6."""
    axes = "xyz"

    def seg(span=6.0):
        return ConstTransform(rand_transform(rng, span=span, angle=0.4))

    elements = [
        seg(),
        ActuatedFrozen(axes[rng.integers(3)], float(rng.uniform(-4, 4)),
                       kind=("prismatic", "revolute")[rng.integers(2)]),
        seg(),
        VirtualSpring(SPRING_ALL),
        seg(),
    ]
    if rng.random() < 0.5:
        elements += [
            PassiveJoint(axes[rng.integers(3)],
                         kind=("prismatic", "revolute")[rng.integers(2)]),
            seg(3.0),
        ]
    K = rand_spd(rng, SPRING_ALL, t_scale=40.0, r_scale=4000.0)
    return ChainModel(elements=tuple(elements), stiffness=K)


def test_criterion_02_wrench_matches_penalty_minimization():
    start = time.monotonic()
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(20):
        chain = small_random_chain(rng)
        t0 = nominal_pose(chain)
        target = rand_target(rng, p=0.4, r=0.01)
        state = solve_chain_equilibrium(chain, target, t0, options=TIGHT)
        F_oracle = penalty_wrench_extrapolated(
            chain, apply_displacement(t0, target), translational_scale(chain)
        )
        F = state.wrench.as_vector()
        worst = max(worst, np.linalg.norm(F - F_oracle) / np.linalg.norm(F_oracle))
    elapsed = time.monotonic() - start
    assert worst < 1e-6
    assert elapsed < 60.0
    print(f"criterion 02 PASS: worst relative wrench gap {worst:.2e}, {elapsed:.1f}s")


def padded_scalar_spring(k_x):
    K = toy_spring_matrix()
    K[0, 0] = k_x
    return K


def test_criterion_03_two_chain_assembly_closed_form():
    zero = np.zeros(3)
    model = toy_parallel(
        adapters=[zero, zero],
        stiffnesses=[padded_scalar_spring(1.0), padded_scalar_spring(3.0)],
        errors=[RigidTransform.identity(),
                RigidTransform.from_translation([1.0, 0.0, 0.0])],
    )
    rep = assemble_nonperfect(model)
    dt = rep.delta_t.as_vector()
    assert abs(dt[0] - 0.75) < 1e-12
    assert np.abs(dt[1:]).max() < 1e-12
    F_sum = rep.chain_wrench[0].as_vector() + rep.chain_wrench[1].as_vector()
    assert np.abs(F_sum).max() < 1e-12

    # independent oracle: numeric minimization of the quadratic strain energy
    K = [padded_scalar_spring(1.0), padded_scalar_spring(3.0)]
    eps = [np.zeros(6), np.array([1.0, 0, 0, 0, 0, 0])]

    def energy(x):
        return 0.5 * sum((x - e) @ Ki @ (x - e) for Ki, e in zip(K, eps))

    def grad(x):
        return sum(Ki @ (x - e) for Ki, e in zip(K, eps))

    res = scipy.optimize.minimize(energy, np.zeros(6), jac=grad,
                                  method="BFGS", options={"gtol": 1e-12})
    assert np.abs(res.x - dt).max() < 1e-6
    print(f"criterion 03 PASS: delta_t_x - 0.75 = {dt[0] - 0.75:.1e}")


def test_criterion_04_identical_errors_relocate_strain_free():
    eps = RigidTransform.from_rotation_vector(
        [1.0e-3, -2.0e-3, 1.5e-3], [0.3, -0.2, 0.25]
    )
    zero = np.zeros(3)
    model = toy_parallel(adapters=[zero, zero, zero], errors=[eps, eps, eps])
    rep = assemble_nonperfect(model)
    eps_vec = chain_errors(model)[0].as_vector()
    assert np.linalg.norm(eps_vec) > 0.3
    assert np.abs(rep.delta_t.as_vector() - eps_vec).max() < 1e-12
    internals = [rep.energy, rep.balance_residual]
    internals += [np.abs(v).max() for v in rep.dtheta]
    internals += [np.abs(v).max() for v in rep.tau_theta]
    internals += [np.abs(w.as_vector()).max() for w in rep.chain_wrench]
    assert max(internals) < 1e-12

    # pure translations transport unchanged, so offset adapters work too
    shift_only = RigidTransform.from_translation([0.4, -0.1, 0.2])
    model = toy_parallel(errors=[shift_only] * 3)
    rep = assemble_nonperfect(model)
    assert np.abs(rep.delta_t.p - shift_only.d).max() < 1e-12
    assert np.abs(rep.delta_t.phi).max() < 1e-12
    assert rep.energy < 1e-12
    nonlinear, _ = unloaded_shift(model, FINE)
    assert np.abs(nonlinear.as_vector() - rep.delta_t.as_vector()).max() < 1e-9
    print("criterion 04 PASS: delta_t = eps, internal quantities < 1e-12")


def test_criterion_05_force_balance_over_random_draws():
    rng = np.random.default_rng(505)
    worst_asm = 0.0
    worst_shift = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 5))
        adapters = [rng.uniform(-12.0, 12.0, 3) for _ in range(n)]
        stiff = [rand_spd(rng, SPRING_ALL, t_scale=8.0, r_scale=3000.0)
                 for _ in range(n)]
        errors = [rand_transform(rng, span=0.5, angle=2e-3) for _ in range(n)]
        model = toy_parallel(adapters=adapters, errors=errors, stiffnesses=stiff)

        rep = assemble_nonperfect(model)
        offs = [model.adapter_world(i) for i in range(n)]
        worst_asm = max(worst_asm, relative_balance(model, rep.chain_wrench, offs))

        _, state = unloaded_shift(model, FINE)
        offs = [state.t.R @ model.adapters[i] for i in range(n)]
        wrenches = [cs.wrench for cs in state.chain_states]
        worst_shift = max(worst_shift, relative_balance(model, wrenches, offs))
    assert worst_asm < 1e-9
    assert worst_shift < 1e-9
    print(f"criterion 05 PASS: worst relative balance {worst_asm:.2e} (assembly), "
          f"{worst_shift:.2e} (unloaded shift)")


def test_criterion_06_linearization_gap_slope():
    rng = np.random.default_rng(59)
    dirs = rng.standard_normal((3, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    scales = np.logspace(-3.0, 0.0, 7)
    gaps = []
    for s in scales:
        errors = [RigidTransform.from_translation(s * d) for d in dirs]
        model = toy_parallel(errors=errors)
        linear = assemble_nonperfect(model).delta_t.as_vector()
        nonlinear, _ = unloaded_shift(model, FINE)
        gaps.append(np.linalg.norm(nonlinear.as_vector() - linear))
    slope = np.polyfit(np.log(scales), np.log(gaps), 1)[0]
    assert slope >= 1.9
    print(f"criterion 06 PASS: log-log slope {slope:.4f} "
          f"(gaps {gaps[0]:.1e}..{gaps[-1]:.1e})")


def test_criterion_07_compliance_round_trip():
    start = time.monotonic()
    model = build_orthoglide(OrthoglideParams())
    rng = np.random.default_rng(707)
    worst = 0.0
    for _ in range(50):
        f = rng.standard_normal(3)
        f *= rng.uniform(0.0, 250.0) / np.linalg.norm(f)
        m = rng.standard_normal(3)
        m *= rng.uniform(0.0, 10.0e3) / np.linalg.norm(m)
        W = Wrench(f, m)
        loaded = invert_compliance(model, W)
        back = manipulator_force(model, loaded.t, warm=loaded, with_stiffness=False)
        d = back.total.as_vector() - W.as_vector()
        err = np.sqrt(d[:3] @ d[:3] + (d[3:] @ d[3:]) * 1e-6)
        worst = max(worst, err)
    elapsed = time.monotonic() - start
    assert worst < 1e-6
    assert elapsed < 120.0
    print(f"criterion 07 PASS: worst round-trip error {worst:.2e}, {elapsed:.1f}s")


def test_criterion_08_milling_compensation():
    scenario = MillingScenario(samples=11)
    W = scenario.wrench()
    assert abs(np.linalg.norm(W.f) - 217.0) <= 0.5
    study = run_milling_study(
        OrthoglideParams(), scenario, ErrorCase("A"), compensate=True
    )
    uncompensated = np.linalg.norm(study.total[:, :3], axis=1)
    residual = np.linalg.norm(study.residual[:, :3], axis=1)
    assert uncompensated.max() > 0.1
    assert uncompensated.max() < 2.0
    assert residual.max() < 1e-4
    print(f"criterion 08 PASS: uncompensated max {uncompensated.max():.3f} mm, "
          f"compensated max {residual.max():.2e} mm")


def test_criterion_09_case_a_zero_loading_pattern():
    rows = run_assembly_study(OrthoglideParams(), ErrorCase("A"), points=Q_POINTS)
    for row in rows:
        assert row.theta_t_max_mm < 1e-10
        assert row.theta_r_max_deg < 1e-10
        assert row.tau_t_max_N < 1e-10
        assert row.tau_r_max_Nm < 1e-10
        assert np.linalg.norm(row.delta_t_mm) > 1e-3
        assert row.dq_max_mm > 1e-3
    print("criterion 09 PASS: case A strain-free at "
          + ", ".join(r.point for r in rows))


def test_criterion_10_case_b_moment_loading_pattern():
    params = OrthoglideParams()
    rows = run_assembly_study(params, ErrorCase("B"), points=Q_POINTS)
    worst_balance = 0.0
    for row in rows:
        assert row.tau_t_max_N < 1e-10
        assert row.tau_r_max_Nm > 1e-3
        assert row.moment_max_Nm > 1e-3
        model = build_orthoglide(params, ErrorCase("B"), params.point(row.point))
        rep = assemble_nonperfect(model)
        offs = [model.adapter_world(i) for i in range(3)]
        worst_balance = max(
            worst_balance, relative_balance(model, rep.chain_wrench, offs)
        )
    assert worst_balance < 1e-9
    print(f"criterion 10 PASS: case B moments only, "
          f"worst relative balance {worst_balance:.2e}")


def test_criterion_11_trajectory_csv_determinism(tmp_path):
    config = tmp_path / "machine.yaml"
    config.write_text(
        "format_version: 1\n"
        "model: {type: orthoglide}\n"
        "error_case: {kind: A}\n"
        "scenario:\n"
        "  trajectory: {start: Q2, end: Q5, samples: 7}\n",
        encoding="utf-8",
    )
    payloads = []
    for name in ("first", "second"):
        out = tmp_path / name
        rc = cli_main(["trajectory", "--config", str(config), "--out", str(out)])
        assert rc == 0
        payloads.append((out / "trajectory.csv").read_bytes())
    assert payloads[0] == payloads[1]
    print("criterion 11 PASS: byte-identical trajectory CSV across runs")
