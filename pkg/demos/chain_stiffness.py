"""Cartesian stiffness of a single elastic chain.

Builds a small serial chain by hand: a prismatic actuator frozen at its
commanded value, a rigid segment, and one 6-DOF virtual spring that lumps
the leg compliance. The end-point is then displaced and we compute the
reaction wrench and the 6x6 Cartesian stiffness, cross-checking the
analytic matrix against central finite differences of the
force-deflection map.
"""

import numpy as np

from vjmkit import (
    ActuatedFrozen,
    ChainModel,
    ConstTransform,
    PoseDisplacement,
    RigidTransform,
    VirtualSpring,
    apply_displacement,
    chain_force_deflection,
    chain_stiffness,
    forward_geometry,
    solve_chain_equilibrium,
    unloaded_state,
)

SPRING_AXES = ("tx", "ty", "tz", "rx", "ry", "rz")


def build_chain():
    # actuator along x frozen at 50 mm, then a 200 mm rigid segment,
    # then the lumped leg spring (N/mm, N*mm/rad)
    elements = (
        ActuatedFrozen(np.array([1.0, 0.0, 0.0]), 50.0, kind="prismatic"),
        ConstTransform(RigidTransform.from_translation([0.0, 0.0, 200.0])),
        VirtualSpring(SPRING_AXES),
    )
    K_theta = np.diag([1400.0, 900.0, 900.0, 8.0e5, 8.0e5, 1.2e6])
    return ChainModel(elements=elements, stiffness=K_theta)


def fd_stiffness(chain, t0, h=1e-6):
    """Central differences of the force-deflection map around t0."""
    K = np.zeros((6, 6))
    for j in range(6):
        step = np.zeros(6)
        step[j] = h
        t_plus = apply_displacement(t0, PoseDisplacement(step[:3], step[3:]))
        t_minus = apply_displacement(t0, PoseDisplacement(-step[:3], -step[3:]))
        plus = chain_force_deflection(chain, t_plus, t0)
        minus = chain_force_deflection(chain, t_minus, t0)
        K[:, j] = (plus.as_vector() - minus.as_vector()) / (2.0 * h)
    return K


def main():
    chain = build_chain()
    t0 = forward_geometry(chain, chain.nominal_configuration())
    print("zero-strain end position (mm):", t0.d)

    # displace the end 0.5 mm along y and ask for the holding wrench
    target = PoseDisplacement(np.array([0.0, 0.5, 0.0]), np.zeros(3))
    state = solve_chain_equilibrium(chain, target, t0)
    print("holding force (N):   ", np.round(state.wrench.f, 6))
    print("holding moment (N*mm):", np.round(state.wrench.m, 6))
    print("iterations:", state.iterations)

    # analytic Cartesian stiffness at the unloaded pose
    rest = unloaded_state(chain)
    triple = chain_stiffness(chain, rest)
    print("\nCartesian stiffness K_C (N/mm | N*mm blocks):")
    with np.printoptions(precision=3, suppress=True):
        print(triple.K_C)
    print("rank-deficient directions:", triple.deficient_dirs.shape[1])

    K_fd = fd_stiffness(chain, t0)
    err = np.linalg.norm(K_fd - triple.K_C) / np.linalg.norm(triple.K_C)
    print("finite-difference check, relative Frobenius error: %.3e" % err)


if __name__ == "__main__":
    main()
