"""Assembling chains whose unloaded end poses disagree.

When the chains of a parallel structure carry geometric errors, their
zero-strain end poses no longer coincide and the platform settles at a
compromise pose with self-balancing internal forces, before any external
load is applied.

Two experiments:
  1. a two-chain case with scalar springs k1 = 1, k2 = 3 N/mm and a 1 mm
     error on the second chain, whose settled pose is the stiffness-
     weighted average 0.75 mm;
  2. a three-chain spatial assembly with a random error on each chain,
     checking that the transported internal wrenches cancel.
"""

import numpy as np

from vjmkit import (
    ChainModel,
    ConstTransform,
    GeometricError,
    ParallelModel,
    RigidTransform,
    VirtualSpring,
    assemble_nonperfect,
    transport_wrench,
)

AXES = ("tx", "ty", "tz", "rx", "ry", "rz")


def scalar_chain(k, error_mm=0.0):
    """One spring, stiff in every direction except x where it has k."""
    K = np.diag([k, 1e4, 1e4, 1e7, 1e7, 1e7])
    errors = ()
    if error_mm != 0.0:
        shift = RigidTransform.from_translation([error_mm, 0.0, 0.0])
        errors = (GeometricError(0, shift),)
    elements = (ConstTransform(RigidTransform.identity()), VirtualSpring(AXES))
    return ChainModel(elements=elements, stiffness=K, geometric_errors=errors)


def two_chain_closed_form():
    chains = (scalar_chain(1.0), scalar_chain(3.0, error_mm=1.0))
    adapters = (np.zeros(3), np.zeros(3))
    model = ParallelModel(chains=chains, adapters=adapters,
                          t0=RigidTransform.identity())
    report = assemble_nonperfect(model)
    dt = report.delta_t.p[0]
    print("two chains, k = (1, 3), 1 mm error on the stiffer one")
    print("  settled platform shift: %.12f mm (expected 0.75)" % dt)
    f_sum = report.chain_wrench[0].f + report.chain_wrench[1].f
    print("  internal force balance: |F1 + F2| = %.3e N" % np.linalg.norm(f_sum))
    print("  stored energy: %.6f N*mm" % report.energy)


def spatial_assembly(seed=4):
    rng = np.random.default_rng(seed)
    adapters = (np.array([12.0, 0.0, 0.0]),
                np.array([-6.0, 10.0, 0.0]),
                np.array([-6.0, -10.0, 0.0]))
    chains = []
    for a in adapters:
        err = RigidTransform.from_rotation_vector(
            1e-3 * rng.uniform(-1, 1, 3), 0.3 * rng.uniform(-1, 1, 3))
        K = np.diag([8.0, 8.0, 8.0, 3000.0, 3000.0, 3000.0])
        frame = ConstTransform(RigidTransform.from_translation(a))
        chains.append(ChainModel(elements=(frame, VirtualSpring(AXES)),
                                 stiffness=K,
                                 geometric_errors=(GeometricError(0, err),)))
    model = ParallelModel(chains=tuple(chains), adapters=adapters,
                          t0=RigidTransform.identity())
    report = assemble_nonperfect(model)

    print("\nthree spatial chains with random assembly errors")
    print("  platform shift (mm): ", np.round(report.delta_t.p, 6))
    print("  platform tilt (rad): ", np.round(report.delta_t.phi, 8))
    # transport every chain wrench to the platform origin and sum
    total = np.zeros(6)
    for w, a in zip(report.chain_wrench, adapters):
        moved = transport_wrench(w, a)
        total += moved.as_vector()
    print("  residual of transported wrenches: %.3e" % np.linalg.norm(total))
    print("  reported balance residual:        %.3e" % report.balance_residual)


if __name__ == "__main__":
    two_chain_closed_form()
    spatial_assembly()
