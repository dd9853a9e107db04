"""Shared randomized model builders.

Chains drawn here are small but irregular on purpose: frozen actuators,
rotated rigid segments, one full 6-DOF spring (so the end-point is always
reachable), optionally a partial spring and passive joints. Stiffness
matrices are dense SPD with translational entries around t_scale (N/mm)
and rotational entries around r_scale (N*mm/rad).
"""
import numpy as np

from vjmkit.chain import (
    ActuatedFrozen,
    ChainModel,
    ConstTransform,
    GeometricError,
    PassiveJoint,
    VirtualSpring,
)
from vjmkit.aggregation import ParallelModel
from vjmkit.spatial import RigidTransform

SPRING_ALL = ("tx", "ty", "tz", "rx", "ry", "rz")


def rand_transform(rng, span=25.0, angle=0.5):
    phi = rng.uniform(-angle, angle, 3)
    d = rng.uniform(-span, span, 3)
    return RigidTransform.from_rotation_vector(phi, d)


def rand_spd(rng, labels, t_scale=40.0, r_scale=4.0e4):
    """Dense SPD matrix with unit-consistent row/column scaling."""
    n = len(labels)
    A = rng.standard_normal((n, n))
    Q = A @ A.T + n * np.eye(n)
    dinv = 1.0 / np.sqrt(np.diag(Q))
    Q = Q * np.outer(dinv, dinv)
    s = np.array([t_scale if lab.startswith("t") else r_scale for lab in labels])
    s = s * rng.uniform(0.5, 2.0, n)
    return Q * np.outer(np.sqrt(s), np.sqrt(s))


def random_chain(rng, passive=True, extra_spring=True, preload=False):
    axes = ["x", "y", "z"]
    elements = [
        ConstTransform(rand_transform(rng)),
        ActuatedFrozen(axes[rng.integers(3)], float(rng.uniform(-20, 20)),
                       kind=("prismatic", "revolute")[rng.integers(2)]),
        ConstTransform(rand_transform(rng)),
        VirtualSpring(SPRING_ALL),
        ConstTransform(rand_transform(rng)),
    ]
    labels = list(SPRING_ALL)
    if extra_spring and rng.random() < 0.7:
        k = int(rng.integers(1, 4))
        sub = tuple(SPRING_ALL[int(i)] for i in rng.permutation(6)[:k])
        elements += [VirtualSpring(sub), ConstTransform(rand_transform(rng))]
        labels += list(sub)
    if passive:
        for j in range(int(rng.integers(0, 3))):
            elements += [
                PassiveJoint(axes[(j + rng.integers(3)) % 3],
                             kind=("prismatic", "revolute")[rng.integers(2)]),
                ConstTransform(rand_transform(rng, span=10.0)),
            ]
    K = rand_spd(rng, labels)
    th0 = 0.01 * rng.standard_normal(len(labels)) if preload else None
    return ChainModel(elements=tuple(elements), stiffness=K, preload=th0)


def toy_spring_matrix(k_t=5.0, k_r=2000.0):
    return np.diag([k_t, k_t, k_t, k_r, k_r, k_r]).astype(float)


def toy_chain(attach, stiffness=None, error=None):
    """Rigid offset to `attach` followed by one full 6-DOF spring.

    The zero-strain end pose is (I, attach); an optional GeometricError
    perturbation is pre-composed in the base frame.
    """
    attach = np.asarray(attach, dtype=float)
    elements = (
        ConstTransform(RigidTransform.from_translation(attach)),
        VirtualSpring(SPRING_ALL),
    )
    errors = ()
    if error is not None:
        errors = (GeometricError(0, error),)
    K = toy_spring_matrix() if stiffness is None else np.asarray(stiffness, float)
    return ChainModel(elements=elements, stiffness=K, geometric_errors=errors)


def toy_parallel(adapters=None, errors=None, stiffnesses=None, commandable="full"):
    """Retargetable parallel model of toy chains at the given adapters."""
    if adapters is None:
        adapters = [np.array([12.0, 0.0, 0.0]), np.array([-6.0, 10.0, 0.0]),
                    np.array([-6.0, -10.0, 0.0])]
    adapters = [np.asarray(a, dtype=float) for a in adapters]
    m = len(adapters)
    errs = list(errors) if errors is not None else [None] * m
    stiffs = list(stiffnesses) if stiffnesses is not None else [None] * m

    def _retarget(targets, t_ref):
        chains = []
        frames = []
        for i in range(m):
            t_i = targets[i]
            frame = RigidTransform(t_i.R, t_i.d + t_i.R @ adapters[i])
            chains.append(
                ChainModel(
                    elements=(ConstTransform(frame), VirtualSpring(SPRING_ALL)),
                    stiffness=(toy_spring_matrix() if stiffs[i] is None else stiffs[i]),
                    geometric_errors=(() if errs[i] is None
                                      else (GeometricError(0, errs[i]),)),
                )
            )
            frames.append(frame)
        return ParallelModel(
            chains=tuple(chains),
            adapters=tuple(adapters),
            t0=t_ref,
            end_frames=tuple(frames),
            retarget=_retarget,
            commandable=commandable,
        )

    t0 = RigidTransform.identity()
    return _retarget([t0] * m, t0)
