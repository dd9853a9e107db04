"""Parallel manipulator assembly: adapters, aggregate stiffness, assembly
of chains whose zero-strain poses disagree.

A ParallelModel holds m chains attached to a rigid platform. adapter[i] is
the offset (platform body frame at the reference orientation) from the
platform reference point to chain i's attachment; the 6x6 adapter Jacobian
transports displacements reference -> end and wrenches end -> reference.

Assembly of non-perfect chains minimizes the total elastic energy

    E(dt) = 1/2 sum_i (eps_i - dt)' K_i (eps_i - dt)

over the platform displacement dt, all quantities transported to the
reference point. eps_i is chain i's zero-strain end displacement computed
from its perturbed geometry at the nominal configuration.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .chain import ChainConfiguration, ChainModel, chain_jacobians, forward_geometry
from .chain_solver import StiffnessTriple, chain_stiffness, unloaded_state
from .errors import DimensionMismatch, SingularAggregateStiffness
from .spatial import (
    PoseDisplacement,
    RigidTransform,
    Wrench,
    adapter_jacobian,
    pose_difference,
    symmetrize,
)

_ALIGN_TOL = 1e-9


@dataclass(frozen=True)
class ParallelModel:
    """m >= 2 chains plus platform geometry and the commanded pose t0.

    end_frames[i] is chain i's commanded (zero-strain, error-free) end
    pose; for a consistently commanded platform it equals t0 shifted by the
    adapter offset. retarget, when provided by a builder, maps a list of m
    commanded platform poses (plus a reference pose) to a rebuilt model
    with actuators recomputed; it is required by the compensation routines.

    commandable says which part of the platform pose the actuators can
    steer: "full" or "translation". A purely translational machine cannot
    command its orientation, so compensation must close the loop on the
    position only.
    """

    chains: tuple
    adapters: tuple
    t0: RigidTransform
    end_frames: tuple = ()
    retarget: object = None
    validate_alignment: bool = True
    commandable: str = "full"

    def __post_init__(self):
        if self.commandable not in ("full", "translation"):
            raise DimensionMismatch("commandable must be 'full' or 'translation'")
        chains = tuple(self.chains)
        if len(chains) < 2:
            raise DimensionMismatch("parallel model needs at least two chains")
        adapters = tuple(np.asarray(a, dtype=float) for a in self.adapters)
        if len(adapters) != len(chains):
            raise DimensionMismatch("one adapter offset per chain required")
        for a in adapters:
            if a.shape != (3,):
                raise DimensionMismatch("adapter offsets must be 3-vectors")
        end_frames = tuple(self.end_frames)
        if not end_frames:
            end_frames = tuple(
                RigidTransform(self.t0.R, self.t0.d + self.t0.R @ a) for a in adapters
            )
        if len(end_frames) != len(chains):
            raise DimensionMismatch("one end frame per chain required")
        object.__setattr__(self, "chains", chains)
        object.__setattr__(self, "adapters", adapters)
        object.__setattr__(self, "end_frames", end_frames)
        if self.validate_alignment:
            for i, chain in enumerate(chains):
                perfect = replace(chain, geometric_errors=())
                g = forward_geometry(perfect, perfect.nominal_configuration())
                gap = pose_difference(g, end_frames[i]).norm()
                if gap > _ALIGN_TOL:
                    raise DimensionMismatch(
                        f"chain {i}: nominal end pose misses its platform attachment "
                        f"by {gap:.3e} (mixed mm/rad)"
                    )

    @property
    def n_chains(self) -> int:
        return len(self.chains)

    def adapter_world(self, i: int) -> np.ndarray:
        """Reference-to-attachment offset in base axes at the commanded pose."""
        return self.t0.R @ self.adapters[i]

    def retarget_common(self, t_cmd: RigidTransform) -> "ParallelModel":
        if self.retarget is None:
            raise DimensionMismatch("model has no retarget hook; compensation unavailable")
        return self.retarget([t_cmd] * self.n_chains, t_cmd)

    def retarget_per_chain(self, targets, t_ref: RigidTransform) -> "ParallelModel":
        if self.retarget is None:
            raise DimensionMismatch("model has no retarget hook; compensation unavailable")
        targets = list(targets)
        if len(targets) != self.n_chains:
            raise DimensionMismatch("one commanded pose per chain required")
        return self.retarget(targets, t_ref)


def chain_errors(model: ParallelModel) -> list:
    """Zero-strain end displacement of each chain against its commanded frame.

    Evaluates the perturbed forward geometry at the nominal configuration;
    error-free chains return exactly zero.
    """
    eps = []
    for chain, frame in zip(model.chains, model.end_frames):
        g = forward_geometry(chain, chain.nominal_configuration())
        eps.append(pose_difference(g, frame))
    return eps


def unloaded_triples(model: ParallelModel) -> list:
    """Chain stiffness triples at each chain's own zero-wrench equilibrium."""
    return [chain_stiffness(c, unloaded_state(c)) for c in model.chains]


def aggregate_stiffness(stiffnesses, offsets) -> np.ndarray:
    """Platform stiffness: sum of adapter congruences of chain stiffnesses.

    stiffnesses are 6x6 chain matrices at the chain end-points (or triples,
    whose K_C is taken); offsets are reference-to-end 3-vectors in base axes.
    Summation runs in chain order for reproducibility.
    """
    stiff = [s.K_C if isinstance(s, StiffnessTriple) else np.asarray(s, float) for s in stiffnesses]
    offsets = list(offsets)
    if len(stiff) != len(offsets):
        raise DimensionMismatch("one offset per stiffness matrix required")
    K = np.zeros((6, 6))
    for Kc, v in zip(stiff, offsets):
        J = adapter_jacobian(v)
        K = K + J.T @ Kc @ J
    return symmetrize(K, tol=1e-8, what="aggregate stiffness")


def joint_sensitivities_unloaded(triple: StiffnessTriple, offset) -> tuple:
    """Passive and spring coordinate response to reference-point displacement.

    Returns (S_q, S_theta): dq = S_q @ dt_ref, dtheta = S_theta @ dt_ref for
    small unloaded platform displacements.
    """
    J = adapter_jacobian(offset)
    return triple.K_Cq @ J, triple.K_Ct @ J


@dataclass(frozen=True)
class AssemblyReport:
    """Result of assembling non-perfect chains with no external load.

    delta_t is the platform displacement at the reference point. Per-chain
    quantities are expressed at the chain end-points: chain_delta[i] is the
    deviation from chain i's zero-strain pose, chain_wrench[i] the wrench
    the chain applies through the platform attachment (internal loading),
    tau_theta[i] the generalized spring loadings, dtheta[i]/dq[i] the spring
    and passive coordinate changes. energy is in N*mm.
    """

    delta_t: PoseDisplacement
    chain_delta: tuple
    chain_wrench: tuple
    tau_theta: tuple
    dtheta: tuple
    dq: tuple
    energy: float
    balance_residual: float


def assemble_nonperfect(
    model: ParallelModel,
    errors=None,
    triples=None,
) -> AssemblyReport:
    """Energy-minimizing platform pose for chains with inconsistent geometry.

    errors default to chain_errors(model); triples default to the unloaded
    chain stiffnesses. The 6x6 solve gets one step of iterative refinement
    so strain-free assemblies come out at roundoff level.
    """
    m = model.n_chains
    if errors is None:
        errors = chain_errors(model)
    if triples is None:
        triples = unloaded_triples(model)
    if len(errors) != m or len(triples) != m:
        raise DimensionMismatch("need one error and one stiffness triple per chain")

    offs = [model.adapter_world(i) for i in range(m)]
    J_ad = [adapter_jacobian(v) for v in offs]
    K_end = [t.K_C for t in triples]
    K_ref = [J.T @ K @ J for J, K in zip(J_ad, K_end)]
    eps_end = [e.as_vector() for e in errors]
    # adapter inverse is the adapter of the negated offset
    eps_ref = [adapter_jacobian(-v) @ e for v, e in zip(offs, eps_end)]

    S = np.zeros((6, 6))
    rhs = np.zeros(6)
    for K, e in zip(K_ref, eps_ref):
        S += K
        rhs += K @ e
    S = (S + S.T) / 2.0
    w = np.linalg.eigvalsh(S)
    if w.min() <= 1e-12 * max(w.max(), 0.0) or w.max() <= 0.0:
        raise SingularAggregateStiffness(
            "aggregate stiffness is singular; assembly pose is not unique"
        )
    dt = np.linalg.solve(S, rhs)
    dt = dt + np.linalg.solve(S, rhs - S @ dt)

    chain_delta = []
    chain_wrench = []
    tau_theta = []
    dtheta = []
    dq = []
    energy = 0.0
    balance = np.zeros(6)
    for i, chain in enumerate(model.chains):
        d_i = J_ad[i] @ dt - eps_end[i]
        F_i = K_end[i] @ d_i
        J_q, J_t = chain_jacobians(chain, chain.nominal_configuration())
        chain_delta.append(PoseDisplacement.from_vector(d_i))
        chain_wrench.append(Wrench.from_vector(F_i))
        tau_theta.append(J_t.T @ F_i)
        dtheta.append(triples[i].K_Ct @ d_i)
        dq.append(triples[i].K_Cq @ d_i)
        energy += 0.5 * float(d_i @ K_end[i] @ d_i)
        balance += J_ad[i].T @ F_i

    return AssemblyReport(
        delta_t=PoseDisplacement.from_vector(dt),
        chain_delta=tuple(chain_delta),
        chain_wrench=tuple(chain_wrench),
        tau_theta=tuple(tau_theta),
        dtheta=tuple(dtheta),
        dq=tuple(dq),
        energy=energy,
        balance_residual=float(np.linalg.norm(balance)),
    )
