"""Serial chain description: rigid elements, passive joints, virtual springs.

A chain is an ordered list of elements from base to tip:

  ConstTransform   fixed rigid transform
  ActuatedFrozen   actuated joint held at a fixed value (errors attach here)
  PassiveJoint     friction-free 1-DOF joint, coordinate collected in q
  VirtualSpring    lumped elasticity, 1..6 local directions, coordinates in theta

Spring coordinates act as a sequence of elementary motions in the listed
axis order (translations tx/ty/tz in mm, rotations rx/ry/rz in rad, all in
the local frame reached before the spring). Geometric errors pre-compose a
perturbation transform onto the element they index, i.e. they perturb the
frame in which that element acts.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence, Union

import numpy as np

from .errors import DimensionMismatch
from .spatial import RigidTransform, Wrench, rotation_exp

SPRING_AXES = ("tx", "ty", "tz", "rx", "ry", "rz")
_UNIT = {
    "tx": ("prismatic", np.array([1.0, 0.0, 0.0])),
    "ty": ("prismatic", np.array([0.0, 1.0, 0.0])),
    "tz": ("prismatic", np.array([0.0, 0.0, 1.0])),
    "rx": ("revolute", np.array([1.0, 0.0, 0.0])),
    "ry": ("revolute", np.array([0.0, 1.0, 0.0])),
    "rz": ("revolute", np.array([0.0, 0.0, 1.0])),
}

HESSIAN_FD_STEP = 1e-5

_AXIS_BY_NAME = {
    "x": np.array([1.0, 0.0, 0.0]),
    "y": np.array([0.0, 1.0, 0.0]),
    "z": np.array([0.0, 0.0, 1.0]),
}


def _unit_axis(axis, what: str) -> np.ndarray:
    if isinstance(axis, str):
        if axis not in _AXIS_BY_NAME:
            raise DimensionMismatch(f"{what}: axis name must be one of x, y, z")
        return _AXIS_BY_NAME[axis].copy()
    a = np.asarray(axis, dtype=float)
    if a.shape != (3,):
        raise DimensionMismatch(f"{what}: axis must be a 3-vector")
    n = np.linalg.norm(a)
    if abs(n - 1.0) > 1e-9:
        raise DimensionMismatch(f"{what}: axis must be unit length (|a| = {n:.12f})")
    return a / n


@dataclass(frozen=True)
class ConstTransform:
    transform: RigidTransform


@dataclass(frozen=True)
class ActuatedFrozen:
    """Actuated joint frozen at `value`; kind is 'prismatic' or 'revolute'."""

    axis: np.ndarray
    value: float
    kind: str = "prismatic"

    def __post_init__(self):
        if self.kind not in ("prismatic", "revolute"):
            raise DimensionMismatch(f"actuated joint kind {self.kind!r} unknown")
        object.__setattr__(self, "axis", _unit_axis(self.axis, "actuated joint"))
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True)
class PassiveJoint:
    axis: np.ndarray
    kind: str = "revolute"

    def __post_init__(self):
        if self.kind not in ("prismatic", "revolute"):
            raise DimensionMismatch(f"passive joint kind {self.kind!r} unknown")
        object.__setattr__(self, "axis", _unit_axis(self.axis, "passive joint"))


@dataclass(frozen=True)
class VirtualSpring:
    """Elastic element with an ordered subset of the 6 local directions."""

    axes: tuple

    def __post_init__(self):
        axes = tuple(self.axes)
        if not axes:
            raise DimensionMismatch("virtual spring needs at least one axis")
        for a in axes:
            if a not in SPRING_AXES:
                raise DimensionMismatch(f"virtual spring axis {a!r} not in {SPRING_AXES}")
        if len(set(axes)) != len(axes):
            raise DimensionMismatch("virtual spring axes must be distinct")
        object.__setattr__(self, "axes", axes)

    @property
    def dof(self) -> int:
        return len(self.axes)


ChainElement = Union[ConstTransform, ActuatedFrozen, PassiveJoint, VirtualSpring]


@dataclass(frozen=True)
class GeometricError:
    """Perturbation transform pre-composed onto elements[element]."""

    element: int
    perturbation: RigidTransform


@dataclass(frozen=True)
class ChainConfiguration:
    """Coordinate vectors: passive q and spring deflections theta."""

    q: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.q, dtype=float))
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        if q.ndim != 1 or theta.ndim != 1:
            raise DimensionMismatch("configuration vectors must be 1-D")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "theta", theta)


# compiled atom kinds
_CONST, _PRISM, _REVOL = 0, 1, 2
# coordinate classes
_PASSIVE, _VIRTUAL = 0, 1


@dataclass(frozen=True)
class _Atom:
    kind: int
    R: np.ndarray | None  # const atoms only
    d: np.ndarray | None
    axis: np.ndarray | None  # joint atoms only
    coord_class: int
    coord: int


@dataclass(frozen=True)
class ChainModel:
    """Chain elements plus spring stiffness (SPD, block-diagonal per spring),
    optional preload, geometric errors and nominal passive coordinates.

    stiffness maps theta deflections to generalized spring forces in
    (N, N*mm) units; preload theta0 is the unloaded spring elongation.
    """

    elements: tuple
    stiffness: np.ndarray
    preload: np.ndarray | None = None
    geometric_errors: tuple = ()
    q_nominal: np.ndarray | None = None

    def __post_init__(self):
        elements = tuple(self.elements)
        n_q = sum(1 for e in elements if isinstance(e, PassiveJoint))
        n_t = sum(e.dof for e in elements if isinstance(e, VirtualSpring))
        K = np.asarray(self.stiffness, dtype=float)
        if K.shape != (n_t, n_t):
            raise DimensionMismatch(
                f"stiffness: expected ({n_t}, {n_t}) for {n_t} spring coordinates, got {K.shape}"
            )
        if n_t:
            if np.abs(K - K.T).max() > 1e-9 * max(np.abs(K).max(), 1.0):
                raise DimensionMismatch("stiffness must be symmetric")
            K = (K + K.T) / 2.0
            if np.linalg.eigvalsh(K).min() <= 0.0:
                raise DimensionMismatch("stiffness must be positive definite")
        preload = self.preload
        preload = np.zeros(n_t) if preload is None else np.asarray(preload, dtype=float)
        if preload.shape != (n_t,):
            raise DimensionMismatch(f"preload: expected ({n_t},), got {preload.shape}")
        q_nom = self.q_nominal
        q_nom = np.zeros(n_q) if q_nom is None else np.asarray(q_nom, dtype=float)
        if q_nom.shape != (n_q,):
            raise DimensionMismatch(f"q_nominal: expected ({n_q},), got {q_nom.shape}")
        errors = tuple(self.geometric_errors)
        for ge in errors:
            if not isinstance(ge, GeometricError):
                raise DimensionMismatch("geometric_errors entries must be GeometricError")
            if not 0 <= ge.element < len(elements):
                raise DimensionMismatch(f"geometric error element index {ge.element} out of range")
        object.__setattr__(self, "elements", elements)
        object.__setattr__(self, "stiffness", K)
        object.__setattr__(self, "preload", preload)
        object.__setattr__(self, "geometric_errors", errors)
        object.__setattr__(self, "q_nominal", q_nom)

    @property
    def n_passive(self) -> int:
        return sum(1 for e in self.elements if isinstance(e, PassiveJoint))

    @property
    def n_spring(self) -> int:
        return sum(e.dof for e in self.elements if isinstance(e, VirtualSpring))

    def nominal_configuration(self) -> ChainConfiguration:
        """Unloaded equilibrium coordinates: nominal q, theta = preload."""
        return ChainConfiguration(self.q_nominal.copy(), self.preload.copy())

    def spring_axis_labels(self) -> tuple:
        """Axis label per theta coordinate, in coordinate order."""
        labels = []
        for e in self.elements:
            if isinstance(e, VirtualSpring):
                labels.extend(e.axes)
        return tuple(labels)

    @cached_property
    def characteristic_length(self) -> float:
        """Scale (mm) for trust limits: total rigid translation, floored at 1."""
        total = 0.0
        for a in self._atoms:
            if a.kind == _CONST:
                total += float(np.linalg.norm(a.d))
        return max(total, 1.0)

    @cached_property
    def _atoms(self) -> tuple:
        perturb: dict[int, list[RigidTransform]] = {}
        for ge in self.geometric_errors:
            perturb.setdefault(ge.element, []).append(ge.perturbation)
        atoms: list[_Atom] = []
        iq = it = 0
        for idx, elem in enumerate(self.elements):
            for P in perturb.get(idx, ()):  # perturbations act in the element's entry frame
                atoms.append(_Atom(_CONST, P.R, P.d, None, -1, -1))
            if isinstance(elem, ConstTransform):
                t = elem.transform
                atoms.append(_Atom(_CONST, t.R, t.d, None, -1, -1))
            elif isinstance(elem, ActuatedFrozen):
                if elem.kind == "prismatic":
                    atoms.append(_Atom(_CONST, np.eye(3), elem.axis * elem.value, None, -1, -1))
                else:
                    atoms.append(_Atom(_CONST, rotation_exp(elem.axis * elem.value), np.zeros(3), None, -1, -1))
            elif isinstance(elem, PassiveJoint):
                kind = _PRISM if elem.kind == "prismatic" else _REVOL
                atoms.append(_Atom(kind, None, None, elem.axis, _PASSIVE, iq))
                iq += 1
            elif isinstance(elem, VirtualSpring):
                for label in elem.axes:
                    jkind, axis = _UNIT[label]
                    kind = _PRISM if jkind == "prismatic" else _REVOL
                    atoms.append(_Atom(kind, None, None, axis, _VIRTUAL, it))
                    it += 1
            else:
                raise DimensionMismatch(f"unknown element type {type(elem).__name__}")
        return tuple(atoms)

    def _check_cfg(self, cfg: ChainConfiguration):
        if cfg.q.shape != (self.n_passive,) or cfg.theta.shape != (self.n_spring,):
            raise DimensionMismatch(
                f"configuration ({cfg.q.shape[0]}, {cfg.theta.shape[0]}) does not match "
                f"chain ({self.n_passive} passive, {self.n_spring} spring)"
            )


def _forward_raw(chain: ChainModel, q: np.ndarray, theta: np.ndarray):
    """Compose all atoms; returns (R, p) of the end frame."""
    R = np.eye(3)
    p = np.zeros(3)
    for a in chain._atoms:
        if a.kind == _CONST:
            p = p + R @ a.d
            R = R @ a.R
        else:
            x = q[a.coord] if a.coord_class == _PASSIVE else theta[a.coord]
            if a.kind == _PRISM:
                p = p + R @ (a.axis * x)
            else:
                R = R @ rotation_exp(a.axis * x)
    return R, p


def forward_geometry(chain: ChainModel, cfg: ChainConfiguration) -> RigidTransform:
    """End-frame pose in the base frame."""
    chain._check_cfg(cfg)
    R, p = _forward_raw(chain, cfg.q, cfg.theta)
    return RigidTransform(R, p)


def _jacobian_raw(chain: ChainModel, q: np.ndarray, theta: np.ndarray):
    """Analytic end-point Jacobians (J_q, J_theta), base frame, end point.

    Columns are twists: translations stacked over rotations. Prismatic
    columns are (w, 0); revolute columns are (w x (p_end - o), w) with w the
    world axis and o the joint origin.
    """
    R = np.eye(3)
    p = np.zeros(3)
    rows = []  # (kind, world axis, origin, coord_class, coord)
    for a in chain._atoms:
        if a.kind == _CONST:
            p = p + R @ a.d
            R = R @ a.R
        else:
            w = R @ a.axis
            rows.append((a.kind, w, p, a.coord_class, a.coord))
            x = q[a.coord] if a.coord_class == _PASSIVE else theta[a.coord]
            if a.kind == _PRISM:
                p = p + w * x
            else:
                R = R @ rotation_exp(a.axis * x)
    n_q, n_t = chain.n_passive, chain.n_spring
    J_q = np.zeros((6, n_q))
    J_t = np.zeros((6, n_t))
    for kind, w, o, cls, coord in rows:
        J = J_q if cls == _PASSIVE else J_t
        if kind == _PRISM:
            J[:3, coord] = w
        else:
            r = p - o
            # w x r unrolled; np.cross dominates the profile on 3-vectors
            J[0, coord] = w[1] * r[2] - w[2] * r[1]
            J[1, coord] = w[2] * r[0] - w[0] * r[2]
            J[2, coord] = w[0] * r[1] - w[1] * r[0]
            J[3:, coord] = w
    return J_q, J_t


def chain_jacobians(chain: ChainModel, cfg: ChainConfiguration):
    """(J_q (6 x n_q), J_theta (6 x n_theta)) at the end point, base frame."""
    chain._check_cfg(cfg)
    return _jacobian_raw(chain, cfg.q, cfg.theta)


def load_hessians(chain: ChainModel, cfg: ChainConfiguration, load: Wrench):
    """Second-order load terms (H_qq, H_qt, H_tq, H_tt) for a fixed wrench.

    Computed as central finite differences (step 1e-5) of the analytic
    generalized force J(q,theta)' F over each coordinate, then symmetrized.
    The symmetrized matrix is exactly the Hessian of the load's work
    potential in the displacement chart centered at the evaluation point,
    so H_qt == H_tq' and the diagonal blocks are symmetric by construction.
    Zero load returns exact zeros.
    """
    chain._check_cfg(cfg)
    n_q, n_t = chain.n_passive, chain.n_spring
    n = n_q + n_t
    F = load.as_vector()
    if n == 0 or not np.any(F):
        return (
            np.zeros((n_q, n_q)),
            np.zeros((n_q, n_t)),
            np.zeros((n_t, n_q)),
            np.zeros((n_t, n_t)),
        )
    h = HESSIAN_FD_STEP

    def tau(q, theta):
        J_q, J_t = _jacobian_raw(chain, q, theta)
        return np.concatenate([J_q.T @ F, J_t.T @ F])

    H = np.zeros((n, n))
    for j in range(n):
        qp, tp = cfg.q.copy(), cfg.theta.copy()
        qm, tm = cfg.q.copy(), cfg.theta.copy()
        if j < n_q:
            qp[j] += h
            qm[j] -= h
        else:
            tp[j - n_q] += h
            tm[j - n_q] -= h
        H[:, j] = (tau(qp, tp) - tau(qm, tm)) / (2.0 * h)
    H = (H + H.T) / 2.0
    return H[:n_q, :n_q], H[:n_q, n_q:], H[n_q:, :n_q], H[n_q:, n_q:]
