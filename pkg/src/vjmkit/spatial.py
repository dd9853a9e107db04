"""Small spatial-algebra layer used by every other module.

Conventions, fixed package-wide:
  * 6-vectors stack translation before rotation: (px, py, pz, rx, ry, rz).
  * Working units are mm, N and rad; moments are N*mm internally.
    Human-facing I/O converts moments to N*m (see report module).
  * Displacements and wrenches are expressed along base-frame axes.
  * The orientation part of a displacement is the rotation-log 3-vector
    of the relative rotation, valid for angles strictly below pi.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AngleOutOfRange, DimensionMismatch

_ORTHO_TOL = 1e-12
_PI_GUARD = 1e-6


def _vec3(v, what: str) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.shape != (3,):
        raise DimensionMismatch(f"{what}: expected 3-vector, got shape {a.shape}")
    return a


def skew(v) -> np.ndarray:
    """3x3 matrix S(v) with S(v) @ w == np.cross(v, w)."""
    x, y, z = np.asarray(v, dtype=float)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def unskew(S) -> np.ndarray:
    """Axial vector of an (assumed) antisymmetric 3x3 matrix."""
    S = np.asarray(S, dtype=float)
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


def rotation_exp(phi) -> np.ndarray:
    """Rotation matrix for a rotation-vector (Rodrigues, series near zero)."""
    phi = _vec3(phi, "rotation vector")
    theta = float(np.linalg.norm(phi))
    S = skew(phi)
    if theta < 1e-8:
        # second-order series keeps full precision for tiny angles
        a = 1.0 - theta**2 / 6.0
        b = 0.5 - theta**2 / 24.0
    else:
        a = np.sin(theta) / theta
        b = (1.0 - np.cos(theta)) / theta**2
    return np.eye(3) + a * S + b * (S @ S)


def rotation_log(R) -> np.ndarray:
    """Rotation vector of a rotation matrix.

    Raises AngleOutOfRange once the angle reaches pi - 1e-6; the chart is
    ill-conditioned there and downstream displacement math assumes |phi| < pi.
    """
    R = np.asarray(R, dtype=float)
    c = (np.trace(R) - 1.0) / 2.0
    theta = float(np.arccos(np.clip(c, -1.0, 1.0)))
    if theta >= np.pi - _PI_GUARD:
        raise AngleOutOfRange(f"relative rotation angle {theta:.9f} rad too close to pi")
    w = unskew((R - R.T) / 2.0)  # = sin(theta) * axis
    if theta < 1e-8:
        # w ~ theta * axis; correction keeps O(theta^3) accuracy
        return w * (1.0 + theta**2 / 6.0)
    return w * (theta / np.sin(theta))


@dataclass(frozen=True)
class RigidTransform:
    """Proper rigid transform: rotation R (3x3) and translation d (mm)."""

    R: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.R, dtype=float)
        d = _vec3(self.d, "translation")
        if R.shape != (3, 3):
            raise DimensionMismatch(f"rotation: expected (3,3), got {R.shape}")
        if not np.all(np.isfinite(R)) or not np.all(np.isfinite(d)):
            raise DimensionMismatch("rigid transform entries must be finite")
        err = np.abs(R.T @ R - np.eye(3)).max()
        if err > 1e-9:
            raise DimensionMismatch(f"rotation not orthonormal (|R'R - I| = {err:.3e})")
        if np.linalg.det(R) < 0.0:
            raise DimensionMismatch("rotation has negative determinant (improper)")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "d", d)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_translation(cls, d) -> "RigidTransform":
        return cls(np.eye(3), d)

    @classmethod
    def from_rotation_vector(cls, phi, d=(0.0, 0.0, 0.0)) -> "RigidTransform":
        return cls(rotation_exp(phi), d)

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        return RigidTransform(self.R @ other.R, self.d + self.R @ other.d)

    def __matmul__(self, other: "RigidTransform") -> "RigidTransform":
        return self.compose(other)

    def inverse(self) -> "RigidTransform":
        return RigidTransform(self.R.T, -(self.R.T @ self.d))

    def apply(self, point) -> np.ndarray:
        return self.R @ _vec3(point, "point") + self.d


@dataclass(frozen=True)
class PoseDisplacement:
    """Small-displacement 6-vector: translation p (mm) and rotation phi (rad)."""

    p: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        p = _vec3(self.p, "displacement translation")
        phi = _vec3(self.phi, "displacement rotation")
        if not np.all(np.isfinite(p)) or not np.all(np.isfinite(phi)):
            raise DimensionMismatch("displacement entries must be finite")
        if np.linalg.norm(phi) >= np.pi:
            raise AngleOutOfRange("displacement rotation magnitude must stay below pi")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "phi", phi)

    @classmethod
    def zero(cls) -> "PoseDisplacement":
        return cls(np.zeros(3), np.zeros(3))

    @classmethod
    def from_vector(cls, v) -> "PoseDisplacement":
        v = np.asarray(v, dtype=float)
        if v.shape != (6,):
            raise DimensionMismatch(f"displacement: expected 6-vector, got {v.shape}")
        return cls(v[:3], v[3:])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.p, self.phi])

    def norm(self) -> float:
        """Mixed mm/rad Euclidean norm of the 6-vector."""
        return float(np.linalg.norm(self.as_vector()))

    def scaled(self, a: float) -> "PoseDisplacement":
        return PoseDisplacement(a * self.p, a * self.phi)

    def __add__(self, other: "PoseDisplacement") -> "PoseDisplacement":
        return PoseDisplacement(self.p + other.p, self.phi + other.phi)

    def __sub__(self, other: "PoseDisplacement") -> "PoseDisplacement":
        return PoseDisplacement(self.p - other.p, self.phi - other.phi)


@dataclass(frozen=True)
class Wrench:
    """Force f (N) and moment m (N*mm) acting at a stated point, base axes."""

    f: np.ndarray
    m: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        f = _vec3(self.f, "force")
        m = _vec3(self.m, "moment")
        if not np.all(np.isfinite(f)) or not np.all(np.isfinite(m)):
            raise DimensionMismatch("wrench entries must be finite")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "m", m)

    @classmethod
    def zero(cls) -> "Wrench":
        return cls(np.zeros(3), np.zeros(3))

    @classmethod
    def from_vector(cls, v) -> "Wrench":
        v = np.asarray(v, dtype=float)
        if v.shape != (6,):
            raise DimensionMismatch(f"wrench: expected 6-vector, got {v.shape}")
        return cls(v[:3], v[3:])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.f, self.m])

    def norm(self) -> float:
        """Mixed N / N*mm Euclidean norm."""
        return float(np.linalg.norm(self.as_vector()))

    def __add__(self, other: "Wrench") -> "Wrench":
        return Wrench(self.f + other.f, self.m + other.m)

    def __sub__(self, other: "Wrench") -> "Wrench":
        return Wrench(self.f - other.f, self.m - other.m)

    def scaled(self, a: float) -> "Wrench":
        return Wrench(a * self.f, a * self.m)


def pose_difference(a: RigidTransform, b: RigidTransform) -> PoseDisplacement:
    """Displacement taking b to a: translation a.d - b.d, rotation log(a.R b.R')."""
    return PoseDisplacement(a.d - b.d, rotation_log(a.R @ b.R.T))


def apply_displacement(t: RigidTransform, d: PoseDisplacement) -> RigidTransform:
    """Inverse of pose_difference: apply_displacement(b, pose_difference(a, b)) == a."""
    return RigidTransform(rotation_exp(d.phi) @ t.R, t.d + d.p)


def adapter_jacobian(v) -> np.ndarray:
    """Rigid-platform adapter [[I, -skew(v)], [0, I]].

    v is the offset (mm) from the platform reference point to the chain
    end-point. The matrix maps a reference-point displacement to the chain
    end-point displacement; its transpose maps a wrench acting at the chain
    end to the equivalent wrench at the reference point
    (m_ref = m_end + v x f).
    """
    v = _vec3(v, "adapter offset")
    J = np.eye(6)
    J[:3, 3:] = -skew(v)
    return J


def transport_wrench(w: Wrench, v) -> Wrench:
    """Move a wrench acting at reference+v to the reference point."""
    v = _vec3(v, "adapter offset")
    return Wrench(w.f, w.m + np.cross(v, w.f))


def symmetrize(M: np.ndarray, tol: float | None = None, what: str = "matrix") -> np.ndarray:
    """Average away roundoff asymmetry; optionally assert it was within tol."""
    M = np.asarray(M, dtype=float)
    if tol is not None:
        scale = max(np.abs(M).max(), 1e-300)
        asym = np.abs(M - M.T).max() / scale
        if asym > tol:
            raise DimensionMismatch(f"{what}: asymmetry {asym:.3e} exceeds {tol:.1e}")
    return (M + M.T) / 2.0
