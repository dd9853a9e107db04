"""Three-rail translational parallel manipulator with orthogonal prismatic
drives, plus its standard error cases and study routines.

Geometry (base axes x, y, z, lengths in mm):

* rail i runs along axis e_i through the offset point a_i = c_i, where c_i
  is the platform attachment offset (cyclic: (0,d,d), (d,0,d), (d,d,0));
* the slider at a_i + rho_i e_i carries an axial spring (drive compliance),
  then a rigid leg of length leg_length with a 6x6 beam-like spring at its
  tip, then two passive prismatic coordinates transverse to the leg (the
  linearized parallelogram: the tip translates without rotating);
* the leg tip is the platform attachment; with a = c every attachment sees
  the same slider equation, so the inverse kinematics collapses to the
  point-platform form rho_i = p_i - sqrt(L^2 - |p_perp|^2).

The negative root keeps the slider behind the workspace; with it the leg
directions stay well conditioned over the whole study cube (the positive
root parks the far cube corner next to a parallel singularity).

Error cases: A shifts each slider 1 mm along its rail (pure translation of
the whole leg); B tilts each drive axis 1 deg about the cyclically next base
axis, pivoting at the rail offset point.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .aggregation import ParallelModel, assemble_nonperfect
from .chain import (
    ActuatedFrozen,
    ChainModel,
    ConstTransform,
    GeometricError,
    PassiveJoint,
    VirtualSpring,
)
from .errors import DimensionMismatch, UnreachableTarget
from .loaded import (
    LoadedSolveSettings,
    compensate_target,
    invert_compliance,
    manipulator_force,
    unloaded_shift,
)
from .spatial import RigidTransform, Wrench, pose_difference, rotation_exp

_CYCLE = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])

DEFAULT_POINTS = {
    "Q0": (0.0, 0.0, 0.0),
    "Q1": (-73.65, -73.65, -73.65),
    "Q2": (126.35, 126.35, 126.35),
    "Q3": (126.35, 126.35, -73.65),
    "Q4": (126.35, -73.65, -73.65),
    "Q5": (-73.65, 126.35, -73.65),
}


@dataclass(frozen=True)
class OrthoglideParams:
    """Geometry and elasticity of the three-rail manipulator.

    Stiffness inputs use interface units: actuator_stiffness and link_axial
    in N/mm; link_bending and link_torsion in N*m/rad. link_bending is the
    tip rotational stiffness under transverse-force-free conditions (EI/L);
    the spring matrix embeds the full clamped-end force/moment coupling
    derived from it. points maps study point names to positions (mm).
    """

    leg_length: float = 310.0
    attach_offset: float = 40.0
    actuator_stiffness: float = 2500.0
    link_axial: float = 1400.0
    link_bending: float = 1200.0
    link_torsion: float = 800.0
    points: dict = field(default_factory=lambda: dict(DEFAULT_POINTS))

    def __post_init__(self):
        for name, value in (
            ("leg_length", self.leg_length),
            ("actuator_stiffness", self.actuator_stiffness),
            ("link_axial", self.link_axial),
            ("link_bending", self.link_bending),
            ("link_torsion", self.link_torsion),
        ):
            if not value > 0.0:
                raise DimensionMismatch(f"{name} must be positive")

    def point(self, name: str) -> np.ndarray:
        try:
            return np.asarray(self.points[name], dtype=float)
        except KeyError:
            raise DimensionMismatch(f"unknown study point {name!r}") from None


@dataclass(frozen=True)
class ErrorCase:
    """Manufacturing error pattern applied identically to all three drives.

    kind: "none", "A" (slider offset along the rail, mm) or "B" (drive axis
    tilt about the cyclically next base axis, deg).
    """

    kind: str = "none"
    actuator_offset: float = 1.0
    actuator_tilt_deg: float = 1.0

    def __post_init__(self):
        if self.kind not in ("none", "A", "B"):
            raise DimensionMismatch("error case kind must be 'none', 'A' or 'B'")


@dataclass(frozen=True)
class MillingScenario:
    """Straight-line machining pass between two named study points.

    force_N acts on the tool point; moment_Nm is the reduction of the cutting
    force system to that point (tool_offset_mm is documentation of where the
    numbers come from, it does not enter the computation).
    """

    start: str = "Q2"
    end: str = "Q5"
    samples: int = 101
    force_N: tuple = (215.0, -10.0, -25.0)
    moment_Nm: tuple = (1.0, 21.5, 0.0)
    tool_offset_mm: float = 100.0

    def __post_init__(self):
        if self.samples < 2:
            raise DimensionMismatch("a trajectory needs at least 2 samples")

    def wrench(self) -> Wrench:
        return Wrench(
            np.asarray(self.force_N, dtype=float),
            1000.0 * np.asarray(self.moment_Nm, dtype=float),
        )


def _attach_offsets(params: OrthoglideParams) -> list:
    d = params.attach_offset
    return [d * (np.ones(3) - np.eye(3)[i]) for i in range(3)]


def inverse_kinematics(params: OrthoglideParams, position) -> np.ndarray:
    """Slider coordinates for a platform position, negative-root branch."""
    p = np.asarray(position, dtype=float)
    if p.shape != (3,):
        raise DimensionMismatch("platform position must be a 3-vector")
    L = params.leg_length
    rho = np.empty(3)
    for i in range(3):
        # with a_i = c_i the attachment-to-rail vector is just p
        trans_sq = p @ p - p[i] ** 2
        disc = L * L - trans_sq
        if disc < 0.0:
            raise UnreachableTarget(
                f"position {p.tolist()} is outside the reachable set of drive {i}"
            )
        rho[i] = p[i] - math.sqrt(disc)
    return rho


def _align_x_to(u: np.ndarray) -> np.ndarray:
    """Minimal rotation taking the local x axis onto the unit vector u."""
    x = np.array([1.0, 0.0, 0.0])
    axis = np.cross(x, u)
    s = np.linalg.norm(axis)
    c = float(x @ u)
    if s < 1e-12:
        if c > 0.0:
            return np.eye(3)
        return rotation_exp(np.array([0.0, math.pi, 0.0]))
    return rotation_exp(axis / s * math.atan2(s, c))


def _beam_spring(params: OrthoglideParams) -> np.ndarray:
    """6x6 leg-tip stiffness in the leg frame (x axial), internal units."""
    L = params.leg_length
    ka = params.link_axial
    kb = 1000.0 * params.link_bending  # EI/L in N*mm/rad
    kt = 1000.0 * params.link_torsion
    K = np.zeros((6, 6))
    K[0, 0] = ka
    K[1, 1] = K[2, 2] = 12.0 * kb / L**2
    K[3, 3] = kt
    K[4, 4] = K[5, 5] = 4.0 * kb
    K[2, 4] = K[4, 2] = 6.0 * kb / L
    K[1, 5] = K[5, 1] = -6.0 * kb / L
    return K


def _build_chain(
    params: OrthoglideParams,
    error_case: ErrorCase,
    i: int,
    attach: np.ndarray,
) -> ChainModel:
    L = params.leg_length
    B = np.linalg.matrix_power(_CYCLE, i)
    a_i = _attach_offsets(params)[i]
    rel = attach - a_i
    rel_local = B.T @ rel
    disc = L * L - float(rel_local[1] ** 2 + rel_local[2] ** 2)
    if disc < 0.0:
        raise UnreachableTarget(
            f"attachment {attach.tolist()} is outside the reachable set of drive {i}"
        )
    rho = float(rel_local[0]) - math.sqrt(disc)
    leg_local = (rel_local - np.array([rho, 0.0, 0.0])) / L
    R_align = _align_x_to(leg_local)

    elements = (
        ConstTransform(RigidTransform(B, a_i)),
        ActuatedFrozen("x", rho, kind="prismatic"),
        VirtualSpring(("tx",)),
        ConstTransform(RigidTransform(R_align, np.zeros(3))),
        ConstTransform(RigidTransform.from_translation(np.array([L, 0.0, 0.0]))),
        VirtualSpring(("tx", "ty", "tz", "rx", "ry", "rz")),
        PassiveJoint("y", kind="prismatic"),
        PassiveJoint("z", kind="prismatic"),
        ConstTransform(RigidTransform((B @ R_align).T, np.zeros(3))),
    )

    errors = ()
    if error_case.kind == "A":
        shift = np.array([error_case.actuator_offset, 0.0, 0.0])
        errors = (GeometricError(1, RigidTransform.from_translation(shift)),)
    elif error_case.kind == "B":
        tilt = math.radians(error_case.actuator_tilt_deg)
        errors = (
            GeometricError(
                1, RigidTransform.from_rotation_vector(np.array([0.0, tilt, 0.0]))
            ),
        )

    K = np.zeros((7, 7))
    K[0, 0] = params.actuator_stiffness
    K[1:, 1:] = _beam_spring(params)
    return ChainModel(elements=elements, stiffness=K, geometric_errors=errors)


def build_orthoglide(
    params: OrthoglideParams,
    error_case: ErrorCase | None = None,
    target=(0.0, 0.0, 0.0),
) -> ParallelModel:
    """Parallel model commanding the platform reference point to `target`.

    target is a position (mm) or a RigidTransform whose rotation must be
    identity: the machine is translational, orientation cannot be commanded.
    The model carries a retarget hook, so compensation routines work on it.
    """
    error_case = error_case or ErrorCase()
    if isinstance(target, RigidTransform):
        t0 = target
    else:
        t0 = RigidTransform.from_translation(np.asarray(target, dtype=float))
    offsets = _attach_offsets(params)

    def _retarget(targets, t_ref):
        chains = []
        frames = []
        for i in range(3):
            t_i = targets[i]
            attach = t_i.d + t_i.R @ offsets[i]
            chains.append(_build_chain(params, error_case, i, attach))
            frames.append(RigidTransform.from_translation(attach))
        return ParallelModel(
            chains=tuple(chains),
            adapters=tuple(offsets),
            t0=t_ref,
            end_frames=tuple(frames),
            retarget=_retarget,
            commandable="translation",
        )

    return _retarget([t0] * 3, t0)


def _coord_split(chain: ChainModel):
    labels = chain.spring_axis_labels()
    trans = [k for k, lab in enumerate(labels) if lab.startswith("t")]
    rot = [k for k, lab in enumerate(labels) if lab.startswith("r")]
    return trans, rot


@dataclass(frozen=True)
class AssemblyStudyRow:
    """Assembly response at one study point, interface units.

    dq_max_deg is the parallelogram swing angle equivalent to the largest
    passive translation (atan of travel over leg length).
    """

    point: str
    position: np.ndarray
    delta_t_mm: np.ndarray
    delta_rot_deg: np.ndarray
    dq_max_mm: float
    dq_max_deg: float
    theta_t_max_mm: float
    theta_r_max_deg: float
    tau_t_max_N: float
    tau_r_max_Nm: float
    force_max_N: float
    moment_max_Nm: float
    energy_Nmm: float


def run_assembly_study(
    params: OrthoglideParams,
    error_case: ErrorCase,
    points=None,
) -> list:
    """Unloaded assembly response of the non-perfect machine at study points."""
    names = list(points) if points is not None else sorted(params.points)
    rows = []
    for name in names:
        p = params.point(name)
        model = build_orthoglide(params, error_case, p)
        rep = assemble_nonperfect(model)
        trans, rot = _coord_split(model.chains[0])
        dq = max(float(np.max(np.abs(d), initial=0.0)) for d in rep.dq)
        th_t = max(float(np.max(np.abs(d[trans]), initial=0.0)) for d in rep.dtheta)
        th_r = max(float(np.max(np.abs(d[rot]), initial=0.0)) for d in rep.dtheta)
        tau_t = max(float(np.max(np.abs(d[trans]), initial=0.0)) for d in rep.tau_theta)
        tau_r = max(float(np.max(np.abs(d[rot]), initial=0.0)) for d in rep.tau_theta)
        f_max = max(float(np.linalg.norm(w.f)) for w in rep.chain_wrench)
        m_max = max(float(np.linalg.norm(w.m)) for w in rep.chain_wrench)
        rows.append(
            AssemblyStudyRow(
                point=name,
                position=p,
                delta_t_mm=rep.delta_t.p.copy(),
                delta_rot_deg=np.degrees(rep.delta_t.phi),
                dq_max_mm=dq,
                dq_max_deg=math.degrees(math.atan2(dq, params.leg_length)),
                theta_t_max_mm=th_t,
                theta_r_max_deg=math.degrees(th_r),
                tau_t_max_N=tau_t,
                tau_r_max_Nm=tau_r / 1000.0,
                force_max_N=f_max,
                moment_max_Nm=m_max / 1000.0,
                energy_Nmm=rep.energy,
            )
        )
    return rows


@dataclass(frozen=True)
class MillingStudy:
    """Deflection curves along a machining pass, interface units (mm, rad).

    Rows follow the arc-length parameter s in [0, 1]. cut: perfect machine
    under the cutting wrench; geom: non-perfect machine unloaded; total:
    non-perfect machine under the wrench; superposed: cut + geom, the linear
    estimate of total; residual: remaining deflection after commanding the
    compensated targets (None unless compensation was requested).
    """

    s: np.ndarray
    target_mm: np.ndarray
    cut: np.ndarray
    geom: np.ndarray
    total: np.ndarray
    superposed: np.ndarray
    residual: np.ndarray | None


def _milling_sample(
    params: OrthoglideParams,
    error_case: ErrorCase,
    wrench: Wrench,
    p: np.ndarray,
    compensate: bool,
    settings: LoadedSolveSettings,
    warm: dict,
):
    t0 = RigidTransform.from_translation(p)
    perfect = build_orthoglide(params, ErrorCase("none"), p)
    loaded_perfect = invert_compliance(
        perfect, wrench, settings, warm=warm.get("cut")
    )
    cut = pose_difference(loaded_perfect.t, t0)

    model = build_orthoglide(params, error_case, p)
    shift, geom_state = unloaded_shift(model, settings, warm=warm.get("geom"))
    loaded_total = invert_compliance(model, wrench, settings, warm=warm.get("total"))
    total = pose_difference(loaded_total.t, t0)

    residual = None
    if compensate:
        seed = warm.get("cmd_shift")
        t_init = RigidTransform(t0.R, t0.d + seed) if seed is not None else None
        t_cmd = compensate_target(model, wrench, t0, settings, t_init=t_init)
        warm["cmd_shift"] = t_cmd.d - t0.d
        verified = invert_compliance(
            model.retarget_common(t_cmd), wrench, settings, warm=warm.get("resid")
        )
        residual = pose_difference(verified.t, t0).as_vector()
        warm["resid"] = verified
    warm["cut"], warm["geom"], warm["total"] = loaded_perfect, geom_state, loaded_total
    return cut.as_vector(), shift.as_vector(), total.as_vector(), residual


def run_milling_study(
    params: OrthoglideParams,
    scenario: MillingScenario,
    error_case: ErrorCase,
    compensate: bool = False,
    jobs: int = 1,
    settings: LoadedSolveSettings | None = None,
) -> MillingStudy:
    """Deflection curves along the machining pass.

    jobs > 1 distributes samples over a thread pool; concurrent samples are
    solved from cold starts, so curves agree with the sequential run to
    solver tolerance (which warm-starts each sample from the previous one).
    """
    settings = settings or LoadedSolveSettings()
    p_start = params.point(scenario.start)
    p_end = params.point(scenario.end)
    s = np.linspace(0.0, 1.0, scenario.samples)
    targets = np.array([(1.0 - sk) * p_start + sk * p_end for sk in s])
    wrench = scenario.wrench()

    if jobs > 1:
        def one(k):
            return _milling_sample(
                params, error_case, wrench, targets[k], compensate, settings, {}
            )

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, range(scenario.samples)))
    else:
        warm: dict = {}
        results = [
            _milling_sample(
                params, error_case, wrench, targets[k], compensate, settings, warm
            )
            for k in range(scenario.samples)
        ]

    cut = np.array([r[0] for r in results])
    geom = np.array([r[1] for r in results])
    total = np.array([r[2] for r in results])
    residual = np.array([r[3] for r in results]) if compensate else None
    return MillingStudy(
        s=s,
        target_mm=targets,
        cut=cut,
        geom=geom,
        total=total,
        superposed=cut + geom,
        residual=residual,
    )


def platform_stiffness(
    params: OrthoglideParams,
    error_case: ErrorCase | None = None,
    point=(0.0, 0.0, 0.0),
) -> np.ndarray:
    """Aggregated 6x6 tangent stiffness at a pose, internal units."""
    model = build_orthoglide(params, error_case, point)
    state = manipulator_force(model, model.t0)
    return state.K_c
