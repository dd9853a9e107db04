"""Elastostatic stiffness modeling of parallel manipulators built from
serial chains with localized virtual springs, including non-perfect
(geometrically inconsistent) chains, loaded-mode analysis and target
compensation.

Working units throughout the library: mm, N, rad, N*mm. Interface layers
(configuration files, reports) accept and display moments in N*m.
"""
from .aggregation import (
    AssemblyReport,
    ParallelModel,
    aggregate_stiffness,
    assemble_nonperfect,
    chain_errors,
    joint_sensitivities_unloaded,
    unloaded_triples,
)
from .chain import (
    ActuatedFrozen,
    ChainConfiguration,
    ChainModel,
    ConstTransform,
    GeometricError,
    PassiveJoint,
    VirtualSpring,
    chain_jacobians,
    forward_geometry,
    load_hessians,
)
from .chain_solver import (
    ChainState,
    SolveOptions,
    StiffnessTriple,
    chain_force_deflection,
    chain_stiffness,
    solve_chain_equilibrium,
    unloaded_state,
)
from .config import ManipulatorConfig, load_config, parse_config
from .errors import (
    AngleOutOfRange,
    BucklingDetected,
    ConfigError,
    DimensionMismatch,
    MaxIterationsExceeded,
    NotConverged,
    SingularAggregateStiffness,
    SingularJacobian,
    SingularStiffness,
    SingularSystem,
    UnreachableTarget,
    VjmError,
)
from .loaded import (
    LoadedSolveSettings,
    LoadedState,
    compensate_target,
    compensate_with_errors,
    invert_compliance,
    manipulator_force,
    unloaded_shift,
)
from .orthoglide import (
    DEFAULT_POINTS,
    AssemblyStudyRow,
    ErrorCase,
    MillingScenario,
    MillingStudy,
    OrthoglideParams,
    build_orthoglide,
    inverse_kinematics,
    platform_stiffness,
    run_assembly_study,
    run_milling_study,
)
from .spatial import (
    PoseDisplacement,
    RigidTransform,
    Wrench,
    adapter_jacobian,
    apply_displacement,
    pose_difference,
    rotation_exp,
    rotation_log,
    skew,
    transport_wrench,
)

__version__ = "0.1.0"
