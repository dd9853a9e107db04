"""YAML configuration loading and validation.

Schema (all keys optional unless stated; units in key names):

    format_version: 1            # required
    model:
      type: orthoglide           # or "chains"
      leg_length_mm: 310.0
      attach_offset_mm: 40.0
      actuator_stiffness_N_per_mm: 2500.0
      link: {axial_N_per_mm: 1400.0, bending_Nm_per_rad: 1200.0,
             torsion_Nm_per_rad: 800.0}
      points: {Q7: [10.0, 20.0, 30.0]}    # extends/overrides named points
    error_case:
      kind: A                    # none | A | B
      actuator_offset_mm: 1.0
      actuator_tilt_deg: 1.0
    scenario:
      point: Q0
      trajectory: {start: Q2, end: Q5, samples: 101}
      wrench: {force_N: [215.0, -10.0, -25.0], moment_Nm: [1.0, 21.5, 0.0]}
    solver:
      pose_tol: 1.0e-9
      wrench_tol: 1.0e-9
      max_iterations: 100
      continuation_steps: 10
      alpha_comp: 0.5

A "chains" model lists explicit serial chains instead of the named machine;
its stiffness matrices are given directly in working units (N, mm, rad,
N*mm). Such models support analysis and assembly but have no named points,
trajectories or retargeting.

    model:
      type: chains
      t0: {position_mm: [0,0,0], rotation_vector_rad: [0,0,0]}
      chains:
        - adapter_mm: [0, 0, 0]
          elements:
            - {kind: const, translation_mm: [0,0,100],
               rotation_vector_rad: [0,0,0]}
            - {kind: actuated, joint: prismatic, axis: x, value: 50.0}
            - {kind: spring, axes: [tx, ty, tz, rx, ry, rz]}
            - {kind: passive, joint: revolute, axis: z}
          stiffness: [[...]]     # square, one row per spring coordinate
          preload: [...]
          errors:
            - {element: 1, translation_mm: [0.5, 0, 0],
               rotation_vector_rad: [0, 0, 0.001]}

Validation failures raise ConfigError naming the offending field path.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import yaml

from .aggregation import ParallelModel
from .chain import (
    ActuatedFrozen,
    ChainModel,
    ConstTransform,
    GeometricError,
    PassiveJoint,
    VirtualSpring,
)
from .chain_solver import SolveOptions
from .errors import ConfigError, VjmError
from .loaded import LoadedSolveSettings
from .orthoglide import ErrorCase, MillingScenario, OrthoglideParams
from .spatial import RigidTransform


@dataclass(frozen=True)
class ManipulatorConfig:
    kind: str
    orthoglide: OrthoglideParams | None
    chains_model: ParallelModel | None
    error_case: ErrorCase
    point: str
    scenario: MillingScenario
    settings: LoadedSolveSettings


def _expect_map(node, path: str) -> dict:
    if not isinstance(node, dict):
        raise ConfigError(f"{path}: expected a mapping")
    return node


def _reject_unknown(node: dict, path: str, allowed):
    for key in node:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}: unknown field")


def _num(node, path: str, positive=False, lo=None, hi=None) -> float:
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        raise ConfigError(f"{path}: expected a number")
    v = float(node)
    if positive and not v > 0.0:
        raise ConfigError(f"{path}: must be positive")
    if lo is not None and v < lo:
        raise ConfigError(f"{path}: must be >= {lo}")
    if hi is not None and v > hi:
        raise ConfigError(f"{path}: must be <= {hi}")
    return v


def _int(node, path: str, lo=None) -> int:
    if isinstance(node, bool) or not isinstance(node, int):
        raise ConfigError(f"{path}: expected an integer")
    if lo is not None and node < lo:
        raise ConfigError(f"{path}: must be >= {lo}")
    return node


def _str(node, path: str, choices=None) -> str:
    if not isinstance(node, str):
        raise ConfigError(f"{path}: expected a string")
    if choices is not None and node not in choices:
        raise ConfigError(f"{path}: must be one of {sorted(choices)}")
    return node


def _vec(node, path: str, n: int) -> np.ndarray:
    if not isinstance(node, (list, tuple)) or len(node) != n:
        raise ConfigError(f"{path}: expected a list of {n} numbers")
    return np.array([_num(x, f"{path}[{i}]") for i, x in enumerate(node)])


def _matrix(node, path: str) -> np.ndarray:
    if not isinstance(node, list) or not node:
        raise ConfigError(f"{path}: expected a non-empty list of rows")
    n = len(node)
    return np.array([_vec(row, f"{path}[{i}]", n) for i, row in enumerate(node)])


def _parse_orthoglide(node: dict, path: str) -> OrthoglideParams:
    _reject_unknown(
        node,
        path,
        {
            "type",
            "leg_length_mm",
            "attach_offset_mm",
            "actuator_stiffness_N_per_mm",
            "link",
            "points",
        },
    )
    kwargs = {}
    if "leg_length_mm" in node:
        kwargs["leg_length"] = _num(node["leg_length_mm"], f"{path}.leg_length_mm", positive=True)
    if "attach_offset_mm" in node:
        kwargs["attach_offset"] = _num(node["attach_offset_mm"], f"{path}.attach_offset_mm")
    if "actuator_stiffness_N_per_mm" in node:
        kwargs["actuator_stiffness"] = _num(
            node["actuator_stiffness_N_per_mm"],
            f"{path}.actuator_stiffness_N_per_mm",
            positive=True,
        )
    if "link" in node:
        link = _expect_map(node["link"], f"{path}.link")
        _reject_unknown(
            link,
            f"{path}.link",
            {"axial_N_per_mm", "bending_Nm_per_rad", "torsion_Nm_per_rad"},
        )
        if "axial_N_per_mm" in link:
            kwargs["link_axial"] = _num(link["axial_N_per_mm"], f"{path}.link.axial_N_per_mm", positive=True)
        if "bending_Nm_per_rad" in link:
            kwargs["link_bending"] = _num(
                link["bending_Nm_per_rad"], f"{path}.link.bending_Nm_per_rad", positive=True
            )
        if "torsion_Nm_per_rad" in link:
            kwargs["link_torsion"] = _num(
                link["torsion_Nm_per_rad"], f"{path}.link.torsion_Nm_per_rad", positive=True
            )
    params = OrthoglideParams(**kwargs)
    if "points" in node:
        pts = _expect_map(node["points"], f"{path}.points")
        merged = dict(params.points)
        for name, coords in pts.items():
            merged[_str(name, f"{path}.points key")] = tuple(
                _vec(coords, f"{path}.points.{name}", 3)
            )
        params = OrthoglideParams(**{**kwargs, "points": merged})
    return params


_AXES = {"x", "y", "z"}
_SPRING_AXES = {"tx", "ty", "tz", "rx", "ry", "rz"}


def _parse_element(node, path: str):
    node = _expect_map(node, path)
    kind = _str(node.get("kind"), f"{path}.kind", {"const", "actuated", "passive", "spring"})
    if kind == "const":
        _reject_unknown(node, path, {"kind", "translation_mm", "rotation_vector_rad"})
        d = _vec(node.get("translation_mm", [0, 0, 0]), f"{path}.translation_mm", 3)
        phi = _vec(node.get("rotation_vector_rad", [0, 0, 0]), f"{path}.rotation_vector_rad", 3)
        return ConstTransform(RigidTransform.from_rotation_vector(phi, d))
    if kind == "actuated":
        _reject_unknown(node, path, {"kind", "joint", "axis", "value"})
        joint = _str(node.get("joint", "prismatic"), f"{path}.joint", {"prismatic", "revolute"})
        axis = _str(node.get("axis"), f"{path}.axis", _AXES)
        value = _num(node.get("value", 0.0), f"{path}.value")
        return ActuatedFrozen(axis, value, kind=joint)
    if kind == "passive":
        _reject_unknown(node, path, {"kind", "joint", "axis"})
        joint = _str(node.get("joint", "revolute"), f"{path}.joint", {"prismatic", "revolute"})
        axis = _str(node.get("axis"), f"{path}.axis", _AXES)
        return PassiveJoint(axis, kind=joint)
    _reject_unknown(node, path, {"kind", "axes"})
    axes = node.get("axes")
    if not isinstance(axes, list) or not axes:
        raise ConfigError(f"{path}.axes: expected a non-empty list")
    return VirtualSpring(tuple(_str(a, f"{path}.axes[{i}]", _SPRING_AXES) for i, a in enumerate(axes)))


def _parse_chain(node, path: str) -> tuple:
    node = _expect_map(node, path)
    _reject_unknown(node, path, {"adapter_mm", "elements", "stiffness", "preload", "errors"})
    adapter = _vec(node.get("adapter_mm", [0, 0, 0]), f"{path}.adapter_mm", 3)
    raw_elements = node.get("elements")
    if not isinstance(raw_elements, list) or not raw_elements:
        raise ConfigError(f"{path}.elements: expected a non-empty list")
    elements = tuple(
        _parse_element(e, f"{path}.elements[{i}]") for i, e in enumerate(raw_elements)
    )
    if "stiffness" not in node:
        raise ConfigError(f"{path}.stiffness: required")
    stiffness = _matrix(node["stiffness"], f"{path}.stiffness")
    preload = None
    if "preload" in node:
        preload = _vec(node["preload"], f"{path}.preload", stiffness.shape[0])
    errors = []
    for i, err in enumerate(node.get("errors", []) or []):
        err = _expect_map(err, f"{path}.errors[{i}]")
        _reject_unknown(
            err, f"{path}.errors[{i}]", {"element", "translation_mm", "rotation_vector_rad"}
        )
        idx = _int(err.get("element"), f"{path}.errors[{i}].element", lo=0)
        if idx >= len(elements):
            raise ConfigError(f"{path}.errors[{i}].element: no element with index {idx}")
        d = _vec(err.get("translation_mm", [0, 0, 0]), f"{path}.errors[{i}].translation_mm", 3)
        phi = _vec(
            err.get("rotation_vector_rad", [0, 0, 0]),
            f"{path}.errors[{i}].rotation_vector_rad",
            3,
        )
        errors.append(GeometricError(idx, RigidTransform.from_rotation_vector(phi, d)))
    try:
        chain = ChainModel(
            elements=elements,
            stiffness=stiffness,
            preload=preload,
            geometric_errors=tuple(errors),
        )
    except VjmError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return chain, adapter


def _parse_chains_model(node: dict, path: str) -> ParallelModel:
    _reject_unknown(node, path, {"type", "t0", "chains"})
    t0_node = _expect_map(node.get("t0", {}), f"{path}.t0")
    _reject_unknown(t0_node, f"{path}.t0", {"position_mm", "rotation_vector_rad"})
    d = _vec(t0_node.get("position_mm", [0, 0, 0]), f"{path}.t0.position_mm", 3)
    phi = _vec(
        t0_node.get("rotation_vector_rad", [0, 0, 0]), f"{path}.t0.rotation_vector_rad", 3
    )
    t0 = RigidTransform.from_rotation_vector(phi, d)
    raw_chains = node.get("chains")
    if not isinstance(raw_chains, list) or len(raw_chains) < 2:
        raise ConfigError(f"{path}.chains: expected a list of at least two chains")
    parsed = [_parse_chain(c, f"{path}.chains[{i}]") for i, c in enumerate(raw_chains)]
    try:
        return ParallelModel(
            chains=tuple(c for c, _ in parsed),
            adapters=tuple(a for _, a in parsed),
            t0=t0,
        )
    except VjmError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_error_case(node, path: str) -> ErrorCase:
    node = _expect_map(node, path)
    _reject_unknown(node, path, {"kind", "actuator_offset_mm", "actuator_tilt_deg"})
    kwargs = {"kind": _str(node.get("kind", "none"), f"{path}.kind", {"none", "A", "B"})}
    if "actuator_offset_mm" in node:
        kwargs["actuator_offset"] = _num(node["actuator_offset_mm"], f"{path}.actuator_offset_mm")
    if "actuator_tilt_deg" in node:
        kwargs["actuator_tilt_deg"] = _num(node["actuator_tilt_deg"], f"{path}.actuator_tilt_deg")
    return ErrorCase(**kwargs)


def _parse_scenario(node, path: str) -> tuple:
    node = _expect_map(node, path)
    _reject_unknown(node, path, {"point", "trajectory", "wrench"})
    point = _str(node.get("point", "Q0"), f"{path}.point")
    kwargs = {}
    if "trajectory" in node:
        tr = _expect_map(node["trajectory"], f"{path}.trajectory")
        _reject_unknown(tr, f"{path}.trajectory", {"start", "end", "samples"})
        if "start" in tr:
            kwargs["start"] = _str(tr["start"], f"{path}.trajectory.start")
        if "end" in tr:
            kwargs["end"] = _str(tr["end"], f"{path}.trajectory.end")
        if "samples" in tr:
            kwargs["samples"] = _int(tr["samples"], f"{path}.trajectory.samples", lo=2)
    if "wrench" in node:
        w = _expect_map(node["wrench"], f"{path}.wrench")
        _reject_unknown(w, f"{path}.wrench", {"force_N", "moment_Nm"})
        if "force_N" in w:
            kwargs["force_N"] = tuple(_vec(w["force_N"], f"{path}.wrench.force_N", 3))
        if "moment_Nm" in w:
            kwargs["moment_Nm"] = tuple(_vec(w["moment_Nm"], f"{path}.wrench.moment_Nm", 3))
    return point, MillingScenario(**kwargs)


def _parse_solver(node, path: str) -> LoadedSolveSettings:
    node = _expect_map(node, path)
    _reject_unknown(
        node,
        path,
        {"pose_tol", "wrench_tol", "max_iterations", "continuation_steps", "alpha_comp"},
    )
    pose_tol = _num(node.get("pose_tol", 1e-9), f"{path}.pose_tol", positive=True)
    wrench_tol = _num(node.get("wrench_tol", 1e-9), f"{path}.wrench_tol", positive=True)
    max_iter = _int(node.get("max_iterations", 100), f"{path}.max_iterations", lo=1)
    steps = _int(node.get("continuation_steps", 10), f"{path}.continuation_steps", lo=1)
    alpha = _num(node.get("alpha_comp", 0.5), f"{path}.alpha_comp")
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"{path}.alpha_comp: must lie strictly between 0 and 1")
    return LoadedSolveSettings(
        wrench_tol=wrench_tol,
        max_outer=max_iter,
        continuation_steps=steps,
        alpha_comp=alpha,
        chain_options=SolveOptions(
            pose_tol=pose_tol, step_tol=pose_tol, max_iterations=max_iter
        ),
    )


def parse_config(data, source: str = "config") -> ManipulatorConfig:
    """Validate a parsed YAML document and build the configured objects."""
    root = _expect_map(data, source)
    _reject_unknown(root, source, {"format_version", "model", "error_case", "scenario", "solver"})
    version = root.get("format_version")
    if version != 1:
        raise ConfigError(f"{source}.format_version: expected 1, got {version!r}")

    model_node = _expect_map(root.get("model", {"type": "orthoglide"}), f"{source}.model")
    kind = _str(model_node.get("type", "orthoglide"), f"{source}.model.type", {"orthoglide", "chains"})
    orthoglide = None
    chains_model = None
    if kind == "orthoglide":
        orthoglide = _parse_orthoglide(model_node, f"{source}.model")
    else:
        chains_model = _parse_chains_model(model_node, f"{source}.model")

    error_case = _parse_error_case(root.get("error_case", {}), f"{source}.error_case")
    point, scenario = _parse_scenario(root.get("scenario", {}), f"{source}.scenario")
    settings = _parse_solver(root.get("solver", {}), f"{source}.solver")
    if kind == "orthoglide":
        if scenario.start not in orthoglide.points:
            raise ConfigError(f"{source}.scenario.trajectory.start: unknown point {scenario.start!r}")
        if scenario.end not in orthoglide.points:
            raise ConfigError(f"{source}.scenario.trajectory.end: unknown point {scenario.end!r}")
        if point not in orthoglide.points:
            raise ConfigError(f"{source}.scenario.point: unknown point {point!r}")
    elif error_case.kind != "none":
        raise ConfigError(
            f"{source}.error_case.kind: named error cases apply to the orthoglide model only"
        )
    return ManipulatorConfig(
        kind=kind,
        orthoglide=orthoglide,
        chains_model=chains_model,
        error_case=error_case,
        point=point,
        scenario=scenario,
        settings=settings,
    )


def load_config(path) -> ManipulatorConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    return parse_config(data, source="config")
