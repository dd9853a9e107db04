"""Command-line interface.

Subcommands: analyze (stiffness at a point), assemble (non-perfect assembly
at a point), trajectory (deflection curves along the configured pass),
compensate (target correction under the configured wrench).

Exit codes: 0 success, 2 configuration or usage error, 3 solver failure
(non-convergence, singularity, buckling), 4 unreachable target. Failures
print one JSON object {"error": {"code", "message"}} to stderr.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from .aggregation import assemble_nonperfect, unloaded_triples
from .config import ManipulatorConfig, load_config
from .errors import (
    AngleOutOfRange,
    ConfigError,
    DimensionMismatch,
    UnreachableTarget,
    VjmError,
)
from .loaded import (
    compensate_target,
    compensate_with_errors,
    invert_compliance,
    manipulator_force,
)
from .orthoglide import ErrorCase, build_orthoglide, run_milling_study
from .report import (
    assembly_report_to_dict,
    milling_csv,
    stiffness_summary,
    write_json,
)
from .spatial import pose_difference


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vjmkit",
        description="Elastostatic analysis of parallel manipulators with "
        "virtual-spring chains.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="YAML configuration file")
        p.add_argument("--point", help="named study point overriding the config")
        p.add_argument("--case", choices=["none", "A", "B"],
                       help="error case overriding the config")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--tolerance", type=float,
                       help="override the solver wrench tolerance")

    p = sub.add_parser("analyze", help="aggregated stiffness at a study point")
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("assemble", help="assembly of the non-perfect machine")
    common(p)
    p.set_defaults(func=cmd_assemble)

    p = sub.add_parser("trajectory", help="deflection curves along the pass")
    common(p)
    p.add_argument("--compensate", action="store_true",
                   help="add the compensated-residual curve")
    p.add_argument("--jobs", type=int, default=1,
                   help="worker threads for trajectory samples")
    p.set_defaults(func=cmd_trajectory)

    p = sub.add_parser("compensate", help="compensated command for one point")
    common(p)
    p.set_defaults(func=cmd_compensate)
    return parser


def _apply_overrides(cfg: ManipulatorConfig, args) -> ManipulatorConfig:
    if args.case is not None:
        if cfg.kind != "orthoglide":
            raise ConfigError("--case applies to the orthoglide model only")
        cfg = replace(cfg, error_case=replace(cfg.error_case, kind=args.case))
    if args.point is not None:
        if cfg.kind != "orthoglide":
            raise ConfigError("--point applies to the orthoglide model only")
        if args.point not in cfg.orthoglide.points:
            raise ConfigError(f"--point: unknown study point {args.point!r}")
        cfg = replace(cfg, point=args.point)
    if args.tolerance is not None:
        if not args.tolerance > 0.0:
            raise ConfigError("--tolerance must be positive")
        cfg = replace(cfg, settings=replace(cfg.settings, wrench_tol=args.tolerance))
    return cfg


def _model_at_point(cfg: ManipulatorConfig):
    if cfg.kind == "chains":
        return cfg.chains_model, None
    position = cfg.orthoglide.point(cfg.point)
    return build_orthoglide(cfg.orthoglide, cfg.error_case, position), position


def _out_path(args, name: str) -> str:
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _pose_dict(disp) -> dict:
    return {"p_mm": list(disp.p), "rot_rad": list(disp.phi)}


def cmd_analyze(cfg: ManipulatorConfig, args) -> int:
    model, position = _model_at_point(cfg)
    state = manipulator_force(model, model.t0, options=cfg.settings.chain_options)
    triples = unloaded_triples(model)
    payload = {
        "model": cfg.kind,
        "point": cfg.point if cfg.kind == "orthoglide" else None,
        "position_mm": list(position) if position is not None else list(model.t0.d),
        "error_case": cfg.error_case.kind,
        "stiffness": stiffness_summary(state.K_c),
        "chain_rank_deficiencies": [t.deficient_dirs.shape[1] for t in triples],
    }
    write_json(_out_path(args, "analyze.json"), payload)
    ev = payload["stiffness"]["translational_eigenvalues_N_per_mm"]
    print(f"translational stiffness eigenvalues (N/mm): "
          f"{ev[0]:.6g}, {ev[1]:.6g}, {ev[2]:.6g}")
    print(f"wrote {_out_path(args, 'analyze.json')}")
    return 0


def cmd_assemble(cfg: ManipulatorConfig, args) -> int:
    model, position = _model_at_point(cfg)
    report = assemble_nonperfect(model)
    payload = {
        "model": cfg.kind,
        "point": cfg.point if cfg.kind == "orthoglide" else None,
        "position_mm": list(position) if position is not None else list(model.t0.d),
        "error_case": cfg.error_case.kind,
        "report": assembly_report_to_dict(report),
    }
    write_json(_out_path(args, "assembly.json"), payload)
    dt = np.linalg.norm(report.delta_t.p)
    moments = max(np.linalg.norm(w.m) for w in report.chain_wrench) / 1000.0
    print(f"platform shift {dt:.6g} mm, max chain moment {moments:.6g} N*m, "
          f"energy {report.energy:.6g} N*mm")
    print(f"wrote {_out_path(args, 'assembly.json')}")
    return 0


def cmd_trajectory(cfg: ManipulatorConfig, args) -> int:
    if cfg.kind != "orthoglide":
        raise ConfigError("trajectory requires the orthoglide model")
    if args.jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    study = run_milling_study(
        cfg.orthoglide,
        cfg.scenario,
        cfg.error_case,
        compensate=args.compensate,
        jobs=args.jobs,
        settings=cfg.settings,
    )
    path = _out_path(args, "trajectory.csv")
    milling_csv(study, path)
    cut = np.abs(study.cut[:, :3]).max()
    total = np.abs(study.total[:, :3]).max()
    print(f"max |cut deflection| {cut:.6g} mm, max |total deflection| {total:.6g} mm")
    if study.residual is not None:
        print(f"max |compensated residual| {np.abs(study.residual[:, :3]).max():.6g} mm")
    print(f"wrote {path}")
    return 0


def cmd_compensate(cfg: ManipulatorConfig, args) -> int:
    if cfg.kind != "orthoglide":
        raise ConfigError("compensate requires the orthoglide model")
    model, position = _model_at_point(cfg)
    wrench = cfg.scenario.wrench()
    t_desired = model.t0

    t_cmd = compensate_target(model, wrench, t_desired, cfg.settings)
    verified = invert_compliance(
        model.retarget_common(t_cmd), wrench, cfg.settings
    )
    miss = pose_difference(verified.t, t_desired)
    payload = {
        "point": cfg.point,
        "position_mm": list(position),
        "error_case": cfg.error_case.kind,
        "wrench": {"force_N": list(wrench.f), "moment_Nmm": list(wrench.m)},
        "command": _pose_dict(pose_difference(t_cmd, t_desired)),
        "verified_error": _pose_dict(miss),
    }
    if cfg.error_case.kind != "none":
        targets = compensate_with_errors(model, wrench, t_desired, settings=cfg.settings)
        per_chain = model.retarget_per_chain(targets, t_desired)
        loaded = invert_compliance(per_chain, wrench, cfg.settings)
        payload["per_chain_commands"] = [
            _pose_dict(pose_difference(t_i, t_desired)) for t_i in targets
        ]
        payload["per_chain_verified_error"] = _pose_dict(
            pose_difference(loaded.t, t_desired)
        )
    write_json(_out_path(args, "compensate.json"), payload)
    print(f"command offset {np.linalg.norm(payload['command']['p_mm']):.6g} mm, "
          f"verified error {np.linalg.norm(miss.p):.3e} mm")
    print(f"wrote {_out_path(args, 'compensate.json')}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        return args.func(cfg, args)
    except VjmError as exc:
        print(json.dumps({"error": {"code": exc.code, "message": str(exc)}}),
              file=sys.stderr)
        if isinstance(exc, (ConfigError, DimensionMismatch, AngleOutOfRange)):
            return 2
        if isinstance(exc, UnreachableTarget):
            return 4
        return 3


if __name__ == "__main__":
    sys.exit(main())
