"""Deterministic result serialization: CSV curves, JSON reports, text tables.

CSV files use LF newlines, comma separators, unit-suffixed headers and 17
significant digits, so identical inputs reproduce byte-identical files.
JSON stores arrays in working units (N, mm, rad, N*mm) to keep round trips
exact; human-readable tables convert moments to N*m.
"""
from __future__ import annotations

import json

import numpy as np

from .aggregation import AssemblyReport
from .errors import DimensionMismatch
from .orthoglide import MillingStudy
from .spatial import PoseDisplacement, Wrench


def fmt(value) -> str:
    if isinstance(value, str):
        if "," in value or "\n" in value:
            raise DimensionMismatch("CSV cell must not contain separators")
        return value
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.17g" % float(value)


def write_csv(path, header, rows):
    lines = [",".join(header)]
    width = len(header)
    for row in rows:
        cells = [fmt(v) for v in row]
        if len(cells) != width:
            raise DimensionMismatch("CSV row width does not match the header")
        lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


_POSE_COLS = ("dx_mm", "dy_mm", "dz_mm", "rx_rad", "ry_rad", "rz_rad")


def milling_csv(study: MillingStudy, path):
    """Deflection curves as one CSV row per trajectory sample."""
    header = ["s"]
    header += ["target_x_mm", "target_y_mm", "target_z_mm",
               "target_rx_rad", "target_ry_rad", "target_rz_rad"]
    blocks = [("cut", study.cut), ("geom", study.geom),
              ("total", study.total), ("superposed", study.superposed)]
    if study.residual is not None:
        blocks.append(("residual", study.residual))
    for name, _ in blocks:
        header += [f"{name}_{c}" for c in _POSE_COLS]

    rows = []
    for k in range(len(study.s)):
        row = [study.s[k]]
        row += list(study.target_mm[k]) + [0.0, 0.0, 0.0]
        for _, data in blocks:
            row += list(data[k])
        rows.append(row)
    write_csv(path, header, rows)


def assembly_study_csv(rows, path):
    header = [
        "point",
        "x_mm", "y_mm", "z_mm",
        "dt_x_mm", "dt_y_mm", "dt_z_mm",
        "rot_x_deg", "rot_y_deg", "rot_z_deg",
        "dq_max_mm", "dq_max_deg",
        "theta_t_max_mm", "theta_r_max_deg",
        "tau_t_max_N", "tau_r_max_Nm",
        "force_max_N", "moment_max_Nm",
        "energy_Nmm",
    ]
    out = []
    for r in rows:
        out.append(
            [r.point]
            + list(r.position)
            + list(r.delta_t_mm)
            + list(r.delta_rot_deg)
            + [r.dq_max_mm, r.dq_max_deg, r.theta_t_max_mm, r.theta_r_max_deg,
               r.tau_t_max_N, r.tau_r_max_Nm, r.force_max_N, r.moment_max_Nm,
               r.energy_Nmm]
        )
    write_csv(path, header, out)


def assembly_report_to_dict(report: AssemblyReport) -> dict:
    return {
        "delta_t": {
            "p_mm": list(report.delta_t.p),
            "rot_rad": list(report.delta_t.phi),
        },
        "chains": [
            {
                "delta": {"p_mm": list(d.p), "rot_rad": list(d.phi)},
                "wrench": {"force_N": list(w.f), "moment_Nmm": list(w.m)},
                "tau_theta": list(tau),
                "dtheta": list(dth),
                "dq": list(dq),
            }
            for d, w, tau, dth, dq in zip(
                report.chain_delta,
                report.chain_wrench,
                report.tau_theta,
                report.dtheta,
                report.dq,
            )
        ],
        "energy_Nmm": report.energy,
        "balance_residual": report.balance_residual,
    }


def assembly_report_from_dict(data: dict) -> AssemblyReport:
    chains = data["chains"]
    return AssemblyReport(
        delta_t=PoseDisplacement(
            np.array(data["delta_t"]["p_mm"]), np.array(data["delta_t"]["rot_rad"])
        ),
        chain_delta=tuple(
            PoseDisplacement(np.array(c["delta"]["p_mm"]), np.array(c["delta"]["rot_rad"]))
            for c in chains
        ),
        chain_wrench=tuple(
            Wrench(np.array(c["wrench"]["force_N"]), np.array(c["wrench"]["moment_Nmm"]))
            for c in chains
        ),
        tau_theta=tuple(np.array(c["tau_theta"]) for c in chains),
        dtheta=tuple(np.array(c["dtheta"]) for c in chains),
        dq=tuple(np.array(c["dq"]) for c in chains),
        energy=data["energy_Nmm"],
        balance_residual=data["balance_residual"],
    )


def write_json(path, payload: dict):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def stiffness_summary(K_c: np.ndarray) -> dict:
    """Interface-unit summary of an aggregated 6x6 stiffness (internal units in,
    translational block reported in N/mm, rotational in N*m/rad)."""
    K_c = np.asarray(K_c, dtype=float)
    tt = K_c[:3, :3]
    rr = K_c[3:, 3:] / 1000.0
    return {
        "matrix_working_units": [list(row) for row in K_c],
        "units": "N, mm, rad, N*mm (moment rows/cols in N*mm)",
        "translational_eigenvalues_N_per_mm": list(np.linalg.eigvalsh(tt)),
        "rotational_eigenvalues_Nm_per_rad": list(np.linalg.eigvalsh(rr)),
    }


def assembly_table(rows) -> str:
    """Aligned text table of an assembly study, moments in N*m."""
    header = (
        f"{'point':>6} {'|dt|_mm':>10} {'rot_deg':>10} {'dq_max_deg':>11} "
        f"{'th_t_mm':>10} {'th_r_deg':>10} {'tau_t_N':>10} {'tau_r_Nm':>10} "
        f"{'F_max_N':>10} {'M_max_Nm':>10}"
    )
    lines = [header, "-" * len(header)]
    for r in rows:
        dt = float(np.linalg.norm(r.delta_t_mm))
        rot = float(np.linalg.norm(r.delta_rot_deg))
        lines.append(
            f"{r.point:>6} {dt:>10.4g} {rot:>10.4g} {r.dq_max_deg:>11.4g} "
            f"{r.theta_t_max_mm:>10.4g} {r.theta_r_max_deg:>10.4g} "
            f"{r.tau_t_max_N:>10.4g} {r.tau_r_max_Nm:>10.4g} "
            f"{r.force_max_N:>10.4g} {r.moment_max_Nm:>10.4g}"
        )
    return "\n".join(lines)
