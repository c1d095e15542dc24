"""Command-line interface.

Subcommands map 1:1 onto library operations: simulate (transport run),
capture (integration run with outcome), pathline (tracer in the rotating
helix flow), flowfield (axial velocity profiles), coeffs (reduced-model
coefficient extraction), etamap (eta* over a geometry grid), sweep (one
transport per swept parameter value).  Every run writes CSV data and a JSON
manifest into the output directory; plots are optional SVG.  Exit status 0 on
success; failures print a machine-readable JSON object to stderr.
"""

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .config import (ConfigError, apply_sweep_value, bundled_scenario,
                     bundled_scenario_names, config_hash, default_config,
                     load_config, robot_spec_from_config, scenario_from_config,
                     serialize_config)
from .flow import confinement_D, sample_profile, swimming_flow_sources, trace_pathline
from .geometry import HelixSection, build_robot_mesh
from .output import heatmap_svg, line_plot_svg, write_csv, write_json_atomic
from .rft import RftCoefficients, eta_star, eta_star_map
from .simulate import linear_fit, run_capture, run_transport
from .stokeslet import SolveError

TWO_PI = 2.0 * np.pi


def _now():
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


def _manifest_base(cfg, command):
    return {
        "command": command,
        "config_hash": config_hash(cfg),
        "code_version": __version__,
        "started": _now(),
        "physical_scale": cfg["physical_scale"],
        "summary": {},
        "status": "running",
    }


def _finish_manifest(manifest, out_dir, status="ok", reason=None):
    manifest["status"] = status
    if reason is not None:
        manifest["failure_reason"] = reason
    manifest["finished"] = _now()
    write_json_atomic(os.path.join(out_dir, "manifest.json"), manifest)


def _series_csv(path, result):
    cols, rows = result.series_rows()
    write_csv(path, cols, rows)


def _snapshots_csv(path, snapshots):
    rows = []
    for t, robot, fil in snapshots:
        if robot is not None:
            for i, p in enumerate(robot):
                rows.append((t, 0, i, p[0], p[1], p[2]))
        if fil is not None:
            for i, p in enumerate(fil):
                rows.append((t, 1, i, p[0], p[1], p[2]))
    write_csv(path, ["t", "body_id", "node_id", "x", "y", "z"], rows)


def _transport_summary(result):
    s = result.series
    t = s["t"]
    v_z = float((s["robot_z_top"][-1] - s["robot_z_top"][0]) / (t[-1] - t[0]))
    return {
        "V_z": v_z,
        "delta_z_t_end": float(s["delta_z"][-1]),
        "t_end": float(t[-1]),
        "stepped_out": bool(result.stepped_out),
        "outcome": result.outcome,
    }


def _cmd_simulate(cfg, out_dir, plot, threads, capture=False):
    scenario = scenario_from_config(cfg)
    if capture:
        scenario.placement = "ahead"
        result = run_capture(scenario)
    else:
        result = run_transport(scenario,
                               snapshots_dt=cfg["output"]["snapshots_dt"])
    _series_csv(os.path.join(out_dir, "timeseries.csv"), result)
    if result.snapshots:
        _snapshots_csv(os.path.join(out_dir, "snapshots.csv"), result.snapshots)
    if plot:
        s = result.series
        if not np.all(np.isnan(s["delta_z"])):
            line_plot_svg(os.path.join(out_dir, "delta-z.svg"), s["t"],
                          [("delta_z", s["delta_z"])], xlabel="t",
                          ylabel="delta_z", title="relative axial displacement")
        series = [("robot_z_top", s["robot_z_top"])]
        if not np.all(np.isnan(s["filament_z_top"])):
            series.append(("filament_z_top", s["filament_z_top"]))
        line_plot_svg(os.path.join(out_dir, "z-top.svg"), s["t"], series,
                      xlabel="t", ylabel="z_top", title="axial positions")
    return _transport_summary(result)


def _cmd_pathline(cfg, out_dir, plot, threads):
    spec = robot_spec_from_config(cfg)
    mesh = build_robot_mesh(spec)
    pl_cfg = cfg["pathline"]
    omega = pl_cfg["omega"]
    if omega is None:
        omega = cfg["drive"]["rotation_sign"] * TWO_PI * cfg["drive"]["frequency"]
    seed = None if pl_cfg["seed"] is None else np.array(pl_cfg["seed"])
    pl = trace_pathline(mesh, omega, seed=seed, duration=pl_cfg["duration"],
                        dt=pl_cfg["dt"])
    span = mesh.z_top - mesh.z_bottom
    D = confinement_D(pl, mesh.z_top - 0.25 * span, mesh.z_bottom + 0.25 * span)
    write_csv(os.path.join(out_dir, "pathline.csv"), ["t", "x", "y", "z"],
              [(t, p[0], p[1], p[2]) for t, p in zip(pl.times, pl.points)])
    if plot:
        r_axis = np.hypot(pl.points[:, 0], pl.points[:, 1])
        line_plot_svg(os.path.join(out_dir, "pathline.svg"), pl.times,
                      [("z", pl.points[:, 2]), ("radial distance", r_axis)],
                      xlabel="t", ylabel="position",
                      title="tracer pathline")
    return {"confinement_D": float(D), "omega": float(omega),
            "seed": [float(v) for v in pl.seed]}


def _cmd_flowfield(cfg, out_dir, plot, threads):
    spec = robot_spec_from_config(cfg)
    mesh = build_robot_mesh(spec)
    ff = cfg["flowfield"]
    omega = cfg["drive"]["rotation_sign"] * TWO_PI * cfg["drive"]["frequency"]
    fs, U, Om = swimming_flow_sources(mesh, omega)
    z_range = (mesh.z_bottom - ff["z_margin"], mesh.z_top + ff["z_margin"])
    rows = []
    profiles = {}
    for frame in ("lab", "co-moving"):
        for x_off in ff["x_offsets"]:
            prof = sample_profile(fs, x_off, z_range, ff["n_samples"],
                                  frame=frame, robot_vz=float(U[2]),
                                  exclusion_nodes=mesh.nodes,
                                  exclusion_radius=mesh.tube_radius)
            profiles[(frame, x_off)] = prof
            for z, uz, ok in zip(prof.z_values, prof.u_z, prof.valid):
                rows.append((frame, x_off, z, uz, bool(ok)))
    write_csv(os.path.join(out_dir, "profiles.csv"),
              ["frame", "x_offset", "z", "u_z", "valid"], rows)
    if plot:
        for frame in ("lab", "co-moving"):
            any_prof = profiles[(frame, ff["x_offsets"][0])]
            series = [(f"X={x_off:g}", profiles[(frame, x_off)].u_z)
                      for x_off in ff["x_offsets"]]
            name = "profiles-lab.svg" if frame == "lab" else "profiles-comoving.svg"
            line_plot_svg(os.path.join(out_dir, name), any_prof.z_values,
                          series, xlabel="z", ylabel="u_z",
                          title=f"axial velocity, {frame} frame")
    on_axis = profiles[("lab", 0.0)] if 0.0 in ff["x_offsets"] else None
    summary = {"robot_V_z": float(U[2]), "omega_z": float(Om[2])}
    if on_axis is not None:
        summary["mean_on_axis_u_z"] = float(np.nanmean(on_axis.u_z))
    return summary


def _cmd_coeffs(cfg, out_dir, plot, threads):
    from .flow import extract_cell
    cc = cfg["coeffs"]
    section = HelixSection("right", cc["R"], cc["lambda"], cc["r"],
                           cc["n_windings"])
    cell = extract_cell(section, central_fraction=cc["central_fraction"])
    c = RftCoefficients(A11=cell["A11"], A12=cell["A12"], alpha=cell["alpha"],
                        beta=cell["beta"], A21=cell["A21"], A22=cell["A22"])
    es = eta_star(c, cfg["etamap"]["L_over_Lf"])
    header = ["R", "lambda", "r", "n_windings", "alpha", "beta",
              "alpha_flatness", "beta_flatness", "A11", "A12", "A21", "A22",
              "eta_star"]
    row = [cc["R"], cc["lambda"], cc["r"], cc["n_windings"], cell["alpha"],
           cell["beta"], cell["alpha_flatness"], cell["beta_flatness"],
           cell["A11"], cell["A12"], cell["A21"], cell["A22"], es]
    write_csv(os.path.join(out_dir, "coeffs.csv"), header, [row])
    return {"alpha": cell["alpha"], "beta": cell["beta"],
            "A12_over_A11": cell["A12"] / cell["A11"], "eta_star": float(es)}


def _cmd_etamap(cfg, out_dir, plot, threads):
    em = cfg["etamap"]
    r_values = em["r_over_R"]
    if em["lambda_over_R"] is not None:
        l_values = em["lambda_over_R"]
    else:
        l_values = list(np.linspace(0.2, 4.0, em["n_lambda"]))
    # bound peak memory: coefficient solves on fine meshes run one at a time
    est_nodes = max(
        3 * TWO_PI * em["n_windings"]
        * np.hypot(em["R"], max(l_values) * em["R"] / TWO_PI)
        / (np.sqrt(3.0) * rr * em["R"])
        for rr in r_values)
    workers = 1 if est_nodes > 2500 else max(1, threads)

    cells = [(rr, lr) for rr in r_values for lr in l_values]

    def one(cell):
        rr, lr = cell
        rows = eta_star_map([rr], [lr], R=em["R"], n_windings=em["n_windings"],
                            L_over_Lf=em["L_over_Lf"],
                            central_fraction=em["central_fraction"])
        return rows[0]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(one, cells))
    else:
        rows = [one(c) for c in cells]

    header = ["r_over_R", "lambda_over_R", "A12_over_A11", "alpha", "beta",
              "eta_star"]
    write_csv(os.path.join(out_dir, "etamap.csv"), header,
              [[row[c] for c in header] for row in rows])
    grid = np.full((len(r_values), len(l_values)), np.nan)
    for idx, row in enumerate(rows):
        grid[idx // len(l_values), idx % len(l_values)] = row["eta_star"]
    if plot:
        heatmap_svg(os.path.join(out_dir, "eta-star-map.svg"), l_values,
                    r_values, grid, xlabel="lambda / R", ylabel="r / R",
                    title="eta*")
    valid = grid[np.isfinite(grid)]
    invalid_notes = sorted({row["note"] for row in rows if row["note"]})
    return {"n_cells": len(rows), "n_valid": int(np.isfinite(grid).sum()),
            "eta_star_min": float(valid.min()) if len(valid) else None,
            "eta_star_max": float(valid.max()) if len(valid) else None,
            "invalid_notes": invalid_notes}


def _cmd_sweep(cfg, out_dir, plot, threads):
    sw = cfg["sweep"]
    if sw is None:
        raise ConfigError(["sweep subcommand needs a 'sweep' block"])
    param, values = sw["parameter"], sw["values"]

    def one(value):
        sub = apply_sweep_value(cfg, param, value)
        result = run_transport(scenario_from_config(sub))
        return float(result.series["delta_z"][-1])

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            dz = list(ex.map(one, values))
    else:
        dz = [one(v) for v in values]

    write_csv(os.path.join(out_dir, "sweep.csv"), [param, "delta_z_t_end"],
              list(zip(values, dz)))
    fit = linear_fit(values, dz)
    if plot:
        vline = fit["zero_crossing"]
        if not (min(values) <= vline <= max(values)):
            vline = None
        line_plot_svg(os.path.join(out_dir, "sweep.svg"), np.asarray(values),
                      [("delta_z(t_end)", np.asarray(dz))], xlabel=param,
                      ylabel="delta_z", title=f"sweep over {param}",
                      markers=[True], vline=vline)
    return {"parameter": param, "values": [float(v) for v in values],
            "delta_z_t_end": dz, **fit}


_COMMANDS = {
    "simulate": _cmd_simulate,
    "capture": lambda cfg, out, plot, thr: _cmd_simulate(cfg, out, plot, thr,
                                                         capture=True),
    "pathline": _cmd_pathline,
    "flowfield": _cmd_flowfield,
    "coeffs": _cmd_coeffs,
    "etamap": _cmd_etamap,
    "sweep": _cmd_sweep,
}


def build_parser():
    p = argparse.ArgumentParser(
        prog="helifil",
        description="Simulation and analysis of torque-driven helical "
                    "micro-robots transporting passive elastic filaments "
                    "in viscous flow.")
    p.add_argument("--print-defaults", action="store_true",
                   help="print the full default configuration and exit")
    sub = p.add_subparsers(dest="command")
    for name in _COMMANDS:
        sp = sub.add_parser(name, help=f"run the {name} operation")
        src = sp.add_mutually_exclusive_group()
        src.add_argument("--config", help="path to a JSON configuration file")
        src.add_argument("--seed-scenario", choices=bundled_scenario_names(),
                         help="use a bundled scenario configuration")
        sp.add_argument("--out", help="output directory (default from config)")
        sp.add_argument("--threads", type=int, default=1,
                        help="worker threads for sweeps and maps")
        plotg = sp.add_mutually_exclusive_group()
        plotg.add_argument("--plot", dest="plot", action="store_true",
                           default=None, help="write SVG plots")
        plotg.add_argument("--no-plot", dest="plot", action="store_false",
                           default=None, help="skip SVG plots")
    return p


def _fail(kind, payload, code):
    sys.stderr.write(json.dumps({"error": kind, **payload}, sort_keys=True)
                     + "\n")
    return code


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.print_defaults:
        sys.stdout.write(serialize_config(default_config()))
        return 0
    if args.command is None:
        parser.print_help()
        return 2
    try:
        if args.seed_scenario:
            cfg = bundled_scenario(args.seed_scenario)
        elif args.config:
            cfg = load_config(args.config)
        else:
            raise ConfigError(["one of --config or --seed-scenario is required"])
    except ConfigError as exc:
        return _fail("config", {"messages": exc.errors}, 2)
    out_dir = args.out or cfg["output"]["directory"]
    os.makedirs(out_dir, exist_ok=True)
    plot = cfg["output"]["plots"] if args.plot is None else args.plot
    manifest = _manifest_base(cfg, args.command)
    manifest["config"] = cfg
    try:
        summary = _COMMANDS[args.command](cfg, out_dir, plot,
                                          max(1, args.threads))
    except ConfigError as exc:
        _finish_manifest(manifest, out_dir, status="failed",
                         reason="; ".join(exc.errors))
        return _fail("config", {"messages": exc.errors}, 2)
    except (SolveError, RuntimeError, ValueError) as exc:
        _finish_manifest(manifest, out_dir, status="failed", reason=str(exc))
        return _fail("runtime", {"message": str(exc)}, 3)
    manifest["summary"] = summary
    _finish_manifest(manifest, out_dir)
    return 0


if __name__ == "__main__":
    sys.exit(main())
