"""Command-line front end.

Exit codes: 0 success, 1 scenario/validation problem, 2 I/O problem.
Identical inputs produce byte-identical output files regardless of the
worker count (cap workers with the SEME_THREADS environment variable).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import analysis, coverage, ems
from .propagation import GridSolver
from .scenario import ScenarioError, load_scenario, validate_scenario, write_power_grid

BUNDLED_DIR = Path(__file__).parent / "data"


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", required=True, help="scenario file (.scn JSON)")
    p.add_argument("--out", default=".", help="output directory (created if missing)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semesim",
        description="Indoor coverage simulation with passive reflecting skins",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="power grids, coverage maps, CDFs, and difference map")
    _add_common(p)
    p.add_argument("--threshold-dbm", type=float, default=None, help="override coverage threshold")
    p.add_argument("--mode", choices=("incoherent", "coherent"), default=None,
                   help="override the path summation mode")
    p.add_argument("--max-reflections", type=int, default=None, help="override reflection order")
    p.add_argument("--no-panels", action="store_true", help="reference run only")

    p = sub.add_parser("angles", help="incidence/reflection angles of a panel deployment")
    p.add_argument("--scenario", required=True)
    p.add_argument("--panel", default=None, help="panel id (default: first panel)")

    p = sub.add_parser("pattern", help="far-field directivity pattern of a panel")
    _add_common(p)
    p.add_argument("--panel", default=None)
    p.add_argument("--resolution-deg", type=float, default=0.5)
    p.add_argument("--design-illumination", action="store_true",
                   help="illuminate with the spherical wavefront of the panel's "
                        "source AP instead of a plane wave")

    p = sub.add_parser("sweep-size", help="coverage metrics versus panel side length")
    _add_common(p)
    p.add_argument("--panel", default=None)
    p.add_argument("--sizes", default="0.28:10,0.40:15,0.55:20,0.66:24,0.80:30",
                   help="comma list of L or L:N pairs (meters, cells per side)")

    p = sub.add_parser("sensitivity", help="coverage robustness to panel placement errors")
    _add_common(p)
    p.add_argument("--panel", default=None)
    p.add_argument("--dy-range", default="-0.1:0.1:0.05",
                   help="min:max:step [m]; use --dy-range=... for negative bounds")
    p.add_argument("--dz-range", default="-0.1:0.1:0.05",
                   help="min:max:step [m]; use --dz-range=... for negative bounds")

    p = sub.add_parser("tco", help="total cost of ownership comparison")
    p.add_argument("--costs", default=str(BUNDLED_DIR / "tco_hallway_a.json"),
                   help="cost file (JSON with seme/std models and area_m2)")
    p.add_argument("--dt-years", type=float, default=5.0)
    p.add_argument("--area", type=float, default=None, help="override the area [m^2]")
    p.add_argument("--out", default=None, help="optional output directory for tco.json")

    p = sub.add_parser("validate", help="check a scenario file and print diagnostics")
    p.add_argument("--scenario", required=True)
    return parser


def _parse_sizes(text: str) -> list:
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if ":" in item:
            side, cells = item.split(":")
            out.append((float(side), int(cells)))
        else:
            out.append(float(item))
    return out


def _parse_range(text: str) -> np.ndarray:
    lo, hi, step = (float(v) for v in text.split(":"))
    n = int(round((hi - lo) / step))
    return lo + step * np.arange(n + 1)


def _pick_panel(scenario, panel_id):
    if panel_id is not None:
        return scenario.panel(panel_id)
    if not scenario.panels:
        raise ScenarioError("scenario defines no panels")
    return scenario.panels[0]


def _apply_overrides(scenario, args):
    rt = scenario.rt
    changes = {}
    if getattr(args, "threshold_dbm", None) is not None:
        changes["threshold_power"] = args.threshold_dbm
    if getattr(args, "mode", None) is not None:
        changes["summation_mode"] = args.mode
    if getattr(args, "max_reflections", None) is not None:
        if not 0 <= args.max_reflections <= 6:
            raise ScenarioError("--max-reflections must be in [0, 6]")
        changes["max_reflections"] = args.max_reflections
    if changes:
        scenario = dataclasses.replace(scenario, rt=dataclasses.replace(rt, **changes))
    return scenario


def _cmd_simulate(args) -> int:
    scenario = _apply_overrides(load_scenario(args.scenario), args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    threshold = scenario.rt.threshold_power
    levels = analysis.DEFAULT_CDF_LEVELS

    solver = GridSolver(scenario)
    ref = solver.reference_grid()
    write_power_grid(ref, out / "power_ref.csv")
    coverage.write_binary_map_csv(coverage.threshold_map(ref, threshold), out / "binary_ref.csv")
    for region in scenario.regions:
        curve = coverage.empirical_cdf(ref, region.id, levels)
        coverage.write_cdf_csv(curve, out / f"cdf_ref_{region.id}.csv")

    summary = {"threshold_dbm": threshold, "regions": {}}
    cov_ref = coverage.threshold_map(ref, threshold)
    for region in scenario.regions:
        summary["regions"][region.id] = {
            "roi_ref_m2": coverage.roi_area(cov_ref, region.id, ref.spacing),
            "theta_th_ref": coverage.prob_below(ref, region.id, threshold),
        }

    if not args.no_panels and scenario.panels:
        seme = solver.seme_grid()
        write_power_grid(seme, out / "power_seme.csv")
        cov_seme = coverage.threshold_map(seme, threshold)
        coverage.write_binary_map_csv(cov_seme, out / "binary_seme.csv")
        for region in scenario.regions:
            curve = coverage.empirical_cdf(seme, region.id, levels)
            coverage.write_cdf_csv(curve, out / f"cdf_seme_{region.id}.csv")
        delta, stats = coverage.delta_power_map(seme, ref)
        coverage.write_delta_map_csv(delta, out / "delta_map.csv")
        extra = {}
        for region in scenario.regions:
            entry = summary["regions"][region.id]
            entry["roi_seme_m2"] = coverage.roi_area(cov_seme, region.id, seme.spacing)
            entry["theta_th_seme"] = coverage.prob_below(seme, region.id, threshold)
            if entry["roi_ref_m2"] > 0:
                entry["rho"] = coverage.roi_reduction(entry["roi_ref_m2"], entry["roi_seme_m2"])
        extra["regions"] = summary["regions"]
        extra["threshold_dbm"] = threshold
        coverage.write_delta_stats_json(stats, out / "stats.json", extra=extra)
        print(f"wrote reference + panel grids to {out}")
    else:
        coverage.write_delta_stats_json(
            coverage.DeltaStats(0.0, 0.0, 0.0, 0.0), out / "stats.json", extra=summary
        )
        print(f"wrote reference grid to {out}")
    return 0


def _cmd_angles(args) -> int:
    scenario = load_scenario(args.scenario)
    spec = _pick_panel(scenario, args.panel)
    if spec.phase_profile.kind != "synthesized":
        raise ScenarioError(f"panel {spec.id!r} has an explicit phase matrix; "
                            "no source/focus geometry to report")
    ap = scenario.ap(spec.phase_profile.source_ap)
    inc = ems.local_angles(ap.position, spec)
    ref = ems.local_angles(spec.phase_profile.focus, spec)
    print(
        f"theta_i={inc.theta_deg:.1f} phi_i={inc.phi_deg:.1f} "
        f"theta_r={ref.theta_deg:.1f} phi_r={ref.phi_deg:.1f}"
    )
    return 0


def _cmd_pattern(args) -> int:
    scenario = load_scenario(args.scenario)
    spec = _pick_panel(scenario, args.panel)
    panel = ems.build_panel(spec, scenario)
    if spec.phase_profile.kind != "synthesized":
        raise ScenarioError("pattern needs a synthesized panel (incidence comes from its source AP)")
    ap = scenario.ap(spec.phase_profile.source_ap)
    incidence = ems.local_angles(ap.position, spec)
    source_range = float("inf")
    if args.design_illumination:
        source_range = float(
            np.linalg.norm(np.asarray(ap.position) - np.asarray(spec.barycenter))
        )
    pattern = ems.far_field_directivity(panel, incidence, args.resolution_deg, source_range)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ems.write_pattern_csv(pattern, out / f"pattern_{spec.id}.csv")
    print(
        f"d_max_db={pattern.d_max_db:.2f} "
        f"peak_theta={pattern.peak.theta_deg:.2f} peak_phi={pattern.peak.phi_deg:.2f}"
    )
    return 0


def _cmd_sweep_size(args) -> int:
    scenario = load_scenario(args.scenario)
    spec = _pick_panel(scenario, args.panel)
    rows = analysis.size_sweep(scenario, spec.id, _parse_sizes(args.sizes))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    analysis.write_size_sweep_csv(rows, out / "size_sweep.csv")
    for r in rows:
        print(
            f"L={r.side_m:.2f} N={r.cells_per_side} rho={100 * r.roi_reduction:.2f}% "
            f"dp_avg={r.delta_stats.avg_db:.2f} dB"
        )
    return 0


def _cmd_sensitivity(args) -> int:
    scenario = load_scenario(args.scenario)
    spec = _pick_panel(scenario, args.panel)
    result = analysis.sensitivity_sweep(
        scenario, spec.id, _parse_range(args.dy_range), _parse_range(args.dz_range)
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    analysis.write_sensitivity_csv(result, out / "sensitivity.csv")
    for dy, curve in result.cdf_horizontal:
        coverage.write_cdf_csv(curve, out / f"cdf_dy_{dy:+.3f}.csv")
    for dz, curve in result.cdf_vertical:
        coverage.write_cdf_csv(curve, out / f"cdf_dz_{dz:+.3f}.csv")
    finite = result.roi_reduction[np.isfinite(result.roi_reduction)]
    print(
        f"nominal_rho={100 * result.nominal_reduction:.2f}% "
        f"min_rho={100 * float(finite.min()):.2f}% max_rho={100 * float(finite.max()):.2f}%"
    )
    return 0


def _cmd_tco(args) -> int:
    seme, std, area = analysis.load_tco_file(args.costs)
    if args.area is not None:
        area = args.area
    report = analysis.tco_compare(seme, std, args.dt_years, area)
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        analysis.write_tco_json(report, out / "tco.json")
    print(
        f"total_seme_usd={report.total_seme:.2f} total_std_usd={report.total_std:.2f} "
        f"saving_usd={report.saving:.2f} relative_saving_pct={100 * report.relative_saving:.1f} "
        f"saving_per_m2_usd={report.saving_per_m2:.2f}"
    )
    return 0


def _cmd_validate(args) -> int:
    scenario_path = Path(args.scenario)
    if not scenario_path.exists():
        print(f"error: no such file: {scenario_path}", file=sys.stderr)
        return 2
    from .scenario import loads

    try:
        text = scenario_path.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        scenario = loads(text)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    diags = validate_scenario(scenario)
    for d in diags:
        print(str(d))
    if any(d.severity == "error" for d in diags):
        return 1
    print(f"{scenario_path.name}: ok "
          f"({len(scenario.walls)} walls, {len(scenario.aps)} APs, "
          f"{len(scenario.panels)} panels, {len(scenario.regions)} regions)")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "angles": _cmd_angles,
    "pattern": _cmd_pattern,
    "sweep-size": _cmd_sweep_size,
    "sensitivity": _cmd_sensitivity,
    "tco": _cmd_tco,
    "validate": _cmd_validate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = _COMMANDS[args.command]
    try:
        return handler(args)
    except FileNotFoundError as exc:
        print(f"error: no such file: {exc.filename or exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ScenarioError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
