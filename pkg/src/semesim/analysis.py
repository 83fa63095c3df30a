"""Campaign-level procedures: panel size sweep, placement sensitivity,
second-access-point comparison, and total cost of ownership."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import coverage, ems
from .coverage import CdfCurve, DeltaStats
from .propagation import GridSolver
from .scenario import AccessPoint, EmsPanelSpec, Scenario

# Levels at which coverage CDFs are evaluated [dBm].
DEFAULT_CDF_LEVELS = np.arange(-75.0, -40.0 + 1e-9, 0.5)


@dataclass(frozen=True)
class SizeSweepRow:
    side_m: float  # panel side length L
    cells_per_side: int
    roi_area_seme_m2: float
    roi_reduction: float
    delta_stats: DeltaStats
    prob_below_threshold: float  # CDF evaluated at the coverage threshold


@dataclass(frozen=True)
class SensitivityMap:
    dy_m: np.ndarray  # (ndy,) in-plane horizontal offsets
    dz_m: np.ndarray  # (ndz,) in-plane vertical offsets
    roi_reduction: np.ndarray  # (ndy, ndz), NaN where the offset is invalid
    nominal_reduction: float
    cdf_horizontal: tuple[tuple[float, CdfCurve], ...]  # (dy, curve) at dz = 0
    cdf_vertical: tuple[tuple[float, CdfCurve], ...]  # (dz, curve) at dy = 0


@dataclass(frozen=True)
class TcoModel:
    """Cost decomposition: one-off acquisition/commissioning/decommissioning
    plus a yearly operation cost."""

    acquisition: float  # $
    commissioning: float  # $
    operation_per_year: float  # $/year
    decommissioning: float  # $


@dataclass(frozen=True)
class TcoReport:
    dt_years: float
    area_m2: float
    total_seme: float
    total_std: float
    saving: float  # total_std - total_seme
    relative_saving: float  # saving / total_std
    saving_per_m2: float


@dataclass(frozen=True)
class StdComparisonReport:
    """Panel-based vs second-access-point coverage enhancement."""

    roi_ref_m2: float
    roi_seme_m2: float
    roi_std_m2: float
    reduction_seme: float | None
    reduction_std: float | None
    prob_below_ref: float
    prob_below_seme: float
    prob_below_std: float
    no_roi: bool  # reference grid has no below-threshold cells


# ---------------------------------------------------------------------------
# Total cost of ownership
# ---------------------------------------------------------------------------


def tco_total(model: TcoModel, dt_years: float) -> float:
    """Total cost over a time horizon; operation accrues yearly."""
    if dt_years < 0.0:
        raise ValueError("time horizon must be non-negative")
    return (
        model.acquisition
        + model.commissioning
        + model.operation_per_year * dt_years
        + model.decommissioning
    )


def tco_compare(seme: TcoModel, std: TcoModel, dt_years: float, area_m2: float) -> TcoReport:
    """Cost advantage of the panel option over the extra-AP option."""
    if area_m2 <= 0.0:
        raise ValueError("area must be positive")
    total_seme = tco_total(seme, dt_years)
    total_std = tco_total(std, dt_years)
    saving = total_std - total_seme
    if total_std == 0.0:
        raise ValueError("standard-option cost is zero; relative saving undefined")
    return TcoReport(
        dt_years=dt_years,
        area_m2=area_m2,
        total_seme=total_seme,
        total_std=total_std,
        saving=saving,
        relative_saving=saving / total_std,
        saving_per_m2=saving / area_m2,
    )


def load_tco_file(path) -> tuple[TcoModel, TcoModel, float]:
    """Read a cost file: {"area_m2", "seme": {...}, "std": {...}}."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))

    def model(obj) -> TcoModel:
        return TcoModel(
            acquisition=float(obj["acquisition"]),
            commissioning=float(obj["commissioning"]),
            operation_per_year=float(obj["operation_per_year"]),
            decommissioning=float(obj["decommissioning"]),
        )

    return model(doc["seme"]), model(doc["std"]), float(doc["area_m2"])


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


def _coverage_numbers(ref_grid, grid, region_id, threshold):
    cov_ref = coverage.threshold_map(ref_grid, threshold)
    cov = coverage.threshold_map(grid, threshold)
    spacing = grid.spacing
    area_ref = coverage.roi_area(cov_ref, region_id, spacing)
    area = coverage.roi_area(cov, region_id, spacing)
    reduction = coverage.roi_reduction(area_ref, area) if area_ref > 0 else None
    return area_ref, area, reduction


def size_sweep(base: Scenario, panel_id: str, sizes, region_id: str | None = None) -> list[SizeSweepRow]:
    """Re-synthesise the named panel at each requested side length and
    re-evaluate the coverage metrics.

    `sizes` items are either a bare side length L (cells_per_side is then
    round(L / nominal pitch)) or an explicit (L, N) pair; each row derives
    its cell pitch as L / N.
    """
    spec = base.panel(panel_id)
    region = base.regions[0].id if region_id is None else region_id
    threshold = base.rt.threshold_power
    solver = GridSolver(base)
    ref_grid = solver.reference_grid()

    rows: list[SizeSweepRow] = []
    for item in sizes:
        if isinstance(item, (tuple, list)):
            side, n_cells = float(item[0]), int(item[1])
        else:
            side = float(item)
            n_cells = max(1, round(side / spec.cell_pitch))
        variant = replace(spec, cells_per_side=n_cells, cell_pitch=side / n_cells)
        panel = ems.build_panel(variant, base)
        grid = solver.seme_grid([panel])
        _, area, reduction = _coverage_numbers(ref_grid, grid, region, threshold)
        _, stats = coverage.delta_power_map(grid, ref_grid)
        rows.append(
            SizeSweepRow(
                side_m=side,
                cells_per_side=n_cells,
                roi_area_seme_m2=area,
                roi_reduction=reduction if reduction is not None else float("nan"),
                delta_stats=stats,
                prob_below_threshold=coverage.prob_below(grid, region, threshold),
            )
        )
    return rows


def _displaced_panel(spec: EmsPanelSpec, nominal: ems.EmsPanel, dy: float, dz: float) -> ems.EmsPanel:
    """Shift a built panel in its wall plane, keeping the nominal phase."""
    e_u, e_v, _ = ems.panel_frame(spec)
    shift = dy * e_u + dz * e_v
    moved = replace(spec, barycenter=tuple(np.asarray(spec.barycenter) + shift))
    return ems.EmsPanel(
        spec=moved,
        cell_centers=nominal.cell_centers + shift,
        reflection_coeffs=nominal.reflection_coeffs,
        wavelength=nominal.wavelength,
    )


def _panel_on_wall(panel: ems.EmsPanel, scenario: Scenario) -> bool:
    """True when every cell still projects onto a wall face near the panel."""
    from .geometry import unit

    cells = panel.cell_centers.reshape(-1, 3)
    for f in scenario.faces():
        fn = f.normal
        rel = cells - f.origin
        plane = np.abs(rel @ fn)
        u = rel @ unit(f.edge_u)
        v = rel @ unit(f.edge_v)
        ok = (
            (plane <= 0.05)
            & (u >= -1e-9)
            & (u <= f.u_len + 1e-9)
            & (v >= -1e-9)
            & (v <= f.v_len + 1e-9)
        )
        if bool(np.all(ok)):
            return True
    return False


def sensitivity_sweep(
    base: Scenario,
    panel_id: str,
    dy_range,
    dz_range,
    region_id: str | None = None,
    cdf_levels=DEFAULT_CDF_LEVELS,
) -> SensitivityMap:
    """Coverage robustness to panel placement errors.

    The panel barycenter is displaced in the wall plane by each (dy, dz);
    the phase profile stays at its nominal synthesis.  Offsets that push
    any cell off the mounting wall are marked invalid, not fatal.
    """
    dy = np.asarray(list(dy_range), dtype=float)
    dz = np.asarray(list(dz_range), dtype=float)
    if not (np.any(dy == 0.0) and np.any(dz == 0.0)):
        raise ValueError("offset ranges must include 0")
    spec = base.panel(panel_id)
    region = base.regions[0].id if region_id is None else region_id
    threshold = base.rt.threshold_power
    solver = GridSolver(base)
    ref_grid = solver.reference_grid()
    nominal = ems.build_panel(spec, base)

    cov_ref = coverage.threshold_map(ref_grid, threshold)
    area_ref = coverage.roi_area(cov_ref, region, ref_grid.spacing)
    if area_ref <= 0.0:
        raise ValueError("reference grid has no below-threshold cells")

    rho = np.full((len(dy), len(dz)), np.nan)
    cdf_h: list[tuple[float, CdfCurve]] = []
    cdf_v: list[tuple[float, CdfCurve]] = []
    for i, offy in enumerate(dy):
        for j, offz in enumerate(dz):
            panel = _displaced_panel(spec, nominal, offy, offz)
            if not _panel_on_wall(panel, base):
                continue
            grid = solver.seme_grid([panel])
            cov = coverage.threshold_map(grid, threshold)
            area = coverage.roi_area(cov, region, grid.spacing)
            rho[i, j] = coverage.roi_reduction(area_ref, area)
            if offz == 0.0:
                cdf_h.append((float(offy), coverage.empirical_cdf(grid, region, cdf_levels)))
            if offy == 0.0:
                cdf_v.append((float(offz), coverage.empirical_cdf(grid, region, cdf_levels)))
    nominal_rho = float(rho[np.nonzero(dy == 0.0)[0][0], np.nonzero(dz == 0.0)[0][0]])
    return SensitivityMap(
        dy_m=dy,
        dz_m=dz,
        roi_reduction=rho,
        nominal_reduction=nominal_rho,
        cdf_horizontal=tuple(cdf_h),
        cdf_vertical=tuple(cdf_v),
    )


def std_comparison(base: Scenario, extra_ap: AccessPoint, region_id: str | None = None) -> StdComparisonReport:
    """Compare the panel deployment against adding a second access point
    (panels disabled), on the same reference scenario."""
    region = base.regions[0].id if region_id is None else region_id
    threshold = base.rt.threshold_power

    solver = GridSolver(base)
    ref_grid = solver.reference_grid()
    seme_grid = solver.seme_grid()

    std_scenario = replace(base, aps=base.aps + (extra_ap,))
    std_grid = GridSolver(std_scenario).reference_grid()

    spacing = ref_grid.spacing
    area_ref = coverage.roi_area(coverage.threshold_map(ref_grid, threshold), region, spacing)
    area_seme = coverage.roi_area(coverage.threshold_map(seme_grid, threshold), region, spacing)
    area_std = coverage.roi_area(coverage.threshold_map(std_grid, threshold), region, spacing)
    no_roi = area_ref <= 0.0
    return StdComparisonReport(
        roi_ref_m2=area_ref,
        roi_seme_m2=area_seme,
        roi_std_m2=area_std,
        reduction_seme=None if no_roi else coverage.roi_reduction(area_ref, area_seme),
        reduction_std=None if no_roi else coverage.roi_reduction(area_ref, area_std),
        prob_below_ref=coverage.prob_below(ref_grid, region, threshold),
        prob_below_seme=coverage.prob_below(seme_grid, region, threshold),
        prob_below_std=coverage.prob_below(std_grid, region, threshold),
        no_roi=no_roi,
    )


# ---------------------------------------------------------------------------
# Exports
# ---------------------------------------------------------------------------

SIZE_SWEEP_HEADER = (
    "L_m,N,lambda_seme_m2,rho_pct,dp_min_db,dp_max_db,dp_avg_db,dp_dev_db,theta_th_pct"
)
SENSITIVITY_HEADER = "dy_m,dz_m,rho_pct"


def write_size_sweep_csv(rows: list[SizeSweepRow], path) -> None:
    lines = [SIZE_SWEEP_HEADER]
    for r in rows:
        s = r.delta_stats
        lines.append(
            f"{r.side_m:.4f},{r.cells_per_side},{r.roi_area_seme_m2:.4f},"
            f"{100.0 * r.roi_reduction:.2f},{s.min_db:.2f},{s.max_db:.2f},"
            f"{s.avg_db:.2f},{s.dev_db:.2f},{100.0 * r.prob_below_threshold:.2f}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_sensitivity_csv(result: SensitivityMap, path) -> None:
    lines = [SENSITIVITY_HEADER]
    for i, offy in enumerate(result.dy_m):
        for j, offz in enumerate(result.dz_m):
            rho = result.roi_reduction[i, j]
            rho_s = f"{100.0 * rho:.2f}" if np.isfinite(rho) else ""
            lines.append(f"{float(offy)!r},{float(offz)!r},{rho_s}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_tco_json(report: TcoReport, path) -> None:
    doc = {
        "dt_years": report.dt_years,
        "area_m2": report.area_m2,
        "total_seme_usd": report.total_seme,
        "total_std_usd": report.total_std,
        "saving_usd": report.saving,
        "relative_saving": report.relative_saving,
        "saving_per_m2_usd": report.saving_per_m2,
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
