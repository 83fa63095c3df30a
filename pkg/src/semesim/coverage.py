"""Coverage analytics: thresholded maps, area-below-threshold statistics,
empirical CDFs, difference maps, and link-quality indexes.

Convention note: the binary coverage maps use a strict "below threshold"
comparison, while the empirical CDF counts samples less than *or equal*
to the probe level.  Both conventions are kept as stated; they differ
only at exact ties.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .scenario import PowerGrid, Region


@dataclass(frozen=True)
class BinaryCoverageMap:
    """Per-point flag for received power strictly below the threshold."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    below_threshold: np.ndarray  # (ny, nx) bool, False at masked points
    region: np.ndarray  # (ny, nx) int, -1 where masked
    region_ids: tuple[str, ...]
    threshold: float  # dBm
    spacing: float


@dataclass(frozen=True)
class CdfCurve:
    p_hat_dbm: np.ndarray  # ascending probe levels
    theta: np.ndarray  # Pr{P_RX <= p_hat}, non-decreasing in [0, 1]


@dataclass(frozen=True)
class DeltaStats:
    min_db: float
    max_db: float
    avg_db: float
    dev_db: float  # population standard deviation


@dataclass(frozen=True)
class MetricStats:
    min: float
    max: float
    avg: float
    std: float


@dataclass(frozen=True)
class LinkStats:
    """Measured link statistics: throughputs in Mbps, latencies in ms."""

    download_mbps: MetricStats
    download_latency_ms: MetricStats
    upload_mbps: MetricStats
    upload_latency_ms: MetricStats


@dataclass(frozen=True)
class LinkReport:
    """Relative average changes plus the download-time comparison."""

    relative_change: dict  # metric name -> (seme_avg - ref_avg) / ref_avg
    download_time_ref_min: float
    download_time_seme_min: float
    time_saving: float  # (T_ref - T_seme) / T_ref
    payload_gb: float


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def threshold_map(grid: PowerGrid, p_th: float) -> BinaryCoverageMap:
    """Flag in-region points with value < p_th (strict comparison)."""
    if grid.values.size == 0:
        raise ValueError("empty power grid")
    with np.errstate(invalid="ignore"):
        below = (grid.values < p_th) & grid.in_region
    return BinaryCoverageMap(
        x=grid.x,
        y=grid.y,
        z=grid.z,
        below_threshold=below,
        region=grid.region,
        region_ids=grid.region_ids,
        threshold=p_th,
        spacing=grid.spacing,
    )


def roi_area(cov: BinaryCoverageMap, region: Region | str, spacing: float) -> float:
    """Below-threshold area inside one region: cell count times spacing^2."""
    if spacing <= 0.0:
        raise ValueError("spacing must be positive")
    region_id = region if isinstance(region, str) else region.id
    idx = cov.region_ids.index(region_id)
    count = int(np.count_nonzero(cov.below_threshold & (cov.region == idx)))
    return count * spacing**2


def roi_reduction(lambda_ref: float, lambda_seme: float) -> float:
    """Fractional shrinkage of the below-threshold area."""
    if lambda_ref <= 0.0:
        raise ValueError("reference area must be positive")
    if lambda_seme < 0.0:
        raise ValueError("area cannot be negative")
    return (lambda_ref - lambda_seme) / lambda_ref


def empirical_cdf(grid: PowerGrid, region: Region | str, p_hat_grid) -> CdfCurve:
    """Pr{P_RX <= p_hat} over one region, evaluated at the given levels."""
    region_id = region if isinstance(region, str) else region.id
    samples = grid.samples(region_id)
    samples = samples[np.isfinite(samples)]
    if samples.size == 0:
        raise ValueError(f"region {region_id!r} contains no samples")
    levels = np.sort(np.asarray(p_hat_grid, dtype=float))
    ordered = np.sort(samples)
    theta = np.searchsorted(ordered, levels, side="right") / samples.size
    return CdfCurve(p_hat_dbm=levels, theta=theta)


def prob_below(grid: PowerGrid, region: Region | str, p_th: float) -> float:
    """Single-level CDF value Pr{P_RX <= p_th} over a region."""
    return float(empirical_cdf(grid, region, [p_th]).theta[0])


def delta_power_map(seme: PowerGrid, ref: PowerGrid) -> tuple[PowerGrid, DeltaStats]:
    """Per-point power difference (seme - ref, dB) plus its statistics."""
    if not seme.same_lattice(ref):
        raise ValueError("power grids are defined on different lattices")
    delta = seme.values - ref.values
    flat = delta[seme.in_region]
    flat = flat[np.isfinite(flat)]
    if flat.size == 0:
        raise ValueError("no overlapping in-region samples")
    stats = DeltaStats(
        min_db=float(np.min(flat)),
        max_db=float(np.max(flat)),
        avg_db=float(np.mean(flat)),
        dev_db=float(np.std(flat)),  # population deviation: grids are exhaustive
    )
    grid = PowerGrid(
        x=seme.x,
        y=seme.y,
        z=seme.z,
        values=delta,
        region=seme.region,
        region_ids=seme.region_ids,
        spacing=seme.spacing,
        metadata={"kind": "delta_db"},
    )
    return grid, stats


def link_metrics(ref: LinkStats, seme: LinkStats, payload_gb: float = 7.0) -> LinkReport:
    """Relative average changes per link metric and the download-time pair
    for a payload of `payload_gb` (GB = 1e9 bytes)."""
    pairs = {
        "download_mbps": (ref.download_mbps, seme.download_mbps),
        "download_latency_ms": (ref.download_latency_ms, seme.download_latency_ms),
        "upload_mbps": (ref.upload_mbps, seme.upload_mbps),
        "upload_latency_ms": (ref.upload_latency_ms, seme.upload_latency_ms),
    }
    rel = {}
    for name, (r, s) in pairs.items():
        if r.avg <= 0.0:
            raise ValueError(f"reference average for {name} must be positive")
        rel[name] = (s.avg - r.avg) / r.avg
    bits = payload_gb * 8e9
    t_ref = bits / (ref.download_mbps.avg * 1e6) / 60.0
    t_seme = bits / (seme.download_mbps.avg * 1e6) / 60.0
    return LinkReport(
        relative_change=rel,
        download_time_ref_min=t_ref,
        download_time_seme_min=t_seme,
        time_saving=(t_ref - t_seme) / t_ref,
        payload_gb=payload_gb,
    )


# ---------------------------------------------------------------------------
# Exports
# ---------------------------------------------------------------------------

CDF_HEADER = "p_hat_dbm,theta"
BINARY_MAP_HEADER = "x_m,y_m,z_m,region,below_threshold"
DELTA_MAP_HEADER = "x_m,y_m,z_m,region,delta_db"


def write_delta_map_csv(delta: PowerGrid, path) -> None:
    lines = [DELTA_MAP_HEADER]
    for j in range(len(delta.y)):
        for i in range(len(delta.x)):
            ridx = int(delta.region[j, i])
            name = delta.region_ids[ridx] if ridx >= 0 else ""
            val = delta.values[j, i]
            val_s = repr(float(val)) if np.isfinite(val) else ""
            lines.append(
                f"{float(delta.x[i])!r},{float(delta.y[j])!r},{float(delta.z[j, i])!r},{name},{val_s}"
            )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_cdf_csv(curve: CdfCurve, path) -> None:
    lines = [CDF_HEADER]
    for p, t in zip(curve.p_hat_dbm, curve.theta):
        lines.append(f"{float(p)!r},{float(t)!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_binary_map_csv(cov: BinaryCoverageMap, path) -> None:
    lines = [BINARY_MAP_HEADER]
    for j in range(len(cov.y)):
        for i in range(len(cov.x)):
            ridx = int(cov.region[j, i])
            name = cov.region_ids[ridx] if ridx >= 0 else ""
            flag = "" if ridx < 0 else str(int(cov.below_threshold[j, i]))
            lines.append(
                f"{float(cov.x[i])!r},{float(cov.y[j])!r},{float(cov.z[j, i])!r},{name},{flag}"
            )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def delta_stats_dict(stats: DeltaStats) -> dict:
    return {
        "min_db": stats.min_db,
        "max_db": stats.max_db,
        "avg_db": stats.avg_db,
        "dev_db": stats.dev_db,
    }


def write_delta_stats_json(stats: DeltaStats, path, extra: dict | None = None) -> None:
    doc = delta_stats_dict(stats)
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
