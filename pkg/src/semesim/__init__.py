"""semesim: indoor Wi-Fi coverage simulation with passive reflecting skins.

An image-method multipath solver predicts received-power grids over
floor-plan scenarios; engineered reflecting panels add anomalous-reflection
contributions; analytics cover thresholded coverage, area reduction,
empirical CDFs, difference maps, sizing/placement sweeps, link-quality
indexes, and cost-of-ownership comparison.
"""

from .analysis import (
    SensitivityMap,
    SizeSweepRow,
    StdComparisonReport,
    TcoModel,
    TcoReport,
    sensitivity_sweep,
    size_sweep,
    std_comparison,
    tco_compare,
    tco_total,
)
from .coverage import (
    BinaryCoverageMap,
    CdfCurve,
    DeltaStats,
    LinkReport,
    LinkStats,
    MetricStats,
    delta_power_map,
    empirical_cdf,
    link_metrics,
    roi_area,
    roi_reduction,
    threshold_map,
)
from .ems import (
    AnglePair,
    DirectivityPattern,
    EmsPanel,
    build_panel,
    far_field_directivity,
    local_angles,
    scattered_field,
    synthesize_phase_profile,
)
from .geometry import Hit, WallFace, line_of_sight, mirror_point, segment_hits
from .propagation import (
    GridSolver,
    RayPath,
    path_field,
    received_power,
    simulate_grid,
    trace_paths,
)
from .scenario import (
    AccessPoint,
    AntennaPattern,
    Diagnostic,
    EmsPanelSpec,
    GridSpec,
    Material,
    ParseError,
    PowerGrid,
    Region,
    RtSettings,
    Scenario,
    ValidationError,
    Wall,
    load_scenario,
    read_power_grid,
    validate_scenario,
    write_power_grid,
)

__version__ = "0.1.0"

BUNDLED_SCENARIOS = {
    "hallway_a": "data/hallway_a.scn",
    "free_space": "data/free_space.scn",
}


def bundled_path(name: str):
    """Filesystem path of a bundled scenario or data file."""
    from pathlib import Path

    base = Path(__file__).parent
    if name in BUNDLED_SCENARIOS:
        return base / BUNDLED_SCENARIOS[name]
    return base / "data" / name
