#!/usr/bin/env python3
"""End-to-end coverage study on the bundled 27 m corridor.

Simulates the received-power grid with and without the reflecting skin,
then walks through the full metric chain: thresholded maps, weak-zone
area, area reduction, difference statistics, and the coverage CDF.
Writes the CSV artifacts under demos/output/.
"""

from pathlib import Path

import numpy as np

import semesim
from semesim import coverage
from semesim.propagation import GridSolver

OUT = Path(__file__).parent / "output" / "coverage"


def main():
    scenario = semesim.load_scenario(semesim.bundled_path("hallway_a"))
    threshold = scenario.rt.threshold_power
    print(f"scenario: {len(scenario.walls)} walls, {len(scenario.aps)} AP(s), "
          f"{len(scenario.panels)} panel(s); threshold {threshold:.0f} dBm")

    solver = GridSolver(scenario)
    ref = solver.reference_grid()
    seme = solver.seme_grid()
    region = scenario.regions[0]

    cov_ref = coverage.threshold_map(ref, threshold)
    cov_seme = coverage.threshold_map(seme, threshold)
    area_ref = coverage.roi_area(cov_ref, region, ref.spacing)
    area_seme = coverage.roi_area(cov_seme, region, seme.spacing)
    rho = coverage.roi_reduction(area_ref, area_seme)
    print(f"\nweak-zone area: {area_ref:6.2f} m2 without the skin "
          f"({100 * area_ref / region.area:.1f}% of the hallway)")
    print(f"                {area_seme:6.2f} m2 with the skin  ->  reduction {100 * rho:.1f}%")

    _, stats = coverage.delta_power_map(seme, ref)
    print(f"\npower gain over the hallway: min {stats.min_db:.2f}  max {stats.max_db:.2f}  "
          f"avg {stats.avg_db:.2f}  dev {stats.dev_db:.2f}  [dB]")

    levels = np.arange(-75.0, -40.0 + 1e-9, 1.0)
    cdf_ref = coverage.empirical_cdf(ref, region, levels)
    cdf_seme = coverage.empirical_cdf(seme, region, levels)
    th_ref = coverage.prob_below(ref, region, threshold)
    th_seme = coverage.prob_below(seme, region, threshold)
    print(f"\nprobability of falling below {threshold:.0f} dBm: "
          f"{100 * th_ref:.1f}% -> {100 * th_seme:.1f}%")

    OUT.mkdir(parents=True, exist_ok=True)
    semesim.write_power_grid(ref, OUT / "power_ref.csv")
    semesim.write_power_grid(seme, OUT / "power_seme.csv")
    coverage.write_binary_map_csv(cov_ref, OUT / "binary_ref.csv")
    coverage.write_binary_map_csv(cov_seme, OUT / "binary_seme.csv")
    coverage.write_cdf_csv(cdf_ref, OUT / "cdf_ref.csv")
    coverage.write_cdf_csv(cdf_seme, OUT / "cdf_seme.csv")
    print(f"\nwrote grids, binary maps, and CDFs to {OUT}")


if __name__ == "__main__":
    main()
