#!/usr/bin/env python3
"""Cost comparison: passive skin versus installing a second access point.

Loads the bundled cost file, prints the decomposition for both options,
and reports the saving over a five-year horizon, total and per square
meter of the served hallway.
"""

import semesim
from semesim.analysis import load_tco_file, tco_compare, tco_total


def main():
    seme, std, area = load_tco_file(semesim.bundled_path("tco_hallway_a.json"))

    print("cost decomposition [$]:")
    print("                       skin     second AP")
    print(f"  acquisition        {seme.acquisition:6.0f}      {std.acquisition:6.0f}")
    print(f"  commissioning      {seme.commissioning:6.0f}      {std.commissioning:6.0f}")
    print(f"  operation [$/yr]   {seme.operation_per_year:6.0f}      {std.operation_per_year:6.0f}")
    print(f"  decommissioning    {seme.decommissioning:6.0f}      {std.decommissioning:6.0f}")

    for years in (1.0, 3.0, 5.0, 10.0):
        print(f"\n  {years:4.0f}-year totals:   {tco_total(seme, years):7.0f}     "
              f"{tco_total(std, years):7.0f}")

    report = tco_compare(seme, std, 5.0, area)
    print(f"\nover 5 years the passive option saves {report.saving:.0f} $ "
          f"({100 * report.relative_saving:.1f}% of the active option),")
    print(f"or {report.saving_per_m2:.2f} $ per square meter of the {area:.1f} m2 hallway")


if __name__ == "__main__":
    main()
