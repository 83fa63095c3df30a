#!/usr/bin/env python3
"""Designing the reflecting skin for the bundled corridor.

Walks through the deployment geometry (incidence/reflection angles in
the panel frame), the conjugate-phase synthesis, and the far-field
directivity check, comparing against the ideal-aperture closed form.
"""

import math
from pathlib import Path

import numpy as np

import semesim
from semesim import ems
from semesim.constants import wavelength

OUT = Path(__file__).parent / "output" / "panel"


def main():
    scenario = semesim.load_scenario(semesim.bundled_path("hallway_a"))
    spec = scenario.panel("skin_a")
    ap = scenario.ap(spec.phase_profile.source_ap)
    lam = wavelength(ap.frequency)
    print(f"panel {spec.id}: {spec.cells_per_side}x{spec.cells_per_side} cells, "
          f"pitch {1e3 * spec.cell_pitch:.1f} mm, side {spec.side_length:.2f} m "
          f"(wavelength {1e3 * lam:.1f} mm)")

    incidence = ems.local_angles(ap.position, spec)
    reflection = ems.local_angles(spec.phase_profile.focus, spec)
    print(f"incidence  from the AP:    theta {incidence.theta_deg:6.2f}  "
          f"phi {incidence.phi_deg:8.2f}  [deg]")
    print(f"reflection toward focus:   theta {reflection.theta_deg:6.2f}  "
          f"phi {reflection.phi_deg:8.2f}  [deg]")
    print("the skin must bend the beam off the mirror direction in both angles")

    phases = ems.synthesize_phase_profile(spec, ap.position, spec.phase_profile.focus, lam)
    print(f"\nsynthesized phase profile: {phases.shape[0]}x{phases.shape[1]} cells, "
          f"range [{np.degrees(phases.min()):.0f}, {np.degrees(phases.max()):.0f}] deg")

    panel = ems.build_panel(spec, scenario)
    source_range = float(np.linalg.norm(np.asarray(ap.position) - np.asarray(spec.barycenter)))
    pattern = ems.far_field_directivity(panel, incidence, 0.5, source_range)
    ideal = 10 * math.log10(4 * math.pi * spec.side_length**2 / lam**2)
    print(f"\ndirectivity under the deployment illumination: {pattern.d_max_db:.2f} dB "
          f"(ideal uniform aperture of this size: {ideal:.2f} dB)")
    print(f"beam peak at theta {pattern.peak.theta_deg:.1f}, phi {pattern.peak.phi_deg:.1f} deg "
          f"-- within a beamwidth of the focus direction")
    print(f"scattered/intercepted power ratio: {pattern.power_fraction:.3f}")

    OUT.mkdir(parents=True, exist_ok=True)
    ems.write_pattern_csv(pattern, OUT / "pattern_skin_a.csv")
    print(f"\nwrote the hemisphere pattern to {OUT / 'pattern_skin_a.csv'}")


if __name__ == "__main__":
    main()
