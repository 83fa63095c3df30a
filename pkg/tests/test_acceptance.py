"""Acceptance criteria, one test per criterion.

Run with `pytest tests/test_acceptance.py -v -s` to get one line per
criterion; every tolerance and runtime bound is asserted here.
"""

import dataclasses
import math
import time

import numpy as np
import pytest

import semesim
from semesim import coverage, ems
from semesim.analysis import (
    TcoModel,
    size_sweep,
    std_comparison,
    tco_compare,
    tco_total,
)
from semesim.constants import wavelength
from semesim.coverage import LinkStats, MetricStats, link_metrics
from semesim.ems import AnglePair, far_field_directivity, local_angles
from semesim.geometry import build_faces, mirror_point
from semesim.propagation import GridSolver, simulate_grid, trace_paths
from semesim.scenario import write_power_grid

from conftest import box_room, make_ap, make_scenario, random_face

AP_POS = (2.00, 2.48, 2.88)
FOCUS = (17.5, 2.33, 1.20)


def best_of(fn, repeats=10):
    fn()  # warm-up
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


# ---------------------------------------------------------------------------


def test_c01_angle_reproduction(hallway):
    spec = hallway.panel("skin_a")
    inc = local_angles(AP_POS, spec)
    ref = local_angles(FOCUS, spec)
    assert inc.theta_deg == pytest.approx(14.5, abs=0.1)
    assert inc.phi_deg == pytest.approx(116.0, abs=0.1)
    assert ref.theta_deg == pytest.approx(4.29, abs=0.1)
    assert ref.phi_deg == pytest.approx(-106.1, abs=0.1)
    elapsed = best_of(lambda: (local_angles(AP_POS, spec), local_angles(FOCUS, spec)))
    assert elapsed < 1e-3
    print(f"\nACCEPTANCE 01 PASS: angles ({inc.theta_deg:.2f}, {inc.phi_deg:.2f}) / "
          f"({ref.theta_deg:.2f}, {ref.phi_deg:.2f}) deg in {1e6 * elapsed:.0f} us")


def test_c02_sensitivity_deltas(hallway):
    spec = hallway.panel("skin_a")
    moved = dataclasses.replace(spec, barycenter=(0.15, 2.79, 2.55))  # +0.1 m in y and z

    def deltas():
        return (
            local_angles(AP_POS, moved).theta_deg - local_angles(AP_POS, spec).theta_deg,
            local_angles(AP_POS, moved).phi_deg - local_angles(AP_POS, spec).phi_deg,
            local_angles(FOCUS, moved).theta_deg - local_angles(FOCUS, spec).theta_deg,
            local_angles(FOCUS, moved).phi_deg - local_angles(FOCUS, spec).phi_deg,
        )

    d_ti, d_pi, d_tr, d_pr = deltas()
    assert d_ti == pytest.approx(-0.75, abs=0.1)
    assert d_pi == pytest.approx(17.18, abs=0.1)
    assert d_tr == pytest.approx(0.41, abs=0.1)
    assert d_pr == pytest.approx(-2.72, abs=0.1)
    elapsed = best_of(deltas)
    assert elapsed < 1e-3
    print(f"\nACCEPTANCE 02 PASS: displacement deltas ({d_ti:+.2f}, {d_pi:+.2f}) / "
          f"({d_tr:+.2f}, {d_pr:+.2f}) deg in {1e6 * elapsed:.0f} us")


def test_c03_directivity(hallway):
    t0 = time.perf_counter()
    lam = wavelength(5.64e9)

    # uniform-phase ideal aperture at half-wavelength pitch, normal incidence
    n = 20
    spec = dataclasses.replace(
        hallway.panel("skin_a"),
        cells_per_side=n,
        cell_pitch=lam / 2,
        reflection_amplitude=1.0,
        phase_profile=dataclasses.replace(hallway.panel("skin_a").phase_profile),
    )
    uniform = ems.EmsPanel(
        spec, ems.cell_centers(spec), np.ones((n, n), dtype=complex), lam
    )
    ideal_db = 10 * math.log10(4 * math.pi * (n * lam / 2) ** 2 / lam**2)
    flat = far_field_directivity(uniform, AnglePair(0.0, 0.0), 0.5)
    assert flat.d_max_db == pytest.approx(ideal_db, abs=0.3)

    # synthesized deployment panel under its design illumination
    panel = ems.build_panel(hallway.panel("skin_a"), hallway)
    incidence = local_angles(AP_POS, hallway.panel("skin_a"))
    source_range = float(np.linalg.norm(np.asarray(AP_POS) - np.asarray((0.15, 2.69, 2.45))))
    pattern = far_field_directivity(panel, incidence, 0.5, source_range)
    assert 29.7 <= pattern.d_max_db <= 31.7
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0
    print(f"\nACCEPTANCE 03 PASS: d_max {pattern.d_max_db:.2f} dB in [29.7, 31.7] "
          f"(uniform {flat.d_max_db:.2f} vs closed form {ideal_db:.2f}) in {elapsed:.1f} s")


def test_c04_tco_table():
    seme = TcoModel(100.0, 5.0, 0.0, 0.0)
    std = TcoModel(700.0, 300.0, 50.0, 100.0)
    assert tco_total(seme, 5.0) == 105.0
    assert tco_total(std, 5.0) == 1350.0
    report = tco_compare(seme, std, 5.0, 67.5)
    assert report.saving == 1245.0
    assert 100 * report.relative_saving == pytest.approx(92.2, abs=0.1)
    assert report.saving_per_m2 == pytest.approx(18.44, abs=0.05)
    print(f"\nACCEPTANCE 04 PASS: 105 / 1350 / saving {report.saving:.0f} $ "
          f"({100 * report.relative_saving:.1f}%, {report.saving_per_m2:.2f} $/m2)")


def test_c05_link_metrics():
    ref = LinkStats(
        download_mbps=MetricStats(74.94, 110.12, 95.79, 8.87),
        download_latency_ms=MetricStats(18.00, 189.00, 122.87, 50.92),
        upload_mbps=MetricStats(77.14, 84.49, 81.57, 2.62),
        upload_latency_ms=MetricStats(24.00, 116.00, 43.33, 23.58),
    )
    seme = LinkStats(
        download_mbps=MetricStats(109.60, 131.16, 127.98, 5.91),
        download_latency_ms=MetricStats(16.00, 73.00, 52.13, 15.99),
        upload_mbps=MetricStats(80.54, 108.19, 97.18, 9.79),
        upload_latency_ms=MetricStats(11.00, 25.00, 20.40, 4.00),
    )
    report = link_metrics(ref, seme, payload_gb=7.0)
    rel = {k: 100 * v for k, v in report.relative_change.items()}
    assert rel["download_mbps"] == pytest.approx(33.6, abs=0.1)
    assert rel["download_latency_ms"] == pytest.approx(-57.6, abs=0.1)
    assert rel["upload_mbps"] == pytest.approx(19.1, abs=0.1)
    assert rel["upload_latency_ms"] == pytest.approx(-52.9, abs=0.1)
    assert report.download_time_ref_min == pytest.approx(9.74, abs=0.01)
    assert report.download_time_seme_min == pytest.approx(7.29, abs=0.01)
    assert 100 * report.time_saving == pytest.approx(25.2, abs=0.1)
    print(f"\nACCEPTANCE 05 PASS: changes {rel['download_mbps']:+.1f}/"
          f"{rel['download_latency_ms']:+.1f}/{rel['upload_mbps']:+.1f}/"
          f"{rel['upload_latency_ms']:+.1f} %; download {report.download_time_ref_min:.2f} -> "
          f"{report.download_time_seme_min:.2f} min ({100 * report.time_saving:.1f}% saved)")


def test_c06_reduction_spot_value():
    rho = coverage.roi_reduction(23.13, 6.94)
    assert round(100 * rho, 2) == 70.00
    print(f"\nACCEPTANCE 06 PASS: reduction(23.13, 6.94) = {100 * rho:.2f}%")


def test_c07_friis_grid(free_space):
    t0 = time.perf_counter()
    grid = simulate_grid(free_space, panels_enabled=False)
    elapsed = time.perf_counter() - t0
    ap = free_space.aps[0]
    lam = wavelength(ap.frequency)
    xx, yy = np.meshgrid(grid.x, grid.y)
    d = np.sqrt((xx - ap.position[0]) ** 2 + (yy - ap.position[1]) ** 2
                + (grid.z - ap.position[2]) ** 2)
    expect = ap.tx_power + 20 * np.log10(lam / (4 * np.pi * d))
    mask = grid.in_region
    worst = float(np.max(np.abs(grid.values[mask] - expect[mask])))
    n_points = int(mask.sum())
    assert n_points == 10_000
    assert worst < 1e-9
    assert elapsed < 1.0
    print(f"\nACCEPTANCE 07 PASS: {n_points} points, worst deviation {worst:.2e} dB "
          f"in {elapsed:.2f} s")


def test_c08_image_method_vs_dense_search():
    ap = make_ap((0.9, 0.8, 1.5))
    rx = np.array([2.3, 1.9, 1.2])
    walls = box_room(3.0, 2.5, top=3.0)
    s = make_scenario(walls=walls, aps=[ap], max_reflections=1, max_transmissions=0)
    paths = [p for p in trace_paths(s, ap, rx) if p.reflection_count == 1]
    assert len(paths) == 4
    faces = {f.face_id: f for f in build_faces(walls)}
    step = 1e-3
    worst = 0.0
    for p in paths:
        face = faces[p.face_sequence()[0]]
        u_hat = face.edge_u / face.u_len
        v_hat = face.edge_v / face.v_len
        best = math.inf
        v_axis = np.arange(0.0, face.v_len + step / 2, step)
        u_axis = np.arange(0.0, face.u_len + step / 2, step)
        for v0 in np.array_split(v_axis, max(1, len(v_axis) // 200)):
            q = (face.origin[None, None, :]
                 + u_axis[None, :, None] * u_hat
                 + v0[:, None, None] * v_hat)
            d = (np.linalg.norm(q - np.asarray(ap.position), axis=-1)
                 + np.linalg.norm(q - rx, axis=-1))
            best = min(best, float(d.min()))
        worst = max(worst, abs(best - p.total_length))
        assert abs(best - p.total_length) <= 1e-3
    print(f"\nACCEPTANCE 08 PASS: 4 specular paths, worst dense-search gap {worst:.2e} m")


def test_c09_incoherent_monotonicity(hallway):
    solver = GridSolver(hallway)
    ref = solver.reference_grid()
    seme = solver.seme_grid()
    mask = ref.in_region
    min_delta = float(np.min(seme.values[mask] - ref.values[mask]))
    assert min_delta >= 0.0
    print(f"\nACCEPTANCE 09 PASS: min per-point gain {min_delta:.3e} dB (never negative)")


def test_c10_property_suite(hallway, tmp_path):
    # CDF monotonicity and range on random grids
    rng = np.random.default_rng(123)
    from test_coverage import ZONE, grid_from

    for _ in range(20):
        vals = rng.uniform(-90, -40, size=(8, 9))
        curve = coverage.empirical_cdf(grid_from(vals), ZONE, np.linspace(-95, -35, 41))
        assert np.all(np.diff(curve.theta) >= 0)
        assert curve.theta.min() >= 0.0 and curve.theta.max() <= 1.0
        assert curve.theta[-1] == 1.0

    # mirror involution on random faces
    for _ in range(100):
        face = random_face(rng)
        p = rng.uniform(-10, 10, size=3)
        assert np.linalg.norm(mirror_point(mirror_point(p, face), face) - p) < 1e-12 * 10

    # grid determinism across worker counts, down to the written bytes
    a, b = tmp_path / "w1.csv", tmp_path / "w3.csv"
    write_power_grid(GridSolver(hallway, workers=1).seme_grid(), a)
    write_power_grid(GridSolver(hallway, workers=3).seme_grid(), b)
    assert a.read_bytes() == b.read_bytes()
    print("\nACCEPTANCE 10 PASS: CDF properties, mirror involution, "
          "bit-identical grids for 1 vs 3 workers")


def test_c11_surrogate_trends(hallway):
    t0 = time.perf_counter()
    threshold = hallway.rt.threshold_power
    solver = GridSolver(hallway)
    ref = solver.reference_grid()

    # (a) the reference weak zone concentrates opposite the access point
    cov_ref = coverage.threshold_map(ref, threshold)
    assert cov_ref.below_threshold.any()
    xx = np.broadcast_to(ref.x, ref.values.shape)
    below_x = xx[cov_ref.below_threshold]
    x_lo, x_hi = ref.x.min(), ref.x.max()
    midpoint = 0.5 * (x_lo + x_hi)
    assert float(below_x.min()) > midpoint  # entirely in the far half
    # (b) reduction is non-decreasing with panel size
    rows = size_sweep(hallway, "skin_a", [(0.28, 10), (0.40, 15), (0.55, 20), (0.66, 24)])
    rhos = [r.roi_reduction for r in rows]
    assert all(b >= a for a, b in zip(rhos, rhos[1:]))
    # (c) the panel raises the average received power
    assert rows[2].delta_stats.avg_db > 0.0
    # (d) a second access point at the far end covers at least as much
    report = std_comparison(hallway, make_ap((29.2, 2.00, 2.88), ap_id="ap_a2"))
    assert report.reduction_std >= report.reduction_seme
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0
    print(f"\nACCEPTANCE 11 PASS: weak zone x in [{below_x.min():.1f}, {below_x.max():.1f}] m; "
          f"rho {['%.1f%%' % (100 * r) for r in rhos]}; dP_avg {rows[2].delta_stats.avg_db:.2f} dB; "
          f"rho_std {100 * report.reduction_std:.1f}% >= rho_seme "
          f"{100 * report.reduction_seme:.1f}%; total {elapsed:.1f} s")
