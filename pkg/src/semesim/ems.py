"""Reflecting-skin model: cell lattice, phase synthesis, scattering, patterns.

Angles are expressed in the panel's local frame: elevation theta is
measured from the panel normal; azimuth phi = atan2(vertical in-plane
component, horizontal in-plane component).  This convention makes the
documented deployment angles reproducible from the deployment coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .constants import wavelength
from .scenario import AccessPoint, EmsPanelSpec, Scenario


@dataclass(frozen=True)
class AnglePair:
    """Panel-frame direction: theta in [0, 90) deg, phi in (-180, 180] deg."""

    theta_deg: float
    phi_deg: float


@dataclass(frozen=True)
class EmsPanel:
    """Discretised aperture: N x N cell centers with complex reflection
    coefficients of constant magnitude."""

    spec: EmsPanelSpec
    cell_centers: np.ndarray  # (N, N, 3) [m]
    reflection_coeffs: np.ndarray  # (N, N) complex, |coeff| == amplitude
    wavelength: float  # design wavelength [m]


@dataclass(frozen=True)
class DirectivityPattern:
    theta_deg: np.ndarray  # (nt,)
    phi_deg: np.ndarray  # (np,)
    directivity_db: np.ndarray  # (nt, np)
    d_max_db: float
    peak: AnglePair
    power_fraction: float  # scattered power / intercepted incident power


def panel_frame(spec: EmsPanelSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Right-handed orthonormal frame (horizontal, vertical, normal)."""
    n = np.asarray(spec.unit_normal, dtype=float)
    e_u = np.asarray(spec.local_x_axis, dtype=float)
    e_v = np.cross(n, e_u)
    return e_u, e_v, n


def local_angles(target, spec: EmsPanelSpec) -> AnglePair:
    """Panel-frame (theta, phi) of a point seen from the panel barycenter."""
    e_u, e_v, n = panel_frame(spec)
    v = np.asarray(target, dtype=float) - np.asarray(spec.barycenter, dtype=float)
    r = float(np.linalg.norm(v))
    if r == 0.0:
        raise ValueError("target coincides with the panel barycenter")
    cos_n = float(np.dot(v, n))
    if cos_n <= 0.0:
        raise ValueError("target lies behind the panel plane")
    theta = math.degrees(math.acos(min(cos_n / r, 1.0)))
    if theta < 1e-6:
        return AnglePair(theta, 0.0)
    phi = math.degrees(math.atan2(float(np.dot(v, e_v)), float(np.dot(v, e_u))))
    return AnglePair(theta, phi)


def cell_centers(spec: EmsPanelSpec) -> np.ndarray:
    """Uniform (N, N, 3) lattice of cell centers, centered on the barycenter."""
    e_u, e_v, _ = panel_frame(spec)
    n = spec.cells_per_side
    offsets = (np.arange(n) - (n - 1) / 2.0) * spec.cell_pitch
    uu, vv = np.meshgrid(offsets, offsets, indexing="ij")
    return (
        np.asarray(spec.barycenter, dtype=float)
        + uu[..., None] * e_u
        + vv[..., None] * e_v
    )


def synthesize_phase_profile(spec: EmsPanelSpec, source, focus, lam: float) -> np.ndarray:
    """Conjugate-phase profile focusing a spherical wave from `source` onto
    `focus`: phi_mn = mod(k (|r_mn - source| + |r_mn - focus|) - phi0, 2 pi),
    with phi0 fixed so the cell nearest the barycenter gets phase zero."""
    _, _, n_hat = panel_frame(spec)
    b = np.asarray(spec.barycenter, dtype=float)
    for point, label in ((source, "source"), (focus, "focus")):
        if float(np.dot(np.asarray(point, dtype=float) - b, n_hat)) <= 0.0:
            raise ValueError(f"{label} must lie strictly in front of the panel plane")
    cells = cell_centers(spec)
    k = 2.0 * math.pi / lam
    d1 = np.linalg.norm(cells - np.asarray(source, dtype=float), axis=-1)
    d2 = np.linalg.norm(cells - np.asarray(focus, dtype=float), axis=-1)
    total = k * (d1 + d2)
    i0 = spec.cells_per_side // 2
    return np.mod(total - total[i0, i0], 2.0 * math.pi)


def build_panel(spec: EmsPanelSpec, scenario: Scenario) -> EmsPanel:
    """Materialise a panel: resolve its source AP, synthesise or copy the
    phase matrix, and attach the complex reflection coefficients."""
    profile = spec.phase_profile
    if profile.kind == "synthesized":
        ap = scenario.ap(profile.source_ap)
        lam = wavelength(ap.frequency)
        phases = synthesize_phase_profile(spec, ap.position, profile.focus, lam)
    else:
        phases = np.asarray(profile.matrix, dtype=float)
        if phases.shape != (spec.cells_per_side, spec.cells_per_side):
            raise ValueError(f"phase matrix shape {phases.shape} does not match "
                             f"cells_per_side {spec.cells_per_side}")
        if not scenario.aps:
            raise ValueError("cannot determine the design wavelength: no access points")
        lam = wavelength(scenario.aps[0].frequency)
    coeffs = spec.reflection_amplitude * np.exp(1j * phases)
    return EmsPanel(spec, cell_centers(spec), coeffs, lam)


# ---------------------------------------------------------------------------
# Aperture re-radiation
# ---------------------------------------------------------------------------


def _scatter_to_points(
    panel: EmsPanel,
    lam: float,
    incident_flat: np.ndarray,  # (C,) complex field at the cells
    cos_in_flat: np.ndarray,  # (C,) incidence cosines at the cells
    rx_points: np.ndarray,  # (P, 3)
    chunk: int = 1024,
) -> np.ndarray:
    """Sum the per-cell re-radiation kernel at many receiver points."""
    k = 2.0 * math.pi / lam
    _, _, n_hat = panel_frame(panel.spec)
    cells = panel.cell_centers.reshape(-1, 3)
    weights = panel.reflection_coeffs.reshape(-1) * incident_flat * np.sqrt(
        np.clip(cos_in_flat, 0.0, None)
    )
    pitch_factor = panel.spec.cell_pitch**2 / lam
    out = np.empty(len(rx_points), dtype=complex)
    for start in range(0, len(rx_points), chunk):
        pts = rx_points[start : start + chunk]
        diff = pts[:, None, :] - cells[None, :, :]  # (p, C, 3)
        dist = np.linalg.norm(diff, axis=-1)
        cos_out = np.clip(np.einsum("pcj,j->pc", diff, n_hat) / dist, 0.0, None)
        kern = pitch_factor * np.sqrt(cos_out) * np.exp(-1j * k * dist) / dist
        out[start : start + chunk] = np.sum(kern * weights[None, :], axis=1)
    return out


def scattered_field(panel: EmsPanel, ap: AccessPoint, incident_field_at_cells, rx) -> complex:
    """Field re-radiated by the panel toward one receiver point.

    `incident_field_at_cells` is the (N, N) complex incident field; the
    incidence obliquity per cell is taken from the AP position.
    """
    rx = np.asarray(rx, dtype=float)
    _, _, n_hat = panel_frame(panel.spec)
    b = np.asarray(panel.spec.barycenter, dtype=float)
    if float(np.dot(rx - b, n_hat)) <= 0.0:
        raise ValueError("receiver lies behind the panel plane")
    inc = np.asarray(incident_field_at_cells, dtype=complex)
    n = panel.spec.cells_per_side
    if inc.shape != (n, n):
        raise ValueError(f"expected a {n}x{n} incident field, got {inc.shape}")
    cells = panel.cell_centers.reshape(-1, 3)
    to_ap = np.asarray(ap.position, dtype=float) - cells
    cos_in = np.einsum("cj,j->c", to_ap, n_hat) / np.linalg.norm(to_ap, axis=-1)
    lam = wavelength(ap.frequency)
    return complex(_scatter_to_points(panel, lam, inc.reshape(-1), cos_in, rx[None, :])[0])


# ---------------------------------------------------------------------------
# Far-field directivity
# ---------------------------------------------------------------------------


def far_field_directivity(
    panel: EmsPanel,
    incidence: AnglePair,
    angular_resolution: float,
    source_range: float = math.inf,
) -> DirectivityPattern:
    """Directivity of the scattered field over the reflection hemisphere.

    Illumination is a unit-amplitude plane wave from `incidence`; passing a
    finite `source_range` instead places a point source at that distance
    along the incidence direction, which evaluates the panel under the
    spherical wavefront it was synthesised for.
    """
    if not 0.0 < angular_resolution <= 5.0:
        raise ValueError("angular_resolution must be in (0, 5] degrees")
    lam = panel.wavelength
    k = 2.0 * math.pi / lam
    n = panel.spec.cells_per_side
    pitch = panel.spec.cell_pitch
    offsets = (np.arange(n) - (n - 1) / 2.0) * pitch
    uu, vv = np.meshgrid(offsets, offsets, indexing="ij")
    cell_u = uu.reshape(-1)
    cell_v = vv.reshape(-1)

    th_i = math.radians(incidence.theta_deg)
    ph_i = math.radians(incidence.phi_deg)
    u_i = np.array(
        [math.sin(th_i) * math.cos(ph_i), math.sin(th_i) * math.sin(ph_i), math.cos(th_i)]
    )
    if math.isinf(source_range):
        cos_in = np.full(n * n, u_i[2])
        incident = np.exp(1j * k * (u_i[0] * cell_u + u_i[1] * cell_v))
    else:
        src = source_range * u_i
        diff = src[None, :] - np.stack([cell_u, cell_v, np.zeros_like(cell_u)], axis=1)
        d1 = np.linalg.norm(diff, axis=1)
        cos_in = diff[:, 2] / d1
        incident = (source_range / d1) * np.exp(-1j * k * (d1 - source_range))

    weights = panel.reflection_coeffs.reshape(-1) * incident * np.sqrt(np.clip(cos_in, 0.0, None))

    res = angular_resolution
    theta = np.arange(0.0, 90.0 + 1e-9, res)
    phi = np.arange(-180.0 + res, 180.0 + 1e-9, res)
    th_r = np.radians(theta)
    ph_r = np.radians(phi)
    sin_t, cos_t = np.sin(th_r), np.cos(th_r)

    intensity = np.empty((len(theta), len(phi)))
    for i in range(len(theta)):
        du = sin_t[i] * np.cos(ph_r)  # (np,)
        dv = sin_t[i] * np.sin(ph_r)
        phase = np.exp(1j * k * (du[:, None] * cell_u[None, :] + dv[:, None] * cell_v[None, :]))
        af = phase @ weights
        intensity[i] = cos_t[i] * np.abs(af) ** 2

    d_theta = math.radians(res)
    d_phi = math.radians(res)
    radiated = float(np.sum(intensity * sin_t[:, None]) * d_theta * d_phi)
    with np.errstate(divide="ignore"):
        directivity_db = 10.0 * np.log10(4.0 * math.pi * intensity / radiated)

    flat = int(np.argmax(intensity))
    it, ip = np.unravel_index(flat, intensity.shape)
    peak_theta = float(theta[it])
    peak_phi = 0.0 if peak_theta < 1e-6 else float(phi[ip])
    d_max = float(directivity_db[it, ip])

    # scattered power relative to the power intercepted by the aperture
    intercepted = float(np.sum(np.abs(incident) ** 2 * np.clip(cos_in, 0.0, None)) * pitch**2)
    power_fraction = (pitch**2 / lam) ** 2 * radiated / intercepted if intercepted > 0 else 0.0

    return DirectivityPattern(
        theta_deg=theta,
        phi_deg=phi,
        directivity_db=directivity_db,
        d_max_db=d_max,
        peak=AnglePair(peak_theta, peak_phi),
        power_fraction=power_fraction,
    )


PATTERN_HEADER = "theta_deg,phi_deg,directivity_db"


def write_pattern_csv(pattern: DirectivityPattern, path) -> None:
    lines = [PATTERN_HEADER]
    for i, th in enumerate(pattern.theta_deg):
        for j, ph in enumerate(pattern.phi_deg):
            lines.append(f"{float(th)!r},{float(ph)!r},{pattern.directivity_db[i, j]:.6f}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
