"""World model: scenario types, file loading/validation, and result I/O.

A scenario file is a single JSON document (conventionally ``*.scn``) with
top-level keys ``materials``, ``walls``, ``access_points``, ``ems_panels``,
``regions``, ``grid`` and ``rt``.  Lengths are meters, powers dBm,
frequencies Hz, angles degrees.  Unknown keys are rejected.

A loaded Scenario is immutable and safe to share across threads.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import geometry
from .geometry import WallFace, build_faces, polygon_area, polygon_is_simple

# Artifact default materials; a scenario file may redefine any of them.
DEFAULT_MATERIAL_TABLE = {
    "brick": (4.0, 8.0),
    "concrete": (5.3, 12.0),
    "glass": (6.0, 3.0),
    "wood_door": (2.0, 4.0),
}

# A panel barycenter must sit within this distance of a mounting wall face.
PANEL_WALL_TOL = 0.05  # [m]

SUMMATION_MODES = ("incoherent", "coherent")
PATTERN_KINDS = ("isotropic", "analytic_vertical_monopole", "tabulated")
REFLECTION_MODES = ("fresnel", "fixed")

MAX_REFLECTIONS_CAP = 6
MAX_TRANSMISSIONS_CAP = 8


class ScenarioError(Exception):
    """Base class for scenario file problems."""


class ParseError(ScenarioError):
    """Malformed scenario file; `locus` names the offending field."""

    def __init__(self, message: str, locus: str = ""):
        self.locus = locus
        super().__init__(f"{locus}: {message}" if locus else message)


class ValidationError(ScenarioError):
    """Scenario violates an invariant; carries the diagnostics."""

    def __init__(self, diagnostics: list["Diagnostic"]):
        self.diagnostics = diagnostics
        lines = "; ".join(str(d) for d in diagnostics)
        super().__init__(f"invalid scenario: {lines}")


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    entity: str | None
    message: str

    def __str__(self) -> str:
        tag = f" [{self.entity}]" if self.entity else ""
        return f"{self.severity}{tag}: {self.message}"


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Material:
    name: str
    relative_permittivity: float  # >= 1
    transmission_loss: float  # dB per wall traversal, >= 0
    reflection_mode: str = "fresnel"
    fixed_reflection_magnitude: float = 0.0  # used only when mode == "fixed"


@dataclass(frozen=True)
class Wall:
    id: str
    footprint: tuple[tuple[float, float], ...]  # ordered 2-D points [m]
    base_height: float
    top_height: float
    material: Material


@dataclass(frozen=True)
class AntennaPattern:
    """Transmit gain model: isotropic, vertical monopole donut, or a table."""

    kind: str = "isotropic"
    peak_gain: float = 0.0  # dBi
    theta_deg: tuple[float, ...] | None = None  # table axis, 0..180 from +z
    phi_deg: tuple[float, ...] | None = None  # table axis, -180..180
    gain_dbi: tuple[tuple[float, ...], ...] | None = None  # (n_theta, n_phi)

    def gain_linear(self, directions: np.ndarray) -> np.ndarray:
        """Linear gain toward each unit direction, shape (P, 3) -> (P,)."""
        d = np.atleast_2d(np.asarray(directions, dtype=float))
        peak = 10.0 ** (self.peak_gain / 10.0)
        if self.kind == "isotropic":
            return np.full(len(d), peak)
        cos_th = np.clip(d[:, 2], -1.0, 1.0)
        if self.kind == "analytic_vertical_monopole":
            # donut: zero along the vertical axis, peak at the horizon
            return peak * (1.0 - cos_th**2)
        theta = np.degrees(np.arccos(cos_th))
        phi = np.degrees(np.arctan2(d[:, 1], d[:, 0]))
        return 10.0 ** (self._table_lookup(theta, phi) / 10.0)

    def _table_lookup(self, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
        th_ax = np.asarray(self.theta_deg)
        ph_ax = np.asarray(self.phi_deg)
        g = np.asarray(self.gain_dbi)
        it = np.clip(np.searchsorted(th_ax, theta) - 1, 0, len(th_ax) - 2)
        ip = np.clip(np.searchsorted(ph_ax, phi) - 1, 0, len(ph_ax) - 2)
        wt = np.clip((theta - th_ax[it]) / (th_ax[it + 1] - th_ax[it]), 0.0, 1.0)
        wp = np.clip((phi - ph_ax[ip]) / (ph_ax[ip + 1] - ph_ax[ip]), 0.0, 1.0)
        return (
            g[it, ip] * (1 - wt) * (1 - wp)
            + g[it + 1, ip] * wt * (1 - wp)
            + g[it, ip + 1] * (1 - wt) * wp
            + g[it + 1, ip + 1] * wt * wp
        )


@dataclass(frozen=True)
class AccessPoint:
    id: str
    position: tuple[float, float, float]  # [m]
    tx_power: float  # dBm
    frequency: float  # Hz
    channel: int | None = None
    pattern: AntennaPattern = AntennaPattern()


@dataclass(frozen=True)
class PhaseProfile:
    """Panel phase source: synthesized from (source AP, focus) or explicit."""

    kind: str  # "synthesized" | "matrix"
    source_ap: str | None = None
    focus: tuple[float, float, float] | None = None
    matrix: tuple[tuple[float, ...], ...] | None = None  # radians, (N, N)


@dataclass(frozen=True)
class EmsPanelSpec:
    id: str
    barycenter: tuple[float, float, float]  # [m]
    unit_normal: tuple[float, float, float]
    local_x_axis: tuple[float, float, float]  # in-plane horizontal axis
    cells_per_side: int
    cell_pitch: float  # [m]
    reflection_amplitude: float  # in [0, 1]
    phase_profile: PhaseProfile

    @property
    def side_length(self) -> float:
        return self.cells_per_side * self.cell_pitch


@dataclass(frozen=True)
class Region:
    id: str
    polygon: tuple[tuple[float, float], ...]  # simple 2-D polygon [m]
    eval_height: float  # [m]

    @property
    def area(self) -> float:
        return polygon_area(self.polygon)


@dataclass(frozen=True)
class GridSpec:
    spacing: float  # [m], same in x and y
    height: float  # default evaluation height [m]


@dataclass(frozen=True)
class RtSettings:
    max_reflections: int = 3
    max_transmissions: int = 2
    summation_mode: str = "incoherent"
    threshold_power: float = -65.0  # dBm
    include_ems_multibounce: bool = False


@dataclass(frozen=True)
class Scenario:
    walls: tuple[Wall, ...]
    materials: tuple[Material, ...]
    aps: tuple[AccessPoint, ...]
    panels: tuple[EmsPanelSpec, ...]
    regions: tuple[Region, ...]
    grid: GridSpec
    rt: RtSettings

    def ap(self, ap_id: str) -> AccessPoint:
        for a in self.aps:
            if a.id == ap_id:
                return a
        raise KeyError(f"unknown access point {ap_id!r}")

    def panel(self, panel_id: str) -> EmsPanelSpec:
        for p in self.panels:
            if p.id == panel_id:
                return p
        raise KeyError(f"unknown panel {panel_id!r}")

    def region(self, region_id: str) -> Region:
        for r in self.regions:
            if r.id == region_id:
                return r
        raise KeyError(f"unknown region {region_id!r}")

    def faces(self) -> list[WallFace]:
        return build_faces(self.walls)

    def settings_hash(self) -> str:
        blob = repr(
            (
                [(a.id, a.position, a.tx_power, a.frequency) for a in self.aps],
                [(p.id, p.barycenter, p.cells_per_side, p.cell_pitch) for p in self.panels],
                (self.grid.spacing, self.grid.height),
                (
                    self.rt.max_reflections,
                    self.rt.max_transmissions,
                    self.rt.summation_mode,
                    self.rt.threshold_power,
                ),
            )
        )
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _expect_keys(obj: dict, locus: str, required: tuple, optional: tuple = ()):
    unknown = set(obj) - set(required) - set(optional)
    if unknown:
        raise ParseError(f"unknown key(s) {sorted(unknown)}", locus)
    for key in required:
        if key not in obj:
            raise ParseError(f"missing required key {key!r}", locus)


def _num(obj, key, locus, default=None):
    if key not in obj:
        if default is None:
            raise ParseError(f"missing required key {key!r}", locus)
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(f"expected a number for {key!r}", locus)
    return float(v)


def _integer(obj, key, locus, default=None):
    if key not in obj:
        if default is None:
            raise ParseError(f"missing required key {key!r}", locus)
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ParseError(f"expected an integer for {key!r}", locus)
    return v


def _string(obj, key, locus, default=None):
    if key not in obj:
        if default is None:
            raise ParseError(f"missing required key {key!r}", locus)
        return default
    if not isinstance(obj[key], str):
        raise ParseError(f"expected a string for {key!r}", locus)
    return obj[key]


def _point(v, locus, dim):
    if not isinstance(v, list) or len(v) != dim or not all(
        isinstance(c, (int, float)) and not isinstance(c, bool) for c in v
    ):
        raise ParseError(f"expected a {dim}-element coordinate list", locus)
    return tuple(float(c) for c in v)


def _parse_pattern(obj, locus) -> AntennaPattern:
    _expect_keys(obj, locus, ("kind",), ("peak_gain", "table"))
    kind = _string(obj, "kind", locus)
    if kind not in PATTERN_KINDS:
        raise ParseError(f"pattern kind must be one of {PATTERN_KINDS}", locus)
    peak = _num(obj, "peak_gain", locus, default=0.0)
    if kind != "tabulated":
        if "table" in obj:
            raise ParseError("table only valid for kind 'tabulated'", locus)
        return AntennaPattern(kind=kind, peak_gain=peak)
    table = obj.get("table")
    if not isinstance(table, dict):
        raise ParseError("tabulated pattern needs a 'table' object", f"{locus}.table")
    _expect_keys(table, f"{locus}.table", ("theta", "phi", "gain"))
    theta = tuple(float(t) for t in table["theta"])
    phi = tuple(float(p) for p in table["phi"])
    gain = tuple(tuple(float(g) for g in row) for row in table["gain"])
    return AntennaPattern(kind=kind, peak_gain=peak, theta_deg=theta, phi_deg=phi, gain_dbi=gain)


def _parse_phase_profile(obj, locus) -> PhaseProfile:
    if not isinstance(obj, dict):
        raise ParseError("phase_profile must be an object", locus)
    kind = _string(obj, "kind", locus)
    if kind == "synthesized":
        _expect_keys(obj, locus, ("kind", "source_ap", "focus"))
        return PhaseProfile(
            kind="synthesized",
            source_ap=_string(obj, "source_ap", locus),
            focus=_point(obj["focus"], f"{locus}.focus", 3),
        )
    if kind == "matrix":
        _expect_keys(obj, locus, ("kind", "values"))
        rows = obj["values"]
        if not isinstance(rows, list) or not rows:
            raise ParseError("matrix values must be a non-empty 2-D list", f"{locus}.values")
        matrix = tuple(tuple(float(v) for v in row) for row in rows)
        return PhaseProfile(kind="matrix", matrix=matrix)
    raise ParseError("phase_profile kind must be 'synthesized' or 'matrix'", locus)


def loads(text: str) -> Scenario:
    """Parse and validate a scenario from a JSON string."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}")
    if not isinstance(doc, dict):
        raise ParseError("scenario document must be a JSON object")
    _expect_keys(
        doc,
        "scenario",
        ("walls", "access_points", "regions", "grid", "rt"),
        ("materials", "ems_panels"),
    )

    materials: dict[str, Material] = {
        name: Material(name, eps, loss) for name, (eps, loss) in DEFAULT_MATERIAL_TABLE.items()
    }
    for i, m in enumerate(doc.get("materials", [])):
        locus = f"materials[{i}]"
        _expect_keys(
            m,
            locus,
            ("name", "relative_permittivity", "transmission_loss"),
            ("reflection_mode", "fixed_reflection_magnitude"),
        )
        mat = Material(
            name=_string(m, "name", locus),
            relative_permittivity=_num(m, "relative_permittivity", locus),
            transmission_loss=_num(m, "transmission_loss", locus),
            reflection_mode=_string(m, "reflection_mode", locus, default="fresnel"),
            fixed_reflection_magnitude=_num(m, "fixed_reflection_magnitude", locus, default=0.0),
        )
        materials[mat.name] = mat

    walls = []
    for i, w in enumerate(doc["walls"]):
        locus = f"walls[{i}]"
        _expect_keys(w, locus, ("footprint", "base_height", "top_height", "material"), ("id",))
        mat_name = _string(w, "material", locus)
        if mat_name not in materials:
            raise ParseError(f"unknown material {mat_name!r}", f"{locus}.material")
        pts = w["footprint"]
        if not isinstance(pts, list):
            raise ParseError("footprint must be a list of 2-D points", f"{locus}.footprint")
        footprint = tuple(_point(p, f"{locus}.footprint[{j}]", 2) for j, p in enumerate(pts))
        walls.append(
            Wall(
                id=_string(w, "id", locus, default=f"wall_{i}"),
                footprint=footprint,
                base_height=_num(w, "base_height", locus),
                top_height=_num(w, "top_height", locus),
                material=materials[mat_name],
            )
        )

    aps = []
    for i, a in enumerate(doc["access_points"]):
        locus = f"access_points[{i}]"
        _expect_keys(
            a, locus, ("id", "position", "tx_power", "frequency"), ("channel", "pattern")
        )
        pattern = AntennaPattern()
        if "pattern" in a:
            pattern = _parse_pattern(a["pattern"], f"{locus}.pattern")
        aps.append(
            AccessPoint(
                id=_string(a, "id", locus),
                position=_point(a["position"], f"{locus}.position", 3),
                tx_power=_num(a, "tx_power", locus),
                frequency=_num(a, "frequency", locus),
                channel=_integer(a, "channel", locus, default=0) if "channel" in a else None,
                pattern=pattern,
            )
        )

    panels = []
    for i, p in enumerate(doc.get("ems_panels", [])):
        locus = f"ems_panels[{i}]"
        _expect_keys(
            p,
            locus,
            ("id", "barycenter", "unit_normal", "local_x_axis", "cells_per_side", "phase_profile"),
            ("cell_pitch", "reflection_amplitude"),
        )
        profile = _parse_phase_profile(p["phase_profile"], f"{locus}.phase_profile")
        pitch = _num(p, "cell_pitch", locus, default=0.0)  # 0 -> derive half-wavelength
        panels.append(
            EmsPanelSpec(
                id=_string(p, "id", locus),
                barycenter=_point(p["barycenter"], f"{locus}.barycenter", 3),
                unit_normal=_point(p["unit_normal"], f"{locus}.unit_normal", 3),
                local_x_axis=_point(p["local_x_axis"], f"{locus}.local_x_axis", 3),
                cells_per_side=_integer(p, "cells_per_side", locus),
                cell_pitch=pitch,
                reflection_amplitude=_num(p, "reflection_amplitude", locus, default=0.9),
                phase_profile=profile,
            )
        )
    panels = [_resolve_panel_pitch(p, aps) for p in panels]

    regions = []
    for i, r in enumerate(doc["regions"]):
        locus = f"regions[{i}]"
        _expect_keys(r, locus, ("id", "polygon", "eval_height"))
        poly = r["polygon"]
        if not isinstance(poly, list) or len(poly) < 3:
            raise ParseError("polygon needs at least 3 points", f"{locus}.polygon")
        regions.append(
            Region(
                id=_string(r, "id", locus),
                polygon=tuple(_point(q, f"{locus}.polygon[{j}]", 2) for j, q in enumerate(poly)),
                eval_height=_num(r, "eval_height", locus),
            )
        )

    g = doc["grid"]
    _expect_keys(g, "grid", ("spacing", "height"))
    grid = GridSpec(spacing=_num(g, "spacing", "grid"), height=_num(g, "height", "grid"))

    rt_obj = doc["rt"]
    _expect_keys(
        rt_obj,
        "rt",
        (),
        (
            "max_reflections",
            "max_transmissions",
            "summation_mode",
            "threshold_power",
            "include_ems_multibounce",
        ),
    )
    rt = RtSettings(
        max_reflections=_integer(rt_obj, "max_reflections", "rt", default=3),
        max_transmissions=_integer(rt_obj, "max_transmissions", "rt", default=2),
        summation_mode=_string(rt_obj, "summation_mode", "rt", default="incoherent"),
        threshold_power=_num(rt_obj, "threshold_power", "rt", default=-65.0),
        include_ems_multibounce=bool(rt_obj.get("include_ems_multibounce", False)),
    )

    scenario = Scenario(
        walls=tuple(walls),
        materials=tuple(materials.values()),
        aps=tuple(aps),
        panels=tuple(panels),
        regions=tuple(regions),
        grid=grid,
        rt=rt,
    )
    errors = [d for d in validate_scenario(scenario) if d.severity == "error"]
    if errors:
        raise ValidationError(errors)
    return scenario


def _resolve_panel_pitch(spec: EmsPanelSpec, aps: list[AccessPoint]) -> EmsPanelSpec:
    """Default cell pitch is half a wavelength of the panel's source AP."""
    if spec.cell_pitch > 0.0:
        return spec
    from dataclasses import replace

    from .constants import wavelength

    freq = None
    if spec.phase_profile.kind == "synthesized":
        for a in aps:
            if a.id == spec.phase_profile.source_ap:
                freq = a.frequency
    if freq is None and aps:
        freq = aps[0].frequency
    if freq is None:
        raise ParseError("cell_pitch omitted but no access point defines a wavelength",
                         f"ems_panels '{spec.id}'")
    return replace(spec, cell_pitch=wavelength(freq) / 2.0)


def load_scenario(path) -> Scenario:
    """Load and validate a scenario file; raises ParseError/ValidationError."""
    return loads(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def validate_scenario(s: Scenario) -> list[Diagnostic]:
    """Check every invariant; returns diagnostics instead of raising."""
    out: list[Diagnostic] = []
    err = lambda entity, msg: out.append(Diagnostic("error", entity, msg))
    warn = lambda entity, msg: out.append(Diagnostic("warning", entity, msg))

    seen_ids: set[str] = set()
    for entity_id in (
        [m.name for m in s.materials]
        + [w.id for w in s.walls]
        + [a.id for a in s.aps]
        + [p.id for p in s.panels]
        + [r.id for r in s.regions]
    ):
        if entity_id in seen_ids:
            err(entity_id, "duplicate entity id")
        seen_ids.add(entity_id)

    for m in s.materials:
        if m.relative_permittivity < 1.0:
            err(m.name, f"relative_permittivity {m.relative_permittivity} < 1")
        if m.transmission_loss < 0.0:
            err(m.name, f"transmission_loss {m.transmission_loss} dB < 0")
        if m.reflection_mode not in REFLECTION_MODES:
            err(m.name, f"reflection_mode must be one of {REFLECTION_MODES}")
        if not 0.0 <= m.fixed_reflection_magnitude <= 1.0:
            err(m.name, "fixed_reflection_magnitude outside [0, 1]")

    for w in s.walls:
        if w.top_height <= w.base_height:
            err(w.id, "top_height must exceed base_height")
        if len(w.footprint) < 2:
            err(w.id, "footprint needs at least 2 points")
        for p, q in zip(w.footprint, w.footprint[1:]):
            if p == q:
                err(w.id, "consecutive footprint points coincide")

    bbox = _scenario_bbox(s)
    for a in s.aps:
        if a.frequency <= 0.0:
            err(a.id, f"frequency {a.frequency} Hz must be positive")
        if not np.isfinite(a.tx_power):
            err(a.id, "tx_power must be finite")
        if bbox is not None and not _inside_bbox(a.position, bbox):
            err(a.id, "position outside the scenario bounding box")
        out.extend(_check_pattern(a))

    faces = s.faces()
    for p in s.panels:
        out.extend(_check_panel(p, s, faces))

    for r in s.regions:
        if not polygon_is_simple(r.polygon):
            err(r.id, "polygon is self-intersecting or degenerate")
        elif r.area <= 0.0:
            err(r.id, "polygon area must be positive")
        if not np.isfinite(r.eval_height):
            err(r.id, "eval_height must be finite")

    if s.grid.spacing <= 0.0:
        err(None, "grid spacing must be positive")
    rt = s.rt
    if not 0 <= rt.max_reflections <= MAX_REFLECTIONS_CAP:
        err(None, f"max_reflections must be in [0, {MAX_REFLECTIONS_CAP}]")
    if not 0 <= rt.max_transmissions <= MAX_TRANSMISSIONS_CAP:
        err(None, f"max_transmissions must be in [0, {MAX_TRANSMISSIONS_CAP}]")
    if rt.summation_mode not in SUMMATION_MODES:
        err(None, f"summation_mode must be one of {SUMMATION_MODES}")
    if not np.isfinite(rt.threshold_power):
        err(None, "threshold_power must be finite")
    if rt.include_ems_multibounce:
        warn(None, "include_ems_multibounce is accepted but the solver models "
                   "first-order panel paths only")
    return out


def _scenario_bbox(s: Scenario):
    """Axis-aligned bounds of the built environment, padded by 1 m."""
    xy = [pt for w in s.walls for pt in w.footprint]
    xy += [pt for r in s.regions for pt in r.polygon]
    if not xy:
        return None
    xs = [p[0] for p in xy]
    ys = [p[1] for p in xy]
    pad = 1.0
    # the vertical extent is only meaningful when walls exist
    zs = [h for w in s.walls for h in (w.base_height, w.top_height)]
    z_range = (min(zs) - pad, max(zs) + pad) if zs else None
    return ((min(xs) - pad, max(xs) + pad), (min(ys) - pad, max(ys) + pad), z_range)


def _inside_bbox(p, bbox) -> bool:
    for c, bounds in zip(p, bbox):
        if bounds is not None and not bounds[0] <= c <= bounds[1]:
            return False
    return True


def _check_pattern(a: AccessPoint) -> list[Diagnostic]:
    pat = a.pattern
    out: list[Diagnostic] = []
    if pat.kind != "tabulated":
        return out
    th, ph, g = pat.theta_deg, pat.phi_deg, pat.gain_dbi
    if th is None or ph is None or g is None:
        out.append(Diagnostic("error", a.id, "tabulated pattern missing its table"))
        return out
    ok_axes = (
        len(th) >= 2
        and len(ph) >= 2
        and abs(th[0]) < 1e-9
        and abs(th[-1] - 180.0) < 1e-9
        and abs(ph[0] + 180.0) < 1e-9
        and abs(ph[-1] - 180.0) < 1e-9
        and all(b > a_ for a_, b in zip(th, th[1:]))
        and all(b > a_ for a_, b in zip(ph, ph[1:]))
    )
    if not ok_axes:
        out.append(
            Diagnostic("error", a.id, "pattern table must cover theta 0..180 and "
                                      "phi -180..180 with strictly increasing axes")
        )
    if len(g) != len(th) or any(len(row) != len(ph) for row in g):
        out.append(Diagnostic("error", a.id, "pattern gain table shape mismatch"))
    elif not all(np.isfinite(v) for row in g for v in row):
        out.append(Diagnostic("error", a.id, "pattern gain values must be finite"))
    return out


def _check_panel(p: EmsPanelSpec, s: Scenario, faces: list[WallFace]) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    err = lambda msg: out.append(Diagnostic("error", p.id, msg))
    warn = lambda msg: out.append(Diagnostic("warning", p.id, msg))

    n = np.asarray(p.unit_normal, dtype=float)
    ex = np.asarray(p.local_x_axis, dtype=float)
    tol = 1e-9
    if abs(np.linalg.norm(n) - 1.0) > tol or abs(np.linalg.norm(ex) - 1.0) > tol:
        err("unit_normal and local_x_axis must be unit vectors")
        return out
    if abs(float(np.dot(n, ex))) > tol:
        err("unit_normal and local_x_axis must be orthogonal")
        return out
    if p.cells_per_side < 1:
        err("cells_per_side must be >= 1")
    if p.cell_pitch <= 0.0:
        err("cell_pitch must be positive")
    if not 0.0 <= p.reflection_amplitude <= 1.0:
        err("reflection_amplitude outside [0, 1]")
    if p.phase_profile.kind == "matrix":
        m = p.phase_profile.matrix
        nn = p.cells_per_side
        if len(m) != nn or any(len(row) != nn for row in m):
            err(f"phase matrix must be {nn}x{nn}")
    if out:
        return out

    b = np.asarray(p.barycenter, dtype=float)
    mounted = False
    for f in faces:
        fn = f.normal
        rel = b - f.origin
        plane_dist = float(np.dot(rel, fn))
        u = float(np.dot(rel, geometry.unit(f.edge_u)))
        v = float(np.dot(rel, geometry.unit(f.edge_v)))
        du = max(-u, u - f.u_len, 0.0)
        dv = max(-v, v - f.v_len, 0.0)
        if np.hypot(np.hypot(du, dv), plane_dist) > PANEL_WALL_TOL:
            continue
        if abs(float(np.dot(n, fn))) < 1.0 - 1e-6:
            continue  # not flush with this wall
        # normal must point away from the wall (toward the barycenter side)
        if abs(plane_dist) > 1e-6 and float(np.dot(n, fn)) * plane_dist < 0.0:
            continue
        mounted = True
        break
    if not mounted:
        err("barycenter is not within 5 cm of any wall face with a matching normal")
        return out

    if p.phase_profile.kind == "synthesized":
        source_id = p.phase_profile.source_ap
        try:
            ap = s.ap(source_id)
        except KeyError:
            err(f"phase_profile references unknown access point {source_id!r}")
            return out
        for target, label in ((ap.position, "source AP"), (p.phase_profile.focus, "focus")):
            t = np.asarray(target, dtype=float)
            if float(np.dot(t - b, n)) <= 0.0:
                warn(f"no LOS to {label}: point lies behind the panel plane")
            elif not geometry.line_of_sight(b, t, faces):
                warn(f"no LOS to {label}")
    return out


# ---------------------------------------------------------------------------
# Power grids and their CSV form
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PowerGrid:
    """Received power sampled on a uniform lattice of cell centers.

    ``values`` holds dBm with NaN at masked (out-of-region) points;
    ``region`` holds indexes into ``region_ids`` with -1 at masked points.
    """

    x: np.ndarray  # (nx,) ascending [m]
    y: np.ndarray  # (ny,) ascending [m]
    z: np.ndarray  # (ny, nx) evaluation heights [m]
    values: np.ndarray  # (ny, nx) dBm, NaN where masked
    region: np.ndarray  # (ny, nx) int, -1 where masked
    region_ids: tuple[str, ...]
    spacing: float
    metadata: dict = field(default_factory=dict)

    @property
    def in_region(self) -> np.ndarray:
        return self.region >= 0

    def region_mask(self, region_id: str) -> np.ndarray:
        return self.region == self.region_ids.index(region_id)

    def samples(self, region_id: str | None = None) -> np.ndarray:
        """Unmasked values, optionally restricted to one region."""
        mask = self.in_region if region_id is None else self.region_mask(region_id)
        return self.values[mask]

    def same_lattice(self, other: "PowerGrid") -> bool:
        return (
            np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.z, other.z)
            and np.array_equal(self.region, other.region)
            and self.region_ids == other.region_ids
        )


POWER_GRID_HEADER = "x_m,y_m,z_m,region,p_rx_dbm"


def write_power_grid(grid: PowerGrid, path) -> None:
    """Write a grid as CSV; values round-trip exactly through read."""
    if grid.values.size == 0:
        raise ValueError("cannot write an empty power grid")
    lines = [POWER_GRID_HEADER]
    for j in range(len(grid.y)):
        for i in range(len(grid.x)):
            ridx = int(grid.region[j, i])
            name = grid.region_ids[ridx] if ridx >= 0 else ""
            val = grid.values[j, i]
            val_s = repr(float(val)) if np.isfinite(val) else ""
            lines.append(
                f"{float(grid.x[i])!r},{float(grid.y[j])!r},{float(grid.z[j, i])!r},{name},{val_s}"
            )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_power_grid(path) -> PowerGrid:
    """Inverse of write_power_grid (metadata is not persisted)."""
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text or text[0] != POWER_GRID_HEADER:
        raise ParseError(f"bad power-grid header in {path}")
    rows = []
    for lineno, line in enumerate(text[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise ParseError(f"expected 5 fields at line {lineno}", str(path))
        x, y, z, name, val = parts
        rows.append((float(x), float(y), float(z), name, float(val) if val else np.nan))
    xs = np.array(sorted({r[0] for r in rows}))
    ys = np.array(sorted({r[1] for r in rows}))
    nx, ny = len(xs), len(ys)
    values = np.full((ny, nx), np.nan)
    z = np.zeros((ny, nx))
    region = np.full((ny, nx), -1, dtype=int)
    names = [n for _, _, _, n, _ in rows if n]
    region_ids = tuple(dict.fromkeys(names))
    xi = {v: i for i, v in enumerate(xs)}
    yi = {v: j for j, v in enumerate(ys)}
    for x, y, zz, name, val in rows:
        i, j = xi[x], yi[y]
        values[j, i] = val
        z[j, i] = zz
        region[j, i] = region_ids.index(name) if name else -1
    spacing = float(np.min(np.diff(xs))) if nx > 1 else float(np.min(np.diff(ys)) if ny > 1 else 0.0)
    return PowerGrid(xs, ys, z, values, region, region_ids, spacing)
