"""Image-method multipath tracer and received-power evaluation.

The tracer mirrors each access point across ordered wall-face sequences,
walks the specular chain back from the receiver, and keeps a path when
every unfolded specular point falls inside its face and the wall
crossings along the way fit the transmission budget.  Per-path fields
follow the free-space spherical-wave magnitude (so a single direct path
reduces exactly to the Friis link budget) multiplied by Fresnel or
fixed reflection coefficients and per-traversal wall losses.

Grid evaluation is data-parallel over lattice points; per-point
contributions are accumulated in a fixed order (direct path, then face
sequences by length and face index, then panel terms in scenario order,
then the maximum over access points), so results are bit-identical for
any worker count.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import ems as ems_mod
from .constants import ETA0, POWER_FLOOR_DBM, dbm_to_watt, wavelength
from .geometry import (
    ENDPOINT_EPS,
    FACE_TOL,
    GRAZING_COS_EPS,
    FaceSet,
    WallFace,
    points_in_polygon,
    segment_hits,
)
from .scenario import AccessPoint, PowerGrid, Scenario

RX_GAIN = 1.0  # receiver modelled as isotropic (0 dBi)


@dataclass(frozen=True)
class Interaction:
    kind: str  # "reflection" | "transmission"
    face: WallFace
    point: np.ndarray
    incidence_cosine: float


@dataclass(frozen=True)
class RayPath:
    source: str  # access-point id
    interactions: tuple[Interaction, ...]
    terminus: np.ndarray
    total_length: float  # [m]
    departure_direction: np.ndarray  # unit vector at the source

    @property
    def reflection_count(self) -> int:
        return sum(1 for i in self.interactions if i.kind == "reflection")

    @property
    def transmission_count(self) -> int:
        return sum(1 for i in self.interactions if i.kind == "transmission")

    def face_sequence(self) -> tuple[str, ...]:
        """Dedup key: ordered face ids of the reflections."""
        return tuple(i.face.face_id for i in self.interactions if i.kind == "reflection")


# ---------------------------------------------------------------------------
# Reflection/transmission coefficients
# ---------------------------------------------------------------------------


def fresnel_reflection(cos_incidence: float | np.ndarray, eps_r: float | np.ndarray):
    """Signed perpendicular-polarisation Fresnel coefficient of a dielectric
    half-space (negative for eps_r > 1, hence the pi phase flip)."""
    cos_i = np.asarray(cos_incidence, dtype=float)
    sin2 = 1.0 - cos_i**2
    root = np.sqrt(np.asarray(eps_r, dtype=float) - sin2)
    return (cos_i - root) / (cos_i + root)


def _reflection_coeffs(fs: FaceSet, face_idx: int, cos_i: np.ndarray) -> np.ndarray:
    if fs.fresnel[face_idx]:
        return fresnel_reflection(cos_i, fs.eps_r[face_idx])
    # fixed mode keeps the dielectric sign convention with a constant magnitude
    return np.full_like(np.asarray(cos_i, dtype=float), -fs.fixed_refl[face_idx])


# ---------------------------------------------------------------------------
# Face-sequence enumeration and images
# ---------------------------------------------------------------------------


def _enumerate_sequences(fs: FaceSet, max_reflections: int) -> list[tuple[int, ...]]:
    """All candidate reflection-face sequences up to the given order, in
    (length, lexicographic) order; consecutive coplanar faces are skipped."""
    n = len(fs)
    coplanar = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in range(n):
            if abs(float(np.dot(fs.normal[i], fs.normal[j]))) > 1.0 - 1e-12:
                if abs(float(np.dot(fs.origin[j] - fs.origin[i], fs.normal[i]))) < 1e-9:
                    coplanar[i, j] = True
    seqs: list[tuple[int, ...]] = []
    for length in range(1, max_reflections + 1):
        for seq in itertools.product(range(n), repeat=length):
            if any(coplanar[a, b] for a, b in zip(seq, seq[1:])):
                continue
            seqs.append(seq)
    return seqs


def _image_chain(source: np.ndarray, fs: FaceSet, seq: tuple[int, ...]) -> list[np.ndarray]:
    images = []
    cur = source
    for f in seq:
        n = fs.normal[f]
        cur = cur - 2.0 * float(np.dot(cur - fs.origin[f], n)) * n
        images.append(cur)
    return images


def _backtrace(
    fs: FaceSet, seq: tuple[int, ...], images: list[np.ndarray], rx: np.ndarray
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Walk the specular chain back from (P, 3) receivers.

    Returns (valid mask (P,), [p_1 .. p_k] reflection points, each (P, 3)).
    """
    pts = rx
    valid = np.ones(len(rx), dtype=bool)
    chain_rev: list[np.ndarray] = []
    cur = pts
    for j in range(len(seq) - 1, -1, -1):
        f = seq[j]
        target = images[j]
        d = target[None, :] - cur
        dlen = np.linalg.norm(d, axis=1)
        denom = d @ fs.normal[f]
        ok = np.abs(denom) > GRAZING_COS_EPS * np.maximum(dlen, 1e-300)
        t = np.einsum("pj,j->p", fs.origin[f][None, :] - cur, fs.normal[f]) / np.where(
            ok, denom, 1.0
        )
        ok &= (t > ENDPOINT_EPS) & (t < 1.0 - ENDPOINT_EPS)
        p = cur + t[:, None] * d
        rel = p - fs.origin[f]
        u = rel @ fs.u_hat[f]
        v = rel @ fs.v_hat[f]
        ok &= (u >= -FACE_TOL) & (u <= fs.u_len[f] + FACE_TOL)
        ok &= (v >= -FACE_TOL) & (v <= fs.v_len[f] + FACE_TOL)
        valid &= ok
        chain_rev.append(p)  # garbage in invalid lanes; masked by `valid`
        cur = p
    return valid, chain_rev[::-1]


def _crossings(
    fs: FaceSet, a: np.ndarray, b: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Proper wall crossings of segments a->b, vectorised over points.

    Returns (crossing count (P,), transmission amplitude product (P,)).
    Endpoints are excluded, so junction faces of a reflected path do not
    register as crossings of their own segments.
    """
    count = np.zeros(len(b) if b.ndim == 2 else len(a), dtype=int)
    amp = np.ones(len(count))
    d = b - a
    dlen = np.linalg.norm(d, axis=1)
    for f in range(len(fs)):
        denom = d @ fs.normal[f]
        ok = np.abs(denom) > GRAZING_COS_EPS * np.maximum(dlen, 1e-300)
        t = np.einsum("pj,j->p", fs.origin[f][None, :] - a, fs.normal[f]) / np.where(
            ok, denom, 1.0
        )
        ok &= (t > ENDPOINT_EPS) & (t < 1.0 - ENDPOINT_EPS)
        if not ok.any():
            continue
        p = a + t[:, None] * d
        rel = p - fs.origin[f]
        u = rel @ fs.u_hat[f]
        v = rel @ fs.v_hat[f]
        ok &= (u >= -FACE_TOL) & (u <= fs.u_len[f] + FACE_TOL)
        ok &= (v >= -FACE_TOL) & (v <= fs.v_len[f] + FACE_TOL)
        count += ok
        amp = np.where(ok, amp * fs.trans_amp[f], amp)
    return count, amp


# ---------------------------------------------------------------------------
# Contract operations
# ---------------------------------------------------------------------------


def trace_paths(s: Scenario, ap: AccessPoint, rx) -> list[RayPath]:
    """Direct path plus every valid specular path up to the reflection and
    transmission budgets of the scenario, in deterministic order."""
    rx = np.asarray(rx, dtype=float)
    src = np.asarray(ap.position, dtype=float)
    if np.array_equal(rx, src):
        raise ValueError("receiver coincides with the access point")
    fs = FaceSet(s.faces())
    max_t = s.rt.max_transmissions
    paths: list[RayPath] = []

    def segment_interactions(a, b) -> list[Interaction]:
        hits = segment_hits(a, b, fs)
        return [Interaction("transmission", h.face, h.point, h.incidence_cosine) for h in hits]

    # direct path
    direct = segment_interactions(src, rx)
    if len(direct) <= max_t:
        length = float(np.linalg.norm(rx - src))
        paths.append(
            RayPath(ap.id, tuple(direct), rx, length, (rx - src) / length)
        )

    for seq in _enumerate_sequences(fs, s.rt.max_reflections):
        images = _image_chain(src, fs, seq)
        valid, chain = _backtrace(fs, seq, images, rx[None, :])
        if not valid[0]:
            continue
        points = [src] + [c[0] for c in chain] + [rx]
        interactions: list[Interaction] = []
        n_trans = 0
        feasible = True
        for i, (a, b) in enumerate(zip(points, points[1:])):
            crossed = segment_interactions(a, b)
            n_trans += len(crossed)
            if n_trans > max_t:
                feasible = False
                break
            interactions.extend(crossed)
            if i < len(seq):  # reflection at the segment's far end
                face = fs.faces[seq[i]]
                incoming = (points[i + 1] - a) / np.linalg.norm(points[i + 1] - a)
                cos_i = abs(float(np.dot(incoming, fs.normal[seq[i]])))
                interactions.append(Interaction("reflection", face, points[i + 1], cos_i))
        if not feasible:
            continue
        length = float(np.linalg.norm(rx - images[-1]))
        dep = points[1] - src
        paths.append(
            RayPath(ap.id, tuple(interactions), rx, length, dep / np.linalg.norm(dep))
        )
    return paths


def path_field(path: RayPath, ap: AccessPoint) -> complex:
    """Complex field of one path at its terminus [V/m].

    Magnitude sqrt(eta P_tx G_tx / 2 pi) / L times the interaction
    coefficients; phase -kL plus pi per reflection sign flip (the signed
    coefficients carry the flips).
    """
    if path.total_length <= 0.0:
        raise ValueError("path has non-positive length")
    lam = wavelength(ap.frequency)
    k = 2.0 * math.pi / lam
    g_tx = float(ap.pattern.gain_linear(path.departure_direction[None, :])[0])
    amp = math.sqrt(ETA0 * dbm_to_watt(ap.tx_power) * g_tx / (2.0 * math.pi)) / path.total_length
    coeff = 1.0
    for inter in path.interactions:
        mat = inter.face.material
        if inter.kind == "transmission":
            coeff *= 10.0 ** (-mat.transmission_loss / 20.0)
        elif mat.reflection_mode == "fresnel":
            coeff *= float(fresnel_reflection(inter.incidence_cosine, mat.relative_permittivity))
        else:
            coeff *= -mat.fixed_reflection_magnitude
    return amp * coeff * complex(math.cos(-k * path.total_length), math.sin(-k * path.total_length))


def received_power(contributions, g_rx: float, lam: float, mode: str) -> float:
    """Combine per-path fields into received power [dBm] per the chosen
    summation mode."""
    fields = list(contributions)
    if not fields:
        raise ValueError("at least one contribution is required")
    scale = lam**2 * g_rx / (8.0 * math.pi * ETA0)
    if mode == "coherent":
        watts = scale * abs(sum(fields)) ** 2
    elif mode == "incoherent":
        watts = scale * sum(abs(f) ** 2 for f in fields)
    else:
        raise ValueError(f"unknown summation mode {mode!r}")
    if watts <= 0.0:
        return POWER_FLOOR_DBM
    return max(10.0 * math.log10(watts) + 30.0, POWER_FLOOR_DBM)


# ---------------------------------------------------------------------------
# Grid evaluation
# ---------------------------------------------------------------------------


def _cell_center_axis(lo: float, hi: float, spacing: float) -> np.ndarray:
    """Cell-center coordinates (i + 1/2) * spacing covering [lo, hi]."""
    i0 = math.ceil(lo / spacing - 0.5 - 1e-9)
    i1 = math.floor(hi / spacing - 0.5 + 1e-9)
    return (np.arange(i0, i1 + 1) + 0.5) * spacing


class GridSolver:
    """Reusable multipath state for one scenario.

    The access-point multipath sums are independent of any panel, so they
    are computed once and reused across panel variants (size and placement
    sweeps re-evaluate only the panel terms).
    """

    def __init__(self, scenario: Scenario, workers: int | None = None):
        self.scenario = scenario
        self.faceset = FaceSet(scenario.faces())
        self.sequences = _enumerate_sequences(self.faceset, scenario.rt.max_reflections)
        self.images = {
            a.id: [_image_chain(np.asarray(a.position, float), self.faceset, seq)
                   for seq in self.sequences]
            for a in scenario.aps
        }
        self.panels = [ems_mod.build_panel(p, scenario) for p in scenario.panels]
        if workers is None:
            workers = int(os.environ.get("SEME_THREADS", "1"))
        self.workers = max(1, workers)
        self._build_lattice()
        self._base: dict[str, np.ndarray] = {}

    def _build_lattice(self) -> None:
        s = self.scenario
        if not s.regions:
            raise ValueError("scenario defines no regions to sample")
        spacing = s.grid.spacing
        xs_min = min(p[0] for r in s.regions for p in r.polygon)
        xs_max = max(p[0] for r in s.regions for p in r.polygon)
        ys_min = min(p[1] for r in s.regions for p in r.polygon)
        ys_max = max(p[1] for r in s.regions for p in r.polygon)
        self.x = _cell_center_axis(xs_min, xs_max, spacing)
        self.y = _cell_center_axis(ys_min, ys_max, spacing)
        nx, ny = len(self.x), len(self.y)
        xx, yy = np.meshgrid(self.x, self.y)  # (ny, nx)
        flat_xy = np.column_stack([xx.ravel(), yy.ravel()])
        region = np.full(nx * ny, -1, dtype=int)
        z = np.full(nx * ny, s.grid.height)
        for idx, reg in enumerate(s.regions):
            mask = points_in_polygon(flat_xy, reg.polygon) & (region == -1)
            region[mask] = idx
            z[mask] = reg.eval_height
        self.region = region.reshape(ny, nx)
        self.z = z.reshape(ny, nx)
        pts = np.column_stack([flat_xy, z])
        self.points = pts[region >= 0]
        self.point_index = np.nonzero(region >= 0)[0]

    # -- per-AP multipath -------------------------------------------------

    def _ap_base(self, ap: AccessPoint) -> np.ndarray:
        """Multipath accumulation per in-region point: linear watts in
        incoherent mode, complex field in coherent mode."""
        if ap.id in self._base:
            return self._base[ap.id]
        out = self._map_chunks(lambda pts: self._ap_base_chunk(ap, pts))
        self._base[ap.id] = out
        return out

    def _ap_base_chunk(self, ap: AccessPoint, pts: np.ndarray) -> np.ndarray:
        s = self.scenario
        fs = self.faceset
        coherent = s.rt.summation_mode == "coherent"
        lam = wavelength(ap.frequency)
        k = 2.0 * math.pi / lam
        scale = lam**2 * RX_GAIN / (8.0 * math.pi * ETA0)
        src = np.asarray(ap.position, dtype=float)
        acc = np.zeros(len(pts), dtype=complex if coherent else float)

        def accumulate(valid, lengths, dep_dirs, coeff, amp_trans):
            g_tx = ap.pattern.gain_linear(dep_dirs)
            amplitude = np.sqrt(ETA0 * dbm_to_watt(ap.tx_power) * g_tx / (2.0 * math.pi))
            magnitude = amplitude * coeff * amp_trans / np.maximum(lengths, 1e-300)
            if coherent:
                field = magnitude * np.exp(-1j * k * lengths)
                acc[valid] += field[valid]
            else:
                acc[valid] += scale * (magnitude[valid] ** 2)

        # direct path
        d = pts - src[None, :]
        lengths = np.linalg.norm(d, axis=1)
        n_cross, amp = _crossings(fs, np.broadcast_to(src, pts.shape), pts)
        valid = (lengths > 0) & (n_cross <= s.rt.max_transmissions)
        accumulate(valid, lengths, d / np.maximum(lengths, 1e-300)[:, None], np.ones(len(pts)), amp)

        for seq, images in zip(self.sequences, self.images[ap.id]):
            valid, chain = _backtrace(fs, seq, images, pts)
            if not valid.any():
                continue
            lengths = np.linalg.norm(pts - images[-1][None, :], axis=1)
            coeff = np.ones(len(pts))
            n_cross = np.zeros(len(pts), dtype=int)
            amp = np.ones(len(pts))
            nodes = [np.broadcast_to(src, pts.shape), *chain, pts]
            for i, (a, b) in enumerate(zip(nodes, nodes[1:])):
                c, t_amp = _crossings(fs, a, b)
                n_cross += c
                amp *= t_amp
                if i < len(seq):
                    seg = b - a
                    seg_len = np.linalg.norm(seg, axis=1)
                    cos_i = np.abs(seg @ fs.normal[seq[i]]) / np.maximum(seg_len, 1e-300)
                    coeff *= _reflection_coeffs(fs, seq[i], cos_i)
            valid &= n_cross <= s.rt.max_transmissions
            dep = chain[0] - src[None, :]
            dep_len = np.maximum(np.linalg.norm(dep, axis=1), 1e-300)
            accumulate(valid, lengths, dep / dep_len[:, None], coeff, amp)
        return acc

    # -- panel terms -------------------------------------------------------

    def _panel_field(self, ap: AccessPoint, panel: ems_mod.EmsPanel, pts: np.ndarray) -> np.ndarray:
        """First-order panel contribution (complex field) per point; zero
        where the LOS gates fail."""
        fs = self.faceset
        spec = panel.spec
        b = np.asarray(spec.barycenter, dtype=float)
        _, _, n_hat = ems_mod.panel_frame(spec)
        src = np.asarray(ap.position, dtype=float)
        zero = np.zeros(len(pts), dtype=complex)
        if float(np.dot(src - b, n_hat)) <= 0.0:
            return zero
        if segment_hits(src, b, fs):  # AP -> panel leg must be line-of-sight
            return zero
        lam = wavelength(ap.frequency)
        k = 2.0 * math.pi / lam
        cells = panel.cell_centers.reshape(-1, 3)
        to_src = src[None, :] - cells
        d1 = np.linalg.norm(to_src, axis=1)
        cos_in = np.einsum("cj,j->c", to_src, n_hat) / d1
        g_tx = ap.pattern.gain_linear(-to_src / d1[:, None])
        e_inc = (
            np.sqrt(ETA0 * dbm_to_watt(ap.tx_power) * g_tx / (2.0 * math.pi))
            / d1
            * np.exp(-1j * k * d1)
        )
        front = (pts - b[None, :]) @ n_hat > 0.0
        n_cross, _ = _crossings(fs, np.broadcast_to(b, pts.shape), pts)
        gate = front & (n_cross == 0)  # panel -> rx leg must be line-of-sight
        if not gate.any():
            return zero
        field = zero.copy()
        field[gate] = ems_mod._scatter_to_points(panel, lam, e_inc, cos_in, pts[gate])
        return field

    # -- assembly ----------------------------------------------------------

    def _map_chunks(self, fn) -> np.ndarray:
        pts = self.points
        n = len(pts)
        if n == 0:
            return np.zeros(0)
        bounds = np.linspace(0, n, self.workers + 1, dtype=int)
        chunks = [(int(a), int(b)) for a, b in zip(bounds, bounds[1:]) if b > a]
        results = [None] * len(chunks)
        if len(chunks) == 1:
            results[0] = fn(pts)
        else:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                futures = [pool.submit(fn, pts[a:b]) for a, b in chunks]
                results = [f.result() for f in futures]
        return np.concatenate(results)

    def grid(self, panels: list[ems_mod.EmsPanel] | None) -> PowerGrid:
        """Power grid with the given panels active (None disables panels)."""
        s = self.scenario
        coherent = s.rt.summation_mode == "coherent"
        best_dbm = np.full(len(self.points), -np.inf)
        for ap in s.aps:
            base = self._ap_base(ap)
            extra = []
            if panels:
                for panel in panels:
                    extra.append(
                        self._map_chunks(lambda pts, a=ap, p=panel: self._panel_field(a, p, pts))
                    )
            lam = wavelength(ap.frequency)
            scale = lam**2 * RX_GAIN / (8.0 * math.pi * ETA0)
            if coherent:
                total_field = base.copy()
                for e in extra:
                    total_field += e
                watts = scale * np.abs(total_field) ** 2
            else:
                watts = base.copy()
                for e in extra:
                    watts += scale * np.abs(e) ** 2
            with np.errstate(divide="ignore"):
                dbm = np.where(watts > 0.0, 10.0 * np.log10(watts) + 30.0, POWER_FLOOR_DBM)
            dbm = np.maximum(dbm, POWER_FLOOR_DBM)
            best_dbm = np.maximum(best_dbm, dbm)  # serving-AP rule
        best_dbm = np.maximum(best_dbm, POWER_FLOOR_DBM)

        values = np.full(self.region.size, np.nan)
        values[self.point_index] = best_dbm
        meta = {
            "frequency_hz": s.aps[0].frequency if s.aps else None,
            "settings_hash": s.settings_hash(),
            "summation_mode": s.rt.summation_mode,
            "panels_enabled": bool(panels),
        }
        return PowerGrid(
            x=self.x,
            y=self.y,
            z=self.z,
            values=values.reshape(self.region.shape),
            region=self.region,
            region_ids=tuple(r.id for r in s.regions),
            spacing=s.grid.spacing,
            metadata=meta,
        )

    def reference_grid(self) -> PowerGrid:
        return self.grid(None)

    def seme_grid(self, panels: list[ems_mod.EmsPanel] | None = None) -> PowerGrid:
        return self.grid(self.panels if panels is None else panels)


def simulate_grid(s: Scenario, panels_enabled: bool = True, *, workers: int | None = None) -> PowerGrid:
    """Received-power map over all regions at their evaluation heights.

    Each point gets the maximum over access points of the per-AP multipath
    sum; active panels add one first-order contribution per (AP, panel)
    pair, gated on line-of-sight for both legs.
    """
    solver = GridSolver(s, workers=workers)
    return solver.seme_grid() if panels_enabled else solver.reference_grid()
