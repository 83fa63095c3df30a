"""Geometry primitives: mirroring, face intersection, visibility.

The segment/face intersection is checked against an independent scalar
oracle on random inputs; mirroring is checked as an involution.
"""

import numpy as np
import pytest

from semesim.geometry import (
    FaceSet,
    build_faces,
    line_of_sight,
    mirror_point,
    points_in_polygon,
    polygon_area,
    polygon_is_simple,
    segment_hits,
)

from conftest import box_room, make_wall, random_face


def plane_x0_face():
    return build_faces([make_wall("w", (0, -2), (0, 2), base=0.0, top=4.0)])[0]


# ---------------------------------------------------------------------------
# mirror_point
# ---------------------------------------------------------------------------


def test_mirror_across_x0_plane():
    face = plane_x0_face()
    assert np.allclose(mirror_point((1.0, 2.0, 3.0), face), (-1.0, 2.0, 3.0))


def test_mirror_fixed_point_on_plane():
    face = plane_x0_face()
    p = np.array([0.0, 1.3, 2.2])
    assert np.allclose(mirror_point(p, face), p, atol=1e-15)


def test_mirror_involution_and_distance_preservation():
    rng = np.random.default_rng(7)
    for _ in range(200):
        face = random_face(rng)
        p = rng.uniform(-10, 10, size=3)
        m = mirror_point(p, face)
        back = mirror_point(m, face)
        assert np.linalg.norm(back - p) <= 1e-12 * max(1.0, np.linalg.norm(p))
        n = face.normal
        d_p = abs(float(np.dot(p - face.origin, n)))
        d_m = abs(float(np.dot(m - face.origin, n)))
        assert abs(d_p - d_m) <= 1e-12 * max(1.0, d_p)


# ---------------------------------------------------------------------------
# segment_hits
# ---------------------------------------------------------------------------


def test_single_perpendicular_crossing():
    faces = build_faces([make_wall("w", (1, -1), (1, 1), top=3.0)])
    hits = segment_hits((0, 0, 1.0), (2, 0, 1.0), faces)
    assert len(hits) == 1
    assert np.allclose(hits[0].point, (1.0, 0.0, 1.0), atol=1e-12)
    assert hits[0].incidence_cosine == pytest.approx(1.0)
    assert hits[0].param_along_ray == pytest.approx(1.0)


def test_coplanar_segment_grazes_without_hit():
    faces = build_faces([make_wall("w", (0, -1), (0, 1), top=3.0)])
    assert segment_hits((0, -0.5, 1.0), (0, 0.5, 2.0), faces) == []


def test_degenerate_segment_rejected():
    faces = build_faces(box_room())
    with pytest.raises(ValueError):
        segment_hits((1, 1, 1), (1, 1, 1), faces)


def oracle_segment_face(a, b, face):
    """Independent scalar crossing test; returns param in meters or None."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    n = face.normal
    d = b - a
    seg_len = np.linalg.norm(d)
    denom = float(np.dot(d, n))
    if abs(denom) / seg_len <= 1e-9:
        return None
    t = float(np.dot(face.origin - a, n)) / denom
    if not (1e-9 < t < 1 - 1e-9):
        return None
    p = a + t * d
    u = float(np.dot(p - face.origin, face.edge_u)) / face.u_len
    v = float(np.dot(p - face.origin, face.edge_v)) / face.v_len
    if not (-1e-9 <= u <= face.u_len + 1e-9 and -1e-9 <= v <= face.v_len + 1e-9):
        return None
    return t * seg_len


def test_segment_hits_matches_bruteforce_oracle():
    rng = np.random.default_rng(11)
    faces = [random_face(rng) for _ in range(12)]
    fs = FaceSet(faces)
    for _ in range(100):
        a = rng.uniform(-8, 8, size=3)
        b = rng.uniform(-8, 8, size=3)
        hits = segment_hits(a, b, fs)
        expect = {}
        for f in faces:
            param = oracle_segment_face(a, b, f)
            if param is not None:
                expect[id(f)] = param
        assert {id(h.face) for h in hits} == set(expect)
        for h in hits:
            assert h.param_along_ray == pytest.approx(expect[id(h.face)], abs=1e-9)
        params = [h.param_along_ray for h in hits]
        assert params == sorted(params)
        assert all(b_ > a_ for a_, b_ in zip(params, params[1:])) or len(params) <= 1


# ---------------------------------------------------------------------------
# line_of_sight
# ---------------------------------------------------------------------------


def test_los_blocked_by_wall():
    faces = build_faces([make_wall("w", (1, -5), (1, 5), top=3.0)])
    assert not line_of_sight((0, 0, 1.0), (2, 0, 1.0), faces)
    assert line_of_sight((0, 0, 1.0), (0.5, 0, 1.0), faces)


def test_los_trivial_no_walls():
    assert line_of_sight((0, 0, 0), (1e-6, 0, 0), [])


def test_los_symmetry_random():
    rng = np.random.default_rng(3)
    faces = FaceSet([random_face(rng) for _ in range(8)])
    for _ in range(50):
        a = rng.uniform(-6, 6, size=3)
        b = rng.uniform(-6, 6, size=3)
        assert line_of_sight(a, b, faces) == line_of_sight(b, a, faces)


def test_los_between_bundled_ap_and_panel(hallway):
    faces = hallway.faces()
    ap = hallway.ap("ap_a")
    panel = hallway.panel("skin_a")
    assert line_of_sight(ap.position, panel.barycenter, faces)
    assert line_of_sight(panel.barycenter, panel.phase_profile.focus, faces)


# ---------------------------------------------------------------------------
# polygons
# ---------------------------------------------------------------------------


def test_polygon_area_and_simplicity():
    square = [(0, 0), (2, 0), (2, 3), (0, 3)]
    assert polygon_area(square) == pytest.approx(6.0)
    assert polygon_is_simple(square)
    bowtie = [(0, 0), (2, 2), (2, 0), (0, 2)]
    assert not polygon_is_simple(bowtie)


def test_points_in_polygon_includes_boundary():
    square = [(0, 0), (1, 0), (1, 1), (0, 1)]
    pts = [(0.5, 0.5), (1.0, 0.5), (1.2, 0.5), (0.0, 0.0)]
    inside = points_in_polygon(pts, square)
    assert inside.tolist() == [True, True, False, True]
