"""Shared fixtures: bundled scenarios and small synthetic worlds."""

import numpy as np
import pytest

import semesim
from semesim.scenario import (
    AccessPoint,
    AntennaPattern,
    GridSpec,
    Material,
    Region,
    RtSettings,
    Scenario,
    Wall,
)

CONCRETE = Material("concrete", 5.3, 12.0)
BRICK = Material("brick", 4.0, 8.0)


@pytest.fixture(scope="session")
def hallway():
    return semesim.load_scenario(semesim.bundled_path("hallway_a"))


@pytest.fixture(scope="session")
def free_space():
    return semesim.load_scenario(semesim.bundled_path("free_space"))


def make_wall(wall_id, p0, p1, base=0.0, top=3.0, material=CONCRETE):
    return Wall(wall_id, (tuple(p0), tuple(p1)), base, top, material)


def make_ap(pos, ap_id="ap", tx=23.0, freq=5.64e9, pattern=None):
    return AccessPoint(
        id=ap_id,
        position=tuple(pos),
        tx_power=tx,
        frequency=freq,
        pattern=pattern or AntennaPattern(),
    )


def make_scenario(
    walls=(),
    aps=(),
    panels=(),
    regions=None,
    spacing=0.25,
    height=1.2,
    max_reflections=3,
    max_transmissions=2,
    mode="incoherent",
    threshold=-65.0,
):
    if regions is None:
        regions = (Region("room", ((0.0, 0.0), (5.0, 0.0), (5.0, 5.0), (0.0, 5.0)), height),)
    return Scenario(
        walls=tuple(walls),
        materials=(CONCRETE, BRICK),
        aps=tuple(aps),
        panels=tuple(panels),
        regions=tuple(regions),
        grid=GridSpec(spacing=spacing, height=height),
        rt=RtSettings(
            max_reflections=max_reflections,
            max_transmissions=max_transmissions,
            summation_mode=mode,
            threshold_power=threshold,
        ),
    )


def box_room(width=4.0, depth=3.0, top=3.0, material=BRICK):
    """Four-wall rectangular room with corners at (0,0) and (width,depth)."""
    return [
        make_wall("w_south", (0, 0), (width, 0), top=top, material=material),
        make_wall("w_east", (width, 0), (width, depth), top=top, material=material),
        make_wall("w_north", (width, depth), (0, depth), top=top, material=material),
        make_wall("w_west", (0, depth), (0, 0), top=top, material=material),
    ]


def random_face(rng):
    """A wall face with random position and orientation (vertical extrusion)."""
    from semesim.geometry import build_faces

    p0 = rng.uniform(-5, 5, size=2)
    ang = rng.uniform(0, 2 * np.pi)
    p1 = p0 + rng.uniform(1.0, 4.0) * np.array([np.cos(ang), np.sin(ang)])
    wall = make_wall("rnd", p0, p1, base=rng.uniform(-1, 0), top=rng.uniform(1, 4))
    return build_faces([wall])[0]
