"""Shared fixtures: small hand-built parts and assemblies for solver tests."""

from __future__ import annotations

import numpy as np

from fabhal.assembly import Assembly, Endpoint
from fabhal.frames import Frame
from fabhal.parts import Part
from fabhal.primitives import DofTag, make_primitive


def make_rod_part(
    part_id="test_rod",
    radius=5.0,
    length=100.0,
    mass=0.0,
    slide_tag=DofTag.BOUNDED_AND_OPEN,
    closed=False,
):
    return Part(
        id=part_id,
        name=part_id,
        mass=mass,
        center_of_mass=(0.0, 0.0, 0.0),
        primitives=(
            make_primitive(
                "rod",
                "rod",
                {"radius": radius, "length": length},
                slide_tag=slide_tag,
                closed=closed,
            ),
        ),
    )


def make_shook_part(part_id="test_shook", mass=15.0, half_span=30.0, arc_radius=12.0):
    """An S-hook: two perpendicular open hooks at the ends of a short spine."""
    top = make_primitive(
        "hook1",
        "hook",
        {"arc_angle": 300.0, "arc_radius": arc_radius, "thickness": 3.0},
        base_frame=Frame((0.0, 0.0, half_span), (0.0, 0.0, 180.0)),
    )
    bottom = make_primitive(
        "hook2",
        "hook",
        {"arc_angle": 300.0, "arc_radius": arc_radius, "thickness": 3.0},
        base_frame=Frame((0.0, 0.0, -half_span), (90.0, 0.0, 0.0)),
    )
    return Part(
        id=part_id,
        name=part_id,
        mass=mass,
        center_of_mass=(0.0, 0.0, 0.0),
        primitives=(top, bottom),
    )


def make_ring_part(part_id="test_ring", arc_radius=15.0, thickness=3.0, mass=10.0,
                   com=(0.0, 0.0, 0.0)):
    return Part(
        id=part_id,
        name=part_id,
        mass=mass,
        center_of_mass=com,
        primitives=(
            make_primitive("hole", "hole", {"arc_radius": arc_radius, "thickness": thickness}),
        ),
    )


def make_link_part(part_id, span, mass=10.0, arc_radius=8.0):
    """A rigid link with a hole at each end, separated by ``span`` along Z."""
    top = make_primitive(
        "hole1",
        "hole",
        {"arc_radius": arc_radius, "thickness": 2.0},
        base_frame=Frame((0.0, 0.0, span / 2.0)),
    )
    bottom = make_primitive(
        "hole2",
        "hole",
        {"arc_radius": arc_radius, "thickness": 2.0},
        base_frame=Frame((0.0, 0.0, -span / 2.0), (90.0, 0.0, 0.0)),
    )
    return Part(
        id=part_id,
        name=part_id,
        mass=mass,
        center_of_mass=(0.0, 0.0, 0.0),
        primitives=(top, bottom),
    )


def make_hook_link_part(part_id, span, mass=10.0, arc_radius=8.0):
    """A rigid link: hole at the top, perpendicular open hook at the bottom."""
    top = make_primitive(
        "hole1",
        "hole",
        {"arc_radius": arc_radius, "thickness": 2.0},
        base_frame=Frame((0.0, 0.0, span / 2.0)),
    )
    bottom = make_primitive(
        "hook2",
        "hook",
        {"arc_angle": 300.0, "arc_radius": arc_radius, "thickness": 2.0},
        base_frame=Frame((0.0, 0.0, -span / 2.0), (90.0, 0.0, 0.0)),
    )
    return Part(
        id=part_id,
        name=part_id,
        mass=mass,
        center_of_mass=(0.0, 0.0, 0.0),
        primitives=(top, bottom),
    )


def rod_and_shook_assembly(rod_length=200.0, rod_tag=DofTag.BOUNDED_AND_OPEN,
                           rod_frame=None, shook_mass=15.0):
    """Environment rod with a single S-hook hanging from it (one tree edge)."""
    asm = Assembly()
    rod = make_rod_part(length=rod_length, slide_tag=rod_tag)
    shook = make_shook_part(mass=shook_mass)
    # rod axis along world X at the origin
    asm.add("env", rod, rod_frame or Frame((0.0, 0.0, 0.0), (0.0, 90.0, 0.0)))
    asm.declare("hook", shook)
    asm.add_connection_unchecked(
        Endpoint("hook", "hook1"), Endpoint("env", "rod"), "default", False
    )
    return asm


def random_x(asm: Assembly, rng: np.random.Generator) -> np.ndarray:
    lo, hi = asm.x_min.copy(), asm.x_max.copy()
    return lo + rng.random(len(lo)) * (hi - lo)
