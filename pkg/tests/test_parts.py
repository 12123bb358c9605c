import json

import numpy as np
import pytest

from fabhal.parts import (
    DuplicateId,
    SchemaError,
    load_bundled_library,
    load_library,
    precompute_distance_bounds,
)
from fabhal.primitives import InvariantError


STARTER_IDS = {
    "hanger",
    "s_hook",
    "double_hook",
    "hookeye_left",
    "hookeye_left_s",
    "binder_clip",
    "plastic_clip",
    "turnbuckle_m4",
    "ring_xs",
    "ring_s",
    "ring_m",
    "ring_l",
    "basket",
    "rod",
    "surface",
    "edge",
    "soap_bottle",
    "toothbrush",
    "cable",
    "mug",
    "mug_hanger_env",
    "broom_rod",
    "paper_towel_roll",
    "towel_hanging_env",
    "back_seats",
    "diaper_caddy",
    "clip_light",
    "bunk_bed_hook",
}


def test_bundled_library_loads_with_starter_set():
    lib = load_bundled_library()
    assert STARTER_IDS <= set(lib.ids())


def test_generic_overrides():
    lib = load_bundled_library()
    rod = lib.instantiate("rod", {"length": 500, "radius": 5})
    assert rod.primitive("rod").shape["length"] == 500
    assert rod.primitive("rod").shape["radius"] == 5


def test_override_out_of_range():
    lib = load_bundled_library()
    with pytest.raises(SchemaError):
        lib.instantiate("turnbuckle_m4", {"extension": 100.0})
    with pytest.raises(SchemaError):
        lib.instantiate("rod", {"bogus": 1.0})


def test_turnbuckle_extension_moves_hooks():
    lib = load_bundled_library()
    closed = lib.instantiate("turnbuckle_m4")
    extended = lib.instantiate("turnbuckle_m4", {"extension": 40.0})
    z0 = closed.primitive("hook_a").base_frame.position[2]
    z1 = extended.primitive("hook_a").base_frame.position[2]
    assert z1 - z0 == pytest.approx(20.0)


def test_schema_rejects_missing_field(tmp_path):
    bad = {"format": 1, "parts": [{"id": "x"}]}
    p = tmp_path / "lib.json"
    p.write_text(json.dumps(bad))
    with pytest.raises(SchemaError):
        load_library(p)


def test_invariant_rejects_hemisphere_critical(tmp_path):
    bad = {
        "format": 1,
        "parts": [
            {
                "id": "x",
                "primitives": [
                    {
                        "id": "h",
                        "type": "hemisphere",
                        "shape": {"radius": 5},
                        "critical_dimension": 4.0,
                    }
                ],
            }
        ],
    }
    p = tmp_path / "lib.json"
    p.write_text(json.dumps(bad))
    with pytest.raises(InvariantError):
        load_library(p)


def test_invariant_rejects_bad_distance_bounds(tmp_path):
    bad = {
        "format": 1,
        "parts": [
            {
                "id": "x",
                "primitives": [
                    {"id": "r", "type": "rod", "shape": {"radius": 2, "length": 50}}
                ],
                "distance_bounds": [{"a": "r", "b": "r", "min": 10.0, "max": 5.0}],
            }
        ],
    }
    p = tmp_path / "lib.json"
    p.write_text(json.dumps(bad))
    with pytest.raises(InvariantError):
        load_library(p)


def test_duplicate_part_id(tmp_path):
    part = {
        "id": "x",
        "primitives": [{"id": "r", "type": "rod", "shape": {"radius": 2, "length": 50}}],
    }
    p = tmp_path / "lib.json"
    p.write_text(json.dumps({"format": 1, "parts": [part, part]}))
    with pytest.raises(DuplicateId):
        load_library(p)


def test_missing_file_raises_oserror(tmp_path):
    with pytest.raises(OSError):
        load_library(tmp_path / "nope.json")


def test_distance_bounds_constant_pair():
    # two point-like connectors 80 mm apart: conservative slack widens by 1%
    lib = load_bundled_library()
    clip = lib.get("plastic_clip")
    lo, hi = precompute_distance_bounds(clip, "hemisphere1", "hemisphere2", 4)
    assert lo == pytest.approx(30.0 * 0.99)
    assert hi == pytest.approx(30.0 * 1.01)


def test_distance_bounds_rod_pair_spans_length():
    lib = load_bundled_library()
    rod = lib.instantiate("rod", {"length": 100, "radius": 5})
    lo, hi = precompute_distance_bounds(rod, "rod", "rod", 16)
    assert lo == 0.0
    assert hi >= 100.0


def test_distance_bounds_contain_finer_sampling():
    lib = load_bundled_library()
    basket = lib.get("basket")
    lo, hi = basket.distance_bounds("rod1", "rod2", 16)
    import numpy as np

    from fabhal.parts import _contact_origin_grid

    pa = _contact_origin_grid(basket.primitive("rod1"), 160)
    pb = _contact_origin_grid(basket.primitive("rod2"), 160)
    d = np.sqrt(((pa[:, None, :] - pb[None, :, :]) ** 2).sum(axis=2))
    assert d.min() >= lo
    assert d.max() <= hi


def test_library_fit_pairs():
    # assembled-in-practice pairs from the bundled set must pass the fit rules
    from fabhal.rules import check_connectable

    lib = load_bundled_library()
    door = lib.instantiate("rod", {"length": 500, "radius": 5})
    pairs = [
        (lib.get("hookeye_left_s").primitive("hole"), door.primitive("rod")),
        (lib.get("hookeye_left_s").primitive("hook"), lib.get("basket").primitive("rod1")),
        (lib.get("hookeye_left").primitive("hook"), lib.get("broom_rod").primitive("tube")),
        (lib.get("paper_towel_roll").primitive("tube"), lib.get("broom_rod").primitive("tube")),
        (lib.get("turnbuckle_m4").primitive("hook_b"), lib.get("ring_xs").primitive("hole")),
        (lib.get("hanger").primitive("hook"), lib.get("ring_l").primitive("hole")),
        (lib.get("clip_light").primitive("clip"), lib.get("hanger").primitive("bar")),
        (lib.get("binder_clip").primitive("hole1"), lib.get("cable").primitive("rod1")),
        (lib.get("plastic_clip").primitive("clip"), lib.get("toothbrush").primitive("rod")),
        (lib.get("mug").primitive("hook"), lib.get("double_hook").primitive("hook2")),
        (lib.get("diaper_caddy").primitive("hook1"), lib.get("double_hook").primitive("hook2")),
        (lib.get("double_hook").primitive("hook1"), lib.get("back_seats").primitive("rod1")),
    ]
    for a, b in pairs:
        res = check_connectable(a, b)
        assert res.ok, f"{a.id} vs {b.id}: {res.detail}"
