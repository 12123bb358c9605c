import itertools

import numpy as np
import pytest

from fabhal.frames import ypr_to_matrix
from fabhal.primitives import PrimitiveType, make_primitive
from fabhal.rules import (
    IncompatibleTypes,
    Verdict,
    alignment_offset,
    check_connectable,
    connectivity_allowed,
    critical_dimension_ledger,
    default_rules,
    multi_connection_penalty,
    multi_connection_terms,
    occupancy_width,
)

P = PrimitiveType

ALLOWED = {
    frozenset({P.HOOK}),
    frozenset({P.HOOK, P.HOLE}),
    frozenset({P.HOOK, P.ROD}),
    frozenset({P.HOOK, P.TUBE}),
    frozenset({P.HOLE, P.ROD}),
    frozenset({P.HOLE, P.TUBE}),
    frozenset({P.HEMISPHERE, P.SURFACE}),
    frozenset({P.EDGE, P.CLIP}),
    frozenset({P.ROD, P.TUBE}),
    frozenset({P.ROD, P.CLIP}),
    frozenset({P.TUBE}),
    frozenset({P.TUBE, P.CLIP}),
    frozenset({P.SURFACE}),
}


def test_connectivity_matches_published_table():
    for a, b in itertools.product(P, P):
        expected = (frozenset({a, b}) if a is not b else frozenset({a})) in ALLOWED
        assert connectivity_allowed(a, b) == expected, (a, b)


def test_connectivity_symmetry():
    for a, b in itertools.product(P, P):
        assert connectivity_allowed(a, b) == connectivity_allowed(b, a)


def test_specific_pairs():
    assert connectivity_allowed(P.HOOK, P.ROD)
    assert not connectivity_allowed(P.ROD, P.ROD)
    assert not connectivity_allowed(P.CLIP, P.CLIP)


def test_rod_hook_offset_is_published_value():
    R = alignment_offset(P.ROD, P.HOOK, "default")
    assert np.allclose(R, ypr_to_matrix(180.0, 0.0, 90.0), atol=1e-12)


def test_flip_composes_contact_axis_rotation():
    # compose-by-hand oracle: flip = default @ Rz(180)
    R = alignment_offset(P.ROD, P.HOOK, "default")
    F = alignment_offset(P.ROD, P.HOOK, "flip")
    assert np.allclose(F, R @ np.diag([-1.0, -1.0, 1.0]), atol=1e-12)


def test_reversed_pair_offset_is_inverse():
    for a, b in [(P.ROD, P.HOOK), (P.SURFACE, P.HEMISPHERE), (P.EDGE, P.CLIP)]:
        Rab = alignment_offset(a, b)
        Rba = alignment_offset(b, a)
        assert np.allclose(Rab @ Rba, np.eye(3), atol=1e-12)


def test_disallowed_pair_raises():
    with pytest.raises(IncompatibleTypes):
        alignment_offset(P.ROD, P.ROD, "default")


def hook(arc_radius=10.0, thickness=3.0, closed=False):
    return make_primitive(
        "hk",
        "hook",
        {"arc_angle": 300.0, "arc_radius": arc_radius, "thickness": thickness},
        closed=closed,
    )


def rod(radius=5.0, length=100.0):
    return make_primitive("rd", "rod", {"radius": radius, "length": length})


def test_check_connectable_ok():
    assert check_connectable(hook(arc_radius=10.0), rod(radius=5.0)).ok


def test_check_connectable_hoop_too_small():
    res = check_connectable(hook(arc_radius=4.0), rod(radius=5.0))
    assert res.verdict is Verdict.GEOMETRICALLY_INCOMPATIBLE


def test_check_connectable_knife_edge_slack():
    # hoop must exceed rod radius by half the wire thickness
    res = check_connectable(hook(arc_radius=6.0, thickness=3.0), rod(radius=5.0))
    assert res.verdict is Verdict.GEOMETRICALLY_INCOMPATIBLE
    assert check_connectable(hook(arc_radius=7.0, thickness=3.0), rod(radius=5.0)).ok


def test_check_connectable_both_closed():
    eye = make_primitive("eye", "hole", {"arc_radius": 12.0, "thickness": 2.0})
    handle = hook(arc_radius=15.0, thickness=4.0, closed=True)
    res = check_connectable(eye, handle)
    assert res.verdict is Verdict.BOTH_CLOSED


def test_check_connectable_type_mismatch():
    res = check_connectable(rod(), rod())
    assert res.verdict is Verdict.TYPE_INCOMPATIBLE


def test_check_connectable_symmetric():
    a, b = hook(arc_radius=4.0), rod(radius=5.0)
    assert check_connectable(a, b).verdict == check_connectable(b, a).verdict


def test_ledger_rod_minus_hook_width():
    r = rod(length=100.0)
    h = hook(thickness=10.0)
    assert critical_dimension_ledger(r, [h]) == pytest.approx(90.0)
    assert critical_dimension_ledger(r, []) == pytest.approx(100.0)


def test_ledger_hook_minus_rod_radius():
    h = hook(arc_radius=10.0)
    r = rod(radius=5.0)
    assert critical_dimension_ledger(h, [r]) == pytest.approx(5.0)


def test_occupancy_width_examples():
    assert occupancy_width(rod(), hook(thickness=10.0)) == pytest.approx(10.0)
    assert occupancy_width(hook(), rod(radius=5.0)) == pytest.approx(5.0)


def test_multi_connection_penalty_hand_values():
    r = rod(length=100.0)
    # widths 10 and 10, t = 0.5 vs 0.55: f = 5 - 10 = -5, penalty 25
    assert multi_connection_penalty(r, [(0.5, 10.0), (0.55, 10.0)]) == pytest.approx(
        25.0, abs=1e-12
    )
    assert multi_connection_penalty(r, [(0.2, 10.0), (0.8, 10.0)]) == 0.0
    assert multi_connection_penalty(r, [(0.5, 10.0)]) == 0.0


def test_multi_connection_penalty_symmetry():
    r = rod(length=100.0)
    occ = [(0.5, 10.0), (0.55, 12.0), (0.9, 4.0)]
    base = multi_connection_penalty(r, occ)
    assert multi_connection_penalty(r, occ[::-1]) == pytest.approx(base, abs=1e-15)
    swapped = [(0.55, 12.0), (0.5, 10.0), (0.9, 4.0)]
    assert multi_connection_penalty(r, swapped) == pytest.approx(base, abs=1e-15)


def test_multi_connection_gradient_matches_fd():
    r = rod(length=100.0)

    def pen(t1):
        return multi_connection_penalty(r, [(t1, 10.0), (0.55, 10.0)])

    for t1 in (0.48, 0.6, 0.3):
        eps = 1e-6
        fd = (pen(t1 + eps) - pen(t1 - eps)) / (2 * eps)
        terms = multi_connection_terms(r, [(t1, 10.0), (0.55, 10.0)])
        (f, df) = terms[0]
        analytic = 2.0 * f * df if f < 0 else 0.0
        assert analytic == pytest.approx(fd, rel=1e-5, abs=1e-7)


def test_hook_arc_separation_uses_arc_length():
    h = hook(arc_radius=10.0)
    # theta separation 0.5 rad on a 10 mm hoop = 5 mm, widths 4+4 -> f = 1
    assert multi_connection_penalty(h, [(0.0, 4.0), (0.5, 4.0)]) == 0.0
    # widths 6+6 -> f = -1 -> penalty 1
    assert multi_connection_penalty(h, [(0.0, 6.0), (0.5, 6.0)]) == pytest.approx(1.0)


def test_every_allowed_pair_has_offsets():
    rs = default_rules()
    for a, b in itertools.product(P, P):
        if connectivity_allowed(a, b):
            for alignment in ("default", "flip"):
                R = rs.alignment_offset(a, b, alignment)
                assert np.allclose(R @ R.T, np.eye(3), atol=1e-12)
