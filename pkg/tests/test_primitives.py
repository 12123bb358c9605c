import numpy as np
import pytest

from fabhal.frames import Frame, exp_so3, log_so3
from fabhal.primitives import (
    ConnectorPrimitive,
    DofOutOfBounds,
    DofTag,
    InvariantError,
    PrimitiveType,
    connector_frame,
    make_primitive,
)


def rod(radius=5.0, length=100.0, **kw):
    return make_primitive("r", "rod", {"radius": radius, "length": length}, **kw)


def hook(arc_angle=300.0, arc_radius=10.0, thickness=3.0, **kw):
    return make_primitive(
        "h",
        "hook",
        {"arc_angle": arc_angle, "arc_radius": arc_radius, "thickness": thickness},
        **kw,
    )


def test_rod_midpoint_frame():
    f = connector_frame(rod(), [0.5, 0.0])
    assert np.allclose(f.position, (0.0, 0.0, 0.0), atol=1e-12)
    assert np.allclose(f.rotation, np.eye(3), atol=1e-12)


def test_rod_end_frame():
    f = connector_frame(rod(length=100.0), [1.0, 0.0])
    assert np.allclose(f.position, (0.0, 0.0, 50.0), atol=1e-12)


def test_hook_bottom_contact():
    # theta at the arc bottom, phi = 0: contact sits arc_radius below the center
    f = connector_frame(hook(arc_radius=10.0), [0.0, 0.0])
    # circle-parametrization oracle: p = r (sin a, 0, -cos a) at a = 0
    assert np.allclose(f.position, (0.0, 0.0, -10.0), atol=1e-12)
    # quarter way up the arc
    g = connector_frame(hook(arc_radius=10.0), [90.0, 0.0])
    assert np.allclose(g.position, (10.0, 0.0, 0.0), atol=1e-12)


def test_surface_corner():
    s = make_primitive("s", "surface", {"width": 200.0, "length": 200.0})
    f = connector_frame(s, [0.0, 0.0, 0.0])
    assert np.allclose(f.position, (-100.0, -100.0, 0.0), atol=1e-12)


def test_base_frame_is_applied():
    p = rod(base_frame=Frame((0.0, 0.0, 30.0), (0.0, 0.0, -90.0)))
    f = connector_frame(p, [1.0, 0.0])
    # rod axis rotated onto part Y by roll -90, then offset +30 in Z
    assert np.allclose(f.position, (0.0, 50.0, 30.0), atol=1e-9)


def test_unbounded_dof_wraps():
    p = rod()
    a = connector_frame(p, [0.25, 10.0])
    b = connector_frame(p, [0.25, 370.0])
    assert np.allclose(a.position, b.position, atol=1e-9)
    assert np.allclose(a.rotation, b.rotation, atol=1e-9)


def test_bounded_dof_raises():
    with pytest.raises(DofOutOfBounds):
        connector_frame(rod(), [1.5, 0.0])
    # hook theta is bounded by the arc span
    with pytest.raises(DofOutOfBounds):
        connector_frame(hook(arc_angle=300.0), [151.0, 0.0])


def test_periodicity_invariant():
    p = hook()
    for phi in (-137.0, 11.5, 94.0):
        a = connector_frame(p, [10.0, phi])
        b = connector_frame(p, [10.0, phi + 360.0])
        assert np.allclose(a.position, b.position, atol=1e-9)
        assert np.allclose(a.rotation, b.rotation, atol=1e-9)


def test_shape_schema_enforced():
    with pytest.raises(InvariantError):
        make_primitive("x", "rod", {"radius": 5.0})
    with pytest.raises(InvariantError):
        make_primitive("x", "rod", {"radius": -5.0, "length": 10.0})
    with pytest.raises(InvariantError):
        make_primitive(
            "x",
            "hook",
            {"arc_angle": 400.0, "arc_radius": 10.0, "thickness": 2.0},
        )


def test_critical_dimension_rule():
    r = rod()
    assert r.critical_dimension == ("length", 100.0)
    h = make_primitive("hemi", "hemisphere", {"radius": 9.0})
    assert h.critical_dimension is None
    with pytest.raises(InvariantError):
        make_primitive(
            "hemi", "hemisphere", {"radius": 9.0}, critical_dimension_value=5.0
        )


def test_dof_tag_overrides():
    capped = rod(slide_tag=DofTag.BOUNDED_AND_CLAMPED)
    assert capped.dofs[0].tag is DofTag.BOUNDED_AND_CLAMPED
    retag = rod(dof_tags={"t": "bounded_and_clamped"})
    assert retag.dofs[0].tag is DofTag.BOUNDED_AND_CLAMPED
    assert rod().dofs[0].tag is DofTag.BOUNDED_AND_OPEN


def test_hole_always_closed():
    h = make_primitive("eye", "hole", {"arc_radius": 8.0, "thickness": 2.0})
    assert h.closed
    with pytest.raises(InvariantError):
        ConnectorPrimitive(
            id="eye",
            ptype=PrimitiveType.HOLE,
            shape={"arc_radius": 8.0, "thickness": 2.0},
            closed=False,
            dofs=(),
            critical_dimension=("hoop_radius", 8.0),
        )


@pytest.mark.parametrize(
    "prim,x0",
    [
        (rod(), [0.3, 0.7]),
        (hook(), [0.4, -0.9]),
        (make_primitive("eye", "hole", {"arc_radius": 8.0, "thickness": 2.0}), [2.1, 0.4]),
        (make_primitive("s", "surface", {"width": 80.0, "length": 120.0}), [0.2, 0.8, 1.1]),
        (make_primitive("e", "edge", {"width": 40.0, "length": 200.0, "height": 2.0}), [0.4]),
    ],
)
def test_contact_derivatives_match_finite_differences(prim, x0):
    xi = np.array(x0, dtype=float)
    R, p, dps, us = prim.contact_rp(xi, derivatives=True)
    eps = 1e-6
    for k in range(len(xi)):
        dxi = xi.copy()
        dxi[k] += eps
        Rp, pp = prim.contact_rp(dxi)
        dxi[k] -= 2 * eps
        Rm, pm = prim.contact_rp(dxi)
        dp_fd = (pp - pm) / (2 * eps)
        assert np.allclose(dps[k], dp_fd, atol=1e-5), f"dp mismatch for dof {k}"
        # body-frame axis: R(x+e) ~ R(x) exp(hat(u) e)
        u_fd = log_so3(R.T @ Rp) / eps
        assert np.allclose(us[k], u_fd, atol=1e-5), f"axis mismatch for dof {k}"
