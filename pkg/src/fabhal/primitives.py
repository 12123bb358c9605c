"""Connector primitives: the eight attachment-shape categories.

Every part attaches to other parts through typed connector primitives.  A
primitive owns shape parameters (mm / degrees), a base frame placing it on
its part, a closed flag, degree-of-freedom descriptors, and (for types that
admit multiple simultaneous connections) a critical dimension.

The contact frame of a primitive is a pose in part coordinates, a smooth
function of the primitive's DoF values.  ``contact_rp`` evaluates it from
internal-unit DoFs (normalized positions, radians) and also returns the
analytic derivative data used by the equilibrium solver: per DoF ``k`` the
positional derivative ``dp_k`` and a body-frame axis ``u_k`` such that
``R(x_k + d) = R(x) @ exp(hat(u_k) * d)``.

Local geometry conventions (all in the primitive's own frame, before the
base frame is applied):

* rod / tube: axis along Z, centered; ``t`` in [0, 1] runs from -L/2 to
  +L/2, ``psi`` spins about the axis.
* hook / hole: the wire's centerline arc lies in the X-Z plane, centered at
  the origin, "bottom" at -Z.  ``theta`` is the arc position measured from
  the bottom, ``phi`` swings about the contact tangent.  The contact frame
  has X along the arc tangent and Z pointing radially toward the arc center.
* surface: rectangle in the X-Y plane, normal +Z; ``u``/``v`` in [0, 1] span
  width (X) and length (Y), ``spin`` rotates about the normal.
* hemisphere: flat face in the X-Y plane, dome toward +Z; pole contact at
  (0, 0, radius) with Z pointing out of the dome.  No DoFs.
* edge: graspable strip along Y through the origin, slab normal +Z, slab
  body extending toward -X; ``t`` slides along the strip.
* clip: mouth center at the origin, X pointing into the mouth, Z along the
  gripped-slab normal.  No DoFs (a clip grips rigidly).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from fabhal.frames import Frame

__all__ = [
    "PrimitiveType",
    "DofTag",
    "DofDescriptor",
    "ConnectorPrimitive",
    "DofOutOfBounds",
    "InvariantError",
    "SHAPE_PARAM_SCHEMA",
    "connector_frame",
    "make_primitive",
]


class PrimitiveType(Enum):
    HOOK = "hook"
    HOLE = "hole"
    HEMISPHERE = "hemisphere"
    EDGE = "edge"
    ROD = "rod"
    TUBE = "tube"
    CLIP = "clip"
    SURFACE = "surface"


# Shape-parameter names per type; all lengths mm, angles degrees.
SHAPE_PARAM_SCHEMA: dict[PrimitiveType, tuple[str, ...]] = {
    PrimitiveType.HOOK: ("arc_angle", "arc_radius", "thickness"),
    PrimitiveType.HOLE: ("arc_radius", "thickness"),
    PrimitiveType.HEMISPHERE: ("radius",),
    PrimitiveType.EDGE: ("width", "length", "height"),
    PrimitiveType.ROD: ("radius", "length"),
    PrimitiveType.TUBE: ("inner_radius", "thickness", "length"),
    PrimitiveType.CLIP: ("width", "height", "base_distance", "open_gap", "thickness"),
    PrimitiveType.SURFACE: ("width", "length"),
}

# Types that track a critical dimension (all but hemisphere and clip).
_NO_CRITICAL = {PrimitiveType.HEMISPHERE, PrimitiveType.CLIP}

# Name and initial value of the critical dimension per type.
_CRITICAL_SOURCE: dict[PrimitiveType, tuple[str, str]] = {
    PrimitiveType.HOOK: ("hoop_radius", "arc_radius"),
    PrimitiveType.HOLE: ("hoop_radius", "arc_radius"),
    PrimitiveType.EDGE: ("length", "length"),
    PrimitiveType.ROD: ("length", "length"),
    PrimitiveType.TUBE: ("length", "length"),
    PrimitiveType.SURFACE: ("extent", "min(width,length)"),
}


class DofTag(Enum):
    UNBOUNDED = "unbounded"
    BOUNDED_AND_CLAMPED = "bounded_and_clamped"
    BOUNDED_AND_OPEN = "bounded_and_open"


class InvariantError(ValueError):
    """A model value violates a structural invariant."""


class DofOutOfBounds(ValueError):
    """A non-periodic DoF value lies outside its bounds."""


@dataclass(frozen=True)
class DofDescriptor:
    """One connection degree of freedom.

    ``lower``/``upper`` are in external units: normalized [0, 1] for
    positional DoFs, degrees for angular ones.  UNBOUNDED DoFs are periodic
    with period ``upper - lower``.
    """

    name: str
    lower: float
    upper: float
    tag: DofTag
    angular: bool

    def __post_init__(self) -> None:
        if not self.lower < self.upper:
            raise InvariantError(
                f"dof {self.name!r}: lower ({self.lower}) must be < upper ({self.upper})"
            )

    @property
    def period(self) -> float:
        return self.upper - self.lower

    def wrap(self, value: float) -> float:
        """Wrap a periodic value into [lower, upper); pass bounded values through."""
        if self.tag is not DofTag.UNBOUNDED:
            return value
        span = self.period
        return self.lower + math.fmod(math.fmod(value - self.lower, span) + span, span)

    def check(self, value: float) -> float:
        """Wrap (periodic) or bounds-check (non-periodic) an external value."""
        if self.tag is DofTag.UNBOUNDED:
            return self.wrap(value)
        if value < self.lower - 1e-9 or value > self.upper + 1e-9:
            raise DofOutOfBounds(
                f"dof {self.name!r} value {value} outside [{self.lower}, {self.upper}]"
            )
        return min(max(value, self.lower), self.upper)


def _angular_dof(name: str, tag: DofTag, lower: float = -180.0, upper: float = 180.0):
    return DofDescriptor(name, lower, upper, tag, angular=True)


def _positional_dof(name: str, tag: DofTag):
    return DofDescriptor(name, 0.0, 1.0, tag, angular=False)


def _default_dofs(
    ptype: PrimitiveType, shape: dict[str, float], slide_tag: DofTag
) -> tuple[DofDescriptor, ...]:
    """DoF descriptors per type; ``slide_tag`` is the per-part rod/tube annotation."""
    if ptype is PrimitiveType.HOOK:
        half = shape["arc_angle"] / 2.0
        return (
            DofDescriptor("theta", -half, half, DofTag.BOUNDED_AND_OPEN, angular=True),
            _angular_dof("phi", DofTag.UNBOUNDED),
        )
    if ptype is PrimitiveType.HOLE:
        return (
            _angular_dof("theta", DofTag.UNBOUNDED),
            _angular_dof("phi", DofTag.UNBOUNDED),
        )
    if ptype in (PrimitiveType.ROD, PrimitiveType.TUBE):
        return (
            _positional_dof("t", slide_tag),
            _angular_dof("psi", DofTag.UNBOUNDED),
        )
    if ptype is PrimitiveType.SURFACE:
        return (
            _positional_dof("u", DofTag.BOUNDED_AND_CLAMPED),
            _positional_dof("v", DofTag.BOUNDED_AND_CLAMPED),
            _angular_dof("spin", DofTag.UNBOUNDED),
        )
    if ptype is PrimitiveType.EDGE:
        return (_positional_dof("t", DofTag.BOUNDED_AND_CLAMPED),)
    # clip and hemisphere grip / rest rigidly
    return ()


@dataclass(frozen=True)
class ConnectorPrimitive:
    """A typed, parametrized connection site on a part."""

    id: str
    ptype: PrimitiveType
    shape: dict[str, float]
    base_frame: Frame = field(default_factory=Frame)
    closed: bool = False
    dofs: tuple[DofDescriptor, ...] = ()
    critical_dimension: tuple[str, float] | None = None  # (name, initial value mm)

    def __post_init__(self) -> None:
        # cache the base pose as raw arrays for the solver hot path
        Rb, pb = self.base_frame.to_rp()
        object.__setattr__(self, "_base_R", Rb)
        object.__setattr__(self, "_base_p", pb)
        expected = SHAPE_PARAM_SCHEMA[self.ptype]
        missing = [k for k in expected if k not in self.shape]
        extra = [k for k in self.shape if k not in expected]
        if missing or extra:
            raise InvariantError(
                f"primitive {self.id!r} ({self.ptype.value}): shape params "
                f"missing={missing} unexpected={extra}"
            )
        for k, v in self.shape.items():
            if not v > 0.0:
                raise InvariantError(
                    f"primitive {self.id!r}: shape param {k!r} must be > 0, got {v}"
                )
        if self.ptype is PrimitiveType.HOOK and not 0.0 < self.shape["arc_angle"] <= 360.0:
            raise InvariantError(
                f"primitive {self.id!r}: arc_angle must be in (0, 360], "
                f"got {self.shape['arc_angle']}"
            )
        if (self.ptype in _NO_CRITICAL) != (self.critical_dimension is None):
            raise InvariantError(
                f"primitive {self.id!r}: critical dimension must be present exactly "
                f"for types other than hemisphere and clip"
            )
        if self.ptype is PrimitiveType.HOLE and not self.closed:
            raise InvariantError(
                f"primitive {self.id!r}: hole primitives are always closed"
            )

    @property
    def ndofs(self) -> int:
        return len(self.dofs)

    def default_dof_values(self) -> np.ndarray:
        """Midpoint for positional DoFs, zero for angular ones (external units)."""
        vals = []
        for d in self.dofs:
            if d.angular:
                vals.append(min(max(0.0, d.lower), d.upper))
            else:
                vals.append((d.lower + d.upper) / 2.0)
        return np.array(vals)

    # -- internal <-> external unit conversion ------------------------------

    def to_internal(self, external: np.ndarray) -> np.ndarray:
        out = np.array(external, dtype=float)
        for i, d in enumerate(self.dofs):
            if d.angular:
                out[i] = math.radians(out[i])
        return out

    def to_external(self, internal: np.ndarray) -> np.ndarray:
        out = np.array(internal, dtype=float)
        for i, d in enumerate(self.dofs):
            if d.angular:
                out[i] = math.degrees(out[i])
        return out

    def internal_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = [], []
        for d in self.dofs:
            scale = math.pi / 180.0 if d.angular else 1.0
            lo.append(d.lower * scale)
            hi.append(d.upper * scale)
        return np.array(lo), np.array(hi)

    # -- contact frame -------------------------------------------------------

    def contact_rp(self, xi: np.ndarray, derivatives: bool = False):
        """Contact frame in part coordinates from internal-unit DoF values.

        Returns ``(R, p)`` or, with ``derivatives``, ``(R, p, dps, us)`` where
        ``dps[k]`` is dp/dx_k and ``us[k]`` the body-frame rotation axis of
        DoF k (zero vector for purely translational DoFs).
        """
        Rl, pl, dps, us = _local_contact(self.ptype, self.shape, xi, derivatives)
        Rb, pb = self._base_R, self._base_p
        R = Rb @ Rl
        p = pb + Rb @ pl
        if not derivatives:
            return R, p
        dps = [Rb @ d for d in dps]
        return R, p, dps, us

    def contact_frame(self, dof_values_external) -> Frame:
        """Public contact-frame evaluation with external-unit DoF values."""
        vals = np.asarray(dof_values_external, dtype=float)
        if vals.shape != (len(self.dofs),):
            raise ValueError(
                f"primitive {self.id!r} expects {len(self.dofs)} dof values, "
                f"got {vals.shape}"
            )
        checked = np.array([d.check(v) for d, v in zip(self.dofs, vals)])
        R, p = self.contact_rp(self.to_internal(checked))
        return Frame.from_rp(R, p)


def connector_frame(prim: ConnectorPrimitive, dof_values) -> Frame:
    """Contact frame of ``prim`` at the given external-unit DoF values."""
    return prim.contact_frame(dof_values)


_Z3 = np.zeros(3)


def _rot_z(c: float, s: float) -> np.ndarray:
    R = np.empty((3, 3))
    R[0, 0] = c
    R[0, 1] = -s
    R[0, 2] = 0.0
    R[1, 0] = s
    R[1, 1] = c
    R[1, 2] = 0.0
    R[2, 0] = 0.0
    R[2, 1] = 0.0
    R[2, 2] = 1.0
    return R


def _local_contact(ptype, shape, xi, derivatives):
    """Contact pose and derivatives in the primitive's own frame."""
    if ptype in (PrimitiveType.ROD, PrimitiveType.TUBE):
        length = shape["length"]
        t, psi = xi[0], xi[1]
        p = np.array([0.0, 0.0, (t - 0.5) * length])
        R = _rot_z(math.cos(psi), math.sin(psi))
        if not derivatives:
            return R, p, None, None
        return R, p, [np.array([0.0, 0.0, length]), _Z3], [_Z3, np.array([0.0, 0.0, 1.0])]

    if ptype in (PrimitiveType.HOOK, PrimitiveType.HOLE):
        r = shape["arc_radius"]
        th, ph = xi[0], xi[1]
        st, ct = math.sin(th), math.cos(th)
        p = np.array([r * st, 0.0, -r * ct])
        # X along the tangent, Z radially inward: Ry(-theta) @ Rx(phi), expanded
        cph, sph = math.cos(ph), math.sin(ph)
        R = np.empty((3, 3))
        R[0, 0] = ct
        R[0, 1] = -st * sph
        R[0, 2] = -st * cph
        R[1, 0] = 0.0
        R[1, 1] = cph
        R[1, 2] = -sph
        R[2, 0] = st
        R[2, 1] = ct * sph
        R[2, 2] = ct * cph
        if not derivatives:
            return R, p, None, None
        dp_th = np.array([r * ct, 0.0, r * st])
        u_th = np.array([0.0, -cph, sph])  # -Rx(phi)^T @ y_hat
        u_ph = np.array([1.0, 0.0, 0.0])
        return R, p, [dp_th, _Z3], [u_th, u_ph]

    if ptype is PrimitiveType.SURFACE:
        w, length = shape["width"], shape["length"]
        u, v, spin = xi[0], xi[1], xi[2]
        p = np.array([(u - 0.5) * w, (v - 0.5) * length, 0.0])
        R = _rot_z(math.cos(spin), math.sin(spin))
        if not derivatives:
            return R, p, None, None
        return (
            R,
            p,
            [np.array([w, 0.0, 0.0]), np.array([0.0, length, 0.0]), _Z3],
            [_Z3, _Z3, np.array([0.0, 0.0, 1.0])],
        )

    if ptype is PrimitiveType.HEMISPHERE:
        p = np.array([0.0, 0.0, shape["radius"]])
        R = np.eye(3)
        return (R, p, [], []) if derivatives else (R, p, None, None)

    if ptype is PrimitiveType.EDGE:
        length = shape["length"]
        t = float(xi[0])
        p = np.array([0.0, (t - 0.5) * length, 0.0])
        R = np.eye(3)
        if not derivatives:
            return R, p, None, None
        return R, p, [np.array([0.0, length, 0.0])], [_Z3]

    if ptype is PrimitiveType.CLIP:
        p = np.zeros(3)
        R = np.eye(3)
        return (R, p, [], []) if derivatives else (R, p, None, None)

    raise ValueError(f"unknown primitive type {ptype}")


def make_primitive(
    id: str,
    ptype: PrimitiveType | str,
    shape: dict[str, float],
    base_frame: Frame | None = None,
    closed: bool | None = None,
    slide_tag: DofTag | str = DofTag.BOUNDED_AND_OPEN,
    dof_tags: dict[str, DofTag | str] | None = None,
    critical_dimension_value: float | None = None,
) -> ConnectorPrimitive:
    """Build a primitive with the standard per-type DoF table.

    ``slide_tag`` sets the rod/tube ``t`` annotation (open-ended dowel vs
    capped bar); ``dof_tags`` overrides individual DoF tags by name.
    ``critical_dimension_value`` overrides the schema-derived initial value.
    """
    if isinstance(ptype, str):
        ptype = PrimitiveType(ptype)
    if isinstance(slide_tag, str):
        slide_tag = DofTag(slide_tag)
    if closed is None:
        closed = ptype is PrimitiveType.HOLE
    missing = [k for k in SHAPE_PARAM_SCHEMA[ptype] if k not in shape]
    if missing:
        raise InvariantError(
            f"primitive {id!r} ({ptype.value}): shape params missing={missing}"
        )
    dofs = list(_default_dofs(ptype, shape, slide_tag))
    for name, tag in (dof_tags or {}).items():
        tag = DofTag(tag) if isinstance(tag, str) else tag
        idx = next((i for i, d in enumerate(dofs) if d.name == name), None)
        if idx is None:
            raise InvariantError(f"primitive {id!r}: no dof named {name!r} to re-tag")
        d = dofs[idx]
        dofs[idx] = DofDescriptor(d.name, d.lower, d.upper, tag, d.angular)
    critical = None
    if ptype not in _NO_CRITICAL:
        cname, _ = _CRITICAL_SOURCE[ptype]
        if critical_dimension_value is not None:
            cval = float(critical_dimension_value)
        elif ptype is PrimitiveType.SURFACE:
            cval = min(shape["width"], shape["length"])
        elif ptype in (PrimitiveType.HOOK, PrimitiveType.HOLE):
            cval = shape["arc_radius"]
        else:
            cval = shape["length"]
        critical = (cname, cval)
    elif critical_dimension_value is not None:
        raise InvariantError(
            f"primitive {id!r}: {ptype.value} does not carry a critical dimension"
        )
    return ConnectorPrimitive(
        id=id,
        ptype=ptype,
        shape=dict(shape),
        base_frame=base_frame or Frame(),
        closed=bool(closed),
        dofs=tuple(dofs),
        critical_dimension=critical,
    )
