"""Connection legality rules: type compatibility, alignment offsets,
geometric fit checks, critical-dimension bookkeeping, and the
multi-connection overlap penalty.

All the domain knowledge lives in ``data/rules.json`` (editable without code
changes); this module loads it, validates it, and exposes the checks as pure
functions.  Rejections are returned as values, not raised, so callers can
surface them as user feedback.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources

import numpy as np

from fabhal.frames import ypr_to_matrix
from fabhal.primitives import ConnectorPrimitive, PrimitiveType

__all__ = [
    "Verdict",
    "ConnectCheck",
    "IncompatibleTypes",
    "RuleSet",
    "default_rules",
    "connectivity_allowed",
    "alignment_offset",
    "check_connectable",
    "critical_dimension_ledger",
    "occupancy_width",
    "multi_connection_penalty",
    "multi_connection_terms",
]


class Verdict(Enum):
    OK = "ok"
    TYPE_INCOMPATIBLE = "type_incompatible"
    BOTH_CLOSED = "both_closed"
    GEOMETRICALLY_INCOMPATIBLE = "geometrically_incompatible"
    INSUFFICIENT_CRITICAL_DIMENSION = "insufficient_critical_dimension"
    QUICK_REJECTED = "quick_rejected"
    CYCLE_INFEASIBLE = "cycle_infeasible"


@dataclass(frozen=True)
class ConnectCheck:
    """Outcome of a connection pre-check; ``ok`` iff the connection may proceed."""

    verdict: Verdict
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.verdict is Verdict.OK

    def __bool__(self) -> bool:  # pragma: no cover - convenience only
        return self.ok


_OK = ConnectCheck(Verdict.OK)


class IncompatibleTypes(ValueError):
    """Requested an alignment offset for a pair that cannot connect."""


def _pair_key(a: PrimitiveType, b: PrimitiveType) -> frozenset:
    return frozenset((a, b)) if a is not b else frozenset((a,))


def _safe_eval_expr(expr: str, names: dict[str, float]) -> float:
    """Evaluate a tiny arithmetic expression over shape-parameter names."""
    allowed = dict(names)
    allowed["min"] = min
    allowed["max"] = max
    code = compile(expr, "<rules>", "eval")
    for name in code.co_names:
        if name not in allowed:
            raise ValueError(f"unknown name {name!r} in rules expression {expr!r}")
    return float(eval(code, {"__builtins__": {}}, allowed))


class RuleSet:
    """Loaded connection rules: connectivity matrix, offsets, occupancy."""

    def __init__(self, data: dict):
        if data.get("format") != 1:
            raise ValueError(f"unsupported rules format: {data.get('format')!r}")
        self._allowed: set[frozenset] = set()
        for a, b in data["connectivity"]:
            self._allowed.add(_pair_key(PrimitiveType(a), PrimitiveType(b)))
        self._offsets: dict[tuple[PrimitiveType, PrimitiveType], np.ndarray] = {}
        for key, entry in data["alignment_offsets"].items():
            first, second = key.split("|")
            ta, tb = PrimitiveType(first), PrimitiveType(second)
            if _pair_key(ta, tb) not in self._allowed:
                raise ValueError(f"offset given for disallowed pair {key!r}")
            self._offsets[(ta, tb)] = ypr_to_matrix(*entry["default"])
        for pair in self._allowed:
            types = tuple(pair) if len(pair) == 2 else (next(iter(pair)),) * 2
            if types not in self._offsets and (types[1], types[0]) not in self._offsets:
                raise ValueError(
                    f"no alignment offset for allowed pair {types[0].value}-{types[1].value}"
                )
        self._occupancy: dict[PrimitiveType, dict[PrimitiveType, str]] = {}
        for host, entries in data["occupancy"].items():
            if host == "comment":
                continue
            self._occupancy[PrimitiveType(host)] = {
                PrimitiveType(k): v for k, v in entries.items()
            }

    # -- connectivity --------------------------------------------------------

    def connectivity_allowed(self, a: PrimitiveType, b: PrimitiveType) -> bool:
        return _pair_key(a, b) in self._allowed

    def compatible_types(self, a: PrimitiveType) -> set[PrimitiveType]:
        return {t for t in PrimitiveType if self.connectivity_allowed(a, t)}

    # -- alignment offsets ---------------------------------------------------

    def alignment_offset(
        self, a: PrimitiveType, b: PrimitiveType, alignment: str = "default"
    ) -> np.ndarray:
        """Rotation offset R such that frame_b = frame_a @ R when mated."""
        if not self.connectivity_allowed(a, b):
            raise IncompatibleTypes(f"{a.value} cannot connect to {b.value}")
        if (a, b) in self._offsets:
            R = self._offsets[(a, b)]
        else:
            R = self._offsets[(b, a)].T
        if alignment == "default":
            return R
        if alignment == "flip":
            # 180 degrees about the shared contact axis (the mated frame's Z)
            flip = np.diag([-1.0, -1.0, 1.0])
            return R @ flip
        raise ValueError(f"unknown alignment {alignment!r}")

    # -- geometric compatibility ---------------------------------------------

    def check_connectable(
        self, a: ConnectorPrimitive, b: ConnectorPrimitive
    ) -> ConnectCheck:
        if not self.connectivity_allowed(a.ptype, b.ptype):
            return ConnectCheck(
                Verdict.TYPE_INCOMPATIBLE,
                f"{a.ptype.value} cannot connect to {b.ptype.value}",
            )
        if a.closed and b.closed:
            return ConnectCheck(
                Verdict.BOTH_CLOSED,
                f"{a.id!r} and {b.id!r} are both closed; no motion path can join them",
            )
        geom = _geometric_fit(a, b)
        if geom is not None:
            return ConnectCheck(Verdict.GEOMETRICALLY_INCOMPATIBLE, geom)
        return _OK

    # -- critical dimensions ---------------------------------------------------

    def occupancy_width(
        self, host: ConnectorPrimitive, other: ConnectorPrimitive
    ) -> float:
        """How much of ``host``'s critical dimension ``other`` consumes.

        Expressions see the occupying primitive's shape params plus the
        host's own prefixed with ``host_`` (the surface-on-surface rule uses
        the smaller footprint of the two).
        """
        rules = self._occupancy.get(host.ptype, {})
        expr = rules.get(other.ptype)
        if expr is None:
            return 0.0
        names = dict(other.shape)
        names.update({f"host_{k}": v for k, v in host.shape.items()})
        return _safe_eval_expr(expr, names)

    def critical_dimension_ledger(
        self, prim: ConnectorPrimitive, others: list[ConnectorPrimitive]
    ) -> float:
        """Available critical dimension after the given occupants attach."""
        if prim.critical_dimension is None:
            return math.inf
        _, initial = prim.critical_dimension
        return initial - sum(self.occupancy_width(prim, o) for o in others)


def _geometric_fit(a: ConnectorPrimitive, b: ConnectorPrimitive) -> str | None:
    """Physical fit rules per type pair; returns a violation message or None."""

    def check(host, other) -> str | None:
        h, o = host.ptype, other.ptype
        if h is PrimitiveType.HOOK and o in (PrimitiveType.ROD, PrimitiveType.TUBE):
            r_other = (
                other.shape["radius"]
                if o is PrimitiveType.ROD
                else other.shape["inner_radius"] + other.shape["thickness"]
            )
            # the hoop must wrap the bar with at least half its own wire to spare
            needed = r_other + host.shape["thickness"] / 2.0
            if host.shape["arc_radius"] < needed:
                return (
                    f"hoop radius {host.shape['arc_radius']} of {host.id!r} must exceed "
                    f"the {o.value} radius {r_other} of {other.id!r} plus half the wire "
                    f"thickness ({needed})"
                )
        if h is PrimitiveType.HOLE and o in (PrimitiveType.ROD, PrimitiveType.TUBE):
            r_other = (
                other.shape["radius"]
                if o is PrimitiveType.ROD
                else other.shape["inner_radius"] + other.shape["thickness"]
            )
            needed = r_other + host.shape["thickness"] / 2.0
            if host.shape["arc_radius"] < needed:
                return (
                    f"ring radius {host.shape['arc_radius']} of {host.id!r} is too small "
                    f"for the {o.value} radius {r_other} of {other.id!r}"
                )
        if h in (PrimitiveType.HOOK, PrimitiveType.HOLE) and o in (
            PrimitiveType.HOOK,
            PrimitiveType.HOLE,
        ):
            if host.shape["arc_radius"] < other.shape["thickness"]:
                return (
                    f"hoop radius {host.shape['arc_radius']} of {host.id!r} cannot admit "
                    f"the wire thickness {other.shape['thickness']} of {other.id!r}"
                )
        if h is PrimitiveType.TUBE and o is PrimitiveType.ROD:
            if host.shape["inner_radius"] < other.shape["radius"]:
                return (
                    f"tube inner radius {host.shape['inner_radius']} of {host.id!r} is "
                    f"smaller than the rod radius {other.shape['radius']} of {other.id!r}"
                )
        if h is PrimitiveType.CLIP and o is PrimitiveType.ROD:
            if host.shape["open_gap"] < 2.0 * other.shape["radius"]:
                return (
                    f"clip opening {host.shape['open_gap']} of {host.id!r} is narrower "
                    f"than the rod diameter {2 * other.shape['radius']} of {other.id!r}"
                )
        if h is PrimitiveType.CLIP and o is PrimitiveType.TUBE:
            outer = 2.0 * (other.shape["inner_radius"] + other.shape["thickness"])
            if host.shape["open_gap"] < outer:
                return (
                    f"clip opening {host.shape['open_gap']} of {host.id!r} is narrower "
                    f"than the tube diameter {outer} of {other.id!r}"
                )
        if h is PrimitiveType.CLIP and o is PrimitiveType.EDGE:
            if host.shape["open_gap"] < other.shape["height"]:
                return (
                    f"clip opening {host.shape['open_gap']} of {host.id!r} is narrower "
                    f"than the edge height {other.shape['height']} of {other.id!r}"
                )
        if h is PrimitiveType.SURFACE and o is PrimitiveType.HEMISPHERE:
            if min(host.shape["width"], host.shape["length"]) < 2.0 * other.shape["radius"]:
                return (
                    f"surface {host.id!r} is smaller than the hemisphere diameter "
                    f"{2 * other.shape['radius']} of {other.id!r}"
                )
        return None

    if (a.ptype is PrimitiveType.TUBE) and (b.ptype is PrimitiveType.TUBE):
        # nesting works in either direction
        inner_a, outer_b = a.shape["inner_radius"], b.shape["inner_radius"] + b.shape["thickness"]
        inner_b, outer_a = b.shape["inner_radius"], a.shape["inner_radius"] + a.shape["thickness"]
        if inner_a < outer_b and inner_b < outer_a:
            return (
                f"neither tube fits inside the other ({a.id!r} inner {inner_a} vs "
                f"{b.id!r} outer {outer_b}, and vice versa)"
            )
        return None
    return check(a, b) or check(b, a)


# ---------------------------------------------------------------------------
# Multi-connection overlap penalty
# ---------------------------------------------------------------------------

# positional-separation scale per host type: arc positions are radians on a
# circle of the hoop radius; t values scale by the primitive length
def _separation(prim: ConnectorPrimitive, da: float, db: float) -> tuple[float, float]:
    """(|pos_a - pos_b| in mm, d|sep|/d(pos_a)) for the host's sliding DoF."""
    if prim.ptype in (PrimitiveType.ROD, PrimitiveType.TUBE, PrimitiveType.EDGE):
        scale = prim.shape["length"]
    elif prim.ptype in (PrimitiveType.HOOK, PrimitiveType.HOLE):
        scale = prim.shape["arc_radius"]  # positions in radians
    else:
        return 0.0, 0.0
    diff = (da - db) * scale
    return abs(diff), scale * (1.0 if diff >= 0 else -1.0)


def multi_connection_terms(
    prim: ConnectorPrimitive,
    occupants: list[tuple[float, float]],
) -> list[tuple[float, float]]:
    """Per-pair (f, df/d pos_first) margins for connections sharing ``prim``.

    ``occupants`` is a list of (sliding position in internal units, occupying
    width in mm), one entry per connection on the primitive.
    """
    terms = []
    for i in range(len(occupants)):
        for j in range(i + 1, len(occupants)):
            (pa, wa), (pb, wb) = occupants[i], occupants[j]
            sep, dsep = _separation(prim, pa, pb)
            f = sep - (wa + wb) / 2.0
            terms.append((f, dsep))
    return terms


def multi_connection_penalty(
    prim: ConnectorPrimitive, occupants: list[tuple[float, float]]
) -> float:
    """Sum of squared violations of the pairwise no-overlap margins.

    Zero iff every pair of connections on the primitive is separated by at
    least the mean of their occupying widths; C1-continuous in the positions.
    """
    total = 0.0
    for f, _ in multi_connection_terms(prim, occupants):
        if f < 0.0:
            total += f * f
    return total


# ---------------------------------------------------------------------------
# Default rule set + module-level conveniences
# ---------------------------------------------------------------------------


@lru_cache(maxsize=1)
def default_rules() -> RuleSet:
    import jsonschema

    files = resources.files("fabhal.data")
    data = json.loads(files.joinpath("rules.json").read_text("utf-8"))
    schema = json.loads(files.joinpath("rules.schema.json").read_text("utf-8"))
    jsonschema.validate(data, schema)
    return RuleSet(data)


def connectivity_allowed(a: PrimitiveType, b: PrimitiveType) -> bool:
    return default_rules().connectivity_allowed(a, b)


def alignment_offset(a, b, alignment: str = "default") -> np.ndarray:
    return default_rules().alignment_offset(a, b, alignment)


def check_connectable(a: ConnectorPrimitive, b: ConnectorPrimitive) -> ConnectCheck:
    return default_rules().check_connectable(a, b)


def critical_dimension_ledger(prim, others) -> float:
    return default_rules().critical_dimension_ledger(prim, others)


def occupancy_width(host, other) -> float:
    return default_rules().occupancy_width(host, other)
