"""Parts and the annotated object library.

A ``Part`` is a rigid everyday object annotated with connector primitives,
a mass, and a center of mass.  Parts are loaded from a versioned JSON
library file validated against ``data/library.schema.json``; network
shape values may be arithmetic expressions over declared part parameters
(used for configurable parts such as extendable turnbuckles).

Distance bounds between pairs of a part's connector points, needed by the
geometric quick-reject test, are sampled on a DoF grid with a conservative
1% slack and cached per part.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from fabhal.frames import Frame
from fabhal.primitives import (
    ConnectorPrimitive,
    InvariantError,
    PrimitiveType,
    make_primitive,
)

__all__ = [
    "Part",
    "PartLibrary",
    "SchemaError",
    "DuplicateId",
    "load_library",
    "bundled_library_path",
    "load_bundled_library",
    "precompute_distance_bounds",
]


class SchemaError(ValueError):
    """Library file failed structural validation."""


class DuplicateId(ValueError):
    """Two parts (or primitives within a part) share an id."""


@dataclass(frozen=True)
class Part:
    """An annotated rigid object."""

    id: str
    name: str
    mass: float  # grams
    center_of_mass: tuple[float, float, float]  # mm, part frame
    primitives: tuple[ConnectorPrimitive, ...]
    mesh_ref: str | None = None
    generic: bool = False  # shape params may be overridden at declaration
    tags: tuple[str, ...] = ()
    _bounds_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.mass < 0.0:
            raise InvariantError(f"part {self.id!r}: mass must be >= 0")
        seen = set()
        for p in self.primitives:
            if p.id in seen:
                raise DuplicateId(f"part {self.id!r}: duplicate primitive id {p.id!r}")
            seen.add(p.id)

    def primitive(self, prim_id: str) -> ConnectorPrimitive:
        for p in self.primitives:
            if p.id == prim_id:
                return p
        raise KeyError(f"part {self.id!r} has no primitive {prim_id!r}")

    def distance_bounds(
        self, prim_a: str, prim_b: str, samples_per_dof: int = 16
    ) -> tuple[float, float]:
        """Cached conservative [min, max] connector-origin distance interval."""
        key = (frozenset((prim_a, prim_b)), samples_per_dof)
        cached = self._bounds_cache.get(key)
        if cached is None:
            cached = precompute_distance_bounds(self, prim_a, prim_b, samples_per_dof)
            self._bounds_cache[key] = cached
        return cached


def _contact_origin_grid(prim: ConnectorPrimitive, samples_per_dof: int) -> np.ndarray:
    """(N, 3) contact-frame origins in part coordinates over a dense DoF grid."""
    shape = prim.shape
    t = prim.ptype
    if t in (PrimitiveType.ROD, PrimitiveType.TUBE):
        ts = np.linspace(0.0, 1.0, samples_per_dof)
        local = np.stack(
            [np.zeros_like(ts), np.zeros_like(ts), (ts - 0.5) * shape["length"]], axis=1
        )
    elif t in (PrimitiveType.HOOK, PrimitiveType.HOLE):
        if t is PrimitiveType.HOOK:
            half = math.radians(shape["arc_angle"]) / 2.0
            angles = np.linspace(-half, half, samples_per_dof)
        else:
            angles = np.linspace(-math.pi, math.pi, samples_per_dof, endpoint=False)
        r = shape["arc_radius"]
        local = np.stack(
            [r * np.sin(angles), np.zeros_like(angles), -r * np.cos(angles)], axis=1
        )
    elif t is PrimitiveType.SURFACE:
        us = np.linspace(0.0, 1.0, samples_per_dof)
        vs = np.linspace(0.0, 1.0, samples_per_dof)
        uu, vv = np.meshgrid(us, vs, indexing="ij")
        local = np.stack(
            [
                (uu.ravel() - 0.5) * shape["width"],
                (vv.ravel() - 0.5) * shape["length"],
                np.zeros(uu.size),
            ],
            axis=1,
        )
    elif t is PrimitiveType.EDGE:
        ts = np.linspace(0.0, 1.0, samples_per_dof)
        local = np.stack(
            [np.zeros_like(ts), (ts - 0.5) * shape["length"], np.zeros_like(ts)], axis=1
        )
    elif t is PrimitiveType.HEMISPHERE:
        local = np.array([[0.0, 0.0, shape["radius"]]])
    else:  # clip
        local = np.zeros((1, 3))
    R, p = prim.base_frame.to_rp()
    return local @ R.T + p


def precompute_distance_bounds(
    part: Part, prim_a: str, prim_b: str, samples_per_dof: int = 16
) -> tuple[float, float]:
    """Conservative interval of distances between two connector origins.

    Samples both primitives' positional DoFs on a dense grid and widens the
    observed [min, max] by 1% each way so grid sampling can never over-tighten
    a bound that is later used to reject designs.
    """
    if samples_per_dof < 2:
        raise ValueError("samples_per_dof must be >= 2")
    pa = _contact_origin_grid(part.primitive(prim_a), samples_per_dof)
    pb = _contact_origin_grid(part.primitive(prim_b), samples_per_dof)
    d2 = ((pa[:, None, :] - pb[None, :, :]) ** 2).sum(axis=2)
    dmin = math.sqrt(float(d2.min()))
    dmax = math.sqrt(float(d2.max()))
    return dmin * 0.99, dmax * 1.01


class PartLibrary:
    """Immutable id -> Part map with a format version."""

    def __init__(self, parts: list[Part], format_version: int = 1):
        self.format = format_version
        self._parts: dict[str, Part] = {}
        for p in parts:
            if p.id in self._parts:
                raise DuplicateId(f"duplicate part id {p.id!r}")
            self._parts[p.id] = p

    def __contains__(self, part_id: str) -> bool:
        return part_id in self._parts

    def __len__(self) -> int:
        return len(self._parts)

    def get(self, part_id: str) -> Part:
        try:
            return self._parts[part_id]
        except KeyError:
            raise KeyError(f"no part {part_id!r} in library") from None

    def ids(self) -> list[str]:
        return sorted(self._parts)

    def parts(self) -> list[Part]:
        return [self._parts[k] for k in self.ids()]

    def instantiate(self, part_id: str, overrides: dict[str, float] | None = None) -> Part:
        """Resolve a library part, applying parameter overrides if declared."""
        base = self.get(part_id)
        if not overrides:
            return base
        spec = self._raw.get(part_id)
        if spec is None:
            raise SchemaError(f"part {part_id!r} does not accept overrides")
        return _build_part(spec, overrides)

    # populated by load_library so overrides can rebuild from the raw spec
    _raw: dict[str, dict] = {}


@lru_cache(maxsize=1)
def _schema() -> dict:
    text = resources.files("fabhal.data").joinpath("library.schema.json").read_text("utf-8")
    return json.loads(text)


_EXPR_ALLOWED = set("0123456789.+-*/() _abcdefghijklmnopqrstuvwxyz")


def _eval_numeric(value, params: dict[str, float], where: str) -> float:
    """A numeric field: a literal or a tiny arithmetic expression over params."""
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise SchemaError(f"{where}: expected number or expression, got {value!r}")
    if not set(value.lower()) <= _EXPR_ALLOWED:
        raise SchemaError(f"{where}: illegal character in expression {value!r}")
    code = compile(value, where, "eval")
    for name in code.co_names:
        if name not in params:
            raise SchemaError(f"{where}: unknown parameter {name!r} in {value!r}")
    try:
        return float(eval(code, {"__builtins__": {}}, dict(params)))
    except Exception as exc:
        raise SchemaError(f"{where}: cannot evaluate {value!r}: {exc}") from exc


def _build_part(spec: dict, overrides: dict[str, float] | None = None) -> Part:
    part_id = spec["id"]
    declared = spec.get("parameters", {})
    params = {k: float(v.get("default", 0.0)) for k, v in declared.items()}
    for k, v in (overrides or {}).items():
        if k not in declared:
            raise SchemaError(f"part {part_id!r}: unknown parameter {k!r}")
        lo = declared[k].get("min", -math.inf)
        hi = declared[k].get("max", math.inf)
        if not lo <= float(v) <= hi:
            raise SchemaError(
                f"part {part_id!r}: parameter {k!r}={v} outside [{lo}, {hi}]"
            )
        params[k] = float(v)

    prims = []
    for pspec in spec["primitives"]:
        where = f"part {part_id!r} primitive {pspec.get('id')!r}"
        shape = {
            k: _eval_numeric(v, params, f"{where}.{k}")
            for k, v in pspec["shape"].items()
        }
        bf = pspec.get("base_frame", {})
        pos = tuple(
            _eval_numeric(v, params, f"{where}.base_frame") for v in bf.get("position", (0, 0, 0))
        )
        ypr = tuple(
            _eval_numeric(v, params, f"{where}.base_frame") for v in bf.get("orientation", (0, 0, 0))
        )
        critical = pspec.get("critical_dimension")
        try:
            prims.append(
                make_primitive(
                    id=pspec["id"],
                    ptype=pspec["type"],
                    shape=shape,
                    base_frame=Frame(pos, ypr),
                    closed=pspec.get("closed"),
                    slide_tag=pspec.get("slide_tag", "bounded_and_open"),
                    dof_tags=pspec.get("dof_tags"),
                    critical_dimension_value=critical,
                )
            )
        except InvariantError as exc:
            raise InvariantError(f"{where}: {exc}") from exc

    com = tuple(
        _eval_numeric(v, params, f"part {part_id!r}.center_of_mass")
        for v in spec.get("center_of_mass", (0, 0, 0))
    )
    part = Part(
        id=part_id,
        name=spec.get("name", part_id),
        mass=float(spec.get("mass", 0.0)),
        center_of_mass=com,
        primitives=tuple(prims),
        mesh_ref=spec.get("mesh_ref"),
        generic=bool(spec.get("generic", False)),
        tags=tuple(spec.get("tags", ())),
    )
    # stored distance bounds (precomputed offline) land in the cache
    for entry in spec.get("distance_bounds", []):
        lo, hi = float(entry["min"]), float(entry["max"])
        if not 0.0 <= lo <= hi:
            raise InvariantError(
                f"part {part_id!r}: distance bound [{lo}, {hi}] must satisfy 0 <= min <= max"
            )
        key = (frozenset((entry["a"], entry["b"])), 16)
        part._bounds_cache[key] = (lo, hi)
    return part


def load_library(path: str | Path) -> PartLibrary:
    """Load and validate a part library JSON file."""
    path = Path(path)
    try:
        data = json.loads(path.read_text("utf-8"))
    except OSError as exc:
        raise
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(data, _schema())
    except jsonschema.ValidationError as exc:
        loc = "/".join(str(p) for p in exc.absolute_path)
        raise SchemaError(f"{path}: {exc.message} (at {loc})") from exc
    parts = [_build_part(spec) for spec in data["parts"]]
    lib = PartLibrary(parts, format_version=data["format"])
    lib._raw = {spec["id"]: spec for spec in data["parts"]}
    return lib


def bundled_library_path() -> Path:
    return Path(str(resources.files("fabhal.data").joinpath("library.json")))


@lru_cache(maxsize=1)
def load_bundled_library() -> PartLibrary:
    return load_library(bundled_library_path())
