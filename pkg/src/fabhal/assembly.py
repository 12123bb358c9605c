"""The assembly graph and its kinematics.

An assembly is a graph of part instances joined by connections between
connector primitives.  Exactly one instance is the fixed *environment*; at
most one is the *target* carrying a goal pose.  Connections added while the
two instances are already joined close a cycle; every other connection is a
spanning-tree edge.

The reduced configuration is the vector ``x`` of all non-fixed connection
DoFs (internal units: normalized positions and radians).  Forward kinematics
propagates world frames from the environment through the spanning tree;
cycle and connection residuals measure frame mismatch as a 6-vector
(position in mm, rotation-log scaled to mm-commensurate units).

Connection residuals also expose analytic Jacobians with respect to both the
part poses (position + rotation-vector) and the connection DoFs; the
equilibrium solver consumes these directly.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from fabhal.frames import (
    Frame,
    hat,
    log_so3,
    so3_left_jacobian,
    so3_left_jacobian_inv,
)
from fabhal.parts import Part
from fabhal.primitives import ConnectorPrimitive, DofTag, PrimitiveType
from fabhal.rules import ConnectCheck, RuleSet, Verdict, default_rules

__all__ = [
    "Role",
    "PartInstance",
    "Connection",
    "Endpoint",
    "Assembly",
    "AssemblyError",
    "EnvironmentAlreadySet",
    "TargetAlreadySet",
    "DEFAULT_ORIENTATION_SCALE",
]

DEFAULT_ORIENTATION_SCALE = 100.0  # mm per radian in 6-vector residuals


class AssemblyError(ValueError):
    pass


class EnvironmentAlreadySet(AssemblyError):
    pass


class TargetAlreadySet(AssemblyError):
    pass


class Role(Enum):
    ENVIRONMENT = "environment"
    TARGET = "target"
    COMPONENT = "component"


@dataclass
class PartInstance:
    id: str
    part: Part
    role: Role = Role.COMPONENT
    fixed_frame: Frame | None = None  # environment only
    goal_frame: Frame | None = None  # target only
    overrides: dict[str, float] = field(default_factory=dict)

    def primitive(self, prim_id: str) -> ConnectorPrimitive:
        return self.part.primitive(prim_id)


@dataclass(frozen=True)
class Endpoint:
    instance: str
    primitive: str

    def key(self) -> str:
        return f"{self.instance}.{self.primitive}"


class Connection:
    """An edge between two connector primitives.

    ``dof_values`` holds internal-unit values for the union of both
    endpoints' DoFs (a-side first).  Each connection owns its own copy of
    its primitives' DoFs, so two hooks on one rod get independent positions.
    """

    def __init__(
        self,
        a: Endpoint,
        b: Endpoint,
        prim_a: ConnectorPrimitive,
        prim_b: ConnectorPrimitive,
        offset: np.ndarray,
        alignment: str = "default",
        is_fixed: bool = False,
    ):
        self.a = a
        self.b = b
        self.prim_a = prim_a
        self.prim_b = prim_b
        self.alignment = alignment
        self.is_fixed = is_fixed
        self.offset = offset  # rotation-only frame offset: F_a @ offset = F_b
        self.is_cycle_edge = False
        self.dof_values = np.concatenate(
            [
                prim_a.to_internal(prim_a.default_dof_values()),
                prim_b.to_internal(prim_b.default_dof_values()),
            ]
        )

    @property
    def na(self) -> int:
        return self.prim_a.ndofs

    def split(self, values: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
        v = self.dof_values if values is None else values
        return v[: self.na], v[self.na :]

    def contact_rps(self, values: np.ndarray | None = None):
        xa, xb = self.split(values)
        return self.prim_a.contact_rp(xa), self.prim_b.contact_rp(xb)


@dataclass(frozen=True)
class DofEntry:
    """One slot of the global DoF vector x."""

    conn_idx: int
    slot: int  # index into the connection's dof_values
    owner: Endpoint
    name: str
    tag: DofTag
    angular: bool
    lower: float  # internal units
    upper: float


class Assembly:
    """Mutable single-owner assembly; snapshots may be solved concurrently."""

    def __init__(self, rules: RuleSet | None = None, orientation_scale: float = DEFAULT_ORIENTATION_SCALE):
        self.rules = rules or default_rules()
        self.orientation_scale = orientation_scale
        self.instances: dict[str, PartInstance] = {}
        self.connections: list[Connection] = []
        self.environment_id: str | None = None
        self.target_id: str | None = None
        self._rebuild()

    # ------------------------------------------------------------------
    # construction operations
    # ------------------------------------------------------------------

    def declare(
        self,
        instance_id: str,
        part: Part,
        overrides: dict[str, float] | None = None,
    ) -> PartInstance:
        """Register a component instance (connected later via connect)."""
        if instance_id in self.instances:
            raise AssemblyError(f"instance id {instance_id!r} already used")
        inst = PartInstance(instance_id, part, Role.COMPONENT, overrides=dict(overrides or {}))
        self.instances[instance_id] = inst
        return inst

    def add(self, instance_id: str, part: Part, frame: Frame, overrides=None) -> PartInstance:
        """Set the fixed environment part."""
        if self.environment_id is not None:
            raise EnvironmentAlreadySet("assembly already has an environment")
        if instance_id in self.instances:
            raise AssemblyError(f"instance id {instance_id!r} already used")
        inst = PartInstance(
            instance_id, part, Role.ENVIRONMENT, fixed_frame=frame, overrides=dict(overrides or {})
        )
        self.instances[instance_id] = inst
        self.environment_id = instance_id
        self._rebuild()
        return inst

    def end_with(self, instance_id: str, part: Part | None, frame: Frame, overrides=None) -> PartInstance:
        """Set the target part and its goal pose.

        If ``instance_id`` is already declared, it is promoted to target.
        """
        if self.target_id is not None:
            raise TargetAlreadySet("assembly already has a target")
        inst = self.instances.get(instance_id)
        if inst is None:
            if part is None:
                raise AssemblyError(f"unknown instance {instance_id!r}")
            inst = PartInstance(instance_id, part, Role.TARGET, overrides=dict(overrides or {}))
            self.instances[instance_id] = inst
        inst.role = Role.TARGET
        inst.goal_frame = frame
        self.target_id = instance_id
        self._rebuild()
        return inst

    def resolve(self, ep: Endpoint) -> tuple[PartInstance, ConnectorPrimitive]:
        inst = self.instances.get(ep.instance)
        if inst is None:
            raise AssemblyError(f"unknown instance {ep.instance!r}")
        return inst, inst.primitive(ep.primitive)

    def connections_on(self, ep_instance: str, ep_primitive: str) -> list[Connection]:
        out = []
        for c in self.connections:
            if c.a.instance == ep_instance and c.a.primitive == ep_primitive:
                out.append(c)
            elif c.b.instance == ep_instance and c.b.primitive == ep_primitive:
                out.append(c)
        return out

    def _peer_prims(self, ep: Endpoint) -> list[ConnectorPrimitive]:
        peers = []
        for c in self.connections_on(ep.instance, ep.primitive):
            other = c.b if c.a == ep else c.a
            peers.append(self.resolve(other)[1])
        return peers

    def available_critical(self, ep: Endpoint) -> float:
        _, prim = self.resolve(ep)
        return self.rules.critical_dimension_ledger(prim, self._peer_prims(ep))

    def precheck(self, ep_a: Endpoint, ep_b: Endpoint) -> ConnectCheck:
        """All structural checks that do not need the solver."""
        _, prim_a = self.resolve(ep_a)
        _, prim_b = self.resolve(ep_b)
        res = self.rules.check_connectable(prim_a, prim_b)
        if not res.ok:
            return res
        for host, peer in ((ep_a, prim_b), (ep_b, prim_a)):
            _, host_prim = self.resolve(host)
            if host_prim.critical_dimension is None:
                continue
            need = self.rules.occupancy_width(host_prim, peer)
            avail = self.available_critical(host)
            if avail < need:
                return ConnectCheck(
                    Verdict.INSUFFICIENT_CRITICAL_DIMENSION,
                    f"{host.key()} has {avail:.1f} mm of "
                    f"{host_prim.critical_dimension[0]} left, needs {need:.1f} mm",
                )
        return ConnectCheck(Verdict.OK)

    def _in_graph(self, instance_id: str) -> bool:
        if instance_id == self.environment_id:
            return True
        return any(
            c.a.instance == instance_id or c.b.instance == instance_id
            for c in self.connections
        )

    def _component_of(self, instance_id: str) -> set[str]:
        comp = {instance_id}
        frontier = [instance_id]
        while frontier:
            cur = frontier.pop()
            for c in self.connections:
                for u, v in ((c.a.instance, c.b.instance), (c.b.instance, c.a.instance)):
                    if u == cur and v not in comp:
                        comp.add(v)
                        frontier.append(v)
        return comp

    def would_close_cycle(self, ep_a: Endpoint, ep_b: Endpoint) -> bool:
        if ep_a.instance == ep_b.instance:
            return True
        return (
            self._in_graph(ep_a.instance)
            and self._in_graph(ep_b.instance)
            and ep_b.instance in self._component_of(ep_a.instance)
        )

    def add_connection_unchecked(
        self, ep_a: Endpoint, ep_b: Endpoint, alignment: str = "default", is_fixed: bool = False
    ) -> Connection:
        """Append an edge without solver verification (used by connect())."""
        _, prim_a = self.resolve(ep_a)
        _, prim_b = self.resolve(ep_b)
        offset = self.rules.alignment_offset(prim_a.ptype, prim_b.ptype, alignment)
        conn = Connection(ep_a, ep_b, prim_a, prim_b, offset, alignment, is_fixed)
        self.connections.append(conn)
        self._rebuild()
        return conn

    def pop_connection(self) -> None:
        self.connections.pop()
        self._rebuild()

    # ------------------------------------------------------------------
    # derived structure: spanning tree, cycles, DoF index
    # ------------------------------------------------------------------

    def _rebuild(self) -> None:
        # BFS spanning tree from the environment, insertion order as tie-break.
        self.tree_parent: dict[str, tuple[str, int, bool]] = {}  # child -> (parent, conn idx, parent_is_a)
        self.tree_order: list[str] = []
        self.cycle_edges: list[int] = []
        in_tree: set[int] = set()
        if self.environment_id is not None:
            visited = {self.environment_id}
            queue = [self.environment_id]
            while queue:
                cur = queue.pop(0)
                self.tree_order.append(cur)
                for idx, c in enumerate(self.connections):
                    if idx in in_tree:
                        continue
                    if c.a.instance == cur and c.b.instance not in visited:
                        child, parent_is_a = c.b.instance, True
                    elif c.b.instance == cur and c.a.instance not in visited:
                        child, parent_is_a = c.a.instance, False
                    else:
                        continue
                    visited.add(child)
                    in_tree.add(idx)
                    self.tree_parent[child] = (cur, idx, parent_is_a)
                    queue.append(child)
        for idx, c in enumerate(self.connections):
            c.is_cycle_edge = idx not in in_tree
            if c.is_cycle_edge:
                self.cycle_edges.append(idx)

        # global DoF index over non-fixed connections
        entries: list[DofEntry] = []
        for idx, c in enumerate(self.connections):
            if c.is_fixed:
                continue
            offset = 0
            for ep, prim in ((c.a, c.prim_a), (c.b, c.prim_b)):
                for k, d in enumerate(prim.dofs):
                    scale = math.pi / 180.0 if d.angular else 1.0
                    entries.append(
                        DofEntry(
                            conn_idx=idx,
                            slot=offset + k,
                            owner=ep,
                            name=d.name,
                            tag=d.tag,
                            angular=d.angular,
                            lower=d.lower * scale,
                            upper=d.upper * scale,
                        )
                    )
                offset += prim.ndofs
        self.dof_entries = entries
        self.x_min = np.array([e.lower for e in entries], dtype=float)
        self.x_max = np.array([e.upper for e in entries], dtype=float)
        self.x_periodic = np.array(
            [e.tag is DofTag.UNBOUNDED for e in entries], dtype=bool
        )
        self._slots_by_conn: dict[int, list[tuple[int, DofEntry]]] = {}
        for xi, e in enumerate(entries):
            self._slots_by_conn.setdefault(e.conn_idx, []).append((xi, e))
        self._shared_prims_cache = None

    @property
    def n_cycles(self) -> int:
        return len(self.cycle_edges)

    @property
    def ndofs(self) -> int:
        return len(self.dof_entries)

    def is_valid(self) -> bool:
        """Environment and target exist and lie in one connected component."""
        if self.environment_id is None or self.target_id is None:
            return False
        return self.target_id in self.tree_parent or self.target_id == self.environment_id

    def get_x(self) -> np.ndarray:
        return np.array([self.connections[e.conn_idx].dof_values[e.slot] for e in self.dof_entries])

    def set_x(self, x: np.ndarray) -> None:
        x = self.wrap_x(x)
        for e, v in zip(self.dof_entries, x):
            self.connections[e.conn_idx].dof_values[e.slot] = float(v)

    def wrap_x(self, x: np.ndarray) -> np.ndarray:
        """Wrap periodic entries into range; clamp the rest to bounds."""
        x = np.array(x, dtype=float)
        span = self.x_max - self.x_min
        per = self.x_periodic
        x[per] = self.x_min[per] + np.mod(x[per] - self.x_min[per], span[per])
        x[~per] = np.clip(x[~per], self.x_min[~per], self.x_max[~per])
        return x

    def dof_layout(self) -> list[tuple[int, np.ndarray]]:
        """Per-connection view of x: (conn_idx, slots array of x indices)."""
        by_conn: dict[int, list[int]] = {}
        for xi, e in enumerate(self.dof_entries):
            by_conn.setdefault(e.conn_idx, []).append(xi)
        return [(ci, np.array(slots)) for ci, slots in sorted(by_conn.items())]

    def _conn_values(self, c_idx: int, x: np.ndarray | None) -> np.ndarray:
        c = self.connections[c_idx]
        if x is None or c.is_fixed:
            return c.dof_values
        vals = c.dof_values.copy()
        for xi, e in self._x_slots_for(c_idx):
            vals[e.slot] = x[xi]
        return vals

    def _x_slots_for(self, c_idx: int):
        return self._slots_by_conn.get(c_idx, ())

    # ------------------------------------------------------------------
    # kinematics
    # ------------------------------------------------------------------

    def forward_kinematics(self, x: np.ndarray | None = None) -> dict[str, tuple[np.ndarray, np.ndarray]]:
        """World (R, p) per instance reachable from the environment.

        Angular DoFs act through trig functions, so out-of-range periodic
        values produce the same configuration as their wrapped equivalents;
        no wrapping happens here (hot path).
        """
        if self.environment_id is None:
            return {}
        q: dict[str, tuple[np.ndarray, np.ndarray]] = {}
        env = self.instances[self.environment_id]
        q[self.environment_id] = env.fixed_frame.to_rp()
        for child in self.tree_order[1:] if self.tree_order else []:
            parent, c_idx, parent_is_a = self.tree_parent[child]
            c = self.connections[c_idx]
            vals = self._conn_values(c_idx, x)
            (Ra, pa), (Rb, pb) = c.contact_rps(vals)
            Rp_, pp_ = q[parent]
            if parent_is_a:
                # q_child = q_parent * T_a * OFF * T_b^-1
                R1 = Rp_ @ Ra
                p1 = pp_ + Rp_ @ pa
                R2 = R1 @ c.offset
                Rc = R2 @ Rb.T
                pc = p1 - Rc @ pb
            else:
                # q_child = q_parent * T_b * OFF^-1 * T_a^-1
                R1 = Rp_ @ Rb
                p1 = pp_ + Rp_ @ pb
                R2 = R1 @ c.offset.T
                Rc = R2 @ Ra.T
                pc = p1 - Rc @ pa
            q[child] = (Rc, pc)
        return q

    def fk_frames(self, x: np.ndarray | None = None) -> dict[str, Frame]:
        return {k: Frame.from_rp(R, p) for k, (R, p) in self.forward_kinematics(x).items()}

    def _edge_residual(self, q, c: Connection, vals: np.ndarray) -> np.ndarray:
        (Ra, pa), (Rb, pb) = c.contact_rps(vals)
        Rqa, pqa = q[c.a.instance]
        Rqb, pqb = q[c.b.instance]
        Fa_R = Rqa @ Ra @ c.offset
        Fa_p = pqa + Rqa @ pa
        Fb_R = Rqb @ Rb
        Fb_p = pqb + Rqb @ pb
        r = np.empty(6)
        r[:3] = Fa_p - Fb_p
        r[3:] = self.orientation_scale * log_so3(Fb_R.T @ Fa_R)
        return r

    def cycle_residual(self, x: np.ndarray | None, cycle_index: int) -> np.ndarray:
        """6-vector closure failure of the i-th cycle under tree kinematics."""
        c_idx = self.cycle_edges[cycle_index]
        q = self.forward_kinematics(x)
        c = self.connections[c_idx]
        return self._edge_residual(q, c, self._conn_values(c_idx, x))

    def cycle_residual_sum(self, x: np.ndarray | None = None, q=None) -> float:
        """C(x): sum of squared cycle residual norms."""
        if not self.cycle_edges:
            return 0.0
        if q is None:
            q = self.forward_kinematics(x)
        total = 0.0
        for c_idx in self.cycle_edges:
            c = self.connections[c_idx]
            r = self._edge_residual(q, c, self._conn_values(c_idx, x))
            total += float(r @ r)
        return total

    def connection_residual(
        self,
        q: dict[str, tuple[np.ndarray, np.ndarray]],
        x: np.ndarray | None,
        conn_index: int,
    ) -> np.ndarray:
        """g_j(q, x): frame mismatch of connection j at free part poses q."""
        c = self.connections[conn_index]
        return self._edge_residual(q, c, self._conn_values(conn_index, x))

    def connection_residual_jacobian(
        self,
        q: dict[str, tuple[np.ndarray, np.ndarray]],
        conn_index: int,
        x: np.ndarray | None = None,
        rotvecs: dict[str, np.ndarray] | None = None,
    ):
        """Residual and its analytic Jacobian blocks.

        Returns ``(r, Ja, Jb, Jx)``: Ja/Jb are 6x6 blocks with respect to
        instance a's and b's pose parameters (position then rotation-vector;
        the rotation-vector charts are supplied in ``rotvecs``), Jx is 6xN
        for the connection's own DoFs (empty when the connection is fixed).
        """
        c = self.connections[conn_index]
        vals = self._conn_values(conn_index, x)
        xa, xb = c.split(vals)
        Ra, pa, dpa, ua = c.prim_a.contact_rp(xa, derivatives=True)
        Rb, pb, dpb, ub = c.prim_b.contact_rp(xb, derivatives=True)
        Rqa, pqa = q[c.a.instance]
        Rqb, pqb = q[c.b.instance]
        Fa_R = Rqa @ Ra @ c.offset
        Fa_p = pqa + Rqa @ pa
        Fb_R = Rqb @ Rb
        Fb_p = pqb + Rqb @ pb
        M = Fb_R.T @ Fa_R
        rho = log_so3(M)
        s = self.orientation_scale
        r = np.empty(6)
        r[:3] = Fa_p - Fb_p
        r[3:] = s * rho

        Jl_inv = so3_left_jacobian_inv(rho)
        Jr_inv = Jl_inv.T  # right Jacobian inverse = left^T at the same rho

        # pose blocks: columns [dp(3), dtheta(3)] with R_i = exp(hat(theta_i))
        def pose_block(inst_id, contact_world_arm, sign):
            J = np.zeros((6, 6))
            J[:3, :3] = sign * np.eye(3)
            theta = (rotvecs or {}).get(inst_id)
            Jl_theta = so3_left_jacobian(theta) if theta is not None else np.eye(3)
            J[:3, 3:] = sign * (-hat(contact_world_arm) @ Jl_theta)
            J[3:, 3:] = sign * s * (Jl_inv @ Fb_R.T @ Jl_theta)
            return J

        Ja = pose_block(c.a.instance, Rqa @ pa, +1.0)
        Jb = pose_block(c.b.instance, Rqb @ pb, -1.0)

        if c.is_fixed:
            return r, Ja, Jb, np.zeros((6, 0))

        n = len(vals)
        Jx = np.zeros((6, n))
        off = c.offset
        for k in range(c.na):
            Jx[:3, k] = Rqa @ dpa[k]
            # right perturbation through the offset: M <- M exp(hat(off^T u) d)
            Jx[3:, k] = s * (Jr_inv @ (off.T @ ua[k]))
        for k in range(len(xb)):
            Jx[:3, c.na + k] = -(Rqb @ dpb[k])
            Jx[3:, c.na + k] = -s * (Jl_inv @ ub[k])
        return r, Ja, Jb, Jx

    # ------------------------------------------------------------------
    # multi-connection penalty over the whole assembly
    # ------------------------------------------------------------------

    def _shared_primitives(self) -> list[tuple[Endpoint, ConnectorPrimitive, list[tuple[int, int, ConnectorPrimitive]]]]:
        """Primitives with >= 2 connections: (endpoint, prim, [(conn idx, slot of sliding dof, peer prim)])."""
        if self._shared_prims_cache is not None:
            return self._shared_prims_cache
        groups: dict[tuple[str, str], list[tuple[int, int, ConnectorPrimitive]]] = {}
        for idx, c in enumerate(self.connections):
            for ep, prim, peer, base in (
                (c.a, c.prim_a, c.prim_b, 0),
                (c.b, c.prim_b, c.prim_a, c.na),
            ):
                if prim.ptype in (
                    PrimitiveType.ROD,
                    PrimitiveType.TUBE,
                    PrimitiveType.EDGE,
                    PrimitiveType.HOOK,
                    PrimitiveType.HOLE,
                ):
                    groups.setdefault((ep.instance, ep.primitive), []).append((idx, base, peer))
        out = []
        for (inst, prim_id), members in groups.items():
            if len(members) < 2:
                continue
            ep = Endpoint(inst, prim_id)
            # precompute occupancy widths; they are configuration-independent
            widths = [self.rules.occupancy_width(self.resolve(ep)[1], peer) for _, _, peer in members]
            out.append((ep, self.resolve(ep)[1], [(ci, sl, w) for (ci, sl, _), w in zip(members, widths)]))
        self._shared_prims_cache = out
        return out

    def multi_connection_penalty(self, x: np.ndarray | None = None) -> float:
        """C_m(x): summed overlap penalties over shared primitives."""
        from fabhal.rules import multi_connection_penalty as prim_penalty

        total = 0.0
        for _, prim, members in self._shared_primitives():
            occupants = []
            for c_idx, slot, width in members:
                vals = self._conn_values(c_idx, x)
                occupants.append((float(vals[slot]), width))
            total += prim_penalty(prim, occupants)
        return total

    # ------------------------------------------------------------------
    # serialization
    # ------------------------------------------------------------------

    def to_json(self) -> dict:
        insts = []
        for inst in self.instances.values():
            entry: dict = {"id": inst.id, "part": inst.part.id, "role": inst.role.value}
            if inst.overrides:
                entry["overrides"] = {k: inst.overrides[k] for k in sorted(inst.overrides)}
            if inst.fixed_frame is not None:
                entry["fixed_frame"] = inst.fixed_frame.to_json()
            if inst.goal_frame is not None:
                entry["goal_frame"] = inst.goal_frame.to_json()
            insts.append(entry)
        conns = []
        for c in self.connections:
            ext = np.concatenate(
                [
                    c.prim_a.to_external(c.dof_values[: c.na]),
                    c.prim_b.to_external(c.dof_values[c.na :]),
                ]
            )
            conns.append(
                {
                    "a": c.a.key(),
                    "b": c.b.key(),
                    "alignment": c.alignment,
                    "is_fixed": c.is_fixed,
                    "kind": "cycle" if c.is_cycle_edge else "tree",
                    "dof_values": [round(float(v), 12) for v in ext],
                }
            )
        return {"format": 1, "instances": insts, "connections": conns}

    def canonical_json(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    def state_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    @classmethod
    def from_json(cls, data: dict, library, rules: RuleSet | None = None) -> "Assembly":
        asm = cls(rules=rules)
        for entry in data["instances"]:
            part = library.instantiate(entry["part"], entry.get("overrides"))
            role = Role(entry["role"])
            if role is Role.ENVIRONMENT:
                asm.add(entry["id"], part, Frame.from_json(entry["fixed_frame"]), entry.get("overrides"))
            elif role is Role.TARGET:
                asm.declare(entry["id"], part, entry.get("overrides"))
                asm.end_with(entry["id"], part, Frame.from_json(entry["goal_frame"]))
            else:
                asm.declare(entry["id"], part, entry.get("overrides"))
        for centry in data["connections"]:
            ai, ap = centry["a"].rsplit(".", 1)
            bi, bp = centry["b"].rsplit(".", 1)
            conn = asm.add_connection_unchecked(
                Endpoint(ai, ap), Endpoint(bi, bp), centry["alignment"], centry["is_fixed"]
            )
            ext = np.array(centry["dof_values"], dtype=float)
            conn.dof_values = np.concatenate(
                [
                    conn.prim_a.to_internal(ext[: conn.na]),
                    conn.prim_b.to_internal(ext[conn.na :]),
                ]
            )
        asm._rebuild()
        return asm

    def clone(self) -> "Assembly":
        return copy.deepcopy(self)
