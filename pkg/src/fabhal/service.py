"""JSON-over-HTTP design sessions for the interactive designer.

Each session owns an assembly plus undo/redo stacks of serialized snapshots.
Mutations are serialized per session; solves run as asynchronous jobs on a
bounded worker pool over a snapshot (one concurrent solve per session).

Rejected connects return 422 with the solver's typed verdict so the UI can
tell the user exactly which check failed.
"""

from __future__ import annotations

import itertools
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor

from fastapi import FastAPI, HTTPException, Query
from pydantic import BaseModel, Field

from fabhal.assembly import Assembly, AssemblyError, Endpoint
from fabhal.connect import connect
from fabhal.frames import Frame
from fabhal.parts import PartLibrary, SchemaError, load_bundled_library
from fabhal.primitives import PrimitiveType
from fabhal.scene import scene_json
from fabhal.solver import SolverConfig, solve_assembly

__all__ = ["create_app"]

_UNDO_DEPTH = 64


class FramePayload(BaseModel):
    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    orientation: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def to_frame(self) -> Frame:
        return Frame(self.position, self.orientation)


class PartPlacement(BaseModel):
    part: str
    instance: str | None = None
    frame: FramePayload = Field(default_factory=FramePayload)
    overrides: dict[str, float] | None = None


class EndpointPayload(BaseModel):
    # an existing "instance.primitive", or a new part to pull in
    ref: str | None = None
    new_part: str | None = None
    instance: str | None = None
    primitive: str | None = None
    overrides: dict[str, float] | None = None


class ConnectPayload(BaseModel):
    a: EndpointPayload
    b: EndpointPayload
    alignment: str = "default"
    is_fixed: bool = False


class Session:
    def __init__(self, library: PartLibrary, config: SolverConfig, undo_depth: int = _UNDO_DEPTH):
        self.id = uuid.uuid4().hex[:12]
        self.library = library
        self.config = config
        self.undo_depth = undo_depth
        self.assembly = Assembly()
        self.lock = threading.RLock()
        self.undo_stack: list[dict] = []
        self.redo_stack: list[dict] = []
        self.events: list[dict] = []
        self.jobs: dict[str, dict] = {}
        self.active_job: str | None = None
        self._counter = itertools.count(1)

    # -- snapshots -----------------------------------------------------------

    def checkpoint(self) -> None:
        self.undo_stack.append(self.assembly.to_json())
        if len(self.undo_stack) > self.undo_depth:
            self.undo_stack.pop(0)
        self.redo_stack.clear()

    def restore(self, snapshot: dict) -> None:
        self.assembly = Assembly.from_json(snapshot, self.library)

    def fresh_instance_id(self, part_id: str) -> str:
        while True:
            candidate = f"{part_id}_{next(self._counter)}"
            if candidate not in self.assembly.instances:
                return candidate

    def state(self) -> dict:
        asm = self.assembly
        return {
            "id": self.id,
            "assembly": asm.to_json(),
            "hash": asm.state_hash(),
            "valid": asm.is_valid(),
            "cycles": asm.n_cycles,
            "environment": asm.environment_id,
            "target": asm.target_id,
            "can_undo": bool(self.undo_stack),
            "can_redo": bool(self.redo_stack),
            "solving": self.active_job is not None,
        }


def _part_summary(part) -> dict:
    return {
        "id": part.id,
        "name": part.name,
        "mass": part.mass,
        "generic": part.generic,
        "tags": list(part.tags),
        "primitives": [
            {
                "id": p.id,
                "type": p.ptype.value,
                "closed": p.closed,
                "shape": {k: float(v) for k, v in sorted(p.shape.items())},
            }
            for p in part.primitives
        ],
    }


def create_app(
    library: PartLibrary | None = None,
    config: SolverConfig | None = None,
    solve_workers: int = 2,
    undo_depth: int = _UNDO_DEPTH,
) -> FastAPI:
    library = library or load_bundled_library()
    config = config or SolverConfig()
    app = FastAPI(title="fixture-hack design service", version="1")
    # localhost tool: the designer SPA is served from another local port
    from fastapi.middleware.cors import CORSMiddleware

    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    sessions: dict[str, Session] = {}
    pool = ThreadPoolExecutor(max_workers=solve_workers)

    def get_session(session_id: str) -> Session:
        s = sessions.get(session_id)
        if s is None:
            raise HTTPException(404, f"no session {session_id!r}")
        return s

    @app.get("/healthz")
    def healthz():
        return {"ok": True}

    @app.get("/library/parts")
    def library_parts():
        return {"parts": [_part_summary(p) for p in library.parts()]}

    @app.post("/sessions", status_code=201)
    def create_session():
        s = Session(library, config, undo_depth)
        sessions[s.id] = s
        return s.state()

    @app.get("/sessions/{session_id}")
    def session_state(session_id: str):
        return get_session(session_id).state()

    @app.post("/sessions/{session_id}/environment")
    def set_environment(session_id: str, payload: PartPlacement):
        s = get_session(session_id)
        with s.lock:
            if s.assembly.environment_id is not None:
                raise HTTPException(409, "environment already set")
            try:
                part = library.instantiate(payload.part, payload.overrides)
            except (KeyError, SchemaError) as exc:
                raise HTTPException(422, str(exc))
            s.checkpoint()
            iid = payload.instance or s.fresh_instance_id(payload.part)
            s.assembly.add(iid, part, payload.frame.to_frame(), payload.overrides)
            s.events.append({"op": "environment", "payload": payload.model_dump()})
            return s.state()

    @app.post("/sessions/{session_id}/target")
    def set_target(session_id: str, payload: PartPlacement):
        s = get_session(session_id)
        with s.lock:
            if s.assembly.target_id is not None:
                raise HTTPException(409, "target already set")
            try:
                part = library.instantiate(payload.part, payload.overrides)
            except (KeyError, SchemaError) as exc:
                raise HTTPException(422, str(exc))
            s.checkpoint()
            iid = payload.instance or s.fresh_instance_id(payload.part)
            s.assembly.end_with(iid, part, payload.frame.to_frame(), payload.overrides)
            s.events.append({"op": "target", "payload": payload.model_dump()})
            return s.state()

    def _resolve_endpoint(s: Session, ep: EndpointPayload) -> Endpoint:
        if ep.ref:
            inst, _, prim = ep.ref.partition(".")
            if not prim:
                raise HTTPException(422, f"endpoint {ep.ref!r} must be instance.primitive")
            if inst not in s.assembly.instances:
                raise HTTPException(422, f"unknown instance {inst!r}")
            return Endpoint(inst, prim)
        if ep.new_part:
            if ep.primitive is None:
                raise HTTPException(422, "new_part endpoints need a primitive")
            try:
                part = library.instantiate(ep.new_part, ep.overrides)
            except (KeyError, SchemaError) as exc:
                raise HTTPException(422, str(exc))
            iid = ep.instance or s.fresh_instance_id(ep.new_part)
            s.assembly.declare(iid, part, ep.overrides)
            return Endpoint(iid, ep.primitive)
        raise HTTPException(422, "endpoint needs either ref or new_part")

    @app.post("/sessions/{session_id}/connect")
    def do_connect(session_id: str, payload: ConnectPayload):
        s = get_session(session_id)
        with s.lock:
            snapshot = s.assembly.to_json()
            try:
                ep_a = _resolve_endpoint(s, payload.a)
                ep_b = _resolve_endpoint(s, payload.b)
            except HTTPException:
                s.restore(snapshot)
                raise
            try:
                res = connect(
                    s.assembly, ep_a, ep_b, payload.alignment, payload.is_fixed, s.config
                )
            except (AssemblyError, ValueError) as exc:
                s.restore(snapshot)
                raise HTTPException(422, str(exc))
            if not res.ok:
                s.restore(snapshot)
                raise HTTPException(
                    422,
                    detail={
                        "verdict": res.verdict.value,
                        "message": res.detail or res.verdict.value.replace("_", " "),
                    },
                )
            s.undo_stack.append(snapshot)
            if len(s.undo_stack) > s.undo_depth:
                s.undo_stack.pop(0)
            s.redo_stack.clear()
            s.events.append({"op": "connect", "payload": payload.model_dump()})
            return {"verdict": "ok", **s.state()}

    @app.get("/sessions/{session_id}/compatible")
    def compatible(session_id: str, primitive: str = Query(...)):
        """Primitives selectable together with the given selection.

        ``primitive`` is ``instance.prim`` for something already in the
        assembly or ``part:part_id.prim`` for a palette part.
        """
        s = get_session(session_id)
        with s.lock:
            if primitive.startswith("part:"):
                pid, _, prim_id = primitive[5:].partition(".")
                try:
                    sel_prim = library.get(pid).primitive(prim_id)
                except KeyError as exc:
                    raise HTTPException(422, str(exc))
                sel_available = float("inf")
            else:
                inst, _, prim_id = primitive.partition(".")
                if inst not in s.assembly.instances:
                    raise HTTPException(422, f"unknown instance {inst!r}")
                try:
                    sel_prim = s.assembly.instances[inst].primitive(prim_id)
                except KeyError as exc:
                    raise HTTPException(422, str(exc))
                sel_available = s.assembly.available_critical(Endpoint(inst, prim_id))

            rules = s.assembly.rules

            def check(prim, available) -> bool:
                if not rules.connectivity_allowed(sel_prim.ptype, prim.ptype):
                    return False
                if sel_prim.closed and prim.closed:
                    return False
                if not rules.check_connectable(sel_prim, prim).ok:
                    return False
                need_on_other = rules.occupancy_width(prim, sel_prim)
                if available < need_on_other:
                    return False
                need_on_sel = rules.occupancy_width(sel_prim, prim)
                return sel_available >= need_on_sel

            assembly_matches = []
            for iid, inst_obj in s.assembly.instances.items():
                for prim in inst_obj.part.primitives:
                    ep = Endpoint(iid, prim.id)
                    if f"{iid}.{prim.id}" == primitive:
                        continue
                    if check(prim, s.assembly.available_critical(ep)):
                        assembly_matches.append(
                            {"ref": ep.key(), "type": prim.ptype.value}
                        )
            palette_matches = []
            for part in library.parts():
                for prim in part.primitives:
                    if check(prim, float("inf")):
                        palette_matches.append(
                            {"ref": f"part:{part.id}.{prim.id}", "type": prim.ptype.value}
                        )
            types = sorted(
                {
                    t.value
                    for t in PrimitiveType
                    if rules.connectivity_allowed(sel_prim.ptype, t)
                }
            )
            return {
                "selection": primitive,
                "compatible_types": types,
                "assembly": assembly_matches,
                "palette": palette_matches,
            }

    @app.post("/sessions/{session_id}/solve", status_code=202)
    def start_solve(session_id: str, step1_only: bool = False):
        s = get_session(session_id)
        with s.lock:
            if s.active_job is not None:
                raise HTTPException(409, "a solve is already running for this session")
            if not s.assembly.is_valid():
                raise HTTPException(
                    409, "assembly is not valid: connect the environment to the target first"
                )
            job_id = uuid.uuid4().hex[:12]
            snapshot = s.assembly.clone()
            s.jobs[job_id] = {"status": "running"}
            s.active_job = job_id

        def run():
            try:
                report = solve_assembly(snapshot, s.config, step1_only=step1_only)
                scene = scene_json(snapshot, report.q)
                with s.lock:
                    s.jobs[job_id] = {
                        "status": "done",
                        "report": report.to_json(),
                        "scene": scene,
                    }
                    # adopt the solved DoF values so further edits start
                    # there, unless the user edited the graph meanwhile
                    if (
                        len(s.assembly.connections) == len(snapshot.connections)
                        and s.assembly.ndofs == snapshot.ndofs
                    ):
                        s.assembly.set_x(snapshot.get_x())
            except Exception as exc:  # surfaced via the job, not the socket
                with s.lock:
                    s.jobs[job_id] = {"status": "failed", "error": str(exc)}
            finally:
                with s.lock:
                    s.active_job = None

        pool.submit(run)
        return {"job": job_id}

    @app.get("/sessions/{session_id}/solve/{job_id}")
    def solve_status(session_id: str, job_id: str):
        s = get_session(session_id)
        with s.lock:
            job = s.jobs.get(job_id)
            if job is None:
                raise HTTPException(404, f"no job {job_id!r}")
            return job

    @app.post("/sessions/{session_id}/undo")
    def undo(session_id: str):
        s = get_session(session_id)
        with s.lock:
            if not s.undo_stack:
                raise HTTPException(409, "nothing to undo")
            s.redo_stack.append(s.assembly.to_json())
            s.restore(s.undo_stack.pop())
            s.events.append({"op": "undo"})
            return s.state()

    @app.post("/sessions/{session_id}/redo")
    def redo(session_id: str):
        s = get_session(session_id)
        with s.lock:
            if not s.redo_stack:
                raise HTTPException(409, "nothing to redo")
            s.undo_stack.append(s.assembly.to_json())
            s.restore(s.redo_stack.pop())
            s.events.append({"op": "redo"})
            return s.state()

    @app.get("/sessions/{session_id}/events")
    def events(session_id: str):
        return {"events": get_session(session_id).events}

    return app
