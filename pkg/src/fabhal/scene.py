"""Scene export: solved configurations as a glTF 2.0 document.

One node per part instance carrying the world transform from the solve
report (translation in mm, rotation as a unit quaternion).  Mesh references
and primitive shape parameters ride along in ``extras`` so a viewer can
either load the referenced asset or build proxy geometry (cylinders, boxes,
tori) from the connector shapes.  No binary buffers are emitted.
"""

from __future__ import annotations

import json
import math

import numpy as np

from fabhal.assembly import Assembly
from fabhal.frames import Frame

__all__ = ["export_scene", "scene_json"]


def _quaternion(R: np.ndarray) -> list[float]:
    """Unit quaternion (x, y, z, w) of a rotation matrix."""
    t = float(np.trace(R))
    if t > 0.0:
        s = math.sqrt(t + 1.0) * 2.0
        w = 0.25 * s
        x = (R[2, 1] - R[1, 2]) / s
        y = (R[0, 2] - R[2, 0]) / s
        z = (R[1, 0] - R[0, 1]) / s
    else:
        i = int(np.argmax(np.diagonal(R)))
        if i == 0:
            s = math.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2.0
            x, w = 0.25 * s, (R[2, 1] - R[1, 2]) / s
            y, z = (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s
        elif i == 1:
            s = math.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2.0
            y, w = 0.25 * s, (R[0, 2] - R[2, 0]) / s
            x, z = (R[0, 1] + R[1, 0]) / s, (R[1, 2] + R[2, 1]) / s
        else:
            s = math.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2.0
            z, w = 0.25 * s, (R[1, 0] - R[0, 1]) / s
            x, y = (R[0, 2] + R[2, 0]) / s, (R[1, 2] + R[2, 1]) / s
    q = np.array([x, y, z, w])
    q = q / np.linalg.norm(q)
    return [float(v) for v in q]


def _primitive_extras(inst) -> list[dict]:
    out = []
    for prim in inst.part.primitives:
        out.append(
            {
                "id": prim.id,
                "type": prim.ptype.value,
                "shape": {k: float(v) for k, v in sorted(prim.shape.items())},
                "base_frame": prim.base_frame.to_json(),
                "closed": prim.closed,
            }
        )
    return out


def scene_json(assembly: Assembly, q: dict[str, dict] | None = None) -> dict:
    """glTF document for the assembly at configuration ``q``.

    ``q`` maps instance id to a frame JSON ({position, orientation}); when
    omitted the current forward kinematics is used.  Units are millimeters.
    """
    if q is None:
        q = {k: Frame.from_rp(R, p).to_json() for k, (R, p) in assembly.forward_kinematics().items()}
    nodes = []
    for iid, inst in assembly.instances.items():
        frame_json = q.get(iid)
        if frame_json is None:
            continue
        frame = Frame.from_json(frame_json)
        R, p = frame.to_rp()
        node = {
            "name": iid,
            "translation": [float(v) for v in p],
            "rotation": _quaternion(R),
            "extras": {
                "part": inst.part.id,
                "role": inst.role.value,
                "mass": inst.part.mass,
                "mesh_ref": inst.part.mesh_ref,
                "primitives": _primitive_extras(inst),
            },
        }
        nodes.append(node)
    return {
        "asset": {"version": "2.0", "generator": "fabhal", "extras": {"units": "mm"}},
        "scene": 0,
        "scenes": [{"name": "assembly", "nodes": list(range(len(nodes)))}],
        "nodes": nodes,
    }


def export_scene(assembly: Assembly, path, q: dict[str, dict] | None = None) -> None:
    doc = scene_json(assembly, q)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
