import math

import numpy as np
import pytest

from fabhal.assembly import (
    Assembly,
    Endpoint,
    EnvironmentAlreadySet,
    Role,
    TargetAlreadySet,
)
from fabhal.frames import Frame, exp_so3, log_so3

from helpers import (
    make_hook_link_part,
    make_link_part,
    make_ring_part,
    make_rod_part,
    make_shook_part,
    random_x,
    rod_and_shook_assembly,
)


def test_add_environment_once():
    asm = Assembly()
    rod = make_rod_part()
    asm.add("env", rod, Frame((0, 0, 500), (90, 0, 90)))
    assert asm.environment_id == "env"
    assert asm.instances["env"].role is Role.ENVIRONMENT
    with pytest.raises(EnvironmentAlreadySet):
        asm.add("env2", rod, Frame())


def test_end_with_once():
    asm = Assembly()
    asm.add("env", make_rod_part(), Frame())
    tgt = make_ring_part()
    asm.end_with("goal", tgt, Frame((124.3, 580.0, 717.1), (-135.5, -40.0, 20.5)))
    assert asm.target_id == "goal"
    assert asm.instances["goal"].goal_frame is not None
    with pytest.raises(TargetAlreadySet):
        asm.end_with("goal2", tgt, Frame())


def test_end_with_before_connect_leaves_assembly_invalid():
    asm = Assembly()
    asm.add("env", make_rod_part(), Frame())
    asm.end_with("goal", make_ring_part(), Frame())
    assert not asm.is_valid()  # not yet connected


def test_single_shook_hangs_on_rod_fk():
    # closed-form frame-algebra oracle for one edge, at the default DoFs:
    # rod contact at t=0.5 is the world origin; hook1's contact (theta=0,
    # phi=0) sits at +arc_radius above the hook part origin minus half_span...
    asm = rod_and_shook_assembly()
    q = asm.forward_kinematics()
    R, p = q["hook"]
    # contact point of hook1 in part coords: base (0,0,30) ypr (0,0,180)
    # maps local (0,0,-12) to (0,0,42)
    # mated frames: rod frame at origin; hook contact coincides with it
    world_contact = R @ np.array([0.0, 0.0, 42.0]) + p
    assert np.allclose(world_contact, np.zeros(3), atol=1e-9)


def test_fk_periodic_wrap_gives_identical_configuration():
    asm = rod_and_shook_assembly()
    x = asm.get_x()
    q1 = asm.forward_kinematics(x)
    x2 = x.copy()
    # psi of the rod is entry with name psi; add a full turn to every angular dof
    for i, e in enumerate(asm.dof_entries):
        if e.tag.name == "UNBOUNDED":
            x2[i] += 2 * math.pi
    q2 = asm.forward_kinematics(x2)
    for k in q1:
        assert np.allclose(q1[k][0], q2[k][0], atol=1e-9)
        assert np.allclose(q1[k][1], q2[k][1], atol=1e-9)


def test_all_fixed_connection_has_no_dofs():
    asm = Assembly()
    asm.add("env", make_rod_part(), Frame())
    asm.declare("hook", make_shook_part())
    asm.add_connection_unchecked(
        Endpoint("hook", "hook1"), Endpoint("env", "rod"), "default", True
    )
    assert asm.ndofs == 0
    q = asm.forward_kinematics()
    assert "hook" in q  # fully determined


def test_tree_connection_residual_is_zero_at_fk():
    asm = rod_and_shook_assembly()
    rng = np.random.default_rng(7)
    for _ in range(5):
        x = random_x(asm, rng)
        q = asm.forward_kinematics(x)
        r = asm.connection_residual(q, x, 0)
        assert np.linalg.norm(r) < 1e-9


def test_connection_residual_detects_translation():
    asm = rod_and_shook_assembly()
    x = asm.get_x()
    q = dict(asm.forward_kinematics(x))
    R, p = q["hook"]
    q["hook"] = (R, p + np.array([5.0, 0.0, 0.0]))
    r = asm.connection_residual(q, x, 0)
    assert np.linalg.norm(r[:3]) == pytest.approx(5.0, abs=1e-9)


def four_bar_assembly(left_span=80.0):
    """Rod environment + three links closing a 4-bar style loop."""
    asm = Assembly()
    asm.add("base", make_rod_part(length=200.0), Frame((0, 0, 0), (0, 90, 0)))
    asm.declare("left", make_hook_link_part("left_link", span=left_span))
    asm.declare("right", make_hook_link_part("right_link", span=80.0))
    asm.declare("bottom", make_link_part("bottom_link", span=60.0))
    asm.add_connection_unchecked(Endpoint("left", "hole1"), Endpoint("base", "rod"))
    asm.add_connection_unchecked(Endpoint("right", "hole1"), Endpoint("base", "rod"))
    asm.add_connection_unchecked(Endpoint("bottom", "hole1"), Endpoint("left", "hook2"))
    asm.add_connection_unchecked(Endpoint("bottom", "hole2"), Endpoint("right", "hook2"))
    return asm


def test_cycle_count():
    asm = four_bar_assembly()
    # connections = 4, instances = 4 -> n = 4 - (4 - 1) = 1 cycle
    assert asm.n_cycles == 1
    assert len(asm.connections) == 4


def test_cycle_residual_perturbation():
    asm = four_bar_assembly()
    x = asm.get_x()
    base = asm.cycle_residual(x, 0)
    # lengthening one link by 10 mm moves the closure by ~10 mm
    asm2 = four_bar_assembly(left_span=90.0)
    diff = asm2.cycle_residual(asm2.get_x(), 0) - base
    assert np.linalg.norm(diff[:3]) == pytest.approx(10.0, abs=1e-6)


def test_rejecting_connect_keeps_hash(monkeypatch):
    asm = four_bar_assembly()
    before = asm.state_hash()
    asm.add_connection_unchecked(Endpoint("left", "hole1"), Endpoint("base", "rod"))
    asm.pop_connection()
    assert asm.state_hash() == before


def test_serialization_round_trip():
    asm = four_bar_assembly()
    data = asm.to_json()
    # library shim: resolve parts by id from the originals
    parts = {inst.part.id: inst.part for inst in asm.instances.values()}

    class Shim:
        def instantiate(self, pid, overrides=None):
            return parts[pid]

    back = Assembly.from_json(data, Shim())
    assert back.state_hash() == asm.state_hash()
    assert back.n_cycles == asm.n_cycles


def test_jacobian_matches_finite_differences():
    asm = four_bar_assembly()
    rng = np.random.default_rng(3)
    x = random_x(asm, rng)
    q = asm.forward_kinematics(x)
    # random perturbed free poses + rotvec charts
    rotvecs = {}
    qf = {}
    for k, (R, p) in q.items():
        w = rng.normal(scale=0.3, size=3)
        rotvecs[k] = w
        qf[k] = (exp_so3(w) @ R, p + rng.normal(scale=5.0, size=3))
    # rebuild q from charts: R_i = exp(theta_i) @ R0_i; here fold R into chart
    # by using theta as the full rotation of a fixed reference
    base_R = {k: qf[k][0] for k in qf}
    # chart: R(theta) = exp(hat(theta)) with theta0 = log(R)
    rotvecs = {k: log_so3(base_R[k]) for k in qf}
    qf = {k: (exp_so3(rotvecs[k]), qf[k][1]) for k in qf}

    eps = 1e-6
    for j in range(len(asm.connections)):
        r, Ja, Jb, Jx = asm.connection_residual_jacobian(qf, j, x, rotvecs)
        c = asm.connections[j]
        # pose blocks
        for inst, J in ((c.a.instance, Ja), (c.b.instance, Jb)):
            for col in range(6):
                qp = {k: (R.copy(), p.copy()) for k, (R, p) in qf.items()}
                qm = {k: (R.copy(), p.copy()) for k, (R, p) in qf.items()}
                if col < 3:
                    dp = np.zeros(3)
                    dp[col] = eps
                    Rp, pp = qp[inst]
                    qp[inst] = (Rp, pp + dp)
                    Rm, pm = qm[inst]
                    qm[inst] = (Rm, pm - dp)
                else:
                    dw = np.zeros(3)
                    dw[col - 3] = eps
                    qp[inst] = (exp_so3(rotvecs[inst] + dw), qp[inst][1])
                    qm[inst] = (exp_so3(rotvecs[inst] - dw), qm[inst][1])
                fd = (
                    asm.connection_residual(qp, x, j)
                    - asm.connection_residual(qm, x, j)
                ) / (2 * eps)
                assert np.allclose(J[:, col], fd, atol=2e-4), (j, inst, col)
        # dof block
        slots = [xi for xi, e in enumerate(asm.dof_entries) if e.conn_idx == j]
        for local, xi in enumerate(slots):
            xp, xm = x.copy(), x.copy()
            xp[xi] += eps
            xm[xi] -= eps
            fd = (
                asm.connection_residual(qf, xp, j) - asm.connection_residual(qf, xm, j)
            ) / (2 * eps)
            assert np.allclose(Jx[:, local], fd, atol=2e-4), (j, local)


def test_multi_connection_penalty_through_assembly():
    asm = Assembly()
    asm.add("env", make_rod_part(length=100.0), Frame())
    asm.declare("h1", make_shook_part("s1"))
    asm.declare("h2", make_shook_part("s2"))
    c1 = asm.add_connection_unchecked(Endpoint("h1", "hook1"), Endpoint("env", "rod"))
    c2 = asm.add_connection_unchecked(Endpoint("h2", "hook1"), Endpoint("env", "rod"))
    # rod t slots: b-side of each connection, slot index na + 0
    x = asm.get_x()
    names = [(e.owner.key(), e.name) for e in asm.dof_entries]
    t_slots = [i for i, (k, n) in enumerate(names) if k == "env.rod" and n == "t"]
    assert len(t_slots) == 2  # each connection owns its own copy
    x[t_slots[0]], x[t_slots[1]] = 0.5, 0.55
    # occupancy of a hook on a rod is its wire thickness (3 mm each):
    # f = 5 - 3 -> positive, no overlap
    assert asm.multi_connection_penalty(x) == 0.0
    x[t_slots[1]] = 0.52
    # f = 2 - 3 = -1 -> penalty 1
    assert asm.multi_connection_penalty(x) == pytest.approx(1.0, abs=1e-9)
