import math
from dataclasses import replace

import numpy as np
import pytest
from omniclone.errors import ConfigError, InputError
from omniclone.kinematics import GRAVITY, RigidPose
from omniclone.motion import Frame, MotionClip, derive_joint_velocities
from omniclone.rotations import quat_from_yaw, quat_mul, quat_normalize, quat_rotate
from omniclone.simtrack import (
    DEFAULT_REWARD_WEIGHTS,
    DRConfig,
    DRRanges,
    ArchSpec,
    RewardConfig,
    RobotState,
    STUDENT_ARCH,
    TEACHER_ARCH,
    TRACKING_TERMS,
    TrackerSpec,
    arch_shape,
    build_student_obs,
    build_teacher_obs,
    default_system_config,
    parse_tracker,
    reward,
    sample_dr,
    state_from_frame,
    student_obs_length,
    teacher_obs_length,
    track_clip,
)
from omniclone.synthetic import constant_velocity_clip, static_clip


def random_state(rng, model):
    n, k = model.n_joints, model.n_key_bodies
    return RobotState(
        root=RigidPose(rng.uniform(-1, 1, 3) + [0, 0, 1], quat_normalize(rng.normal(size=4))),
        root_ang_vel=rng.normal(size=3),
        joint_pos=rng.uniform(-0.5, 0.5, n),
        joint_vel=rng.normal(size=n),
        body_pos=rng.uniform(-1, 1, (k, 3)),
        body_quat=quat_normalize(rng.normal(size=(k, 4))),
        body_lin_vel=rng.normal(size=(k, 3)),
        body_ang_vel=rng.normal(size=(k, 3)),
        last_action=rng.uniform(-0.5, 0.5, n),
    )


def random_ref(rng, model):
    n, k = model.n_joints, model.n_key_bodies
    return Frame(
        t=0.0,
        root=RigidPose(rng.uniform(-1, 1, 3) + [0, 0, 1], quat_normalize(rng.normal(size=4))),
        root_lin_vel=rng.normal(size=3),
        root_ang_vel=rng.normal(size=3),
        joint_pos=rng.uniform(-0.5, 0.5, n),
        joint_vel=rng.normal(size=n),
        body_pos=rng.uniform(-1, 1, (k, 3)),
        body_quat=quat_normalize(rng.normal(size=(k, 4))),
        body_lin_vel=rng.normal(size=(k, 3)),
        body_ang_vel=rng.normal(size=(k, 3)),
    )


def se2_state(state, q_g, d):
    return replace(
        state,
        root=RigidPose(quat_rotate(q_g, state.root.position) + d,
                       quat_mul(q_g, state.root.orientation)),
        body_pos=quat_rotate(q_g, state.body_pos) + d,
        body_quat=quat_mul(q_g, state.body_quat),
        body_lin_vel=quat_rotate(q_g, state.body_lin_vel),
        body_ang_vel=quat_rotate(q_g, state.body_ang_vel),
    )


def se2_frame(ref, q_g, d):
    return replace(
        ref,
        root=RigidPose(quat_rotate(q_g, ref.root.position) + d,
                       quat_mul(q_g, ref.root.orientation)),
        root_lin_vel=quat_rotate(q_g, ref.root_lin_vel),
        root_ang_vel=quat_rotate(q_g, ref.root_ang_vel),
        body_pos=quat_rotate(q_g, ref.body_pos) + d,
        body_quat=quat_mul(q_g, ref.body_quat),
        body_lin_vel=quat_rotate(q_g, ref.body_lin_vel),
        body_ang_vel=quat_rotate(q_g, ref.body_ang_vel),
    )


class TestObservationLayout:
    def test_student_length_arithmetic(self, ref_model, rng):
        # K=7, f=5, n=29: reference slice 5*(7*7+3)=260, total 324
        state = random_state(rng, ref_model)
        window = [random_ref(rng, ref_model) for _ in range(5)]
        obs = build_student_obs(state, window, ref_model, 5)
        assert obs.values.shape == (324,)
        ref_len = sum(l for n_, _, l in obs.layout if n_.startswith("ref"))
        assert ref_len == 260
        assert student_obs_length(ref_model, 5) == 324

    def test_teacher_longer_than_student_at_f1(self, ref_model, rng):
        state = random_state(rng, ref_model)
        ref = random_ref(rng, ref_model)
        teacher = build_teacher_obs(state, ref, ref_model)
        student = build_student_obs(state, [ref], ref_model, 1)
        assert teacher.values.shape[0] > student.values.shape[0]
        assert teacher.values.shape[0] == teacher_obs_length(ref_model)
        assert student.values.shape[0] == student_obs_length(ref_model, 1)

    def test_layout_covers_vector(self, ref_model, rng):
        state = random_state(rng, ref_model)
        obs = build_teacher_obs(state, random_ref(rng, ref_model), ref_model)
        total = sum(l for _, _, l in obs.layout)
        assert total == obs.values.shape[0]
        offsets = [o for _, o, _ in obs.layout]
        assert offsets == sorted(offsets)

    def test_student_excludes_body_angular_velocity(self, ref_model, rng):
        state = random_state(rng, ref_model)
        obs = build_student_obs(state, [random_ref(rng, ref_model)], ref_model, 1)
        names = [n for n, _, _ in obs.layout]
        assert not any("ang_vel" in n and "root" not in n for n in names)

    def test_short_window_rejected(self, ref_model, rng):
        state = random_state(rng, ref_model)
        with pytest.raises(InputError):
            build_student_obs(state, [random_ref(rng, ref_model)] * 3, ref_model, 5)


class TestObservationContent:
    def test_gravity_yaw_invariant(self, ref_model, rng):
        state = random_state(rng, ref_model)
        state = replace(
            state, root=RigidPose(state.root.position, quat_from_yaw(1.1))
        )
        obs = build_teacher_obs(state, random_ref(rng, ref_model), ref_model)
        assert np.allclose(obs.slice("gravity"), GRAVITY, atol=1e-12)

    def test_on_reference_coincidence(self, ref_model):
        clip = constant_velocity_clip(ref_model, 1.0, n_frames=5)
        clip = derive_joint_velocities(clip)
        ref = clip.frames[2]
        state = state_from_frame(ref, ref_model)
        obs = build_teacher_obs(state, ref, ref_model)
        assert np.allclose(obs.slice("ref_joint_pos") - obs.slice("joint_pos"), 0.0)
        assert np.allclose(obs.slice("ref_joint_vel") - obs.slice("joint_vel"), 0.0)
        assert np.allclose(obs.slice("ref_body_pos"), obs.slice("body_pos"), atol=1e-9)
        assert np.allclose(obs.slice("ref_body_quat"), obs.slice("body_quat"), atol=1e-9)

    def test_missing_ref_joint_vel_raises(self, ref_model, rng):
        state = random_state(rng, ref_model)
        ref = replace(random_ref(rng, ref_model), joint_vel=None)
        with pytest.raises(InputError):
            build_teacher_obs(state, ref, ref_model)
        obs = build_teacher_obs(state, ref, ref_model, include_ref_joint_vel=False)
        assert "ref_joint_vel" not in [n for n, _, _ in obs.layout]

    def test_se2_equivariance_both_policies(self, ref_model, rng):
        for _ in range(25):
            state = random_state(rng, ref_model)
            window = [random_ref(rng, ref_model) for _ in range(5)]
            yaw = rng.uniform(-np.pi, np.pi)
            d = np.array([rng.uniform(-3, 3), rng.uniform(-3, 3), 0.0])
            q_g = quat_from_yaw(yaw)
            state2 = se2_state(state, q_g, d)
            window2 = [se2_frame(w, q_g, d) for w in window]
            t1 = build_teacher_obs(state, window[0], ref_model)
            t2 = build_teacher_obs(state2, window2[0], ref_model)
            assert np.allclose(t1.values, t2.values, atol=1e-9)
            s1 = build_student_obs(state, window, ref_model, 5)
            s2 = build_student_obs(state2, window2, ref_model, 5)
            assert np.allclose(s1.values, s2.values, atol=1e-9)


# ---------------------------------------------------------------------------
# Reward
# ---------------------------------------------------------------------------

def _qmul(a, b):
    return (
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    )


def _qconj(q):
    return (q[0], -q[1], -q[2], -q[3])


def _qrot_inv(q, v):
    qc = _qconj(q)
    vq = (0.0, v[0], v[1], v[2])
    out = _qmul(_qmul(qc, vq), _qconj(qc))
    return np.array(out[1:])


def _qangle(a, b):
    d = _qmul(_qconj(tuple(a)), tuple(b))
    vec = math.sqrt(d[1] ** 2 + d[2] ** 2 + d[3] ** 2)
    return 2.0 * math.atan2(vec, abs(d[0]))


def oracle_reward(state, ref, action, prev_action, model, config):
    """Term-by-term reference implementation with scalar loops."""
    slots = {b: i for i, b in enumerate(model.key_bodies)}
    torso = slots[config.torso_body]
    ee = [slots[b] for b in config.end_effectors]
    feet = [slots[b] for b in config.feet]
    k = model.n_key_bodies
    ref_lin = ref.body_lin_vel if ref.body_lin_vel is not None else np.zeros((k, 3))
    ref_ang = ref.body_ang_vel if ref.body_ang_vel is not None else np.zeros((k, 3))
    rq, sq = ref.root.orientation, state.root.orientation

    def base_point(q, origin, p):
        return _qrot_inv(q, np.asarray(p) - np.asarray(origin))

    e2 = {}
    e2["torso_global_pos"] = float(
        sum((state.body_pos[torso][c] - ref.body_pos[torso][c]) ** 2 for c in range(3))
    )
    e2["torso_global_rot"] = _qangle(state.body_quat[torso], ref.body_quat[torso]) ** 2
    e2["fullbody_global_lin_vel"] = float(
        np.mean([sum((state.body_lin_vel[i][c] - ref_lin[i][c]) ** 2 for c in range(3)) for i in range(k)])
    )
    e2["fullbody_global_ang_vel"] = float(
        np.mean([sum((state.body_ang_vel[i][c] - ref_ang[i][c]) ** 2 for c in range(3)) for i in range(k)])
    )
    rel_pos_err = []
    rel_rot_err = []
    for i in range(k):
        a = base_point(sq, state.root.position, state.body_pos[i])
        b = base_point(rq, ref.root.position, ref.body_pos[i])
        rel_pos_err.append(float(np.sum((a - b) ** 2)))
        qa = _qmul(_qconj(tuple(sq)), tuple(state.body_quat[i]))
        qb = _qmul(_qconj(tuple(rq)), tuple(ref.body_quat[i]))
        rel_rot_err.append(_qangle(qa, qb) ** 2)
    e2["fullbody_relative_pos"] = float(np.mean(rel_pos_err))
    e2["fullbody_relative_rot"] = float(np.mean(rel_rot_err))
    e2["ee_relative_pos"] = float(np.mean([rel_pos_err[i] for i in ee]))
    e2["ee_relative_rot"] = float(np.mean([rel_rot_err[i] for i in ee]))
    lin_err = [
        float(np.sum((_qrot_inv(sq, state.body_lin_vel[i]) - _qrot_inv(rq, ref_lin[i])) ** 2))
        for i in ee
    ]
    ang_err = [
        float(np.sum((_qrot_inv(sq, state.body_ang_vel[i]) - _qrot_inv(rq, ref_ang[i])) ** 2))
        for i in ee
    ]
    e2["ee_relative_lin_vel"] = float(np.mean(lin_err))
    e2["ee_relative_ang_vel"] = float(np.mean(ang_err))

    total = 0.0
    for term in TRACKING_TERMS:
        total += config.weights[term] * math.exp(-config.sigmas[term] * e2[term])
    lo, hi = model.joint_limits[:, 0], model.joint_limits[:, 1]
    total += config.weights["action_rate"] * float(np.sum((action - prev_action) ** 2))
    total += config.weights["joint_acceleration"] * float(np.sum(state.joint_acc**2))
    total += config.weights["joint_position_limits"] * float(
        np.sum(np.maximum(0, state.joint_pos - hi) + np.maximum(0, lo - state.joint_pos))
    )
    total += config.weights["velocity_action_limits"] * (
        float(np.sum(np.maximum(0, np.abs(state.joint_vel) - config.joint_vel_limit)))
        + float(np.sum(np.maximum(0, action - hi) + np.maximum(0, lo - action)))
    )
    air = any(
        abs(state.body_pos[i][2] - ref.body_pos[i][2]) > config.air_time_height_tol
        for i in feet
    )
    total += config.weights["contact_air_time"] * (1.0 if air else 0.0)
    return total


def on_reference_pair(ref_model):
    clip = static_clip(ref_model, n_frames=3)
    clip = derive_joint_velocities(clip)
    ref = clip.frames[0]
    state = state_from_frame(ref, ref_model)
    return state, ref


class TestReward:
    def test_zero_error_totals_seven(self, ref_model):
        # kernel(0) = 1 per tracking term: 2*0.5 + 2*1 + 2*1 + 4*0.5 = 7
        state, ref = on_reference_pair(ref_model)
        action = ref.joint_pos.copy()
        result = reward(state, ref, action, action, ref_model)
        assert result.total == pytest.approx(7.0, abs=1e-12)
        for term in TRACKING_TERMS:
            weight = DEFAULT_REWARD_WEIGHTS[term]
            assert result.terms[term] == pytest.approx(weight, abs=1e-12)

    def test_action_rate_composition(self, ref_model):
        state, ref = on_reference_pair(ref_model)
        prev = ref.joint_pos.copy()
        action = prev.copy()
        action[0] += 0.1  # ||a - a_prev||^2 = 0.01
        result = reward(state, ref, action, prev, ref_model)
        assert result.total == pytest.approx(7.0 - 8.0 * 0.01, abs=1e-12)

    def test_matches_term_by_term_oracle(self, ref_model, rng):
        config = RewardConfig()
        for _ in range(20):
            state = random_state(rng, ref_model)
            ref = random_ref(rng, ref_model)
            action = rng.uniform(-1, 1, ref_model.n_joints)
            prev = rng.uniform(-1, 1, ref_model.n_joints)
            mine = reward(state, ref, action, prev, ref_model, config)
            expected = oracle_reward(state, ref, action, prev, ref_model, config)
            assert mine.total == pytest.approx(expected, abs=1e-12)

    def test_tracking_monotonicity(self, ref_model):
        state, ref = on_reference_pair(ref_model)
        action = ref.joint_pos.copy()
        base = reward(state, ref, action, action, ref_model)
        for magnitude in (0.05, 0.1, 0.2, 0.4):
            moved = replace(
                state, body_pos=state.body_pos + np.array([magnitude, 0.0, 0.0])
            )
            worse = reward(moved, ref, action, action, ref_model)
            assert worse.total < base.total
            base = worse

    def test_limit_overshoot_penalty(self, ref_model):
        state, ref = on_reference_pair(ref_model)
        action = ref.joint_pos.copy()
        hi = ref_model.joint_limits[0, 1]
        over = replace(state, joint_pos=state.joint_pos.copy())
        over.joint_pos[0] = hi + 0.25
        result = reward(over, ref, action, action, ref_model)
        penalized = result.terms["joint_position_limits"]
        assert penalized == pytest.approx(-10.0 * 0.25, abs=1e-9)

    def test_unknown_end_effector_config_error(self, ref_model):
        state, ref = on_reference_pair(ref_model)
        config = RewardConfig(end_effectors=("left_wrist_yaw_link", "ghost_link"))
        with pytest.raises(ConfigError, match="ghost_link"):
            reward(state, ref, ref.joint_pos, ref.joint_pos, ref_model, config)

    def test_air_time_indicator(self, ref_model):
        state, ref = on_reference_pair(ref_model)
        action = ref.joint_pos.copy()
        lifted = state.body_pos.copy()
        foot = ref_model.key_body_slot("left_ankle_roll_link")
        lifted[foot, 2] += 0.3
        moved = replace(state, body_pos=lifted)
        result = reward(moved, ref, action, action, ref_model)
        assert result.terms["contact_air_time"] == pytest.approx(-100.0)


class TestDomainRandomization:
    def test_samples_inside_closed_ranges(self):
        r = DRRanges()
        rng = np.random.default_rng(0)
        for _ in range(10_000):
            cfg = sample_dr(rng)
            assert 0.0 <= cfg.action_delay_s <= 0.02
            assert 0.0 <= cfg.action_noise_rad <= 0.02
            for mu in (*cfg.static_friction.values(), *cfg.dynamic_friction.values()):
                assert 0.3 <= mu <= 2.0
            cfg.validate(r)

    def test_seeded_replay_oracle(self):
        cfg = sample_dr(314)
        rng = np.random.default_rng(314)
        assert cfg.action_delay_s == rng.uniform(0.0, 0.02)
        assert cfg.action_noise_rad == rng.uniform(0.0, 0.02)
        assert cfg.link_mass_scale["torso"] == rng.uniform(0.9, 1.1)
        assert cfg.link_mass_scale["shoulder_yaw"] == rng.uniform(0.9, 1.1)
        assert cfg.torso_com_offset_m[0] == rng.uniform(-0.075, 0.075)
        assert cfg.torso_com_offset_m[1] == rng.uniform(-0.1, 0.1)
        assert cfg.torso_com_offset_m[2] == rng.uniform(-0.1, 0.1)
        for joint in ("ankle_roll", "pelvis", "hip_roll", "knee", "elbow"):
            assert cfg.static_friction[joint] == rng.uniform(0.3, 2.0)
        for joint in ("ankle_roll", "pelvis", "hip_roll", "knee", "elbow"):
            assert cfg.dynamic_friction[joint] == rng.uniform(0.3, 2.0)
        assert cfg.stiffness_scale == rng.uniform(0.95, 1.05)
        assert cfg.damping_scale == rng.uniform(0.95, 1.05)
        assert cfg.armature_scale == rng.uniform(0.995, 1.015)
        assert cfg.torque_rfi_fraction == 0.02

    def test_field_means_near_midpoints(self):
        rng = np.random.default_rng(7)
        samples = [sample_dr(rng) for _ in range(4000)]
        delays = np.array([s.action_delay_s for s in samples])
        # uniform(0, 0.02): mean 0.01, SE = range/sqrt(12)/sqrt(n)
        se = 0.02 / np.sqrt(12) / np.sqrt(len(samples))
        assert abs(delays.mean() - 0.01) < 3 * se

    def test_serialization_round_trip(self):
        import json

        from omniclone.simtrack import dr_config_from_dict, dr_config_to_dict

        cfg = sample_dr(55)
        again = dr_config_from_dict(json.loads(json.dumps(dr_config_to_dict(cfg))))
        assert again == cfg

    def test_out_of_range_config_rejected(self):
        cfg = sample_dr(0)
        bad = DRConfig(
            action_delay_s=0.5,
            action_noise_rad=cfg.action_noise_rad,
            link_mass_scale=cfg.link_mass_scale,
            torso_com_offset_m=cfg.torso_com_offset_m,
            torque_rfi_fraction=cfg.torque_rfi_fraction,
            static_friction=cfg.static_friction,
            dynamic_friction=cfg.dynamic_friction,
            stiffness_scale=cfg.stiffness_scale,
            damping_scale=cfg.damping_scale,
            armature_scale=cfg.armature_scale,
        )
        with pytest.raises(ConfigError):
            bad.validate()


class TestTrackers:
    def test_parse_tracker(self):
        assert parse_tracker("perfect").mode == "perfect"
        assert parse_tracker("oracle").mode == "perfect"
        assert parse_tracker("lag:3") == TrackerSpec(mode="lag", lag=3)
        assert parse_tracker("noise:0.05").noise_std == pytest.approx(0.05)
        pd = parse_tracker("pd:100,20,0.005")
        assert (pd.kp, pd.kd, pd.dt) == (100.0, 20.0, 0.005)
        with pytest.raises(ConfigError):
            parse_tracker("warp:9")

    def test_pd_requires_positive_kp(self):
        with pytest.raises(ConfigError):
            TrackerSpec(mode="pd", kp=0.0, kd=1.0)

    def test_perfect_replays_reference(self, ref_model):
        clip = constant_velocity_clip(ref_model, 1.2, n_frames=10)
        states = track_clip(TrackerSpec(mode="perfect"), clip, ref_model)
        for state, frame in zip(states, clip.frames):
            assert np.allclose(state.body_pos, frame.body_pos, atol=1e-12)
            assert np.allclose(state.joint_pos, frame.joint_pos)

    def test_lag_replays_shifted_frames(self, ref_model):
        clip = constant_velocity_clip(ref_model, 1.0, n_frames=12)
        k = 3
        states = track_clip(TrackerSpec(mode="lag", lag=k), clip, ref_model)
        for t, state in enumerate(states):
            src = clip.frames[max(0, t - k)]
            assert np.allclose(state.body_pos, src.body_pos, atol=1e-12)

    def test_lag_error_closed_form(self, ref_model):
        v, fps, k = 1.2, 30.0, 4
        clip = constant_velocity_clip(ref_model, v, n_frames=40, fps=fps)
        states = track_clip(TrackerSpec(mode="lag", lag=k), clip, ref_model)
        for t in range(k, 40):
            err = np.linalg.norm(states[t].body_pos - clip.frames[t].body_pos, axis=1)
            assert np.allclose(err, v * k / fps, atol=1e-9)

    def test_noise_deterministic_per_seed(self, ref_model):
        clip = constant_velocity_clip(ref_model, 0.5, n_frames=8)
        a = track_clip(TrackerSpec(mode="noise", noise_std=0.05, seed=3), clip, ref_model)
        b = track_clip(TrackerSpec(mode="noise", noise_std=0.05, seed=3), clip, ref_model)
        c = track_clip(TrackerSpec(mode="noise", noise_std=0.05, seed=4), clip, ref_model)
        assert np.allclose(a[5].joint_pos, b[5].joint_pos)
        assert not np.allclose(a[5].joint_pos, c[5].joint_pos)

    def test_pd_critical_damping_step(self, ref_model):
        # step target on one joint; critically damped double integrator must
        # converge monotonically with no overshoot beyond 1e-6
        fps = 30.0
        n_frames = 60
        target = 0.5
        frames = []
        for i in range(n_frames):
            q = np.zeros(ref_model.n_joints)
            if i > 0:
                q[0] = target
            frames.append(
                Frame(
                    t=i / fps,
                    root=RigidPose(np.array([0, 0, 0.75]), np.array([1.0, 0, 0, 0])),
                    root_lin_vel=np.zeros(3),
                    root_ang_vel=np.zeros(3),
                    joint_pos=q,
                )
            )
        clip = MotionClip("step", fps, "other", "none", tuple(frames),
                          dof_names=ref_model.joint_names, key_bodies=ref_model.key_bodies)
        kp = 400.0
        kd = 2.0 * math.sqrt(kp)  # critical damping
        dt = 1.0 / 600.0
        states = track_clip(TrackerSpec(mode="pd", kp=kp, kd=kd, dt=dt), clip, ref_model)
        q0 = np.array([s.joint_pos[0] for s in states])
        assert np.all(np.diff(q0) >= -1e-12)
        assert q0.max() <= target + 1e-6
        assert q0[-1] == pytest.approx(target, abs=1e-3)
        # compare against the continuous critically damped solution; the step
        # drives ticks 1..t_idx, so state t_idx has integrated t_idx periods
        omega = math.sqrt(kp)
        for t_idx in (5, 10, 20, 40):
            t = t_idx / fps
            expected = target * (1.0 - (1.0 + omega * t) * math.exp(-omega * t))
            assert q0[t_idx] == pytest.approx(expected, abs=0.02)

    def test_pd_with_dr_delay_shifts_targets(self, ref_model):
        clip = constant_velocity_clip(ref_model, 1.0, n_frames=20)
        dr = DRConfig(
            action_delay_s=2.0 / 30.0,
            action_noise_rad=0.0,
            link_mass_scale={"torso": 1.0, "shoulder_yaw": 1.0},
            torso_com_offset_m=(0.0, 0.0, 0.0),
            torque_rfi_fraction=0.02,
            static_friction={},
            dynamic_friction={},
            stiffness_scale=1.0,
            damping_scale=1.0,
            armature_scale=1.0,
        )
        states = track_clip(
            TrackerSpec(mode="pd", kp=100.0, kd=20.0), clip, ref_model, dr=dr
        )
        assert np.allclose(states[10].last_action, clip.frames[8].joint_pos)


class TestArchShape:
    def test_teacher_per_layer_formula(self):
        shape = arch_shape(TEACHER_ARCH, obs_len=291, action_len=29)
        d, dff = 256, 512
        expected = 4 * d * d + 4 * d + 2 * d * dff + d + dff + 4 * d
        assert expected == 527104
        assert shape.per_layer_params == expected
        assert shape.attention_params_per_layer == 4 * d * d + 4 * d
        assert shape.ffn_params_per_layer == 2 * d * dff + d + dff
        assert shape.norm_params_per_layer == 4 * d

    def test_heads_divisibility(self):
        with pytest.raises(ConfigError):
            ArchSpec(d_model=256, d_ff=512, n_heads=3, n_tokens=4, n_layers=2)

    def test_student_teacher_ratio_about_4x(self):
        teacher = arch_shape(TEACHER_ARCH, obs_len=291, action_len=29)
        student = arch_shape(STUDENT_ARCH, obs_len=324, action_len=29)
        assert student.per_layer_params / teacher.per_layer_params == pytest.approx(4.0, rel=0.01)

    def test_token_partition_contiguous_balanced(self):
        shape = arch_shape(TEACHER_ARCH, obs_len=291, action_len=29)
        assert sum(shape.token_sizes) == 291
        assert max(shape.token_sizes) - min(shape.token_sizes) <= 1
        assert shape.token_offsets == (0, 73, 146, 219)

    def test_obs_shorter_than_tokens(self):
        with pytest.raises(ConfigError):
            arch_shape(TEACHER_ARCH, obs_len=3, action_len=29)

    def test_total_count_composition(self):
        spec = ArchSpec(d_model=8, d_ff=16, n_heads=2, n_tokens=2, n_layers=3, head_out_dim=5)
        shape = arch_shape(spec, obs_len=10, action_len=5)
        input_proj = 10 * 8 + 2 * 8
        per_layer = 4 * 64 + 4 * 8 + 2 * 8 * 16 + 8 + 16 + 4 * 8
        head = 8 * 5 + 5
        assert shape.parameter_count == input_proj + 3 * per_layer + head


class TestSystemConfig:
    def test_default_matches_reward_table(self):
        doc = default_system_config()
        assert doc["reward"]["weights"] == DEFAULT_REWARD_WEIGHTS

    def test_default_matches_dr_table(self):
        dr = default_system_config()["domain_randomization"]
        assert dr["action_delay_s"] == [0.0, 0.02]
        assert dr["friction"] == [0.3, 2.0]
        assert dr["armature_scale"] == [0.995, 1.015]

    def test_arch_defaults(self):
        arch = default_system_config()["arch"]
        assert (arch["teacher"]["d_model"], arch["teacher"]["d_ff"]) == (256, 512)
        assert (arch["student"]["d_model"], arch["student"]["d_ff"]) == (512, 1024)
        assert arch["teacher"]["n_tokens"] == 4
        assert arch["student"]["n_tokens"] == 2
        assert arch["teacher"]["n_heads"] == arch["student"]["n_heads"] == 4
