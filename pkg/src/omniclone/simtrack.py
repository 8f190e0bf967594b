"""Policy-side machinery without the learned network: observation builders,
reward evaluation, domain-randomization sampling, deterministic oracle
trackers, and a transformer shape/parameter audit.

Every observed quantity is expressed in the robot's local base frame, so
observation vectors are invariant to planar translations and yaw applied
jointly to state and reference.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, InputError
from .kinematics import (
    GRAVITY,
    HumanoidModel,
    RigidPose,
    forward_kinematics_arrays,
    to_base_point,
    to_base_quat,
    to_base_vector,
)
from .motion import Frame, MotionClip, derive_body_kinematics, derive_joint_velocities
from .rotations import quat_angle, quat_conjugate, quat_mul, quat_rotate_inverse

DEFAULT_FUTURE_WINDOW = 5  # f: queue depth and future-window length share one knob


# ---------------------------------------------------------------------------
# Robot state
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RobotState:
    """Proprioceptive snapshot. root_ang_vel is base-frame; body poses and
    velocities are world-frame per key body."""

    root: RigidPose
    root_ang_vel: np.ndarray  # (3,) base frame
    joint_pos: np.ndarray  # (n,)
    joint_vel: np.ndarray  # (n,)
    body_pos: np.ndarray  # (K, 3)
    body_quat: np.ndarray  # (K, 4)
    body_lin_vel: np.ndarray  # (K, 3)
    body_ang_vel: np.ndarray  # (K, 3)
    last_action: np.ndarray  # (n,)
    gravity_world: np.ndarray = field(default_factory=lambda: GRAVITY.copy())
    joint_acc: np.ndarray | None = None  # (n,), zeros when unavailable

    def __post_init__(self):
        n = self.joint_pos.shape[0]
        k = self.body_pos.shape[0]
        checks = {
            "root_ang_vel": ((3,), self.root_ang_vel),
            "joint_pos": ((n,), self.joint_pos),
            "joint_vel": ((n,), self.joint_vel),
            "body_pos": ((k, 3), self.body_pos),
            "body_quat": ((k, 4), self.body_quat),
            "body_lin_vel": ((k, 3), self.body_lin_vel),
            "body_ang_vel": ((k, 3), self.body_ang_vel),
            "last_action": ((n,), self.last_action),
            "gravity_world": ((3,), self.gravity_world),
        }
        for name, (shape, val) in checks.items():
            arr = np.asarray(val, dtype=float)
            if arr.shape != shape:
                raise InputError(f"{name}: expected shape {shape}, got {arr.shape}")
            object.__setattr__(self, name, arr)
        if self.joint_acc is None:
            object.__setattr__(self, "joint_acc", np.zeros(n))
        else:
            acc = np.asarray(self.joint_acc, dtype=float)
            if acc.shape != (n,):
                raise InputError(f"joint_acc: expected shape ({n},), got {acc.shape}")
            object.__setattr__(self, "joint_acc", acc)

    @property
    def n_joints(self) -> int:
        return self.joint_pos.shape[0]

    @property
    def n_bodies(self) -> int:
        return self.body_pos.shape[0]


def state_from_frame(
    frame: Frame,
    model: HumanoidModel,
    last_action: np.ndarray | None = None,
) -> RobotState:
    """Robot state that exactly realizes the given reference frame."""
    joint_vel = frame.joint_vel if frame.joint_vel is not None else np.zeros(model.n_joints)
    if frame.body_pos is not None and frame.body_quat is not None:
        body_pos, body_quat = frame.body_pos, frame.body_quat
    else:
        pos, quat = forward_kinematics_arrays(
            model, frame.joint_pos, frame.root.position, frame.root.orientation
        )
        idx = model.key_body_index
        body_pos, body_quat = pos[idx], quat[idx]
    k = body_pos.shape[0]
    body_lin = frame.body_lin_vel if frame.body_lin_vel is not None else np.zeros((k, 3))
    body_ang = frame.body_ang_vel if frame.body_ang_vel is not None else np.zeros((k, 3))
    return RobotState(
        root=frame.root,
        root_ang_vel=to_base_vector(frame.root, frame.root_ang_vel),
        joint_pos=frame.joint_pos,
        joint_vel=joint_vel,
        body_pos=body_pos,
        body_quat=body_quat,
        body_lin_vel=body_lin,
        body_ang_vel=body_ang,
        last_action=frame.joint_pos.copy() if last_action is None else last_action,
    )


# ---------------------------------------------------------------------------
# Observation builders
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ObservationVector:
    values: np.ndarray
    layout: tuple[tuple[str, int, int], ...]  # (name, offset, length)

    def __post_init__(self):
        total = sum(length for _, _, length in self.layout)
        if total != self.values.shape[0]:
            raise InputError(
                f"layout covers {total} values, vector has {self.values.shape[0]}"
            )

    def slice(self, name: str) -> np.ndarray:
        for entry, offset, length in self.layout:
            if entry == name:
                return self.values[offset : offset + length]
        raise KeyError(name)

    def layout_csv(self) -> str:
        lines = ["name,offset,length"]
        for name, offset, length in self.layout:
            lines.append(f"{name},{offset},{length}")
        return "\n".join(lines) + "\n"


def _assemble(blocks: Sequence[tuple[str, np.ndarray]]) -> ObservationVector:
    layout = []
    parts = []
    offset = 0
    for name, arr in blocks:
        flat = np.asarray(arr, dtype=float).ravel()
        layout.append((name, offset, flat.size))
        parts.append(flat)
        offset += flat.size
    return ObservationVector(np.concatenate(parts), tuple(layout))


def _ref_body_kinematics(
    ref: Frame, model: HumanoidModel
) -> tuple[np.ndarray, np.ndarray]:
    if ref.body_pos is not None and ref.body_quat is not None:
        return ref.body_pos, ref.body_quat
    pos, quat = forward_kinematics_arrays(
        model, ref.joint_pos, ref.root.position, ref.root.orientation
    )
    idx = model.key_body_index
    return pos[idx], quat[idx]


def build_teacher_obs(
    state: RobotState,
    ref: Frame,
    model: HumanoidModel,
    include_ref_joint_vel: bool = True,
) -> ObservationVector:
    """Privileged observation: full kinematic state plus one reference frame.

    Blocks, in order: joint positions/velocities; key-body positions,
    orientations, linear and angular velocities; gravity; root angular
    velocity; previous action; reference joint positions (and velocities);
    reference key-body positions and orientations. World-frame quantities
    are transformed into the current base frame.
    """
    if state.n_joints != model.n_joints or state.n_bodies != model.n_key_bodies:
        raise InputError("state dimensions do not match the model")
    if ref.joint_pos.shape[0] != model.n_joints:
        raise InputError("reference joint count does not match the model")
    root = state.root
    ref_body_pos, ref_body_quat = _ref_body_kinematics(ref, model)
    blocks = [
        ("joint_pos", state.joint_pos),
        ("joint_vel", state.joint_vel),
        ("body_pos", to_base_point(root, state.body_pos)),
        ("body_quat", to_base_quat(root, state.body_quat)),
        ("body_lin_vel", to_base_vector(root, state.body_lin_vel)),
        ("body_ang_vel", to_base_vector(root, state.body_ang_vel)),
        ("gravity", to_base_vector(root, state.gravity_world)),
        ("root_ang_vel", state.root_ang_vel),
        ("last_action", state.last_action),
        ("ref_joint_pos", ref.joint_pos),
    ]
    if include_ref_joint_vel:
        if ref.joint_vel is None:
            raise InputError(
                "reference frame lacks joint velocities; derive them or disable include_ref_joint_vel"
            )
        blocks.append(("ref_joint_vel", ref.joint_vel))
    blocks.append(("ref_body_pos", to_base_point(root, ref_body_pos)))
    blocks.append(("ref_body_quat", to_base_quat(root, ref_body_quat)))
    return _assemble(blocks)


def build_student_obs(
    state: RobotState,
    ref_window: Sequence[Frame],
    model: HumanoidModel,
    future_window: int = DEFAULT_FUTURE_WINDOW,
) -> ObservationVector:
    """Deployable observation: proprioception that is reliable on hardware
    plus a window of future reference commands.

    Per window frame: key-body positions and orientations plus the root
    linear velocity, all in the current base frame; per-link angular
    velocities are deliberately excluded. The reference slice length is
    f * (7K + 3).
    """
    if state.n_joints != model.n_joints or state.n_bodies != model.n_key_bodies:
        raise InputError("state dimensions do not match the model")
    if len(ref_window) != future_window:
        raise InputError(
            f"reference window has {len(ref_window)} frames, expected {future_window}"
            " (pad upstream via zero-order hold, never here)"
        )
    root = state.root
    blocks = [
        ("joint_pos", state.joint_pos),
        ("gravity", to_base_vector(root, state.gravity_world)),
        ("root_ang_vel", state.root_ang_vel),
        ("last_action", state.last_action),
    ]
    for i, ref in enumerate(ref_window):
        ref_body_pos, ref_body_quat = _ref_body_kinematics(ref, model)
        blocks.append((f"ref{i}_body_pos", to_base_point(root, ref_body_pos)))
        blocks.append((f"ref{i}_body_quat", to_base_quat(root, ref_body_quat)))
        blocks.append((f"ref{i}_root_lin_vel", to_base_vector(root, ref.root_lin_vel)))
    return _assemble(blocks)


def teacher_obs_length(model: HumanoidModel, include_ref_joint_vel: bool = True) -> int:
    n, k = model.n_joints, model.n_key_bodies
    return 2 * n + 13 * k + 3 + 3 + n + n * (2 if include_ref_joint_vel else 1) + 7 * k


def student_obs_length(model: HumanoidModel, future_window: int = DEFAULT_FUTURE_WINDOW) -> int:
    n, k = model.n_joints, model.n_key_bodies
    return n + 3 + 3 + n + future_window * (7 * k + 3)


# ---------------------------------------------------------------------------
# Reward
# ---------------------------------------------------------------------------

TRACKING_TERMS = (
    "torso_global_pos",
    "torso_global_rot",
    "fullbody_global_lin_vel",
    "fullbody_global_ang_vel",
    "fullbody_relative_pos",
    "fullbody_relative_rot",
    "ee_relative_pos",
    "ee_relative_rot",
    "ee_relative_lin_vel",
    "ee_relative_ang_vel",
)

PENALTY_TERMS = (
    "action_rate",
    "contact_air_time",
    "joint_acceleration",
    "joint_position_limits",
    "velocity_action_limits",
)

DEFAULT_REWARD_WEIGHTS: dict[str, float] = {
    "action_rate": -8.0,
    "contact_air_time": -100.0,
    "joint_acceleration": -1.0e-7,
    "joint_position_limits": -10.0,
    "velocity_action_limits": -1.0,
    "torso_global_pos": 0.5,
    "torso_global_rot": 0.5,
    "fullbody_global_lin_vel": 1.0,
    "fullbody_global_ang_vel": 1.0,
    "fullbody_relative_pos": 1.0,
    "fullbody_relative_rot": 1.0,
    "ee_relative_pos": 0.5,
    "ee_relative_rot": 0.5,
    "ee_relative_lin_vel": 0.5,
    "ee_relative_ang_vel": 0.5,
}

DEFAULT_END_EFFECTORS = (
    "left_wrist_yaw_link",
    "right_wrist_yaw_link",
    "left_ankle_roll_link",
    "right_ankle_roll_link",
)

DEFAULT_FEET = ("left_ankle_roll_link", "right_ankle_roll_link")


@dataclass(frozen=True)
class RewardConfig:
    """Weights and kernel widths; defaults reproduce the shipped tables.

    Tracking terms score w * exp(-sigma * e^2); grouped table rows apply
    their weight to each listed sub-term. Contact air time is approximated
    by a foot-height disagreement indicator (no contact simulation here).
    """

    weights: Mapping[str, float] = field(
        default_factory=lambda: dict(DEFAULT_REWARD_WEIGHTS)
    )
    sigmas: Mapping[str, float] = field(
        default_factory=lambda: {term: 1.0 for term in TRACKING_TERMS}
    )
    joint_vel_limit: float = 20.0
    air_time_height_tol: float = 0.1
    torso_body: str = "torso"
    end_effectors: tuple[str, ...] = DEFAULT_END_EFFECTORS
    feet: tuple[str, ...] = DEFAULT_FEET

    def __post_init__(self):
        unknown = set(self.weights) - set(TRACKING_TERMS) - set(PENALTY_TERMS)
        if unknown:
            raise ConfigError(f"unknown reward terms: {sorted(unknown)}")
        for term in TRACKING_TERMS + PENALTY_TERMS:
            if term not in self.weights:
                raise ConfigError(f"missing weight for reward term {term!r}")


@dataclass(frozen=True)
class RewardResult:
    total: float
    terms: Mapping[str, float]


def _overshoot(values: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> float:
    return float(np.sum(np.maximum(0.0, values - hi) + np.maximum(0.0, lo - values)))


def reward(
    state: RobotState,
    ref: Frame,
    action: np.ndarray,
    prev_action: np.ndarray,
    model: HumanoidModel,
    config: RewardConfig | None = None,
) -> RewardResult:
    """Weighted sum of exponential tracking kernels and penalties.

    Reference body velocities default to zero when the frame does not
    carry them, so a static reference scores exactly against a static
    state.
    """
    if config is None:
        config = RewardConfig()
    action = np.asarray(action, dtype=float)
    prev_action = np.asarray(prev_action, dtype=float)
    n = model.n_joints
    if action.shape != (n,) or prev_action.shape != (n,):
        raise InputError("action vectors must have one entry per joint")
    slots = {body: i for i, body in enumerate(model.key_bodies)}
    try:
        torso = slots[config.torso_body]
    except KeyError:
        raise ConfigError(f"torso body {config.torso_body!r} is not a key body") from None
    unknown_ee = [b for b in config.end_effectors if b not in slots]
    if unknown_ee:
        raise ConfigError(f"unknown end-effector names: {unknown_ee}")
    unknown_feet = [b for b in config.feet if b not in slots]
    if unknown_feet:
        raise ConfigError(f"unknown foot names: {unknown_feet}")
    ee = np.array([slots[b] for b in config.end_effectors])
    feet = np.array([slots[b] for b in config.feet])

    ref_body_pos, ref_body_quat = _ref_body_kinematics(ref, model)
    k = model.n_key_bodies
    ref_body_lin = ref.body_lin_vel if ref.body_lin_vel is not None else np.zeros((k, 3))
    ref_body_ang = ref.body_ang_vel if ref.body_ang_vel is not None else np.zeros((k, 3))

    root, ref_root = state.root, ref.root
    local_pos = to_base_point(root, state.body_pos)
    local_ref_pos = to_base_point(ref_root, ref_body_pos)
    rel_rot_err = quat_angle(
        quat_mul(quat_conjugate(root.orientation), state.body_quat),
        quat_mul(quat_conjugate(ref_root.orientation), ref_body_quat),
    )
    local_lin = quat_rotate_inverse(root.orientation, state.body_lin_vel)
    local_ref_lin = quat_rotate_inverse(ref_root.orientation, ref_body_lin)
    local_ang = quat_rotate_inverse(root.orientation, state.body_ang_vel)
    local_ref_ang = quat_rotate_inverse(ref_root.orientation, ref_body_ang)

    errors2 = {
        "torso_global_pos": float(
            np.sum((state.body_pos[torso] - ref_body_pos[torso]) ** 2)
        ),
        "torso_global_rot": float(
            quat_angle(state.body_quat[torso], ref_body_quat[torso]) ** 2
        ),
        "fullbody_global_lin_vel": float(
            np.mean(np.sum((state.body_lin_vel - ref_body_lin) ** 2, axis=1))
        ),
        "fullbody_global_ang_vel": float(
            np.mean(np.sum((state.body_ang_vel - ref_body_ang) ** 2, axis=1))
        ),
        "fullbody_relative_pos": float(
            np.mean(np.sum((local_pos - local_ref_pos) ** 2, axis=1))
        ),
        "fullbody_relative_rot": float(np.mean(rel_rot_err**2)),
        "ee_relative_pos": float(
            np.mean(np.sum((local_pos[ee] - local_ref_pos[ee]) ** 2, axis=1))
        ),
        "ee_relative_rot": float(np.mean(rel_rot_err[ee] ** 2)),
        "ee_relative_lin_vel": float(
            np.mean(np.sum((local_lin[ee] - local_ref_lin[ee]) ** 2, axis=1))
        ),
        "ee_relative_ang_vel": float(
            np.mean(np.sum((local_ang[ee] - local_ref_ang[ee]) ** 2, axis=1))
        ),
    }

    lo, hi = model.joint_limits[:, 0], model.joint_limits[:, 1]
    air_violation = float(
        np.any(
            np.abs(state.body_pos[feet, 2] - ref_body_pos[feet, 2])
            > config.air_time_height_tol
        )
    )
    magnitudes = {
        "action_rate": float(np.sum((action - prev_action) ** 2)),
        "joint_acceleration": float(np.sum(state.joint_acc**2)),
        "joint_position_limits": _overshoot(state.joint_pos, lo, hi),
        "velocity_action_limits": float(
            np.sum(np.maximum(0.0, np.abs(state.joint_vel) - config.joint_vel_limit))
        )
        + _overshoot(action, lo, hi),
        "contact_air_time": air_violation,
    }

    terms: dict[str, float] = {}
    for term in TRACKING_TERMS:
        terms[term] = config.weights[term] * float(
            np.exp(-config.sigmas[term] * errors2[term])
        )
    for term in PENALTY_TERMS:
        terms[term] = config.weights[term] * magnitudes[term]
    return RewardResult(total=float(sum(terms.values())), terms=terms)


# ---------------------------------------------------------------------------
# Domain randomization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DRRanges:
    """Sampling ranges; defaults reproduce the shipped randomization table."""

    action_delay_s: tuple[float, float] = (0.0, 0.02)
    action_noise_rad: tuple[float, float] = (0.0, 0.02)
    link_mass_scale: tuple[float, float] = (0.9, 1.1)
    mass_links: tuple[str, ...] = ("torso", "shoulder_yaw")
    torso_com_x_m: tuple[float, float] = (-0.075, 0.075)
    torso_com_yz_m: tuple[float, float] = (-0.1, 0.1)
    torque_rfi_fraction: float = 0.02
    friction: tuple[float, float] = (0.3, 2.0)
    friction_joints: tuple[str, ...] = ("ankle_roll", "pelvis", "hip_roll", "knee", "elbow")
    stiffness_scale: tuple[float, float] = (0.95, 1.05)
    damping_scale: tuple[float, float] = (0.95, 1.05)
    armature_scale: tuple[float, float] = (0.995, 1.015)


@dataclass(frozen=True)
class DRConfig:
    action_delay_s: float
    action_noise_rad: float
    link_mass_scale: Mapping[str, float]
    torso_com_offset_m: tuple[float, float, float]
    torque_rfi_fraction: float
    static_friction: Mapping[str, float]
    dynamic_friction: Mapping[str, float]
    stiffness_scale: float
    damping_scale: float
    armature_scale: float

    def validate(self, ranges: DRRanges | None = None) -> None:
        r = ranges or DRRanges()

        def inside(value, band, name):
            if not band[0] <= value <= band[1]:
                raise ConfigError(f"{name}={value} outside {band}")

        inside(self.action_delay_s, r.action_delay_s, "action_delay_s")
        inside(self.action_noise_rad, r.action_noise_rad, "action_noise_rad")
        for label, scale in self.link_mass_scale.items():
            inside(scale, r.link_mass_scale, f"link_mass_scale[{label}]")
        inside(self.torso_com_offset_m[0], r.torso_com_x_m, "torso_com_offset_m[x]")
        inside(self.torso_com_offset_m[1], r.torso_com_yz_m, "torso_com_offset_m[y]")
        inside(self.torso_com_offset_m[2], r.torso_com_yz_m, "torso_com_offset_m[z]")
        if self.torque_rfi_fraction != r.torque_rfi_fraction:
            raise ConfigError("torque_rfi_fraction is fixed at the table value")
        for label, mu in self.static_friction.items():
            inside(mu, r.friction, f"static_friction[{label}]")
        for label, mu in self.dynamic_friction.items():
            inside(mu, r.friction, f"dynamic_friction[{label}]")
        inside(self.stiffness_scale, r.stiffness_scale, "stiffness_scale")
        inside(self.damping_scale, r.damping_scale, "damping_scale")
        inside(self.armature_scale, r.armature_scale, "armature_scale")


def dr_config_to_dict(cfg: DRConfig) -> dict:
    return {
        "action_delay_s": cfg.action_delay_s,
        "action_noise_rad": cfg.action_noise_rad,
        "link_mass_scale": dict(cfg.link_mass_scale),
        "torso_com_offset_m": list(cfg.torso_com_offset_m),
        "torque_rfi_fraction": cfg.torque_rfi_fraction,
        "static_friction": dict(cfg.static_friction),
        "dynamic_friction": dict(cfg.dynamic_friction),
        "stiffness_scale": cfg.stiffness_scale,
        "damping_scale": cfg.damping_scale,
        "armature_scale": cfg.armature_scale,
    }


def dr_config_from_dict(doc: Mapping) -> DRConfig:
    return DRConfig(
        action_delay_s=float(doc["action_delay_s"]),
        action_noise_rad=float(doc["action_noise_rad"]),
        link_mass_scale=dict(doc["link_mass_scale"]),
        torso_com_offset_m=tuple(float(v) for v in doc["torso_com_offset_m"]),
        torque_rfi_fraction=float(doc["torque_rfi_fraction"]),
        static_friction=dict(doc["static_friction"]),
        dynamic_friction=dict(doc["dynamic_friction"]),
        stiffness_scale=float(doc["stiffness_scale"]),
        damping_scale=float(doc["damping_scale"]),
        armature_scale=float(doc["armature_scale"]),
    )


def sample_dr(
    seed: int | np.random.Generator, ranges: DRRanges | None = None
) -> DRConfig:
    """Uniform sample of every randomized field, in table order.

    Only the pd oracle tracker consumes action_delay and action_noise;
    the physical fields are sampled, validated, and serialized but not
    simulated (there is no physics engine at desk scale).
    """
    r = ranges or DRRanges()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    u = lambda band: float(rng.uniform(*band))
    return DRConfig(
        action_delay_s=u(r.action_delay_s),
        action_noise_rad=u(r.action_noise_rad),
        link_mass_scale={label: u(r.link_mass_scale) for label in r.mass_links},
        torso_com_offset_m=(u(r.torso_com_x_m), u(r.torso_com_yz_m), u(r.torso_com_yz_m)),
        torque_rfi_fraction=r.torque_rfi_fraction,
        static_friction={label: u(r.friction) for label in r.friction_joints},
        dynamic_friction={label: u(r.friction) for label in r.friction_joints},
        stiffness_scale=u(r.stiffness_scale),
        damping_scale=u(r.damping_scale),
        armature_scale=u(r.armature_scale),
    )


# ---------------------------------------------------------------------------
# Oracle trackers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrackerSpec:
    """Deterministic stand-in for the learned tracking policy."""

    mode: str  # perfect | lag | noise | pd
    lag: int = 0
    noise_std: float = 0.0
    kp: float = 0.0
    kd: float = 0.0
    dt: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("perfect", "lag", "noise", "pd"):
            raise ConfigError(f"unknown tracker mode {self.mode!r}")
        if self.mode == "lag" and self.lag < 0:
            raise ConfigError("lag must be >= 0")
        if self.mode == "noise" and self.noise_std < 0:
            raise ConfigError("noise std must be >= 0")
        if self.mode == "pd" and self.kp <= 0:
            raise ConfigError("pd tracker requires kp > 0")


def parse_tracker(text: str) -> TrackerSpec:
    """Parse CLI tracker specs: perfect|oracle, lag:k, noise:sigma,
    pd:kp,kd[,dt]."""
    head, _, rest = text.partition(":")
    head = head.strip().lower()
    if head in ("perfect", "oracle"):
        return TrackerSpec(mode="perfect")
    if head == "lag":
        return TrackerSpec(mode="lag", lag=int(rest))
    if head == "noise":
        return TrackerSpec(mode="noise", noise_std=float(rest))
    if head == "pd":
        parts = [p for p in rest.split(",") if p]
        if len(parts) not in (2, 3):
            raise ConfigError("pd tracker spec is pd:kp,kd[,dt]")
        kp, kd = float(parts[0]), float(parts[1])
        dt = float(parts[2]) if len(parts) == 3 else None
        return TrackerSpec(mode="pd", kp=kp, kd=kd, dt=dt)
    raise ConfigError(f"unknown tracker {text!r}")


def track_clip(
    spec: TrackerSpec,
    clip: MotionClip,
    model: HumanoidModel,
    dr: DRConfig | None = None,
) -> list[RobotState]:
    """One state per clip frame under the configured tracking behaviour.

    perfect replays the reference exactly; lag:k replays frame
    max(0, t - k); noise adds seeded zero-mean joint noise (bodies
    recomputed through FK); pd integrates a per-joint double integrator
    with semi-implicit Euler while the root is replayed kinematically.
    The pd mode consumes action delay/noise from a DRConfig when given.
    """
    clip = derive_joint_velocities(clip)
    clip = derive_body_kinematics(clip, model)
    frames = clip.frames
    T = len(frames)
    n = model.n_joints

    if spec.mode in ("perfect", "lag"):
        k = spec.lag if spec.mode == "lag" else 0
        states = []
        for t in range(T):
            src = frames[max(0, t - k)]
            states.append(state_from_frame(src, model))
        return states

    if spec.mode == "noise":
        rng = np.random.default_rng(spec.seed)
        joint_pos = clip.joint_pos_array() + rng.normal(0.0, spec.noise_std, (T, n))
        root_pos = clip.root_pos_array()
        root_quat = clip.root_quat_array()
        pos, quat = forward_kinematics_arrays(model, joint_pos, root_pos, root_quat)
        idx = model.key_body_index
        states = []
        for t in range(T):
            base = state_from_frame(frames[t], model)
            states.append(
                replace(
                    base,
                    joint_pos=joint_pos[t],
                    body_pos=pos[t, idx],
                    body_quat=quat[t, idx],
                    last_action=joint_pos[t].copy(),
                )
            )
        return states

    # pd double integrator
    dt = spec.dt if spec.dt is not None else 1.0 / clip.fps
    steps_per_tick = max(1, round((1.0 / clip.fps) / dt))
    delay_ticks = 0
    noise_amp = 0.0
    rng = np.random.default_rng(spec.seed)
    if dr is not None:
        delay_ticks = int(round(dr.action_delay_s * clip.fps))
        noise_amp = dr.action_noise_rad
    targets = clip.joint_pos_array()
    q = targets[0].copy()
    v = np.zeros(n)
    joint_pos = np.empty((T, n))
    joint_vel = np.empty((T, n))
    for t in range(T):
        target = targets[max(0, t - delay_ticks)]
        if noise_amp > 0.0:
            target = target + rng.uniform(-noise_amp, noise_amp, n)
        for _ in range(steps_per_tick):
            acc = spec.kp * (target - q) - spec.kd * v
            v = v + dt * acc
            q = q + dt * v
        joint_pos[t] = q
        joint_vel[t] = v
    pos, quat = forward_kinematics_arrays(
        model, joint_pos, clip.root_pos_array(), clip.root_quat_array()
    )
    idx = model.key_body_index
    states = []
    for t in range(T):
        base = state_from_frame(frames[t], model)
        states.append(
            replace(
                base,
                joint_pos=joint_pos[t],
                joint_vel=joint_vel[t],
                body_pos=pos[t, idx],
                body_quat=quat[t, idx],
                last_action=targets[max(0, t - delay_ticks)].copy(),
            )
        )
    return states


# ---------------------------------------------------------------------------
# Architecture shape audit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ArchSpec:
    d_model: int
    d_ff: int
    n_heads: int
    n_tokens: int
    n_layers: int
    head_out_dim: int | None = None

    def __post_init__(self):
        for name in ("d_model", "d_ff", "n_heads", "n_tokens", "n_layers"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.d_model % self.n_heads != 0:
            raise ConfigError(
                f"d_model={self.d_model} not divisible by n_heads={self.n_heads}"
            )


TEACHER_ARCH = ArchSpec(d_model=256, d_ff=512, n_heads=4, n_tokens=4, n_layers=4)
STUDENT_ARCH = ArchSpec(d_model=512, d_ff=1024, n_heads=4, n_tokens=2, n_layers=4)


@dataclass(frozen=True)
class ArchShape:
    token_sizes: tuple[int, ...]
    token_offsets: tuple[int, ...]
    input_projection_params: int
    attention_params_per_layer: int
    ffn_params_per_layer: int
    norm_params_per_layer: int
    per_layer_params: int
    head_params: int
    parameter_count: int


def arch_shape(spec: ArchSpec, obs_len: int, action_len: int) -> ArchShape:
    """Shape/parameter audit; no network is executed.

    The observation is split into n_tokens contiguous slices whose sizes
    differ by at most one. Per layer: 4*d^2 + 4*d attention projections
    with bias, 2*d*d_ff + d + d_ff feed-forward, and 4*d for the two
    normalizations.
    """
    if obs_len < spec.n_tokens:
        raise ConfigError(f"obs_len={obs_len} shorter than n_tokens={spec.n_tokens}")
    base, rem = divmod(obs_len, spec.n_tokens)
    sizes = tuple(base + 1 if i < rem else base for i in range(spec.n_tokens))
    offsets = tuple(int(x) for x in np.concatenate([[0], np.cumsum(sizes)[:-1]]))
    d, dff = spec.d_model, spec.d_ff
    attention = 4 * d * d + 4 * d
    ffn = 2 * d * dff + d + dff
    norms = 4 * d
    per_layer = attention + ffn + norms
    input_proj = sum(sizes) * d + spec.n_tokens * d
    head_out = spec.head_out_dim if spec.head_out_dim is not None else action_len
    head = d * head_out + head_out
    total = input_proj + spec.n_layers * per_layer + head
    return ArchShape(
        token_sizes=sizes,
        token_offsets=offsets,
        input_projection_params=input_proj,
        attention_params_per_layer=attention,
        ffn_params_per_layer=ffn,
        norm_params_per_layer=norms,
        per_layer_params=per_layer,
        head_params=head,
        parameter_count=total,
    )


# ---------------------------------------------------------------------------
# System configuration file
# ---------------------------------------------------------------------------

def default_system_config() -> dict:
    """Config document whose values reproduce the shipped tables verbatim."""
    r = DRRanges()
    return {
        "reward": {
            "weights": dict(DEFAULT_REWARD_WEIGHTS),
            "sigmas": {term: 1.0 for term in TRACKING_TERMS},
            "joint_vel_limit": 20.0,
            "air_time_height_tol": 0.1,
            "torso_body": "torso",
            "end_effectors": list(DEFAULT_END_EFFECTORS),
            "feet": list(DEFAULT_FEET),
        },
        "domain_randomization": {
            "action_delay_s": list(r.action_delay_s),
            "action_noise_rad": list(r.action_noise_rad),
            "link_mass_scale": list(r.link_mass_scale),
            "mass_links": list(r.mass_links),
            "torso_com_x_m": list(r.torso_com_x_m),
            "torso_com_yz_m": list(r.torso_com_yz_m),
            "torque_rfi_fraction": r.torque_rfi_fraction,
            "friction": list(r.friction),
            "friction_joints": list(r.friction_joints),
            "stiffness_scale": list(r.stiffness_scale),
            "damping_scale": list(r.damping_scale),
            "armature_scale": list(r.armature_scale),
        },
        "arch": {
            "teacher": {
                "d_model": TEACHER_ARCH.d_model,
                "d_ff": TEACHER_ARCH.d_ff,
                "n_heads": TEACHER_ARCH.n_heads,
                "n_tokens": TEACHER_ARCH.n_tokens,
                "n_layers": TEACHER_ARCH.n_layers,
            },
            "student": {
                "d_model": STUDENT_ARCH.d_model,
                "d_ff": STUDENT_ARCH.d_ff,
                "n_heads": STUDENT_ARCH.n_heads,
                "n_tokens": STUDENT_ARCH.n_tokens,
                "n_layers": STUDENT_ARCH.n_layers,
            },
        },
        "observation": {
            "include_ref_joint_vel": True,
            "future_window": DEFAULT_FUTURE_WINDOW,
        },
    }


def reward_config_from_dict(doc: Mapping) -> RewardConfig:
    return RewardConfig(
        weights=dict(doc.get("weights", DEFAULT_REWARD_WEIGHTS)),
        sigmas=dict(doc.get("sigmas", {t: 1.0 for t in TRACKING_TERMS})),
        joint_vel_limit=float(doc.get("joint_vel_limit", 20.0)),
        air_time_height_tol=float(doc.get("air_time_height_tol", 0.1)),
        torso_body=str(doc.get("torso_body", "torso")),
        end_effectors=tuple(doc.get("end_effectors", DEFAULT_END_EFFECTORS)),
        feet=tuple(doc.get("feet", DEFAULT_FEET)),
    )


def dr_ranges_from_dict(doc: Mapping) -> DRRanges:
    def band(key, default):
        return tuple(float(v) for v in doc.get(key, default))

    d = DRRanges()
    return DRRanges(
        action_delay_s=band("action_delay_s", d.action_delay_s),
        action_noise_rad=band("action_noise_rad", d.action_noise_rad),
        link_mass_scale=band("link_mass_scale", d.link_mass_scale),
        mass_links=tuple(doc.get("mass_links", d.mass_links)),
        torso_com_x_m=band("torso_com_x_m", d.torso_com_x_m),
        torso_com_yz_m=band("torso_com_yz_m", d.torso_com_yz_m),
        torque_rfi_fraction=float(doc.get("torque_rfi_fraction", d.torque_rfi_fraction)),
        friction=band("friction", d.friction),
        friction_joints=tuple(doc.get("friction_joints", d.friction_joints)),
        stiffness_scale=band("stiffness_scale", d.stiffness_scale),
        damping_scale=band("damping_scale", d.damping_scale),
        armature_scale=band("armature_scale", d.armature_scale),
    )


def arch_spec_from_dict(doc: Mapping) -> ArchSpec:
    return ArchSpec(
        d_model=int(doc["d_model"]),
        d_ff=int(doc["d_ff"]),
        n_heads=int(doc["n_heads"]),
        n_tokens=int(doc["n_tokens"]),
        n_layers=int(doc["n_layers"]),
        head_out_dim=doc.get("head_out_dim"),
    )


def load_system_config(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def save_system_config(doc: Mapping, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
