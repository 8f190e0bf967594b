"""Synthetic reference clips: deterministic generators for benchmark
suites, streaming demos, and tests."""
from __future__ import annotations

import numpy as np

from .kinematics import HumanoidModel, RigidPose
from .motion import BENCH_STRATA, Frame, MotionClip, derive_body_kinematics
from .rotations import IDENTITY_QUAT, quat_from_yaw

DEFAULT_ROOT_Z = 0.75

#: per-stratum planar speeds (m/s) for constant-velocity suites; kept below
#: 1.5 so lagged trackers stay inside the default failure thresholds
SUITE_SPEEDS: dict[tuple[str, str], float] = {
    ("loco_manip", "high"): 0.6,
    ("loco_manip", "medium"): 0.8,
    ("loco_manip", "low"): 1.0,
    ("manip", "high"): 0.4,
    ("manip", "medium"): 0.5,
    ("manip", "low"): 0.6,
    ("squat", "high"): 0.4,
    ("squat", "medium"): 0.5,
    ("squat", "low"): 0.6,
    ("walk", "fast"): 1.4,
    ("walk", "medium_speed"): 1.1,
    ("walk", "slow"): 0.8,
    ("run", "fast"): 1.4,
    ("run", "medium_speed"): 1.2,
    ("run", "slow"): 1.0,
    ("jump", "high"): 0.9,
    ("jump", "medium"): 0.7,
    ("jump", "low"): 0.5,
}


def constant_velocity_clip(
    model: HumanoidModel,
    speed: float,
    n_frames: int = 90,
    fps: float = 30.0,
    heading: float = 0.0,
    root_z: float = DEFAULT_ROOT_Z,
    name: str = "line",
    category: str = "walk",
    level: str = "slow",
    joint_pose: np.ndarray | None = None,
    with_bodies: bool = True,
) -> MotionClip:
    """Root translates at a constant planar velocity; joints are static."""
    n = model.n_joints
    q = np.zeros(n) if joint_pose is None else np.asarray(joint_pose, dtype=float)
    direction = np.array([np.cos(heading), np.sin(heading), 0.0])
    vel = speed * direction
    quat = quat_from_yaw(heading)
    frames = []
    for i in range(n_frames):
        t = i / fps
        frames.append(
            Frame(
                t=t,
                root=RigidPose(np.array([0.0, 0.0, root_z]) + vel * t, quat),
                root_lin_vel=vel.copy(),
                root_ang_vel=np.zeros(3),
                joint_pos=q.copy(),
                joint_vel=np.zeros(n),
            )
        )
    clip = MotionClip(
        name=name,
        fps=fps,
        category=category,
        level=level,
        frames=tuple(frames),
        dof_names=model.joint_names,
        key_bodies=model.key_bodies,
    )
    return derive_body_kinematics(clip, model) if with_bodies else clip


def static_clip(
    model: HumanoidModel,
    n_frames: int = 90,
    fps: float = 30.0,
    root_z: float = DEFAULT_ROOT_Z,
    name: str = "static",
    category: str = "manip",
    level: str = "medium",
    joint_pose: np.ndarray | None = None,
) -> MotionClip:
    return constant_velocity_clip(
        model,
        speed=0.0,
        n_frames=n_frames,
        fps=fps,
        root_z=root_z,
        name=name,
        category=category,
        level=level,
        joint_pose=joint_pose,
    )


def sine_joint_clip(
    model: HumanoidModel,
    joint: int = 0,
    amplitude: float = 1.0,
    frequency_hz: float = 1.0,
    n_frames: int = 90,
    fps: float = 30.0,
    name: str = "sine",
    with_joint_vel: bool = True,
) -> MotionClip:
    """One joint follows amplitude * sin(2 pi f t); everything else static."""
    n = model.n_joints
    omega = 2.0 * np.pi * frequency_hz
    frames = []
    for i in range(n_frames):
        t = i / fps
        q = np.zeros(n)
        q[joint] = amplitude * np.sin(omega * t)
        vel = None
        if with_joint_vel:
            vel = np.zeros(n)
            vel[joint] = amplitude * omega * np.cos(omega * t)
        frames.append(
            Frame(
                t=t,
                root=RigidPose(np.array([0.0, 0.0, DEFAULT_ROOT_Z]), IDENTITY_QUAT.copy()),
                root_lin_vel=np.zeros(3),
                root_ang_vel=np.zeros(3),
                joint_pos=q,
                joint_vel=vel,
            )
        )
    return MotionClip(
        name=name,
        fps=fps,
        category="other",
        level="none",
        frames=tuple(frames),
        dof_names=model.joint_names,
        key_bodies=model.key_bodies,
    )


def benchmark_suite(
    model: HumanoidModel,
    clips_per_stratum: int = 10,
    n_frames: int = 150,
    fps: float = 30.0,
    speeds: dict[tuple[str, str], float] | None = None,
) -> list[MotionClip]:
    """A full 6x3 suite of constant-velocity clips, one speed per stratum,
    headings staggered per clip so trajectories differ."""
    speeds = speeds or SUITE_SPEEDS
    clips = []
    for s_idx, (cat, lvl) in enumerate(BENCH_STRATA):
        v = speeds[(cat, lvl)]
        for i in range(clips_per_stratum):
            heading = 2.0 * np.pi * (i + s_idx / len(BENCH_STRATA)) / clips_per_stratum
            clips.append(
                constant_velocity_clip(
                    model,
                    speed=v,
                    n_frames=n_frames,
                    fps=fps,
                    heading=heading,
                    name=f"{cat}_{lvl}_{i:02d}",
                    category=cat,
                    level=lvl,
                )
            )
    return clips
