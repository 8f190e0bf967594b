"""Subject-agnostic retargeting: a single uniform scale estimated from one
calibration frame maps raw capture streams onto the humanoid morphology.

No per-operator parameters exist anywhere in this module; the calibration
frame itself is the only subject-specific input.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import CalibrationError, ClipParseError, InputError
from .kinematics import HumanoidModel, RigidPose, chain_height
from .motion import Frame, MotionClip

SCALE_SANITY_BAND = (0.3, 3.0)


@dataclass(frozen=True, eq=False)
class SubjectFrame:
    """One raw capture sample: named marker positions plus the subject root."""

    t: float
    root: RigidPose
    markers: Mapping[str, np.ndarray]
    marker_quats: Mapping[str, np.ndarray] = field(default_factory=dict)
    root_lin_vel: np.ndarray | None = None
    root_ang_vel: np.ndarray | None = None
    joint_pos: np.ndarray | None = None

    def __post_init__(self):
        markers = {
            name: np.asarray(p, dtype=float) for name, p in self.markers.items()
        }
        for name, p in markers.items():
            if p.shape != (3,) or not np.all(np.isfinite(p)):
                raise InputError(f"marker {name!r}: expected a finite 3-vector")
        object.__setattr__(self, "markers", markers)
        quats = {
            name: np.asarray(q, dtype=float) for name, q in self.marker_quats.items()
        }
        object.__setattr__(self, "marker_quats", quats)


@dataclass(frozen=True)
class CalibrationResult:
    scale: float
    subject_height_metric: float
    humanoid_height_metric: float
    key_body_mapping: Mapping[str, str]  # subject marker -> humanoid key body
    session_origin: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        expected = self.humanoid_height_metric / self.subject_height_metric
        if abs(self.scale - expected) > 1e-12 * max(1.0, abs(expected)):
            raise CalibrationError(
                f"scale {self.scale} inconsistent with metric ratio {expected}"
            )
        lo, hi = SCALE_SANITY_BAND
        if not lo <= self.scale <= hi:
            raise CalibrationError(
                f"scale {self.scale:.4f} outside sanity band [{lo}, {hi}]"
            )
        targets = list(self.key_body_mapping.values())
        if len(set(targets)) != len(targets):
            raise CalibrationError("key_body_mapping is not injective")


def _chain_markers(
    model: HumanoidModel, mapping: Mapping[str, str]
) -> list[str]:
    """Subject markers mapped onto the humanoid calibration-chain anchors."""
    inverse = {body: marker for marker, body in mapping.items()}
    markers = []
    for link in model.calibration_chain:
        if link not in inverse:
            raise CalibrationError(
                f"mapping has no subject marker for calibration link {link!r}"
            )
        markers.append(inverse[link])
    return markers


def calibrate(
    calibration_frame: SubjectFrame | None,
    humanoid: HumanoidModel,
    mapping: Mapping[str, str],
    subject_chain_lengths: Sequence[float] | None = None,
    calibration_pose: np.ndarray | None = None,
) -> CalibrationResult:
    """Estimate the session scale from a calibration frame.

    The subject height metric is the segment-length sum along the subject
    analogue of the humanoid calibration chain; the scale is the ratio of
    the two metrics. Pass subject_chain_lengths to skip marker geometry.
    """
    missing = [b for b in humanoid.key_bodies if b not in set(mapping.values())]
    if missing:
        raise CalibrationError(f"mapping does not cover key bodies: {missing}")
    targets = list(mapping.values())
    if len(set(targets)) != len(targets):
        raise CalibrationError("mapping is not injective")
    unknown = [b for b in targets if b not in humanoid.key_bodies]
    if unknown:
        raise CalibrationError(f"mapping targets outside the key-body set: {unknown}")
    if calibration_pose is None:
        calibration_pose = np.zeros(humanoid.n_joints)
    humanoid_metric = chain_height(humanoid, calibration_pose)
    if subject_chain_lengths is not None:
        subject_metric = float(np.sum(np.asarray(subject_chain_lengths, dtype=float)))
    else:
        if calibration_frame is None:
            raise CalibrationError(
                "need a calibration frame or explicit subject chain lengths"
            )
        chain = _chain_markers(humanoid, mapping)
        points = []
        for marker in chain:
            if marker not in calibration_frame.markers:
                raise CalibrationError(f"calibration frame is missing marker {marker!r}")
            points.append(calibration_frame.markers[marker])
        points = np.stack(points)
        subject_metric = float(np.sum(np.linalg.norm(np.diff(points, axis=0), axis=1)))
    if subject_metric < 1e-9:
        raise CalibrationError(f"degenerate subject height metric {subject_metric}")
    origin = (0.0, 0.0, 0.0)
    if calibration_frame is not None:
        x, y = calibration_frame.root.position[:2]
        origin = (float(x), float(y), 0.0)
    return CalibrationResult(
        scale=humanoid_metric / subject_metric,
        subject_height_metric=subject_metric,
        humanoid_height_metric=humanoid_metric,
        key_body_mapping=dict(mapping),
        session_origin=origin,
    )


def retarget_frame(
    raw: SubjectFrame,
    cal: CalibrationResult,
    model: HumanoidModel,
    previous: Frame | None = None,
) -> tuple[Frame, bool]:
    """Rescale one subject frame onto the humanoid.

    Positions are re-zeroed to the session origin (the calibration root's
    planar position, yaw preserved) and multiplied by the session scale;
    orientations pass through unchanged, linear velocities scale, angular
    velocities do not. Marker dropout substitutes the previous retargeted
    frame and flags the result held.
    """
    s = cal.scale
    origin = np.asarray(cal.session_origin)
    mapped = cal.key_body_mapping
    slot = {body: i for i, body in enumerate(model.key_bodies)}
    body_pos = np.zeros((len(slot), 3))
    body_quat = np.tile(np.array([1.0, 0.0, 0.0, 0.0]), (len(slot), 1))
    for marker, body in mapped.items():
        if marker not in raw.markers:
            if previous is None:
                raise InputError(
                    f"marker {marker!r} missing and no previous frame to hold"
                )
            return replace(previous, t=raw.t), True
        body_pos[slot[body]] = s * (raw.markers[marker] - origin)
        if marker in raw.marker_quats:
            body_quat[slot[body]] = raw.marker_quats[marker]
    root = RigidPose(s * (raw.root.position - origin), raw.root.orientation)
    n = model.n_joints
    joint_pos = raw.joint_pos if raw.joint_pos is not None else np.zeros(n)
    frame = Frame(
        t=raw.t,
        root=root,
        root_lin_vel=s * raw.root_lin_vel if raw.root_lin_vel is not None else np.zeros(3),
        root_ang_vel=raw.root_ang_vel if raw.root_ang_vel is not None else np.zeros(3),
        joint_pos=np.asarray(joint_pos, dtype=float),
        body_pos=body_pos,
        body_quat=body_quat,
    )
    return frame, False


def retarget_stream(
    frames: Sequence[SubjectFrame],
    cal: CalibrationResult,
    model: HumanoidModel,
) -> tuple[list[Frame], list[int]]:
    """Retarget a whole stream; returns the frames plus indices that were held."""
    out: list[Frame] = []
    held: list[int] = []
    prev: Frame | None = None
    for i, raw in enumerate(frames):
        frame, was_held = retarget_frame(raw, cal, model, previous=prev)
        if was_held:
            held.append(i)
        out.append(frame)
        prev = frame
    return out, held


def discrepancy_report(
    retargeted: Sequence[Frame], reference: Sequence[Frame]
) -> dict[str, float]:
    """Max/mean Euclidean key-body deviation between two equally long clips."""
    if len(retargeted) != len(reference):
        raise InputError(
            f"length mismatch: {len(retargeted)} retargeted vs {len(reference)} reference"
        )
    if not retargeted:
        raise InputError("empty clip")
    devs = []
    for a, b in zip(retargeted, reference):
        if a.body_pos is None or b.body_pos is None:
            raise InputError("discrepancy_report requires body positions on both sides")
        if a.body_pos.shape != b.body_pos.shape:
            raise InputError("key-body sets differ")
        devs.append(np.linalg.norm(a.body_pos - b.body_pos, axis=1))
    devs = np.stack(devs)
    return {
        "max_keybody_deviation_m": float(devs.max()),
        "mean_deviation_m": float(devs.mean()),
    }


# ---------------------------------------------------------------------------
# File formats: subject streams and marker-mapping tables
# ---------------------------------------------------------------------------

def subject_frame_from_dict(doc: Mapping, i: int = 0) -> SubjectFrame:
    try:
        root = RigidPose(
            np.asarray(doc["root_pos"], dtype=float),
            np.asarray(doc["root_quat"], dtype=float),
        )
        markers = {str(k): np.asarray(v, dtype=float) for k, v in doc["markers"].items()}
    except (KeyError, TypeError, InputError) as exc:
        raise ClipParseError(f"subject frames[{i}]: {exc}") from None
    quats = {
        str(k): np.asarray(v, dtype=float)
        for k, v in doc.get("marker_quats", {}).items()
    }
    opt = lambda key: (
        np.asarray(doc[key], dtype=float) if key in doc and doc[key] is not None else None
    )
    return SubjectFrame(
        t=float(doc.get("t", 0.0)),
        root=root,
        markers=markers,
        marker_quats=quats,
        root_lin_vel=opt("root_lin_vel"),
        root_ang_vel=opt("root_ang_vel"),
        joint_pos=opt("joint_pos"),
    )


def subject_frame_to_dict(frame: SubjectFrame) -> dict:
    doc = {
        "t": frame.t,
        "root_pos": frame.root.position.tolist(),
        "root_quat": frame.root.orientation.tolist(),
        "markers": {k: v.tolist() for k, v in frame.markers.items()},
    }
    if frame.marker_quats:
        doc["marker_quats"] = {k: v.tolist() for k, v in frame.marker_quats.items()}
    for key in ("root_lin_vel", "root_ang_vel", "joint_pos"):
        val = getattr(frame, key)
        if val is not None:
            doc[key] = np.asarray(val).tolist()
    return doc


def load_subject_frame(path) -> SubjectFrame:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ClipParseError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    return subject_frame_from_dict(doc)


def load_subject_stream(path) -> list[SubjectFrame]:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ClipParseError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    if "frames" not in doc:
        raise ClipParseError(f"{path}: missing 'frames'")
    return [subject_frame_from_dict(fd, i) for i, fd in enumerate(doc["frames"])]


def save_subject_stream(frames: Sequence[SubjectFrame], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"frames": [subject_frame_to_dict(f) for f in frames]}, fh, indent=1)
        fh.write("\n")


def load_mapping(path) -> dict[str, str]:
    """Two-column name table: `subject_marker humanoid_link`, # comments allowed."""
    mapping: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.replace(",", " ").split()
            if len(parts) != 2:
                raise ClipParseError(f"{path}: line {lineno}: expected two columns")
            mapping[parts[0]] = parts[1]
    return mapping


def save_mapping(mapping: Mapping[str, str], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for marker, body in mapping.items():
            fh.write(f"{marker} {body}\n")


def retargeted_clip(
    frames: Sequence[Frame],
    model: HumanoidModel,
    fps: float,
    name: str = "retargeted",
    category: str = "other",
    level: str = "none",
) -> MotionClip:
    return MotionClip(
        name=name,
        fps=fps,
        category=category,
        level=level,
        frames=tuple(frames),
        dof_names=model.joint_names,
        key_bodies=model.key_bodies,
    )
