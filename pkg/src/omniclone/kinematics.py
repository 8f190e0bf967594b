"""Humanoid morphology, forward kinematics, and base-frame transforms.

The kinematic model is a tree of links. Every link except the root is
attached to its parent through a fixed offset (translation + rotation)
followed by a revolute joint about a fixed axis. Links whose limits are
[0, 0] are fixed attachments and carry no actuated joint. The root link
is the floating base (pelvis for the bundled model).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, InputError, ClipParseError
from .rotations import (
    IDENTITY_QUAT,
    quat_canonical,
    quat_conjugate,
    quat_from_axis_angle,
    quat_mul,
    quat_rotate,
    quat_rotate_inverse,
)

GRAVITY = np.array([0.0, 0.0, -9.81])

_QUAT_TOL = 1e-6


def _as_array(x, shape, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.shape != shape:
        raise InputError(f"{name}: expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name}: non-finite values")
    return arr


@dataclass(frozen=True, eq=False)
class RigidPose:
    """Position (m) + unit quaternion (w,x,y,z), canonical sign w >= 0."""

    position: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        pos = _as_array(self.position, (3,), "position")
        quat = np.asarray(self.orientation, dtype=float)
        if quat.shape != (4,):
            raise InputError(f"orientation: expected shape (4,), got {quat.shape}")
        norm = np.linalg.norm(quat)
        if abs(norm - 1.0) > _QUAT_TOL:
            raise InputError(f"orientation: norm {norm:.9f} deviates beyond {_QUAT_TOL}")
        quat = quat_canonical(quat / norm)
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "orientation", quat)

    @staticmethod
    def identity() -> "RigidPose":
        return RigidPose(np.zeros(3), IDENTITY_QUAT.copy())

    def compose(self, other: "RigidPose") -> "RigidPose":
        """self ∘ other (apply other in self's frame)."""
        return RigidPose(
            self.position + quat_rotate(self.orientation, other.position),
            quat_mul(self.orientation, other.orientation),
        )

    def inverse(self) -> "RigidPose":
        inv_q = quat_conjugate(self.orientation)
        return RigidPose(-quat_rotate(inv_q, self.position), inv_q)

    def transform_point(self, p: np.ndarray) -> np.ndarray:
        return self.position + quat_rotate(self.orientation, np.asarray(p, dtype=float))


@dataclass(frozen=True)
class LinkSpec:
    """One entry of the model file: a link plus the joint attaching it."""

    name: str
    parent: str | None
    offset_pos: tuple[float, float, float] = (0.0, 0.0, 0.0)
    offset_quat: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)
    axis: tuple[float, float, float] = (0.0, 0.0, 1.0)
    limits: tuple[float, float] = (0.0, 0.0)

    @property
    def actuated(self) -> bool:
        return self.parent is not None and self.limits != (0.0, 0.0)


class HumanoidModel:
    """Immutable kinematic tree with key-body and calibration metadata."""

    def __init__(
        self,
        links: Sequence[LinkSpec],
        key_bodies: Sequence[str],
        calibration_chain: Sequence[str],
    ):
        if not links:
            raise ConfigError("model has no links")
        order = self._topological_order(links)
        self.links: tuple[LinkSpec, ...] = tuple(order)
        self.link_names: tuple[str, ...] = tuple(l.name for l in self.links)
        self._index: dict[str, int] = {n: i for i, n in enumerate(self.link_names)}
        self.parent_index = np.array(
            [-1 if l.parent is None else self._index[l.parent] for l in self.links]
        )
        self.offsets_pos = np.array([l.offset_pos for l in self.links], dtype=float)
        self.offsets_quat = np.array([l.offset_quat for l in self.links], dtype=float)
        self.axes = np.array([l.axis for l in self.links], dtype=float)
        self.joint_names: tuple[str, ...] = tuple(
            l.name for l in self.links if l.actuated
        )
        self.joint_index = np.full(len(self.links), -1)
        for j, name in enumerate(self.joint_names):
            self.joint_index[self._index[name]] = j
        self.joint_limits = np.array(
            [l.limits for l in self.links if l.actuated], dtype=float
        )
        self.key_bodies: tuple[str, ...] = tuple(key_bodies)
        self.calibration_chain: tuple[str, ...] = tuple(calibration_chain)
        self._validate()
        self.key_body_index = np.array([self._index[b] for b in self.key_bodies])

    @property
    def n_joints(self) -> int:
        return len(self.joint_names)

    @property
    def n_key_bodies(self) -> int:
        return len(self.key_bodies)

    @property
    def root_name(self) -> str:
        return self.link_names[int(np.where(self.parent_index == -1)[0][0])]

    def link_index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise ConfigError(f"unknown link {name!r}") from None

    def key_body_slot(self, name: str) -> int:
        try:
            return self.key_bodies.index(name)
        except ValueError:
            raise ConfigError(f"{name!r} is not a key body") from None

    @staticmethod
    def _topological_order(links: Sequence[LinkSpec]) -> list[LinkSpec]:
        by_name = {}
        for l in links:
            if l.name in by_name:
                raise ConfigError(f"duplicate link {l.name!r}")
            by_name[l.name] = l
        roots = [l for l in links if l.parent is None]
        if len(roots) != 1:
            raise ConfigError(f"model must have exactly one root, found {len(roots)}")
        children: dict[str, list[LinkSpec]] = {n: [] for n in by_name}
        for l in links:
            if l.parent is not None:
                if l.parent not in by_name:
                    raise ConfigError(f"link {l.name!r}: unknown parent {l.parent!r}")
                children[l.parent].append(l)
        order: list[LinkSpec] = []
        stack = [roots[0]]
        while stack:
            link = stack.pop(0)
            order.append(link)
            stack.extend(children[link.name])
        if len(order) != len(links):
            raise ConfigError("model contains a cycle or unreachable links")
        return order

    def _validate(self) -> None:
        for i, l in enumerate(self.links):
            if l.parent is not None:
                axis_norm = np.linalg.norm(self.axes[i])
                if abs(axis_norm - 1.0) > 1e-9:
                    raise ConfigError(f"link {l.name!r}: joint axis norm {axis_norm}")
            quat_norm = np.linalg.norm(self.offsets_quat[i])
            if abs(quat_norm - 1.0) > 1e-9:
                raise ConfigError(f"link {l.name!r}: offset quaternion norm {quat_norm}")
        for j, (lo, hi) in enumerate(self.joint_limits):
            if lo > hi:
                raise ConfigError(f"joint {self.joint_names[j]!r}: limits [{lo}, {hi}]")
        for b in self.key_bodies:
            if b not in self._index:
                raise ConfigError(f"key body {b!r} is not a link")
        if len(set(self.key_bodies)) != len(self.key_bodies):
            raise ConfigError("key_bodies contains duplicates")
        self._validate_chain()

    def _validate_chain(self) -> None:
        chain = self.calibration_chain
        if not chain:
            return
        for b in chain:
            if b not in self._index:
                raise ConfigError(f"calibration link {b!r} is not a link")
        if chain[0] != self.root_name:
            raise ConfigError(
                f"calibration_chain must start at the root {self.root_name!r}"
            )
        # every entry must be a strict descendant of the previous entry
        for prev, cur in zip(chain, chain[1:]):
            idx = self.parent_index[self._index[cur]]
            while idx != -1 and self.link_names[idx] != prev:
                idx = self.parent_index[idx]
            if idx == -1:
                raise ConfigError(
                    f"calibration_chain: {cur!r} is not a descendant of {prev!r}"
                )
        leaf = chain[-1]
        if leaf in {l.parent for l in self.links}:
            raise ConfigError(f"calibration_chain must end at a leaf, {leaf!r} has children")


def forward_kinematics_arrays(
    model: HumanoidModel,
    joint_pos: np.ndarray,
    root_pos: np.ndarray,
    root_quat: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Core FK on raw arrays. Supports batched inputs.

    joint_pos: (..., n); root_pos: (..., 3); root_quat: (..., 4).
    Returns positions (..., L, 3) and orientations (..., L, 4) in link order.
    """
    joint_pos = np.asarray(joint_pos, dtype=float)
    root_pos = np.asarray(root_pos, dtype=float)
    root_quat = np.asarray(root_quat, dtype=float)
    n = model.n_joints
    if joint_pos.shape[-1] != n:
        raise InputError(f"joint_pos: expected {n} joints, got {joint_pos.shape[-1]}")
    if not (np.all(np.isfinite(joint_pos)) and np.all(np.isfinite(root_pos))):
        raise InputError("forward_kinematics: non-finite input")
    batch = joint_pos.shape[:-1]
    L = len(model.links)
    pos = np.empty(batch + (L, 3))
    quat = np.empty(batch + (L, 4))
    for i in range(L):
        parent = model.parent_index[i]
        if parent == -1:
            pos[..., i, :] = root_pos
            quat[..., i, :] = root_quat
            continue
        p_pos = pos[..., parent, :]
        p_quat = quat[..., parent, :]
        pos[..., i, :] = p_pos + quat_rotate(p_quat, model.offsets_pos[i])
        frame = quat_mul(p_quat, model.offsets_quat[i])
        j = model.joint_index[i]
        if j >= 0:
            jq = quat_from_axis_angle(model.axes[i], joint_pos[..., j])
            frame = quat_mul(frame, jq)
        quat[..., i, :] = frame
    return pos, quat


def forward_kinematics(
    model: HumanoidModel, joint_pos: np.ndarray, root: RigidPose
) -> dict[str, RigidPose]:
    """Pose of every link given joint angles and the root pose."""
    pos, quat = forward_kinematics_arrays(
        model, joint_pos, root.position, root.orientation
    )
    return {
        name: RigidPose(pos[i], quat[i]) for i, name in enumerate(model.link_names)
    }


def key_body_poses(
    model: HumanoidModel,
    joint_pos: np.ndarray,
    root_pos: np.ndarray,
    root_quat: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """FK restricted to the key-body set: (..., K, 3), (..., K, 4)."""
    pos, quat = forward_kinematics_arrays(model, joint_pos, root_pos, root_quat)
    idx = model.key_body_index
    return pos[..., idx, :], quat[..., idx, :]


def to_base_point(root: RigidPose, p: np.ndarray) -> np.ndarray:
    """World point -> base frame: R(root)^T (p - root.position)."""
    return quat_rotate_inverse(root.orientation, np.asarray(p, dtype=float) - root.position)


def from_base_point(root: RigidPose, p: np.ndarray) -> np.ndarray:
    return root.position + quat_rotate(root.orientation, p)


def to_base_vector(root: RigidPose, v: np.ndarray) -> np.ndarray:
    """Free vector (velocity, gravity) into the base frame."""
    return quat_rotate_inverse(root.orientation, v)


def from_base_vector(root: RigidPose, v: np.ndarray) -> np.ndarray:
    return quat_rotate(root.orientation, v)


def to_base_quat(root: RigidPose, q: np.ndarray) -> np.ndarray:
    """World orientation -> base frame, canonical sign."""
    return quat_canonical(quat_mul(quat_conjugate(root.orientation), q))


def from_base_quat(root: RigidPose, q: np.ndarray) -> np.ndarray:
    return quat_canonical(quat_mul(root.orientation, q))


def chain_height(model: HumanoidModel, joint_pos: np.ndarray) -> float:
    """Sum of segment lengths along the calibration chain (pose given in rad).

    Segments are Euclidean distances between consecutive chain anchors
    evaluated through FK, so the metric is invariant to the root pose.
    """
    if not model.calibration_chain:
        raise ConfigError("model has an empty calibration_chain")
    pos, _ = forward_kinematics_arrays(
        model, joint_pos, np.zeros(3), IDENTITY_QUAT
    )
    idx = [model.link_index(name) for name in model.calibration_chain]
    anchors = pos[idx]
    height = float(np.sum(np.linalg.norm(np.diff(anchors, axis=0), axis=1)))
    if height <= 0.0:
        raise ConfigError("calibration chain has zero length")
    return height


# ---------------------------------------------------------------------------
# Model file I/O
# ---------------------------------------------------------------------------

def model_to_dict(model: HumanoidModel) -> dict:
    return {
        "joints": [
            {
                "name": l.name,
                "parent": l.parent,
                "offset_pos": list(l.offset_pos),
                "offset_quat": list(l.offset_quat),
                "axis": list(l.axis),
                "limits": list(l.limits),
            }
            for l in model.links
        ],
        "key_bodies": list(model.key_bodies),
        "calibration_chain": list(model.calibration_chain),
    }


def model_from_dict(doc: Mapping) -> HumanoidModel:
    try:
        joints = doc["joints"]
    except (KeyError, TypeError):
        raise ClipParseError("model document: missing 'joints' array") from None
    links = []
    for i, entry in enumerate(joints):
        try:
            links.append(
                LinkSpec(
                    name=str(entry["name"]),
                    parent=entry["parent"],
                    offset_pos=tuple(float(v) for v in entry["offset_pos"]),
                    offset_quat=tuple(float(v) for v in entry["offset_quat"]),
                    axis=tuple(float(v) for v in entry["axis"]),
                    limits=tuple(float(v) for v in entry["limits"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ClipParseError(f"joints[{i}]: {exc}") from None
    try:
        return HumanoidModel(
            links,
            key_bodies=doc.get("key_bodies", []),
            calibration_chain=doc.get("calibration_chain", []),
        )
    except ConfigError as exc:
        raise ClipParseError(f"model document: {exc}") from None


def save_model(model: HumanoidModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2)
        fh.write("\n")


def load_model(path) -> HumanoidModel:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ClipParseError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    return model_from_dict(doc)


_REFERENCE_MODEL: HumanoidModel | None = None


def load_reference_model() -> HumanoidModel:
    """The bundled 29-joint reference humanoid."""
    global _REFERENCE_MODEL
    if _REFERENCE_MODEL is None:
        text = (
            resources.files("omniclone").joinpath("data/reference_model.json").read_text()
        )
        _REFERENCE_MODEL = model_from_dict(json.loads(text))
    return _REFERENCE_MODEL
