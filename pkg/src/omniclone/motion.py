"""Motion clips: data model, file format, resampling, statistics, filtering,
and training-recipe composition.

Conventions: all trajectories are world frame, Z-up. Frame timestamps are
seconds on a uniform 1/fps grid. A clip's duration is frame_count / fps
(period counting), so a 90-frame clip at 30 Hz reports 3.0 s.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import ClipParseError, ConfigError, InputError
from .kinematics import HumanoidModel, RigidPose, forward_kinematics_arrays
from .rotations import quat_slerp

CATEGORIES = ("loco_manip", "manip", "squat", "walk", "run", "jump", "other")
HEIGHT_LEVELS = ("high", "medium", "low")
SPEED_LEVELS = ("fast", "medium_speed", "slow")

#: level vocabulary admitted per category ("none" marks unleveled training clips)
CATEGORY_LEVELS: dict[str, tuple[str, ...]] = {
    "loco_manip": HEIGHT_LEVELS + ("none",),
    "manip": HEIGHT_LEVELS + ("none",),
    "squat": HEIGHT_LEVELS + ("none",),
    "jump": HEIGHT_LEVELS + ("none",),
    "walk": SPEED_LEVELS + ("none",),
    "run": SPEED_LEVELS + ("none",),
    "other": ("none",),
}

#: the 18 benchmark strata in canonical report order
BENCH_STRATA: tuple[tuple[str, str], ...] = tuple(
    (cat, lvl)
    for cat in ("loco_manip", "manip", "squat", "walk", "run", "jump")
    for lvl in (SPEED_LEVELS if cat in ("walk", "run") else HEIGHT_LEVELS)
)

_TIME_TOL = 1e-6


def _opt_array(x, shape, name):
    if x is None:
        return None
    arr = np.asarray(x, dtype=float)
    if arr.shape != shape:
        raise InputError(f"{name}: expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name}: non-finite values")
    return arr


@dataclass(frozen=True, eq=False)
class Frame:
    """One timestamped sample of a reference trajectory (world frame)."""

    t: float
    root: RigidPose
    root_lin_vel: np.ndarray
    root_ang_vel: np.ndarray
    joint_pos: np.ndarray
    joint_vel: np.ndarray | None = None
    body_pos: np.ndarray | None = None
    body_quat: np.ndarray | None = None
    body_lin_vel: np.ndarray | None = None
    body_ang_vel: np.ndarray | None = None

    def __post_init__(self):
        jp = np.asarray(self.joint_pos, dtype=float)
        if jp.ndim != 1:
            raise InputError(f"joint_pos: expected a 1-D vector, got shape {jp.shape}")
        n = jp.shape[0]
        object.__setattr__(self, "joint_pos", _opt_array(jp, (n,), "joint_pos"))
        object.__setattr__(self, "root_lin_vel", _opt_array(self.root_lin_vel, (3,), "root_lin_vel"))
        object.__setattr__(self, "root_ang_vel", _opt_array(self.root_ang_vel, (3,), "root_ang_vel"))
        object.__setattr__(self, "joint_vel", _opt_array(self.joint_vel, (n,), "joint_vel"))
        if self.body_pos is not None:
            k = np.asarray(self.body_pos).shape[0]
            object.__setattr__(self, "body_pos", _opt_array(self.body_pos, (k, 3), "body_pos"))
            object.__setattr__(self, "body_quat", _opt_array(self.body_quat, (k, 4), "body_quat"))
            object.__setattr__(self, "body_lin_vel", _opt_array(self.body_lin_vel, (k, 3), "body_lin_vel"))
            object.__setattr__(self, "body_ang_vel", _opt_array(self.body_ang_vel, (k, 3), "body_ang_vel"))
        if not np.isfinite(self.t):
            raise InputError("t: non-finite")


@dataclass(frozen=True, eq=False)
class MotionClip:
    name: str
    fps: float
    category: str
    level: str
    frames: tuple[Frame, ...]
    dof_names: tuple[str, ...] = ()
    key_bodies: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        object.__setattr__(self, "dof_names", tuple(self.dof_names))
        object.__setattr__(self, "key_bodies", tuple(self.key_bodies))
        if self.fps <= 0:
            raise InputError("fps must be positive")
        if not self.frames:
            raise InputError("frames must be non-empty")
        if self.category not in CATEGORIES:
            raise InputError(f"unknown category {self.category!r}")
        if self.level not in CATEGORY_LEVELS[self.category]:
            raise InputError(
                f"level {self.level!r} not allowed for category {self.category!r}"
            )
        n = self.frames[0].joint_pos.shape[0]
        if self.dof_names and len(self.dof_names) != n:
            raise InputError(f"dof_names: {len(self.dof_names)} names for {n} joints")
        period = 1.0 / self.fps
        for i, f in enumerate(self.frames):
            if f.joint_pos.shape[0] != n:
                raise InputError(f"frames[{i}]: joint count {f.joint_pos.shape[0]} != {n}")
            if i and abs((f.t - self.frames[i - 1].t) - period) > _TIME_TOL:
                raise InputError(
                    f"frames[{i}]: timestamp spacing {f.t - self.frames[i-1].t:.9f}"
                    f" deviates from 1/fps={period:.9f}"
                )

    @property
    def n_joints(self) -> int:
        return self.frames[0].joint_pos.shape[0]

    @property
    def n_key_bodies(self) -> int:
        if self.key_bodies:
            return len(self.key_bodies)
        bp = self.frames[0].body_pos
        return 0 if bp is None else bp.shape[0]

    @property
    def duration_s(self) -> float:
        return len(self.frames) / self.fps

    def joint_pos_array(self) -> np.ndarray:
        return np.stack([f.joint_pos for f in self.frames])

    def root_pos_array(self) -> np.ndarray:
        return np.stack([f.root.position for f in self.frames])

    def root_quat_array(self) -> np.ndarray:
        return np.stack([f.root.orientation for f in self.frames])

    def root_lin_vel_array(self) -> np.ndarray:
        return np.stack([f.root_lin_vel for f in self.frames])

    def body_pos_array(self) -> np.ndarray | None:
        if self.frames[0].body_pos is None:
            return None
        return np.stack([f.body_pos for f in self.frames])

    def body_quat_array(self) -> np.ndarray | None:
        if self.frames[0].body_quat is None:
            return None
        return np.stack([f.body_quat for f in self.frames])


# ---------------------------------------------------------------------------
# Derivation helpers
# ---------------------------------------------------------------------------

def _finite_difference(values: np.ndarray, fps: float) -> np.ndarray:
    """Central differences, one-sided at the endpoints."""
    v = np.empty_like(values)
    if len(values) == 1:
        v[:] = 0.0
        return v
    v[1:-1] = (values[2:] - values[:-2]) * (fps / 2.0)
    v[0] = (values[1] - values[0]) * fps
    v[-1] = (values[-1] - values[-2]) * fps
    return v


def derive_joint_velocities(clip: MotionClip) -> MotionClip:
    """Fill joint_vel by finite differences where missing."""
    if all(f.joint_vel is not None for f in clip.frames):
        return clip
    q = clip.joint_pos_array()
    vel = _finite_difference(q, clip.fps)
    frames = tuple(
        f if f.joint_vel is not None else replace(f, joint_vel=vel[i])
        for i, f in enumerate(clip.frames)
    )
    return replace(clip, frames=frames)


def derive_body_kinematics(clip: MotionClip, model: HumanoidModel) -> MotionClip:
    """Fill key-body positions/orientations via FK where missing."""
    if all(f.body_pos is not None for f in clip.frames):
        return clip
    pos, quat = forward_kinematics_arrays(
        model,
        clip.joint_pos_array(),
        clip.root_pos_array(),
        clip.root_quat_array(),
    )
    idx = model.key_body_index
    body_pos = pos[:, idx, :]
    body_quat = quat[:, idx, :]
    frames = tuple(
        f
        if f.body_pos is not None
        else replace(f, body_pos=body_pos[i], body_quat=body_quat[i])
        for i, f in enumerate(clip.frames)
    )
    return replace(clip, frames=frames, key_bodies=model.key_bodies)


# ---------------------------------------------------------------------------
# Clip file I/O (canonical JSON serialization)
# ---------------------------------------------------------------------------

def _frame_to_dict(f: Frame) -> dict:
    doc = {
        "t": f.t,
        "root_pos": f.root.position.tolist(),
        "root_quat": f.root.orientation.tolist(),
        "root_lin_vel": f.root_lin_vel.tolist(),
        "root_ang_vel": f.root_ang_vel.tolist(),
        "joint_pos": f.joint_pos.tolist(),
    }
    for key in ("joint_vel", "body_pos", "body_quat", "body_lin_vel", "body_ang_vel"):
        val = getattr(f, key)
        if val is not None:
            doc[key] = val.tolist()
    return doc


def clip_to_dict(clip: MotionClip) -> dict:
    return {
        "header": {
            "name": clip.name,
            "fps": clip.fps,
            "category": clip.category,
            "level": clip.level,
            "n": clip.n_joints,
            "K": clip.n_key_bodies,
            "dof_names": list(clip.dof_names),
            "key_bodies": list(clip.key_bodies),
        },
        "frames": [_frame_to_dict(f) for f in clip.frames],
    }


def _parse_frame(doc: Mapping, i: int, n: int, k: int) -> Frame:
    def need(key, shape):
        if key not in doc:
            raise ClipParseError(f"frames[{i}]: missing field {key!r}")
        arr = np.asarray(doc[key], dtype=float)
        if arr.shape != shape:
            raise ClipParseError(
                f"frames[{i}].{key}: expected shape {shape}, got {arr.shape}"
            )
        return arr

    def opt(key, shape):
        if key not in doc:
            return None
        arr = np.asarray(doc[key], dtype=float)
        if arr.shape != shape:
            raise ClipParseError(
                f"frames[{i}].{key}: expected shape {shape}, got {arr.shape}"
            )
        return arr

    try:
        root = RigidPose(need("root_pos", (3,)), need("root_quat", (4,)))
    except InputError as exc:
        raise ClipParseError(f"frames[{i}]: {exc}") from None
    try:
        return Frame(
            t=float(doc["t"]),
            root=root,
            root_lin_vel=need("root_lin_vel", (3,)),
            root_ang_vel=need("root_ang_vel", (3,)),
            joint_pos=need("joint_pos", (n,)),
            joint_vel=opt("joint_vel", (n,)),
            body_pos=opt("body_pos", (k, 3)),
            body_quat=opt("body_quat", (k, 4)),
            body_lin_vel=opt("body_lin_vel", (k, 3)),
            body_ang_vel=opt("body_ang_vel", (k, 3)),
        )
    except (KeyError, TypeError) as exc:
        raise ClipParseError(f"frames[{i}]: {exc}") from None
    except InputError as exc:
        raise ClipParseError(f"frames[{i}]: {exc}") from None


def clip_from_dict(doc: Mapping) -> MotionClip:
    try:
        header = doc["header"]
        frames_doc = doc["frames"]
    except (KeyError, TypeError):
        raise ClipParseError("clip document: missing 'header' or 'frames'") from None
    try:
        fps = float(header["fps"])
        name = str(header["name"])
        category = str(header.get("category", "other"))
        level = str(header.get("level", "none"))
        n = int(header["n"])
        k = int(header.get("K", 0))
    except (KeyError, TypeError, ValueError) as exc:
        raise ClipParseError(f"header: {exc}") from None
    if fps <= 0:
        raise ClipParseError("header.fps: fps must be positive")
    frames = [_parse_frame(fd, i, n, k) for i, fd in enumerate(frames_doc)]
    for i in range(1, len(frames)):
        if frames[i].t <= frames[i - 1].t:
            raise ClipParseError(f"frames[{i}].t: timestamps must be strictly increasing")
    try:
        return MotionClip(
            name=name,
            fps=fps,
            category=category,
            level=level,
            frames=tuple(frames),
            dof_names=tuple(header.get("dof_names", ())),
            key_bodies=tuple(header.get("key_bodies", ())),
        )
    except InputError as exc:
        raise ClipParseError(f"clip document: {exc}") from None


def save_clip(clip: MotionClip, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(clip_to_dict(clip), fh, indent=1)
        fh.write("\n")


def load_clip(path) -> MotionClip:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ClipParseError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    return clip_from_dict(doc)


# ---------------------------------------------------------------------------
# Resampling
# ---------------------------------------------------------------------------

def _interp_frame(a: Frame, b: Frame, u: float, t: float) -> Frame:
    def lerp(x, y):
        return None if x is None or y is None else (1.0 - u) * x + u * y

    def slerp(x, y):
        return None if x is None or y is None else quat_slerp(x, y, u)

    return Frame(
        t=t,
        root=RigidPose(
            lerp(a.root.position, b.root.position),
            quat_slerp(a.root.orientation, b.root.orientation, u),
        ),
        root_lin_vel=lerp(a.root_lin_vel, b.root_lin_vel),
        root_ang_vel=lerp(a.root_ang_vel, b.root_ang_vel),
        joint_pos=lerp(a.joint_pos, b.joint_pos),
        joint_vel=lerp(a.joint_vel, b.joint_vel),
        body_pos=lerp(a.body_pos, b.body_pos),
        body_quat=slerp(a.body_quat, b.body_quat),
        body_lin_vel=lerp(a.body_lin_vel, b.body_lin_vel),
        body_ang_vel=lerp(a.body_ang_vel, b.body_ang_vel),
    )


def resample(clip: MotionClip, target_fps: float) -> MotionClip:
    """Resample onto a 1/target_fps grid.

    Positions and velocities interpolate linearly, orientations by
    shortest-arc slerp. The first/last source frames are preserved exactly;
    output times past the source span hold the final frame, keeping
    |duration_out - duration_in| <= 1/target_fps.
    """
    if target_fps <= 0:
        raise InputError("target_fps must be positive")
    if target_fps == clip.fps:
        return clip
    src = clip.frames
    if len(src) == 1:
        raise InputError("cannot resample a single-frame clip to a different rate")
    count = int(np.floor(len(src) * target_fps / clip.fps + 0.5))
    count = max(count, 2)
    t0 = src[0].t
    span = src[-1].t - t0
    out = []
    for i in range(count):
        rel = i / target_fps
        t = t0 + rel
        if rel <= 0.0:
            out.append(replace(src[0], t=t))
            continue
        if rel >= span:
            out.append(replace(src[-1], t=t))
            continue
        pos = rel * clip.fps
        lo = min(int(np.floor(pos)), len(src) - 2)
        u = pos - lo
        if u <= 1e-12:
            out.append(replace(src[lo], t=t))
        elif u >= 1.0 - 1e-12:
            out.append(replace(src[lo + 1], t=t))
        else:
            out.append(_interp_frame(src[lo], src[lo + 1], u, t))
    return replace(clip, fps=target_fps, frames=tuple(out))


# ---------------------------------------------------------------------------
# Corpus statistics
# ---------------------------------------------------------------------------

def percentile(values: Sequence[float], p: float) -> float:
    """Linear interpolation between closest ranks (inclusive method)."""
    x = np.sort(np.asarray(values, dtype=float))
    if x.size == 0:
        raise InputError("percentile of empty sample")
    h = (p / 100.0) * (x.size - 1)
    lo = int(np.floor(h))
    hi = min(lo + 1, x.size - 1)
    return float(x[lo] + (h - lo) * (x[hi] - x[lo]))


@dataclass(frozen=True)
class StatsRow:
    """One row of the corpus statistics table.

    For the speed metric, lo/hi are min-P5 and max-P95 across clips;
    for the height metrics they are global min/max.
    """

    category: str
    level: str
    metric: str  # speed | root_height | hand_height
    lo: float
    hi: float
    mean: float


def _planar_speed(clip: MotionClip) -> np.ndarray:
    v = clip.root_lin_vel_array()
    return np.linalg.norm(v[:, :2], axis=1)


def _hand_heights(clip: MotionClip, model: HumanoidModel) -> np.ndarray:
    pos, _ = forward_kinematics_arrays(
        model, clip.joint_pos_array(), clip.root_pos_array(), clip.root_quat_array()
    )
    hands = [i for i, name in enumerate(model.link_names) if "wrist_yaw" in name]
    if not hands:
        raise ConfigError("model has no wrist_yaw links for hand-height statistics")
    return pos[:, hands, 2].ravel()


def clip_stats(
    clips: Sequence[MotionClip], model: HumanoidModel
) -> list[StatsRow]:
    """Speed / root-height / hand-height statistics, grouped by (category, level).

    Speed rows report the minimum per-clip P5, the maximum per-clip P95,
    and the mean over all frames, excluding startup/stop transients the
    same way the per-clip percentile trimming does. Height rows report
    global min/max/mean.
    """
    if not clips:
        raise InputError("clip_stats: empty clip list")
    for c in clips:
        if c.n_joints != model.n_joints:
            raise InputError(
                f"clip {c.name!r}: {c.n_joints} joints, model has {model.n_joints}"
            )
    groups: dict[tuple[str, str], list[MotionClip]] = {}
    for c in clips:
        groups.setdefault((c.category, c.level), []).append(c)
    rows: list[StatsRow] = []
    # means use exactly rounded summation so they are input-order invariant
    fmean = lambda values: math.fsum(values) / len(values)
    for (cat, lvl), members in sorted(groups.items()):
        speeds = [_planar_speed(c) for c in members]
        all_speeds = np.concatenate(speeds)
        rows.append(
            StatsRow(
                cat,
                lvl,
                "speed",
                lo=min(percentile(s, 5.0) for s in speeds),
                hi=max(percentile(s, 95.0) for s in speeds),
                mean=fmean(all_speeds),
            )
        )
        root_z = np.concatenate([c.root_pos_array()[:, 2] for c in members])
        rows.append(
            StatsRow(
                cat, lvl, "root_height",
                lo=float(root_z.min()), hi=float(root_z.max()), mean=fmean(root_z),
            )
        )
        hand_z = np.concatenate([_hand_heights(c, model) for c in members])
        rows.append(
            StatsRow(
                cat, lvl, "hand_height",
                lo=float(hand_z.min()), hi=float(hand_z.max()), mean=fmean(hand_z),
            )
        )
    return rows


_DISPLAY_CATEGORY = {
    "loco_manip": "Loco",
    "manip": "Manip",
    "squat": "Squat",
    "walk": "Walk",
    "run": "Run",
    "jump": "Jump",
    "other": "Other",
}
_DISPLAY_LEVEL = {
    "high": "High",
    "medium": "Med",
    "low": "Low",
    "fast": "Fast",
    "medium_speed": "Med",
    "slow": "Slow",
    "none": "",
}


def stats_label(category: str, level: str) -> str:
    lvl = _DISPLAY_LEVEL.get(level, level)
    cat = _DISPLAY_CATEGORY.get(category, category)
    return f"{cat} {lvl}".strip()


def format_stats_markdown(rows: Sequence[StatsRow], metric: str) -> str:
    """Markdown table for one metric, rows like `| Walk Slow | 0.618 | 1.704 | 1.026 |`."""
    header = {
        "speed": "| Motion | Min P5 | Max P95 | Mean |",
        "root_height": "| Motion | Min | Max | Mean |",
        "hand_height": "| Motion | Min | Max | Mean |",
    }[metric]
    lines = [header, "| --- | --- | --- | --- |"]
    for r in rows:
        if r.metric != metric:
            continue
        lines.append(
            f"| {stats_label(r.category, r.level)} | {r.lo:.3f} | {r.hi:.3f} | {r.mean:.3f} |"
        )
    return "\n".join(lines) + "\n"


def stats_to_csv(rows: Sequence[StatsRow]) -> str:
    lines = ["category,level,metric,lo,hi,mean"]
    for r in rows:
        lines.append(f"{r.category},{r.level},{r.metric},{r.lo!r},{r.hi!r},{r.mean!r}")
    return "\n".join(lines) + "\n"


def stats_to_json(rows: Sequence[StatsRow]) -> str:
    doc = [
        {
            "category": r.category,
            "level": r.level,
            "metric": r.metric,
            "lo": r.lo,
            "hi": r.hi,
            "mean": r.mean,
        }
        for r in rows
    ]
    return json.dumps(doc, indent=1) + "\n"


# ---------------------------------------------------------------------------
# Heuristic filtering
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FilterCriteria:
    """Bounds on root state and whole-body joint energy."""

    root_pos_min: tuple[float, float, float] = (-10.0, -10.0, 0.2)
    root_pos_max: tuple[float, float, float] = (10.0, 10.0, 1.8)
    root_speed_max: float = 5.0
    joint_energy_max: float = 200.0

    def __post_init__(self):
        vals = (*self.root_pos_min, *self.root_pos_max, self.root_speed_max, self.joint_energy_max)
        if not all(np.isfinite(v) for v in vals):
            raise ConfigError("filter criteria must be finite")
        if self.joint_energy_max < 0:
            raise ConfigError("joint_energy_max must be >= 0")


def joint_energy(clip: MotionClip) -> float:
    """Mean over frames of the summed squared joint velocities."""
    clip = derive_joint_velocities(clip)
    vel = np.stack([f.joint_vel for f in clip.frames])
    return float(np.mean(np.sum(vel**2, axis=1)))


def filter_clips(
    clips: Sequence[MotionClip], criteria: FilterCriteria
) -> tuple[list[MotionClip], list[tuple[MotionClip, list[str]]]]:
    """Split clips into (kept, rejected); each rejection lists violated criteria."""
    kept: list[MotionClip] = []
    rejected: list[tuple[MotionClip, list[str]]] = []
    lo = np.asarray(criteria.root_pos_min)
    hi = np.asarray(criteria.root_pos_max)
    for clip in clips:
        reasons = []
        root = clip.root_pos_array()
        if np.any(root < lo) or np.any(root > hi):
            reasons.append("root_pos")
        if np.any(_planar_speed(clip) > criteria.root_speed_max):
            reasons.append("root_speed")
        if joint_energy(clip) > criteria.joint_energy_max:
            reasons.append("joint_energy")
        if reasons:
            rejected.append((clip, reasons))
        else:
            kept.append(clip)
    return kept, rejected


# ---------------------------------------------------------------------------
# Recipe composition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RecipeManifest:
    """Deterministic composition of training pools into a dataset selection."""

    pools: Mapping[str, tuple[str, ...]]
    target_fraction: Mapping[str, float]
    total_count: int
    seed: int
    selected: tuple[tuple[str, str, float], ...]  # (label, clip, weight)
    wrapped: tuple[str, ...] = ()

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for label, _, _ in self.selected:
            out[label] = out.get(label, 0) + 1
        return out


def largest_remainder_counts(
    fractions: Mapping[str, float], total: int
) -> dict[str, int]:
    """Round fraction*total to integers summing to total (largest remainder,
    ties broken by label order)."""
    if abs(sum(fractions.values()) - 1.0) > 1e-9:
        raise ConfigError(f"fractions sum to {sum(fractions.values())}, expected 1")
    labels = sorted(fractions)
    quotas = {lab: fractions[lab] * total for lab in labels}
    counts = {lab: int(np.floor(quotas[lab])) for lab in labels}
    seats = total - sum(counts.values())
    by_remainder = sorted(labels, key=lambda lab: (-(quotas[lab] - counts[lab]), lab))
    for lab in by_remainder[:seats]:
        counts[lab] += 1
    return counts


def compose_recipe(
    pools: Mapping[str, Sequence[str]],
    fractions: Mapping[str, float],
    total_count: int,
    seed: int,
) -> RecipeManifest:
    """Sample clips per pool without replacement (wrapping with replacement,
    flagged, when a pool is exhausted). Deterministic for a given seed."""
    counts = largest_remainder_counts(fractions, total_count)
    for label, count in counts.items():
        if count > 0 and not pools.get(label):
            raise ConfigError(f"pool {label!r} is empty but has fraction {fractions[label]}")
    rng = np.random.default_rng(seed)
    selected: list[tuple[str, str, float]] = []
    wrapped: list[str] = []
    weight = 1.0 / total_count if total_count else 0.0
    for label in sorted(counts):
        count = counts[label]
        if count == 0:
            continue
        pool = list(pools[label])
        order = rng.permutation(len(pool))
        picks = [pool[i] for i in order[:count]]
        if count > len(pool):
            wrapped.append(label)
            extra = rng.integers(0, len(pool), size=count - len(pool))
            picks = [pool[i] for i in order] + [pool[i] for i in extra]
        selected.extend((label, clip, weight) for clip in picks)
    return RecipeManifest(
        pools={k: tuple(v) for k, v in pools.items()},
        target_fraction=dict(fractions),
        total_count=total_count,
        seed=seed,
        selected=tuple(selected),
        wrapped=tuple(wrapped),
    )


def recipe_to_json(manifest: RecipeManifest) -> str:
    doc = {
        "pools": {k: list(v) for k, v in manifest.pools.items()},
        "target_fraction": dict(manifest.target_fraction),
        "total_count": manifest.total_count,
        "seed": manifest.seed,
        "selected": [
            {"label": lab, "clip": clip, "weight": w}
            for lab, clip, w in manifest.selected
        ],
        "wrapped": list(manifest.wrapped),
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def recipe_to_csv(manifest: RecipeManifest) -> str:
    lines = ["label,clip,weight"]
    for lab, clip, w in manifest.selected:
        lines.append(f"{lab},{clip},{w!r}")
    return "\n".join(lines) + "\n"
