"""Author the bundled 29-joint reference humanoid model file.

Link lengths are free parameters sized to a ~1.3 m desk-scale humanoid;
regenerate src/omniclone/data/reference_model.json after editing.
"""
import json
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from omniclone.kinematics import model_from_dict, model_to_dict

X = (1.0, 0.0, 0.0)
Y = (0.0, 1.0, 0.0)
Z = (0.0, 0.0, 1.0)
IDQ = (1.0, 0.0, 0.0, 0.0)


def joint(name, parent, pos, axis, limits):
    return {
        "name": name,
        "parent": parent,
        "offset_pos": list(pos),
        "offset_quat": list(IDQ),
        "axis": list(axis),
        "limits": list(limits),
    }


def leg(side, sign):
    p = f"{side}_"
    return [
        joint(p + "hip_pitch_link", "pelvis", (0.0, sign * 0.064, -0.100), Y, (-2.5307, 2.8798)),
        joint(p + "hip_roll_link", p + "hip_pitch_link", (0.0, sign * 0.052, -0.030), X, (-0.5236, 2.9671)),
        joint(p + "hip_yaw_link", p + "hip_roll_link", (0.025, 0.0, -0.120), Z, (-2.7576, 2.7576)),
        joint(p + "knee_link", p + "hip_yaw_link", (-0.078, 0.0, -0.180), Y, (-0.0873, 2.8798)),
        joint(p + "ankle_pitch_link", p + "knee_link", (0.0, 0.0, -0.300), Y, (-0.8727, 0.5236)),
        joint(p + "ankle_roll_link", p + "ankle_pitch_link", (0.0, 0.0, -0.017), X, (-0.2618, 0.2618)),
    ]


def arm(side, sign):
    p = f"{side}_"
    return [
        joint(p + "shoulder_pitch_link", "torso", (0.0, sign * 0.100, 0.220), Y, (-3.0892, 2.6704)),
        joint(p + "shoulder_roll_link", p + "shoulder_pitch_link", (0.0, sign * 0.052, 0.0), X, (-1.5882, 2.2515)),
        joint(p + "shoulder_yaw_link", p + "shoulder_roll_link", (0.0, 0.0, -0.090), Z, (-2.6180, 2.6180)),
        joint(p + "elbow_link", p + "shoulder_yaw_link", (0.0, 0.0, -0.120), Y, (-1.0472, 2.0944)),
        joint(p + "wrist_roll_link", p + "elbow_link", (0.020, 0.0, -0.100), X, (-1.9722, 1.9722)),
        joint(p + "wrist_pitch_link", p + "wrist_roll_link", (0.0, 0.0, -0.060), Y, (-1.6144, 1.6144)),
        joint(p + "wrist_yaw_link", p + "wrist_pitch_link", (0.0, 0.0, -0.060), Z, (-1.6144, 1.6144)),
    ]


def build():
    joints = [joint("pelvis", None, (0.0, 0.0, 0.0), Z, (0.0, 0.0))]
    joints += leg("left", 1)
    joints += leg("right", -1)
    joints += [
        joint("waist_yaw_link", "pelvis", (0.0, 0.0, 0.110), Z, (-2.6180, 2.6180)),
        joint("waist_roll_link", "waist_yaw_link", (0.0, 0.0, 0.030), X, (-0.5236, 0.5236)),
        joint("torso", "waist_roll_link", (0.0, 0.0, 0.100), Y, (-0.5236, 0.5236)),
    ]
    joints += arm("left", 1)
    joints += arm("right", -1)
    # fixed head: limits [0, 0] marks an unactuated attachment
    joints.append(joint("head", "torso", (0.0, 0.0, 0.350), Z, (0.0, 0.0)))
    return {
        "joints": joints,
        "key_bodies": [
            "pelvis",
            "torso",
            "left_wrist_yaw_link",
            "right_wrist_yaw_link",
            "left_ankle_roll_link",
            "right_ankle_roll_link",
            "head",
        ],
        "calibration_chain": ["pelvis", "torso", "head"],
    }


def main():
    doc = build()
    model = model_from_dict(doc)  # validates
    assert model.n_joints == 29, model.n_joints
    assert model.n_key_bodies == 7
    out = pathlib.Path(__file__).resolve().parents[1] / "src/omniclone/data/reference_model.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2)
        fh.write("\n")
    print(f"wrote {out} ({model.n_joints} joints, {len(model.links)} links)")


if __name__ == "__main__":
    main()
