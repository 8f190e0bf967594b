"""Evaluate a family of oracle trackers on the synthetic suite and print
stratified SR/MPJPE tables plus radar-series data.

Usage: python scripts/run_tracking_benchmark.py [clips_per_stratum]
"""
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from omniclone.bench import aggregate, emit_report, run_episode
from omniclone.kinematics import load_reference_model
from omniclone.simtrack import parse_tracker
from omniclone.synthetic import benchmark_suite

TRACKERS = ["perfect", "lag:2", "lag:8", "noise:0.03", "pd:400,40"]


def main():
    per_stratum = int(sys.argv[1]) if len(sys.argv) > 1 else 5
    model = load_reference_model()
    clips = benchmark_suite(model, clips_per_stratum=per_stratum)
    print(f"suite: {len(clips)} clips ({per_stratum} per stratum)\n")
    for name in TRACKERS:
        tracker = parse_tracker(name)
        results = [run_episode(tracker, clip, model) for clip in clips]
        report = aggregate(results, method=name)
        print(emit_report(report, "markdown"))
        print("radar series (stratum, mpjpe_mm):")
        print(emit_report(report, "radar-csv"))


if __name__ == "__main__":
    main()
