"""Generate a synthetic 6x3 benchmark suite (clips + manifest) on disk.

Defaults to the canonical suite shape: 60 episodes per category (20 per
stratum) of 90-frame clips at 30 Hz.

Usage: python scripts/make_benchmark_suite.py [out_dir] [clips_per_stratum] [n_frames]
"""
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from omniclone.bench import ManifestEntry, save_manifest
from omniclone.kinematics import load_reference_model
from omniclone.motion import save_clip
from omniclone.synthetic import benchmark_suite


def main():
    out_dir = pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else pathlib.Path("suite")
    per_stratum = int(sys.argv[2]) if len(sys.argv) > 2 else 20
    n_frames = int(sys.argv[3]) if len(sys.argv) > 3 else 90
    clips_dir = out_dir / "clips"
    clips_dir.mkdir(parents=True, exist_ok=True)
    model = load_reference_model()
    entries = []
    for clip in benchmark_suite(model, clips_per_stratum=per_stratum, n_frames=n_frames):
        path = clips_dir / f"{clip.name}.json"
        save_clip(clip, path)
        entries.append(
            ManifestEntry(path=str(path.relative_to(out_dir)), category=clip.category, level=clip.level)
        )
    manifest = out_dir / "manifest.json"
    save_manifest(entries, manifest)
    print(f"wrote {len(entries)} clips and {manifest}")


if __name__ == "__main__":
    main()
