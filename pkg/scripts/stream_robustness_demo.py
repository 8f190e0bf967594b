"""Sweep packet-loss and jitter settings over the virtual streaming
pipeline and report continuity statistics, then probe real loopback
latency.

Usage: python scripts/stream_robustness_demo.py [packets]
"""
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from omniclone.stream import FaultConfig, measure_latency, simulate_stream


def main():
    packets = int(sys.argv[1]) if len(sys.argv) > 1 else 5000
    print("drop,jitter_ms,held_pct,max_consecutive_held,delivered")
    for drop in (0.0, 0.05, 0.1, 0.2):
        for jitter_hi in (0.0, 20.0, 40.0, 80.0):
            fault = FaultConfig(drop_prob=drop, jitter_ms=(0.0, jitter_hi))
            trace = simulate_stream(packets, fault=fault, seed=7)
            held_pct = 100.0 * trace.held_count / max(1, len(trace.entries))
            print(
                f"{drop},{jitter_hi},{held_pct:.2f},"
                f"{trace.max_consecutive_held()},{trace.delivered}"
            )
    print("\nloopback latency (no injected delay):")
    stats = measure_latency(n_samples=200, rate_hz=500.0)
    print(f"mean {stats.mean_ms:.3f} ms, p95 {stats.p95_ms:.3f} ms "
          f"({stats.received}/{stats.sent} received)")
    print("\nloopback latency (30 ms injected):")
    stats = measure_latency(n_samples=100, rate_hz=200.0, constant_delay_ms=30.0)
    print(f"mean {stats.mean_ms:.3f} ms, p95 {stats.p95_ms:.3f} ms")


if __name__ == "__main__":
    main()
