"""Run the LCT-LIS priority-inversion gadget and dump per-server queue lengths.

    python3 scripts/lct_lis_oscillation.py --out runs/oscillation.csv
"""
import argparse
import csv
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from ajq.checkers import detect_growth, oscillation
from ajq.engine import simulate
from ajq.gadgets import DEFAULT_POLICY, SERVERS, priority_inversion_trace


@dataclass
class Config:
    variant: str = "length"
    rate: Fraction = Fraction(4, 5)
    horizon: int = 4000
    burst: int = 10
    burst_time: int = 1000
    samples: int = 400


def sample_queues(metrics, cfg: Config):
    rows = []
    for k in range(cfg.samples + 1):
        t = Fraction(cfg.horizon * k, cfg.samples)
        rows.append([float(t)] + [metrics.queue[s].value_at(t) for s in SERVERS] + [metrics.total_queued.value_at(t)])
    return rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--variant", default="length", choices=sorted(DEFAULT_POLICY))
    ap.add_argument("--policy")
    ap.add_argument("--horizon", type=int, default=4000)
    ap.add_argument("--out", default="runs/oscillation.csv")
    args = ap.parse_args()
    cfg = Config(variant=args.variant, horizon=args.horizon, burst_time=args.horizon // 4)
    policy = args.policy or DEFAULT_POLICY[cfg.variant]

    trace = priority_inversion_trace(cfg.variant, cfg.rate, cfg.horizon, cfg.burst, cfg.burst_time)
    metrics = simulate(SERVERS, trace, policy, cfg.horizon).metrics
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time"] + [f"Q_{s}" for s in SERVERS] + ["total"])
        w.writerows(sample_queues(metrics, cfg))

    g = detect_growth(metrics)
    osc = oscillation(metrics, "s1", "s4")
    print(f"{cfg.variant} gadget under {policy}: {g.verdict}, total {g.start_total} -> {g.final_total}")
    print("epochs (leader, peak):", " ".join(f"{s}:{v}" for s, v in osc.epochs))
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
