"""Growth verdicts for every gadget variant under every policy.

Each variant is built to defeat its own policy; the table shows which other
policies it also breaks and which stay bounded on the same trace.
"""
import argparse
from fractions import Fraction

from ajq.checkers import detect_growth
from ajq.engine import simulate
from ajq.gadgets import DEFAULT_POLICY, SERVERS, priority_inversion_trace, required_burstiness
from ajq.policies import PolicyId


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--horizon", type=int, default=4000)
    args = ap.parse_args()
    policies = list(PolicyId)
    print(f"{'variant':10s} {'b needed':>9s}  " + " ".join(f"{p.value:>8s}" for p in policies))
    for variant in sorted(DEFAULT_POLICY):
        trace = priority_inversion_trace(variant, horizon=args.horizon, burst_time=args.horizon // 4)
        need = required_burstiness(trace, Fraction(4, 5))
        cells = []
        for p in policies:
            rep = detect_growth(simulate(SERVERS, trace, p, args.horizon).metrics)
            mark = {"growing": "GROW", "not-growing": "ok", "inconclusive": "?"}[rep.verdict]
            cells.append(f"{mark:>8s}")
        print(f"{variant:10s} {float(need):9.2f}  " + " ".join(cells))


if __name__ == "__main__":
    main()
