"""Compare the closed-form LIS sojourn bound against measured sojourn times.

Unit tasks, no activation delays, generated (r, b)-bounded traces.
"""
import argparse
from dataclasses import dataclass, field
from fractions import Fraction

from ajq.adversary import RbBound, generate_bounded_trace
from ajq.checkers import lis_sojourn_bound
from ajq.engine import simulate
from ajq.model import make_job


@dataclass
class Config:
    servers: list = field(default_factory=lambda: ["s1", "s2", "s3", "s4"])
    b: Fraction = Fraction(2)
    rates: tuple = (Fraction(1, 16), Fraction(1, 8), Fraction(1, 4), Fraction(3, 8), Fraction(49, 100))
    jobs_target: int = 4000
    seed: int = 11


def templates(servers):
    out = [make_job(f"u{s}", [(1, [[]], s)]) for s in servers]
    out.append(make_job("c123", [(1, [[]], "s1"), (2, [[1]], "s2"), (3, [[2]], "s3")]))
    out.append(make_job("c42", [(1, [[]], "s4"), (2, [[1]], "s2")]))
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--jobs", type=int, default=4000)
    args = ap.parse_args()
    cfg = Config(seed=args.seed, jobs_target=args.jobs)
    print(f"{'r':>7s} {'bound':>8s} {'jobs':>6s} {'max':>6s} {'mean':>7s} {'over':>6s}")
    for r in cfg.rates:
        horizon = int(cfg.jobs_target / (2 * r))
        trace = generate_bounded_trace(cfg.seed, cfg.servers, RbBound(r, cfg.b), templates(cfg.servers), horizon,
                                       attempts=2, spread=3)
        done = simulate(cfg.servers, trace, "LIS", horizon + 50).metrics.completed_jobs()
        sojourns = [j.sojourn for j in done]
        bound = lis_sojourn_bound(r, cfg.b, 1, 1, 0)
        over = sum(1 for s in sojourns if bound is None or s >= bound)
        print(f"{str(r):>7s} {float(bound):8.3f} {len(done):6d} {float(max(sojourns)):6.2f} "
              f"{float(sum(sojourns) / len(sojourns)):7.3f} {over:6d}")


if __name__ == "__main__":
    main()
