"""Per-depth liveness k-induction outcomes on the ladder fixtures.

Prints, for each fixture, the induction outcome at every k up to a limit,
the depth the portfolio settles on, and the grid oracle's longest
not-good run (the induction should close one step after it).

    python3 scripts/ladder.py [--k-max 7] [--threads N]
"""
import argparse
import time

from drlcheck import fixtures as F
from drlcheck.checker import CheckConfig, k_induction_liveness, portfolio
from drlcheck.oracle import persistence_oracle

NAMES = {1: "pointwise-live", 2: "aurora-mini", 5: "stall"}


def oracle_run(k_star, spec, prop):
    if k_star == 2:
        base, _, _ = F.aurora_mini()
        return persistence_oracle(F.excellent_boxes(base, 0.1), prop.predicate.constraints, 0.05)
    return persistence_oracle(spec, prop.predicate.constraints, 0.25 if k_star == 1 else 0.5)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k-max", type=int, default=7)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    cfg = CheckConfig(threads=args.threads)

    print(f"{'fixture':<16}{'k':>3}  outcome        time")
    for k_star, (spec, prop) in F.ladder().items():
        for k in range(1, args.k_max + 1):
            t0 = time.perf_counter()
            r = k_induction_liveness(spec, prop.predicate, k, cfg)
            print(f"{NAMES[k_star]:<16}{k:>3}  {r.outcome:<13}{time.perf_counter() - t0:6.2f}s")
            if r.outcome == "proved":
                break
        p = portfolio(spec, prop, args.k_max, cfg)
        print(f"  portfolio: {p.outcome} at k={p.k}; oracle longest run {oracle_run(k_star, spec, prop)}\n")


if __name__ == "__main__":
    main()
