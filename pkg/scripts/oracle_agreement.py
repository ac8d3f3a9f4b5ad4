"""Compare solver verdicts with the grid oracle on random small queries.

Uses the same generator as the acceptance test, so a larger --n or a
different --seed probes beyond what the suite covers.

    python3 scripts/oracle_agreement.py [--n 500] [--seed 1] [--h 0.01]
"""
import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from drlcheck.oracle import boundary_band, grid_sat  # noqa: E402
from drlcheck.solver import SAT, UNSAT, solve, validate_witness  # noqa: E402
from tests.test_acceptance import _loosened, _random_query  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--h", type=float, default=1e-2)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    tally = {"agree-sat": 0, "agree-unsat": 0, "in-band": 0, "contradiction": 0, "unknown": 0}
    t0 = time.perf_counter()
    for n in range(args.n):
        q = _random_query(rng)
        v = solve(q)
        if v.status == SAT:
            if not validate_witness(q, v.witness):
                key = "contradiction"
            elif grid_sat(q, args.h).found:
                key = "agree-sat"
            elif grid_sat(_loosened(q, boundary_band(q, args.h)), args.h).found:
                key = "in-band"
            else:
                key = "contradiction"
        elif v.status == UNSAT:
            key = "contradiction" if grid_sat(q, args.h).found else "agree-unsat"
        else:
            key = "unknown"
        tally[key] += 1
        if key == "contradiction":
            print(f"query {n}: solver {v.status} disagrees with the grid")
    print(tally, f"{time.perf_counter() - t0:.1f}s")
    return 1 if tally["contradiction"] else 0


if __name__ == "__main__":
    sys.exit(main())
