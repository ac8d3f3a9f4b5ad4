"""Sweep the invariant templates on the Aurora-mini policy across epsilon.

For each epsilon, finds the tightest proved lower bound on the policy
output under excellent network conditions, and the smallest sending
ratio above which the policy provably stops increasing its rate.

    python3 scripts/aurora_invariants.py [--eps 0.05 0.1 0.2] [--eta 0.01] [--pkt 8]
"""
import argparse

from drlcheck import fixtures as F
from drlcheck.invariants import (
    InputBoundSearch,
    OutputBoundSearch,
    find_input_invariant,
    find_output_invariant,
    restriction_boxes,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=float, nargs="+", default=[0.05, 0.1, 0.2])
    ap.add_argument("--eta", type=float, default=0.01)
    ap.add_argument("--pkt", type=float, default=8.0)
    args = ap.parse_args()
    spec, _, _ = F.aurora_mini()

    print(f"{'eps':>6}  {'output bound':>12} {'queries':>8}   {'input bound':>11} {'queries':>8}  status")
    for eps in args.eps:
        boxes = restriction_boxes(spec, {"latency_gradient": "symmetric", "latency_ratio": "unit_slack",
                                         "sending_ratio": 1.0}, eps)
        o = find_output_invariant(spec.net, OutputBoundSearch(boxes, args.eta, epsilon=eps))
        boxes = restriction_boxes(spec, {"latency_gradient": "symmetric", "latency_ratio": "unit_slack"}, eps)
        searched = tuple(spec.positions_of("sending_ratio"))
        i = find_input_invariant(spec.net, InputBoundSearch(boxes, searched, args.pkt, epsilon=eps))
        ib = "-" if i.proved_bound is None else f"{i.proved_bound:.4f}"
        print(f"{eps:>6}  {o.proved_bound:>12.4f} {len(o.query_log):>8}   {ib:>11} {len(i.query_log):>8}  "
              f"{o.status}/{i.status}")


if __name__ == "__main__":
    main()
