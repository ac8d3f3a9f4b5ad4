"""``drlcheck`` command line.

Exit codes: 0 proved / UNSAT, 1 refuted / SAT, 2 exhausted / unknown,
3 usage or input error. The machine-readable report (``--report``) is a
JSON document with sorted keys and no timing, so identical runs produce
identical bytes; the human summary on stdout adds wall time.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .abstraction import DIRECT, AbstractionMask, MaskError, parse_mask, solve_with_abstraction
from .checker import (
    LIVENESS,
    PROVED,
    REFUTED,
    SAFETY,
    CheckConfig,
    Property,
    bmc,
    bmc_liveness,
    k_induction_liveness,
    k_induction_safety,
    portfolio,
)
from .invariants import (
    NO_INVARIANT,
    InputBoundSearch,
    InvariantSearchError,
    OutputBoundSearch,
    find_input_invariant,
    find_output_invariant,
    restriction_boxes,
)
from .lp import TAU_LP
from .network import NetworkError, load_network
from .oracle import OracleError, generate_trace, grid_sat, reach_oracle
from .query import (
    DELTA_STRICT,
    Query,
    QueryError,
    constraint_from_dict,
    ge,
    out,
    parse_ref,
    queries_from_dict,
)
from .solver import SAT, TAU_VAL, UNSAT, SolverConfig, UnboundedInputError, solve
from .transition import (
    FROM_ANYWHERE,
    FROM_INITIAL,
    TransitionError,
    TransitionSpec,
    load_spec,
    unroll,
)

log = logging.getLogger("drlcheck")

EXIT_OK, EXIT_VIOLATED, EXIT_UNKNOWN, EXIT_USAGE = 0, 1, 2, 3
_INPUT_ERRORS = (OSError, NetworkError, QueryError, TransitionError, MaskError, KeyError, TypeError,
                 UnboundedInputError, OracleError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive(x):
    v = float(x)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {x}")
    return v


def _common(p):
    p.add_argument("--report", type=Path, help="write the JSON report here")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--timeout", type=_positive, help="wall-clock budget in seconds")
    p.add_argument("--tau-lp", type=_positive, default=TAU_LP)
    p.add_argument("--tau-val", type=_positive, default=TAU_VAL)
    p.add_argument("--delta-strict", type=_positive, default=DELTA_STRICT)
    p.add_argument("--max-nodes", type=int, default=SolverConfig.max_nodes)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="drlcheck", description="Verify ReLU policies over sliding-window transition systems.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("check", help="BMC / k-induction on a safety or liveness property")
    c.add_argument("--spec", type=Path, required=True)
    c.add_argument("--property", type=Path, required=True)
    c.add_argument("--method", choices=["portfolio", "bmc", "kind"], default="portfolio")
    c.add_argument("--k", type=int, help="depth for --method bmc/kind")
    c.add_argument("--k-max", type=int, default=10)
    c.add_argument("--abstract-fields", nargs="+", metavar="STEP:FIELD")
    c.add_argument("--combo-limit", type=int, default=4096)
    c.add_argument("--trace", type=Path, help="write a counterexample trace here")
    _common(c)

    i = sub.add_parser("invariant", help="infer an output or input bound by bisection")
    i.add_argument("--config", type=Path, required=True)
    i.add_argument("--template", choices=["output", "input"])
    i.add_argument("--epsilon", type=float)
    i.add_argument("--eta", type=float)
    i.add_argument("--pkt", type=float)
    i.add_argument("--precision", type=float)
    _common(i)

    s = sub.add_parser("solve", help="solve one query file")
    s.add_argument("query", type=Path)
    s.add_argument("--abstract-fields", nargs="+", metavar="STEP:FIELD")
    _common(s)

    o = sub.add_parser("oracle", help="brute-force ground truth (small fixtures only)")
    osub = o.add_subparsers(dest="oracle_command", required=True, parser_class=_Parser)
    g = osub.add_parser("grid")
    g.add_argument("query", type=Path)
    g.add_argument("--pitch", type=_positive, default=0.01)
    _common(g)
    r = osub.add_parser("reach")
    r.add_argument("--spec", type=Path, required=True)
    r.add_argument("--property", type=Path, required=True)
    r.add_argument("--depth", type=int, default=5)
    r.add_argument("--pitch", type=_positive, default=0.25)
    _common(r)
    t = osub.add_parser("trace")
    t.add_argument("--spec", type=Path, required=True)
    t.add_argument("--length", type=int, default=5)
    _common(t)
    return ap


# -- helpers -------------------------------------------------------------------

def _read_json(path: Path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise UsageError(f"{path}: {e.msg} (line {e.lineno}, column {e.colno})") from None
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _solver_config(args) -> SolverConfig:
    return SolverConfig(args.tau_lp, args.tau_val, args.max_nodes, args.timeout)


def _tolerances(args) -> dict:
    return {"tau_lp": args.tau_lp, "tau_val": args.tau_val, "delta_strict": args.delta_strict}


def load_property(path: Path, delta_strict: float = DELTA_STRICT):
    """``{"kind": "safety"|"liveness", "predicate": [...], "assume": [...]}``."""
    doc = _read_json(path)
    kind = doc.get("kind")
    if kind not in (SAFETY, LIVENESS):
        raise UsageError(f"{path}: kind must be 'safety' or 'liveness'")
    pred = [constraint_from_dict(c, delta_strict) for c in doc.get("predicate", [])]
    assume = [constraint_from_dict(c, delta_strict) for c in doc.get("assume", [])]
    prop = Property.safety(pred) if kind == SAFETY else Property.liveness(pred)
    return prop, assume


def _mask(items, spec: TransitionSpec | None) -> AbstractionMask | None:
    if not items:
        return None
    if spec is None:
        raise UsageError("--abstract-fields needs a query tied to a transition spec")
    return parse_mask(items, spec)


def _clean(x):
    """Floats that JSON can carry, recursively."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    return x


def _emit(args, report: dict, elapsed: float, out=None):
    doc = _clean(report)
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.report:
        args.report.write_text(text)
    lines = [f"{k}: {v}" for k, v in doc.items() if k not in ("trace", "query_log", "tolerances", "queries")]
    if doc.get("trace"):
        lines.append(f"trace: {len(doc['trace'])} states")
        for n, st in enumerate(doc["trace"]):
            lines.append(f"  [{n}] state={st['state']} output={st['output']}")
    if doc.get("query_log"):
        lines.append("query log:")
        lines += [f"  {b} -> {v}" for b, v in doc["query_log"]]
    lines.append(f"time: {elapsed:.3f}s")
    print("\n".join(lines), file=out or sys.stdout)


# -- subcommands ---------------------------------------------------------------

_CHECK_EXIT = {PROVED: EXIT_OK, REFUTED: EXIT_VIOLATED}


def cmd_check(args):
    spec = load_spec(args.spec, args.delta_strict)
    prop, assume = load_property(args.property, args.delta_strict)
    if assume:
        spec = spec.with_state_constraints(assume)
    cfg = CheckConfig(_solver_config(args), max(1, args.threads), args.combo_limit, args.delta_strict,
                      args.timeout, _mask(args.abstract_fields, spec))
    if args.method == "portfolio":
        if args.k_max < 1:
            raise UsageError("--k-max must be at least 1")
        result = portfolio(spec, prop, args.k_max, cfg)
    else:
        if args.k is None or args.k < 1:
            raise UsageError(f"--method {args.method} needs --k >= 1")
        if args.method == "bmc":
            result = (bmc(spec, prop.predicate, args.k, cfg) if prop.kind == SAFETY
                      else bmc_liveness(spec, prop.predicate, args.k, cfg))
        else:
            result = (k_induction_safety(spec, prop.predicate, args.k, cfg) if prop.kind == SAFETY
                      else k_induction_liveness(spec, prop.predicate, args.k, cfg))
    report = {"command": "check", "property": prop.kind, **result.to_dict(),
              "tolerances": _tolerances(args), "seed": args.seed}
    if args.trace and result.trace:
        args.trace.write_text(json.dumps(_clean(result.trace), indent=2) + "\n")
    return report, _CHECK_EXIT.get(result.outcome, EXIT_UNKNOWN)


def _invariant_net_and_spec(doc, base: Path):
    if "spec" in doc:
        spec = load_spec(base / doc["spec"])
        return spec.net, spec
    if "network" in doc:
        return load_network(base / doc["network"]), None
    raise UsageError("invariant config needs 'spec' or 'network'")


def cmd_invariant(args):
    doc = _read_json(args.config)
    base = args.config.parent
    net, spec = _invariant_net_and_spec(doc, base)
    template = args.template or doc.get("template", "output")
    eps = args.epsilon if args.epsilon is not None else float(doc.get("epsilon", 0.0))
    if eps < 0:
        raise UsageError("--epsilon must be non-negative")
    if "boxes" in doc:
        boxes = tuple(tuple(map(float, b)) for b in doc["boxes"])
    elif spec is not None:
        boxes = restriction_boxes(spec, doc.get("fields", {}), eps)
    else:
        raise UsageError("invariant config needs 'boxes' or a spec with 'fields'")
    if len(boxes) != net.input_size:
        raise UsageError(f"{len(boxes)} boxes for {net.input_size} inputs")
    solver = _solver_config(args)
    out_idx = int(doc.get("output_index", 0))
    try:
        if template == "output":
            eta = args.eta if args.eta is not None else float(doc.get("eta", 0.01))
            if not eta > 0:
                raise UsageError("--eta must be positive")
            cfg = OutputBoundSearch(boxes, eta, eps, out_idx, doc.get("floor"), int(doc.get("probes", 0)))
            result = find_output_invariant(net, cfg, solver)
        else:
            pkt = args.pkt if args.pkt is not None else doc.get("pkt")
            if pkt is None or not float(pkt) >= 2:
                raise UsageError("--pkt must be at least 2")
            if "searched_positions" in doc:
                searched = tuple(int(p) for p in doc["searched_positions"])
            elif spec is not None and "searched" in doc:
                searched = tuple(spec.positions_of(doc["searched"]))
            else:
                raise UsageError("input template needs 'searched' (a field name) or 'searched_positions'")
            oc = doc.get("output_constraint")
            oc = constraint_from_dict(oc, args.delta_strict) if oc else ge(out(out_idx), 0.0)
            precision = args.precision if args.precision is not None else float(doc.get("precision", 1.0))
            if not precision > 0:
                raise UsageError("--precision must be positive")
            cfg = InputBoundSearch(boxes, searched, float(pkt), oc, precision, float(doc.get("start", 1.0)), eps,
                                   int(doc.get("probes", 0)))
            result = find_input_invariant(net, cfg, solver)
    except ValueError as e:
        raise UsageError(str(e)) from None
    report = {"command": "invariant", "template": template, **result.to_dict(),
              "tolerances": _tolerances(args), "seed": args.seed}
    code = EXIT_UNKNOWN if result.status == NO_INVARIANT else EXIT_OK
    return report, code


def load_query_file(path: Path, delta_strict: float = DELTA_STRICT):
    """Queries from a file naming either a ``network`` or a ``spec`` to unroll.

    With a spec, ``unroll: {"k": ..., "start": "anywhere"|"initial"}`` supplies
    the copies, boxes and coupling; the file's own boxes and constraints are
    added on top.
    """
    doc = _read_json(path)
    base = path.parent
    if "spec" in doc:
        spec = load_spec(base / doc["spec"], delta_strict)
        un = doc.get("unroll", {})
        start = un.get("start", FROM_ANYWHERE)
        if start not in (FROM_ANYWHERE, FROM_INITIAL):
            raise UsageError(f"unknown unroll start {start!r}")
        skeleton = unroll(spec, int(un.get("k", doc.get("copies", 1))), start)
        qs = queries_from_dict({**doc, "copies": skeleton.copies}, spec.net, delta_strict)
        explicit = {parse_ref(key) for key in doc.get("boxes", {})}
        merged = []
        for q in qs:
            boxes = dict(skeleton.boxes)
            for v in explicit:
                lo, hi = q.boxes[v]
                a, b = boxes.get(v, (-math.inf, math.inf))
                boxes[v] = (max(a, lo), min(b, hi))
            merged.append(Query(spec.net, skeleton.copies, boxes, skeleton.constraints + q.constraints,
                                skeleton.coupling + q.coupling))
        return merged, spec
    if "network" in doc:
        net = load_network(base / doc["network"])
        return queries_from_dict(doc, net, delta_strict), None
    raise UsageError(f"{path}: query file needs 'network' or 'spec'")


def cmd_solve(args):
    queries, spec = load_query_file(args.query, args.delta_strict)
    mask = _mask(args.abstract_fields, spec)
    cfg = _solver_config(args)
    entries = []
    status = UNSAT
    witness = None
    for q in queries:
        if mask is not None:
            v, tag, _ = solve_with_abstraction(q, mask, spec, cfg)
        else:
            v, tag = solve(q, cfg), DIRECT
        entries.append({"status": v.status, "provenance": tag, "nodes": v.stats.get("nodes", 0),
                        "reason": v.reason})
        if v.status == SAT:
            status, witness = SAT, v.witness
            break
        if v.status != UNSAT:
            status = v.status
    tags = {e["provenance"] for e in entries}
    report = {
        "command": "solve",
        "status": status,
        "provenance": tags.pop() if len(tags) == 1 else "mixed",
        "witness": witness,
        "queries": entries,
        "tolerances": _tolerances(args),
        "seed": args.seed,
    }
    code = {SAT: EXIT_VIOLATED, UNSAT: EXIT_OK}.get(status, EXIT_UNKNOWN)
    return report, code


def cmd_oracle(args):
    if args.oracle_command == "grid":
        queries, _ = load_query_file(args.query, args.delta_strict)
        found, point, evaluated = False, None, 0
        for q in queries:
            r = grid_sat(q, args.pitch)
            evaluated += r.evaluated
            if r.found:
                found, point = True, r.point
                break
        report = {"command": "oracle grid", "found": found, "point": point, "evaluated": evaluated,
                  "pitch": args.pitch}
        return report, EXIT_VIOLATED if found else EXIT_UNKNOWN
    if args.oracle_command == "reach":
        spec = load_spec(args.spec, args.delta_strict)
        prop, assume = load_property(args.property, args.delta_strict)
        if prop.kind != SAFETY:
            raise UsageError("reach oracle takes a safety property")
        spec = spec.with_state_constraints(assume)
        depth = reach_oracle(spec, prop.predicate.constraints, args.depth, args.pitch)
        report = {"command": "oracle reach", "depth": depth, "max_depth": args.depth, "pitch": args.pitch}
        return report, EXIT_VIOLATED if depth else EXIT_UNKNOWN
    spec = load_spec(args.spec, args.delta_strict)
    if args.length < 1:
        raise UsageError("--length must be at least 1")
    states = generate_trace(spec, args.length, args.seed)
    report = {"command": "oracle trace", "seed": args.seed, "states": states}
    return report, EXIT_OK


_COMMANDS = {"check": cmd_check, "invariant": cmd_invariant, "solve": cmd_solve, "oracle": cmd_oracle}


def main(argv=None) -> int:
    level = os.environ.get("DRLCHECK_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    ap = build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        ap.error("--threads must be at least 1")
    np.random.seed(args.seed)
    t0 = time.perf_counter()
    try:
        report, code = _COMMANDS[args.command](args)
    except UsageError as e:
        print(f"drlcheck: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except _INPUT_ERRORS as e:
        msg = e.strerror if isinstance(e, OSError) and e.strerror else str(e)
        print(f"drlcheck: error: {type(e).__name__}: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantSearchError as e:
        print(f"drlcheck: {e}", file=sys.stderr)
        return EXIT_UNKNOWN
    _emit(args, report, time.perf_counter() - t0)
    return code


if __name__ == "__main__":
    sys.exit(main())
