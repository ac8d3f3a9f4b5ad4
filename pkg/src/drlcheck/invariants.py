"""Invariant inference by bisection over a monotone query family.

Two templates:

* output bound: inputs fixed to a box, bisect the upper bound ``b`` of
  ``out <= b`` between a floor ``-M`` (UNSAT) and ``0`` (SAT);
* input bound: output constraint fixed (``out >= 0``), bisect the lower
  end ``L`` of the searched inputs' range ``[L, PKT]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from .network import Network
from .query import LinearConstraint, Query, conjoin, ge, inp, negate_upper, out
from .solver import SAT, UNKNOWN, UNSAT, SolverConfig, propagate_bounds, solve
from .transition import GOOD, StatePredicate, TransitionSpec

PROVED = "proved"
DEGENERATE = "degenerate"
NO_INVARIANT = "no_invariant"


class InvariantSearchError(RuntimeError):
    pass


class NonMonotonicError(InvariantSearchError):
    pass


@dataclass(frozen=True)
class OutputBoundSearch:
    input_boxes: tuple  # (lo, hi) per input
    eta: float
    epsilon: float = 0.0
    output_index: int = 0
    floor: float | None = None  # M; None derives it from interval bounds
    probes: int = 0  # extra evenly spaced queries checked for monotonicity

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("precision eta must be positive")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")


@dataclass(frozen=True)
class InputBoundSearch:
    input_boxes: tuple  # (lo, hi) per input; searched entries are overridden
    searched: tuple  # input positions whose range is [L, pkt]
    pkt: float
    output_constraint: LinearConstraint = field(default_factory=lambda: ge(out(0), 0.0))
    precision: float = 1.0
    start: float = 1.0
    epsilon: float = 0.0
    probes: int = 0

    def __post_init__(self):
        if not self.pkt >= 2:
            raise ValueError("PKT must be at least 2")
        if not self.precision > 0:
            raise ValueError("precision must be positive")
        if not self.searched:
            raise ValueError("no searched input positions")


@dataclass
class InvariantResult:
    status: str
    proved_bound: float | None
    bracketing_sat: float | None
    precision_achieved: float | None
    query_log: list  # (bound, verdict) in call order
    iterations: int = 0
    floor: float | None = None
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "proved_bound": self.proved_bound,
            "bracketing_sat": self.bracketing_sat,
            "precision_achieved": self.precision_achieved,
            "iterations": self.iterations,
            "floor": self.floor,
            "query_log": [[b, v] for b, v in self.query_log],
            "note": self.note,
        }


def restriction_boxes(spec: TransitionSpec, restrictions: Mapping, epsilon: float) -> tuple:
    """Per-input boxes from per-field restrictions.

    A restriction is ``"symmetric"`` ([-eps, eps]), ``"unit_slack"``
    ([1, 1+eps]), a number (fixed value), a ``[lo, hi]`` pair, or
    ``"searched"`` / ``"free"`` (the field's global range).
    """
    boxes = [spec.box_of(p) for p in range(spec.net.input_size)]
    for name, r in restrictions.items():
        if r == "symmetric":
            box = (-epsilon, epsilon)
        elif r == "unit_slack":
            box = (1.0, 1.0 + epsilon)
        elif r in ("searched", "free"):
            continue
        elif isinstance(r, (int, float)):
            box = (float(r), float(r))
        else:
            box = (float(r[0]), float(r[1]))
        for p in spec.positions_of(name):
            boxes[p] = box
    return tuple(boxes)


def _base_query(net: Network, boxes) -> Query:
    return Query(net, 1, {inp(i): b for i, b in enumerate(boxes)})


def _probe(ask, lo, hi, n, log, sat_above):
    """Query ``n`` evenly spaced interior points and return the tightened bracket."""
    for i in range(1, n + 1):
        ask(lo + i * (hi - lo) / (n + 1))
    _check_monotone(log, sat_above)
    sats = [b for b, v in log if v == SAT]
    unsats = [b for b, v in log if v == UNSAT]
    if sat_above:
        return max(unsats), min(sats)
    return max(sats), min(unsats)


def _check_monotone(log, sat_above: bool):
    sats = [b for b, v in log if v == SAT]
    unsats = [b for b, v in log if v == UNSAT]
    if not sats or not unsats:
        return
    ok = min(sats) > max(unsats) if sat_above else max(sats) < min(unsats)
    if not ok:
        raise NonMonotonicError(
            "verdicts along the searched bound are not monotone: "
            f"SAT at {sorted(sats)}, UNSAT at {sorted(unsats)}"
        )


def find_output_invariant(net: Network, cfg: OutputBoundSearch,
                          solver: SolverConfig | None = None) -> InvariantResult:
    """Largest ``b`` (to within eta) such that ``out <= b`` is impossible on the input box."""
    base = _base_query(net, cfg.input_boxes)
    log = []

    def ask(b):
        v = solve(conjoin(base, negate_upper(b, cfg.output_index)), solver)
        if v.status == UNKNOWN:
            raise InvariantSearchError(f"solver returned UNKNOWN at bound {b}: {v.reason}")
        log.append((b, v.status))
        return v.status

    if cfg.floor is None:
        lo = propagate_bounds(base).lower[0][-1][cfg.output_index]
        M = 1.0 + max(0.0, -float(lo))
    else:
        M = float(cfg.floor)
    first, nxt = -M, 0.0
    if ask(nxt) == UNSAT:
        return InvariantResult(DEGENERATE, 0.0, None, None, log, 0, M,
                               "output <= 0 is already UNSAT; the property holds on this box")
    if ask(first) == SAT:
        raise InvariantSearchError(f"search floor too high: output <= {-M} is SAT; increase M")
    if cfg.probes:
        first, nxt = _probe(ask, first, nxt, cfg.probes, log, sat_above=True)
    iterations = 0
    while abs(nxt - first) >= cfg.eta:
        mid = 0.5 * (first + nxt)
        if ask(mid) == SAT:
            nxt = mid
        else:
            first = mid
        iterations += 1
        _check_monotone(log, sat_above=True)
    return InvariantResult(PROVED, first, nxt, nxt - first, log, iterations, M)


def find_input_invariant(net: Network, cfg: InputBoundSearch,
                         solver: SolverConfig | None = None) -> InvariantResult:
    """Smallest lower bound L (to within the precision) such that searched inputs in
    [L, PKT] make the output constraint UNSAT."""
    log = []

    def ask(lo):
        boxes = list(cfg.input_boxes)
        for p in cfg.searched:
            boxes[p] = (lo, cfg.pkt)
        q = conjoin(_base_query(net, boxes), cfg.output_constraint)
        v = solve(q, solver)
        if v.status == UNKNOWN:
            raise InvariantSearchError(f"solver returned UNKNOWN at lower bound {lo}: {v.reason}")
        log.append((lo, v.status))
        return v.status

    first, nxt = float(cfg.start), float(cfg.pkt)
    if ask(nxt) == SAT:
        return InvariantResult(NO_INVARIANT, None, nxt, None, log, 0,
                               note=f"output constraint is SAT even at [{nxt}, {nxt}]; no invariant at this PKT")
    if ask(first) == UNSAT:
        # nothing below the starting bound is searched, so it is the strongest answer
        return InvariantResult(DEGENERATE, first, None, 0.0, log, 0,
                               note=f"already UNSAT on [{first}, {cfg.pkt}]")
    if cfg.probes:
        first, nxt = _probe(ask, first, nxt, cfg.probes, log, sat_above=False)
    iterations = 0
    while first + cfg.precision < nxt:
        mid = 0.5 * (first + nxt)
        if ask(mid) == SAT:
            first = mid
        else:
            nxt = mid
        iterations += 1
        _check_monotone(log, sat_above=False)
    return InvariantResult(PROVED, nxt, first, nxt - first, log, iterations)


def output_iterations_bound(M: float, eta: float) -> int:
    return math.ceil(math.log2(M / eta))


def input_iterations_bound(pkt: float, start: float = 1.0, precision: float = 1.0) -> int:
    return max(0, math.ceil(math.log2((pkt - start) / precision)))


def as_predicate(result: InvariantResult, output_index: int = 0) -> StatePredicate:
    """Export a proved output bound as ``out >= bound`` (valid on the searched input box)."""
    if result.status != PROVED or result.proved_bound is None:
        raise InvariantSearchError("only proved output bounds can be exported")
    return StatePredicate(GOOD, (ge(out(output_index), result.proved_bound),))
