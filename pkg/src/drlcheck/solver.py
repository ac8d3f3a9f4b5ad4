"""Complete satisfiability check for queries over ReLU networks.

Interval bound propagation prunes and supplies variable bounds; each
branch-and-bound node solves the LP relaxation (exact for fixed ReLU
phases, triangle relaxation for undecided ones). A SAT verdict is only
returned with a witness that survives concrete re-evaluation.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import lp
from .network import WeightedSum, evaluate
from .query import EQ, GE, LE, Query, inp as _in, simple_equality

log = logging.getLogger(__name__)

SAT, UNSAT, UNKNOWN = "SAT", "UNSAT", "UNKNOWN"
ACTIVE, INACTIVE = 1, -1
TAU_VAL = 1e-6


class UnboundedInputError(ValueError):
    pass


@dataclass
class SolverConfig:
    tau_lp: float = lp.TAU_LP
    tau_val: float = TAU_VAL
    max_nodes: int = 200_000
    timeout: float | None = None


@dataclass
class Verdict:
    status: str
    witness: np.ndarray | None = None  # shape (copies, input_size)
    stats: dict = field(default_factory=dict)
    reason: str = ""

    @property
    def sat(self):
        return self.status == SAT

    @property
    def unsat(self):
        return self.status == UNSAT


# -- encoding ---------------------------------------------------------------

class _Encoding:
    """Input classes after merging simple equalities and absorbing 1-term bounds."""

    def __init__(self, q: Query):
        self.q = q
        net = q.net
        parent = {v: v for v in q.input_refs()}

        def find(v):
            while parent[v] != v:
                parent[v] = parent[parent[v]]
                v = parent[v]
            return v

        rows = []
        for c in q.constraints + q.coupling:
            pair = simple_equality(c)
            if pair:
                a, b = find(pair[0]), find(pair[1])
                if a != b:
                    lo, hi = min(a, b), max(a, b)
                    parent[hi] = lo
            else:
                rows.append(c)

        reps = sorted({find(v) for v in parent})
        self.col_of = {v: reps.index(find(v)) for v in parent}
        n = len(reps)
        self.in_lo = np.full(n, -math.inf)
        self.in_hi = np.full(n, math.inf)
        for v, (lo, hi) in q.boxes.items():
            if v.site == "in":
                j = self.col_of[v]
                self.in_lo[j] = max(self.in_lo[j], lo)
                self.in_hi[j] = min(self.in_hi[j], hi)
        self.out_lo = np.full((q.copies, net.output_size), -math.inf)
        self.out_hi = np.full((q.copies, net.output_size), math.inf)
        for v, (lo, hi) in q.boxes.items():
            if v.site == "out":
                self.out_lo[v.copy, v.index] = max(self.out_lo[v.copy, v.index], lo)
                self.out_hi[v.copy, v.index] = min(self.out_hi[v.copy, v.index], hi)

        self.rows = []
        for c in rows:
            if len(c.terms) == 1:
                coef, v = c.terms[0]
                if coef == 0.0:
                    self.rows.append(c)
                    continue
                val = c.constant / coef
                rel = c.relation
                if coef < 0 and rel != EQ:
                    rel = GE if rel == LE else LE
                if v.site == "in":
                    lo, hi, j = self.in_lo, self.in_hi, self.col_of[v]
                else:
                    lo, hi, j = self.out_lo[v.copy], self.out_hi[v.copy], v.index
                if rel in (LE, EQ):
                    hi[j] = min(hi[j], val)
                if rel in (GE, EQ):
                    lo[j] = max(lo[j], val)
            else:
                self.rows.append(c)
        self.n_inputs = n

        bad = [v for v in parent if not (math.isfinite(self.in_lo[self.col_of[v]]) and math.isfinite(self.in_hi[self.col_of[v]]))]
        if bad:
            raise UnboundedInputError(
                f"input {bad[0]} has no finite range; supply finite boxes for every input variable"
            )

    def input_vector(self, xcols: np.ndarray, copy: int) -> np.ndarray:
        net = self.q.net
        return np.array([xcols[self.col_of[_in(i, copy)]] for i in range(net.input_size)])


@dataclass
class Bounds:
    """Per copy, per layer (input layer first): lower and upper arrays."""

    lower: list
    upper: list
    empty: bool = False

    def layer(self, copy: int, layer: int):
        return self.lower[copy][layer], self.upper[copy][layer]


def _propagate(enc: _Encoding, phases: dict) -> Bounds:
    q = enc.q
    net = q.net
    if np.any(enc.in_lo > enc.in_hi):
        return Bounds([], [], True)
    lower, upper = [], []
    empty = False
    for c in range(q.copies):
        idx = [enc.col_of[_in(i, c)] for i in range(net.input_size)]
        lo, hi = enc.in_lo[idx].copy(), enc.in_hi[idx].copy()
        ls, us = [lo], [hi]
        for li, layer in enumerate(net.layers):
            if isinstance(layer, WeightedSum):
                wp = np.maximum(layer.weights, 0.0)
                wn = np.minimum(layer.weights, 0.0)
                lo, hi = wp @ lo + wn @ hi + layer.biases, wp @ hi + wn @ lo + layer.biases
            else:
                # fix phases on the pre-activation bounds
                pre_lo, pre_hi = ls[-1], us[-1]
                for j in range(len(pre_lo)):
                    ph = phases.get((c, li, j))
                    if ph == INACTIVE:
                        pre_hi[j] = min(pre_hi[j], 0.0)
                    elif ph == ACTIVE:
                        pre_lo[j] = max(pre_lo[j], 0.0)
                if np.any(pre_lo > pre_hi):
                    empty = True
                lo, hi = np.maximum(pre_lo, 0.0), np.maximum(pre_hi, 0.0)
            ls.append(lo)
            us.append(hi)
        # output boxes / 1-term output constraints
        ls[-1] = np.maximum(ls[-1], enc.out_lo[c])
        us[-1] = np.minimum(us[-1], enc.out_hi[c])
        if np.any(ls[-1] > us[-1]):
            empty = True
        lower.append(ls)
        upper.append(us)
    return Bounds(lower, upper, empty)


def propagate_bounds(q: Query, phases: dict | None = None) -> Bounds:
    """Sound interval bounds for every neuron of every copy.

    ``phases`` maps (copy, relu_layer_index, neuron) to ACTIVE/INACTIVE.
    """
    return _propagate(_Encoding(q), phases or {})


# -- LP relaxation -----------------------------------------------------------

def _relaxation(enc: _Encoding, bounds: Bounds, phases: dict):
    """Build LP data. Returns (A, rel, b, lo, hi) and the candidate list."""
    q = enc.q
    net = q.net
    cols_lo = list(enc.in_lo)
    cols_hi = list(enc.in_hi)
    rows, rels, rhs = [], [], []

    def new_col(lo, hi):
        cols_lo.append(lo)
        cols_hi.append(hi)
        return len(cols_lo) - 1

    out_cols = []
    candidates = []
    for c in range(q.copies):
        cur = [enc.col_of[_in(i, c)] for i in range(net.input_size)]
        for li, layer in enumerate(net.layers):
            lo, hi = bounds.lower[c][li + 1], bounds.upper[c][li + 1]
            if isinstance(layer, WeightedSum):
                nxt = []
                for j in range(layer.size):
                    z = new_col(lo[j], hi[j])
                    row = {z: 1.0}
                    for k, w in enumerate(layer.weights[j]):
                        if w != 0.0 and cur[k] >= 0:
                            row[cur[k]] = row.get(cur[k], 0.0) - w
                    rows.append(row)
                    rels.append(EQ)
                    rhs.append(layer.biases[j])
                    nxt.append(z)
                cur = nxt
            else:
                pre_lo, pre_hi = bounds.lower[c][li], bounds.upper[c][li]
                nxt = []
                for j, p in enumerate(cur):
                    l, u = pre_lo[j], pre_hi[j]
                    ph = phases.get((c, li, j))
                    if p < 0 or ph == INACTIVE or u <= 0.0:
                        nxt.append(-1)  # constant zero
                    elif ph == ACTIVE or l >= 0.0:
                        nxt.append(p)
                    else:
                        y = new_col(0.0, u)
                        rows.append({y: 1.0, p: -1.0})
                        rels.append(GE)
                        rhs.append(0.0)
                        s = u / (u - l)
                        rows.append({y: 1.0, p: -s})
                        rels.append(LE)
                        rhs.append(-s * l)
                        nxt.append(y)
                        candidates.append((-(u - l), c, li, j))
                cur = nxt
        out_cols.append(cur)

    for con in enc.rows:
        row = {}
        const = con.constant
        for coef, v in con.terms:
            col = enc.col_of[v] if v.site == "in" else out_cols[v.copy][v.index]
            if col >= 0:
                row[col] = row.get(col, 0.0) + coef
        rows.append(row)
        rels.append(con.relation)
        rhs.append(const)
    # output boxes where the last layer is a constant zero
    for c in range(q.copies):
        for j, col in enumerate(out_cols[c]):
            if col >= 0:
                cols_lo[col] = max(cols_lo[col], bounds.lower[c][-1][j])
                cols_hi[col] = min(cols_hi[col], bounds.upper[c][-1][j])

    n = len(cols_lo)
    A = np.zeros((len(rows), n))
    for i, row in enumerate(rows):
        for j, v in row.items():
            A[i, j] = v
    candidates.sort()
    return (A, rels, np.array(rhs, dtype=float), np.array(cols_lo), np.array(cols_hi)), candidates


# -- witness checking ----------------------------------------------------------

def validate_witness(q: Query, witness, tau_val: float = TAU_VAL) -> bool:
    """Concrete re-evaluation of every copy against boxes, constraints and coupling."""
    x = np.asarray(witness, dtype=float)
    if x.shape != (q.copies, q.net.input_size) or not np.all(np.isfinite(x)):
        return False
    y = np.array([evaluate(q.net, x[c]) for c in range(q.copies)])

    def value(v):
        return x[v.copy, v.index] if v.site == "in" else y[v.copy, v.index]

    for v, (lo, hi) in q.boxes.items():
        val = value(v)
        if val < lo - tau_val or val > hi + tau_val:
            return False
    return all(c.violation(value) <= tau_val for c in q.constraints + q.coupling)


# -- branch and bound ------------------------------------------------------------

def solve(q: Query, config: SolverConfig | None = None) -> Verdict:
    """Decide whether some input assignment satisfies ``q``.

    Nodes are explored depth first, the Inactive child before the Active
    one, so the verdict and witness are fixed by the query alone.
    """
    cfg = config or SolverConfig()
    t0 = time.perf_counter()
    enc = _Encoding(q)
    stats = {"nodes": 0, "lp_calls": 0, "lp_iterations": 0}
    deadline = t0 + cfg.timeout if cfg.timeout else None
    stack = [{}]
    unresolved = 0

    def done(status, witness=None, reason=""):
        stats["time"] = time.perf_counter() - t0
        return Verdict(status, witness, stats, reason)

    while stack:
        if stats["nodes"] >= cfg.max_nodes:
            return done(UNKNOWN, reason="node budget exhausted")
        if deadline is not None and time.perf_counter() > deadline:
            return done(UNKNOWN, reason="timeout")
        phases = stack.pop()
        stats["nodes"] += 1
        bounds = _propagate(enc, phases)
        if bounds.empty:
            continue
        data, candidates = _relaxation(enc, bounds, phases)
        stats["lp_calls"] += 1
        res = lp.is_feasible(*data, tol=cfg.tau_lp)
        stats["lp_iterations"] += res.iterations
        if res.status == lp.INFEASIBLE:
            continue
        if res.status != lp.OPTIMAL:
            unresolved += 1
            continue
        xcols = res.x[: enc.n_inputs]
        witness = np.array([enc.input_vector(xcols, c) for c in range(q.copies)])
        if validate_witness(q, witness, cfg.tau_val):
            return done(SAT, witness)
        if not candidates:
            log.debug("leaf LP feasible but witness fails validation")
            unresolved += 1
            continue
        _, c, li, j = candidates[0]
        stack.append({**phases, (c, li, j): ACTIVE})
        stack.append({**phases, (c, li, j): INACTIVE})

    if unresolved:
        return done(UNKNOWN, reason=f"{unresolved} leaves unresolved at LP tolerance")
    return done(UNSAT)
