"""Brute-force ground truth for tests.

Nothing here shares code with the solver's bound or LP machinery: the
forward pass is re-implemented over batches, and equalities are merged by
a separate routine. A grid search that finds nothing is *not* a proof of
UNSAT; callers compare against the solver only outside a boundary band of
width ``pitch * lipschitz``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .query import EQ, GE, LE, Query, VarRef
from .transition import TransitionSpec

GRID_CAP = 10_000_000
STATE_CAP = 200_000
_CHUNK = 1 << 17


class OracleError(RuntimeError):
    pass


def forward_batch(net, X: np.ndarray) -> np.ndarray:
    """Evaluate ``net`` on every row of ``X``."""
    V = np.array(X, dtype=float, ndmin=2)
    for layer in net.layers:
        if layer.kind == "weighted_sum":
            V = V @ layer.weights.T + layer.biases
        else:
            V = np.where(V > 0.0, V, 0.0)
    return V


def axis_points(lo: float, hi: float, h: float) -> np.ndarray:
    """Grid of pitch ``h`` on [lo, hi], both endpoints included."""
    if hi < lo:
        return np.empty(0)
    n = int(math.floor((hi - lo) / h + 1e-9))
    pts = lo + h * np.arange(n + 1)
    if hi - pts[-1] > 1e-12:
        pts = np.append(pts, hi)
    return pts


def _classes(q: Query):
    refs = [VarRef(c, "in", i) for c in range(q.copies) for i in range(q.net.input_size)]
    label = {r: r for r in refs}

    def root(r):
        while label[r] != r:
            r = label[r]
        return r

    for c in q.coupling + q.constraints:
        if c.relation != EQ or c.constant != 0.0 or len(c.terms) != 2:
            continue
        (a, ra), (b, rb) = c.terms
        if ra.site == "in" and rb.site == "in" and a == -b and a != 0.0:
            x, y = root(ra), root(rb)
            if x != y:
                label[max(x, y)] = min(x, y)
    roots = sorted({root(r) for r in refs})
    return roots, {r: roots.index(root(r)) for r in refs}


@dataclass
class GridResult:
    found: bool
    point: np.ndarray | None  # (copies, input_size)
    evaluated: int


def grid_sat(q: Query, pitch: float, cap: int = GRID_CAP, tol: float = 1e-9) -> GridResult:
    """Lexicographically first grid point satisfying ``q``, if any."""
    roots, cls = _classes(q)
    lo = np.full(len(roots), -math.inf)
    hi = np.full(len(roots), math.inf)
    for v, (a, b) in q.boxes.items():
        if v.site == "in":
            lo[cls[v]] = max(lo[cls[v]], a)
            hi[cls[v]] = min(hi[cls[v]], b)
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise OracleError("grid search needs finite boxes")
    axes = [axis_points(a, b, pitch) for a, b in zip(lo, hi)]
    shape = tuple(len(a) for a in axes)
    total = int(np.prod(shape, dtype=float))
    if total == 0:
        return GridResult(False, None, 0)
    if total > cap:
        raise OracleError(f"{total} grid points exceed cap {cap}")

    n_in = q.net.input_size
    gather = np.array([[cls[VarRef(c, "in", i)] for i in range(n_in)] for c in range(q.copies)])
    cons = q.constraints + q.coupling
    out_boxes = [(v, b) for v, b in q.boxes.items() if v.site == "out"]
    for start in range(0, total, _CHUNK):
        flat = np.arange(start, min(start + _CHUNK, total))
        idx = np.unravel_index(flat, shape)
        P = np.stack([axes[d][idx[d]] for d in range(len(axes))], axis=1)
        X = P[:, gather]  # (n, copies, n_in)
        Y = np.stack([forward_batch(q.net, X[:, c, :]) for c in range(q.copies)], axis=1)
        ok = np.ones(len(P), dtype=bool)

        def val(v):
            return X[:, v.copy, v.index] if v.site == "in" else Y[:, v.copy, v.index]

        for v, (a, b) in out_boxes:
            ok &= (val(v) >= a - tol) & (val(v) <= b + tol)
        for c in cons:
            lhs = sum(coef * val(v) for coef, v in c.terms) - c.constant
            if c.relation == LE:
                ok &= lhs <= tol
            elif c.relation == GE:
                ok &= lhs >= -tol
            else:
                ok &= np.abs(lhs) <= tol
        hits = np.flatnonzero(ok)
        if hits.size:
            return GridResult(True, X[hits[0]].copy(), start + int(hits[0]) + 1)
    return GridResult(False, None, total)


def boundary_band(q: Query, pitch: float) -> float:
    """How far a grid can miss a feasible region: pitch times the Lipschitz bound."""
    from .network import lipschitz_bound

    return pitch * max(1.0, lipschitz_bound(q.net))


# -- transition-system oracles --------------------------------------------------

class StateGraph:
    """Discretized states of a transition spec and the sliding-window successor map."""

    def __init__(self, spec: TransitionSpec, pitch: float, cap: int = STATE_CAP):
        if spec.window > 3 or spec.fields_per_step > 3:
            raise OracleError("state graph oracle supports window <= 3 and fields_per_step <= 3")
        self.spec = spec
        axes = [axis_points(lo, hi, pitch) for lo, hi in spec.field_boxes]
        steps = list(itertools.product(*axes))
        n_states = len(steps) ** spec.window
        if n_states > cap:
            raise OracleError(f"{n_states} discretized states exceed cap {cap}")
        t, f = spec.window, spec.fields_per_step
        windows = list(itertools.product(range(len(steps)), repeat=t))
        X = np.zeros((len(windows), t * f))
        for w, combo in enumerate(windows):
            for j, s in enumerate(combo):
                for r in range(f):
                    X[w, spec.position(j, r)] = steps[s][r]
        Y = forward_batch(spec.net, X)
        keep = holds_all(spec.state_constraints, X, Y)
        self.steps = steps
        self.windows = [w for w, k in zip(windows, keep) if k]
        self.X = X[keep]
        self.Y = Y[keep]
        self.index = {w: i for i, w in enumerate(self.windows)}
        self.initial = np.flatnonzero(holds_all(spec.initial_constraints, self.X, self.Y))
        n_steps = len(steps)
        self.succ = []
        for w in self.windows:
            nxt = [self.index.get(w[1:] + (s,)) for s in range(n_steps)]
            self.succ.append([i for i in nxt if i is not None])

    def holds(self, constraints) -> np.ndarray:
        return holds_all(constraints, self.X, self.Y)


def holds_all(constraints, X, Y, tol: float = 1e-9) -> np.ndarray:
    ok = np.ones(len(X), dtype=bool)
    for c in constraints:
        lhs = sum(coef * (X[:, v.index] if v.site == "in" else Y[:, v.index]) for coef, v in c.terms)
        d = lhs - c.constant
        if c.relation == LE:
            ok &= d <= tol
        elif c.relation == GE:
            ok &= d >= -tol
        else:
            ok &= np.abs(d) <= tol
    return ok


def reach_oracle(spec: TransitionSpec, bad_constraints, depth: int, pitch: float,
                 graph: StateGraph | None = None):
    """Earliest number of states (1 = an initial state) in a path to a bad grid state."""
    g = graph or StateGraph(spec, pitch)
    bad = g.holds(bad_constraints)
    frontier = set(int(i) for i in g.initial)
    seen = set(frontier)
    for d in range(1, depth + 1):
        if any(bad[i] for i in frontier):
            return d
        nxt = set()
        for i in frontier:
            nxt.update(g.succ[i])
        frontier = nxt - seen
        seen |= nxt
        if not frontier:
            return None
    return None


def _longest_run(succ, allowed: np.ndarray, exit_bonus: np.ndarray) -> float:
    """Longest path (in states) inside ``allowed``; a state may add ``exit_bonus``
    for a final step leaving the set. Returns inf when ``allowed`` has a cycle."""
    n = len(succ)
    best = np.zeros(n)
    color = np.zeros(n, dtype=np.int8)  # 0 new, 1 on stack, 2 done
    for s0 in range(n):
        if not allowed[s0] or color[s0]:
            continue
        color[s0] = 1
        stack = [[s0, 0]]
        while stack:
            s, i = stack[-1]
            nbrs = succ[s]
            while i < len(nbrs) and (not allowed[nbrs[i]] or color[nbrs[i]] == 2):
                i += 1
            if i < len(nbrs):
                t = nbrs[i]
                stack[-1][1] = i + 1
                if color[t] == 1:
                    return math.inf
                color[t] = 1
                stack.append([t, 0])
                continue
            stack.pop()
            color[s] = 2
            inner = max((best[t] for t in nbrs if allowed[t]), default=0.0)
            best[s] = 1 + max(inner, exit_bonus[s])
    return float(best.max()) if n else 0.0


def persistence_oracle(spec: TransitionSpec, good_constraints, pitch: float,
                       graph: StateGraph | None = None):
    """Longest run of consecutive not-good grid states, started anywhere (inf on a cycle).

    Liveness k-induction over the grid closes at k = run + 1.
    """
    g = graph or StateGraph(spec, pitch)
    return _longest_run(g.succ, ~g.holds(good_constraints), np.zeros(len(g.windows)))


def safety_induction_oracle(spec: TransitionSpec, bad_constraints, pitch: float,
                            graph: StateGraph | None = None):
    """Longest grid path from anywhere whose only bad state is its last (inf on a cycle).

    Safety k-induction over the grid closes at k = length + 1.
    """
    g = graph or StateGraph(spec, pitch)
    bad = g.holds(bad_constraints)
    if not bad.any():
        return 0.0
    n = len(g.windows)
    pred = [[] for _ in range(n)]
    for s, nbrs in enumerate(g.succ):
        for t in nbrs:
            pred[t].append(s)
    # good states that reach a bad one through good states
    reach = np.zeros(n, dtype=bool)
    todo = [s for s in range(n) if bad[s]]
    while todo:
        t = todo.pop()
        for s in pred[t]:
            if not bad[s] and not reach[s]:
                reach[s] = True
                todo.append(s)
    exits = np.array([float(any(bad[t] for t in g.succ[s])) for s in range(n)])
    return max(1.0, _longest_run(g.succ, reach, exits))


# -- concrete executions -------------------------------------------------------

def _sample_state(spec, rng, constraints, tries=2000):
    lo = np.array([spec.box_of(p)[0] for p in range(spec.net.input_size)])
    hi = np.array([spec.box_of(p)[1] for p in range(spec.net.input_size)])
    for _ in range(tries):
        x = rng.uniform(lo, hi)
        if holds_all(constraints, x[None], forward_batch(spec.net, x[None]))[0]:
            return x
    # equality constraints: fall back to a coarse grid
    X = np.array(list(itertools.product(*[axis_points(a, b, max((b - a) / 8, 1e-9)) for a, b in zip(lo, hi)])))
    ok = np.flatnonzero(holds_all(constraints, X, forward_batch(spec.net, X)))
    if not ok.size:
        raise OracleError("no state satisfies the constraints")
    return X[rng.choice(ok)]


def _sample_successor(spec, rng, x, tries=2000):
    t, f = spec.window, spec.fields_per_step
    base = x.copy()
    for j in range(1, t):
        for r in range(f):
            base[spec.position(j - 1, r)] = x[spec.position(j, r)]
    cands = []
    for attempt in range(tries + 1):
        y = base.copy()
        for r in range(f):
            lo, hi = spec.field_boxes[r]
            if attempt < tries:
                y[spec.position(t - 1, r)] = rng.uniform(lo, hi)
        if attempt == tries:
            # grid fallback over the fresh step
            axes = [axis_points(lo, hi, max((hi - lo) / 8, 1e-9)) for lo, hi in spec.field_boxes]
            for vals in itertools.product(*axes):
                z = base.copy()
                for r, v in enumerate(vals):
                    z[spec.position(t - 1, r)] = v
                cands.append(z)
            Z = np.array(cands)
            ok = np.flatnonzero(holds_all(spec.state_constraints, Z, forward_batch(spec.net, Z)))
            if not ok.size:
                return None
            return Z[rng.choice(ok)]
        if holds_all(spec.state_constraints, y[None], forward_batch(spec.net, y[None]))[0]:
            return y
    return None


def generate_trace(spec: TransitionSpec, length: int, seed: int, from_initial: bool = True) -> list:
    """A concrete execution: fresh fields sampled uniformly inside the field boxes."""
    rng = np.random.default_rng(seed)
    cons = spec.state_constraints + (spec.initial_constraints if from_initial else ())
    states = [_sample_state(spec, rng, cons)]
    while len(states) < length:
        nxt = _sample_successor(spec, rng, states[-1])
        if nxt is None:
            break  # deadlock: no successor satisfies the state constraints
        states.append(nxt)
    return states
