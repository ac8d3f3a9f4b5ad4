"""Bounded model checking, k-induction and the alternating portfolio.

Safety properties are given by a bad-state predicate, liveness properties
by a good-state predicate. Liveness is checked as persistence: a k-long
path of not-good states that starts anywhere must not exist.
"""
from __future__ import annotations

import itertools
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .abstraction import DIRECT, AbstractionMask, solve_with_abstraction
from .network import evaluate
from .query import DELTA_STRICT, Query, conjoin, eq, inp
from .solver import SAT, UNKNOWN, SolverConfig, solve
from .transition import (
    BAD,
    FROM_ANYWHERE,
    FROM_INITIAL,
    GOOD,
    StatePredicate,
    TransitionSpec,
    constrain_predicate,
    negate_predicate,
    unroll,
)

log = logging.getLogger(__name__)

PROVED = "proved"
REFUTED = "refuted"
INCONCLUSIVE = "inconclusive"
NO_VIOLATION = "no_violation"
EXHAUSTED = "exhausted"

BMC, KINDUCTION = "bmc", "kinduction"
SAFETY, LIVENESS = "safety", "liveness"


@dataclass(frozen=True)
class Property:
    kind: str  # SAFETY | LIVENESS
    predicate: StatePredicate

    @classmethod
    def safety(cls, bad_constraints):
        return cls(SAFETY, StatePredicate(BAD, tuple(bad_constraints)))

    @classmethod
    def liveness(cls, good_constraints):
        return cls(LIVENESS, StatePredicate(GOOD, tuple(good_constraints)))


@dataclass
class CheckConfig:
    solver: SolverConfig = field(default_factory=SolverConfig)
    threads: int = 1
    combo_limit: int = 4096
    delta_strict: float = DELTA_STRICT
    timeout: float | None = None
    mask: AbstractionMask | None = None  # input fields to abstract in every query


@dataclass
class CheckResult:
    outcome: str
    k: int
    method: str
    trace: list | None = None
    stats: dict = field(default_factory=dict)
    reason: str = ""
    provenance: str = DIRECT

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "k": self.k,
            "method": self.method,
            "provenance": self.provenance,
            "trace": self.trace,
            "stats": {k: v for k, v in self.stats.items() if k != "time"},
            "reason": self.reason,
        }


class _Budget:
    def __init__(self, cfg: CheckConfig, spec: TransitionSpec):
        self.cfg = cfg
        self.spec = spec
        self.deadline = time.perf_counter() + cfg.timeout if cfg.timeout else None
        self.stats = {"queries": 0, "nodes": 0, "lp_calls": 0}
        self.provenance = []  # tags of the most recent batch

    def run(self, q: Query, cfg: SolverConfig):
        mask = self.cfg.mask
        if mask is None or not mask.freed:
            return solve(q, cfg), DIRECT
        v, tag, _ = solve_with_abstraction(q, mask, self.spec, cfg)
        return v, tag

    def batch_provenance(self) -> str:
        tags = set(self.provenance)
        return tags.pop() if len(tags) == 1 else "mixed" if tags else DIRECT

    def solver_config(self) -> SolverConfig:
        if self.deadline is None:
            return self.cfg.solver
        left = max(self.deadline - time.perf_counter(), 1e-3)
        t = min(left, self.cfg.solver.timeout or left)
        return replace(self.cfg.solver, timeout=t)

    def expired(self) -> bool:
        return self.deadline is not None and time.perf_counter() > self.deadline

    def record(self, v):
        self.stats["queries"] += 1
        self.stats["nodes"] += v.stats.get("nodes", 0)
        self.stats["lp_calls"] += v.stats.get("lp_calls", 0)


def _solve_first(queries, budget: _Budget):
    """First SAT verdict in list order, else UNKNOWN if any, else the last UNSAT.

    With several threads, chunks of queries run concurrently but results
    are inspected in list order, so the answer does not depend on timing.
    """
    threads = max(1, budget.cfg.threads)
    budget.provenance = []
    unknown = None
    last = None
    it = iter(queries)
    with ThreadPoolExecutor(max_workers=threads) if threads > 1 else _Serial() as pool:
        while True:
            chunk = list(itertools.islice(it, threads))
            if not chunk:
                break
            cfg = budget.solver_config()
            for q, (v, tag) in zip(chunk, pool.map(lambda q: budget.run(q, cfg), chunk)):
                budget.record(v)
                budget.provenance.append(tag)
                if v.status == SAT:
                    return q, v
                if v.status == UNKNOWN and unknown is None:
                    unknown = (q, v)
                last = (q, v)
            if budget.expired():
                return unknown or (None, _timeout_verdict())
    return unknown or last


class _Serial:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False

    def map(self, fn, xs):
        return map(fn, xs)


def _timeout_verdict():
    from .solver import Verdict

    return Verdict(UNKNOWN, reason="timeout")


def make_trace(q: Query, witness) -> list:
    """Concrete states and network outputs of every copy of a witness."""
    return [
        {"state": [float(v) for v in witness[c]], "output": [float(v) for v in evaluate(q.net, witness[c])]}
        for c in range(q.copies)
    ]


def _combos(base: Query, negs: list, copies: list, limit: int):
    """Queries for every choice of one disjunct per copy, in lexicographic order."""
    if not copies:
        return [base]
    if not negs:
        return []
    n = len(negs) ** len(copies)
    if n > limit:
        raise _ComboLimit(n)
    out = []
    for choice in itertools.product(range(len(negs)), repeat=len(copies)):
        q = base
        for c, d in zip(copies, choice):
            q = constrain_predicate(q, negs[d], [c])
        out.append(q)
    return out


class _ComboLimit(Exception):
    pass


# -- safety --------------------------------------------------------------------

def bmc_query(spec: TransitionSpec, p_bad: StatePredicate, k: int) -> Query:
    return constrain_predicate(unroll(spec, k, FROM_INITIAL), p_bad, [k - 1])


def _bmc_depths(spec, p_bad, depths, cfg, budget, method=BMC):
    last_k = 0
    for k in depths:
        last_k = k
        q = bmc_query(spec, p_bad, k)
        _, v = _solve_first([q], budget)
        if v.status == SAT:
            return CheckResult(REFUTED, k, method, make_trace(q, v.witness), budget.stats,
                               provenance=budget.batch_provenance())
        if v.status == UNKNOWN:
            return CheckResult(EXHAUSTED, k, method, None, budget.stats, f"solver: {v.reason}")
    return CheckResult(NO_VIOLATION, last_k, method, None, budget.stats)


def bmc(spec: TransitionSpec, p_bad: StatePredicate, k: int, config: CheckConfig | None = None,
        exact: bool = False) -> CheckResult:
    """Search for a bad state within ``k`` states of an initial state.

    With ``exact=True`` only paths of exactly ``k`` states are tried.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    cfg = config or CheckConfig()
    depths = [k] if exact else range(1, k + 1)
    return _bmc_depths(spec, p_bad, depths, cfg, _Budget(cfg, spec))


def k_induction_safety_queries(spec, p_bad, k, cfg):
    base = constrain_predicate(unroll(spec, k, FROM_ANYWHERE), p_bad, [k - 1])
    negs = negate_predicate(p_bad, cfg.delta_strict)
    return _combos(base, negs, list(range(k - 1)), cfg.combo_limit)


def _induction(queries_fn, k, budget):
    try:
        queries = queries_fn()
    except _ComboLimit as e:
        return CheckResult(INCONCLUSIVE, k, KINDUCTION, None, budget.stats,
                           f"{e.args[0]} disjunct combinations exceed limit")
    if not queries:
        return CheckResult(PROVED, k, KINDUCTION, None, budget.stats)
    q, v = _solve_first(queries, budget)
    if v.status == SAT:
        return CheckResult(INCONCLUSIVE, k, KINDUCTION, make_trace(q, v.witness), budget.stats,
                           "k-long violating segment exists; increase k")
    if v.status == UNKNOWN:
        return CheckResult(INCONCLUSIVE, k, KINDUCTION, None, budget.stats, f"solver: {v.reason}")
    return CheckResult(PROVED, k, KINDUCTION, None, budget.stats, provenance=budget.batch_provenance())


def k_induction_safety(spec: TransitionSpec, p_bad: StatePredicate, k: int,
                       config: CheckConfig | None = None) -> CheckResult:
    """Inductive step: no k-path from anywhere whose last state alone is bad.

    Only a proof when BMC has excluded violations within k states.
    """
    cfg = config or CheckConfig()
    budget = _Budget(cfg, spec)
    return _induction(lambda: k_induction_safety_queries(spec, p_bad, k, cfg), k, budget)


# -- liveness ------------------------------------------------------------------

def k_induction_liveness_queries(spec, p_good, k, cfg):
    base = unroll(spec, k, FROM_ANYWHERE)
    negs = negate_predicate(p_good, cfg.delta_strict)
    return _combos(base, negs, list(range(k)), cfg.combo_limit)


def k_induction_liveness(spec: TransitionSpec, p_good: StatePredicate, k: int,
                         config: CheckConfig | None = None) -> CheckResult:
    """Proved iff no k consecutive states, starting anywhere, are all not good."""
    if k < 1:
        raise ValueError("k must be at least 1")
    cfg = config or CheckConfig()
    budget = _Budget(cfg, spec)
    return _induction(lambda: k_induction_liveness_queries(spec, p_good, k, cfg), k, budget)


def lasso_queries(spec, p_good, k, cfg):
    """k states from an initial state, all not good, the last equal to an earlier one."""
    if k < 2:
        return []
    negs = negate_predicate(p_good, cfg.delta_strict)
    base = unroll(spec, k, FROM_INITIAL)
    out = []
    n = spec.net.input_size
    for j in range(k - 1):
        loop = conjoin(base, *[eq(((1.0, inp(p, k - 1)), (-1.0, inp(p, j))), 0.0) for p in range(n)])
        out.extend(_combos(loop, negs, list(range(k)), cfg.combo_limit))
    return out


def bmc_liveness(spec: TransitionSpec, p_good: StatePredicate, k: int,
                 config: CheckConfig | None = None) -> CheckResult:
    """Refute liveness with a reachable cycle of not-good states of length < k."""
    cfg = config or CheckConfig()
    budget = _Budget(cfg, spec)
    return _lasso(spec, p_good, k, cfg, budget)


def _lasso(spec, p_good, k, cfg, budget):
    try:
        queries = lasso_queries(spec, p_good, k, cfg)
    except _ComboLimit as e:
        return CheckResult(NO_VIOLATION, k, BMC, None, budget.stats,
                           f"{e.args[0]} disjunct combinations exceed limit")
    if not queries:
        return CheckResult(NO_VIOLATION, k, BMC, None, budget.stats)
    q, v = _solve_first(queries, budget)
    if v.status == SAT:
        return CheckResult(REFUTED, k, BMC, make_trace(q, v.witness), budget.stats,
                           provenance=budget.batch_provenance())
    if v.status == UNKNOWN:
        return CheckResult(EXHAUSTED, k, BMC, None, budget.stats, f"solver: {v.reason}")
    return CheckResult(NO_VIOLATION, k, BMC, None, budget.stats)


# -- portfolio -----------------------------------------------------------------

def portfolio(spec: TransitionSpec, prop: Property, k_max: int,
              config: CheckConfig | None = None) -> CheckResult:
    """Alternate BMC and k-induction for k = 1, 2, ... up to ``k_max``."""
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    cfg = config or CheckConfig()
    budget = _Budget(cfg, spec)
    pred = prop.predicate
    for k in range(1, k_max + 1):
        if prop.kind == SAFETY:
            r = _bmc_depths(spec, pred, [k], cfg, budget)
        else:
            r = _lasso(spec, pred, k, cfg, budget)
        if r.outcome == REFUTED:
            return r
        if r.outcome == EXHAUSTED or budget.expired():
            return CheckResult(EXHAUSTED, k, BMC, None, budget.stats, r.reason or "timeout")
        if prop.kind == SAFETY:
            qf = lambda: k_induction_safety_queries(spec, pred, k, cfg)  # noqa: E731
        else:
            qf = lambda: k_induction_liveness_queries(spec, pred, k, cfg)  # noqa: E731
        r = _induction(qf, k, budget)
        if r.outcome == PROVED:
            return r
        log.info("k=%d: %s", k, r.reason)
        if budget.expired():
            return CheckResult(EXHAUSTED, k, KINDUCTION, None, budget.stats, "timeout")
    return CheckResult(EXHAUSTED, k_max, KINDUCTION, None, budget.stats, f"no verdict up to k={k_max}")


def check_trace(spec: TransitionSpec, trace: list, tol: float = 1e-6) -> bool:
    """Window consistency and concrete replay of a trace."""
    for i, st in enumerate(trace):
        x = np.asarray(st["state"])
        if not np.allclose(evaluate(spec.net, x), st["output"], atol=tol, rtol=0):
            return False
        if i:
            prev = np.asarray(trace[i - 1]["state"])
            for j in range(1, spec.window):
                for r in range(spec.fields_per_step):
                    if x[spec.position(j - 1, r)] != prev[spec.position(j, r)]:
                        return False
    return True
