import numpy as np
import pytest

from drlcheck import fixtures as F
from drlcheck.abstraction import PROVED_VIA_ABSTRACTION, older_than
from drlcheck.checker import (
    BMC,
    EXHAUSTED,
    INCONCLUSIVE,
    KINDUCTION,
    NO_VIOLATION,
    PROVED,
    REFUTED,
    CheckConfig,
    Property,
    bmc,
    bmc_liveness,
    check_trace,
    k_induction_liveness,
    k_induction_liveness_queries,
    k_induction_safety,
    portfolio,
)
from drlcheck.oracle import persistence_oracle, reach_oracle, safety_induction_oracle
from drlcheck.query import ge, inp, le, out
from drlcheck.transition import TransitionSpec


def _holds(trace, constraints):
    x = np.array(trace["state"])
    y = np.array(trace["output"])
    return all(c.violation(lambda v: x[v.index] if v.site == "in" else y[v.index]) <= 1e-6 for c in constraints)


def test_depth3_bmc():
    spec, prop = F.depth3()
    assert bmc(spec, prop.predicate, 2).outcome == NO_VIOLATION
    r = bmc(spec, prop.predicate, 3)
    assert r.outcome == REFUTED and r.k == 3 and len(r.trace) == 3
    assert check_trace(spec, r.trace)
    assert _holds(r.trace[-1], prop.predicate.constraints)


def test_bmc_stays_refuted_beyond_first_depth():
    spec, prop = F.depth3()
    for k in (4, 5):
        assert bmc(spec, prop.predicate, k, exact=True).outcome == REFUTED


def test_bmc_infeasible_bad_never_refutes():
    spec, _ = F.depth3()
    p = Property.safety([ge(out(0), 10.0)])
    assert bmc(spec, p.predicate, 4).outcome == NO_VIOLATION


def test_pointwise_safe_proved_at_one():
    spec, prop = F.pointwise_safe()
    r = portfolio(spec, prop, 5)
    assert (r.outcome, r.k, r.method) == (PROVED, 1, KINDUCTION)


def test_tautological_bad_never_proved():
    spec, _ = F.pointwise_safe()
    p = Property.safety([ge(out(0), -100.0)])
    assert k_induction_safety(spec, p.predicate, 1).outcome == INCONCLUSIVE
    # deeper consecution queries are vacuous here; the base case is what catches it
    for k_max in (1, 3):
        r = portfolio(spec, p, k_max)
        assert (r.outcome, r.k) == (REFUTED, 1)


def test_two_step_memory_needs_k3():
    spec, prop = F.two_step_memory()
    outcomes = [k_induction_safety(spec, prop.predicate, k).outcome for k in (1, 2, 3)]
    assert outcomes == [INCONCLUSIVE, INCONCLUSIVE, PROVED]
    assert safety_induction_oracle(spec, prop.predicate.constraints, 0.5) + 1 == 3


def test_portfolio_refutes_depth3_with_bmc():
    spec, prop = F.depth3()
    r = portfolio(spec, prop, 6)
    assert (r.outcome, r.k, r.method) == (REFUTED, 3, BMC)


def test_portfolio_exhausts_below_violation_depth():
    spec, prop = F.depth3()
    r = portfolio(spec, prop, 2)
    assert r.outcome == EXHAUSTED and r.k == 2


def test_liveness_bounded_output_proved_at_one():
    net = F.mlp(([[0.1, 0.1]], [0.0]), ([[1.0]], [-0.5]))
    spec = TransitionSpec(net, 2, 1, [(0.0, 1.0)])
    p = Property.liveness([ge(out(0), -1.0)])
    assert k_induction_liveness(spec, p.predicate, 1).outcome == PROVED


def test_aurora_mini_liveness():
    spec, prop = F.ladder()[2]
    assert k_induction_liveness(spec, prop.predicate, 1).outcome == INCONCLUSIVE
    assert k_induction_liveness(spec, prop.predicate, 2).outcome == PROVED


def test_stall_liveness_closes_at_five():
    spec, prop = F.stall()
    for k in range(1, 5):
        r = k_induction_liveness(spec, prop.predicate, k)
        assert r.outcome == INCONCLUSIVE
        assert check_trace(spec, r.trace)
    assert k_induction_liveness(spec, prop.predicate, 5).outcome == PROVED
    assert persistence_oracle(spec, prop.predicate.constraints, 0.5) == 4


def test_combination_guard():
    spec, _ = F.stall()
    p = Property.liveness([le(out(0), -1.0), ge(out(0), -5.0), le(inp(0), 1.0)])
    r = k_induction_liveness(spec, p.predicate, 3, CheckConfig(combo_limit=10))
    assert r.outcome == INCONCLUSIVE and "exceed" in r.reason
    with pytest.raises(Exception):
        k_induction_liveness_queries(spec, p.predicate, 3, CheckConfig(combo_limit=10))


def test_lasso_refutes_stuck_liveness():
    # output is never good, and a constant history is a cycle
    net = F.mlp(([[1.0, 0.0]], [0.0]), ([[0.0]], [-1.0]))
    spec = TransitionSpec(net, 2, 1, [(0.0, 1.0)])
    p = Property.liveness([ge(out(0), 0.0)])
    r = bmc_liveness(spec, p.predicate, 2)
    assert r.outcome == REFUTED
    assert r.trace[-1]["state"] == r.trace[0]["state"]
    assert portfolio(spec, p, 3).outcome == REFUTED


def test_threads_do_not_change_results():
    spec, prop = F.stall()
    a = portfolio(spec, prop, 6, CheckConfig(threads=1)).to_dict()
    b = portfolio(spec, prop, 6, CheckConfig(threads=4)).to_dict()
    assert a == b
    spec, prop = F.depth3()
    assert portfolio(spec, prop, 4, CheckConfig(threads=1)).to_dict() == \
        portfolio(spec, prop, 4, CheckConfig(threads=3)).to_dict()


def test_inconclusive_traces_are_windows_consistent():
    spec, prop = F.two_step_memory()
    r = k_induction_safety(spec, prop.predicate, 2)
    assert check_trace(spec, r.trace)
    assert _holds(r.trace[-1], prop.predicate.constraints)


def test_portfolio_with_abstraction_keeps_verdict():
    spec, prop = F.stall()
    # the stall output reads both steps, so freeing the older one loses the proof
    r = portfolio(spec, prop, 3, CheckConfig(mask=older_than(spec, 1)))
    assert r.outcome == EXHAUSTED
    spec, prop = F.pointwise_safe()
    r = portfolio(spec, prop, 3, CheckConfig(mask=older_than(spec, 1)))
    assert r.outcome == PROVED and r.provenance == PROVED_VIA_ABSTRACTION


def test_timeout_folds_into_exhausted():
    spec, prop = F.stall()
    r = portfolio(spec, prop, 8, CheckConfig(timeout=1e-4))
    assert r.outcome == EXHAUSTED


def test_k_must_be_positive():
    spec, prop = F.depth3()
    with pytest.raises(ValueError):
        bmc(spec, prop.predicate, 0)
    with pytest.raises(ValueError):
        portfolio(spec, prop, 0)


@pytest.mark.parametrize("name", ["depth3", "pointwise_safe", "two_step_memory"])
def test_portfolio_never_contradicts_reachability(name):
    spec, prop = getattr(F, name)()
    r = portfolio(spec, prop, 5)
    reach = reach_oracle(spec, prop.predicate.constraints, 8, 0.25)
    if r.outcome == PROVED:
        assert reach is None
    if r.outcome == REFUTED:
        assert reach is not None and reach <= r.k
