import math

import pytest
from hypothesis import given, strategies as st

from drlcheck import fixtures as F
from drlcheck.invariants import (
    DEGENERATE,
    NO_INVARIANT,
    PROVED,
    InputBoundSearch,
    InvariantSearchError,
    NonMonotonicError,
    OutputBoundSearch,
    as_predicate,
    find_input_invariant,
    find_output_invariant,
    input_iterations_bound,
    output_iterations_bound,
    restriction_boxes,
)
from drlcheck.query import Query, conjoin, ge, inp, out
from drlcheck.solver import SAT, UNSAT, Verdict, solve


def _bracket_replay(result, lo, hi, sat_above):
    """Walk the query log and check that the SAT/UNSAT bracket holds after every step."""
    for b, v in result.query_log[2:]:
        assert lo < b < hi
        if (v == SAT) == sat_above:
            hi = b
        else:
            lo = b
    return lo, hi


def test_identity_passthrough_bound():
    r = find_output_invariant(F.identity_passthrough(), OutputBoundSearch(((-0.1, 0.1),), 0.01))
    assert r.status == PROVED
    assert -0.11 <= r.proved_bound <= -0.10
    assert r.bracketing_sat - r.proved_bound < 0.01
    assert r.iterations <= output_iterations_bound(r.floor, 0.01)
    lo, hi = _bracket_replay(r, -r.floor, 0.0, sat_above=True)
    assert (lo, hi) == (r.proved_bound, r.bracketing_sat)


def test_constant_positive_output_is_degenerate():
    r = find_output_invariant(F.constant_network(1.0), OutputBoundSearch(((-1, 1),), 0.01))
    assert r.status == DEGENERATE and r.proved_bound == 0.0 and "already" in r.note


def test_floor_too_high():
    with pytest.raises(InvariantSearchError, match="floor"):
        find_output_invariant(F.identity_passthrough(), OutputBoundSearch(((-1, 1),), 0.01, floor=0.5))


def test_config_validation():
    with pytest.raises(ValueError):
        OutputBoundSearch(((0, 1),), 0.0)
    with pytest.raises(ValueError):
        OutputBoundSearch(((0, 1),), 0.1, epsilon=-1)
    with pytest.raises(ValueError):
        InputBoundSearch(((1, 8),), (0,), 1.5)


def test_two_minus_x_bisection_trace():
    r = find_input_invariant(F.two_minus_x(), InputBoundSearch(((1, 8),), (0,), 8.0))
    assert r.status == PROVED
    assert [b for b, _ in r.query_log] == [8.0, 1.0, 4.5, 2.75, 1.875]
    assert r.proved_bound == 2.75 and r.bracketing_sat == 1.875
    assert r.bracketing_sat + 1 >= r.proved_bound
    assert r.iterations <= input_iterations_bound(8.0)


def test_two_minus_x_membership():
    net = F.two_minus_x()
    r = find_input_invariant(net, InputBoundSearch(((1, 8),), (0,), 8.0))

    def verdict(lo):
        return solve(conjoin(Query(net, 1, {inp(0): (lo, 8.0)}), ge(out(0), 0.0))).status

    assert verdict(r.proved_bound) == UNSAT
    assert verdict(r.proved_bound - 1) == SAT


def test_constant_negative_output_collapses():
    r = find_input_invariant(F.constant_network(-1.0), InputBoundSearch(((1, 8),), (0,), 8.0))
    assert r.status == DEGENERATE
    assert r.proved_bound == 1.0 and r.query_log == [(8.0, UNSAT), (1.0, UNSAT)]


def test_no_invariant_when_sat_at_pkt():
    r = find_input_invariant(F.constant_network(1.0), InputBoundSearch(((1, 8),), (0,), 8.0))
    assert r.status == NO_INVARIANT and r.proved_bound is None


def test_finer_precision():
    r = find_input_invariant(F.two_minus_x(), InputBoundSearch(((1, 8),), (0,), 8.0, precision=0.01))
    assert 2.0 < r.proved_bound <= 2.01


def test_non_monotone_verdicts_abort(monkeypatch):
    # nested boxes make the real family monotone, so feed the search a
    # verdict sequence no sound solver could produce
    import drlcheck.invariants as inv

    script = iter([UNSAT, SAT, UNSAT, SAT, UNSAT])  # at 8, 1, then probes at 2.75, 4.5, 6.25
    monkeypatch.setattr(inv, "solve", lambda q, cfg=None: Verdict(next(script)))
    with pytest.raises(NonMonotonicError):
        find_input_invariant(F.two_minus_x(), InputBoundSearch(((1, 8),), (0,), 8.0, probes=3))


def test_probes_agree_with_plain_search():
    net = F.two_minus_x()
    plain = find_input_invariant(net, InputBoundSearch(((1, 8),), (0,), 8.0, precision=0.01))
    probed = find_input_invariant(net, InputBoundSearch(((1, 8),), (0,), 8.0, precision=0.01, probes=5))
    assert 2.0 < probed.proved_bound <= 2.01 and 2.0 < plain.proved_bound <= 2.01
    assert probed.iterations <= plain.iterations
    r = find_output_invariant(F.identity_passthrough(), OutputBoundSearch(((-0.1, 0.1),), 0.01, probes=4))
    assert -0.11 <= r.proved_bound <= -0.10


def test_restriction_boxes_for_aurora_fields():
    spec, _, _ = F.aurora_mini()
    boxes = restriction_boxes(spec, {"latency_gradient": "symmetric", "latency_ratio": "unit_slack",
                                     "sending_ratio": 1.0}, 0.1)
    assert boxes[0] == (-0.1, 0.1) and boxes[1] == (1.0, 1.1) and boxes[2] == (1.0, 1.0)
    assert boxes[8] == (1.0, 1.0)
    free = restriction_boxes(spec, {"sending_ratio": "searched"}, 0.1)
    assert free[2] == (1.0, 8.0)


def test_export_as_predicate():
    r = find_output_invariant(F.identity_passthrough(), OutputBoundSearch(((-0.1, 0.1),), 0.01))
    p = as_predicate(r)
    (c,) = p.constraints
    assert c.relation == ">=" and c.constant == r.proved_bound
    with pytest.raises(InvariantSearchError):
        as_predicate(find_input_invariant(F.constant_network(1.0), InputBoundSearch(((1, 8),), (0,), 8.0)))


def test_query_log_is_reproducible():
    cfg = OutputBoundSearch(((-0.1, 0.1),), 0.001)
    a = find_output_invariant(F.identity_passthrough(), cfg)
    b = find_output_invariant(F.identity_passthrough(), cfg)
    assert a.query_log == b.query_log


@given(st.floats(0.05, 2.0), st.floats(0.001, 0.1))
def test_linear_output_bound_is_exact(width, eta):
    r = find_output_invariant(F.identity_passthrough(), OutputBoundSearch(((-width, width),), eta))
    assert -width - eta <= r.proved_bound <= -width
    assert r.iterations <= math.ceil(math.log2(r.floor / eta))


@given(st.floats(1.2, 7.5), st.integers(2, 12))
def test_input_bound_brackets_the_root(root, pkt):
    # out = root - x: the searched lower end must pass root for UNSAT
    net = F.mlp(([[-1.0], [1.0]], [root, -root]), ([[1.0, -1.0]], [0.0]))
    r = find_input_invariant(net, InputBoundSearch(((1, pkt),), (0,), float(pkt)))
    if root >= pkt:
        assert r.status == NO_INVARIANT
        return
    assert r.proved_bound > root - 1e-6
    if r.status == PROVED:
        assert r.bracketing_sat <= root + 1e-6
        assert r.bracketing_sat + 1 >= r.proved_bound
    _bracket_replay(r, 1.0, float(pkt), sat_above=False)
