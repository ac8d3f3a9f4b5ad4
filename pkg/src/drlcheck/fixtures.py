"""Small hand-built networks and transition systems with known answers.

Every fixture here is small enough for the grid and state-graph oracles,
so tests can confirm the expected verdicts independently of the solver.
"""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from .checker import Property
from .network import Network, Relu, WeightedSum
from .query import DELTA_STRICT, Query, eq, ge, inp, le, out
from .transition import TransitionSpec, unroll


def mlp(*layers) -> Network:
    """``mlp((W1, b1), (W2, b2), ...)`` with a ReLU between consecutive affine maps."""
    built = []
    for i, (W, b) in enumerate(layers):
        if i:
            built.append(Relu())
        built.append(WeightedSum(np.atleast_2d(np.asarray(W, float)), np.atleast_1d(np.asarray(b, float))))
    return Network(built[0].weights.shape[1], tuple(built))


def toy_network() -> Network:
    return mlp(([[2, 5], [-4, 1]], [1, -2]), ([[3, -1]], [0]))


def toy_query(lo=-10.0, hi=10.0, bound=5.0) -> Query:
    net = toy_network()
    return Query(net, 1, {inp(0): (lo, hi), inp(1): (lo, hi)}, (le(out(0), bound),))


def depth3() -> tuple[TransitionSpec, Property]:
    """Sum of three window slots; from all-zero history the bad level needs three states."""
    net = mlp((np.eye(3), np.zeros(3)), ([[1, 1, 1]], [0]))
    spec = TransitionSpec(net, 3, 1, [(0.0, 1.0)], ("g",),
                          initial_constraints=tuple(eq(inp(i), 0.0) for i in range(3)))
    return spec, Property.safety([ge(out(0), 1.5)])


def pointwise_safe() -> tuple[TransitionSpec, Property]:
    """Output never drops below 0.5, so ``out <= 0`` is bad nowhere."""
    net = mlp(([[1, 0], [0, 1]], [0, 0]), ([[0.0, 1.0]], [0.5]))
    spec = TransitionSpec(net, 2, 1, [(0.0, 1.0)], ("g",))
    return spec, Property.safety([le(out(0), 0.0)])


def pointwise_live(delta: float = DELTA_STRICT) -> tuple[TransitionSpec, Property]:
    """Every state is good (``out > 0``): liveness closes at k = 1."""
    spec, _ = pointwise_safe()
    return spec, Property.liveness([ge(out(0), delta)])


AURORA_FIELDS = ("latency_gradient", "latency_ratio", "sending_ratio")


def aurora_mini(epsilon: float = 0.1, delta: float = DELTA_STRICT):
    """A three-step, three-field congestion-control stand-in.

    Under excellent conditions the output is
    ``relu(g_new + 0.05) + relu(0.05 - g_mid)``, which can be non-positive
    only when the newest gradient is below -0.05 and the middle one above
    0.05. Two consecutive states cannot both do that, so the rate
    increases at least every second step. Returns ``(spec, property,
    assumption)`` where the assumption restricts every state.
    """
    w = np.zeros((5, 9))
    w[0, 6] = 1.0  # newest gradient
    w[1, 3] = -1.0  # middle gradient
    w[2, 7] = 1.0  # newest latency ratio
    w[3, 8] = 1.0  # newest sending ratio
    w[4, [0, 3, 6]] = 1.0
    b = np.array([0.05, 0.05, -1.1, -1.0, -0.3])
    net = mlp((w, b), ([[1.0, 1.0, -2.0, -3.0, -1.0]], [0.0]))
    spec = TransitionSpec(net, 3, 3, [(-1.0, 1.0), (1.0, 3.0), (1.0, 8.0)], AURORA_FIELDS)
    assume = excellent_conditions(spec, epsilon)
    return spec, Property.liveness([ge(out(0), delta)]), assume


def excellent_conditions(spec: TransitionSpec, epsilon: float) -> list:
    cons = []
    for p in spec.positions_of("latency_gradient"):
        cons += [ge(inp(p), -epsilon), le(inp(p), epsilon)]
    for p in spec.positions_of("latency_ratio"):
        cons += [ge(inp(p), 1.0), le(inp(p), 1.0 + epsilon)]
    for p in spec.positions_of("sending_ratio"):
        cons.append(eq(inp(p), 1.0))
    return cons


def excellent_boxes(spec: TransitionSpec, epsilon: float) -> TransitionSpec:
    """Same system with the field boxes shrunk to the excellent-condition ranges."""
    return replace(spec, field_boxes=((-epsilon, epsilon), (1.0, 1.0 + epsilon), (1.0, 1.0)))


def stall(delta: float = DELTA_STRICT) -> tuple[TransitionSpec, Property]:
    """Good means the latest change is below 0.5; within [0, 2] at most four
    consecutive states can all rise by 0.5 or more, so k* = 5."""
    net = mlp(([[-1.0, 1.0], [1.0, -1.0]], [-0.5, 0.5]), ([[1.0, -1.0]], [0.0]))
    spec = TransitionSpec(net, 2, 1, [(0.0, 2.0)], ("g",))
    return spec, Property.liveness([le(out(0), -delta)])


def ladder():
    """Liveness fixtures keyed by the k at which induction first closes."""
    spec, prop, assume = aurora_mini()
    return {
        1: pointwise_live(),
        2: (spec.with_state_constraints(assume), prop),
        5: stall(),
    }


def two_step_memory() -> tuple[TransitionSpec, Property]:
    """States are (x, x + 1) climbing by one each step; bad is x in [1, 1.5].

    Initial states start at x >= 2, so nothing bad is reachable, yet a
    k-path ending in a bad state exists for k = 1, 2 and not for k = 3.
    """
    net = mlp(([[1.0, 0.0]], [0.0]), ([[1.0]], [0.0]))
    spec = TransitionSpec(
        net, 2, 1, [(0.0, 4.0)], ("x",),
        initial_constraints=(ge(inp(0), 2.0),),
        state_constraints=(eq(((1.0, inp(1)), (-1.0, inp(0))), 1.0),),
    )
    return spec, Property.safety([ge(out(0), 1.0), le(out(0), 1.5)])


def identity_passthrough() -> Network:
    return mlp(([[1.0], [-1.0]], [0.0, 0.0]), ([[1.0, -1.0]], [0.0]))


def two_minus_x() -> Network:
    """``out = 2 - x`` written as ``relu(2 - x) - relu(x - 2)``."""
    return mlp(([[-1.0], [1.0]], [2.0, -2.0]), ([[1.0, -1.0]], [0.0]))


def constant_network(value: float, n_inputs: int = 1) -> Network:
    return mlp((np.zeros((1, n_inputs)), [0.0]), ([[0.0]], [value]))


def zero_weight_history() -> tuple[TransitionSpec, Query]:
    """Output ignores the older step and is at least 0.5; asking for
    ``out <= 0`` two steps in is UNSAT whatever the history says."""
    net = mlp(([[0.0, 1.0]], [0.0]), ([[1.0]], [0.5]))
    spec = TransitionSpec(net, 2, 1, [(0.0, 1.0)], ("x",))
    q = unroll(spec, 2)
    q = Query(q.net, 2, q.boxes, (le(inp(0, 0), 0.3), le(out(0, 1), 0.0)), q.coupling)
    return spec, q


def spurious_history() -> tuple[TransitionSpec, Query]:
    """Output reads the older step only. The coupling pins copy 1's older
    step to copy 0's newer one (at most 0.1), so ``out >= 0.5`` on copy 1
    is UNSAT; freeing the older step breaks that link and the abstract
    query has a spurious witness."""
    net = mlp(([[1.0, 0.0]], [0.0]), ([[1.0]], [0.0]))
    spec = TransitionSpec(net, 2, 1, [(0.0, 1.0)], ("x",))
    q = unroll(spec, 2)
    q = Query(q.net, 2, q.boxes, (le(inp(1, 0), 0.1), ge(out(0, 1), 0.5)), q.coupling)
    return spec, q
