"""Sliding-window transition systems over a policy network.

A state is one network input: ``window`` steps of ``fields_per_step``
statistics each. Consecutive states share ``window - 1`` steps, shifted
by one; the newest step of the successor is chosen by the environment
anywhere inside ``field_boxes``. By default step ``j`` occupies input
positions ``[j*f, (j+1)*f)`` with ``j = 0`` the oldest.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping

from .network import Network, load_network
from .query import (
    DELTA_STRICT,
    EQ,
    GE,
    LE,
    LinearConstraint,
    Query,
    QueryError,
    conjoin,
    constraint_from_dict,
    constraint_to_dict,
    eq,
    inp,
)

FROM_INITIAL = "initial"
FROM_ANYWHERE = "anywhere"
BAD, GOOD = "bad", "good"


class TransitionError(ValueError):
    pass


@dataclass(frozen=True)
class TransitionSpec:
    net: Network
    window: int
    fields_per_step: int
    field_boxes: tuple  # one (lo, hi) per field role
    field_names: tuple = ()
    initial_constraints: tuple = ()  # over copy 0; empty means I = S
    state_constraints: tuple = ()  # over copy 0; every state of S satisfies them
    layout: Mapping | None = None  # (step, field) -> input position

    def __post_init__(self):
        t, f = self.window, self.fields_per_step
        if t < 1 or f < 1:
            raise TransitionError("window and fields_per_step must be positive")
        if t * f != self.net.input_size:
            raise TransitionError(
                f"window*fields_per_step = {t * f} but network has {self.net.input_size} inputs"
            )
        boxes = tuple((float(lo), float(hi)) for lo, hi in self.field_boxes)
        if len(boxes) != f:
            raise TransitionError(f"need {f} field boxes, got {len(boxes)}")
        if any(lo > hi for lo, hi in boxes):
            raise TransitionError("empty field box")
        object.__setattr__(self, "field_boxes", boxes)
        names = tuple(self.field_names) or tuple(f"field{r}" for r in range(f))
        if len(names) != f:
            raise TransitionError("one name per field role")
        object.__setattr__(self, "field_names", names)
        lay = {(j, r): j * f + r for j in range(t) for r in range(f)}
        if self.layout is not None:
            lay = {tuple(k): int(v) for k, v in dict(self.layout).items()}
            if set(lay) != {(j, r) for j in range(t) for r in range(f)} or sorted(lay.values()) != list(range(t * f)):
                raise TransitionError("layout must map every (step, field) to a distinct input position")
        object.__setattr__(self, "layout", lay)
        object.__setattr__(self, "initial_constraints", tuple(self.initial_constraints))
        object.__setattr__(self, "state_constraints", tuple(self.state_constraints))
        for c in self.initial_constraints + self.state_constraints:
            if any(v.copy != 0 for v in c.variables):
                raise TransitionError("state constraints must reference copy 0 only")

    def position(self, step: int, field_: int) -> int:
        return self.layout[(step, field_)]

    def field_index(self, name) -> int:
        if isinstance(name, int):
            return name
        try:
            return self.field_names.index(name)
        except ValueError:
            raise TransitionError(f"no field named {name!r}") from None

    def positions_of(self, field_) -> list:
        r = self.field_index(field_)
        return [self.position(j, r) for j in range(self.window)]

    def box_of(self, position: int):
        for (j, r), p in self.layout.items():
            if p == position:
                return self.field_boxes[r]
        raise TransitionError(f"no input position {position}")

    def with_state_constraints(self, extra: Iterable[LinearConstraint]) -> "TransitionSpec":
        return replace(self, state_constraints=self.state_constraints + tuple(extra))


@dataclass(frozen=True)
class StatePredicate:
    kind: str  # BAD | GOOD
    constraints: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if any(v.copy != 0 for c in self.constraints for v in c.variables):
            raise TransitionError("predicates may only reference copy 0")


def coupling_constraints(spec: TransitionSpec, k: int) -> list:
    """Sliding-window equalities linking copy c to copy c+1."""
    t, f = spec.window, spec.fields_per_step
    out = []
    for c in range(k - 1):
        for j in range(1, t):
            for r in range(f):
                newer = inp(spec.position(j - 1, r), c + 1)
                older = inp(spec.position(j, r), c)
                out.append(eq(((1.0, newer), (-1.0, older)), 0.0))
    return out


def unroll(spec: TransitionSpec, k: int, start: str = FROM_ANYWHERE) -> Query:
    """k network copies constrained to be consecutive states."""
    if k < 1:
        raise TransitionError("k must be at least 1")
    if start not in (FROM_INITIAL, FROM_ANYWHERE):
        raise TransitionError(f"unknown start {start!r}")
    boxes = {}
    for c in range(k):
        for (j, r), p in spec.layout.items():
            boxes[inp(p, c)] = spec.field_boxes[r]
    cons = [s.shifted(c) for c in range(k) for s in spec.state_constraints]
    if start == FROM_INITIAL:
        cons.extend(spec.initial_constraints)
    return Query(spec.net, k, boxes, tuple(cons), tuple(coupling_constraints(spec, k)))


def constrain_predicate(q: Query, p: StatePredicate, copies: Iterable[int]) -> Query:
    copies = list(copies)
    for c in copies:
        if not 0 <= c < q.copies:
            raise QueryError(f"copy {c} out of range for {q.copies} copies")
    return conjoin(q, *[con.shifted(c) for c in copies for con in p.constraints])


def _flip(c: LinearConstraint, delta: float) -> list:
    if c.relation == LE:
        return [replace(c, relation=GE, constant=c.constant + delta)]
    if c.relation == GE:
        return [replace(c, relation=LE, constant=c.constant - delta)]
    return [
        replace(c, relation=GE, constant=c.constant + delta),
        replace(c, relation=LE, constant=c.constant - delta),
    ]


def negate_predicate(p: StatePredicate, delta_strict: float = DELTA_STRICT) -> list:
    """Disjuncts whose union is the complement of ``p`` (up to the strict margin)."""
    kind = GOOD if p.kind == BAD else BAD
    if not p.constraints:
        return []  # negation of true is false
    return [StatePredicate(kind, (n,)) for c in p.constraints for n in _flip(c, delta_strict)]


# -- files ---------------------------------------------------------------------

def spec_from_dict(doc: Mapping, base_dir: Path = Path("."), net: Network | None = None,
                   delta_strict: float = DELTA_STRICT) -> TransitionSpec:
    if net is None:
        if "network" not in doc:
            raise TransitionError("transition spec needs a 'network' path")
        net = load_network(Path(base_dir) / doc["network"])
    fb = doc["field_boxes"]
    if isinstance(fb, Mapping):
        names, boxes = tuple(fb), tuple(tuple(v) for v in fb.values())
    else:
        names, boxes = tuple(doc.get("field_names", ())), tuple(tuple(v) for v in fb)
    layout = None
    if doc.get("layout") is not None:
        layout = {(int(e[0]), int(e[1])): int(e[2]) for e in doc["layout"]}
    return TransitionSpec(
        net,
        int(doc["window"]),
        int(doc["fields_per_step"]),
        boxes,
        names,
        tuple(constraint_from_dict(c, delta_strict) for c in doc.get("initial_constraints", [])),
        tuple(constraint_from_dict(c, delta_strict) for c in doc.get("state_constraints", [])),
        layout,
    )


def spec_to_dict(spec: TransitionSpec, network_path: str) -> dict:
    return {
        "network": network_path,
        "window": spec.window,
        "fields_per_step": spec.fields_per_step,
        "field_boxes": {n: list(b) for n, b in zip(spec.field_names, spec.field_boxes)},
        "initial_constraints": [constraint_to_dict(c) for c in spec.initial_constraints],
        "state_constraints": [constraint_to_dict(c) for c in spec.state_constraints],
        "layout": [[j, r, p] for (j, r), p in sorted(spec.layout.items())],
    }


def load_spec(path, delta_strict: float = DELTA_STRICT) -> TransitionSpec:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise TransitionError(f"{path}: {e.msg} (line {e.lineno}, column {e.colno})") from None
    return spec_from_dict(doc, path.parent, delta_strict=delta_strict)


def field_restriction_constraints(spec: TransitionSpec, ranges: Mapping) -> list:
    """Per-state constraints restricting named fields at every step to [lo, hi]."""
    cons = []
    for name, (lo, hi) in ranges.items():
        for p in spec.positions_of(name):
            if lo == hi:
                cons.append(LinearConstraint(((1.0, inp(p)),), EQ, lo))
            else:
                cons.append(LinearConstraint(((1.0, inp(p)),), GE, lo))
                cons.append(LinearConstraint(((1.0, inp(p)),), LE, hi))
    return cons
