"""Input-field abstraction.

Freed (step, field) positions lose every constraint and coupling that
mentions them, in every copy, and their box is widened to the field's
global range. The result over-approximates the original query, so UNSAT
carries over; a SAT witness is checked against the original and, when
spurious, the original query is solved instead.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .query import Query, inp
from .solver import SAT, UNSAT, SolverConfig, Verdict, solve, validate_witness
from .transition import TransitionSpec

DIRECT = "direct"
PROVED_VIA_ABSTRACTION = "proved-via-abstraction"
ABSTRACTION_GENUINE = "abstraction-genuine"
ABSTRACTION_SPURIOUS = "abstraction-refuted-spurious"
ABSTRACTION_UNKNOWN = "abstraction-unknown"


class MaskError(ValueError):
    pass


@dataclass(frozen=True)
class AbstractionMask:
    freed: frozenset = field(default_factory=frozenset)  # {(step, field)}

    def __post_init__(self):
        object.__setattr__(self, "freed", frozenset((int(j), int(r)) for j, r in self.freed))

    def validate(self, spec: TransitionSpec):
        for j, r in self.freed:
            if not (0 <= j < spec.window and 0 <= r < spec.fields_per_step):
                raise MaskError(f"({j}, {r}) is not a (step, field) position of this layout")

    def positions(self, spec: TransitionSpec) -> set:
        self.validate(spec)
        return {spec.position(j, r) for j, r in self.freed}

    def __le__(self, other):
        return self.freed <= other.freed


def older_than(spec: TransitionSpec, age: int) -> AbstractionMask:
    """Free every step at least ``age`` steps older than the newest one."""
    t = spec.window
    return AbstractionMask(
        frozenset((j, r) for j in range(t) if t - 1 - j >= age for r in range(spec.fields_per_step))
    )


def parse_mask(items, spec: TransitionSpec) -> AbstractionMask:
    """``["older-than:2"]`` or ``["0:1", "1:latency_ratio", ...]``."""
    if isinstance(items, str):
        items = items.replace(",", " ").split()
    freed = set()
    for item in items:
        if item.startswith("older-than:"):
            freed |= older_than(spec, int(item.split(":", 1)[1])).freed
            continue
        try:
            j, r = item.split(":")
            freed.add((int(j), spec.field_index(int(r) if r.isdigit() else r)))
        except ValueError:
            raise MaskError(f"bad field position {item!r}; use step:field or older-than:<j>") from None
    mask = AbstractionMask(frozenset(freed))
    mask.validate(spec)
    return mask


def abstract_query(q: Query, mask: AbstractionMask, spec: TransitionSpec) -> Query:
    if not mask.freed:
        return q
    freed = mask.positions(spec)

    def touches(c):
        return any(v.site == "in" and v.index in freed for v in c.variables)

    boxes = dict(q.boxes)
    for c in range(q.copies):
        for p in freed:
            boxes[inp(p, c)] = spec.box_of(p)
    return replace(
        q,
        boxes=boxes,
        constraints=tuple(c for c in q.constraints if not touches(c)),
        coupling=tuple(c for c in q.coupling if not touches(c)),
    )


def solve_with_abstraction(q: Query, mask: AbstractionMask, spec: TransitionSpec,
                           config: SolverConfig | None = None):
    """Returns ``(verdict, provenance, abstract_verdict)``."""
    cfg = config or SolverConfig()
    if not mask.freed:
        return solve(q, cfg), DIRECT, None
    va = solve(abstract_query(q, mask, spec), cfg)
    if va.status == UNSAT:
        return va, PROVED_VIA_ABSTRACTION, va
    if va.status == SAT:
        if validate_witness(q, va.witness, cfg.tau_val):
            return va, ABSTRACTION_GENUINE, va
        return solve(q, cfg), ABSTRACTION_SPURIOUS, va
    return va, ABSTRACTION_UNKNOWN, va


__all__ = [
    "AbstractionMask",
    "Verdict",
    "SAT",
    "abstract_query",
    "older_than",
    "parse_mask",
    "solve_with_abstraction",
]
