"""Verification queries: variable boxes plus linear constraints.

A query ranges over ``copies`` unrollings of one network. Variables are
named by :class:`VarRef` (copy, site, index) where site is ``"in"`` or
``"out"``. Strict inequalities are not representable; they are shifted by
a margin ``delta_strict`` when read from files.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .network import Network

DELTA_STRICT = 1e-6

LE, GE, EQ = "<=", ">=", "=="
RELATIONS = (LE, GE, EQ)


class QueryError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class VarRef:
    copy: int
    site: str  # "in" | "out"
    index: int

    def __post_init__(self):
        if self.site not in ("in", "out"):
            raise QueryError(f"site must be 'in' or 'out', got {self.site!r}")

    def at_copy(self, copy: int) -> "VarRef":
        return VarRef(copy, self.site, self.index)

    def __str__(self):
        return f"{self.site}[{self.copy}][{self.index}]"


def inp(index: int, copy: int = 0) -> VarRef:
    return VarRef(copy, "in", index)


def out(index: int = 0, copy: int = 0) -> VarRef:
    return VarRef(copy, "out", index)


@dataclass(frozen=True)
class LinearConstraint:
    """sum(coef * var) <rel> constant."""

    terms: tuple
    relation: str
    constant: float

    def __post_init__(self):
        terms = tuple((float(c), v) for c, v in self.terms)
        if not terms:
            raise QueryError("constraint needs at least one term")
        if self.relation not in RELATIONS:
            raise QueryError(f"unknown relation {self.relation!r}")
        if not all(math.isfinite(c) for c, _ in terms) or not math.isfinite(self.constant):
            raise QueryError("constraint coefficients must be finite")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "constant", float(self.constant))

    @property
    def variables(self):
        return [v for _, v in self.terms]

    def shifted(self, copy: int) -> "LinearConstraint":
        """Re-index a copy-0 constraint onto ``copy``."""
        return replace(self, terms=tuple((c, v.at_copy(v.copy + copy)) for c, v in self.terms))

    def lhs(self, value_of) -> float:
        return sum(c * value_of(v) for c, v in self.terms)

    def violation(self, value_of) -> float:
        """Amount by which the constraint is violated (0 when satisfied)."""
        d = self.lhs(value_of) - self.constant
        if self.relation == LE:
            return max(d, 0.0)
        if self.relation == GE:
            return max(-d, 0.0)
        return abs(d)

    def __str__(self):
        lhs = " + ".join(f"{c:g}*{v}" for c, v in self.terms)
        return f"{lhs} {self.relation} {self.constant:g}"


def le(terms, constant) -> LinearConstraint:
    return LinearConstraint(_terms(terms), LE, constant)


def ge(terms, constant) -> LinearConstraint:
    return LinearConstraint(_terms(terms), GE, constant)


def eq(terms, constant) -> LinearConstraint:
    return LinearConstraint(_terms(terms), EQ, constant)


def _terms(terms):
    if isinstance(terms, VarRef):
        return ((1.0, terms),)
    return tuple(terms)


def negate_upper(bound: float, output_index: int = 0) -> LinearConstraint:
    """Post-condition ``out[output_index] <= bound``."""
    return le(out(output_index), bound)


@dataclass(frozen=True)
class Query:
    net: Network
    copies: int = 1
    boxes: Mapping = field(default_factory=dict)
    constraints: tuple = ()
    coupling: tuple = ()

    def __post_init__(self):
        if self.copies < 1:
            raise QueryError("a query needs at least one network copy")
        boxes = {}
        for v, (lo, hi) in dict(self.boxes).items():
            self._check_ref(v)
            lo, hi = float(lo), float(hi)
            if math.isnan(lo) or math.isnan(hi) or lo > hi:
                raise QueryError(f"empty box for {v}: [{lo}, {hi}]")
            boxes[v] = (lo, hi)
        for c in range(self.copies):
            for i in range(self.net.input_size):
                boxes.setdefault(inp(i, c), (-math.inf, math.inf))
        object.__setattr__(self, "boxes", boxes)
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "coupling", tuple(self.coupling))
        for con in self.constraints + self.coupling:
            for v in con.variables:
                self._check_ref(v)

    def _check_ref(self, v: VarRef):
        size = self.net.input_size if v.site == "in" else self.net.output_size
        if not (0 <= v.copy < self.copies and 0 <= v.index < size):
            raise QueryError(f"variable {v} out of range for {self.copies} copies")

    def input_refs(self):
        return [inp(i, c) for c in range(self.copies) for i in range(self.net.input_size)]

    def with_boxes(self, updates: Mapping) -> "Query":
        return replace(self, boxes={**self.boxes, **updates})


def conjoin(q: Query, *cs: LinearConstraint) -> Query:
    """New query with ``cs`` appended to the constraints."""
    return replace(q, constraints=q.constraints + tuple(cs))


def couple(q: Query, *cs: LinearConstraint) -> Query:
    return replace(q, coupling=q.coupling + tuple(cs))


def simple_equality(c: LinearConstraint):
    """Return (a, b) if ``c`` reads ``a - b == 0`` over two input variables."""
    if c.relation != EQ or len(c.terms) != 2 or c.constant != 0.0:
        return None
    (ca, a), (cb, b) = c.terms
    if a.site != "in" or b.site != "in" or ca != -cb or ca == 0.0:
        return None
    return a, b


# -- property-spec files --------------------------------------------------

def parse_ref(key) -> VarRef:
    """``"copy:site:index"`` or a ``[copy, site, index]`` list."""
    parts = key.split(":") if isinstance(key, str) else list(key)
    if len(parts) != 3:
        raise QueryError(f"bad variable reference {key!r}")
    return VarRef(int(parts[0]), str(parts[1]), int(parts[2]))


def ref_key(v: VarRef) -> str:
    return f"{v.copy}:{v.site}:{v.index}"


def constraint_from_dict(d: Mapping, delta_strict: float = DELTA_STRICT) -> LinearConstraint:
    try:
        terms = tuple((float(t[0]), VarRef(int(t[1]), str(t[2]), int(t[3]))) for t in d["terms"])
        rel, const = d["rel"], float(d["const"])
    except (KeyError, IndexError, TypeError) as e:
        raise QueryError(f"malformed constraint {d!r}: {e}") from None
    if rel == ">":
        rel, const = GE, const + delta_strict
    elif rel == "<":
        rel, const = LE, const - delta_strict
    elif rel == "=":
        rel = EQ
    return LinearConstraint(terms, rel, const)


def constraint_to_dict(c: LinearConstraint) -> dict:
    return {
        "terms": [[coef, v.copy, v.site, v.index] for coef, v in c.terms],
        "rel": c.relation,
        "const": c.constant,
    }


def _disjuncts(doc: Mapping, delta_strict: float):
    """Alternative constraint sets; the query is SAT iff any alternative is."""
    alts = [[constraint_from_dict(c, delta_strict) for c in alt] for alt in doc.get("any_of", [])]
    mg = doc.get("max_greater")
    if mg:
        # max(out[c] for c in candidates) > out[target], one query per candidate
        copy = int(mg.get("copy", 0))
        target = out(int(mg["target"]), copy)
        for c in mg["candidates"]:
            alts.append([ge(((1.0, out(int(c), copy)), (-1.0, target)), delta_strict)])
    return alts or [[]]


def queries_from_dict(doc: Mapping, net: Network, delta_strict: float = DELTA_STRICT) -> list:
    """Build the query (or disjunct queries) described by a property-spec document."""
    copies = int(doc.get("copies", 1))
    boxes = {}
    for key, (lo, hi) in doc.get("boxes", {}).items():
        boxes[parse_ref(key)] = (float(lo), float(hi))
    base = [constraint_from_dict(c, delta_strict) for c in doc.get("constraints", [])]
    coupling = [constraint_from_dict(c, delta_strict) for c in doc.get("coupling", [])]
    return [
        Query(net, copies, boxes, tuple(base + alt), tuple(coupling))
        for alt in _disjuncts(doc, delta_strict)
    ]


def query_to_dict(q: Query) -> dict:
    return {
        "copies": q.copies,
        "boxes": {ref_key(v): list(b) for v, b in sorted(q.boxes.items()) if all(map(math.isfinite, b))},
        "constraints": [constraint_to_dict(c) for c in q.constraints],
        "coupling": [constraint_to_dict(c) for c in q.coupling],
    }


def load_queries(path, net: Network, delta_strict: float = DELTA_STRICT) -> list:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise QueryError(f"{path}: {e.msg} (line {e.lineno}, column {e.colno})") from None
    return queries_from_dict(doc, net, delta_strict)


def input_point_feasible(q: Query, x: np.ndarray, y: np.ndarray, tol: float = 0.0) -> bool:
    """Exact membership test for per-copy inputs ``x`` and outputs ``y``."""

    def value(v):
        return x[v.copy][v.index] if v.site == "in" else y[v.copy][v.index]

    for v, (lo, hi) in q.boxes.items():
        val = value(v)
        if val < lo - tol or val > hi + tol:
            return False
    return all(c.violation(value) <= tol for c in q.constraints + q.coupling)


def all_constraints(q: Query) -> Iterable[LinearConstraint]:
    return q.constraints + q.coupling
