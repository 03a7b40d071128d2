"""Counterfactual statements about pre- and post-selected systems.

A counterfactual says: had the measurements ``replacement`` been performed
instead of the actual ones, the outcomes would have some property. Every
other measurement keeps its recorded result; the pre- and post-selected
states stay fixed. The recorded outcome of the replaced measurement takes
no part in the calculation unless the property quotes it as a constant.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping, Sequence

from tscf.hilbert import ObservableDecomposition, StateVector, require_valid
from tscf.tolerances import TOL
from tscf.tsvf import (
    MeasurementEvent,
    ProbabilityTable,
    TwoStateVector,
    ZeroDenominatorError,
    abl_single,
    application_order,
    sequence_weights,
)


class MeaninglessError(ZeroDenominatorError):
    """The fixed results are impossible under the queried measurement."""


class UnresolvedLabelError(KeyError):
    pass


class QueryError(ValueError):
    pass


# -- property expressions ----------------------------------------------------

VALUE_TOL = 1e-9


def _fmt(x: float) -> str:
    return "%.17g" % x


@dataclass(frozen=True)
class Outcome:
    """Reference to an event outcome: ``label`` or ``label@slot``."""

    label: str
    slot: int | None = None

    def value(self, env: Mapping) -> float:
        return env[self]

    def refs(self):
        return [self]

    def __str__(self):
        ref = self.label if self.slot is None else f"{self.label}@{self.slot}"
        return f"outcome({ref})"


@dataclass(frozen=True)
class Const:
    value_: float

    def value(self, env: Mapping) -> float:
        return self.value_

    def refs(self):
        return []

    def __str__(self):
        return _fmt(self.value_)


@dataclass(frozen=True)
class Product:
    factors: tuple

    def value(self, env: Mapping) -> float:
        out = 1.0
        for f in self.factors:
            out *= f.value(env)
        return out

    def refs(self):
        return [r for f in self.factors for r in f.refs()]

    def __str__(self):
        return " * ".join(str(f) for f in self.factors)


@dataclass(frozen=True)
class Equals:
    left: object
    right: object

    def holds(self, env: Mapping) -> bool:
        return abs(self.left.value(env) - self.right.value(env)) <= VALUE_TOL

    def refs(self):
        return self.left.refs() + self.right.refs()

    def __str__(self):
        return f"{self.left} == {self.right}"


@dataclass(frozen=True)
class And:
    terms: tuple

    def holds(self, env: Mapping) -> bool:
        return all(t.holds(env) for t in self.terms)

    def refs(self):
        return [r for t in self.terms for r in t.refs()]

    def __str__(self):
        return " and ".join(str(t) for t in self.terms)


_COMPARATORS = {
    ">=": lambda p, c, tol: p >= c - tol,
    "<=": lambda p, c, tol: p <= c + tol,
    ">": lambda p, c, tol: p > c + tol,
    "<": lambda p, c, tol: p < c - tol,
    "==": lambda p, c, tol: abs(p - c) <= tol,
}


@dataclass(frozen=True)
class ProbCompare:
    """``prob(relation) OP threshold``; the statement itself is certain either way."""

    relation: object
    op: str
    threshold: float

    def __post_init__(self):
        if self.op not in _COMPARATORS:
            raise ValueError(f"unknown comparison {self.op!r}")

    def refs(self):
        return self.relation.refs()

    def compare(self, p: float, tol: float) -> bool:
        return _COMPARATORS[self.op](p, self.threshold, tol)

    def __str__(self):
        return f"prob({self.relation}) {self.op} {_fmt(self.threshold)}"


PropertyExpr = Equals | And | ProbCompare


# -- world and query ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ActualWorld:
    """Pre/post states plus the recorded results of the other measurements.

    ``fixed`` pairs each event with its recorded outcome; ``None`` means the
    measurement happened but its result is not conditioned on. ``actual``
    holds the measurement(s) being counterfactually replaced.
    """

    pre: StateVector
    post: StateVector | None = None
    fixed: tuple[tuple[MeasurementEvent, float | None], ...] = ()
    actual: tuple[tuple[MeasurementEvent, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "fixed", tuple(self.fixed))
        object.__setattr__(self, "actual", tuple(self.actual))
        if self.post is not None and self.post.layout != self.pre.layout:
            raise ValueError("pre and post layouts differ")
        for ev, out in self.fixed + self.actual:
            if ev.observable.layout != self.pre.layout:
                raise ValueError(f"event {ev.label!r} layout does not match states")
            if out is not None and not ev.observable.has_eigenvalue(out):
                raise ValueError(f"recorded outcome {out!r} is not an eigenvalue of {ev.label!r}")
        fixed_slots = {ev.slot for ev, _ in self.fixed}
        clash = fixed_slots & {ev.slot for ev, _ in self.actual}
        if clash:
            raise QueryError(f"fixed and actual measurements share slot(s) {sorted(clash)}")
        application_order([ev for ev, _ in self.fixed])

    @property
    def layout(self):
        return self.pre.layout

    @property
    def tsv(self) -> TwoStateVector:
        return TwoStateVector(self.pre, self.post)

    def with_actual_outcomes(self, outcomes: Sequence[float]) -> ActualWorld:
        actual = tuple((ev, out) for (ev, _), out in zip(self.actual, outcomes, strict=True))
        return ActualWorld(self.pre, self.post, self.fixed, actual)


@dataclass(frozen=True, eq=False)
class CounterfactualQuery:
    replacement: tuple[MeasurementEvent, ...]
    prop: PropertyExpr
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "replacement", tuple(self.replacement))
        if not self.replacement:
            raise QueryError("a query needs at least one replacement measurement")


class VerdictKind(enum.Enum):
    TRUE = "True"
    FALSE = "False"
    PROBABILISTIC = "Probabilistic"
    MEANINGLESS = "Meaningless"


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    probability: float | None
    table: ProbabilityTable
    denominator: float
    labels: tuple[str, ...] = ()
    certainty_tolerance: float = TOL.certainty
    statistic: float | None = None  # prob(...) value for threshold properties

    @classmethod
    def from_probability(cls, p: float, table, denominator, labels=(), tol=TOL.certainty, statistic=None):
        if p >= 1 - tol:
            kind = VerdictKind.TRUE
        elif p <= tol:
            kind = VerdictKind.FALSE
        else:
            kind = VerdictKind.PROBABILISTIC
        return cls(kind, p, table, denominator, tuple(labels), tol, statistic)

    def __str__(self):
        if self.kind is VerdictKind.PROBABILISTIC:
            return f"Probabilistic({self.probability:.12g})"
        return self.kind.value


def _resolve(ref: Outcome, groups) -> tuple[str, int]:
    """Find ``ref`` among (kind, events) groups; first group with a match wins."""
    for kind, events in groups:
        hits = [
            i
            for i, ev in enumerate(events)
            if ev.label == ref.label and (ref.slot is None or ev.slot == ref.slot)
        ]
        if len(hits) > 1:
            raise UnresolvedLabelError(f"{ref} is ambiguous; qualify it as label@slot")
        if hits:
            return kind, hits[0]
    raise UnresolvedLabelError(f"{ref} does not name any event")


@dataclass(frozen=True, eq=False)
class BoundQuery:
    """A query laid out as one event sequence: fixed events first, then replacements."""

    events: tuple[MeasurementEvent, ...]
    recorded: tuple[float | None, ...]  # conditioning values for the leading fixed events
    prop: PropertyExpr
    bindings: dict

    @property
    def relation(self):
        return self.prop.relation if isinstance(self.prop, ProbCompare) else self.prop

    def consistent(self, seq) -> bool:
        return all(r is None or abs(seq[j] - r) <= VALUE_TOL for j, r in enumerate(self.recorded))

    def holds(self, seq) -> bool:
        env = {ref: (seq[where] if how == "seq" else where) for ref, (how, where) in self.bindings.items()}
        return self.relation.holds(env)


def bind(world: ActualWorld, query: CounterfactualQuery) -> BoundQuery:
    """Replace the actual measurement by the query's and resolve property references."""
    fixed_events = [ev for ev, _ in world.fixed]
    fixed_slots = {ev.slot for ev in fixed_events}
    for ev in query.replacement:
        if ev.observable.layout != world.layout:
            raise ValueError(f"replacement {ev.label!r} layout does not match states")
        if ev.slot in fixed_slots:
            raise QueryError(f"replacement {ev.label!r} at slot {ev.slot} coincides with a fixed measurement")
    n_fixed = len(fixed_events)
    groups = [
        ("replacement", list(query.replacement)),
        ("fixed", fixed_events),
        ("actual", [ev for ev, _ in world.actual]),
    ]
    bindings = {}
    for ref in query.prop.refs():
        kind, i = _resolve(ref, groups)
        if kind == "replacement":
            bindings[ref] = ("seq", n_fixed + i)
        elif kind == "fixed":
            bindings[ref] = ("seq", i)
        else:
            # the actual outcome only ever enters as a literal constant
            bindings[ref] = ("const", world.actual[i][1])
    return BoundQuery(
        tuple(fixed_events) + query.replacement,
        tuple(out for _, out in world.fixed),
        query.prop,
        bindings,
    )


def evaluate(world: ActualWorld, query: CounterfactualQuery, tol: float = TOL.certainty) -> Verdict:
    """Truth value of ``query`` in ``world``: True, False, Probabilistic(p) or Meaningless."""
    bound = bind(world, query)
    labels = tuple(ev.label for ev in bound.events)
    weights = sequence_weights(world.tsv, bound.events)
    consistent = [(seq, w) for seq, w in weights if bound.consistent(seq)]
    mass = float(sum(w for _, w in consistent))
    if mass < TOL.zero_denominator:
        return Verdict(VerdictKind.MEANINGLESS, None, ProbabilityTable((), mass), mass, labels, tol)
    table = ProbabilityTable(tuple((seq, min(1.0, w / mass)) for seq, w in consistent), mass)

    p = sum(q for seq, q in table.entries if bound.holds(seq))
    p = min(1.0, max(0.0, p))
    if isinstance(query.prop, ProbCompare):
        outcome = 1.0 if query.prop.compare(p, tol) else 0.0
        return Verdict.from_probability(outcome, table, mass, labels, tol, statistic=p)
    return Verdict.from_probability(p, table, mass, labels, tol)


# -- definitions (iii) and (iv) ----------------------------------------------


def definition_iii_eval(tsv: TwoStateVector, obs: ObservableDecomposition) -> ProbabilityTable:
    """Outcome probabilities of ``obs`` had it been measured between pre and post."""
    require_valid(obs)
    try:
        return abl_single(tsv, obs)
    except ZeroDenominatorError as exc:
        raise MeaninglessError(exc.denominator) from exc


def element_of_reality(
    tsv: TwoStateVector, obs: ObservableDecomposition, tol: float = TOL.certainty
) -> tuple[float, float] | None:
    """``(eigenvalue, probability)`` if the outcome of ``obs`` is certain, else None."""
    table = definition_iii_eval(tsv, obs)
    value, p = table.max_entry()
    if p >= 1 - tol:
        return value, p
    return None


@dataclass(frozen=True)
class ProductRuleReport:
    a: tuple[float, float] | None
    b: tuple[float, float] | None
    ab: tuple[float, float] | None
    status: str  # "holds" | "fails" | "inapplicable"
    lhs: float | None = None  # value of AB
    rhs: float | None = None  # value(A) * value(B)
    labels: tuple[str, str, str] = ("", "", "")


def product_rule_check(
    tsv: TwoStateVector,
    a: ObservableDecomposition,
    b: ObservableDecomposition,
    ab: ObservableDecomposition,
) -> ProductRuleReport:
    """Compare the element of reality for AB with the product of those for A and B."""
    if set(a.support) & set(b.support):
        raise ValueError(f"{a.label!r} and {b.label!r} act on overlapping subsystems")
    if abs(ab.matrix() - a.matrix() @ b.matrix()).max() > TOL.structural:
        raise ValueError(f"{ab.label!r} is not the product of {a.label!r} and {b.label!r}")
    ea, eb, eab = (element_of_reality(tsv, o) for o in (a, b, ab))
    labels = (a.label, b.label, ab.label)
    if ea is None or eb is None or eab is None:
        return ProductRuleReport(ea, eb, eab, "inapplicable", labels=labels)
    lhs, rhs = eab[0], ea[0] * eb[0]
    status = "holds" if abs(lhs - rhs) <= TOL.structural else "fails"
    return ProductRuleReport(ea, eb, eab, status, lhs, rhs, labels)
