"""Declarative scenario records and their resolution into live objects.

Everything stored on a ``Scenario`` is a plain value (tuples of floats and
complex numbers, names), so two scenarios compare equal exactly when they
describe the same experiment.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from tscf.counterfactual import ActualWorld, CounterfactualQuery, PropertyExpr
from tscf.hilbert import (
    ObservableDecomposition,
    SpaceLayout,
    StateVector,
    local_observable,
    pauli,
    product_observable,
    validate,
)
from tscf.tsvf import MeasurementEvent


class ScenarioError(ValueError):
    """Problem in scenario text or content; ``line``/``column`` are 1-based (0 = unknown)."""

    def __init__(self, message: str, line: int = 0, column: int = 0, token: str = ""):
        self.message = message
        self.line = line
        self.column = column
        self.token = token
        where = f"line {line}" + (f", column {column}" if column else "") if line else "scenario"
        super().__init__(f"{where}: {message}" + (f" (at {token!r})" if token else ""))


class ParseError(ScenarioError):
    pass


class SemanticError(ScenarioError):
    pass


@dataclass(frozen=True)
class StateSpec:
    name: str
    amplitudes: tuple[complex, ...]


@dataclass(frozen=True)
class PauliSpec:
    name: str
    axis: str
    subsystem: int  # 0-based


@dataclass(frozen=True)
class ExplicitSpec:
    """Eigenvalue -> orthonormal eigenvectors, in coordinates of ``support``."""

    name: str
    branches: tuple[tuple[float, tuple[tuple[complex, ...], ...]], ...]
    support: tuple[int, ...] | None = None  # None = whole space


@dataclass(frozen=True)
class ProductSpec:
    name: str
    left: str
    right: str


ObservableSpec = PauliSpec | ExplicitSpec | ProductSpec


@dataclass(frozen=True)
class EventSpec:
    slot: int
    obs: str
    outcome: float | None = None


@dataclass(frozen=True)
class QuerySpec:
    label: str
    replacement: tuple[tuple[int, str], ...]
    prop: PropertyExpr


@dataclass(frozen=True)
class ProductRuleSpec:
    a: str
    b: str
    ab: str


@dataclass(frozen=True)
class Scenario:
    name: str
    layout: SpaceLayout
    states: tuple[StateSpec, ...] = ()
    observables: tuple[ObservableSpec, ...] = ()
    pre: str = ""
    post: str | None = None
    fixed: tuple[EventSpec, ...] = ()
    actual: tuple[EventSpec, ...] = ()
    queries: tuple[QuerySpec, ...] = ()
    product_checks: tuple[ProductRuleSpec, ...] = ()
    samples: int | None = None
    seed: int | None = None

    # -- resolution --------------------------------------------------------

    @cached_property
    def state_vectors(self) -> dict[str, StateVector]:
        return {s.name: StateVector(self.layout, np.array(s.amplitudes)) for s in self.states}

    @cached_property
    def observable_map(self) -> dict[str, ObservableDecomposition]:
        out: dict[str, ObservableDecomposition] = {}
        for spec in self.observables:
            out[spec.name] = build_observable(spec, self.layout, out)
        return out

    def observable(self, name: str) -> ObservableDecomposition:
        try:
            return self.observable_map[name]
        except KeyError:
            raise SemanticError(f"unknown observable {name!r}") from None

    def event(self, slot: int, name: str) -> MeasurementEvent:
        return MeasurementEvent(slot, self.observable(name), name)

    @property
    def world(self) -> ActualWorld:
        return ActualWorld(
            self.state_vectors[self.pre],
            self.state_vectors[self.post] if self.post is not None else None,
            tuple((self.event(e.slot, e.obs), e.outcome) for e in self.fixed),
            tuple((self.event(e.slot, e.obs), e.outcome) for e in self.actual),
        )

    def query(self, spec: QuerySpec) -> CounterfactualQuery:
        return CounterfactualQuery(
            tuple(self.event(slot, name) for slot, name in spec.replacement), spec.prop, spec.label
        )

    def check(self) -> None:
        """Full validation; raises SemanticError on the first problem."""
        names = [s.name for s in self.states]
        if len(set(names)) != len(names):
            raise SemanticError("duplicate state name")
        names = [o.name for o in self.observables]
        if len(set(names)) != len(names):
            raise SemanticError("duplicate observable name")
        try:
            vectors = self.state_vectors
        except ValueError as exc:
            raise SemanticError(str(exc)) from exc
        for ref in (self.pre, self.post):
            if ref is not None and ref not in vectors:
                raise SemanticError(f"unknown state {ref!r}")
        try:
            observables = self.observable_map
        except ValueError as exc:
            raise SemanticError(str(exc)) from exc
        for name, obs in observables.items():
            report = validate(obs)
            if not report.ok:
                raise SemanticError(f"observable {name!r} fails {', '.join(report.failures())}")
        try:
            world = self.world
        except ValueError as exc:
            raise SemanticError(str(exc)) from exc
        fixed_slots = {e.slot for e in self.fixed}
        for q in self.queries:
            try:
                query = self.query(q)
                clash = fixed_slots & {slot for slot, _ in q.replacement}
                if clash:
                    raise SemanticError(f"query {q.label!r}: slot(s) {sorted(clash)} hold fixed measurements")
                labels = [ev.label for ev in query.replacement] + [ev.label for ev, _ in world.fixed + world.actual]
                for ref in q.prop.refs():
                    if ref.label not in labels:
                        raise SemanticError(f"query {q.label!r}: {ref} does not name any event")
            except SemanticError as exc:
                exc.query = q.label
                raise
            except (ValueError, KeyError) as exc:
                err = SemanticError(f"query {q.label!r}: {exc}")
                err.query = q.label
                raise err from exc
        for pr in self.product_checks:
            for name in (pr.a, pr.b, pr.ab):
                self.observable(name)


def build_observable(
    spec: ObservableSpec, layout: SpaceLayout, known: dict[str, ObservableDecomposition]
) -> ObservableDecomposition:
    if isinstance(spec, PauliSpec):
        return pauli(spec.axis, spec.subsystem, layout, spec.name)
    if isinstance(spec, ExplicitSpec):
        support = spec.support if spec.support is not None else tuple(range(layout.n_subsystems))
        eigvecs = {a: [np.array(v) for v in vecs] for a, vecs in spec.branches}
        return local_observable(eigvecs, support, layout, spec.name)
    if isinstance(spec, ProductSpec):
        for ref in (spec.left, spec.right):
            if ref not in known:
                raise SemanticError(f"product({spec.left}, {spec.right}): unknown observable {ref!r}")
        return product_observable(known[spec.left], known[spec.right], spec.name)
    raise TypeError(f"not an observable spec: {spec!r}")
