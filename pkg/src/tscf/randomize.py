"""Seeded random states, observables, event lists and whole scenarios."""

from __future__ import annotations

import numpy as np

from tscf.counterfactual import And, Const, Equals, Outcome, ProbCompare, Product
from tscf.hilbert import SpaceLayout, StateVector, local_observable
from tscf.scenario.model import (
    EventSpec,
    ExplicitSpec,
    PauliSpec,
    ProductRuleSpec,
    ProductSpec,
    QuerySpec,
    Scenario,
    StateSpec,
)
from tscf.tsvf import MeasurementEvent, TwoStateVector


def random_layout(rng: np.random.Generator, max_dim: int = 4, max_subsystems: int = 2) -> SpaceLayout:
    n = int(rng.integers(1, max_subsystems + 1))
    return SpaceLayout(tuple(int(d) for d in rng.integers(2, max_dim + 1, size=n)))


def random_amplitudes(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_state(rng: np.random.Generator, layout: SpaceLayout) -> StateVector:
    return StateVector.normalized(layout, random_amplitudes(rng, layout.total_dim))


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_spectrum(rng: np.random.Generator, dim: int) -> dict[float, list[np.ndarray]]:
    """Random orthonormal basis split into 2..dim eigenspaces with distinct half-integer eigenvalues."""
    u = random_unitary(rng, dim)
    k = int(rng.integers(2, dim + 1))
    cuts = np.sort(rng.choice(np.arange(1, dim), size=k - 1, replace=False))
    groups = np.split(np.arange(dim), cuts)
    values = rng.choice(np.arange(-2 * dim, 2 * dim + 1), size=k, replace=False) / 2
    return {float(a): [u[:, j] for j in g] for a, g in zip(values, groups)}


def random_support(rng: np.random.Generator, layout: SpaceLayout) -> tuple[int, ...]:
    n = layout.n_subsystems
    size = int(rng.integers(1, n + 1))
    return tuple(sorted(int(k) for k in rng.choice(n, size=size, replace=False)))


def random_events(
    rng: np.random.Generator, layout: SpaceLayout, n_events: int
) -> list[MeasurementEvent]:
    """Events with random local observables; same-slot events act on disjoint subsystems."""
    events: list[MeasurementEvent] = []
    slot = 1
    busy: set[int] = set()
    for i in range(n_events):
        support = random_support(rng, layout)
        if events and (busy & set(support) or rng.random() < 0.6):
            slot += 1
            busy = set()
        busy |= set(support)
        d = int(np.prod([layout.subsystem_dims[k] for k in support]))
        obs = local_observable(random_spectrum(rng, d), support, layout, f"e{i}")
        events.append(MeasurementEvent(slot, obs, f"e{i}"))
    return events


def random_case(
    rng: np.random.Generator, max_dim: int = 4, max_subsystems: int = 2, max_events: int = 3
) -> tuple[TwoStateVector, list[MeasurementEvent]]:
    layout = random_layout(rng, max_dim, max_subsystems)
    tsv = TwoStateVector(random_state(rng, layout), random_state(rng, layout))
    return tsv, random_events(rng, layout, int(rng.integers(1, max_events + 1)))


def random_scenario(rng: np.random.Generator, index: int = 0) -> Scenario:
    """A valid scenario exercising every statement kind the language has."""
    layout = random_layout(rng, 4, 2)
    n_states = int(rng.integers(1, 4))
    states = tuple(
        StateSpec(f"s{i}", tuple(complex(a) for a in random_amplitudes(rng, layout.total_dim)))
        for i in range(n_states)
    )

    observables: list = []
    supports: dict[str, tuple[int, ...]] = {}
    eigen: dict[str, list[float]] = {}
    for i in range(int(rng.integers(1, 5))):
        name = f"o{i}"
        qubits = [k for k, d in enumerate(layout.subsystem_dims) if d == 2]
        pairs = [
            (a, b)
            for a in supports
            for b in supports
            if a < b and not set(supports[a]) & set(supports[b])
        ]
        kind = rng.random()
        if pairs and kind < 0.25:
            a, b = pairs[int(rng.integers(len(pairs)))]
            observables.append(ProductSpec(name, a, b))
            supports[name] = tuple(sorted(supports[a] + supports[b]))
            eigen[name] = sorted({x * y for x in eigen[a] for y in eigen[b]})
        elif qubits and kind < 0.55:
            k = qubits[int(rng.integers(len(qubits)))]
            observables.append(PauliSpec(name, str(rng.choice(["X", "Y", "Z"])), k))
            supports[name] = (k,)
            eigen[name] = [1.0, -1.0]
        else:
            whole = rng.random() < 0.3
            support = tuple(range(layout.n_subsystems)) if whole else random_support(rng, layout)
            d = int(np.prod([layout.subsystem_dims[k] for k in support]))
            spectrum = random_spectrum(rng, d)
            branches = tuple(
                (a, tuple(tuple(complex(x) for x in v) for v in vecs)) for a, vecs in spectrum.items()
            )
            observables.append(ExplicitSpec(name, branches, None if whole else support))
            supports[name] = support
            eigen[name] = list(spectrum)

    names = list(supports)

    def pick():
        return names[int(rng.integers(len(names)))]

    slots = iter(int(s) for s in rng.permutation(np.arange(1, 9)))
    fixed = []
    for _ in range(int(rng.integers(0, 3))):
        o = pick()
        outcome = float(rng.choice(eigen[o])) if rng.random() < 0.7 else None
        fixed.append(EventSpec(next(slots), o, outcome))
    actual = []
    for _ in range(int(rng.integers(0, 2))):
        o = pick()
        actual.append(EventSpec(next(slots), o, float(rng.choice(eigen[o]))))
    free = list(slots)

    queries = []
    for qi in range(int(rng.integers(0, 3))):
        repl = [(free[j], pick()) for j in range(int(rng.integers(1, 3)))]
        refs = [Outcome(name, slot) for slot, name in repl]

        def atom():
            r = refs[int(rng.integers(len(refs)))]
            return r, eigen[r.label]

        def equality():
            r, vals = atom()
            if rng.random() < 0.3 and len(refs) > 1:
                other, ovals = atom()
                return Equals(Product((r, other)), Const(float(rng.choice(vals)) * float(rng.choice(ovals))))
            return Equals(r, Const(float(rng.choice(vals))))

        rel = equality() if rng.random() < 0.7 else And((equality(), equality()))
        if rng.random() < 0.25:
            op = str(rng.choice([">=", "<=", ">", "<", "=="]))
            prop = ProbCompare(rel, op, float(np.round(rng.random(), 3)))
        else:
            prop = rel
        queries.append(QuerySpec(f"q{qi + 1}", tuple(repl), prop))

    products = []
    for a in names:
        for b in names:
            for ab, spec in zip(names, observables):
                if isinstance(spec, ProductSpec) and (spec.left, spec.right) == (a, b) and rng.random() < 0.5:
                    products.append(ProductRuleSpec(a, b, ab))

    post = f"s{int(rng.integers(n_states))}" if rng.random() < 0.8 else None
    samples = int(rng.integers(1, 10**6)) if rng.random() < 0.5 else None
    seed = int(rng.integers(0, 2**32)) if rng.random() < 0.5 else None
    return Scenario(
        f"random-{index}",
        layout,
        states,
        tuple(observables),
        "s0",
        post,
        tuple(fixed),
        tuple(actual),
        tuple(queries),
        tuple(products),
        samples,
        seed,
    )
