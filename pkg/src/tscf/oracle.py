"""Forward Born-rule simulation used to check the ABL machinery.

Nothing here calls into the ABL code path: the oracle measures, collapses
and renormalizes step by step, exactly as a laboratory run would, and only
then post-selects on the final measurement.

Monte Carlo runs use numpy's PCG64 bit generator seeded through
``numpy.random.SeedSequence(seed)``; counts are bit-identical for a given
``(run, samples, seed)`` on every platform numpy supports.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from tscf.hilbert import LinearOperator, ObservableDecomposition, StateVector
from tscf.tolerances import TOL
from tscf.tsvf import (
    MeasurementEvent,
    ProbabilityTable,
    TwoStateVector,
    ZeroDenominatorError,
    abl_sequence,
    application_order,
)

log = logging.getLogger(__name__)

MAX_SEQUENCES = 10**6
MAX_DIM = 64


@dataclass(frozen=True, eq=False)
class ForwardRun:
    """A forward experiment: prepare ``pre``, measure ``events``, then ``post_observable``.

    ``required`` maps event indices to outcomes that must occur for the run
    to count (fixed intermediate results). ``post_observable=None`` means no
    final measurement.
    """

    pre: StateVector
    events: tuple[MeasurementEvent, ...]
    post_observable: ObservableDecomposition | None = None
    post_outcome: float | None = None
    required: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        if self.post_observable is not None and not self.post_observable.has_eigenvalue(self.post_outcome):
            raise ValueError(f"post outcome {self.post_outcome!r} is not an eigenvalue")

    @classmethod
    def from_tsv(cls, tsv: TwoStateVector, events: Sequence[MeasurementEvent], required=None) -> ForwardRun:
        """Model the post-selection as a complete measurement {|post><post|, 1 - |post><post|}."""
        post_obs = None
        if tsv.post is not None:
            post_obs = post_selection_observable(tsv.post)
        return cls(tsv.pre, tuple(events), post_obs, 1.0 if post_obs else None, dict(required or {}))


def post_selection_observable(post: StateVector) -> ObservableDecomposition:
    v = post.amplitudes
    hit = np.outer(v, v.conj())
    miss = np.eye(len(v)) - hit
    return ObservableDecomposition(
        post.layout,
        ((1.0, LinearOperator(post.layout, hit)), (0.0, LinearOperator(post.layout, miss))),
        "post",
    )


def _measure(state: np.ndarray, obs: ObservableDecomposition):
    """Born weights and collapsed (renormalized) states for every branch."""
    out = []
    for a, p in obs.branches:
        img = p.matrix @ state
        w = float(np.vdot(img, img).real)
        out.append((a, w, img / np.sqrt(w) if w > 0 else None))
    return out


def _check_limits(run: ForwardRun):
    if run.pre.layout.total_dim > MAX_DIM:
        raise ValueError(f"state dimension {run.pre.layout.total_dim} exceeds {MAX_DIM}")
    n = 1
    for ev in run.events:
        n *= len(ev.observable.branches)
    if n > MAX_SEQUENCES:
        raise ValueError(f"{n} outcome sequences exceed the enumeration limit {MAX_SEQUENCES}")


def _post_weight(run: ForwardRun, state: np.ndarray) -> float:
    if run.post_observable is None:
        return 1.0
    for a, w, _ in _measure(state, run.post_observable):
        if abs(a - run.post_outcome) <= TOL.structural:
            return w
    raise AssertionError("unreachable")


def enumerate_exact(run: ForwardRun) -> ProbabilityTable:
    """Distribution over intermediate outcome sequences, conditioned on the post outcome.

    ``denominator`` is the total probability of passing the post-selection
    (and any ``required`` intermediate results).
    """
    _check_limits(run)
    events = run.events
    order = application_order(events)
    joint: dict[tuple, float] = {}
    outcome = [0.0] * len(events)

    def branch(step: int, state: np.ndarray | None, prob: float):
        if step == len(order):
            key = tuple(outcome)
            joint[key] = prob * _post_weight(run, state) if state is not None else 0.0
            return
        i = order[step]
        for a, w, collapsed in _measure(state, events[i].observable) if state is not None else (
            (a, 0.0, None) for a in events[i].observable.eigenvalues
        ):
            outcome[i] = a
            branch(step + 1, collapsed, prob * w)

    branch(0, run.pre.amplitudes, 1.0)

    def wanted(key):
        return all(abs(key[i] - v) <= TOL.structural for i, v in run.required.items())

    rank = [{a: j for j, a in enumerate(ev.observable.eigenvalues)} for ev in events]
    keys = sorted((k for k in joint if wanted(k)), key=lambda k: tuple(rank[i][a] for i, a in enumerate(k)))
    total = float(sum(joint[k] for k in keys))
    if total < TOL.zero_denominator:
        raise ZeroDenominatorError(total, f"post-selection probability {total:.3e} is zero")
    return ProbabilityTable(tuple((k, joint[k] / total) for k in keys), total)


@dataclass(frozen=True)
class EmpiricalTable:
    counts: tuple[tuple[tuple, int], ...]
    accepted: int
    total: int
    seed: int

    @property
    def all_rejected(self) -> bool:
        return self.accepted == 0

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.total

    def frequencies(self) -> dict:
        if self.accepted == 0:
            return {}
        return {k: c / self.accepted for k, c in self.counts}

    def count(self, key) -> int:
        return dict(self.counts).get(key, 0)


def monte_carlo(run: ForwardRun, samples: int, seed: int) -> EmpiricalTable:
    """Sample outcome chains by repeated measure-and-collapse, rejecting failed post-selections."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    _check_limits(run)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
    events = run.events
    order = application_order(events)
    steps = [events[i].observable for i in order]
    if run.post_observable is not None:
        steps.append(run.post_observable)
    required = {order.index(i): v for i, v in run.required.items()}

    # The collapse tree is deterministic given an outcome prefix; cache it.
    tree: dict[tuple[int, ...], tuple[np.ndarray, list]] = {}

    def node(prefix: tuple[int, ...], state: np.ndarray):
        if prefix not in tree:
            branches = _measure(state, steps[len(prefix)])
            weights = np.array([w for _, w, _ in branches])
            tree[prefix] = (np.cumsum(weights) / weights.sum(), branches)
        return tree[prefix]

    draws = rng.random((samples, len(steps)))
    counts: dict[tuple, int] = {}
    accepted = 0
    for row in draws:
        state = run.pre.amplitudes
        prefix: tuple[int, ...] = ()
        values = []
        ok = True
        for s in range(len(steps)):
            cdf, branches = node(prefix, state)
            j = min(int(np.searchsorted(cdf, row[s], side="right")), len(branches) - 1)
            a, _, state = branches[j]
            prefix += (j,)
            values.append(a)
            if s in required and abs(a - required[s]) > TOL.structural:
                ok = False
                break
        if not ok:
            continue
        if run.post_observable is not None:
            if abs(values[-1] - run.post_outcome) > TOL.structural:
                continue
            values = values[:-1]
        key = [0.0] * len(events)
        for step_i, i in enumerate(order):
            key[i] = values[step_i]
        counts[tuple(key)] = counts.get(tuple(key), 0) + 1
        accepted += 1

    if accepted == 0:
        log.warning("monte carlo: all %d samples rejected by post-selection", samples)
    rank = [{a: j for j, a in enumerate(ev.observable.eigenvalues)} for ev in events]
    ordered = tuple(sorted(counts.items(), key=lambda kv: tuple(rank[i][a] for i, a in enumerate(kv[0]))))
    return EmpiricalTable(ordered, accepted, samples, int(seed))


@dataclass(frozen=True)
class ComparisonReport:
    max_discrepancy: float
    denominator_ratio: float | None
    abl: ProbabilityTable | None
    exact: ProbabilityTable | None
    abl_zero: bool = False
    exact_zero: bool = False

    @property
    def both_meaningless(self) -> bool:
        return self.abl_zero and self.exact_zero


def cross_check(tsv: TwoStateVector, events: Sequence[MeasurementEvent]) -> ComparisonReport:
    """Run the ABL sequence rule and forward enumeration on the same data and compare."""
    abl = exact = None
    try:
        abl = abl_sequence(tsv, events)
    except ZeroDenominatorError:
        pass
    try:
        exact = enumerate_exact(ForwardRun.from_tsv(tsv, events))
    except ZeroDenominatorError:
        pass
    if abl is None and exact is None:
        raise ZeroDenominatorError(0.0, "both ABL and forward enumeration report a zero denominator")
    if abl is None or exact is None:
        # one-sided zero: a discrepancy, not an error
        return ComparisonReport(1.0, None, abl, exact, abl is None, exact is None)
    a, e = abl.as_dict(), exact.as_dict()
    diff = max((abs(a.get(k, 0.0) - e.get(k, 0.0)) for k in set(a) | set(e)), default=0.0)
    return ComparisonReport(diff, abl.denominator / exact.denominator, abl, exact)
