"""ABL probabilities for measurements between a pre- and a post-selection.

A ``TwoStateVector`` pairs the state fixed by the complete measurement at
the start of the interval with the state fixed by the complete measurement
at its end. ``post=None`` means no final measurement was recorded; the
rules then reduce to the ordinary forward Born rule (the post-selection is
summed over a complete basis).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from tscf.hilbert import (
    LinearOperator,
    ObservableDecomposition,
    StateVector,
    apply,
    inner,
)
from tscf.tolerances import TOL


class ZeroDenominatorError(ArithmeticError):
    """The pre/post pair is impossible given the intermediate measurements."""

    def __init__(self, denominator: float, message: str = ""):
        self.denominator = denominator
        super().__init__(message or f"ABL denominator {denominator:.3e} is zero")


class SlotConstraintError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TwoStateVector:
    pre: StateVector
    post: StateVector | None = None
    overlap: complex | None = field(init=False, default=None)

    def __post_init__(self):
        if self.post is not None:
            if self.post.layout != self.pre.layout:
                raise ValueError(f"layout mismatch: {self.pre.layout} vs {self.post.layout}")
            object.__setattr__(self, "overlap", inner(self.post, self.pre))

    @property
    def layout(self):
        return self.pre.layout

    def swapped(self) -> TwoStateVector:
        if self.post is None:
            raise ValueError("cannot time-reverse without a post-selected state")
        return TwoStateVector(self.post, self.pre)


@dataclass(frozen=True, eq=False)
class MeasurementEvent:
    """An observable measured at an ordered time ``slot`` (pre = 0)."""

    slot: int
    observable: ObservableDecomposition
    label: str = ""
    subsystems: tuple[int, ...] | None = None

    def __post_init__(self):
        if int(self.slot) < 1:
            raise SlotConstraintError(f"event slot must be >= 1 (pre-selection is slot 0), got {self.slot}")
        object.__setattr__(self, "slot", int(self.slot))
        if not self.label:
            object.__setattr__(self, "label", self.observable.label)
        subs = self.subsystems if self.subsystems is not None else self.observable.support
        object.__setattr__(self, "subsystems", tuple(sorted(subs)))


@dataclass(frozen=True)
class ProbabilityTable:
    """Outcome -> probability, with the raw normalizing sum kept in ``denominator``.

    Keys are eigenvalues for a single measurement and tuples of eigenvalues
    (in the caller's event order) for sequences.
    """

    entries: tuple[tuple[object, float], ...]
    denominator: float

    def as_dict(self) -> dict:
        return dict(self.entries)

    def __getitem__(self, key) -> float:
        for k, p in self.entries:
            if k == key:
                return p
        raise KeyError(key)

    def get(self, key, default=0.0) -> float:
        try:
            return self[key]
        except KeyError:
            return default

    def keys(self):
        return [k for k, _ in self.entries]

    def total(self) -> float:
        return float(sum(p for _, p in self.entries))

    def max_entry(self):
        return max(self.entries, key=lambda e: e[1])


def _clamp(p: float) -> float:
    if p < -TOL.arithmetic or p > 1 + TOL.arithmetic:
        raise ArithmeticError(f"probability {p!r} outside [0, 1]")
    return min(1.0, max(0.0, p))


def _normalize(weights: list[tuple[object, float]]) -> ProbabilityTable:
    total = float(sum(w for _, w in weights))
    if total < TOL.zero_denominator:
        raise ZeroDenominatorError(total)
    return ProbabilityTable(tuple((k, _clamp(w / total)) for k, w in weights), total)


def _weight(tsv: TwoStateVector, vec: np.ndarray) -> float:
    if tsv.post is None:
        return float(np.vdot(vec, vec).real)
    return abs(inner(tsv.post, vec)) ** 2


def abl_single(tsv: TwoStateVector, obs: ObservableDecomposition) -> ProbabilityTable:
    """p_i = |<post|P_i|pre>|^2 / sum_j |<post|P_j|pre>|^2."""
    if obs.layout != tsv.layout:
        raise ValueError(f"observable layout {obs.layout} does not match states {tsv.layout}")
    weights = [(a, _weight(tsv, apply(p, tsv.pre))) for a, p in obs.branches]
    return _normalize(weights)


def application_order(events: Sequence[MeasurementEvent]) -> list[int]:
    """Indices of ``events`` in the order their projectors act on the pre state.

    Raises SlotConstraintError if two events share a slot and a subsystem.
    """
    by_slot: dict[int, list[int]] = {}
    for i, ev in enumerate(events):
        by_slot.setdefault(ev.slot, []).append(i)
    order = []
    for slot in sorted(by_slot):
        members = by_slot[slot]
        seen: set[int] = set()
        for i in members:
            overlap = seen & set(events[i].subsystems)
            if overlap:
                raise SlotConstraintError(
                    f"events at slot {slot} overlap on subsystem(s) {sorted(overlap)}"
                )
            seen |= set(events[i].subsystems)
        order.extend(sorted(members, key=lambda i: events[i].subsystems))
    return order


def _gap_positions(events, order) -> list[int]:
    """For each step in ``order``, the index of the distinct slot it opens (or -1)."""
    marks = []
    last = None
    k = -1
    for i in order:
        if events[i].slot != last:
            k += 1
            last = events[i].slot
            marks.append(k)
        else:
            marks.append(-1)
    return marks


def sequence_weights(
    tsv: TwoStateVector,
    events: Sequence[MeasurementEvent],
    evolution: Sequence[LinearOperator | None] | None = None,
) -> list[tuple[tuple[float, ...], float]]:
    """Unnormalized chain weights |<post| P_bn ... P_b1 |pre>|^2 for every outcome sequence.

    ``evolution`` optionally holds one operator per gap: before each distinct
    slot, plus one before the post-selection. Missing or None gaps are identity.
    """
    for ev in events:
        if ev.observable.layout != tsv.layout:
            raise ValueError(f"event {ev.label!r} layout does not match states")
    order = application_order(events)
    n_slots = len({ev.slot for ev in events})
    gaps = list(evolution) if evolution is not None else []
    if gaps and len(gaps) != n_slots + 1:
        raise ValueError(f"evolution needs {n_slots + 1} gap operators, got {len(gaps)}")
    opens = _gap_positions(events, order)

    def gap(vec, k):
        if gaps and gaps[k] is not None:
            return apply(gaps[k], vec)
        return vec

    results: list[tuple[tuple[float, ...], float]] = []
    outcome = [0.0] * len(events)

    def walk(step: int, vec: np.ndarray):
        if step == len(order):
            final = gap(vec, n_slots)
            results.append((tuple(outcome), _weight(tsv, final)))
            return
        i = order[step]
        if opens[step] >= 0:
            vec = gap(vec, opens[step])
        for a, p in events[i].observable.branches:
            outcome[i] = a
            walk(step + 1, apply(p, vec))

    walk(0, tsv.pre.amplitudes)
    # present sequences in lexicographic branch order of the caller's event list
    rank = [{a: j for j, (a, _) in enumerate(ev.observable.branches)} for ev in events]
    results.sort(key=lambda kv: tuple(rank[i][a] for i, a in enumerate(kv[0])))
    return results


def abl_sequence(
    tsv: TwoStateVector,
    events: Sequence[MeasurementEvent],
    evolution: Sequence[LinearOperator | None] | None = None,
) -> ProbabilityTable:
    """Joint ABL distribution over outcome sequences of ``events``.

    Projectors act in slot order; same-slot events (disjoint subsystems)
    act in ascending subsystem order. Table keys follow the order of
    ``events`` as passed in.
    """
    return _normalize(sequence_weights(tsv, events, evolution))


def time_reversed(
    tsv: TwoStateVector, events: Sequence[MeasurementEvent]
) -> tuple[TwoStateVector, list[MeasurementEvent]]:
    """Swap pre/post and mirror the slots; the event list is reversed."""
    if not events:
        return tsv.swapped(), []
    lo = min(ev.slot for ev in events)
    hi = max(ev.slot for ev in events)
    mirrored = [
        MeasurementEvent(lo + hi - ev.slot, ev.observable, ev.label, ev.subsystems)
        for ev in reversed(events)
    ]
    return tsv.swapped(), mirrored


def outcome_sequences(events: Sequence[MeasurementEvent]):
    return itertools.product(*(ev.observable.eigenvalues for ev in events))
