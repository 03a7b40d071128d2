import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tscf.hilbert import DOWN, QUBIT, UP, LinearOperator, SpaceLayout, StateVector, apply, pauli
from tscf.oracle import ForwardRun, enumerate_exact
from tscf.randomize import random_case, random_events, random_state, random_unitary
from tscf.tsvf import (
    MeasurementEvent,
    SlotConstraintError,
    TwoStateVector,
    ZeroDenominatorError,
    abl_sequence,
    abl_single,
    time_reversed,
)

seeds = st.integers(0, 2**32 - 1)
SZ = pauli("Z", 0, QUBIT, "sz")
SX = pauli("X", 0, QUBIT, "sx")


def test_overlap_cached(singlet_xy_tsv):
    assert abs(singlet_xy_tsv.overlap) == pytest.approx(0.5, abs=1e-15)


def test_layout_mismatch():
    with pytest.raises(ValueError):
        TwoStateVector(UP, StateVector(SpaceLayout((2, 2)), [1, 0, 0, 0]))


def test_abl_singlet_xy_sigma1y(singlet_xy_tsv, singlet_xy_observables):
    table = abl_single(singlet_xy_tsv, singlet_xy_observables[0])
    assert table[1.0] == pytest.approx(0, abs=1e-12)
    assert table[-1.0] == pytest.approx(1, abs=1e-12)


def test_abl_eigenstate():
    table = abl_single(TwoStateVector(UP, UP), SZ)
    assert table.as_dict() == {1.0: 1.0, -1.0: 0.0}
    assert table.denominator == pytest.approx(1)


def test_abl_up_to_down_via_x():
    # |<d|x+>|^2 |<x+|u>|^2 = 1/4 for both outcomes
    table = abl_single(TwoStateVector(UP, DOWN), SX)
    assert table[1.0] == pytest.approx(0.5, abs=1e-12)
    assert table[-1.0] == pytest.approx(0.5, abs=1e-12)
    assert table.denominator == pytest.approx(0.5, abs=1e-12)


def test_abl_zero_denominator():
    with pytest.raises(ZeroDenominatorError) as info:
        abl_single(TwoStateVector(UP, DOWN), SZ)
    assert info.value.denominator < 1e-24


def test_no_post_selection_is_born_rule():
    table = abl_single(TwoStateVector(UP), SX)
    assert table.as_dict() == pytest.approx({1.0: 0.5, -1.0: 0.5}, abs=1e-15)


def test_single_event_sequence_reduces(singlet_xy_tsv, singlet_xy_observables):
    for obs in singlet_xy_observables:
        single = abl_single(singlet_xy_tsv, obs)
        seq = abl_sequence(singlet_xy_tsv, [MeasurementEvent(1, obs)])
        assert [k for k, in seq.keys()] == single.keys()
        for (k,), p in seq.entries:
            assert p == single[k]
        assert seq.denominator == pytest.approx(single.denominator, abs=1e-15)


def test_sequence_matches_oracle_x_then_z():
    events = [MeasurementEvent(1, SX), MeasurementEvent(2, SZ)]
    tsv = TwoStateVector(UP, DOWN)
    table = abl_sequence(tsv, events)
    oracle = enumerate_exact(ForwardRun.from_tsv(tsv, events))
    assert table.keys() == oracle.keys()
    for k in table.keys():
        assert table[k] == pytest.approx(oracle[k], abs=1e-12)
    # after sigma_z the post |d> forces sigma_z = -1
    assert table[(1.0, -1.0)] == pytest.approx(0.5)
    assert table[(1.0, 1.0)] == 0.0


@given(seeds)
def test_repeated_z_is_repeatable(seed):
    rng = np.random.default_rng(seed)
    tsv = TwoStateVector(random_state(rng, QUBIT), random_state(rng, QUBIT))
    table = abl_sequence(tsv, [MeasurementEvent(1, SZ), MeasurementEvent(2, SZ)])
    for (b1, b2), p in table.entries:
        if b1 != b2:
            assert p == 0.0


def test_same_slot_overlap_rejected():
    with pytest.raises(SlotConstraintError):
        abl_sequence(TwoStateVector(UP, UP), [MeasurementEvent(1, SZ), MeasurementEvent(1, SX)])


def test_slot_zero_rejected():
    with pytest.raises(SlotConstraintError):
        MeasurementEvent(0, SZ)


def test_same_slot_order_independent(singlet_xy_tsv, singlet_xy_observables):
    sy1, sx2, _ = singlet_xy_observables
    a = abl_sequence(singlet_xy_tsv, [MeasurementEvent(1, sy1), MeasurementEvent(1, sx2)])
    b = abl_sequence(singlet_xy_tsv, [MeasurementEvent(1, sx2), MeasurementEvent(1, sy1)])
    for (y, x), p in a.entries:
        assert b[(x, y)] == pytest.approx(p, abs=1e-15)


@given(seeds)
def test_normalization(seed):
    tsv, events = random_case(np.random.default_rng(seed))
    assert abs(abl_sequence(tsv, events).total() - 1) <= 1e-12


@given(seeds)
def test_time_reversal_single(seed):
    rng = np.random.default_rng(seed)
    tsv, events = random_case(rng, max_events=1)
    fwd = abl_single(tsv, events[0].observable)
    back = abl_single(tsv.swapped(), events[0].observable)
    for k, p in fwd.entries:
        assert abs(back[k] - p) <= 1e-12


@given(seeds)
def test_time_reversal_sequence(seed):
    tsv, events = random_case(np.random.default_rng(seed))
    fwd = abl_sequence(tsv, events)
    back = abl_sequence(*time_reversed(tsv, events))
    for k, p in fwd.entries:
        assert abs(back[tuple(reversed(k))] - p) <= 1e-12


@settings(max_examples=60)
@given(seeds)
def test_oracle_equivalence_up_to_dim_8(seed):
    rng = np.random.default_rng(seed)
    dims = [(8,), (2, 4), (4, 2), (2, 2, 2), (2, 3), (3,)][int(rng.integers(6))]
    layout = SpaceLayout(dims)
    tsv = TwoStateVector(random_state(rng, layout), random_state(rng, layout))
    events = random_events(rng, layout, int(rng.integers(1, 4)))
    table = abl_sequence(tsv, events)
    oracle = enumerate_exact(ForwardRun.from_tsv(tsv, events))
    assert table.keys() == oracle.keys()
    assert max(abs(table[k] - oracle[k]) for k in table.keys()) <= 1e-12


@given(seeds)
def test_post_selection_certainty(seed):
    rng = np.random.default_rng(seed)
    tsv, events = random_case(rng, max_events=1)
    obs = events[0].observable
    k = int(rng.integers(len(obs.branches)))
    a, p = obs.branches[k]
    image = apply(p, tsv.pre)
    post = StateVector.normalized(tsv.layout, image)
    table = abl_single(TwoStateVector(tsv.pre, post), obs)
    assert table[a] >= 1 - 1e-12


def test_evolution_gaps(rng):
    layout = SpaceLayout((3,))
    tsv = TwoStateVector(random_state(rng, layout), random_state(rng, layout))
    events = random_events(rng, layout, 2)
    u = LinearOperator(layout, random_unitary(rng, 3))
    v = LinearOperator(layout, random_unitary(rng, 3))
    n_gaps = len({e.slot for e in events}) + 1
    gaps = [u] + [None] * (n_gaps - 2) + [v]
    evolved = abl_sequence(tsv, events, gaps)
    # same as moving U into the pre state and V^dagger into the post state
    moved = TwoStateVector(
        StateVector(layout, apply(u, tsv.pre)),
        StateVector(layout, v.matrix.conj().T @ tsv.post.amplitudes),
    )
    direct = abl_sequence(moved, events)
    for k, p in direct.entries:
        assert evolved[k] == pytest.approx(p, abs=1e-12)
    with pytest.raises(ValueError):
        abl_sequence(tsv, events, [u])
