import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tscf import oracle
from tscf.hilbert import DOWN, QUBIT, UP, SpaceLayout, local_observable, pauli
from tscf.oracle import ForwardRun, cross_check, enumerate_exact, monte_carlo, post_selection_observable
from tscf.randomize import random_case, random_events, random_spectrum, random_state
from tscf.tsvf import MeasurementEvent, TwoStateVector, ZeroDenominatorError, abl_single

seeds = st.integers(0, 2**32 - 1)
SX, SZ = pauli("X", 0, QUBIT, "sx"), pauli("Z", 0, QUBIT, "sz")


def x_between_up_and_down():
    return ForwardRun.from_tsv(TwoStateVector(UP, DOWN), [MeasurementEvent(1, SX)])


def test_empty_sequence():
    table = enumerate_exact(ForwardRun.from_tsv(TwoStateVector(UP, UP), []))
    assert table.as_dict() == {(): pytest.approx(1.0)}
    assert table.denominator == pytest.approx(1.0)


def test_sigma_x_half_half():
    table = enumerate_exact(x_between_up_and_down())
    assert table[(1.0,)] == pytest.approx(0.5, abs=1e-12)
    assert table[(-1.0,)] == pytest.approx(0.5, abs=1e-12)
    # post-selection probability: 1/2 * 1/2 summed over both branches
    assert table.denominator == pytest.approx(0.5, abs=1e-12)
    single = abl_single(TwoStateVector(UP, DOWN), SX)
    assert single[1.0] == pytest.approx(table[(1.0,)], abs=1e-12)


def test_singlet_xy_sigma_1y(singlet_xy_tsv, singlet_xy_observables):
    table = enumerate_exact(ForwardRun.from_tsv(singlet_xy_tsv, [MeasurementEvent(1, singlet_xy_observables[0])]))
    assert table[(-1.0,)] == pytest.approx(1.0, abs=1e-12)
    assert table.get((1.0,), 0.0) == pytest.approx(0.0, abs=1e-12)


def test_post_selection_observable_is_complete():
    obs = post_selection_observable(UP)
    assert obs.eigenvalues == (1.0, 0.0)
    np.testing.assert_allclose(obs.matrix(), np.diag([1.0, 0.0]), atol=1e-15)


def test_post_outcome_must_be_eigenvalue():
    with pytest.raises(ValueError):
        ForwardRun(UP, (), SZ, 0.5)


def test_zero_post_selection():
    with pytest.raises(ZeroDenominatorError):
        enumerate_exact(ForwardRun.from_tsv(TwoStateVector(UP, DOWN), [MeasurementEvent(1, SZ)]))


def test_required_outcomes():
    run = ForwardRun(UP, (MeasurementEvent(1, SX), MeasurementEvent(2, SZ)), required={0: -1.0})
    table = enumerate_exact(run)
    assert set(table.keys()) == {(-1.0, 1.0), (-1.0, -1.0)}
    assert table.denominator == pytest.approx(0.5)


def test_enumeration_limits(monkeypatch):
    monkeypatch.setattr(oracle, "MAX_SEQUENCES", 3)
    with pytest.raises(ValueError, match="enumeration limit"):
        enumerate_exact(ForwardRun(UP, (MeasurementEvent(1, SX), MeasurementEvent(2, SZ))))
    layout = SpaceLayout((5, 13))
    with pytest.raises(ValueError, match="exceeds"):
        enumerate_exact(ForwardRun(random_state(np.random.default_rng(0), layout), ()))


def test_monte_carlo_deterministic():
    run = x_between_up_and_down()
    a = monte_carlo(run, 2000, 7)
    b = monte_carlo(run, 2000, 7)
    assert a == b
    assert monte_carlo(run, 2000, 8) != a
    assert sum(c for _, c in a.counts) == a.accepted <= a.total == 2000


def test_monte_carlo_three_sigma():
    n = 10**5
    table = monte_carlo(x_between_up_and_down(), n, 12345)
    # acceptance rate tracks the post-selection probability 1/2
    assert abs(table.accepted - n * 0.5) <= 3 * np.sqrt(n * 0.25)
    m = table.accepted
    for key in [(1.0,), (-1.0,)]:
        assert abs(table.count(key) - 0.5 * m) <= 3 * np.sqrt(m * 0.25)


def test_monte_carlo_uneven_distribution(rng):
    layout = SpaceLayout((3,))
    pre, post = random_state(rng, layout), random_state(rng, layout)
    events = random_events(rng, layout, 2)
    run = ForwardRun.from_tsv(TwoStateVector(pre, post), events)
    exact = enumerate_exact(run)
    n = 10**5
    table = monte_carlo(run, n, 99)
    q = exact.denominator
    assert abs(table.accepted - n * q) <= 3 * np.sqrt(n * q * (1 - q))
    m = table.accepted
    for key, p in exact.entries:
        assert abs(table.count(key) - m * p) <= 3 * np.sqrt(m * p * (1 - p)) + 1e-9


def test_all_rejected(caplog):
    run = ForwardRun.from_tsv(TwoStateVector(UP, DOWN), [MeasurementEvent(1, SZ)])
    with caplog.at_level(logging.WARNING, logger="tscf.oracle"):
        table = monte_carlo(run, 500, 3)
    assert table.all_rejected
    assert table.frequencies() == {}
    assert "rejected" in caplog.text


def test_samples_positive():
    with pytest.raises(ValueError):
        monte_carlo(x_between_up_and_down(), 0, 1)


def test_cross_check_singlet_xy(singlet_xy_tsv, singlet_xy_observables):
    for obs in singlet_xy_observables:
        report = cross_check(singlet_xy_tsv, [MeasurementEvent(1, obs)])
        assert report.max_discrepancy < 1e-12
        assert report.denominator_ratio == pytest.approx(1.0, abs=1e-12)


def test_cross_check_random():
    rng = np.random.default_rng(20240601)
    worst = 0.0
    for _ in range(100):
        tsv, events = random_case(rng, max_dim=4, max_subsystems=2, max_events=3)
        worst = max(worst, cross_check(tsv, events).max_discrepancy)
    assert worst < 1e-12


def test_cross_check_meaningless_both_sides():
    with pytest.raises(ZeroDenominatorError):
        cross_check(TwoStateVector(UP, DOWN), [MeasurementEvent(1, SZ)])


@settings(max_examples=50)
@given(seeds)
def test_law_of_total_probability(seed):
    rng = np.random.default_rng(seed)
    layout = SpaceLayout((2, 2))
    pre = random_state(rng, layout)
    events = tuple(random_events(rng, layout, 2))
    final = local_observable(random_spectrum(rng, 4), (0, 1), layout, "final")
    forward = enumerate_exact(ForwardRun(pre, events)).as_dict()
    recovered: dict = {}
    for a in final.eigenvalues:
        try:
            cond = enumerate_exact(ForwardRun(pre, events, final, a))
        except ZeroDenominatorError:
            continue
        for key, p in cond.entries:
            recovered[key] = recovered.get(key, 0.0) + cond.denominator * p
    for key in set(forward) | set(recovered):
        assert abs(forward.get(key, 0.0) - recovered.get(key, 0.0)) < 1e-12
