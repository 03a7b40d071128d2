import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tscf.hilbert import (
    DOWN,
    PAULI,
    QUBIT,
    UP,
    UP_X,
    UP_Y,
    LinearOperator,
    ObservableDecomposition,
    SpaceLayout,
    StateVector,
    apply,
    basis_state,
    embed,
    inner,
    local_observable,
    pauli,
    product_observable,
    singlet,
    tensor,
    validate,
)
from tscf.randomize import random_spectrum, random_state

seeds = st.integers(0, 2**32 - 1)


def test_layout_rejects_trivial_subsystem():
    with pytest.raises(ValueError):
        SpaceLayout((2, 1))
    assert SpaceLayout((2, 3)).total_dim == 6


def test_state_must_be_normalized():
    with pytest.raises(ValueError, match="normalized"):
        StateVector(QUBIT, [1, 1])
    with pytest.raises(ValueError, match="finite"):
        StateVector(QUBIT, [np.nan, 0])
    s = StateVector.normalized(QUBIT, [1, 1])
    assert np.allclose(s.amplitudes, UP_X.amplitudes)


def test_tensor_of_basis_states():
    v = tensor(UP, DOWN)
    assert v.layout == SpaceLayout((2, 2))
    assert np.array_equal(v.amplitudes, [0, 1, 0, 0])


def test_tensor_gives_singlet_xy_post_selection():
    expected = 0.5 * np.array([1, 1j, 1, 1j])
    assert np.allclose(tensor(UP_X, UP_Y).amplitudes, expected, atol=1e-15)


@given(seeds)
def test_tensor_norm(seed):
    rng = np.random.default_rng(seed)
    a = random_state(rng, SpaceLayout((int(rng.integers(2, 5)),)))
    b = random_state(rng, SpaceLayout((int(rng.integers(2, 5)),)))
    assert abs(np.linalg.norm(tensor(a, b).amplitudes) - 1) < 1e-12


@given(seeds)
def test_tensor_associative(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_state(rng, SpaceLayout((int(rng.integers(2, 4)),))) for _ in range(3))
    left = tensor(tensor(a, b), c)
    right = tensor(a, tensor(b, c))
    assert left.layout == right.layout
    assert np.max(np.abs(left.amplitudes - right.amplitudes)) <= 1e-14


def test_inner_basics():
    assert inner(UP, UP) == pytest.approx(1)
    assert inner(UP, DOWN) == 0
    with pytest.raises(ValueError):
        inner(UP, singlet())


def test_inner_singlet_xy_states():
    # <xy|singlet> = (1/2)(1/sqrt2)(conj(i) - 1) = -(1 + i)/(2 sqrt2), modulus 1/2
    value = inner(tensor(UP_X, UP_Y), singlet())
    assert value == pytest.approx(-(1 + 1j) / (2 * np.sqrt(2)), abs=1e-15)
    assert abs(value) == pytest.approx(0.5, abs=1e-15)


@given(seeds)
def test_inner_conjugate_symmetric(seed):
    rng = np.random.default_rng(seed)
    layout = SpaceLayout((int(rng.integers(2, 5)), 2))
    a, b = random_state(rng, layout), random_state(rng, layout)
    ab, ba = inner(a, b), inner(b, a)
    assert abs(ab.real - ba.real) <= 1e-14 and abs(ab.imag + ba.imag) <= 1e-14


def test_apply():
    ident = LinearOperator.identity(QUBIT)
    assert np.array_equal(apply(ident, UP_X), UP_X.amplitudes)
    p_up = pauli("Z", 0, QUBIT).projector(1)
    assert np.array_equal(apply(p_up, DOWN), [0, 0])
    with pytest.raises(ValueError):
        apply(p_up, singlet())


def test_apply_singlet_branch_weight(two_spins):
    p = pauli("Y", 0, two_spins).projector(-1)
    v = apply(p, singlet())
    assert np.vdot(v, v).real == pytest.approx(0.5, abs=1e-15)


@given(seeds)
def test_pythagoras(seed):
    rng = np.random.default_rng(seed)
    layout = SpaceLayout((int(rng.integers(2, 5)), int(rng.integers(2, 4))))
    spectrum = random_spectrum(rng, layout.total_dim)
    obs = local_observable(spectrum, [0, 1], layout)
    p = obs.branches[0][1]
    q = LinearOperator(layout, np.eye(layout.total_dim) - p.matrix)
    v = rng.normal(size=layout.total_dim) + 1j * rng.normal(size=layout.total_dim)
    lhs = np.linalg.norm(apply(p, v)) ** 2 + np.linalg.norm(apply(q, v)) ** 2
    assert abs(lhs - np.linalg.norm(v) ** 2) <= 1e-12 * max(1.0, np.linalg.norm(v) ** 2)


def test_embed_eigenstate(two_spins):
    sx = embed(PAULI["X"], [1], two_spins)
    state = tensor(UP, UP_X)
    assert np.allclose(apply(sx, state), state.amplitudes, atol=1e-15)


def test_embed_identity(two_spins):
    assert np.array_equal(embed(np.eye(2), [0], two_spins).matrix, np.eye(4))


def test_embed_matches_kron(two_spins):
    local = np.kron(PAULI["Y"], PAULI["X"])
    assert np.allclose(embed(local, [0, 1], two_spins).matrix, local, atol=0)
    # reversed subsystem order swaps the factors
    assert np.allclose(embed(local, [1, 0], two_spins).matrix, np.kron(PAULI["X"], PAULI["Y"]))


def test_embed_middle_subsystem():
    layout = SpaceLayout((2, 3, 2))
    local = np.arange(9).reshape(3, 3)
    expected = np.kron(np.kron(np.eye(2), local), np.eye(2))
    assert np.array_equal(embed(local, [1], layout).matrix, expected)


def test_embed_errors(two_spins):
    with pytest.raises(IndexError):
        embed(PAULI["X"], [2], two_spins)
    with pytest.raises(ValueError):
        embed(np.eye(4), [0], two_spins)


def test_validate_pauli():
    report = validate(pauli("Z", 0, QUBIT))
    assert report.ok


def test_validate_incomplete():
    obs = ObservableDecomposition(QUBIT, ((1.0, pauli("Z", 0, QUBIT).projector(1)),))
    report = validate(obs)
    assert not report.ok
    assert report.failures() == ["complete"]
    assert dict((n, d) for n, _, d in report.checks)["complete"] == pytest.approx(1.0)


def test_validate_overlapping_projectors():
    p = pauli("Z", 0, QUBIT).projector(1)
    obs = ObservableDecomposition(QUBIT, ((1.0, p), (2.0, p)))
    assert "orthogonal" in validate(obs).failures()


def test_product_observable_from_eigenvectors(two_spins, singlet_xy_observables):
    _, _, prod = singlet_xy_observables
    assert validate(prod).ok
    assert sorted(prod.eigenvalues) == [-1.0, 1.0]
    ranks = [round(np.trace(p.matrix).real) for _, p in prod.branches]
    assert ranks == [2, 2]
    # same observable assembled directly from its four product eigenvectors
    ys = {1: UP_Y.amplitudes, -1: [1 / np.sqrt(2), -1j / np.sqrt(2)]}
    xs = {1: UP_X.amplitudes, -1: [1 / np.sqrt(2), -1 / np.sqrt(2)]}
    direct = local_observable(
        {v: [np.kron(ys[a], xs[b]) for a in (1, -1) for b in (1, -1) if a * b == v] for v in (1, -1)},
        [0, 1],
        two_spins,
    )
    assert validate(direct).ok
    for v in (1, -1):
        assert np.allclose(direct.projector(v).matrix, prod.projector(v).matrix, atol=1e-15)
    assert np.allclose(prod.matrix(), np.kron(PAULI["Y"], PAULI["X"]), atol=1e-15)


def test_product_requires_disjoint(two_spins):
    a = pauli("Z", 0, two_spins)
    with pytest.raises(ValueError, match="overlap"):
        product_observable(a, pauli("X", 0, two_spins))


def test_basis_state():
    s = basis_state(SpaceLayout((2, 3)), [1, 2])
    assert s.amplitudes[5] == 1


def test_values_immutable():
    with pytest.raises(ValueError):
        UP.amplitudes[0] = 0
