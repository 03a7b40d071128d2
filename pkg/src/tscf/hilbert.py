"""Dense finite-dimensional Hilbert-space primitives.

Subsystem indices are 0-based throughout the Python API. Basis index 0 of a
spin-1/2 subsystem is |up> (sigma_z = +1).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Mapping, Sequence

import numpy as np

from tscf.tolerances import TOL


@dataclass(frozen=True)
class SpaceLayout:
    subsystem_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.subsystem_dims)
        if not dims:
            raise ValueError("layout needs at least one subsystem")
        if any(d < 2 for d in dims):
            raise ValueError(f"subsystem dimensions must be >= 2, got {dims}")
        object.__setattr__(self, "subsystem_dims", dims)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.subsystem_dims))

    @property
    def n_subsystems(self) -> int:
        return len(self.subsystem_dims)

    def concat(self, other: SpaceLayout) -> SpaceLayout:
        return SpaceLayout(self.subsystem_dims + other.subsystem_dims)

    def __str__(self):
        return " x ".join(str(d) for d in self.subsystem_dims)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex)
    arr.flags.writeable = False
    return arr


def _as_array(v) -> np.ndarray:
    if isinstance(v, StateVector):
        return v.amplitudes
    return np.asarray(v, dtype=complex)


@dataclass(frozen=True, eq=False)
class StateVector:
    """A normalized pure state on ``layout``."""

    layout: SpaceLayout
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(np.ravel(self.amplitudes))
        if amps.shape != (self.layout.total_dim,):
            raise ValueError(
                f"expected {self.layout.total_dim} amplitudes, got {amps.shape[0]}"
            )
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > TOL.arithmetic:
            raise ValueError(f"state is not normalized (squared norm {norm2!r})")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, layout: SpaceLayout, amplitudes) -> StateVector:
        amps = np.asarray(amplitudes, dtype=complex).ravel()
        norm = np.linalg.norm(amps)
        if norm == 0 or not np.isfinite(norm):
            raise ValueError("cannot normalize a zero or non-finite vector")
        return cls(layout, amps / norm)

    def __len__(self):
        return self.layout.total_dim


@dataclass(frozen=True, eq=False)
class LinearOperator:
    layout: SpaceLayout
    matrix: np.ndarray

    def __post_init__(self):
        mat = _frozen(self.matrix)
        n = self.layout.total_dim
        if mat.shape != (n, n):
            raise ValueError(f"operator shape {mat.shape} does not match layout {n}x{n}")
        object.__setattr__(self, "matrix", mat)

    def __matmul__(self, other: LinearOperator) -> LinearOperator:
        if other.layout != self.layout:
            raise ValueError("layout mismatch")
        return LinearOperator(self.layout, self.matrix @ other.matrix)

    @classmethod
    def identity(cls, layout: SpaceLayout) -> LinearOperator:
        return cls(layout, np.eye(layout.total_dim))


@dataclass(frozen=True, eq=False)
class ObservableDecomposition:
    """Spectral form of an observable: ``(eigenvalue, projector)`` branches.

    ``support`` lists the subsystems the observable acts on nontrivially;
    it defaults to the whole layout.
    """

    layout: SpaceLayout
    branches: tuple[tuple[float, LinearOperator], ...]
    label: str = ""
    support: tuple[int, ...] | None = None

    def __post_init__(self):
        branches = tuple((float(a), p) for a, p in self.branches)
        if not branches:
            raise ValueError("observable needs at least one branch")
        for _, p in branches:
            if p.layout != self.layout:
                raise ValueError("projector layout mismatch")
        object.__setattr__(self, "branches", branches)
        support = self.support
        if support is None:
            support = tuple(range(self.layout.n_subsystems))
        support = tuple(sorted(set(int(k) for k in support)))
        if any(k < 0 or k >= self.layout.n_subsystems for k in support):
            raise ValueError(f"support {support} out of range for layout {self.layout}")
        object.__setattr__(self, "support", support)

    @property
    def eigenvalues(self) -> tuple[float, ...]:
        return tuple(a for a, _ in self.branches)

    def projector(self, eigenvalue: float) -> LinearOperator:
        for a, p in self.branches:
            if abs(a - eigenvalue) <= TOL.structural:
                return p
        raise KeyError(f"{eigenvalue!r} is not an eigenvalue of {self.label or 'observable'}")

    def has_eigenvalue(self, eigenvalue: float) -> bool:
        return any(abs(a - eigenvalue) <= TOL.structural for a in self.eigenvalues)

    def matrix(self) -> np.ndarray:
        return sum(a * p.matrix for a, p in self.branches)


# -- core operations ---------------------------------------------------------


def tensor(a: StateVector, b: StateVector) -> StateVector:
    return StateVector.normalized(a.layout.concat(b.layout), np.kron(a.amplitudes, b.amplitudes))


def inner(a, b) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    if isinstance(a, StateVector) and isinstance(b, StateVector) and a.layout != b.layout:
        raise ValueError(f"layout mismatch: {a.layout} vs {b.layout}")
    va, vb = _as_array(a), _as_array(b)
    if va.shape != vb.shape:
        raise ValueError(f"dimension mismatch: {va.shape} vs {vb.shape}")
    return complex(np.vdot(va, vb))


def apply(op: LinearOperator, v) -> np.ndarray:
    """Matrix-vector action. The result is left unnormalized."""
    if isinstance(v, StateVector) and v.layout != op.layout:
        raise ValueError(f"layout mismatch: {op.layout} vs {v.layout}")
    vec = _as_array(v)
    if vec.shape != (op.layout.total_dim,):
        raise ValueError(f"vector of length {vec.shape} does not fit layout {op.layout}")
    return op.matrix @ vec


def embed(local, subsystems: Sequence[int], layout: SpaceLayout) -> LinearOperator:
    """Lift ``local`` (acting on ``subsystems``, in the given order) to ``layout``.

    ``local`` may be a LinearOperator or a bare square array.
    """
    subsystems = [int(k) for k in subsystems]
    n = layout.n_subsystems
    if len(set(subsystems)) != len(subsystems):
        raise ValueError(f"repeated subsystem in {subsystems}")
    if any(k < 0 or k >= n for k in subsystems):
        raise IndexError(f"subsystem index out of range in {subsystems} (layout has {n})")
    mat = local.matrix if isinstance(local, LinearOperator) else np.asarray(local, dtype=complex)
    dims = layout.subsystem_dims
    sel_dims = [dims[k] for k in subsystems]
    d_sel = int(np.prod(sel_dims))
    if mat.shape != (d_sel, d_sel):
        raise ValueError(f"local operator is {mat.shape}, selected subsystems need {d_sel}x{d_sel}")

    rest = [k for k in range(n) if k not in subsystems]
    d_rest = int(np.prod([dims[k] for k in rest])) if rest else 1
    # Build in (selected..., rest...) order, then permute axes back.
    full = np.kron(mat, np.eye(d_rest))
    order = subsystems + rest
    shape = [dims[k] for k in order]
    full = full.reshape(shape + shape)
    inv = np.argsort(order)
    full = full.transpose(list(inv) + [n + i for i in inv])
    total = layout.total_dim
    return LinearOperator(layout, full.reshape(total, total))


@dataclass(frozen=True)
class ValidationReport:
    label: str
    checks: tuple[tuple[str, bool, float], ...]  # (name, passed, max deviation)

    @property
    def ok(self) -> bool:
        return all(passed for _, passed, _ in self.checks)

    def failures(self) -> list[str]:
        return [name for name, passed, _ in self.checks if not passed]


def validate(obs: ObservableDecomposition, tol: float = TOL.structural) -> ValidationReport:
    """Check that the branches form a complete orthogonal projector family."""
    n = obs.layout.total_dim
    mats = [p.matrix for _, p in obs.branches]

    herm = max(float(np.max(np.abs(m - m.conj().T))) for m in mats)
    idem = max(float(np.max(np.abs(m @ m - m))) for m in mats)
    ortho = 0.0
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            ortho = max(ortho, float(np.max(np.abs(mats[i] @ mats[j]))))
    complete = float(np.max(np.abs(sum(mats) - np.eye(n))))
    eigs = obs.eigenvalues
    gap = min(
        (abs(eigs[i] - eigs[j]) for i in range(len(eigs)) for j in range(i + 1, len(eigs))),
        default=np.inf,
    )
    nonzero = min(float(np.real(np.trace(m))) for m in mats)

    checks = (
        ("hermitian", herm <= tol, herm),
        ("idempotent", idem <= tol, idem),
        ("orthogonal", ortho <= tol, ortho),
        ("complete", complete <= tol, complete),
        ("distinct_eigenvalues", gap > tol, 0.0 if gap > tol else float(tol - gap)),
        ("nonzero_projectors", nonzero > 0.5, 0.0 if nonzero > 0.5 else 1.0 - nonzero),
    )
    return ValidationReport(obs.label, checks)


def require_valid(obs: ObservableDecomposition) -> None:
    report = validate(obs)
    if not report.ok:
        raise ValueError(
            f"observable {obs.label or '<unnamed>'} fails: {', '.join(report.failures())}"
        )


# -- constructors ------------------------------------------------------------

QUBIT = SpaceLayout((2,))

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

_S = 1 / np.sqrt(2)
# eigenvectors (+1, -1) for each axis
PAULI_EIGENVECTORS = {
    "X": (np.array([_S, _S]), np.array([_S, -_S])),
    "Y": (np.array([_S, 1j * _S]), np.array([_S, -1j * _S])),
    "Z": (np.array([1.0, 0.0]), np.array([0.0, 1.0])),
}

UP = StateVector(QUBIT, [1, 0])
DOWN = StateVector(QUBIT, [0, 1])
UP_X = StateVector(QUBIT, PAULI_EIGENVECTORS["X"][0])
DOWN_X = StateVector(QUBIT, PAULI_EIGENVECTORS["X"][1])
UP_Y = StateVector(QUBIT, PAULI_EIGENVECTORS["Y"][0])
DOWN_Y = StateVector(QUBIT, PAULI_EIGENVECTORS["Y"][1])


def singlet() -> StateVector:
    """(|up,down> - |down,up>)/sqrt(2)."""
    return StateVector(SpaceLayout((2, 2)), np.array([0, 1, -1, 0]) * _S)


def basis_state(layout: SpaceLayout, indices: Sequence[int]) -> StateVector:
    if len(indices) != layout.n_subsystems:
        raise ValueError("one basis index per subsystem required")
    for i, d in zip(indices, layout.subsystem_dims):
        if not 0 <= i < d:
            raise IndexError(f"basis index {i} out of range for dimension {d}")
    flat = int(np.ravel_multi_index(tuple(indices), layout.subsystem_dims))
    amps = np.zeros(layout.total_dim, dtype=complex)
    amps[flat] = 1
    return StateVector(layout, amps)


def projector(vectors: Iterable, dim: int) -> np.ndarray:
    """Sum of |v><v| over the given vectors (assumed orthonormal)."""
    out = np.zeros((dim, dim), dtype=complex)
    for v in vectors:
        v = np.asarray(v, dtype=complex).ravel()
        if v.shape != (dim,):
            raise ValueError(f"eigenvector has length {v.shape[0]}, expected {dim}")
        out += np.outer(v, v.conj())
    return out


def local_observable(
    eigenvectors: Mapping[float, Sequence],
    subsystems: Sequence[int],
    layout: SpaceLayout,
    label: str = "",
) -> ObservableDecomposition:
    """Observable on ``subsystems`` given eigenvalue -> eigenvector lists in local coordinates."""
    d_local = int(np.prod([layout.subsystem_dims[k] for k in subsystems]))
    branches = []
    for a, vecs in eigenvectors.items():
        p = projector(vecs, d_local)
        branches.append((float(a), embed(p, subsystems, layout)))
    return ObservableDecomposition(layout, tuple(branches), label, tuple(subsystems))


def observable_from_vectors(
    eigenvectors: Mapping[float, Sequence], layout: SpaceLayout, label: str = ""
) -> ObservableDecomposition:
    return local_observable(eigenvectors, range(layout.n_subsystems), layout, label)


def pauli(axis: str, k: int, layout: SpaceLayout, label: str = "") -> ObservableDecomposition:
    """sigma_axis on spin-1/2 subsystem ``k``."""
    axis = axis.upper()
    if axis not in PAULI_EIGENVECTORS:
        raise ValueError(f"unknown Pauli axis {axis!r}")
    if not 0 <= k < layout.n_subsystems:
        raise IndexError(f"subsystem {k} out of range")
    if layout.subsystem_dims[k] != 2:
        raise ValueError(f"Pauli observable needs a 2-dim subsystem, subsystem {k} has {layout.subsystem_dims[k]}")
    plus, minus = PAULI_EIGENVECTORS[axis]
    return local_observable({1.0: [plus], -1.0: [minus]}, [k], layout, label or f"s{axis.lower()}{k + 1}")


def product_observable(
    a: ObservableDecomposition, b: ObservableDecomposition, label: str = ""
) -> ObservableDecomposition:
    """Spectral form of A*B for observables on disjoint subsystems.

    Degenerate products are merged into one higher-rank projector.
    """
    if a.layout != b.layout:
        raise ValueError("layout mismatch")
    if set(a.support) & set(b.support):
        raise ValueError(f"supports overlap: {a.support} and {b.support}")
    merged: list[list] = []
    for ea, pa in a.branches:
        for eb, pb in b.branches:
            value = ea * eb
            mat = pa.matrix @ pb.matrix
            for entry in merged:
                if abs(entry[0] - value) <= TOL.structural:
                    entry[1] = entry[1] + mat
                    break
            else:
                merged.append([value, mat])
    merged.sort(key=lambda e: -e[0])
    branches = tuple((v, LinearOperator(a.layout, m)) for v, m in merged)
    return ObservableDecomposition(
        a.layout,
        branches,
        label or f"{a.label}*{b.label}",
        tuple(sorted(set(a.support) | set(b.support))),
    )


def kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, mats)
