"""Dense state-vector engine.

Composite systems are ordered lists of :class:`SystemLabel`; the leftmost
factor is the slowest-varying index of the flattened amplitude array.
Pointer registers use index 0 for the ready state ``|R>`` and index ``c + 1``
for ``|O_c>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

NORM_TOL = 1e-12
OP_TOL = 1e-10


class QCoreError(ValueError):
    """Raised for malformed states, operators or factor bookkeeping."""


@dataclass(frozen=True)
class SystemLabel:
    name: str
    dim: int

    def __post_init__(self):
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise QCoreError(f"system {self.name!r}: dim must be a positive integer, got {self.dim!r}")


def _dims(factors: Sequence[SystemLabel]) -> tuple[int, ...]:
    return tuple(f.dim for f in factors)


def _check_unique(factors: Sequence[SystemLabel]) -> None:
    names = [f.name for f in factors]
    if len(set(names)) != len(names):
        raise QCoreError(f"duplicate factor name in {names}")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state on an ordered list of factors."""

    factors: tuple[SystemLabel, ...]
    amps: np.ndarray = field(repr=False)

    def __init__(self, factors: Iterable[SystemLabel], amps, *, normalize: bool = False):
        factors = tuple(factors)
        _check_unique(factors)
        amps = np.asarray(amps, dtype=complex).reshape(-1)
        size = math.prod(_dims(factors))
        if amps.size != size:
            raise QCoreError(f"amplitude length {amps.size} does not match product of dims {size}")
        norm = math.sqrt(np.vdot(amps, amps).real)
        if normalize:
            if norm == 0:
                raise QCoreError("cannot normalize the zero vector")
            amps = amps / norm
        elif abs(norm - 1.0) > NORM_TOL:
            raise QCoreError(f"state not normalized: norm = {norm!r}")
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "amps", _frozen(amps))

    @cached_property
    def dims(self) -> tuple[int, ...]:
        return _dims(self.factors)

    @cached_property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.factors)

    def factor(self, name: str) -> SystemLabel:
        for f in self.factors:
            if f.name == name:
                return f
        raise QCoreError(f"unknown factor {name!r}; have {self.names}")

    def tensor(self) -> np.ndarray:
        return self.amps.reshape(self.dims)

    def allclose(self, other: "StateVector", atol: float = 1e-11) -> bool:
        if self.names != other.names:
            other = reorder(other, self.names)
        return bool(np.max(np.abs(self.amps - other.amps)) <= atol)


@dataclass(frozen=True)
class Operator:
    """Square matrix acting on an ordered list of factors."""

    factors: tuple[SystemLabel, ...]
    matrix: np.ndarray = field(repr=False)

    def __init__(self, factors: Iterable[SystemLabel], matrix):
        factors = tuple(factors)
        _check_unique(factors)
        matrix = np.asarray(matrix, dtype=complex)
        side = math.prod(_dims(factors))
        if matrix.shape != (side, side):
            raise QCoreError(f"operator shape {matrix.shape} does not match factor dims (side {side})")
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "matrix", _frozen(matrix))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.factors)

    @property
    def dagger(self) -> "Operator":
        return Operator(self.factors, self.matrix.conj().T)

    def is_unitary(self, tol: float = OP_TOL) -> bool:
        m = self.matrix
        return bool(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))) < tol)

    def is_projector(self, tol: float = OP_TOL) -> bool:
        m = self.matrix
        return bool(np.max(np.abs(m @ m - m)) < tol and np.max(np.abs(m - m.conj().T)) < tol)


@dataclass(frozen=True)
class DensityOperator:
    factors: tuple[SystemLabel, ...]
    matrix: np.ndarray = field(repr=False)

    def __init__(self, factors: Iterable[SystemLabel], matrix, *, check: bool = True):
        factors = tuple(factors)
        _check_unique(factors)
        matrix = np.asarray(matrix, dtype=complex)
        side = math.prod(_dims(factors))
        if matrix.shape != (side, side):
            raise QCoreError(f"density matrix shape {matrix.shape} does not match side {side}")
        if check:
            if np.max(np.abs(matrix - matrix.conj().T)) > OP_TOL:
                raise QCoreError("density operator is not Hermitian")
            if abs(np.trace(matrix) - 1.0) > OP_TOL:
                raise QCoreError(f"density operator trace {np.trace(matrix).real!r} != 1")
            if np.min(np.linalg.eigvalsh(matrix)) < -OP_TOL:
                raise QCoreError("density operator has a negative eigenvalue")
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "matrix", _frozen(matrix))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.factors)

    @classmethod
    def from_state(cls, s: StateVector) -> "DensityOperator":
        return cls(s.factors, np.outer(s.amps, s.amps.conj()), check=False)


# ---------------------------------------------------------------------------
# constructors


def ket(label: SystemLabel, index: int) -> StateVector:
    if not 0 <= index < label.dim:
        raise QCoreError(f"index {index} out of range for {label.name} (dim {label.dim})")
    amps = np.zeros(label.dim, dtype=complex)
    amps[index] = 1.0
    return StateVector([label], amps)


def state(label: SystemLabel, amps, *, normalize: bool = False) -> StateVector:
    return StateVector([label], amps, normalize=normalize)


def product(*states: StateVector) -> StateVector:
    out = states[0]
    for s in states[1:]:
        out = tensor(out, s)
    return out


def identity(factors: Sequence[SystemLabel]) -> Operator:
    return Operator(factors, np.eye(math.prod(_dims(factors))))


def projector(s: StateVector) -> Operator:
    return Operator(s.factors, np.outer(s.amps, s.amps.conj()))


def computational_basis(label: SystemLabel, size: int | None = None) -> list[StateVector]:
    return [ket(label, i) for i in range(label.dim if size is None else size)]


def fourier_basis(label: SystemLabel) -> list[StateVector]:
    d = label.dim
    c = np.arange(d)
    return [StateVector([label], np.exp(2j * np.pi * c * a / d) / np.sqrt(d)) for a in range(d)]


def basis_matrix(basis: Sequence[StateVector]) -> np.ndarray:
    """Columns are the basis vectors."""
    if not basis:
        raise QCoreError("empty basis")
    names = basis[0].names
    for b in basis:
        if b.names != names:
            raise QCoreError("basis vectors live on different factors")
    return np.stack([b.amps for b in basis], axis=1)


def is_orthonormal(basis: Sequence[StateVector], tol: float = OP_TOL) -> bool:
    m = basis_matrix(basis)
    return bool(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[1]))) < tol)


# ---------------------------------------------------------------------------
# tensor algebra


def tensor(a: StateVector, b: StateVector) -> StateVector:
    clash = set(a.names) & set(b.names)
    if clash:
        raise QCoreError(f"duplicate factor name(s) {sorted(clash)}")
    return StateVector(a.factors + b.factors, np.kron(a.amps, b.amps))


def reorder(s: StateVector, names: Sequence[str]) -> StateVector:
    names = tuple(names)
    if sorted(names) != sorted(s.names):
        raise QCoreError(f"cannot reorder {s.names} into {names}")
    perm = [s.names.index(n) for n in names]
    amps = np.transpose(s.tensor(), perm).reshape(-1)
    return StateVector([s.factors[i] for i in perm], amps)


def _target_axes(s: StateVector, targets) -> list[int]:
    names = [t.name if isinstance(t, SystemLabel) else t for t in targets]
    axes = []
    for n in names:
        if n not in s.names:
            raise QCoreError(f"unknown factor {n!r}; have {s.names}")
        axes.append(s.names.index(n))
    if len(set(axes)) != len(axes):
        raise QCoreError("repeated target factor")
    return axes


def _apply_matrix(s: StateVector, matrix: np.ndarray, axes: list[int]) -> np.ndarray:
    t = s.tensor()
    rest = [i for i in range(t.ndim) if i not in axes]
    moved = np.transpose(t, axes + rest)
    k = math.prod([s.dims[i] for i in axes])
    out = (matrix @ moved.reshape(k, -1)).reshape(moved.shape)
    return np.transpose(out, np.argsort(axes + rest)).reshape(-1)


def _resolve(u: Operator, s: StateVector, targets) -> list[int]:
    if targets is None:
        targets = u.names
    axes = _target_axes(s, targets)
    if tuple(s.dims[i] for i in axes) != _dims(u.factors):
        raise QCoreError(
            f"dimension mismatch: operator dims {_dims(u.factors)} vs targets {[s.dims[i] for i in axes]}"
        )
    return axes


def apply(u: Operator, s: StateVector, targets=None, *, require_unitary: bool = True) -> StateVector:
    """Apply ``u`` (identity elsewhere) to the target factors of ``s``.

    ``targets`` defaults to the operator's own factor names.
    """
    axes = _resolve(u, s, targets)
    if require_unitary and not u.is_unitary():
        raise QCoreError("operator is not unitary")
    return StateVector(s.factors, _apply_matrix(s, u.matrix, axes))


def born(s: StateVector, p: Operator, targets=None) -> float:
    """Return <s|(P (x) I)|s>."""
    if not p.is_projector():
        raise QCoreError("born() needs a projector")
    axes = _resolve(p, s, targets)
    v = _apply_matrix(s, p.matrix, axes)
    val = float(np.vdot(s.amps, v).real)
    return min(1.0, max(0.0, val))


def partial_trace(rho, keep) -> DensityOperator:
    """Reduced state on ``keep`` (returned in the order given)."""
    if isinstance(rho, StateVector):
        factors, dims = rho.factors, rho.dims
        names = rho.names
        axes = _target_axes(rho, keep)
        rest = [i for i in range(len(dims)) if i not in axes]
        t = np.transpose(rho.tensor(), axes + rest)
        k = math.prod([dims[i] for i in axes])
        m = t.reshape(k, -1)
        return DensityOperator([factors[i] for i in axes], m @ m.conj().T)
    names = rho.names
    keep_names = [k.name if isinstance(k, SystemLabel) else k for k in keep]
    for n in keep_names:
        if n not in names:
            raise QCoreError(f"unknown factor {n!r}; have {names}")
    dims = _dims(rho.factors)
    n = len(dims)
    t = rho.matrix.reshape(dims + dims)
    axes = [names.index(k) for k in keep_names]
    rest = [i for i in range(n) if i not in axes]
    t = np.transpose(t, axes + rest + [n + i for i in axes] + [n + i for i in rest])
    k = math.prod([dims[i] for i in axes])
    r = math.prod([dims[i] for i in rest])
    t = t.reshape(k, r, k, r)
    return DensityOperator([rho.factors[i] for i in axes], np.einsum("ajbj->ab", t))


@dataclass(frozen=True)
class Branch:
    probability: float
    state: StateVector | None  # None for a null branch
    outcome: int

    @property
    def null(self) -> bool:
        return self.state is None


def collapse(s: StateVector, basis: Sequence[StateVector], targets=None, *, tol: float = NORM_TOL) -> list[Branch]:
    """Projective measurement of ``basis`` on ``targets``; one branch per basis element."""
    B = basis_matrix(basis)
    if np.max(np.abs(B.conj().T @ B - np.eye(B.shape[1]))) >= OP_TOL:
        raise QCoreError("collapse basis is not orthonormal")
    if targets is None:
        targets = basis[0].names
    axes = _target_axes(s, targets)
    if tuple(s.dims[i] for i in axes) != basis[0].dims:
        raise QCoreError(f"dimension mismatch: basis dims {basis[0].dims} vs targets {[s.dims[i] for i in axes]}")
    t = s.tensor()
    rest = [i for i in range(t.ndim) if i not in axes]
    moved = np.transpose(t, axes + rest)
    m = moved.reshape(math.prod(basis[0].dims), -1)
    coeffs = B.conj().T @ m  # row i: <b_i| contracted with the targets
    inverse = np.argsort(axes + rest)
    branches = []
    for i, row in enumerate(coeffs):
        prob = float(np.vdot(row, row).real)
        if prob <= tol:
            branches.append(Branch(0.0, None, i))
        else:
            v = np.transpose(np.outer(B[:, i], row).reshape(moved.shape), inverse).reshape(-1)
            branches.append(Branch(prob, StateVector(s.factors, v / np.sqrt(prob)), i))
    return branches


# ---------------------------------------------------------------------------
# unitary completion and measurement dilation


def _complete_columns(cols: np.ndarray) -> np.ndarray:
    """Extend orthonormal columns to a unitary by modified Gram-Schmidt over canonical vectors."""
    n, k = cols.shape
    out = [cols[:, j] for j in range(k)]
    for i in range(n):
        if len(out) == n:
            break
        v = np.zeros(n, dtype=complex)
        v[i] = 1.0
        for q in out:
            v = v - np.vdot(q, v) * q
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            out.append(v / nv)
    return np.stack(out, axis=1)


def complete_unitary(factors: Sequence[SystemLabel], inputs: np.ndarray, outputs: np.ndarray) -> Operator:
    """Unitary mapping column ``inputs[:, k]`` to ``outputs[:, k]``.

    Both column sets must be orthonormal. Outside their span the map pairs
    the Gram-Schmidt completions of the two sets in order.
    """
    inputs = np.asarray(inputs, dtype=complex)
    outputs = np.asarray(outputs, dtype=complex)
    for name, m in (("inputs", inputs), ("outputs", outputs)):
        if np.max(np.abs(m.conj().T @ m - np.eye(m.shape[1]))) > OP_TOL:
            raise QCoreError(f"{name} are not orthonormal")
    u = _complete_columns(outputs) @ _complete_columns(inputs).conj().T
    return Operator(factors, u)


def dilate_measurement(basis: Sequence[StateVector], pointer: SystemLabel) -> Operator:
    """Unitary U on (system, pointer) with U|b_c>|R> = |b_c>|O_c>."""
    if not basis or len(basis[0].factors) != 1:
        raise QCoreError("dilation basis must live on a single system")
    if not is_orthonormal(basis):
        raise QCoreError("dilation basis is not orthonormal")
    if pointer.dim < len(basis) + 1:
        raise QCoreError(f"pointer {pointer.name} too small: need dim >= {len(basis) + 1}, got {pointer.dim}")
    system = basis[0].factors[0]
    ready = ket(pointer, 0).amps
    ins = np.stack([np.kron(b.amps, ready) for b in basis], axis=1)
    outs = np.stack([np.kron(b.amps, ket(pointer, c + 1).amps) for c, b in enumerate(basis)], axis=1)
    return complete_unitary([system, pointer], ins, outs)
