"""Extended Wigner's friend scenarios and their correlation tables.

Settings are 0-based in code: Alice's setting index 0 is the paper-facing
``x = 1`` (ask the friend). ``p[x, y, a, b]`` is the probability of outcomes
``(a, b)`` given settings ``(x, y)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import qcore
from .qcore import Operator, StateVector, SystemLabel

NORM_TOL = 1e-10


class ScenarioError(ValueError):
    def __init__(self, message: str, violations: Sequence["Violation"] = ()):
        super().__init__(message)
        self.violations = list(violations)


@dataclass(frozen=True)
class PointerAsk:
    """Open the lab and ask the friend; the outcome is the pointer value."""

    kind: str = field(default="pointer_ask", init=False)


@dataclass(frozen=True)
class ReverseAndMeasure:
    """Undo the friend's measurement, then measure ``basis`` on the friend's system."""

    basis: tuple[StateVector, ...]
    kind: str = field(default="reverse_and_measure", init=False)


@dataclass(frozen=True)
class DirectProjective:
    """Measure ``basis`` on (system, friend) without undoing the friend's measurement.

    ``outcomes[i]`` is the reported outcome of basis vector ``i`` (coarse
    graining); by default vector ``i`` is outcome ``i``.
    """

    basis: tuple[StateVector, ...]
    outcomes: tuple[int, ...] | None = None
    kind: str = field(default="direct_projective", init=False)

    def labels(self) -> tuple[int, ...]:
        return tuple(range(len(self.basis))) if self.outcomes is None else self.outcomes


SuperobserverSetting = PointerAsk | ReverseAndMeasure | DirectProjective


@dataclass(frozen=True)
class BubbleScenario:
    """One-friend EWFS (two-friend when ``bob_friend_basis`` is set).

    In the one-friend case ``bob_settings`` is a list of bases on ``S_B``.
    In the two-friend case it is a list of superobserver settings, mirrored
    on Bob's side with friend register ``D``.
    """

    initial: StateVector
    friend_basis: tuple[StateVector, ...]
    alice_settings: tuple
    bob_settings: tuple
    sys_a: SystemLabel
    sys_b: SystemLabel
    friend: SystemLabel
    bob_friend_basis: tuple[StateVector, ...] | None = None
    bob_friend: SystemLabel | None = None

    @property
    def two_friend(self) -> bool:
        return self.bob_friend_basis is not None

    @property
    def nx(self) -> int:
        return len(self.alice_settings)

    @property
    def ny(self) -> int:
        return len(self.bob_settings)

    @property
    def ka(self) -> int:
        return len(self.friend_basis)

    @property
    def kb(self) -> int:
        if self.two_friend:
            return len(self.bob_friend_basis)
        return len(self.bob_settings[0])


def make_scenario(
    initial_amps,
    friend_basis,
    alice_settings,
    bob_settings,
    *,
    dims: tuple[int, int] = (2, 2),
    bob_friend_basis=None,
    names: tuple[str, str, str] = ("S_A", "S_B", "F"),
) -> BubbleScenario:
    """Build a scenario from raw amplitude arrays.

    ``friend_basis`` and measurement bases are sequences of amplitude vectors.
    Alice's settings are ``PointerAsk()``, ``("reverse", basis)``,
    ``("direct", basis)`` or ``("direct", basis, outcomes)`` tuples
    (already-built setting objects pass through).
    """
    da, db = dims
    sa, sb = SystemLabel(names[0], da), SystemLabel(names[1], db)
    f = SystemLabel(names[2], len(friend_basis) + 1)
    initial = StateVector([sa, sb], initial_amps)

    def vecs(label_or_labels, rows):
        labels = label_or_labels if isinstance(label_or_labels, list) else [label_or_labels]
        return tuple(StateVector(labels, r) for r in rows)

    def setting(raw, sys, ptr):
        if isinstance(raw, (PointerAsk, ReverseAndMeasure, DirectProjective)):
            return raw
        kind, basis, *rest = raw
        if kind == "reverse" and not rest:
            return ReverseAndMeasure(vecs(sys, basis))
        if kind == "direct":
            outcomes = tuple(int(o) for o in rest[0]) if rest and rest[0] is not None else None
            return DirectProjective(vecs([sys, ptr], basis), outcomes)
        raise ScenarioError(f"unknown setting kind {kind!r}")

    fb = vecs(sa, friend_basis)
    alice = tuple(setting(s, sa, f) for s in alice_settings)
    if bob_friend_basis is None:
        bob = tuple(vecs(sb, basis) for basis in bob_settings)
        return BubbleScenario(initial, fb, alice, bob, sa, sb, f)
    d = SystemLabel("D", len(bob_friend_basis) + 1)
    bfb = vecs(sb, bob_friend_basis)
    bob = tuple(setting(s, sb, d) for s in bob_settings)
    return BubbleScenario(initial, fb, alice, bob, sa, sb, f, bfb, d)


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    location: str
    message: str


def _basis_issues(basis, where: str, expected_names, expected_size=None) -> list[Violation]:
    out = []
    if len(basis) == 0:
        return [Violation(where, "empty basis")]
    for i, b in enumerate(basis):
        if b.names != tuple(expected_names):
            out.append(Violation(f"{where}[{i}]", f"vector lives on {b.names}, expected {tuple(expected_names)}"))
            return out
    if not qcore.is_orthonormal(basis):
        out.append(Violation(where, "basis not orthonormal within 1e-10"))
    if expected_size is not None and len(basis) != expected_size:
        out.append(Violation(where, f"basis has {len(basis)} outcomes, expected {expected_size}"))
    return out


def _side_issues(settings, side: str, sys: SystemLabel, ptr: SystemLabel, k: int) -> list[Violation]:
    out = []
    if not settings:
        return [Violation(f"{side}_settings", "no settings")]
    if not isinstance(settings[0], PointerAsk):
        out.append(Violation(f"{side}_settings[0]", "setting 0 (paper x=1) must be PointerAsk"))
    for i, s in enumerate(settings):
        where = f"{side}_settings[{i}]"
        if isinstance(s, PointerAsk):
            if i != 0:
                out.append(Violation(where, "PointerAsk only allowed as setting 0"))
        elif isinstance(s, ReverseAndMeasure):
            out += _basis_issues(s.basis, where, [sys.name], k)
        elif isinstance(s, DirectProjective):
            if s.outcomes is None:
                out += _basis_issues(s.basis, where, [sys.name, ptr.name], k)
            else:
                out += _basis_issues(s.basis, where, [sys.name, ptr.name], sys.dim * ptr.dim)
                if len(s.outcomes) != len(s.basis) or not set(s.outcomes) <= set(range(k)):
                    out.append(Violation(where, f"outcome labels must give one label in 0..{k - 1} per vector"))
        else:
            out.append(Violation(where, f"unknown setting type {type(s).__name__}"))
    return out


def validate(sc: BubbleScenario) -> list[Violation]:
    """Check every scenario invariant; returns an empty list when well formed."""
    out: list[Violation] = []
    norm = float(np.linalg.norm(sc.initial.amps))
    if abs(norm - 1.0) > 1e-12:
        out.append(Violation("initial", f"initial state norm {norm!r} != 1"))
    if sc.initial.names != (sc.sys_a.name, sc.sys_b.name):
        out.append(Violation("initial", f"initial state factors {sc.initial.names} != (S_A, S_B)"))
    out += _basis_issues(sc.friend_basis, "friend_basis", [sc.sys_a.name])
    if sc.friend.dim < sc.ka + 1:
        out.append(Violation("friend", f"pointer dim {sc.friend.dim} < {sc.ka + 1}"))
    out += _side_issues(sc.alice_settings, "alice", sc.sys_a, sc.friend, sc.ka)
    if sc.two_friend:
        out += _basis_issues(sc.bob_friend_basis, "bob_friend_basis", [sc.sys_b.name])
        out += _side_issues(sc.bob_settings, "bob", sc.sys_b, sc.bob_friend, sc.kb)
    else:
        if not sc.bob_settings:
            out.append(Violation("bob_settings", "no settings"))
        for y, basis in enumerate(sc.bob_settings):
            out += _basis_issues(basis, f"bob_settings[{y}]", [sc.sys_b.name], len(sc.bob_settings[0]))
    if not out:
        out += _consistency_issues(sc)
    return out


def _consistency_issues(sc: BubbleScenario) -> list[Violation]:
    # Re-measuring S_A in the friend basis after asking must agree with the pointer.
    psi1 = post_friend_state(sc)
    off = 0.0
    for c in range(sc.ka):
        for s in range(sc.ka):
            if s != c:
                ptr = qcore.projector(qcore.ket(sc.friend, c + 1))
                sys = qcore.projector(sc.friend_basis[s])
                pr = qcore.born(psi1, _kron_ops(sys, ptr))
                off += pr
    if off > NORM_TOL:
        return [Violation("alice_settings[0]", f"pointer report disagrees with S_A re-measurement (mass {off:.3g})")]
    return []


def _require_valid(sc: BubbleScenario) -> None:
    issues = validate(sc)
    if issues:
        raise ScenarioError("; ".join(f"{v.location}: {v.message}" for v in issues), issues)


# ---------------------------------------------------------------------------
# dynamics


def _kron_ops(a: Operator, b: Operator) -> Operator:
    return Operator(a.factors + b.factors, np.kron(a.matrix, b.matrix))


def _friend_unitaries(sc: BubbleScenario) -> list[Operator]:
    us = [qcore.dilate_measurement(sc.friend_basis, sc.friend)]
    if sc.two_friend:
        us.append(qcore.dilate_measurement(sc.bob_friend_basis, sc.bob_friend))
    return us


def _initial_with_pointers(sc: BubbleScenario) -> StateVector:
    s = qcore.tensor(sc.initial, qcore.ket(sc.friend, 0))
    if sc.two_friend:
        s = qcore.tensor(s, qcore.ket(sc.bob_friend, 0))
    return s


def post_friend_state(sc: BubbleScenario) -> StateVector:
    """State right after the friend measurement(s), i.e. ``|Psi_1>``."""
    s = _initial_with_pointers(sc)
    for u in _friend_unitaries(sc):
        s = qcore.apply(u, s)
    return s


def _setting_effects(setting, sys: SystemLabel, ptr: SystemLabel, u: Operator, k: int):
    """(pre-unitary or None, list of outcome projectors) for one superobserver setting."""
    if isinstance(setting, PointerAsk):
        return None, [qcore.projector(qcore.ket(ptr, a + 1)) for a in range(k)]
    if isinstance(setting, ReverseAndMeasure):
        return u.dagger, [qcore.projector(b) for b in setting.basis]
    labels = setting.labels()
    projs = []
    for a in range(k):
        m = sum((qcore.projector(b).matrix for b, o in zip(setting.basis, labels) if o == a),
                np.zeros((sys.dim * ptr.dim,) * 2, dtype=complex))
        projs.append(Operator([sys, ptr], m))
    return None, projs


def _table_from_states(sc: BubbleScenario, states_for) -> np.ndarray:
    """Fill p[x, y, a, b] given a function returning weighted pre-measurement states."""
    us = _friend_unitaries(sc)
    p = np.zeros((sc.nx, sc.ny, sc.ka, sc.kb))
    for x, sx in enumerate(sc.alice_settings):
        pre_a, proj_a = _setting_effects(sx, sc.sys_a, sc.friend, us[0], sc.ka)
        for y, sy in enumerate(sc.bob_settings):
            if sc.two_friend:
                pre_b, proj_b = _setting_effects(sy, sc.sys_b, sc.bob_friend, us[1], sc.kb)
            else:
                pre_b, proj_b = None, [qcore.projector(b) for b in sy]
            for weight, s in states_for():
                if pre_a is not None:
                    s = qcore.apply(pre_a, s)
                if pre_b is not None:
                    s = qcore.apply(pre_b, s)
                for a, pa in enumerate(proj_a):
                    for b, pb in enumerate(proj_b):
                        p[x, y, a, b] += weight * qcore.born(s, _kron_ops(pa, pb))
    for x in range(sc.nx):
        for y in range(sc.ny):
            total = p[x, y].sum()
            if abs(total - 1.0) > NORM_TOL:
                raise ScenarioError(
                    f"setting (x={x}, y={y}) outcomes sum to {total!r}; a measurement basis is incomplete"
                )
    return p


@dataclass(frozen=True)
class CorrelationTable:
    """``p[x, y, a, b]`` with settings 0-based (paper x = index + 1)."""

    p: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.ndim != 4:
            raise ValueError(f"correlation array must be 4-d (x, y, a, b), got shape {p.shape}")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def nx(self) -> int:
        return self.p.shape[0]

    @property
    def ny(self) -> int:
        return self.p.shape[1]

    @property
    def ka(self) -> int:
        return self.p.shape[2]

    @property
    def kb(self) -> int:
        return self.p.shape[3]

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.p.shape

    def alice_marginals(self) -> np.ndarray:
        """p(a|x, y) indexed [x, y, a]."""
        return self.p.sum(axis=3)

    def bob_marginals(self) -> np.ndarray:
        """p(b|x, y) indexed [x, y, b]."""
        return self.p.sum(axis=2)

    def normalization_error(self) -> float:
        return float(np.max(np.abs(self.p.sum(axis=(2, 3)) - 1.0)))

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return bool(self.p.min() >= -1e-12 and self.normalization_error() <= tol)


def run_correlations(sc: BubbleScenario) -> CorrelationTable:
    """Correlations under fully unitary (no-collapse) dynamics."""
    _require_valid(sc)
    psi1 = post_friend_state(sc)
    return CorrelationTable(_table_from_states(sc, lambda: [(1.0, psi1)]))


def run_collapse_correlations(sc: BubbleScenario) -> CorrelationTable:
    """Correlations when each friend's measurement collapses the state once."""
    _require_valid(sc)
    psi1 = post_friend_state(sc)
    branches = [(1.0, psi1)]
    friends = [(sc.friend_basis, sc.sys_a)]
    if sc.two_friend:
        friends.append((sc.bob_friend_basis, sc.sys_b))
    for basis, sys in friends:
        nxt = []
        for w, s in branches:
            for br in qcore.collapse(s, basis, [sys]):
                if not br.null:
                    nxt.append((w * br.probability, br.state))
        branches = nxt
    return CorrelationTable(_table_from_states(sc, lambda: branches))


def friend_marginal(sc: BubbleScenario, x: int = 0) -> np.ndarray:
    """Distribution of the friend's pointer value right after the friend measures.

    Setting-independent in the unitary model; ``x`` is range-checked only.
    """
    _require_valid(sc)
    if not 0 <= x < sc.nx:
        raise ScenarioError(f"setting {x} out of range (nx = {sc.nx})")
    psi1 = post_friend_state(sc)
    return np.array([qcore.born(psi1, qcore.projector(qcore.ket(sc.friend, c + 1))) for c in range(sc.ka)])


def bell_table(initial: StateVector, alice_bases, bob_bases) -> CorrelationTable:
    """Plain bipartite Bell-scenario table (no friend) for cross-checks."""
    sa, sb = initial.factors
    p = np.zeros((len(alice_bases), len(bob_bases), len(alice_bases[0]), len(bob_bases[0])))
    for x, ba in enumerate(alice_bases):
        for y, bb in enumerate(bob_bases):
            for a, va in enumerate(ba):
                for b, vb in enumerate(bb):
                    p[x, y, a, b] = abs(np.vdot(np.kron(va, vb), initial.amps)) ** 2
    return CorrelationTable(p)


# ---------------------------------------------------------------------------
# common building blocks


def qubit_basis(theta: float, phi: float = 0.0) -> np.ndarray:
    """Rows are the two basis vectors for the Bloch direction (theta, phi)."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    e = np.exp(1j * phi)
    return np.array([[c, e * s], [-np.conj(e) * s, c]], dtype=complex)


def bell_state_amps(alpha=1 / np.sqrt(2), beta=1 / np.sqrt(2)) -> np.ndarray:
    """alpha|00> + beta|11>."""
    return np.array([alpha, 0, 0, beta], dtype=complex)
