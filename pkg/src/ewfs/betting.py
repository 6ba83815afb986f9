"""Betting with a quantum wallet inside a Wigner bubble.

Franz measures ``S`` (prepared in ``|phi0> = alpha|0> + beta|1>``) inside an
isolated lab; Eugene then either asks (setting 1, measurement M1 on the
pointer ``F``) or reverses Franz's measurement and measures
``M2 = {[phi2], 1 - [phi2]}`` on ``S`` with ``|phi2> = gamma|0> + delta|1>``
(setting 2). Franz's cash wallet is a register ``C`` whose basis states are
the ledger amounts realized in the protocol.

Settings here use the paper-facing labels 1 and 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal, Sequence

import numpy as np

from . import qcore
from .qcore import Operator, StateVector, SystemLabel

EQUAL_PRICE_TOL = 1e-12
NEAR_DEGENERATE_TOL = 1e-6
LABEL_TOL = 1e-12

S = SystemLabel("S", 2)
F = SystemLabel("F", 3)  # 0 = R, c + 1 = O_c

Order = Literal["wallet-first", "measurement-first", "simultaneous", "wallet-before-reversal"]
ORDERS: tuple[str, ...] = ("wallet-first", "measurement-first", "simultaneous", "wallet-before-reversal")


class BettingError(ValueError):
    pass


class NoJointDistributionError(BettingError):
    """Raised when asked for a joint (a, c) distribution after a reversal."""


@dataclass(frozen=True)
class BettingLab:
    alpha: complex
    beta: complex
    gamma: complex
    delta: complex

    def __post_init__(self):
        for name, (u, v) in (("phi0", (self.alpha, self.beta)), ("phi2", (self.gamma, self.delta))):
            n = abs(u) ** 2 + abs(v) ** 2
            if abs(n - 1.0) > 1e-12:
                raise BettingError(f"{name} amplitudes not normalized: {n!r}")

    @property
    def phi0(self) -> StateVector:
        return StateVector([S], [self.alpha, self.beta])

    @property
    def phi2(self) -> StateVector:
        return StateVector([S], [self.gamma, self.delta])

    @property
    def p0(self) -> float:
        return float(abs(self.alpha) ** 2)

    @property
    def p2(self) -> float:
        return float(abs(np.conj(self.gamma) * self.alpha + np.conj(self.delta) * self.beta) ** 2)

    @property
    def p2_given(self) -> tuple[float, float]:
        """Franz's internal Born values ``p2^c = |<c|phi2>|^2``."""
        return float(abs(self.gamma) ** 2), float(abs(self.delta) ** 2)


@lru_cache(maxsize=1)
def friend_unitary() -> Operator:
    return qcore.dilate_measurement(qcore.computational_basis(S), F)


# ---------------------------------------------------------------------------
# tickets and perspectives


@dataclass(frozen=True)
class Ticket:
    id: str
    measurement: Literal["M0", "M1", "M2"]
    setting: int | None  # Eugene's setting whose outcome settles the ticket
    payoff: float = 1.0
    refund_if_unmeasured: bool = True

    def __post_init__(self):
        if self.payoff <= 0:
            raise BettingError("payoff must be positive")

    def event_projector(self, lab: BettingLab) -> Operator:
        if self.measurement == "M0":
            return qcore.projector(qcore.ket(S, 0))
        if self.measurement == "M1":
            return qcore.projector(qcore.ket(F, 1))
        return qcore.projector(lab.phi2)


G0 = Ticket("G0", "M0", None, refund_if_unmeasured=False)
G1 = Ticket("G1", "M1", 1)
G2 = Ticket("G2", "M2", 2)
G01 = Ticket("G01", "M1", 1)  # joint: Eugene sees [O_0] and Franz saw [0]
TICKETS = {t.id: t for t in (G0, G1, G2, G01)}


@dataclass(frozen=True)
class Perspective:
    kind: Literal["external", "internal"]
    outcome: int | None = None

    def __post_init__(self):
        if self.kind == "internal" and self.outcome not in (0, 1):
            raise BettingError(f"internal perspective needs an outcome c in {{0, 1}}, got {self.outcome!r}")
        if self.kind == "external" and self.outcome is not None:
            raise BettingError("external perspective carries no outcome")


EXTERNAL = Perspective("external")


def internal(c: int) -> Perspective:
    return Perspective("internal", c)


def price_ticket(t: Ticket, p: Perspective, lab: BettingLab, x: int | None = None) -> float:
    """Price Franz pays for ``t`` from perspective ``p`` when Eugene will perform setting ``x``."""
    if x is None:
        x = t.setting
    if t.setting is not None and x != t.setting:
        raise BettingError(f"ticket {t.id} settles on setting {t.setting}, not {x}")
    if t.measurement in ("M0", "M1"):
        if p.kind == "external":
            return lab.p0
        return 1.0 if p.outcome == 0 else 0.0
    if p.kind == "external":
        return lab.p2
    p20, p21 = lab.p2_given
    if abs(p20 - p21) <= EQUAL_PRICE_TOL:
        # the wallet would carry no information about c: price as from outside
        return lab.p2
    return (p20, p21)[p.outcome]


def internal_prices(t: Ticket, lab: BettingLab) -> tuple[float, float]:
    return price_ticket(t, internal(0), lab), price_ticket(t, internal(1), lab)


def sale_floor_violations(t: Ticket, p: Perspective, price: float, lab: BettingLab) -> list[str]:
    """Eugene's optional minimum sale price: p0 from outside, $1 from inside (ticket G1).

    An internal price of 0 means Franz buys nothing in that branch, so no floor applies.
    """
    if t.measurement != "M1":
        return []
    if p.kind == "internal" and price <= LABEL_TOL:
        return []
    floor = lab.p0 if p.kind == "external" else t.payoff
    if price < floor - LABEL_TOL:
        return [f"{t.id} sold at {price:.6g} below Eugene's floor {floor:.6g} ({p.kind} perspective)"]
    return []


# ---------------------------------------------------------------------------
# wallet


@dataclass(frozen=True)
class WalletRegister:
    labels: tuple[float, ...]

    def __post_init__(self):
        labels = tuple(float(v) for v in self.labels)
        if not labels or labels[0] != 0.0:
            raise BettingError("wallet label 0 must be the empty ledger 0.0")
        for i, u in enumerate(labels):
            for v in labels[i + 1:]:
                if abs(u - v) <= LABEL_TOL:
                    raise BettingError(f"duplicate wallet labels {u!r}, {v!r}")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def for_prices(cls, prices: Sequence[float]) -> "WalletRegister":
        labels = [0.0]
        for pr in prices:
            v = -float(pr)
            if all(abs(v - u) > LABEL_TOL for u in labels):
                labels.append(v)
        return cls(tuple(labels))

    @property
    def system(self) -> SystemLabel:
        return SystemLabel("C", len(self.labels))

    def index(self, value: float) -> int:
        for i, u in enumerate(self.labels):
            if abs(u - value) <= LABEL_TOL:
                return i
        raise BettingError(f"ledger amount {value!r} is not a wallet label {self.labels}")

    def ready(self) -> StateVector:
        return qcore.ket(self.system, 0)


def _swap(dim: int, i: int, j: int) -> np.ndarray:
    m = np.eye(dim)
    m[[i, j]] = m[[j, i]]
    return m


def apply_bet(state: StateVector, t: Ticket, p: Perspective, price, wallet: WalletRegister) -> StateVector:
    """Debit the wallet: unconditionally (external) or conditioned on F's pointer (internal).

    For an internal bet ``price`` is the per-outcome sequence ``(price_0, price_1)``.
    """
    C = wallet.system
    if C.name not in state.names:
        raise BettingError("state has no wallet register")
    if qcore.born(state, qcore.projector(wallet.ready())) < 1 - 1e-12:
        raise BettingError("wallet is not in the ready (0.0) label")
    if p.kind == "external":
        u = Operator([C], _swap(C.dim, 0, wallet.index(-float(price))))
        return qcore.apply(u, state)
    prices = tuple(float(v) for v in price)
    if len(prices) != F.dim - 1:
        raise BettingError(f"internal bet needs one price per friend outcome, got {prices}")
    m = np.kron(qcore.projector(qcore.ket(F, 0)).matrix, np.eye(C.dim))
    for c, pr in enumerate(prices):
        m = m + np.kron(qcore.projector(qcore.ket(F, c + 1)).matrix, _swap(C.dim, 0, wallet.index(-pr)))
    return qcore.apply(Operator([F, C], m), state)


# ---------------------------------------------------------------------------
# settlement


@dataclass(frozen=True)
class SettlementReport:
    joint: dict = field(repr=False)  # (wallet label, event 1/0) -> probability
    gains: dict = field(repr=False)  # net gain -> probability
    expected_gain: float
    refunded: bool = False

    def __post_init__(self):
        for name, dist in (("joint", self.joint), ("gains", self.gains)):
            total = sum(dist.values())
            if abs(total - 1.0) > 1e-10:
                raise BettingError(f"{name} distribution sums to {total!r}")

    def to_dict(self) -> dict:
        return {
            "joint": [{"wallet": w, "event": e, "probability": pr} for (w, e), pr in sorted(self.joint.items())],
            "gains": [{"gain": g, "probability": pr} for g, pr in sorted(self.gains.items())],
            "expected_gain": self.expected_gain,
            "refunded": self.refunded,
        }

    def text(self) -> str:
        lines = ["gain        probability"]
        lines += [f"{g:+.6f}   {pr:.6f}" for g, pr in sorted(self.gains.items())]
        lines.append(f"expected gain: {self.expected_gain:+.3e}")
        return "\n".join(lines)


def _measure(branches, basis, targets, tag):
    out = []
    for w, key, s in branches:
        for br in qcore.collapse(s, basis, targets):
            if not br.null:
                out.append((w * br.probability, key + ((tag, br.outcome),), br.state))
    return out


def settle(state: StateVector, x: int, t: Ticket, order: str, lab: BettingLab, wallet: WalletRegister) -> SettlementReport:
    """Eugene performs setting ``x``, reads the wallet in the cash basis and pays the ticket."""
    if order not in ORDERS:
        raise BettingError(f"unknown settlement order {order!r}; choose from {ORDERS}")
    if x not in (1, 2):
        raise BettingError(f"setting must be 1 or 2, got {x!r}")
    if order == "wallet-before-reversal" and x != 2:
        raise BettingError("wallet-before-reversal only applies to setting 2")
    C = wallet.system
    cash = qcore.computational_basis(C)
    if t.setting != x:
        if not t.refund_if_unmeasured:
            raise BettingError(f"ticket {t.id} cannot be settled by setting {x}")
        dist = {}
        for br in qcore.collapse(state, cash, [C]):
            if not br.null:
                dist[(wallet.labels[br.outcome], None)] = br.probability
        return SettlementReport(dist, {0.0: 1.0}, 0.0, refunded=True)

    if x == 1:
        meas_basis, targets, event_of = qcore.computational_basis(F), [F], (lambda k: int(k == 1))
    else:
        phi2 = lab.phi2
        perp = StateVector([S], [-np.conj(lab.delta), np.conj(lab.gamma)])
        meas_basis, targets, event_of = [phi2, perp], [S], (lambda k: int(k == 0))
    reverse = friend_unitary().dagger if x == 2 else None

    branches = [(1.0, (), state)]
    if order == "wallet-before-reversal":
        branches = _measure(branches, cash, [C], "w")
        branches = [(w, k, qcore.apply(reverse, s)) for w, k, s in branches]
        branches = _measure(branches, meas_basis, targets, "m")
    else:
        if reverse is not None:
            branches = [(w, k, qcore.apply(reverse, s)) for w, k, s in branches]
        if order == "wallet-first":
            branches = _measure(_measure(branches, cash, [C], "w"), meas_basis, targets, "m")
        elif order == "measurement-first":
            branches = _measure(_measure(branches, meas_basis, targets, "m"), cash, [C], "w")
        else:
            # one joint measurement in the product basis |w> (x) |m>
            joint_basis = [qcore.tensor(c, m) for c in cash for m in meas_basis]
            n = len(meas_basis)
            branches = [(br.probability, (("w", br.outcome // n), ("m", br.outcome % n)), None)
                        for br in qcore.collapse(branches[0][2], joint_basis, [C] + targets) if not br.null]

    joint: dict = {}
    gains: dict = {}
    for w, key, _ in branches:
        k = dict(key)
        label = wallet.labels[k["w"]]
        event = event_of(k["m"])
        joint[(label, event)] = joint.get((label, event), 0.0) + w
        g = round(label + t.payoff * event, 12)
        gains[g] = gains.get(g, 0.0) + w
    expected = sum(g * pr for g, pr in gains.items())
    return SettlementReport(joint, gains, expected)


@dataclass(frozen=True)
class BetOutcome:
    prices: tuple[float, ...]
    wallet: WalletRegister
    state: StateVector = field(repr=False)
    report: SettlementReport


def place_bet(lab: BettingLab, t: Ticket, kind: Literal["external", "internal"]) -> tuple[StateVector, WalletRegister, tuple]:
    """State after Franz's measurement and bet (before Eugene acts)."""
    if t.setting is None:
        raise BettingError(f"ticket {t.id} is not settled by Eugene")
    if kind == "external":
        price = price_ticket(t, EXTERNAL, lab)
        wallet = WalletRegister.for_prices([price])
        s = qcore.product(lab.phi0, qcore.ket(F, 0), wallet.ready())
        s = apply_bet(s, t, EXTERNAL, price, wallet)
        return qcore.apply(friend_unitary(), s), wallet, (price,)
    prices = internal_prices(t, lab)
    wallet = WalletRegister.for_prices(prices)
    s = qcore.product(lab.phi0, qcore.ket(F, 0), wallet.ready())
    s = qcore.apply(friend_unitary(), s)
    return apply_bet(s, t, internal(0), prices, wallet), wallet, prices


def run_bet(lab: BettingLab, t: Ticket, kind: Literal["external", "internal"], x: int | None = None,
            order: str = "wallet-first", *, enforce_sale_floor: bool = False) -> BetOutcome:
    state, wallet, prices = place_bet(lab, t, kind)
    if enforce_sale_floor:
        persp = [EXTERNAL] if kind == "external" else [internal(0), internal(1)]
        problems = [m for p, pr in zip(persp, prices) for m in sale_floor_violations(t, p, pr, lab)]
        if problems:
            raise BettingError("; ".join(problems))
    report = settle(state, t.setting if x is None else x, t, order, lab, wallet)
    return BetOutcome(prices, wallet, state, report)


# ---------------------------------------------------------------------------
# audits


def pointer_coherence(state: StateVector) -> float:
    """Sum of |off-diagonal| entries of the S F reduced state in the {|c, O_c>} frame."""
    rho = qcore.partial_trace(state, [S, F]).matrix
    idx = [c * F.dim + (c + 1) for c in range(2)]
    sub = rho[np.ix_(idx, idx)]
    return float(np.sum(np.abs(sub - np.diag(np.diag(sub)))))


def total_probability_audit(lab: BettingLab) -> dict:
    u = friend_unitary()
    psi1 = qcore.apply(u, qcore.tensor(lab.phi0, qcore.ket(F, 0)))
    pe_c = [qcore.born(psi1, qcore.projector(qcore.ket(F, c + 1))) for c in range(2)]
    pe_x1 = pe_c[0]
    pi_x1 = sum((1.0 if c == 0 else 0.0) * pe_c[c] for c in range(2))
    pe_x2 = qcore.born(qcore.apply(u.dagger, psi1), qcore.projector(lab.phi2))
    p2c = lab.p2_given
    pi_x2 = sum(p2c[c] * pe_c[c] for c in range(2))

    prices = internal_prices(G2, lab)
    wallet = WalletRegister.for_prices(prices)
    no_bet = qcore.tensor(psi1, wallet.ready())
    after_bet = apply_bet(no_bet, G2, internal(0), prices, wallet)
    diff = abs(p2c[0] - p2c[1])
    override = diff <= EQUAL_PRICE_TOL
    return {
        "x1": {"external": pe_x1, "internal_marginal": pi_x1, "gap": abs(pe_x1 - pi_x1)},
        "x2": {"external": pe_x2, "internal_marginal": pi_x2, "gap": abs(pe_x2 - pi_x2),
               "internal_given_c": list(p2c)},
        "diagnosis": {
            "coherence_no_bet": pointer_coherence(no_bet),
            "coherence_after_internal_bet": pointer_coherence(after_bet),
            "wallet_carries_information": not override,
            "near_degenerate": (not override) and diff < NEAR_DEGENERATE_TOL,
            "override_price": float(lab.p2) if override else None,
            # equal internal values but the outside price differs from them
            "override_tension": bool(override and abs(lab.p2 - p2c[0]) > EQUAL_PRICE_TOL),
        },
    }


def joint_ticket_value(lab: BettingLab, x: int = 1) -> np.ndarray:
    """``P^e(a, c | x=1)`` indexed ``[a, c]``; no such distribution exists for x=2."""
    if x != 1:
        raise NoJointDistributionError(
            "no joint P^e(a, c | x) exists after a reversal: it would contradict Local Friendliness"
        )
    psi1 = qcore.apply(friend_unitary(), qcore.tensor(lab.phi0, qcore.ket(F, 0)))
    out = np.zeros((2, 2))
    for a in range(2):
        for c in range(2):
            op = Operator([S, F], np.kron(qcore.projector(qcore.ket(S, c)).matrix,
                                          qcore.projector(qcore.ket(F, a + 1)).matrix))
            out[a, c] = qcore.born(psi1, op)
    return out
