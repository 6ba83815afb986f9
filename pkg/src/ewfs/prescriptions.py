"""Baumann-Brukner joint prescription and Deutsch's reversal experiment.

Alice's settings for the B-B rule are given by coefficient matrices ``beta``
with ``|Psi_a> = sum_c beta[c, a] |c>|O_c>``; only the span of
``{|c>|O_c>}`` matters, so the full measurement unitary is never built.
Setting 0 is the pointer question (``beta = I``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import qcore
from .qcore import StateVector, SystemLabel

FLAG_TOL = 1e-9


class PrescriptionError(ValueError):
    pass


def fourier_matrix(d: int) -> np.ndarray:
    c = np.arange(d)
    return np.exp(2j * np.pi * np.outer(c, c) / d) / np.sqrt(d)


@dataclass(frozen=True)
class BBScenario:
    """``alpha[c]`` amplitudes of the initial state; ``bases[x]`` is a d x d unitary ``beta``."""

    alpha: np.ndarray = field(repr=False)
    bases: tuple[np.ndarray, ...] = field(repr=False)

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=complex).reshape(-1)
        if abs(np.linalg.norm(alpha) - 1.0) > 1e-12:
            raise PrescriptionError(f"alpha not normalized (norm {np.linalg.norm(alpha)!r})")
        d = alpha.size
        bases = tuple(np.asarray(b, dtype=complex) for b in self.bases)
        if not bases or np.max(np.abs(bases[0] - np.eye(d))) > 0:
            raise PrescriptionError("setting 0 must be the pointer question (identity coefficients)")
        for x, b in enumerate(bases):
            if b.shape != (d, d) or np.max(np.abs(b.conj().T @ b - np.eye(d))) > 1e-10:
                raise PrescriptionError(f"setting {x}: coefficient matrix is not a {d}x{d} unitary")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "bases", bases)

    @property
    def d(self) -> int:
        return self.alpha.size

    @classmethod
    def with_setting(cls, alpha, beta) -> "BBScenario":
        alpha = np.asarray(alpha, dtype=complex)
        return cls(alpha, (np.eye(alpha.size), np.asarray(beta, dtype=complex)))


def _check_x(sc: BBScenario, x: int):
    if not 0 <= x < len(sc.bases):
        raise PrescriptionError(f"setting {x} out of range ({len(sc.bases)} settings)")


def total_state(sc: BBScenario, x: int) -> StateVector:
    """``|Phi_tot^x>`` on S_A (x) F (x) A, built from the gamma-expansion."""
    _check_x(sc, x)
    d = sc.d
    s, f, a_reg = SystemLabel("S_A", d), SystemLabel("F", d + 1), SystemLabel("A", d + 1)
    beta = sc.bases[x]
    span = [qcore.tensor(qcore.ket(s, c), qcore.ket(f, c + 1)) for c in range(d)]
    psi = [StateVector([s, f], sum(beta[c, a] * span[c].amps for c in range(d))) for a in range(d)]
    gamma = sc.alpha[:, None] * beta.conj()  # gamma[c, a] = alpha_c <Psi_a|c, O_c>
    amps = sum(gamma[c, a] * np.kron(psi[a].amps, qcore.ket(a_reg, a + 1).amps)
               for c in range(d) for a in range(d))
    return StateVector([s, f, a_reg], amps)


def bb_joint(sc: BBScenario, x: int) -> np.ndarray:
    """``P(a, c | x)`` from the modified Born rule, indexed ``[a, c]``.

    Both pointer records sit in the superobserver's lab, so the same array
    also reads as her joint probability for her record and the friend's.
    """
    phi = total_state(sc, x)
    s, f, a_reg = phi.factors
    out = np.zeros((sc.d, sc.d))
    for a in range(sc.d):
        pa = qcore.projector(qcore.ket(a_reg, a + 1))
        for c in range(sc.d):
            pc = qcore.projector(qcore.ket(f, c + 1))
            op = qcore.Operator([f, a_reg], np.kron(pc.matrix, pa.matrix))
            out[a, c] = qcore.born(phi, op)
    return out


def bb_friend_marginal(sc: BBScenario, x: int) -> np.ndarray:
    """Closed form ``P(c|x) = sum_a |sum_c' alpha_c' conj(beta_c'a)|^2 |beta_ca|^2``."""
    _check_x(sc, x)
    beta = sc.bases[x]
    amp_a = np.abs(sc.alpha @ beta.conj()) ** 2  # |sum_c' alpha_c' conj(beta_c'a)|^2
    return (np.abs(beta) ** 2) @ amp_a


def alice_born(sc: BBScenario, x: int) -> np.ndarray:
    """Ordinary Born distribution of Alice's outcome on ``|Psi_1>``."""
    _check_x(sc, x)
    return np.abs(sc.alpha @ sc.bases[x].conj()) ** 2


@dataclass(frozen=True)
class RetroReport:
    d: int
    marginal_x1: np.ndarray
    marginal_x2: np.ndarray
    l1_distance: float
    flagged: bool

    @property
    def tv_distance(self) -> float:
        return self.l1_distance / 2

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "marginals": {"x=1": self.marginal_x1.tolist(), "x=2": self.marginal_x2.tolist()},
            "joint": {"x=1": bb_joint(eigen_fourier(self.d), 0).tolist(),
                      "x=2": bb_joint(eigen_fourier(self.d), 1).tolist()},
            "l1_distance": self.l1_distance,
            "tv_distance": self.tv_distance,
            "flags": {"friend_marginal_depends_on_setting": self.flagged},
        }


def eigen_fourier(d: int) -> BBScenario:
    alpha = np.zeros(d, dtype=complex)
    alpha[0] = 1.0
    return BBScenario.with_setting(alpha, fourier_matrix(d))


def bb_retro_demo(d: int) -> RetroReport:
    """Eigenstate input with a Fourier second setting: the friend marginal moves with Alice's choice."""
    if d < 1:
        raise PrescriptionError("d must be >= 1")
    sc = eigen_fourier(d)
    m1, m2 = bb_friend_marginal(sc, 0), bb_friend_marginal(sc, 1)
    dist = float(np.sum(np.abs(m1 - m2)))
    return RetroReport(d, m1, m2, dist, dist > FLAG_TOL)


# ---------------------------------------------------------------------------
# Deutsch


@dataclass(frozen=True)
class DeutschScenario:
    alpha: complex
    beta: complex

    def __post_init__(self):
        n = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(n - 1.0) > 1e-12:
            raise PrescriptionError(f"|alpha|^2 + |beta|^2 = {n!r} != 1")

    @property
    def phi0(self) -> np.ndarray:
        return np.array([self.alpha, self.beta], dtype=complex)

    def m2_basis(self, s: SystemLabel) -> list[StateVector]:
        """Basis of S containing ``|phi0>``."""
        a, b = self.alpha, self.beta
        return [StateVector([s], [a, b]), StateVector([s], [-np.conj(b), np.conj(a)])]


S = SystemLabel("S", 2)
F_S = SystemLabel("F_S", 3)
F_M = SystemLabel("F_M", 2)  # 0 = R, 1 = O


def introspection_unitary() -> qcore.Operator:
    """U_2: |R>|R> -> |R>|R>, |O_i>|R> -> |O_i>|O>, deterministic completion elsewhere."""
    r, o = qcore.ket(F_M, 0).amps, qcore.ket(F_M, 1).amps
    ins = np.stack([np.kron(qcore.ket(F_S, i).amps, r) for i in range(3)], axis=1)
    outs = np.stack([np.kron(qcore.ket(F_S, 0).amps, r)] + [np.kron(qcore.ket(F_S, i).amps, o) for i in (1, 2)],
                    axis=1)
    return qcore.complete_unitary([F_S, F_M], ins, outs)


def _deutsch_ops():
    u1 = qcore.dilate_measurement(qcore.computational_basis(S), F_S)
    return u1, introspection_unitary()


def _initial(sc: DeutschScenario) -> StateVector:
    return qcore.product(StateVector([S], sc.phi0), qcore.ket(F_S, 0), qcore.ket(F_M, 0))


def deutsch_unitary(sc: DeutschScenario) -> dict:
    u1, u2 = _deutsch_ops()
    psi = qcore.apply(u1, _initial(sc))
    psi = qcore.apply(u2, psi)
    final = qcore.apply(u1.dagger, psi)
    expected = qcore.product(StateVector([S], sc.phi0), qcore.ket(F_S, 0), qcore.ket(F_M, 1))
    if not final.allclose(expected, 1e-11):
        raise PrescriptionError("reversal did not restore |phi0>|R>|O>")
    p_phi0 = qcore.born(final, qcore.projector(sc.m2_basis(S)[0]))
    fm = qcore.born(final, qcore.projector(qcore.ket(F_M, 1)))
    return {"final_state": final, "p_phi0": p_phi0, "fm_record_prob": fm}


def deutsch_collapse(sc: DeutschScenario) -> dict:
    """Comparator: the friend's observation collapses the state once."""
    u1, u2 = _deutsch_ops()
    psi = qcore.apply(u1, _initial(sc))
    proj = qcore.projector(sc.m2_basis(S)[0])
    p_phi0 = 0.0
    for br in qcore.collapse(psi, qcore.computational_basis(S)):
        if br.null:
            continue
        s = qcore.apply(u1.dagger, qcore.apply(u2, br.state))
        p_phi0 += br.probability * qcore.born(s, proj)
    return {"p_phi0": p_phi0}


def deutsch_report(sc: DeutschScenario) -> dict:
    pu = deutsch_unitary(sc)["p_phi0"]
    pc = deutsch_collapse(sc)["p_phi0"]
    return {"p_phi0_unitary": pu, "p_phi0_collapse": pc, "gap": pu - pc}
