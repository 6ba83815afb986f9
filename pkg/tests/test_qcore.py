import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import SEEDS, haar_unitary, random_amps
from ewfs import qcore
from ewfs.qcore import DensityOperator, Operator, QCoreError, StateVector, SystemLabel

Q0, Q1 = SystemLabel("S_A", 2), SystemLabel("S_B", 2)
F = SystemLabel("F", 3)
s2 = 1 / np.sqrt(2)


# ---- tensor -----------------------------------------------------------------

def test_tensor_basis_product():
    s = qcore.tensor(qcore.ket(Q0, 0), qcore.ket(Q1, 0))
    assert np.allclose(s.amps, [1, 0, 0, 0])


def test_tensor_linearity():
    s = qcore.tensor(StateVector([Q0], [0.6, 0.8]), qcore.ket(Q1, 0))
    assert np.allclose(s.amps, [0.6, 0, 0.8, 0])


def test_tensor_plus_plus():
    plus = [s2, s2]
    s = qcore.tensor(StateVector([Q0], plus), StateVector([Q1], plus))
    assert np.allclose(s.amps, 0.5)


def test_tensor_duplicate_name():
    with pytest.raises(QCoreError):
        qcore.tensor(qcore.ket(Q0, 0), qcore.ket(SystemLabel("S_A", 2), 1))


def test_state_rejects_unnormalized_and_bad_length():
    with pytest.raises(QCoreError):
        StateVector([Q0], [1, 1])
    with pytest.raises(QCoreError):
        StateVector([Q0], [1, 0, 0])
    assert np.isclose(np.linalg.norm(StateVector([Q0], [1, 1], normalize=True).amps), 1)


def test_factor_order_leftmost_slowest():
    s = qcore.tensor(qcore.ket(Q0, 1), qcore.ket(F, 2))
    assert s.tensor()[1, 2] == 1
    assert np.argmax(np.abs(s.amps)) == 1 * 3 + 2


def test_reorder_round_trip(rng):
    s = StateVector([Q0, F], random_amps(rng, 6))
    r = qcore.reorder(s, ["F", "S_A"])
    assert r.names == ("F", "S_A")
    assert s.allclose(r)


# ---- apply / dilation ---------------------------------------------------------

def test_identity_leaves_state(rng):
    s = StateVector([Q0, Q1], random_amps(rng, 4))
    assert qcore.apply(qcore.identity([Q0, Q1]), s).allclose(s, 0)


def test_dilation_on_equal_superposition():
    u = qcore.dilate_measurement(qcore.computational_basis(Q0), F)
    out = qcore.apply(u, qcore.tensor(StateVector([Q0], [s2, s2]), qcore.ket(F, 0)))
    # oracle: (|0,O0> + |1,O1>)/sqrt2 written out by hand
    expected = np.zeros(6, dtype=complex)
    expected[0 * 3 + 1] = s2
    expected[1 * 3 + 2] = s2
    assert np.allclose(out.amps, expected, atol=1e-12)


def test_dilation_defining_property_and_unitarity():
    u = qcore.dilate_measurement(qcore.computational_basis(Q0), F)
    assert u.is_unitary()
    for c in range(2):
        out = qcore.apply(u, qcore.tensor(qcore.ket(Q0, c), qcore.ket(F, 0)))
        assert out.allclose(qcore.tensor(qcore.ket(Q0, c), qcore.ket(F, c + 1)), 1e-12)


def test_dilation_eigenstate_input():
    u = qcore.dilate_measurement(qcore.computational_basis(Q0), F)
    out = qcore.apply(u, qcore.tensor(StateVector([Q0], [1, 0]), qcore.ket(F, 0)))
    assert out.allclose(qcore.tensor(qcore.ket(Q0, 0), qcore.ket(F, 1)))


def test_dilation_pointer_too_small():
    with pytest.raises(QCoreError):
        qcore.dilate_measurement(qcore.computational_basis(Q0), SystemLabel("P", 2))


def test_dilation_reversal_round_trip():
    u = qcore.dilate_measurement(qcore.computational_basis(Q0), F)
    s = qcore.tensor(StateVector([Q0], [0.6, 0.8j]), qcore.ket(F, 0))
    assert qcore.apply(u.dagger, qcore.apply(u, s)).allclose(s, 1e-12)


@pytest.mark.parametrize("seed", SEEDS)
def test_random_dilations_unitary_and_reversible(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 5))
    sys, ptr = SystemLabel("S", d), SystemLabel("P", d + 1)
    w = haar_unitary(rng, d)
    basis = [StateVector([sys], w[:, c]) for c in range(d)]
    u = qcore.dilate_measurement(basis, ptr)
    assert np.max(np.abs(u.matrix.conj().T @ u.matrix - np.eye(d * (d + 1)))) < 1e-10
    s = qcore.tensor(StateVector([sys], random_amps(rng, d)), qcore.ket(ptr, 0))
    out = qcore.apply(u, s)
    assert abs(np.linalg.norm(out.amps) - 1) < 1e-12
    assert np.max(np.abs(qcore.apply(u.dagger, out).amps - s.amps)) < 1e-11
    for c in range(d):
        img = qcore.apply(u, qcore.tensor(basis[c], qcore.ket(ptr, 0)))
        assert img.allclose(qcore.tensor(basis[c], qcore.ket(ptr, c + 1)), 1e-10)


@pytest.mark.parametrize("seed", SEEDS)
def test_random_unitary_apply_round_trip(seed):
    rng = np.random.default_rng(1000 + seed)
    u = Operator([Q1], haar_unitary(rng, 2))
    s = StateVector([Q0, Q1, F], random_amps(rng, 12))
    out = qcore.apply(u, s)
    assert abs(np.linalg.norm(out.amps) - 1) < 1e-12
    assert np.max(np.abs(qcore.apply(u.dagger, out).amps - s.amps)) < 1e-11
    # oracle: explicit Kronecker embedding
    big = np.kron(np.kron(np.eye(2), u.matrix), np.eye(3))
    assert np.allclose(out.amps, big @ s.amps, atol=1e-12)


def test_apply_rejects_nonunitary():
    with pytest.raises(QCoreError):
        qcore.apply(Operator([Q0], [[1, 1], [0, 1]]), qcore.ket(Q0, 0))


# ---- born -------------------------------------------------------------------

def test_born_values():
    phi0 = StateVector([Q0], [0.6, 0.8])
    assert abs(qcore.born(phi0, qcore.projector(qcore.ket(Q0, 0))) - 0.36) < 1e-15
    assert qcore.born(qcore.ket(Q0, 0), qcore.projector(qcore.ket(Q0, 1))) == 0
    assert abs(qcore.born(phi0, qcore.projector(phi0)) - 1) < 1e-15


def test_born_requires_projector():
    with pytest.raises(QCoreError):
        qcore.born(qcore.ket(Q0, 0), Operator([Q0], 2 * np.eye(2)))


@pytest.mark.parametrize("seed", SEEDS)
def test_born_complement(seed):
    rng = np.random.default_rng(2000 + seed)
    s = StateVector([Q0, F], random_amps(rng, 6))
    p = qcore.projector(StateVector([F], random_amps(rng, 3)))
    comp = Operator([F], np.eye(3) - p.matrix)
    assert abs(qcore.born(s, p) + qcore.born(s, comp) - 1) < 1e-11


# ---- partial trace --------------------------------------------------------------

def test_partial_trace_product_is_pure(rng):
    a, b = StateVector([Q0], random_amps(rng, 2)), StateVector([Q1], random_amps(rng, 2))
    rho = qcore.partial_trace(qcore.tensor(a, b), ["S_A"]).matrix
    assert np.allclose(rho, np.outer(a.amps, a.amps.conj()))
    assert abs(np.trace(rho @ rho) - 1) < 1e-12


def test_partial_trace_bell_state():
    bell = StateVector([Q0, Q1], [s2, 0, 0, s2])
    assert np.allclose(qcore.partial_trace(bell, ["S_B"]).matrix, np.eye(2) / 2)


def test_partial_trace_measured_bell_state():
    bell = StateVector([Q0, Q1], [s2, 0, 0, s2])
    u = qcore.dilate_measurement(qcore.computational_basis(Q0), F)
    psi1 = qcore.apply(u, qcore.tensor(bell, qcore.ket(F, 0)))
    rho = qcore.partial_trace(psi1, ["S_A", "S_B"]).matrix
    # oracle: explicit 12x12 density matrix, trace out F by hand
    full = np.outer(psi1.amps, psi1.amps.conj()).reshape(2, 2, 3, 2, 2, 3)
    manual = np.einsum("abkcdk->abcd", full).reshape(4, 4)
    expected = np.diag([0.5, 0, 0, 0.5])
    assert np.allclose(rho, manual, atol=1e-14)
    assert np.allclose(rho, expected, atol=1e-14)


def test_partial_trace_of_density_operator_matches_state(rng):
    s = StateVector([Q0, Q1, F], random_amps(rng, 12))
    a = qcore.partial_trace(s, ["F", "S_A"]).matrix
    b = qcore.partial_trace(DensityOperator.from_state(s), ["F", "S_A"]).matrix
    assert np.allclose(a, b, atol=1e-13)


def test_density_operator_invariants():
    with pytest.raises(QCoreError):
        DensityOperator([Q0], [[1, 0], [0, 1]])
    with pytest.raises(QCoreError):
        DensityOperator([Q0], [[1.5, 0], [0, -0.5]])


# ---- collapse ------------------------------------------------------------------

def test_collapse_eigenstate_single_branch():
    br = [b for b in qcore.collapse(qcore.ket(Q0, 1), qcore.computational_basis(Q0)) if not b.null]
    assert len(br) == 1 and br[0].probability == 1 and br[0].outcome == 1


def test_collapse_probabilities():
    br = qcore.collapse(StateVector([Q0], [0.6, 0.8]), qcore.computational_basis(Q0))
    assert np.allclose([b.probability for b in br], [0.36, 0.64])
    assert br[0].state.allclose(qcore.ket(Q0, 0))


def test_collapse_bell_state_on_one_side():
    bell = StateVector([Q0, Q1], [s2, 0, 0, s2])
    br = qcore.collapse(bell, qcore.computational_basis(Q0))
    assert np.allclose([b.probability for b in br], [0.5, 0.5])
    assert br[1].state.allclose(qcore.tensor(qcore.ket(Q0, 1), qcore.ket(Q1, 1)))


@pytest.mark.parametrize("seed", SEEDS)
def test_collapse_branches_complete_and_orthogonal(seed):
    rng = np.random.default_rng(3000 + seed)
    s = StateVector([Q0, F], random_amps(rng, 6))
    w = haar_unitary(rng, 3)
    basis = [StateVector([F], w[:, k]) for k in range(3)]
    br = [b for b in qcore.collapse(s, basis) if not b.null]
    assert abs(sum(b.probability for b in br) - 1) < 1e-10
    for i in range(len(br)):
        for j in range(i + 1, len(br)):
            assert abs(np.vdot(br[i].state.amps, br[j].state.amps)) < 1e-10


@settings(max_examples=50, deadline=None)
@given(st.floats(0, np.pi), st.floats(0, 2 * np.pi))
def test_born_matches_collapse(theta, phi):
    s = StateVector([Q0], [np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])
    basis = qcore.computational_basis(Q0)
    br = qcore.collapse(s, basis)
    for b in br:
        assert abs(b.probability - qcore.born(s, qcore.projector(basis[b.outcome]))) < 1e-12


def test_complete_unitary_rejects_non_orthonormal():
    with pytest.raises(QCoreError):
        qcore.complete_unitary([Q0], np.array([[1], [1]]), np.array([[1], [0]]))
