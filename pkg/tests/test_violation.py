import math

import numpy as np
import pytest

from ewfs import polytope, violation
from ewfs.polytope import Inequality
from ewfs.scenario import PointerAsk, make_scenario, qubit_basis, run_correlations
from ewfs.violation import MeasurementParams, OptimizerConfig, ViolationTemplate

CHSH = polytope.chsh_inequality()
T22 = ViolationTemplate(2, 2)


def test_analytic_chsh_angles():
    v = violation.objective(violation.chsh_optimal_params(), CHSH, T22)
    assert abs(v - 2 * math.sqrt(2)) < 1e-9


def test_product_state_stays_local():
    # identical measurements on a product state: deterministic-like statistics
    params = MeasurementParams(alice=((0.0, 0.0),), bob=((0.0, 0.0), (0.0, 0.0)), state=(0.0, 0.0))
    v = violation.objective(params, CHSH, ViolationTemplate(2, 2, optimize_state=True))
    assert v <= CHSH.bound + 1e-12


def test_global_phase_invariance():
    params = violation.chsh_optimal_params()
    sc = violation.instantiate(params, T22)
    base = run_correlations(sc).p
    ph = np.exp(0.73j)
    alice = [PointerAsk(), ("reverse", ph * qubit_basis(*params.alice[0]))]
    bob = [ph * qubit_basis(*b) for b in params.bob]
    rotated = run_correlations(make_scenario(sc.initial.amps, ph * np.eye(2), alice, bob)).p
    assert np.max(np.abs(base - rotated)) < 1e-11


def test_fast_table_matches_engine():
    rng = np.random.default_rng(3)
    tmpl = ViolationTemplate(3, 2, optimize_state=True)
    for _ in range(10):
        p = MeasurementParams.from_vector(rng.uniform(0, 2 * math.pi, tmpl.n_params), tmpl)
        fast = violation._fast_table(p)
        assert np.max(np.abs(fast - run_correlations(violation.instantiate(p, tmpl)).p)) < 1e-12


def test_optimize_chsh_reaches_tsirelson():
    res = violation.optimize(CHSH, T22, OptimizerConfig(restarts=4, seed=11))
    assert abs(res.value - 2 * math.sqrt(2)) < 1e-6
    assert abs(res.margin - (2 * math.sqrt(2) - 2)) < 1e-6
    # replay from the returned parameters
    assert abs(violation.objective(res.params, CHSH, T22) - res.value) < 1e-9
    assert len(res.trace) == 4


def test_optimize_deterministic_under_seed():
    a = violation.optimize(CHSH, T22, OptimizerConfig(restarts=2, seed=5))
    b = violation.optimize(CHSH, T22, OptimizerConfig(restarts=2, seed=5))
    assert np.array_equal(a.params.to_vector(), b.params.to_vector())
    assert a.value == b.value


def test_margin_never_exceeds_ns_ceiling():
    iq = Inequality(CHSH.coeffs, violation.ns_ceiling(CHSH))
    res = violation.optimize(iq, T22, OptimizerConfig(restarts=2, seed=0))
    assert res.margin <= 1e-12
    assert violation.ns_ceiling(CHSH) == 4.0


def test_dims_mismatch_rejected():
    with pytest.raises(ValueError):
        violation.optimize(CHSH, ViolationTemplate(3, 2))


def test_params_round_trip():
    tmpl = ViolationTemplate(3, 2, optimize_state=True)
    v = np.arange(tmpl.n_params, dtype=float) / 7
    p = MeasurementParams.from_vector(v, tmpl)
    assert np.array_equal(p.to_vector(), v)
    assert MeasurementParams.from_dict(p.to_dict()) == p
    with pytest.raises(ValueError):
        MeasurementParams.from_vector(v[:-1], tmpl)
    with pytest.raises(ValueError):
        MeasurementParams(alice=((float("nan"), 0.0),), bob=())


def test_instantiate_checks_template():
    with pytest.raises(ValueError):
        violation.instantiate(violation.chsh_optimal_params(), ViolationTemplate(3, 2))


def test_config_from_dict():
    cfg = OptimizerConfig.from_dict({"restarts": 3, "seed": 9})
    assert cfg.restarts == 3 and cfg.seed == 9
    with pytest.raises(ValueError):
        OptimizerConfig.from_dict({"restart": 3})


def test_instantiated_bases_orthonormal():
    rng = np.random.default_rng(0)
    tmpl = ViolationTemplate(3, 2)
    p = MeasurementParams.from_vector(rng.uniform(-10, 10, tmpl.n_params), tmpl)
    sc = violation.instantiate(p, tmpl)
    for s in sc.alice_settings[1:]:
        m = np.array([v.amps for v in s.basis])
        assert np.allclose(m @ m.conj().T, np.eye(2), atol=1e-10)


def test_nontrivial_lf_facets_3222():
    facets = violation.nontrivial_lf_facets(3, 2)
    assert len(facets) == 16
    lf = polytope.lf_vertices(3, 2, 2, 2)
    bell = polytope.bell_vertices(3, 2, 2, 2)
    for iq in facets:
        assert polytope.max_over_vertices(iq, lf) <= iq.bound + 1e-12
        assert polytope.max_over_vertices(iq, bell) <= iq.bound + 1e-12
