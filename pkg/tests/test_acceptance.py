"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -s`` (or ``python tests/test_acceptance.py``)
to see the lines inline; the terminal summary repeats them either way.
"""

import functools
import math
import time

import numpy as np

from conftest import SEEDS, haar_unitary, random_amps, random_qubit_pair
from ewfs import betting, polytope, prescriptions, qcore, violation
from ewfs.scenario import PointerAsk, make_scenario, run_collapse_correlations, run_correlations

RESULTS: dict[int, str] = {}


def criterion(n: int, title: str, budget: float | None = None):
    """Record PASS/FAIL with wall time; a blown time budget is a failure too."""

    def wrap(fn):
        @functools.wraps(fn)
        def run(*a, **k):
            t0 = time.perf_counter()
            detail, err = "", None
            try:
                detail = fn(*a, **k) or ""
                elapsed = time.perf_counter() - t0
                if budget is not None:
                    assert elapsed < budget, f"took {elapsed:.2f} s, budget {budget} s"
            except AssertionError as e:
                err = e
            elapsed = time.perf_counter() - t0
            status = "FAIL" if err else "PASS"
            line = f"[{status}] criterion {n}: {title} ({elapsed:.2f} s) {err if err else detail}".rstrip()
            RESULTS[n] = line
            print(line)
            if err:
                raise err

        return run

    return wrap


@criterion(1, "B-B retro demo marginals", budget=1.0)
def test_criterion_1_bb_demo():
    for d in (2, 3, 16):
        rep = prescriptions.bb_retro_demo(d)
        assert np.max(np.abs(rep.marginal_x1 - np.eye(d)[0])) < 1e-10, f"d={d} x=1"
        assert np.max(np.abs(rep.marginal_x2 - 1 / d)) < 1e-10, f"d={d} x=2"
    return "d in {2, 3, 16}"


@criterion(2, "Deutsch reversal, unitary vs collapse", budget=1.0)
def test_criterion_2_deutsch():
    rng = np.random.default_rng(2)
    worst_u = worst_c = 0.0
    for _ in range(100):
        a, b = random_qubit_pair(rng)
        sc = prescriptions.DeutschScenario(a, b)
        worst_u = max(worst_u, abs(prescriptions.deutsch_unitary(sc)["p_phi0"] - 1))
        worst_c = max(worst_c, abs(prescriptions.deutsch_collapse(sc)["p_phi0"] - (abs(a) ** 4 + abs(b) ** 4)))
    assert worst_u < 1e-11, worst_u
    assert worst_c < 1e-12, worst_c
    spot = prescriptions.deutsch_collapse(prescriptions.DeutschScenario(0.6, 0.8))["p_phi0"]
    assert abs(spot - 0.5392) < 1e-12, spot
    return f"max unitary dev {worst_u:.1e}, collapse spot {spot:.12f}"


@criterion(3, "betting expected gains and order independence", budget=10.0)
def test_criterion_3_betting():
    rng = np.random.default_rng(3)
    worst_gain = worst_order = 0.0
    for _ in range(1000):
        lab = betting.BettingLab(*random_qubit_pair(rng), *random_qubit_pair(rng))
        for t in (betting.G1, betting.G2):
            for kind in ("external", "internal"):
                state, wallet, _ = betting.place_bet(lab, t, kind)
                # the same placed bet settled under every applicable order
                orders = betting.ORDERS if t.setting == 2 else betting.ORDERS[:3]
                gains = [betting.settle(state, t.setting, t, o, lab, wallet).expected_gain for o in orders]
                worst_gain = max(worst_gain, abs(gains[0]))
                worst_order = max(worst_order, max(gains) - min(gains))
    assert worst_gain < 1e-10, worst_gain
    assert worst_order < 1e-10, worst_order
    return f"1000 draws, max |gain| {worst_gain:.1e}, max order spread {worst_order:.1e}"


@criterion(4, "total-probability audit")
def test_criterion_4_audit():
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(200):
        lab = betting.BettingLab(*random_qubit_pair(rng), *random_qubit_pair(rng))
        worst = max(worst, betting.total_probability_audit(lab)["x1"]["gap"])
    assert worst < 1e-11, worst
    a = betting.total_probability_audit(betting.BettingLab(0.6, 0.8, 0.6, 0.8))
    assert a["x1"]["gap"] < 1e-11
    assert abs(a["x2"]["internal_marginal"] - 0.5392) < 1e-10, a["x2"]
    assert abs(a["x2"]["external"] - 1.0) < 1e-10, a["x2"]
    assert abs(a["x2"]["gap"] - 0.4608) < 1e-10, a["x2"]
    return f"x=2 internal {a['x2']['internal_marginal']:.10f} external {a['x2']['external']:.10f}"


@criterion(5, "LP membership vs convex-hull oracle", budget=60.0)
def test_criterion_5_oracle_equivalence():
    disagreements = 0
    counts = {}
    # (2,2,2,2) is the smallest enumerable size (LF = Bell there); (3,2,2,2) separates the two
    for dims in [(2, 2, 2, 2), (3, 2, 2, 2)]:
        rng = np.random.default_rng(5)
        # sparse Dirichlet weights keep a good share of the points outside
        pts = polytope.sample_ns_points(rng, dims, 100, concentration=0.02)
        inside = {"Bell": 0, "LF": 0}
        for t in pts:
            for model, fn in (("Bell", polytope.bell_membership), ("LF", polytope.lf_membership)):
                lp = fn(t).inside
                hull = polytope.hull_contains(t, model, tol=1e-8)
                disagreements += lp != hull
                inside[model] += hull
        counts[dims] = inside
    assert disagreements == 0, f"{disagreements} disagreements"
    assert all(0 < c["Bell"] < 100 for c in counts.values()), counts
    return f"0 disagreements; inside counts {counts}"


@criterion(6, "strict containment LF ⊋ Bell")
def test_criterion_6_strict_containment():
    res = polytope.smallest_strict_scenario()
    assert res.outside, "no LF vertex outside Bell"
    best = max(c.gap for c in res.outside)
    assert best > 1e-6, best
    # certificates are honest: valid on every Bell vertex, violated by the LF vertex
    bell = polytope.bell_vertices(*res.dims)
    for c in res.outside:
        assert polytope.max_over_vertices(c.witness, bell) <= c.witness.bound + 1e-9
    smaller = [d for d in res.checked if d != res.dims]
    for d in smaller:
        assert len(polytope.lf_vertices(*d)) == len(polytope.bell_vertices(*d))
    return (f"smallest strict size (nx,ny,ka,kb)={res.dims}: {res.lf_count} LF vs {res.bell_count} Bell vertices, "
            f"{len(res.outside)} outside, max gap {best:g}")


@criterion(7, "violation pipeline", budget=300.0)
def test_criterion_7_violation():
    cfg = violation.OptimizerConfig(restarts=20, seed=7)
    chsh = violation.optimize(polytope.chsh_inequality(), violation.ViolationTemplate(2, 2), cfg)
    assert abs(chsh.value - 2 * math.sqrt(2)) < 1e-6, chsh.value
    iq, res = violation.search_lf_violation(3, 2, cfg)
    cert = polytope.lf_membership(res.table)
    assert not cert.inside, "optimized table is inside LF"
    assert cert.gap > 0, cert.gap
    assert res.margin > 0
    return f"CHSH {chsh.value:.12f}; LF facet margin {res.margin:.6f}, certificate gap {cert.gap:.3e}"


@criterion(8, "engine invariant sweeps")
def test_criterion_8_engine_invariants():
    S, P = qcore.SystemLabel("S", 2), qcore.SystemLabel("P", 3)
    worst = {"unitarity": 0.0, "normalization": 0.0, "round_trip": 0.0, "no_signalling": 0.0}
    for seed in SEEDS:
        rng = np.random.default_rng(80_000 + seed)
        rows = haar_unitary(rng, 2).T
        basis = [qcore.StateVector([S], r) for r in rows]
        u = qcore.dilate_measurement(basis, P)
        m = u.matrix
        worst["unitarity"] = max(worst["unitarity"], np.max(np.abs(m.conj().T @ m - np.eye(6))))

        psi = qcore.StateVector([S, P], random_amps(rng, 6))
        back = qcore.apply(u.dagger, qcore.apply(u, psi))
        worst["round_trip"] = max(worst["round_trip"], np.max(np.abs(back.amps - psi.amps)))

        alice = [PointerAsk()] + [("reverse", haar_unitary(rng, 2).T) for _ in range(2)]
        bob = [haar_unitary(rng, 2).T for _ in range(2)]
        sc = make_scenario(random_amps(rng, 4), haar_unitary(rng, 2).T, alice, bob)
        for t in (run_correlations(sc), run_collapse_correlations(sc)):
            worst["normalization"] = max(worst["normalization"], t.normalization_error())
            worst["no_signalling"] = max(worst["no_signalling"], polytope.check_no_signalling(t).deviation)
    assert worst["unitarity"] < 1e-12, worst
    assert worst["round_trip"] < 1e-11, worst
    assert worst["normalization"] < 1e-10, worst
    assert worst["no_signalling"] < 1e-10, worst
    return ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f" over {len(SEEDS)} seeds"


if __name__ == "__main__":
    import sys

    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
