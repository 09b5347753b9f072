"""Acceptance suite.

Each test covers one acceptance criterion at its stated tolerance and
prints a single summary line (visible with -s or in captured output).
"""

import json
import time

import numpy as np
import pytest

from qmetric import (
    FiniteMetricSpace,
    SearchConfig,
    State,
    PureState,
    certify,
    check_leibniz,
    conic_combine,
    direct_sum,
    direct_sum_bound,
    feasibility_search,
    from_finite_metric,
    lip_seminorm,
    m2_admissible,
    mk_distance,
    pure_state_bound,
    tensor_product,
    triangle_defect,
    verify,
)
from qmetric.algebra import AlgebraElement
from qmetric.axioms import (
    M2_DIAG_PROJECTOR,
    M2_NOGO_WITNESS,
    M2_TRIANGLE_DEFECT,
    m2_defect_quadratic_form,
)
from qmetric.cli import main
from qmetric.exchange import load_element, outcome_to_dict, save_element

from oracles import (
    classical_axioms,
    embed_distance_matrix,
    lipschitz_constant,
    plant_negativity,
    plant_triangle_violation,
    random_metric,
    transport_lp_primal,
)


def report_line(num: int, ok: bool, detail: str) -> None:
    print(f"criterion {num}: {'PASS' if ok else 'FAIL'} - {detail}")


def test_criterion_1_diagonal_projector(tmp_path, capsys):
    """The emitted two-level diagonal projector is exact, in under 1 ms."""
    out = tmp_path / "p.json"
    code = main(["pdelta", "--shape", "2", "--out", str(out), "--quiet"])
    emitted = load_element(out, expect_order=2)
    exact = bool(
        np.array_equal(emitted.data.real, M2_DIAG_PROJECTOR)
        and np.all(emitted.data.imag == 0)
    )
    values = set(np.unique(emitted.data.real))
    in_alphabet = values <= {0.0, 0.5, 1.0}
    # time a fresh build plus the exact comparison, best of five
    from qmetric.algebra import _diag_projector_cached

    best = np.inf
    for _ in range(5):
        t0 = time.perf_counter()
        fresh = _diag_projector_cached.__wrapped__((2,))
        assert np.array_equal(fresh.data.real, M2_DIAG_PROJECTOR)
        best = min(best, time.perf_counter() - t0)
    ok = code == 0 and exact and in_alphabet and best < 1e-3
    with capsys.disabled():
        report_line(1, ok, f"exact projector, build+compare {best * 1e6:.0f} us")
    assert code == 0 and exact and in_alphabet
    assert best < 1e-3


def test_criterion_2_two_level_no_go(capsys):
    """Defect matrices, quadratic identity, witness, and failing axiom."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    all_ok = True
    for lam in (0.1, 1.0, 10.0):
        rho = m2_admissible(lam)
        defect = triangle_defect(rho).data
        assert np.max(np.abs(defect - lam * M2_TRIANGLE_DEFECT)) <= 1e-12 * max(1.0, lam)
        xs = rng.standard_normal((10_000, 8))
        lhs = np.einsum("ni,ij,nj->n", xs, defect.real, xs)
        rhs = lam * np.array([m2_defect_quadratic_form(x) for x in xs])
        norms_sq = np.einsum("ni,ni->n", xs, xs)
        assert np.all(np.abs(lhs - rhs) <= 1e-10 * lam * np.maximum(norms_sq, 1.0))
        witness_value = float(M2_NOGO_WITNESS @ defect.real @ M2_NOGO_WITNESS)
        assert witness_value == pytest.approx(-2.0 * lam, abs=1e-12 * max(1.0, lam))
        report = verify(rho)
        assert report.failing == ("v",)
    elapsed = time.perf_counter() - t0
    with capsys.disabled():
        report_line(
            2, elapsed < 1.0, f"defect exact, 3x10^4 identity samples, {elapsed:.2f}s"
        )
    assert elapsed < 1.0


def test_criterion_3_classical_soundness_completeness(capsys):
    """Verifier agrees with the brute-force checker on 200 planted cases."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    agreements = 0
    total = 200
    for k in range(total):
        n = int(rng.integers(2, 7))
        d = random_metric(rng, n)
        if k % 2 == 1:
            if n >= 3 and rng.random() < 0.5:
                d = plant_triangle_violation(rng, d)
            else:
                d = plant_negativity(rng, d)
        expected = classical_axioms(d)["all"]
        rho = embed_distance_matrix(d)
        got_rep = verify(rho).passed
        got_alg = verify(rho, mode="algebraic").passed
        if got_rep == expected and got_alg == expected:
            agreements += 1
    elapsed = time.perf_counter() - t0
    ok = agreements == total and elapsed < 10.0
    with capsys.disabled():
        report_line(3, ok, f"{agreements}/{total} agreements, both modes, {elapsed:.1f}s")
    assert agreements == total
    assert elapsed < 10.0


def test_criterion_4_theorem_constructions(capsys):
    """Combination, direct-sum, and product constructions all verify."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    checked = 0
    for _ in range(50):
        n1 = int(rng.integers(2, 4))
        n2 = int(rng.integers(2, 4))
        a = from_finite_metric(FiniteMetricSpace(random_metric(rng, n1)))
        a2 = from_finite_metric(FiniteMetricSpace(random_metric(rng, n1)))
        b = from_finite_metric(FiniteMetricSpace(random_metric(rng, n2)))

        combined = conic_combine(a, a2, float(rng.uniform(0.1, 3.0)))
        assert verify(combined.rho).passed

        bound = direct_sum_bound(a, b)
        at_bound = direct_sum(a, b, bound)
        assert verify(at_bound.rho).passed
        above = direct_sum(a, b, 2.0 * bound)
        assert verify(above.rho).passed

        prod = tensor_product(a, b)
        assert verify(prod.rho).passed
        checked += 1
    # algebraic-mode spot checks on the constructions licensed for it
    for _ in range(8):
        a = from_finite_metric(FiniteMetricSpace(random_metric(rng, 2)))
        b = from_finite_metric(FiniteMetricSpace(random_metric(rng, 2)))
        assert verify(direct_sum(a, b, direct_sum_bound(a, b)).rho, mode="algebraic").passed
        assert verify(tensor_product(a, b, mode="algebraic").rho, mode="algebraic").passed
    elapsed = time.perf_counter() - t0
    ok = checked == 50 and elapsed < 30.0
    with capsys.disabled():
        report_line(4, ok, f"50 pairs x 4 constructions verified, {elapsed:.1f}s")
    assert checked == 50
    assert elapsed < 30.0


def test_criterion_5_lipschitz_agreement(capsys):
    """Seminorm matches the combinatorial constant; product rule holds."""
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 7))
        d = random_metric(rng, n)
        cand = from_finite_metric(FiniteMetricSpace(d))
        values = rng.standard_normal(n)
        a = AlgebraElement(cand.shape, np.diag(values).astype(complex))
        got = lip_seminorm(a, cand)
        want = lipschitz_constant(d, values)
        worst = max(worst, abs(got - want))
        assert abs(got - want) <= 1e-9
    leibniz_ok = 0
    for _ in range(100):
        n = int(rng.integers(2, 6))
        d = random_metric(rng, n)
        cand = from_finite_metric(FiniteMetricSpace(d))
        a = AlgebraElement(cand.shape, np.diag(rng.standard_normal(n)).astype(complex))
        b = AlgebraElement(cand.shape, np.diag(rng.standard_normal(n)).astype(complex))
        holds, _ = check_leibniz(a, b, cand)
        if holds:
            leibniz_ok += 1
    ok = leibniz_ok == 100
    with capsys.disabled():
        report_line(
            5, ok, f"100 seminorms within {worst:.1e}, product rule {leibniz_ok}/100"
        )
    assert leibniz_ok == 100


def test_criterion_6_transport_agreement(capsys):
    """Exact transport values match the primal program; bound dominates."""
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 7))
        d = random_metric(rng, n)
        cand = from_finite_metric(FiniteMetricSpace(d))
        p, q = rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(n))
        got = mk_distance(State.classical(p), State.classical(q), cand)
        want = transport_lp_primal(d, p, q)
        worst = max(worst, abs(got.lower - want))
        assert abs(got.lower - want) <= 1e-6
        # distinct-block pure states: distance dominated by the bound
        x, y = map(int, rng.permutation(n)[:2])
        v = PureState(cand.shape, x, np.array([1.0]))
        w = PureState(cand.shape, y, np.array([1.0]))
        dist = mk_distance(v.to_state(), w.to_state(), cand).lower
        assert dist <= pure_state_bound(v, w, cand) + 1e-8
    with capsys.disabled():
        report_line(6, True, f"50 transport values within {worst:.1e}, bound holds")


def test_criterion_7_search_sanity(capsys):
    """Certified classical search, two-level stall, diagnostic family."""
    t0 = time.perf_counter()
    cfg = SearchConfig(shape=(1, 1, 1), max_iter=5000, restarts=4, seed=42)
    found = feasibility_search(cfg)
    classical_time = time.perf_counter() - t0
    assert found.found
    assert found.iterations_run <= 5000
    assert found.best_residual < 1e-8
    assert found.candidate.report.passed
    assert classical_time < 5.0

    cfg2 = SearchConfig(shape=(2,), max_iter=20000, restarts=8, seed=0)
    stall = feasibility_search(cfg2)
    assert stall.status == "no_convergence"
    assert stall.restarts_run == 8
    assert stall.iterations_run == 20000

    cfg3 = SearchConfig(
        shape=(2,), max_iter=20000, restarts=1, seed=0, include_triangle=False
    )
    relaxed = feasibility_search(cfg3)
    assert relaxed.found
    tau = cfg3.resolved_trace
    family = m2_admissible(tau / 2.0)
    distance = float(np.max(np.abs(relaxed.candidate.rho.data - family.data)))
    assert distance < 1e-6
    elapsed = time.perf_counter() - t0
    with capsys.disabled():
        report_line(
            7,
            True,
            f"classical certified in {found.iterations_run} iters "
            f"({classical_time:.2f}s), two-level stalls at "
            f"{stall.best_residual:.2f}, relaxed family distance {distance:.1e} "
            f"({elapsed:.1f}s total)",
        )


def test_criterion_8_three_level_exploration(tmp_path, capsys):
    """The three-level search completes and serializes re-verifiably."""
    cfg = SearchConfig(shape=(3,), max_iter=3000, restarts=2, seed=2024)
    outcome = feasibility_search(cfg)
    assert outcome.status in ("candidate_found", "no_convergence")
    doc = outcome_to_dict(outcome)
    path = tmp_path / "outcome3.json"
    path.write_text(json.dumps(doc))
    parsed = json.loads(path.read_text())
    assert parsed["status"] == outcome.status
    assert parsed["config"]["shape"] == [3]
    detail = f"status {outcome.status}, best residual {outcome.best_residual:.2e}"
    if outcome.found:
        save_element(outcome.candidate.rho, tmp_path / "cand3.json")
        again = load_element(tmp_path / "cand3.json", expect_order=2)
        report = certify(again, cfg)
        assert report.passed
        assert report.to_dict() == outcome.candidate.report.to_dict()
        detail += ", candidate recertified bit-identically"
    with capsys.disabled():
        report_line(8, True, detail)
