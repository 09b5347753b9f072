import json

import numpy as np
import pytest

from qmetric import (
    FiniteMetricSpace,
    SearchConfig,
    ToleranceConfig,
    certify,
    diag_projector,
    feasibility_search,
    flip,
    from_finite_metric,
    m2_admissible,
    mult_map,
    project_psd,
    project_structure,
    verify,
)
from qmetric.algebra import random_element
from qmetric.exchange import load_element, outcome_to_dict, save_element
from qmetric.search import structure_basis

from oracles import classical_axioms


class TestProjectPsd:
    def test_fixed_point(self):
        rng = np.random.default_rng(0)
        g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        psd = g @ g.conj().T
        assert np.allclose(project_psd(psd), psd, atol=1e-10)

    def test_clipping(self):
        assert np.allclose(project_psd(np.diag([1.0, -1.0])), np.diag([1.0, 0.0]))

    def test_sampled_optimality(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((5, 5))
        x = (x + x.T) / 2
        out = project_psd(x)
        base = np.linalg.norm(x - out)
        for _ in range(50):
            g = rng.standard_normal((5, 5))
            p = g @ g.T
            assert base <= np.linalg.norm(x - p) + 1e-10

    def test_floor(self):
        out = project_psd(np.diag([2.0, 0.5]), floor=1.0)
        assert np.allclose(np.linalg.eigvalsh(out), [1.0, 2.0])


class TestProjectStructure:
    def test_kills_diag_projector(self):
        p = diag_projector((2,))
        assert np.allclose(project_structure(p).data, 0.0, atol=1e-12)

    def test_fixes_admissible_family(self):
        rho = m2_admissible(1.3)
        assert np.allclose(project_structure(rho).data, rho.data, atol=1e-12)

    @pytest.mark.parametrize("blocks", [(2,), (1, 1), (1, 2), (3,)])
    def test_output_invariants(self, blocks):
        rng = np.random.default_rng(2)
        r = random_element(blocks, 2, rng)
        out = project_structure(r)
        p = diag_projector(blocks)
        assert np.linalg.norm(out.data @ p.data, 2) <= 1e-12 * max(
            1.0, np.linalg.norm(r.data)
        )
        assert np.linalg.norm(flip(out).data - out.data, 2) <= 1e-12 * max(
            1.0, np.linalg.norm(r.data)
        )
        assert np.allclose(out.data, out.data.conj().T, atol=1e-12)

    @pytest.mark.parametrize("mode", ["representation", "algebraic"])
    def test_idempotent(self, mode):
        rng = np.random.default_rng(3)
        r = random_element((1, 2), 2, rng)
        once = project_structure(r, mode=mode)
        twice = project_structure(once, mode=mode)
        assert np.allclose(once.data, twice.data, atol=1e-12)

    def test_algebraic_mode_kills_multiplication(self):
        rng = np.random.default_rng(4)
        r = random_element((2, 1), 2, rng)
        out = project_structure(r, mode="algebraic")
        assert np.linalg.norm(mult_map(out).data, 2) <= 1e-12 * max(
            1.0, np.linalg.norm(r.data)
        )

    def test_contraction(self):
        rng = np.random.default_rng(5)
        r = random_element((2,), 2, rng)
        out = project_structure(r)
        assert np.linalg.norm(out.data) <= np.linalg.norm(r.data) + 1e-12


class TestStructureBasis:
    def test_two_level_solution_space_is_a_line(self):
        basis = structure_basis((2,))
        assert basis.shape[0] == 1
        # the line is exactly the admissible family direction
        fam = m2_admissible(1.0).data
        fam = fam / np.linalg.norm(fam)
        overlap = abs(np.vdot(basis[0], fam))
        assert overlap == pytest.approx(1.0, abs=1e-10)

    def test_classical_dimension_counts_pairs(self):
        assert structure_basis((1, 1, 1)).shape[0] == 3
        assert structure_basis((1, 1)).shape[0] == 1

    def test_orthonormal(self):
        basis = structure_basis((1, 2))
        flat = basis.reshape(basis.shape[0], -1)
        gram = (flat.conj() @ flat.T).real
        assert np.allclose(gram, np.eye(basis.shape[0]), atol=1e-10)


class TestCertify:
    def test_classical_passes(self):
        cand = from_finite_metric(
            FiniteMetricSpace(np.array([[0.0, 1.0], [1.0, 0.0]]))
        )
        cfg = SearchConfig(shape=(1, 1), floor=0.5)
        assert certify(cand.rho, cfg).passed

    def test_admissible_fails_at_triangle(self):
        cfg = SearchConfig(shape=(2,), floor=0.5)
        report = certify(m2_admissible(1.0), cfg)
        assert not report.passed
        assert report.failing == ("v",)


class TestFeasibilitySearch:
    def test_classical_three_points(self):
        cfg = SearchConfig(shape=(1, 1, 1), max_iter=5000, restarts=4, seed=42)
        out = feasibility_search(cfg)
        assert out.found
        assert out.candidate.report.passed
        assert out.best_residual < cfg.residual_tol
        assert np.trace(out.candidate.rho.data).real == pytest.approx(9.0, abs=1e-6)
        # the candidate is a genuine classical metric up to the residual:
        # margins at search-grade tolerance, distances strictly positive
        grade = ToleranceConfig(eq_tol=1e-6, psd_tol=1e-6, strict_floor=cfg.floor / 2)
        assert verify(out.candidate.rho, grade).passed
        n = 3
        d = np.array(
            [
                [out.candidate.rho.data[x * n + y, x * n + y].real for y in range(n)]
                for x in range(n)
            ]
        )
        assert classical_axioms(d, tol=1e-7)["all"]

    def test_deterministic(self):
        cfg = SearchConfig(shape=(1, 1, 1), max_iter=2000, restarts=2, seed=7)
        a = feasibility_search(cfg)
        b = feasibility_search(cfg)
        assert a.status == b.status
        assert np.array_equal(a.candidate.rho.data, b.candidate.rho.data)
        assert json.dumps(outcome_to_dict(a)) == json.dumps(outcome_to_dict(b))

    def test_homogeneity_guard(self):
        base = SearchConfig(
            shape=(1, 1, 1), max_iter=3000, restarts=1, seed=5, floor=1e-3
        )
        doubled = SearchConfig(
            shape=(1, 1, 1),
            max_iter=3000,
            restarts=1,
            seed=5,
            floor=2e-3,
            trace_target=2.0 * base.resolved_trace,
        )
        a = feasibility_search(base)
        b = feasibility_search(doubled)
        assert a.found and b.found
        assert np.allclose(2.0 * a.candidate.rho.data, b.candidate.rho.data, atol=1e-5)

    def test_two_level_no_convergence(self):
        cfg = SearchConfig(shape=(2,), max_iter=1500, restarts=2, seed=0)
        out = feasibility_search(cfg)
        assert out.status == "no_convergence"
        assert out.candidate is None
        assert out.best_residual > 1.0

    def test_two_level_diagnostic_recovers_family(self):
        cfg = SearchConfig(
            shape=(2,), max_iter=2000, restarts=1, seed=0, include_triangle=False
        )
        out = feasibility_search(cfg)
        assert out.found
        tau = cfg.resolved_trace
        family_member = m2_admissible(tau / 2.0)
        assert np.max(np.abs(out.candidate.rho.data - family_member.data)) < 1e-6
        # the full report still carries the triangle failure
        assert out.candidate.report.record("v").passed is False

    def test_algebraic_mode_classical(self):
        cfg = SearchConfig(shape=(1, 1, 1), max_iter=5000, restarts=2, seed=11)
        out = feasibility_search(cfg, mode="algebraic")
        assert out.found
        assert out.candidate.report.mode == "algebraic"
        assert out.candidate.report.passed

    def test_residual_history_recorded(self):
        cfg = SearchConfig(shape=(1, 1, 1), max_iter=2000, restarts=1, seed=3)
        out = feasibility_search(cfg)
        hist = np.asarray(out.residual_history)
        assert hist.shape[1] == 3
        assert hist.shape[0] == out.iterations_run
        assert np.all(hist >= 0)

    def test_serialized_candidate_recertifies_bitwise(self, tmp_path):
        cfg = SearchConfig(shape=(1, 1, 1), max_iter=3000, restarts=1, seed=13)
        out = feasibility_search(cfg)
        assert out.found
        path = tmp_path / "candidate.json"
        save_element(out.candidate.rho, path)
        again = load_element(path, expect_order=2)
        assert np.array_equal(again.data, out.candidate.rho.data)
        report = certify(again, cfg)
        assert report.to_dict() == out.candidate.report.to_dict()

    def test_outcome_serialization_roundtrip(self, tmp_path):
        cfg = SearchConfig(shape=(1, 1, 1), max_iter=2000, restarts=1, seed=2)
        out = feasibility_search(cfg)
        doc = outcome_to_dict(out)
        text = json.dumps(doc)
        parsed = json.loads(text)
        assert parsed["status"] == out.status
        assert parsed["config"]["shape"] == [1, 1, 1]
        assert len(parsed["residual_history"]) <= 1000

    def test_invalid_config(self):
        with pytest.raises(ValueError):
            SearchConfig(shape=(2,), floor=0.0)
        with pytest.raises(ValueError):
            SearchConfig(shape=(2,), restarts=0)
        with pytest.raises(ValueError):
            SearchConfig(shape=(2,), normalization="nope")

    def test_opnorm_gauge(self):
        cfg = SearchConfig(
            shape=(1, 1, 1), max_iter=3000, restarts=1, seed=4, normalization="opnorm"
        )
        out = feasibility_search(cfg)
        assert out.found
        assert np.linalg.norm(out.candidate.rho.data, 2) == pytest.approx(1.0, abs=1e-9)
        assert out.candidate.report.passed
