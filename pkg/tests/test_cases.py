import math

import numpy as np
import pytest

from adasub import brute
from adasub.cases import (
    DIAGNOSIS_TABLE,
    VERIFIERS,
    build_chain,
    build_diagnosis,
    build_f4_instance,
    build_kusner,
    build_tight_gap,
    chain_gamma_bound,
    f4_matrix,
    lemma_b2_lhs,
    outcome_code,
    run_verifier,
    sample_b2_vectors,
    tight_gap_grid,
)
from adasub.core import AdaptiveProblem, check_adaptive_monotone, height, run_policy
from adasub.exceptions import InvalidInput, InvalidParams, UnknownCase


class TestTightGap:
    def test_grid_uses_full_switch(self):
        for k, a, p, M in tight_gap_grid():
            assert p * M == pytest.approx(1.0)
            assert a * p * M in (pytest.approx(1), pytest.approx(2), pytest.approx(5))

    def test_closed_forms_agree_on_grid(self):
        for params in tight_gap_grid():
            c = build_tight_gap(*params).closed
            assert c["gamma"] == pytest.approx(c["gamma_full"], abs=1e-15)
            assert c["gap"] == pytest.approx(c["beta"] * c["gamma"], abs=1e-15)

    def test_brute_matches_on_small_grid(self):
        for params in tight_gap_grid(products=(1, 2), Ms=(5,)):
            case = build_tight_gap(*params)
            P = case.problem
            assert brute.gamma_adaptive(P, 2).value == pytest.approx(case.closed["gamma"], abs=1e-9)
            assert brute.adaptivity_gap_exact(P, 2).value == pytest.approx(case.closed["gap"], abs=1e-9)

    def test_partial_switch(self):
        # with p M < 1 the minimum policy stops when u reports 0
        case = build_tight_gap(2, 10.0, 0.1, 5)
        P = case.problem
        gamma = brute.gamma_adaptive(P, 2).value
        assert gamma == pytest.approx(case.closed["gamma"], abs=1e-9)
        assert gamma == pytest.approx(0.25, abs=1e-9)
        assert case.closed["gamma_full"] == pytest.approx(1 / 3)
        assert brute.verify_gap_bound(P, 2)

    def test_monotone(self):
        assert check_adaptive_monotone(build_tight_gap(2, 2.0, 0.2, 5).problem)

    @pytest.mark.parametrize("params", [(2, 1.0, 0.1, 5), (2, 20.0, 0.1, 5), (2, 1.0, 0.5, 5), (0, 1.0, 0.2, 5)])
    def test_rejects(self, params):
        with pytest.raises(InvalidParams):
            build_tight_gap(*params)


class TestKusner:
    def test_shape(self):
        case = build_kusner(3, 4, 0.1)
        assert case.problem.n_elements == 1 + 3 + 2 * 4
        assert case.labels[:4] == ["u", "z1", "z2", "z3"]
        assert case.labels[4] == "v1^0"

    def test_values(self):
        case = build_kusner(2, 3, 0.1)
        P = case.problem
        assert float(P.gain_element(0)) == 1.0
        assert float(P.gain_element(1)) == pytest.approx(1.1)
        # v_1^y pays M with probability 1/M
        assert float(P.gain_element(3)) == pytest.approx(1.0)
        assert float(P.gain_element(3, [(0, 0)])) == pytest.approx(3.0)

    def test_rejects(self):
        with pytest.raises(InvalidParams):
            build_kusner(1, 3, 0.1)


class TestChain:
    def test_states(self):
        case = build_chain(2, 0.5)
        for phi, p in case.prior:
            side = phi.latent
            assert p == pytest.approx(0.25)
            # u_0 reaches up to the first live side edge
            first = next((i for i in range(2) if side[i]), 2)
            assert phi[0] == first

    def test_explicit_policy(self):
        for ell, eps in ((1, 0.5), (2, 0.5), (3, 0.3)):
            case = build_chain(ell, eps)
            P = case.problem
            assert float(P.gain_policy(case.policy)) == pytest.approx(ell + 1 + eps * ell, abs=1e-9)
            assert float(P.gain_element(0)) == pytest.approx((1 - (1 - eps) ** (ell + 1)) / eps, abs=1e-9)
            assert height(case.policy) <= ell + 1
            for phi, _ in P.prior:
                selected, _ = run_policy(case.policy, phi)
                assert P.objective(selected, phi) == (ell + 1) + len(selected) - 1

    def test_gamma_below_bound(self):
        for ell, eps in ((2, 0.5), (3, 0.25)):
            P = build_chain(ell, eps).problem
            assert brute.gamma_adaptive(P, ell).value <= chain_gamma_bound(ell, eps) + 1e-9

    def test_rejects(self):
        with pytest.raises(InvalidParams):
            build_chain(2, 1.0)


class TestDiagnosis:
    def test_table(self):
        assert len(DIAGNOSIS_TABLE) == 6
        assert outcome_code(+1) == 0 and outcome_code(-1) == 1

    def test_gains(self):
        P = build_diagnosis().problem
        assert float(P.gain_element(1)) == 0.0
        assert float(P.gain_element(1, [(0, 1)])) == 0.5
        assert float(P.gain_element(0)) == 0.0
        assert math.isinf(brute.zeta_star(P).value)

    def test_monotone(self):
        assert check_adaptive_monotone(build_diagnosis().problem)


class TestF4:
    def test_matrix(self):
        A = f4_matrix(4)
        assert np.linalg.norm(A, axis=0) == pytest.approx(np.ones(4))
        assert A[:, 0] @ A[:, 1] == pytest.approx(1 / math.sqrt(2))
        with pytest.raises(InvalidParams):
            f4_matrix(2)

    def test_instance(self):
        inst = build_f4_instance()
        P = AdaptiveProblem(*reversed(inst.to_tabular()))
        # e1 alone explains nothing of b = (0, a, a, a)
        assert float(P.gain_element(0)) == 0.0
        assert float(P.gain_element(0, [(1, 0)])) > 0.0
        assert math.isinf(brute.zeta_star(P).value)


class TestLemmaB2:
    def test_known_values(self):
        assert lemma_b2_lhs([0.5, 0.5]) == pytest.approx(0.0, abs=1e-15)
        assert lemma_b2_lhs([0.0, 0.0]) == 0.0
        # s = 0.5, cross = 0.25 - 0.125, m/(m-1) = 2
        assert lemma_b2_lhs([0.25, 0.25]) == pytest.approx(0.25)

    def test_samples_feasible(self, rng):
        for p in sample_b2_vectors(rng, 200):
            assert 2 <= p.size <= 8 and p.sum() <= 1 + 1e-12 and np.all(p >= 0)
            assert lemma_b2_lhs(p) >= -1e-12

    def test_rejects(self):
        with pytest.raises(InvalidInput):
            lemma_b2_lhs([0.7, 0.7])
        with pytest.raises(InvalidInput):
            lemma_b2_lhs([0.5])


class TestVerifiers:
    @pytest.mark.parametrize("name", ["ygo", "f4", "kusner", "chain", "zeta-vs-gamma"])
    def test_pass(self, name):
        rep = run_verifier(name)
        assert rep.ok, "\n".join(rep.lines())
        assert rep.lines()[-1] == f"{name}: PASS"

    def test_registry(self):
        assert set(VERIFIERS) == {"tightgap", "kusner", "ygo", "chain", "f4", "lemma-b2", "greedy-bound", "gap-bound", "zeta-vs-gamma"}

    def test_unknown(self):
        with pytest.raises(UnknownCase):
            run_verifier("nope")


class TestSpecExamples:
    def test_bound_shrinks(self):
        assert chain_gamma_bound(16, 0.25) < chain_gamma_bound(4, 0.5)

    def test_chain_u0_gain(self):
        assert float(build_chain(2, 0.5).problem.gain_element(0)) == pytest.approx(1.75)

    def test_lemma_point_mass(self):
        assert lemma_b2_lhs([1.0, 0.0]) == 1.0

    def test_tight_gap_zero_a_rejected(self):
        with pytest.raises(InvalidParams):
            build_tight_gap(2, 0.0, 0.2, 5)

    def test_kusner_linear_gains(self):
        P = build_kusner(2, 3, 0.1).problem
        g = lambda S: float(P.gain_set(S, [(0, 1)]))
        assert brute.gamma_nonadaptive(g, P.n_elements, (), 3, cap=10_000).value == pytest.approx(1.0)
