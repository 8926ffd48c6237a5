"""Acceptance criteria, one test each.

Every test prints a single ``PASS`` or ``FAIL`` line with its measured
figures before asserting, so ``pytest -v`` shows the full scorecard.
"""

import csv
import io
import math
import time
from collections import defaultdict

import numpy as np
import pytest

from adasub import brute
from adasub.cases import (
    build_chain,
    build_diagnosis,
    build_f4_instance,
    build_kusner,
    build_tight_gap,
    f4_matrix,
    lemma_b2_lhs,
    outcome_code,
    random_monotone_problems,
    sample_b2_vectors,
    tight_gap_grid,
)
from adasub.cli import main
from adasub.core import AdaptiveProblem, check_adaptive_submodular
from adasub.features import eigen_bounds_bruteforce, gen_random_finite
from adasub.infmax import gen_random_small, gen_star
from adasub.linalg import gram, sym_eigen_extremes
from adasub.policies import greedy_policy, optimal_policy_exhaustive

TOL = 1e-9


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {n:2d}] {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return emit


def tabular(inst):
    prior, f = inst.to_tabular()
    return AdaptiveProblem(f, prior)


def test_01_star_ratio_is_tight(report):
    t0 = time.perf_counter()
    got = {k: brute.gamma_adaptive(tabular(gen_star(k)), k).value for k in (2, 3, 4)}
    elapsed = time.perf_counter() - t0
    err = max(abs(got[k] - (k + 1) / (2 * k)) for k in got)
    ok = err <= TOL and elapsed < 60
    report(1, ok, f"gamma on stars {got}, max error {err:.2e}, {elapsed:.1f}s")
    assert ok


def test_02_triggering_lower_bound(report):
    rng = np.random.default_rng(2024)
    worst = math.inf
    bad = 0
    for _ in range(200):
        P = tabular(gen_random_small("triggering", rng, max_src=4, max_sink=3))
        for k in (2, 3):
            slack = brute.gamma_adaptive(P, k).value - (k + 1) / (2 * k)
            worst = min(worst, slack)
            bad += slack < -TOL
    ok = bad == 0
    report(2, ok, f"200 instances x k in {{2,3}}: violations {bad}, smallest slack {worst:.3e}")
    assert ok


def test_03_independent_cascade_is_submodular(report):
    rng = np.random.default_rng(3)
    worst = 1.0
    fails = 0
    for _ in range(50):
        P = tabular(gen_random_small("ic", rng))
        n = P.n_elements
        g = brute.gamma_level(P, n - 1, n).value
        worst = min(worst, g)
        fails += abs(g - 1.0) > TOL or not check_adaptive_submodular(P)
    ok = fails == 0
    report(3, ok, f"50 instances: min gamma {worst!r}, failures {fails}")
    assert ok


def test_04_greedy_guarantee(report):
    bad = 0
    worst = math.inf
    for _, P in random_monotone_problems(50, seed=4):
        for ell, k in ((1, 1), (2, 2), (3, 3)):
            res = brute.verify_greedy_bound(P, ell, k)
            worst = min(worst, res.values["greedy"] - res.values["bound"])
            bad += not res.ok
    ok = bad == 0
    report(4, ok, f"50 mixed instances x 3 (l,k): violations {bad}, smallest slack {worst:.3e}")
    assert ok


def test_05_tight_adaptivity_gap(report):
    worst = 0.0
    for k, a, p, M in tight_gap_grid():
        P = build_tight_gap(k, a, p, M).problem
        c = (k - 1) * a * p
        want = {"beta": (1 + c) / k, "gamma": k / (1 + c * M), "gap": (1 + c) / (1 + c * M)}
        got = {
            "beta": brute.beta_nonadaptive(P.expected_value, P.n_elements, (), k).value,
            "gamma": brute.gamma_adaptive(P, k).value,
            "gap": brute.adaptivity_gap_exact(P, k).value,
        }
        worst = max(worst, *(abs(got[x] - want[x]) for x in want), abs(got["gap"] - got["beta"] * got["gamma"]))
    ok = worst <= TOL
    report(5, ok, f"grid of {len(tight_gap_grid())} (k=2, p=1/M, apM in {{1,2,5}}): max error {worst:.2e}")
    assert ok


def test_06_kusner_instance(report):
    eps = 0.1
    worst = 0.0
    for k in (2, 3):
        for M in (3, 5):
            P = build_kusner(k, M, eps).problem
            g = float(P.avg_value(greedy_policy(P, k)))
            _, opt = optimal_policy_exhaustive(P, k)
            worst = max(worst, abs(g - k * (1 + eps)), abs(opt - (1 + (k - 1) * M)))
    ok = worst <= 1e-12
    report(6, ok, f"greedy and optimum on 4 instances: max error {worst:.2e}")
    assert ok


def test_07_diagnosis(report):
    P = build_diagnosis().problem
    g0 = float(P.gain_element(1))
    g1 = float(P.gain_element(1, [(0, outcome_code(-1))]))
    z = brute.zeta_star(P).value
    ok = g0 == 0.0 and g1 == 0.5 and math.isinf(z)
    report(7, ok, f"gain(v2) = {g0!r}, gain(v2 | v1=-1) = {g1!r}, zeta* = {z!r}")
    assert ok


def test_08_ill_conditioned_design(report):
    lo, hi = sym_eigen_extremes(gram(f4_matrix(4)[:, :2]))
    r = 1 / math.sqrt(2)
    P = tabular(build_f4_instance())
    z = brute.zeta_star(P).value
    lb = eigen_bounds_bruteforce(build_f4_instance(), 2).lambda_min_ell
    gamma = brute.gamma_adaptive(P, 2).value
    floor = 1 / (3 + 2 * math.sqrt(2))
    ok = abs(lo - (1 - r)) <= TOL and abs(hi - (1 + r)) <= TOL and math.isinf(z) and lb >= floor - TOL and gamma >= lb - TOL
    report(8, ok, f"eigen extremes ({lo:.12f}, {hi:.12f}), zeta* = {z!r}, bound {lb:.6f}, gamma {gamma:.6f}, floor {floor:.6f}")
    assert ok


def test_09_vector_inequality(report):
    rng = np.random.default_rng(9)
    worst = min(lemma_b2_lhs(p) for p in sample_b2_vectors(rng, 100_000, (2, 8)))
    edge = max(abs(lemma_b2_lhs(np.full(m, 1.0 / m))) for m in range(2, 9))
    ok = worst >= -1e-12 and edge <= 1e-12
    report(9, ok, f"min over 1e5 vectors {worst:.3e}, uniform boundary error {edge:.2e}")
    assert ok


def test_10_eigenvalue_bounds(report):
    rng = np.random.default_rng(10)
    bad = 0
    worst = math.inf
    for _ in range(30):
        inst = gen_random_finite(rng, max_n=4, max_m=5, max_support=2, normalize=True)
        P = tabular(inst)
        for k in (1, 2):
            for ell in (0, 1):
                lam = eigen_bounds_bruteforce(inst, k + ell).lambda_min_ell
                slack = brute.gamma_level(P, ell, k).value - lam
                worst = min(worst, slack)
                bad += slack < -TOL
            eb = eigen_bounds_bruteforce(inst, k)
            slack = brute.adaptivity_gap_exact(P, k).value - eb.lambda_min_ell / eb.lambda_max_ell
            worst = min(worst, slack)
            bad += slack < -TOL
    ok = bad == 0
    report(10, ok, f"30 instances, k in {{1,2}}, l in {{0,1}}: violations {bad}, smallest slack {worst:.3e}")
    assert ok


def test_11_chain(report):
    worst = 0.0
    over = -math.inf
    for ell, eps in ((1, 0.5), (2, 0.5), (3, 0.5), (2, 0.25), (3, 0.3), (3, 0.1)):
        case = build_chain(ell, eps)
        P = case.problem
        worst = max(
            worst,
            abs(float(P.gain_policy(case.policy)) - (ell + 1 + eps * ell)),
            abs(float(P.gain_element(0)) - (1 - (1 - eps) ** (ell + 1)) / eps),
        )
        over = max(over, brute.gamma_adaptive(P, ell).value - (1 / eps + 2 * eps * ell) / (ell + eps * ell + 1))
    ok = worst <= TOL and over <= TOL
    report(11, ok, f"gain error {worst:.2e}, largest gamma minus bound {over:.3e}")
    assert ok


def _cli_means(argv):
    # with --out set, standard output carries only the summary table
    out = io.StringIO()
    assert main(argv, stdout=out) == 0
    means = defaultdict(dict)
    for row in csv.DictReader(io.StringIO(out.getvalue())):
        means[row["algorithm"]][int(row["budget"])] = float(row["mean"])
    return means


def test_12_experiment_trends(report, tmp_path):
    t0 = time.perf_counter()
    lines = []
    ok = True
    for model in ("lt", "elt"):
        m = _cli_means(["infmax", "--model", model, "--t", "3", "--n-src", "100", "--n-sink", "100", "--edge-prob", "0.01",
                        "--k", "25", "--trials", "20", "--seed", "12", "--out", str(tmp_path / f"{model}.csv")])
        for b in (5, 10, 15, 20, 25):
            a, n, r = m["adaptive"][b], m["non-adaptive"][b], m["random"][b]
            ok &= a >= n >= r
        lines.append(f"{model} at 25: adaptive {m['adaptive'][25]:.3f} >= non-adaptive {m['non-adaptive'][25]:.3f} >= random {m['random'][25]:.3f}")
    for sigma in ("0.1", "0.2"):
        m = _cli_means(["feature", "--n", "200", "--m", "50", "--sigma", sigma, "--k", "30", "--trials", "20", "--seed", "12",
                        "--out", str(tmp_path / f"f{sigma}.csv")])
        ok &= m["adaptive"][30] >= m["noise-oblivious"][30]
        lines.append(f"sigma {sigma} at 30: adaptive {m['adaptive'][30]:.3f} >= oblivious {m['noise-oblivious'][30]:.3f}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 600
    report(12, ok, "; ".join(lines) + f"; {elapsed:.0f}s")
    assert ok


def test_13_cli_determinism(report, tmp_path):
    commands = [
        ["infmax", "--model", "ic", "--n-src", "40", "--n-sink", "40", "--edge-prob", "0.05", "--k", "8", "--trials", "3"],
        ["infmax", "--model", "lt", "--n-src", "40", "--n-sink", "40", "--edge-prob", "0.05", "--k", "8", "--trials", "3"],
        ["infmax", "--model", "elt", "--n-src", "40", "--n-sink", "40", "--edge-prob", "0.05", "--k", "8", "--trials", "3"],
        ["feature", "--n", "30", "--m", "20", "--sparsity", "5", "--k", "6", "--trials", "3", "--samples", "16"],
        ["ratio", "--instance", "lt-random"],
        ["ratio", "--instance", "star", "--k", "3"],
        ["ratio", "--instance", "chain", "--k", "2"],
    ]
    mismatched = []
    for i, argv in enumerate(commands):
        blobs = []
        for rep in range(2):
            path = tmp_path / f"{i}-{rep}.csv"
            out = io.StringIO()
            assert main(argv + ["--seed", "13", "--out", str(path)], stdout=out) == 0
            blob = path.read_bytes()
            summary = tmp_path / f"{i}-{rep}.csv.summary.csv"
            if summary.exists():
                blob += summary.read_bytes()
            blobs.append((blob, out.getvalue()))
        if blobs[0] != blobs[1]:
            mismatched.append(argv[0])
    for _ in range(2):
        out = io.StringIO()
        main(["verify", "ygo"], stdout=out)
        blobs.append(out.getvalue())
    if blobs[-1] != blobs[-2]:
        mismatched.append("verify")
    ok = not mismatched
    report(13, ok, f"{len(commands) + 1} commands run twice, mismatches: {mismatched or 'none'}")
    assert ok
