"""Constructed instances with known answers, and verifiers that check them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import brute
from .core import (
    AdaptiveProblem,
    Objective,
    PolicyNode,
    Realization,
    TabularPrior,
)
from .exceptions import InvalidInput, InvalidParams, UnknownCase
from .features import (
    FeatureInstance,
    FiniteColumnPrior,
    gen_random_finite,
    ratio_lower_bound,
)
from .infmax import gen_random_small, gen_star
from .linalg import gram, sym_eigen_extremes
from .policies import greedy_policy, optimal_policy_exhaustive

EXACT_TOL = 1e-12
TOL = 1e-9


@dataclass
class Case:
    """A built instance: the problem plus whatever closed forms go with it."""

    problem: AdaptiveProblem
    closed: dict = field(default_factory=dict)
    policy: Optional[PolicyNode] = None
    labels: Optional[list] = None

    @property
    def prior(self) -> TabularPrior:
        return self.problem.prior

    @property
    def objective(self) -> Objective:
        return self.problem.objective


# -- tight adaptivity gap --------------------------------------------------


def build_tight_gap(k: int, a: float, p: float, M: int) -> Case:
    """Instance where the gap equals the product of the two ratios.

    Element 0 is the switch ``u`` with states 0..M; the group of state ``i``
    occupies elements ``1 + (i-1)k .. ik``.  Parameters must keep both
    closed-form ratios within (0, 1], that is ``a p M >= 1`` and ``a p <= 1``.
    """
    if k < 1 or M < 1 or a < 0 or not 0 <= p <= 1.0 / M + 1e-15:
        raise InvalidParams("need k >= 1, M >= 1, a >= 0 and 0 <= p <= 1/M")
    if (k - 1) * a * p * M < k - 1 or a * p > 1 + 1e-15:
        raise InvalidParams("closed-form ratios leave (0, 1]: need a*p*M >= 1 and a*p <= 1")
    n = 1 + M * k
    group = np.zeros(n, dtype=np.int64)
    for i in range(1, M + 1):
        group[1 + (i - 1) * k : 1 + i * k] = i
    support = []
    if 1 - p * M > 1e-15:
        support.append((Realization([0] * n), 1 - p * M))
    for y in range(1, M + 1):
        if p > 0:
            support.append((Realization([y] + [0] * (n - 1)), p))
    prior = TabularPrior(support, n_states=[M + 1] + [1] * (n - 1))

    def fn(S, phi):
        if not S:
            return 0.0
        if 0 in S:
            y = phi[0]
            return 1.0 + a * sum(1 for v in S if v and y and group[v] == y)
        return 1.0 + a * p * (len(S) - 1)

    c = (k - 1) * a * p
    # A policy may stop once u shows state 0, which is what the brute-force
    # minimum does; its ratio reduces to k / (1 + c M) exactly when p M = 1.
    closed = {
        "beta": (1 + c) / k,
        "gamma": (1 + (k - 1) * p * M) / (1 + c * M),
        "gamma_full": k / (1 + c * M),
        "gap": (1 + c) / (1 + c * M),
    }
    return Case(AdaptiveProblem(Objective(fn, name="tight_gap"), prior), closed)


def tight_gap_grid(k: int = 2, products=(1, 2, 5), Ms=(5, 6, 8)) -> list:
    """(k, a, p, M) on a grid of a*p*M values with p = 1/M, where the gap is tight."""
    out = []
    for apm in products:
        for M in Ms:
            p = 1.0 / M
            out.append((k, apm / (p * M), p, M))
    return out


# -- approximate adaptive submodularity counterexample ---------------------


def build_kusner(k: int, M: int, eps: float) -> Case:
    """Linear-gain instance on which greedy is far from optimal.

    Elements: ``u`` (index 0), ``z_1..z_k`` (1..k), then ``v_i^y`` for
    ``i < k`` and ``y < M`` at index ``1 + k + (i-1)M + y``.
    """
    if k < 2 or M < 2 or eps <= 0:
        raise InvalidParams("need k >= 2, M >= 2 and eps > 0")
    n = 1 + k + (k - 1) * M
    labels = ["u"] + [f"z{i}" for i in range(1, k + 1)] + [f"v{i}^{y}" for i in range(1, k) for y in range(M)]
    rows = []
    for y in range(M):
        phi = [0] * n
        phi[0] = y
        for i in range(1, k):
            phi[1 + k + (i - 1) * M + y] = 1
        rows.append((Realization(phi), 1.0 / M))
    prior = TabularPrior(rows, n_states=[M] + [1] * k + [2] * ((k - 1) * M))

    def fn(S, phi):
        total = 0.0
        for v in S:
            if v == 0:
                total += 1.0
            elif v <= k:
                total += 1.0 + eps
            elif phi[v] == 1:
                total += M
        return total

    closed = {"greedy": k * (1 + eps), "optimal": 1.0 + (k - 1) * M}
    return Case(AdaptiveProblem(Objective(fn, name="kusner"), prior), closed, labels=labels)


# -- non-bipartite chain ---------------------------------------------------


def build_chain(ell: int, eps: float, cap=None) -> Case:
    """Threshold chain u_0 -> ... -> u_l with side sources v_i -> u_i.

    Each u_i (i >= 1) has exactly one live in-edge: from u_{i-1} with
    probability 1 - eps, from v_i otherwise.  Every vertex weighs 1 and
    feedback reveals everything reached.  Element 0 is u_0 with state equal
    to the index of the last activated chain vertex.  Element i >= 1 is v_i
    with state 0 if its edge is dead, else 1 + the number of further chain
    vertices reached past u_i.
    """
    if ell < 1 or not 0 < eps < 1:
        raise InvalidParams("need l >= 1 and 0 < eps < 1")
    rows = []
    for bits in range(1 << ell):
        side = [(bits >> (i - 1)) & 1 == 1 for i in range(1, ell + 1)]  # True: v_i's edge is live
        prob = math.prod(eps if s else 1 - eps for s in side)

        def run(start):
            j = start
            while j < ell and not side[j]:
                j += 1
            return j

        state = [run(0)]
        for i in range(1, ell + 1):
            state.append(1 + run(i) - i if side[i - 1] else 0)
        rows.append((Realization(state, latent=tuple(side)), prob))
    prior = TabularPrior(rows, n_states=[ell + 1] + [ell + 2 - i for i in range(1, ell + 1)])

    def fn(S, phi):
        reached = set()
        if 0 in S:
            reached.update(range(0, phi[0] + 1))
        for i in S:
            if i and phi[i]:
                reached.update(range(i, i + phi[i]))
        return float(len(reached) + sum(1 for i in S if i))

    problem = AdaptiveProblem(Objective(fn, name="chain"), prior, cap=cap)

    def build(front, key):
        if front == ell:
            return None
        v = front + 1
        return PolicyNode(v, {y: build(v + y - 1, key | {(v, y)}) for y, _ in problem.branches(v, key)})

    policy = PolicyNode(0, {y: build(y, frozenset({(0, y)})) for y, _ in problem.branches(0, ())})
    closed = {
        "policy_gain": ell + 1 + eps * ell,
        "gain_u0": (1 - (1 - eps) ** (ell + 1)) / eps,
        "gamma_upper": (1 / eps + 2 * eps * ell) / (ell + eps * ell + 1),
    }
    return Case(problem, closed, policy)


def chain_gamma_bound(ell: int, eps: float) -> float:
    return (1 / eps + 2 * eps * ell) / (ell + eps * ell + 1)


# -- group-based active diagnosis ------------------------------------------

# outcome table: (x, q) -> (mu(v1), mu(v2)); +1 is code 0, -1 is code 1
DIAGNOSIS_TABLE = {
    (0, 0): (+1, +1),
    (0, 1): (+1, -1),
    (0, 2): (-1, +1),
    (1, 0): (+1, +1),
    (1, 1): (+1, -1),
    (1, 2): (-1, -1),
}


def outcome_code(y: int) -> int:
    return 0 if y == +1 else 1


def build_diagnosis() -> Case:
    """Two tests, two hidden states, three modes, uniform joint prior.

    The objective is one minus the prior mass of states that remain
    consistent with the observed outcomes: a state ``x'`` survives if some
    mode reproduces every outcome seen so far.
    """
    rows = [(Realization([outcome_code(a), outcome_code(b)], latent=xq), 1.0 / 6) for xq, (a, b) in DIAGNOSIS_TABLE.items()]
    prior = TabularPrior(rows, n_states=[2, 2])
    p_state = {0: 0.5, 1: 0.5}

    def fn(S, phi):
        seen = [(v, phi[v]) for v in sorted(S)]
        alive = 0.0
        for x in (0, 1):
            if any(all(outcome_code(DIAGNOSIS_TABLE[(x, q)][v]) == y for v, y in seen) for q in range(3)):
                alive += p_state[x]
        return 1.0 - alive

    return Case(AdaptiveProblem(Objective(fn, name="diagnosis"), prior))


# -- ill-conditioned regression design -------------------------------------


def f4_matrix(n: int) -> np.ndarray:
    if n < 3:
        raise InvalidParams("need n >= 3")
    A = np.eye(n)
    A[:, 1] = 0.0
    A[0, 1] = A[1, 1] = 1 / math.sqrt(2)
    return A


def build_f4_instance(n: int = 4, a: float = 1.0) -> FeatureInstance:
    """Deterministic design e1, (e1+e2)/sqrt2, e3..en with response (0, a, ..., a)."""
    if a <= 0:
        raise InvalidParams("need a > 0")
    A = f4_matrix(n)
    b = np.full(n, float(a))
    b[0] = 0.0
    return FeatureInstance(b, FiniteColumnPrior([[(A[:, v], 1.0)] for v in range(n)]))


# -- vector inequality -----------------------------------------------------


def lemma_b2_lhs(p) -> float:
    """sum(p) - m/(m-1) * sum_{i != j} p_i p_j for a feasible vector ``p``."""
    p = np.asarray(p, dtype=float).ravel()
    m = p.size
    if m < 2:
        raise InvalidInput("need at least two entries")
    if np.any(p < -1e-15) or np.any(p > 1 + 1e-15) or p.sum() > 1 + 1e-12:
        raise InvalidInput("entries must lie in [0, 1] with total at most 1")
    s = float(p.sum())
    cross = s * s - float(p @ p)
    return s - m / (m - 1) * cross


def sample_b2_vectors(rng: np.random.Generator, count: int, m_range=(2, 8)) -> list:
    """Random feasible vectors: Dirichlet draws of length m+1 with the slack dropped."""
    out = []
    for _ in range(count):
        m = int(rng.integers(m_range[0], m_range[1] + 1))
        out.append(rng.dirichlet(np.ones(m + 1))[:m])
    return out


# -- verifiers -------------------------------------------------------------


@dataclass
class Check:
    label: str
    value: object
    expected: object
    ok: bool


@dataclass
class CaseReport:
    name: str
    checks: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def add(self, label, value, expected, ok):
        self.checks.append(Check(label, value, expected, bool(ok)))

    def lines(self) -> list:
        out = [f"{'PASS' if c.ok else 'FAIL'}  {c.label}: {c.value!r} (expected {c.expected})" for c in self.checks]
        out.append(f"{self.name}: {'PASS' if self.ok else 'FAIL'}")
        return out


def verify_tightgap(grid=None) -> CaseReport:
    rep = CaseReport("tightgap")
    for k, a, p, M in grid or tight_gap_grid():
        case = build_tight_gap(k, a, p, M)
        P = case.problem
        beta = brute.beta_nonadaptive(P.expected_value, P.n_elements, (), k).value
        gamma = brute.gamma_adaptive(P, k).value
        gap = brute.adaptivity_gap_exact(P, k).value
        tag = f"k={k} a={a:g} p={p:g} M={M}"
        for name, val in (("beta", beta), ("gamma", gamma), ("gamma_full", gamma), ("gap", gap)):
            rep.add(f"{name} {tag}", val, case.closed[name], abs(val - case.closed[name]) <= TOL)
        rep.add(f"gap = beta*gamma {tag}", gap, beta * gamma, abs(gap - beta * gamma) <= TOL)
    return rep


def verify_kusner(params=((2, 3), (2, 5), (3, 3), (3, 5)), eps: float = 0.1) -> CaseReport:
    rep = CaseReport("kusner")
    for k, M in params:
        case = build_kusner(k, M, eps)
        P = case.problem
        g = float(P.avg_value(greedy_policy(P, k)))
        _, opt = optimal_policy_exhaustive(P, k)
        rep.add(f"greedy k={k} M={M}", g, case.closed["greedy"], abs(g - case.closed["greedy"]) <= EXACT_TOL)
        rep.add(f"optimal k={k} M={M}", opt, case.closed["optimal"], abs(opt - case.closed["optimal"]) <= EXACT_TOL)
    P = build_kusner(2, 3, eps).problem
    gk = brute.gamma_kusner(P).value
    rep.add("set-based ratio k=2 M=3", gk, 1.0, abs(gk - 1.0) <= TOL)
    return rep


def verify_ygo() -> CaseReport:
    rep = CaseReport("ygo")
    P = build_diagnosis().problem
    g0 = float(P.gain_element(1, ()))
    g1 = float(P.gain_element(1, [(0, outcome_code(-1))]))
    z = brute.zeta_star(P).value
    rep.add("gain of v2 at start", g0, 0.0, abs(g0) <= EXACT_TOL)
    rep.add("gain of v2 after v1=-1", g1, 0.5, abs(g1 - 0.5) <= EXACT_TOL)
    rep.add("zeta*", z, math.inf, math.isinf(z))
    return rep


def verify_chain(params=((1, 0.5), (2, 0.5), (3, 0.5), (2, 0.25), (3, 0.3))) -> CaseReport:
    rep = CaseReport("chain")
    for ell, eps in params:
        case = build_chain(ell, eps)
        P = case.problem
        gp = float(P.gain_policy(case.policy))
        gu = float(P.gain_element(0))
        gamma = brute.gamma_adaptive(P, ell).value
        tag = f"l={ell} eps={eps:g}"
        rep.add(f"policy gain {tag}", gp, case.closed["policy_gain"], abs(gp - case.closed["policy_gain"]) <= TOL)
        rep.add(f"gain of u0 {tag}", gu, case.closed["gain_u0"], abs(gu - case.closed["gain_u0"]) <= TOL)
        rep.add(f"gamma <= bound {tag}", gamma, case.closed["gamma_upper"], gamma <= case.closed["gamma_upper"] + TOL)
    return rep


def verify_f4(n: int = 4, a: float = 1.0) -> CaseReport:
    rep = CaseReport("f4")
    inst = build_f4_instance(n, a)
    A = f4_matrix(n)
    lo, hi = sym_eigen_extremes(gram(A[:, :2]))
    r = 1 / math.sqrt(2)
    rep.add("lambda_min of first two columns", lo, 1 - r, abs(lo - (1 - r)) <= TOL)
    rep.add("lambda_max of first two columns", hi, 1 + r, abs(hi - (1 + r)) <= TOL)
    prior, f = inst.to_tabular()
    P = AdaptiveProblem(f, prior)
    z = brute.zeta_star(P).value
    rep.add("zeta*", z, math.inf, math.isinf(z))
    floor = 1 / (3 + 2 * math.sqrt(2))
    lb = ratio_lower_bound(inst, 0, 2)
    gamma = brute.gamma_adaptive(P, 2).value
    rep.add("eigenvalue ratio bound", lb, f">= {floor:.6f}", lb >= floor - TOL)
    rep.add("gamma", gamma, f">= {floor:.6f}", gamma >= floor - TOL and gamma >= lb - TOL)
    return rep


def verify_lemma_b2(samples: int = 100_000, seed: int = 0) -> CaseReport:
    rep = CaseReport("lemma-b2")
    rng = np.random.default_rng(seed)
    worst = min(lemma_b2_lhs(p) for p in sample_b2_vectors(rng, samples))
    rep.add(f"min over {samples} random vectors", worst, ">= -1e-12", worst >= -EXACT_TOL)
    for m in range(2, 9):
        v = lemma_b2_lhs(np.full(m, 1.0 / m))
        rep.add(f"uniform vector m={m}", v, 0.0, abs(v) <= EXACT_TOL)
    return rep


def random_monotone_problems(count: int, seed: int = 0) -> list:
    """Mixed small influence and finite-feature instances as tabular problems."""
    rng = np.random.default_rng(seed)
    kinds = ("ic", "lt", "elt", "triggering", "feature")
    out = []
    for i in range(count):
        kind = kinds[i % len(kinds)]
        inst = gen_random_finite(rng) if kind == "feature" else gen_random_small(kind, rng)
        prior, f = inst.to_tabular()
        out.append((kind, AdaptiveProblem(f, prior)))
    return out


def verify_greedy_bound(count: int = 50, seed: int = 0, pairs=((1, 1), (2, 2), (3, 3))) -> CaseReport:
    rep = CaseReport("greedy-bound")
    bad = 0
    worst = math.inf
    for kind, P in random_monotone_problems(count, seed):
        for ell, k in pairs:
            if k > P.n_elements:
                continue
            res = brute.verify_greedy_bound(P, ell, k)
            worst = min(worst, res.values["greedy"] - res.values["bound"])
            bad += not res.ok
    rep.add(f"{count} instances, violations", bad, 0, bad == 0)
    rep.add("smallest slack", worst, ">= -1e-9", worst >= -TOL)
    return rep


def verify_gap_bound(count: int = 20, seed: int = 1) -> CaseReport:
    rep = CaseReport("gap-bound")
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(count):
        prior, f = gen_random_small("lt", rng).to_tabular()
        P = AdaptiveProblem(f, prior)
        k = min(2, P.n_elements)
        bad += not brute.verify_gap_bound(P, k)
    rep.add(f"{count} random threshold instances, violations", bad, 0, bad == 0)
    case = build_tight_gap(2, 5.0, 0.2, 5)
    res = brute.verify_gap_bound(case.problem, 2)
    prod = res.values["beta"] * res.values["gamma"]
    rep.add("tight instance gap", res.values["gap"], prod, abs(res.values["gap"] - prod) <= TOL)
    return rep


def verify_zeta_vs_gamma(count: int = 20, seed: int = 2) -> CaseReport:
    rep = CaseReport("zeta-vs-gamma")
    inst = gen_star(3)
    prior, f = inst.to_tabular()
    res = brute.verify_zeta_vs_gamma(AdaptiveProblem(f, prior), 3)
    rep.add("star k=3 1/zeta*", res.values["inv_zeta"], "<= 1/3", res.values["inv_zeta"] <= 1 / 3 + TOL)
    rep.add("star k=3 gamma", res.values["gamma"], ">= 2/3", res.values["gamma"] >= 2 / 3 - TOL)
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(count):
        prior, f = gen_random_small("lt", rng).to_tabular()
        P = AdaptiveProblem(f, prior)
        bad += not brute.verify_zeta_vs_gamma(P, min(2, P.n_elements))
    rep.add(f"{count} random threshold instances, violations", bad, 0, bad == 0)
    return rep


VERIFIERS: dict = {
    "tightgap": verify_tightgap,
    "kusner": verify_kusner,
    "ygo": verify_ygo,
    "chain": verify_chain,
    "f4": verify_f4,
    "lemma-b2": verify_lemma_b2,
    "greedy-bound": verify_greedy_bound,
    "gap-bound": verify_gap_bound,
    "zeta-vs-gamma": verify_zeta_vs_gamma,
}


def run_verifier(name: str) -> CaseReport:
    try:
        fn: Callable[[], CaseReport] = VERIFIERS[name]
    except KeyError:
        raise UnknownCase(f"unknown case {name!r}; choose from {', '.join(VERIFIERS)}") from None
    return fn()
