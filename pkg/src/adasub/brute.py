"""Exact oracles for ratio and gap quantities on small tabular instances.

The adaptive submodularity ratio is a minimum of a ratio of two sums over
policy trees.  Both sums decompose over tree nodes, so for a fixed trial
value ``g`` the quantity ``min_pi numerator(pi) - g * denominator(pi)`` is a
dynamic program over observation histories.  Dinkelbach iteration on ``g``
then reaches the minimum ratio in a handful of passes.  Explicit policy
enumeration is kept as a slower cross-check.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

import numpy as np

from .core import AdaptiveProblem, PolicyNode, PolicyTree, _key
from .exceptions import BudgetExceeded, InconsistentObservation, InvalidInput
from .policies import best_nonadaptive_set, greedy_policy, optimal_policy_exhaustive

ZERO_ATOL = 1e-12
MAX_DINKELBACH = 200


@dataclass
class MetricReport:
    value: float
    kind: str
    witness: Optional[tuple] = None
    skipped: int = 0
    details: dict = field(default_factory=dict)

    def __float__(self):
        return float(self.value)

    def __repr__(self):
        return f"MetricReport({self.kind}={self.value!r}, witness={self.witness!r})"


def _scale(problem: AdaptiveProblem) -> float:
    full = (1 << problem.n_elements) - 1
    return max(1.0, float(np.max(np.abs(problem.values(full)))))


def _ratio(num: float, den: float, atol: float) -> float:
    """num / den with 0/0 = 1 and x/0 = +inf for x > 0 (and -inf for x < 0)."""
    if abs(den) <= atol:
        if abs(num) <= atol:
            return 1.0
        return math.inf if num > 0 else -math.inf
    return num / den


# -- adaptive submodularity ratio ------------------------------------------


def policy_ratio(problem: AdaptiveProblem, tree: PolicyTree, psi=()) -> float:
    """The ratio inside the adaptive submodularity ratio for one policy."""
    key = _key(psi)
    incl = problem.inclusion_probabilities(tree, key)
    base = np.array([float(problem.gain_element(v, key)) for v in range(problem.n_elements)])
    num = float(np.dot(incl, base))
    den = float(problem.gain_policy(tree, key))
    return _ratio(num, den, ZERO_ATOL * _scale(problem))


def _dinkelbach(problem: AdaptiveProblem, base: frozenset, k: int, counter: list) -> tuple:
    n = problem.n_elements
    g0 = {v: float(problem.gain_element(v, base)) for v in range(n)}
    tol = 1e-15 * _scale(problem)

    def solve(gamma):
        memo = {}

        def J(hist, d):
            mk = (hist, d)
            hit = memo.get(mk)
            if hit is not None:
                return hit
            best = (0.0, None, 0.0, 0.0)
            if d > 0:
                full = base | hist
                seen = {v for v, _ in full}
                for v in range(n):
                    if v in seen:
                        continue
                    counter[0] += 1
                    if counter[0] > problem.cap:
                        raise BudgetExceeded(problem.cap, "adaptive ratio search")
                    num = g0[v]
                    den = float(problem.gain_element(v, full))
                    children = {}
                    for y, q in problem.branches(v, full):
                        cv, ct, cn, cd = J(hist | {(v, y)}, d - 1)
                        num += q * cn
                        den += q * cd
                        children[y] = ct
                    val = num - gamma * den
                    if val < best[0]:
                        best = (val, PolicyNode(v, children), num, den)
            memo[mk] = best
            return best

        return J(frozenset(), k)

    gamma, witness = 1.0, None
    for _ in range(MAX_DINKELBACH):
        val, tree, num, den = solve(gamma)
        if val >= -tol or den <= 0:
            break
        new = num / den
        if new >= gamma:
            break
        gamma, witness = new, tree
    return gamma, witness


def gamma_adaptive(problem: AdaptiveProblem, k: int, psi=()) -> MetricReport:
    """gamma_{psi,k}: minimum over psi' contained in psi and policies of height <= k.

    The witness is ``(psi', tree)``; a ``None`` tree means the minimum is the
    trivial value 1.
    """
    if k < 0:
        raise InvalidInput("k must be non-negative")
    key = _key(psi)
    if problem.prob(key) <= 0:
        raise InconsistentObservation(f"partial realization {sorted(key)} has zero probability")
    pairs = sorted(key)
    counter = [0]
    best, witness = 1.0, (frozenset(), None)
    for r in range(len(pairs) + 1):
        for sub in itertools.combinations(pairs, r):
            sub = frozenset(sub)
            val, tree = _dinkelbach(problem, sub, k, counter)
            if val < best:
                best, witness = val, (sub, tree)
    return MetricReport(best, "gamma_adaptive", witness, details={"visited": counter[0]})


def gamma_level(problem: AdaptiveProblem, level: int, k: int) -> MetricReport:
    """gamma_{l,k}: minimum of gamma_{psi,k} over positive-probability |psi| <= l."""
    if level < 0 or k < 0:
        raise InvalidInput("level and k must be non-negative")
    counter = [0]
    best, witness = 1.0, (frozenset(), None)
    for key in problem.partial_realizations(max_size=level):
        val, tree = _dinkelbach(problem, key, k, counter)
        if val < best:
            best, witness = val, (key, tree)
    return MetricReport(best, "gamma_level", witness, details={"visited": counter[0]})


def enumerate_policies(problem: AdaptiveProblem, k: int, psi=()) -> Iterator[PolicyTree]:
    """Every deterministic policy of height <= k, branching on positive-probability states.

    The empty policy comes first.
    """
    n = problem.n_elements
    count = [0]

    def gen(key, d):
        yield None
        if d == 0:
            return
        seen = {v for v, _ in key}
        for v in range(n):
            if v in seen:
                continue
            ys = [y for y, _ in problem.branches(v, key)]
            subs = [list(gen(key | {(v, y)}, d - 1)) for y in ys]
            for combo in itertools.product(*subs):
                count[0] += 1
                if count[0] > problem.cap:
                    raise BudgetExceeded(problem.cap, "policy enumeration")
                yield PolicyNode(v, dict(zip(ys, combo)))

    yield from gen(_key(psi), k)


def gamma_adaptive_enum(problem: AdaptiveProblem, k: int, psi=()) -> MetricReport:
    """Same quantity as :func:`gamma_adaptive`, by listing every policy."""
    key = _key(psi)
    pairs = sorted(key)
    best, witness = 1.0, (frozenset(), None)
    for r in range(len(pairs) + 1):
        for sub in itertools.combinations(pairs, r):
            sub = frozenset(sub)
            for tree in enumerate_policies(problem, k, sub):
                if tree is None:
                    continue
                val = policy_ratio(problem, tree, sub)
                if val < best:
                    best, witness = val, (sub, tree)
    return MetricReport(best, "gamma_adaptive", witness)


# -- set-function ratios ---------------------------------------------------


def _set_ratio(g: Callable[[frozenset], float], n_elements: int, U, k: int, kind: str, cap: Optional[int]) -> MetricReport:
    from .core import default_cap

    cap = default_cap() if cap is None else cap
    U = sorted(set(U))
    cache = {}

    def G(S):
        S = frozenset(S)
        if S not in cache:
            cache[S] = float(g(S))
        return cache[S]

    scale = max(1.0, abs(G(range(n_elements))))
    atol = ZERO_ATOL * scale
    best, witness = 1.0, None
    count = 0
    for r in range(len(U) + 1):
        for L in itertools.combinations(U, r):
            L = frozenset(L)
            gl = G(L)
            rest = [v for v in range(n_elements) if v not in L]
            single = {v: G(L | {v}) - gl for v in rest}
            for size in range(1, min(k, len(rest)) + 1):
                for S in itertools.combinations(rest, size):
                    count += 1
                    if count > cap:
                        raise BudgetExceeded(cap, f"{kind} enumeration")
                    tot = sum(single[v] for v in S)
                    joint = G(L | set(S)) - gl
                    val = _ratio(tot, joint, atol) if kind == "gamma_nonadaptive" else _ratio(joint, tot, atol)
                    if math.isinf(val):
                        continue
                    if val < best:
                        best, witness = val, (L, frozenset(S))
    return MetricReport(best, kind, witness)


def gamma_nonadaptive(g, n_elements: int, U=(), k: int = 1, cap=None) -> MetricReport:
    """Submodularity ratio of a set function ``g`` over ``L`` within ``U`` and ``|S| <= k``."""
    return _set_ratio(g, n_elements, U, k, "gamma_nonadaptive", cap)


def beta_nonadaptive(g, n_elements: int, U=(), k: int = 1, cap=None) -> MetricReport:
    """Supermodularity ratio: min of g(S|L) over the sum of singleton gains."""
    return _set_ratio(g, n_elements, U, k, "beta", cap)


def gamma_kusner(problem: AdaptiveProblem, k: Optional[int] = None) -> MetricReport:
    """Approximate adaptive submodularity constant of the set-based kind.

    Minimum over positive-probability psi and sets S outside dom(psi) of
    sum_v Delta(v|psi) / Delta(S|psi).
    """
    n = problem.n_elements
    atol = ZERO_ATOL * _scale(problem)
    best, witness = 1.0, None
    count = 0
    for key in problem.partial_realizations(max_size=n - 1):
        seen = {v for v, _ in key}
        rest = [v for v in range(n) if v not in seen]
        single = {v: float(problem.gain_element(v, key)) for v in rest}
        top = len(rest) if k is None else min(k, len(rest))
        for size in range(2, top + 1):
            for S in itertools.combinations(rest, size):
                count += 1
                if count > problem.cap:
                    raise BudgetExceeded(problem.cap, "set ratio enumeration")
                val = _ratio(sum(single[v] for v in S), float(problem.gain_set(S, key)), atol)
                if not math.isinf(val) and val < best:
                    best, witness = val, (key, frozenset(S))
    return MetricReport(best, "gamma_kusner", witness)


# -- weak adaptive submodularity -------------------------------------------


def zeta_star(problem: AdaptiveProblem) -> MetricReport:
    """Largest Delta(v|psi') / Delta(v|psi) over psi within psi' and v outside dom(psi')."""
    n = problem.n_elements
    atol = ZERO_ATOL * _scale(problem)
    best, witness = 1.0, None
    count = 0
    for big in problem.partial_realizations(max_size=n - 1):
        seen = {v for v, _ in big}
        outside = [v for v in range(n) if v not in seen]
        pairs = sorted(big)
        for r in range(len(pairs)):
            for small in itertools.combinations(pairs, r):
                small = frozenset(small)
                for v in outside:
                    count += 1
                    if count > problem.cap:
                        raise BudgetExceeded(problem.cap, "weak submodularity search")
                    val = _ratio(float(problem.gain_element(v, big)), float(problem.gain_element(v, small)), atol)
                    if val > best:
                        best, witness = val, (small, big, v)
                        if math.isinf(val):
                            return MetricReport(best, "zeta_star", witness)
    return MetricReport(best, "zeta_star", witness)


# -- adaptivity gap and guarantee checks -----------------------------------


def adaptivity_gap_exact(problem: AdaptiveProblem, k: int) -> MetricReport:
    """Best non-adaptive value over the best adaptive value, both at budget k."""
    M, nonadaptive = best_nonadaptive_set(problem, k)
    tree, adaptive = optimal_policy_exhaustive(problem, k)
    gap = 1.0 if adaptive <= 0 else nonadaptive / adaptive
    return MetricReport(gap, "gap", (M, tree), details={"nonadaptive": nonadaptive, "adaptive": adaptive})


def _require_normalized(problem: AdaptiveProblem):
    # the guarantees assume f(empty, .) = 0 and f >= 0
    full = (1 << problem.n_elements) - 1
    if not problem.check_normalized() or np.any(problem.values(full) < -ZERO_ATOL * _scale(problem)):
        raise InvalidInput("guarantee checks need f(empty set) = 0 and a non-negative objective")


@dataclass
class BoundCheck:
    ok: bool
    values: dict

    def __bool__(self):
        return self.ok


def verify_gap_bound(problem: AdaptiveProblem, k: int, atol: float = 1e-9) -> BoundCheck:
    """Check GAP_k >= beta_{0,k} * gamma_{0,k} on the instance."""
    _require_normalized(problem)
    beta = beta_nonadaptive(problem.expected_value, problem.n_elements, (), k, problem.cap).value
    gamma = gamma_adaptive(problem, k).value
    gap = adaptivity_gap_exact(problem, k).value
    return BoundCheck(gap >= beta * gamma - atol, {"gap": gap, "beta": beta, "gamma": gamma})


def verify_zeta_vs_gamma(problem: AdaptiveProblem, k: int, atol: float = 1e-9) -> BoundCheck:
    """Check 1/zeta* <= min over psi of gamma_{psi,k}."""
    _require_normalized(problem)
    zeta = zeta_star(problem).value
    gamma = gamma_level(problem, problem.n_elements - 1, k).value
    inv = 0.0 if math.isinf(zeta) else 1.0 / zeta
    return BoundCheck(inv <= gamma + atol, {"zeta": zeta, "inv_zeta": inv, "gamma": gamma})


def verify_greedy_bound(problem: AdaptiveProblem, ell: int, k: int, atol: float = 1e-9) -> BoundCheck:
    """Check f_avg(greedy, l) >= (1 - exp(-gamma_{l,k} l / k)) f_avg(optimal in height k)."""
    _require_normalized(problem)
    greedy = float(problem.avg_value(greedy_policy(problem, ell)))
    _, opt = optimal_policy_exhaustive(problem, k)
    gamma = gamma_level(problem, ell, k).value
    bound = (1.0 - math.exp(-gamma * ell / k)) * opt if k > 0 else 0.0
    return BoundCheck(greedy >= bound - atol, {"greedy": greedy, "optimal": opt, "gamma": gamma, "bound": bound})
