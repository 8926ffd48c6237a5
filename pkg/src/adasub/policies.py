"""Adaptive greedy, non-adaptive baselines and exhaustive optimal policies."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import (
    AdaptiveProblem,
    PolicyNode,
    PolicyTree,
    _key,
)
from .exceptions import BudgetExceeded, InvalidInput

TIE_RTOL = 1e-12


def argmax_lowest(values: Sequence[float], rtol: float = TIE_RTOL) -> int:
    """Index of the maximum, resolving near-ties to the lowest index.

    Values within ``rtol * max(1, |max|)`` of the maximum count as tied, so
    that mathematically equal gains computed along different floating-point
    paths still break ties by element index.
    """
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise InvalidInput("argmax of an empty sequence")
    best = float(np.max(arr))
    tol = rtol * max(1.0, abs(best))
    return int(np.flatnonzero(arr >= best - tol)[0])


@dataclass
class GreedyRun:
    selected: list = field(default_factory=list)
    observations: tuple = ()
    gains: list = field(default_factory=list)
    budget: int = 0

    @property
    def selected_set(self):
        return frozenset(self.selected)


def candidate_gains(model, candidates, psi) -> np.ndarray:
    """Expected marginal gains of ``candidates`` under ``model``.

    Uses the model's vectorized ``candidate_gains`` when it has one, otherwise
    calls ``gain_element`` per candidate.
    """
    if hasattr(model, "candidate_gains"):
        return np.asarray(model.candidate_gains(candidates, psi), dtype=float)
    return np.array([float(model.gain_element(v, psi)) for v in candidates], dtype=float)


def adaptive_greedy(model, budget: int, realization, stop_on_zero: bool = False) -> GreedyRun:
    """Run the adaptive greedy policy against a true realization.

    ``model`` is anything exposing ``n_elements``, a gain oracle
    (``gain_element(v, psi)`` or ``candidate_gains(candidates, psi)``) and
    ``observe(v, realization)``: an :class:`AdaptiveProblem` (exact gains),
    an influence instance (closed-form gains) or a feature instance
    (Monte Carlo gains).

    Exactly ``budget`` rounds are run, even when every gain is zero, unless
    ``stop_on_zero`` is set.
    """
    n = model.n_elements
    if budget < 0 or budget > n:
        raise InvalidInput(f"budget {budget} outside [0, {n}]")
    selected = []
    psi = []
    gains = []
    chosen = set()
    for _ in range(budget):
        cands = [v for v in range(n) if v not in chosen]
        g = candidate_gains(model, cands, tuple(psi))
        i = argmax_lowest(g)
        if stop_on_zero and g[i] <= 0:
            break
        v = cands[i]
        y = model.observe(v, realization)
        selected.append(v)
        chosen.add(v)
        psi.append((v, y))
        gains.append(float(g[i]))
    return GreedyRun(selected, tuple(psi), gains, budget)


def greedy_policy(problem: AdaptiveProblem, budget: int, psi=(), stop_on_zero: bool = False) -> PolicyTree:
    """The adaptive greedy policy as an explicit tree over a tabular prior."""
    n = problem.n_elements

    def build(key, depth):
        if depth == 0:
            return None
        d = {v for v, _ in key}
        cands = [v for v in range(n) if v not in d]
        if not cands:
            return None
        g = [float(problem.gain_element(v, key)) for v in cands]
        i = argmax_lowest(g)
        if stop_on_zero and g[i] <= 0:
            return None
        v = cands[i]
        return PolicyNode(v, {y: build(key | {(v, y)}, depth - 1) for y, _ in problem.branches(v, key)})

    return build(_key(psi), budget)


def non_adaptive_greedy(g: Callable[[frozenset], float], n_elements: int, budget: int) -> list:
    """Standard greedy on a set function ``g`` with lowest-index tie-breaking."""
    if budget < 0 or budget > n_elements:
        raise InvalidInput(f"budget {budget} outside [0, {n_elements}]")
    S = []
    cur = float(g(frozenset()))
    for _ in range(budget):
        cands = [v for v in range(n_elements) if v not in S]
        vals = [float(g(frozenset(S + [v]))) for v in cands]
        i = argmax_lowest([x - cur for x in vals])
        S.append(cands[i])
        cur = vals[i]
    return S


def random_policy(elements, budget: int, seed) -> list:
    """Uniform random subset of size ``budget`` (in random order), fixed by ``seed``."""
    pool = list(range(elements)) if isinstance(elements, (int, np.integer)) else list(elements)
    if budget < 0 or budget > len(pool):
        raise InvalidInput(f"budget {budget} outside [0, {len(pool)}]")
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(pool), size=budget, replace=False)
    return [pool[i] for i in idx]


def optimal_policy_exhaustive(problem: AdaptiveProblem, k: int, psi=()) -> tuple:
    """Best deterministic policy of height at most ``k`` and its f_avg.

    Dynamic programming over observation histories: the best continuation
    after a history depends only on the set of observed pairs and on the
    remaining height.  Returns ``(tree, value)`` where ``value`` is the
    expected objective E[f(dom(psi) u E(pi, Phi), Phi) | psi].
    """
    if k < 0:
        raise InvalidInput("k must be non-negative")
    n = problem.n_elements
    base = _key(psi)
    memo = {}
    visited = [0]

    def solve(key, depth):
        mk = (key, depth)
        hit = memo.get(mk)
        if hit is not None:
            return hit
        best = (0.0, None)
        if depth > 0:
            d = {v for v, _ in key}
            for v in range(n):
                if v in d:
                    continue
                visited[0] += 1
                if visited[0] > problem.cap:
                    raise BudgetExceeded(problem.cap, "optimal policy search")
                total = float(problem.gain_element(v, key))
                children = {}
                for y, q in problem.branches(v, key):
                    val, sub = solve(key | {(v, y)}, depth - 1)
                    total += q * val
                    children[y] = sub
                if total > best[0] + 1e-15 * max(1.0, abs(total)):
                    best = (total, PolicyNode(v, children))
        memo[mk] = best
        return best

    gain, tree = solve(base, k)
    r = problem.rows(base)
    p = problem.prior.probs[r]
    offset = float(np.dot(problem.values(sum(1 << v for v, _ in base))[r], p) / p.sum())
    return tree, offset + gain


def random_policy_tree(problem: AdaptiveProblem, k: int, rng: np.random.Generator, psi=(), stop_prob: float = 0.25) -> PolicyTree:
    """A random deterministic policy of height at most ``k`` (for spot checks)."""
    n = problem.n_elements

    def build(key, depth):
        if depth == 0 or rng.random() < stop_prob:
            return None
        d = {v for v, _ in key}
        cands = [v for v in range(n) if v not in d]
        if not cands:
            return None
        v = cands[int(rng.integers(len(cands)))]
        return PolicyNode(v, {y: build(key | {(v, y)}, depth - 1) for y, _ in problem.branches(v, key)})

    return build(_key(psi), k)


def greedy_value(problem: AdaptiveProblem, budget: int) -> float:
    """f_avg of the adaptive greedy policy with the given budget."""
    return float(problem.avg_value(greedy_policy(problem, budget)))


def best_nonadaptive_set(problem: AdaptiveProblem, k: int) -> tuple:
    """Exhaustive argmax of E[f(M, Phi)] over |M| <= k; returns (M, value)."""
    import itertools

    n = problem.n_elements
    best = (frozenset(), problem.expected_value(()))
    count = 0
    for size in range(1, min(k, n) + 1):
        for combo in itertools.combinations(range(n), size):
            count += 1
            if count > problem.cap:
                raise BudgetExceeded(problem.cap, "non-adaptive subset enumeration")
            val = problem.expected_value(combo)
            if val > best[1] + 1e-15 * max(1.0, abs(val)):
                best = (frozenset(combo), val)
    return best
