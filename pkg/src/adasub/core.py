"""Realizations, tabular priors, policy trees and exact expectation operators.

Everything here works on a :class:`TabularPrior`, an explicit finite list of
realizations with probabilities.  Realizations map element indices
``0..n-1`` to small integer state codes.  A partial realization is any
iterable of ``(element, state)`` pairs; internally it is keyed by the
frozenset of its pairs, since posteriors depend only on which pairs were
observed and not on their order.

The :class:`AdaptiveProblem` bundles an objective with a prior and caches
objective values and conditional gains, so that exhaustive searches in
:mod:`adasub.policies` and :mod:`adasub.brute` stay cheap.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping, Optional, Sequence

import numpy as np

from .exceptions import (
    BudgetExceeded,
    ElementReuse,
    InconsistentObservation,
    InvalidInput,
    MissingBranch,
)

PROB_ATOL = 1e-12
VALUE_RTOL = 1e-9
DEFAULT_CAP = 2_000_000


def default_cap() -> int:
    """Enumeration cap; ``ADASUB_CAP`` overrides the built-in default."""
    raw = os.environ.get("ADASUB_CAP")
    if raw:
        return int(raw)
    return DEFAULT_CAP


class ExpectedGain(float):
    """A float carrying how it was estimated.

    ``sample_count == 0`` means the value is an exact expectation.
    """

    def __new__(cls, value, sample_count=0, stderr=0.0):
        obj = super().__new__(cls, value)
        obj.sample_count = int(sample_count)
        obj.stderr = float(stderr)
        return obj

    @property
    def exact(self):
        return self.sample_count == 0


class Realization(tuple):
    """Full state assignment, one code per element.

    ``latent`` holds hidden information some objectives depend on (for
    example the true diagnosis in a test-selection problem); two realizations
    with equal states but different latents are different support points.
    """

    def __new__(cls, states, latent=None):
        obj = super().__new__(cls, (int(s) for s in states))
        obj.latent = latent
        return obj

    def __repr__(self):
        base = tuple.__repr__(self)
        if self.latent is None:
            return f"Realization({base})"
        return f"Realization({base}, latent={self.latent!r})"


def as_partial(psi) -> tuple:
    """Normalize ``psi`` to an ordered tuple of ``(element, state)`` pairs."""
    if psi is None:
        return ()
    pairs = tuple((int(v), int(y)) for v, y in psi)
    seen = set()
    for v, _ in pairs:
        if v in seen:
            raise InvalidInput(f"element {v} appears twice in the partial realization")
        seen.add(v)
    return pairs


def dom(psi) -> frozenset:
    return frozenset(v for v, _ in as_partial(psi))


def _key(psi) -> frozenset:
    if isinstance(psi, frozenset):
        return psi
    return frozenset(as_partial(psi))


def _dom_mask(key: frozenset) -> int:
    m = 0
    for v, _ in key:
        m |= 1 << v
    return m


class TabularPrior:
    """Explicit finite distribution over realizations.

    Parameters
    ----------
    support : iterable of (realization, probability)
        Realizations are sequences of state codes (or :class:`Realization`).
    n_states : sequence of int, optional
        State-space size per element.  Inferred from the support if omitted.
    """

    def __init__(self, support, n_states=None):
        rows, probs, latents = [], [], []
        for phi, p in support:
            rows.append(tuple(int(s) for s in phi))
            probs.append(float(p))
            latents.append(getattr(phi, "latent", None))
        if not rows:
            raise InvalidInput("a tabular prior needs at least one support point")
        width = {len(r) for r in rows}
        if len(width) != 1:
            raise InvalidInput("realizations have inconsistent lengths")
        self.states = np.array(rows, dtype=np.int64).reshape(len(rows), width.pop())
        self.probs = np.array(probs, dtype=float)
        self.latents = tuple(latents)
        if np.any(self.probs < 0) or not np.all(np.isfinite(self.probs)):
            raise InvalidInput("probabilities must be finite and non-negative")
        total = float(self.probs.sum())
        if abs(total - 1.0) > PROB_ATOL:
            raise InvalidInput(f"probabilities sum to {total!r}, not 1")
        keys = [(r, lat) for r, lat in zip(rows, latents)]
        if len(set(keys)) != len(keys):
            raise InvalidInput("support realizations must be pairwise distinct")
        if self.states.size and self.states.min() < 0:
            raise InvalidInput("state codes must be non-negative")
        inferred = tuple(int(c) + 1 for c in self.states.max(axis=0)) if self.states.size else ()
        if n_states is None:
            n_states = inferred
        n_states = tuple(int(s) for s in n_states)
        if len(n_states) != self.n_elements:
            raise InvalidInput("n_states length does not match the realization length")
        if any(s < i for s, i in zip(n_states, inferred)) or any(s < 1 for s in n_states):
            raise InvalidInput("a state code exceeds its element's state space")
        self.n_states = n_states
        self.states.setflags(write=False)
        self.probs.setflags(write=False)

    @classmethod
    def from_arrays(cls, states, probs, latents=None, n_states=None):
        states = np.asarray(states)
        if latents is None:
            latents = [None] * len(states)
        support = [(Realization(s, lat), p) for s, p, lat in zip(states, probs, latents)]
        return cls(support, n_states=n_states)

    @property
    def n_elements(self) -> int:
        return self.states.shape[1]

    def __len__(self):
        return self.states.shape[0]

    def realization(self, i) -> Realization:
        return Realization(self.states[i], self.latents[i])

    def __iter__(self) -> Iterator[tuple]:
        for i in range(len(self)):
            yield self.realization(i), float(self.probs[i])

    def consistent_rows(self, psi) -> np.ndarray:
        mask = np.ones(len(self), dtype=bool)
        for v, y in as_partial(psi) if not isinstance(psi, frozenset) else psi:
            mask &= self.states[:, v] == y
        return mask

    def prob(self, psi) -> float:
        """Marginal probability p(psi) of observing the partial realization."""
        return float(self.probs[self.consistent_rows(psi)].sum())

    def condition(self, psi) -> "TabularPrior":
        return condition(self, psi)

    def __repr__(self):
        return f"TabularPrior(n_elements={self.n_elements}, support={len(self)})"


def condition(prior: TabularPrior, psi) -> TabularPrior:
    """Posterior p(phi | psi) as a new prior over the consistent realizations."""
    mask = prior.consistent_rows(psi)
    total = float(prior.probs[mask].sum())
    if total <= 0.0:
        raise InconsistentObservation(f"partial realization {as_partial(psi)} has zero probability")
    if mask.all():
        # Nothing ruled out: keep the weights bit-for-bit (idempotence).
        return prior
    idx = np.flatnonzero(mask)
    post = TabularPrior.__new__(TabularPrior)
    post.states = prior.states[idx]
    post.probs = prior.probs[idx] / total
    post.latents = tuple(prior.latents[i] for i in idx)
    post.n_states = prior.n_states
    post.states.setflags(write=False)
    post.probs.setflags(write=False)
    return post


class Objective:
    """Objective ``f(S, phi)`` on a ground set of integer elements.

    ``fn`` receives a frozenset ``S`` and a :class:`Realization`.  An optional
    ``batch(S, prior)`` returns the values over the whole support as an array
    and is used by :class:`AdaptiveProblem` when present.
    """

    def __init__(self, fn, batch=None, name=None):
        self.fn = fn
        self.batch = batch
        self.name = name or getattr(fn, "__name__", "objective")

    def __call__(self, S, phi) -> float:
        return float(self.fn(frozenset(S), phi))

    def support_values(self, S, prior: TabularPrior) -> np.ndarray:
        S = frozenset(S)
        if self.batch is not None:
            return np.asarray(self.batch(S, prior), dtype=float)
        return np.array([self(S, prior.realization(i)) for i in range(len(prior))], dtype=float)

    def __repr__(self):
        return f"Objective({self.name})"


def as_objective(f) -> Objective:
    return f if isinstance(f, Objective) else Objective(f)


@dataclass(eq=False)
class PolicyNode:
    """One decision of a policy tree.

    ``children`` maps each observed state code of ``element`` to the next node,
    or to ``None`` where the policy stops.
    """

    element: int
    children: Mapping[int, Optional["PolicyNode"]] = field(default_factory=dict)

    @property
    def height(self) -> int:
        return height(self)

    def __repr__(self):
        return f"PolicyNode({self.element}, {dict(self.children)!r})"


PolicyTree = Optional[PolicyNode]
LEAF: PolicyTree = None


def height(tree: PolicyTree) -> int:
    if tree is None:
        return 0
    return 1 + max((height(c) for c in tree.children.values()), default=0)


def policy_elements(tree: PolicyTree) -> set:
    if tree is None:
        return set()
    out = {tree.element}
    for child in tree.children.values():
        out |= policy_elements(child)
    return out


def count_nodes(tree: PolicyTree) -> int:
    if tree is None:
        return 0
    return 1 + sum(count_nodes(c) for c in tree.children.values())


def run_policy(tree: PolicyTree, phi) -> tuple:
    """Execute ``tree`` on a full realization.

    Returns ``(selected, trace)``: the selected set E(pi, phi) and the ordered
    observations.  The prefix of ``trace`` before an element is exactly the
    history the policy used to choose it.
    """
    selected = []
    trace = []
    node = tree
    while node is not None:
        v = node.element
        if v in selected:
            raise ElementReuse(f"element {v} repeats on a root-to-leaf path")
        y = int(phi[v])
        selected.append(v)
        trace.append((v, y))
        try:
            node = node.children[y]
        except KeyError:
            raise MissingBranch(f"no branch for state {y} of element {v}") from None
    return frozenset(selected), tuple(trace)


def concat(first: PolicyTree, second: PolicyTree) -> PolicyTree:
    """Run ``first`` and then ``second`` from scratch.

    ``second`` does not see the observations made by ``first``; when it asks
    for an element ``first`` already selected, the known state is replayed
    without a new selection, so the result never repeats an element on a path.
    Paths of ``second`` that contradict what ``first`` saw are pruned.
    """

    def graft(node, known):
        while node is not None and node.element in known:
            y = known[node.element]
            if y not in node.children:
                # second never reaches this state here, so the joint history has zero mass
                return None
            node = node.children[y]
        if node is None:
            return None
        v = node.element
        return PolicyNode(v, {y: graft(c, {**known, v: y}) for y, c in node.children.items()})

    def walk(node, known):
        if node is None:
            return graft(second, known)
        v = node.element
        return PolicyNode(v, {y: walk(c, {**known, v: y}) for y, c in node.children.items()})

    return walk(first, {})


class AdaptiveProblem:
    """An objective paired with a tabular prior, with cached exact expectations.

    Parameters
    ----------
    objective : Objective or callable
        ``f(S, phi)`` with ``S`` a frozenset of element indices.
    prior : TabularPrior
    cap : int, optional
        Enumeration cap used by the exhaustive routines built on top.
    """

    def __init__(self, objective, prior: TabularPrior, cap=None):
        self.objective = as_objective(objective)
        self.prior = prior
        self.cap = default_cap() if cap is None else int(cap)
        self._values = {}
        self._rows = {frozenset(): prior.probs > 0}
        self._gains = {}
        self._branches = {}

    @property
    def n_elements(self) -> int:
        return self.prior.n_elements

    def __repr__(self):
        return f"AdaptiveProblem({self.objective!r}, {self.prior!r})"

    # -- cached building blocks -------------------------------------------

    def values(self, S) -> np.ndarray:
        """Objective values f(S, phi) over every support point."""
        mask = S if isinstance(S, int) else sum(1 << int(v) for v in set(S))
        out = self._values.get(mask)
        if out is None:
            members = frozenset(v for v in range(self.n_elements) if mask >> v & 1)
            out = self.objective.support_values(members, self.prior)
            out.setflags(write=False)
            self._values[mask] = out
        return out

    def rows(self, psi) -> np.ndarray:
        key = _key(psi)
        out = self._rows.get(key)
        if out is None:
            mask = self._rows[frozenset()].copy()
            for v, y in key:
                mask &= self.prior.states[:, v] == y
            out = mask
            self._rows[key] = out
        return out

    def prob(self, psi) -> float:
        return float(self.prior.probs[self.rows(psi)].sum())

    def _require(self, key):
        p = self.prob(key)
        if p <= 0.0:
            raise InconsistentObservation(f"partial realization {sorted(key)} has zero probability")
        return p

    def branches(self, v, psi) -> tuple:
        """Posterior distribution of element ``v``'s state given ``psi``.

        Returns ``((state, probability), ...)`` over positive-probability
        states in increasing state order.
        """
        key = _key(psi)
        ck = (key, v)
        out = self._branches.get(ck)
        if out is None:
            r = self.rows(key)
            p = self.prior.probs[r]
            tot = p.sum()
            if tot <= 0:
                raise InconsistentObservation(f"partial realization {sorted(key)} has zero probability")
            ys = self.prior.states[r, v]
            out = tuple(
                (int(y), float(p[ys == y].sum() / tot)) for y in np.unique(ys)
            )
            self._branches[ck] = out
        return out

    # -- expectations -----------------------------------------------------

    def gain_element(self, v, psi=()) -> ExpectedGain:
        """Exact Delta(v | psi)."""
        key = _key(psi)
        ck = (key, v)
        g = self._gains.get(ck)
        if g is None:
            m = _dom_mask(key)
            bit = 1 << int(v)
            r = self.rows(key)
            p = self.prior.probs[r]
            tot = p.sum()
            if tot <= 0:
                raise InconsistentObservation(f"partial realization {sorted(key)} has zero probability")
            if m & bit:
                g = 0.0
            else:
                diff = self.values(m | bit)[r] - self.values(m)[r]
                g = float(np.dot(diff, p) / tot)
            self._gains[ck] = g
        return ExpectedGain(g)

    def gain_set(self, S, psi=()) -> ExpectedGain:
        """Exact Delta(S | psi)."""
        key = _key(psi)
        self._require(key)
        m = _dom_mask(key)
        ms = m
        for v in S:
            ms |= 1 << int(v)
        if ms == m:
            return ExpectedGain(0.0)
        r = self.rows(key)
        p = self.prior.probs[r]
        diff = self.values(ms)[r] - self.values(m)[r]
        return ExpectedGain(float(np.dot(diff, p) / p.sum()))

    def gain_policy(self, tree: PolicyTree, psi=()) -> ExpectedGain:
        """Exact Delta(pi | psi) by recursion over positive-probability branches."""
        key = _key(psi)
        self._require(key)

        def rec(node, k):
            if node is None:
                return 0.0
            v = node.element
            if any(u == v for u, _ in k):
                raise ElementReuse(f"policy selects element {v}, which is already observed")
            total = float(self.gain_element(v, k))
            for y, q in self.branches(v, k):
                try:
                    child = node.children[y]
                except KeyError:
                    raise MissingBranch(f"no branch for state {y} of element {v}") from None
                if child is not None:
                    total += q * rec(child, k | {(v, y)})
            return total

        return ExpectedGain(rec(tree, key))

    def expected_value(self, S) -> float:
        """Non-adaptive value E_Phi[f(S, Phi)]."""
        return float(np.dot(self.values(frozenset(S)), self.prior.probs))

    def avg_value(self, tree: PolicyTree) -> ExpectedGain:
        """f_avg(pi) = E[f(E(pi, Phi), Phi)], evaluated by running pi on every support point."""
        total = 0.0
        for i in np.flatnonzero(self.prior.probs > 0):
            phi = self.prior.realization(i)
            selected, _ = run_policy(tree, phi)
            total += self.prior.probs[i] * self.values(selected)[i]
        return ExpectedGain(total)

    def inclusion_probabilities(self, tree: PolicyTree, psi=()) -> np.ndarray:
        """Pr(v in E(pi, Phi) | Phi ~ psi) for every element."""
        key = _key(psi)
        self._require(key)
        out = np.zeros(self.n_elements)

        def rec(node, k, reach):
            if node is None:
                return
            v = node.element
            out[v] += reach
            for y, q in self.branches(v, k):
                if y not in node.children:
                    raise MissingBranch(f"no branch for state {y} of element {v}")
                rec(node.children[y], k | {(v, y)}, reach * q)

        rec(tree, key, 1.0)
        return out

    # -- enumeration ------------------------------------------------------

    def partial_realizations(self, max_size=None, base=frozenset(), elements=None) -> Iterator[frozenset]:
        """All positive-probability partial realizations extending ``base``.

        Yields frozensets of pairs in order of increasing size; each set of
        observed elements appears once per distinct observed state tuple.
        """
        base = _key(base)
        n = self.n_elements
        free = sorted(set(range(n) if elements is None else elements) - {v for v, _ in base})
        if max_size is None:
            max_size = len(free)
        r0 = self.rows(base)
        st = self.prior.states[r0]
        count = 0
        for size in range(0, min(max_size, len(free)) + 1):
            for combo in itertools.combinations(free, size):
                if size == 0:
                    out = [base]
                else:
                    sub = np.unique(st[:, list(combo)], axis=0)
                    out = [base | frozenset(zip(combo, (int(x) for x in row))) for row in sub]
                count += len(out)
                if count > self.cap:
                    raise BudgetExceeded(self.cap, "partial-realization enumeration")
                yield from out

    def observe(self, v, phi):
        return int(phi[v])

    def check_normalized(self, atol=1e-12) -> bool:
        return bool(np.all(np.abs(self.values(0)) <= atol))


def sequence_policy(problem: AdaptiveProblem, order: Sequence[int], stop: Callable[[int, int], bool], psi=()) -> PolicyTree:
    """Select ``order`` one element at a time, stopping after ``(v, y)`` with ``stop(v, y)``.

    Branches are created only for states with positive posterior probability.
    """
    order = [int(v) for v in order]

    def build(i, key):
        if i == len(order):
            return None
        v = order[i]
        children = {}
        for y, _ in problem.branches(v, key):
            children[y] = None if stop(v, y) else build(i + 1, key | {(v, y)})
        return PolicyNode(v, children)

    return build(0, _key(psi))


@dataclass
class CheckResult:
    """Outcome of a property check; falsy when a counterexample was found."""

    ok: bool
    witness: Optional[tuple] = None
    checked: int = 0

    def __bool__(self):
        return self.ok


def check_adaptive_monotone(problem: AdaptiveProblem, atol=1e-12) -> CheckResult:
    """Delta(v | psi) >= -atol for every reachable psi and unobserved v."""
    n = problem.n_elements
    checked = 0
    for key in problem.partial_realizations(max_size=n - 1):
        d = {v for v, _ in key}
        for v in range(n):
            if v in d:
                continue
            checked += 1
            g = float(problem.gain_element(v, key))
            if g < -atol:
                return CheckResult(False, (tuple(sorted(key)), v, g), checked)
    return CheckResult(True, None, checked)


def check_adaptive_submodular(problem: AdaptiveProblem, atol=1e-12) -> CheckResult:
    """Delta(v | psi) >= Delta(v | psi') - atol for all psi <= psi' and v outside dom(psi').

    On failure the witness is ``(psi, psi', v, gain_psi, gain_psi')``.
    """
    n = problem.n_elements
    checked = 0
    for big in problem.partial_realizations(max_size=n - 1):
        d = {v for v, _ in big}
        outside = [v for v in range(n) if v not in d]
        if not big or not outside:
            continue
        pairs = sorted(big)
        for r in range(len(pairs)):
            for small in itertools.combinations(pairs, r):
                small = frozenset(small)
                for v in outside:
                    checked += 1
                    if checked > problem.cap:
                        raise BudgetExceeded(problem.cap, "adaptive submodularity check")
                    g_small = float(problem.gain_element(v, small))
                    g_big = float(problem.gain_element(v, big))
                    if g_small < g_big - atol * max(1.0, abs(g_big)):
                        return CheckResult(False, (tuple(sorted(small)), tuple(pairs), v, g_small, g_big), checked)
    return CheckResult(True, None, checked)


# -- function-style surface over (objective, prior) pairs ------------------


def gain_element(f, prior: TabularPrior, v, psi=()) -> ExpectedGain:
    return AdaptiveProblem(f, prior).gain_element(v, psi)


def gain_set(f, prior: TabularPrior, S, psi=()) -> ExpectedGain:
    return AdaptiveProblem(f, prior).gain_set(S, psi)


def gain_policy(f, prior: TabularPrior, tree: PolicyTree, psi=()) -> ExpectedGain:
    return AdaptiveProblem(f, prior).gain_policy(tree, psi)


def avg_value(f, prior: TabularPrior, tree: PolicyTree) -> ExpectedGain:
    return AdaptiveProblem(f, prior).avg_value(tree)
