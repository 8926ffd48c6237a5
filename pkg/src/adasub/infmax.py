"""Bipartite influence maximization under triggering-type diffusion.

Sources are the ground set.  Selecting a source reveals the live/dead state
of each of its outgoing edges, encoded as a bitmask over the source's
out-edges sorted by sink (bit ``i`` set means the ``i``-th edge is alive).
A sink is activated once any selected source has a live edge into it.

Edge liveness is independent across sinks.  Within a sink it follows one of
four models: independent cascade (``ic``), linear threshold (``lt``), the
extended linear threshold with ``t`` samples (``elt``) or an explicit
triggering distribution (``triggering``).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import ExpectedGain, Objective, TabularPrior, default_cap
from .exceptions import (
    BudgetExceeded,
    DuplicateEdge,
    InconsistentObservation,
    InvalidInput,
    ParseError,
)

MODELS = ("ic", "lt", "elt", "triggering")
PROB_TOL = 1e-12


class BipartiteGraph:
    """Directed bipartite graph from sources to weighted sinks."""

    def __init__(self, n_src: int, n_sink: int, edges: Sequence[tuple], weights=None):
        self.n_src = int(n_src)
        self.n_sink = int(n_sink)
        edges = [(int(v), int(u)) for v, u in edges]
        if len(set(edges)) != len(edges):
            raise InvalidInput("duplicate edge")
        for v, u in edges:
            if not (0 <= v < self.n_src and 0 <= u < self.n_sink):
                raise InvalidInput(f"edge ({v}, {u}) outside the vertex ranges")
        self.src = np.array([v for v, _ in edges], dtype=np.int64)
        self.sink = np.array([u for _, u in edges], dtype=np.int64)
        w = np.ones(self.n_sink) if weights is None else np.asarray(weights, dtype=float)
        if w.shape != (self.n_sink,) or not np.all(np.isfinite(w)) or np.any(w < 0):
            raise InvalidInput("sink weights must be finite, non-negative, one per sink")
        self.weights = w
        self.out_edges = [sorted((e for e in range(len(edges)) if edges[e][0] == v), key=lambda e: edges[e][1]) for v in range(self.n_src)]
        self.in_edges = [sorted((e for e in range(len(edges)) if edges[e][1] == u), key=lambda e: edges[e][0]) for u in range(self.n_sink)]
        self.bitpos = np.zeros(len(edges), dtype=np.int64)
        for v in range(self.n_src):
            for i, e in enumerate(self.out_edges[v]):
                self.bitpos[e] = i

    @property
    def n_edges(self) -> int:
        return len(self.src)

    @property
    def edges(self) -> list:
        return list(zip(self.src.tolist(), self.sink.tolist()))

    def out_degree(self, v) -> int:
        return len(self.out_edges[v])

    def in_degree(self, u) -> int:
        return len(self.in_edges[u])

    def __repr__(self):
        return f"BipartiteGraph(n_src={self.n_src}, n_sink={self.n_sink}, n_edges={self.n_edges})"


@dataclass
class EdgeModel:
    """Per-sink distribution of live in-edges.

    ``param`` holds the per-edge q (ic) or b (lt).  ``t`` is the sample count
    of the extended linear threshold model.  ``dists[u]`` lists
    ``(alive edge ids, probability)`` for the triggering model.
    """

    kind: str
    param: Optional[np.ndarray] = None
    t: int = 1
    dists: Optional[list] = None


def _surjection_probs(deg: int, t: int) -> list:
    # P(the distinct sampled edges are exactly a given set of size j)
    out = [0.0] * (deg + 1)
    for j in range(0, deg + 1):
        s = sum((-1) ** (j - i) * math.comb(j, i) * i**t for i in range(j + 1))
        out[j] = s / deg**t
    return out


class InfluenceInstance:
    """A bipartite graph together with an edge-state model."""

    def __init__(self, graph: BipartiteGraph, model: EdgeModel):
        if model.kind not in MODELS:
            raise InvalidInput(f"unknown model {model.kind!r}")
        self.graph = graph
        self.model = model
        g = graph
        if model.kind in ("ic", "lt"):
            q = np.asarray(model.param, dtype=float)
            if q.shape != (g.n_edges,) or np.any(q < 0) or np.any(q > 1) or not np.all(np.isfinite(q)):
                raise InvalidInput("edge parameters must lie in [0, 1], one per edge")
            model.param = q
            if model.kind == "lt":
                for u in range(g.n_sink):
                    if q[g.in_edges[u]].sum() > 1 + PROB_TOL:
                        raise InvalidInput(f"threshold weights into sink {u} sum above 1")
        elif model.kind == "elt":
            if int(model.t) < 1:
                raise InvalidInput("extended threshold needs t >= 1")
        else:
            if model.dists is None or len(model.dists) != g.n_sink:
                raise InvalidInput("triggering model needs one distribution per sink")
            clean = []
            for u, dist in enumerate(model.dists):
                allowed = set(g.in_edges[u])
                items = [(frozenset(int(e) for e in A), float(p)) for A, p in dist]
                if any(not A <= allowed for A, _ in items) or any(p < 0 for _, p in items):
                    raise InvalidInput(f"bad triggering distribution at sink {u}")
                if abs(sum(p for _, p in items) - 1.0) > PROB_TOL:
                    raise InvalidInput(f"triggering distribution at sink {u} does not sum to 1")
                clean.append(items)
            model.dists = clean
        self._support_cache = {}

    @property
    def n_elements(self) -> int:
        return self.graph.n_src

    def __repr__(self):
        return f"InfluenceInstance({self.graph!r}, model={self.model.kind!r})"

    # -- per-sink distributions -------------------------------------------

    def sink_support(self, u) -> list:
        """Distribution of the alive in-edge set of sink ``u`` as ``[(frozenset, p)]``.

        Zero-probability outcomes are dropped.
        """
        hit = self._support_cache.get(u)
        if hit is not None:
            return hit
        ins = self.graph.in_edges[u]
        kind = self.model.kind
        out = []
        if kind == "ic":
            q = self.model.param
            for bits in itertools.product((False, True), repeat=len(ins)):
                p = 1.0
                for e, b in zip(ins, bits):
                    p *= q[e] if b else 1.0 - q[e]
                out.append((frozenset(e for e, b in zip(ins, bits) if b), p))
        elif kind == "lt":
            b = self.model.param
            rest = 1.0 - float(sum(b[e] for e in ins))
            out.append((frozenset(), rest if rest > PROB_TOL else 0.0))
            out += [(frozenset([e]), float(b[e])) for e in ins]
        elif kind == "elt":
            if not ins:
                out.append((frozenset(), 1.0))
            else:
                probs = _surjection_probs(len(ins), int(self.model.t))
                for j in range(len(ins) + 1):
                    for A in itertools.combinations(ins, j):
                        out.append((frozenset(A), probs[j]))
        else:
            out = list(self.model.dists[u])
        out = [(A, p) for A, p in out if p > 0]
        self._support_cache[u] = out
        return out

    def prob_all_dead(self, u, dead) -> float:
        """Probability that every edge in ``dead`` (edges into ``u``) is dead."""
        dead = list(dead)
        kind = self.model.kind
        if kind == "ic":
            q = self.model.param
            return float(np.prod([1.0 - q[e] for e in dead]))
        if kind == "lt":
            return 1.0 - float(sum(self.model.param[e] for e in dead))
        if kind == "elt":
            deg = self.graph.in_degree(u)
            return ((deg - len(set(dead))) / deg) ** int(self.model.t) if deg else 1.0
        D = set(dead)
        return float(sum(p for A, p in self.sink_support(u) if not (A & D)))

    def alive_given_dead(self, u, e, dead) -> float:
        """Posterior alive probability of edge ``e`` into ``u`` given that ``dead`` are dead."""
        kind = self.model.kind
        if kind == "ic":
            return float(self.model.param[e])
        if kind == "lt":
            den = 1.0 - float(sum(self.model.param[d] for d in dead))
            if den <= PROB_TOL:
                raise InconsistentObservation(f"observed dead edges into sink {u} exhaust its threshold weight")
            return float(self.model.param[e]) / den
        if kind == "elt":
            rem = self.graph.in_degree(u) - len(set(dead))
            return 1.0 - ((rem - 1) / rem) ** int(self.model.t)
        den = self.prob_all_dead(u, dead)
        if den <= 0:
            raise InconsistentObservation(f"observed dead edges into sink {u} have zero probability")
        return 1.0 - self.prob_all_dead(u, set(dead) | {e}) / den

    def sink_posterior(self, u, observed: dict) -> dict:
        """Alive probability of each unobserved edge into ``u``.

        ``observed`` maps edge ids into ``u`` to their observed aliveness.
        """
        ins = self.graph.in_edges[u]
        for e in observed:
            if e not in ins:
                raise InvalidInput(f"edge {e} does not enter sink {u}")
        free = [e for e in ins if e not in observed]
        alive = {e for e, a in observed.items() if a}
        dead = {e for e, a in observed.items() if not a}
        if self.model.kind == "ic" or not alive:
            return {e: self.alive_given_dead(u, e, dead) for e in free}
        match = [(A, p) for A, p in self.sink_support(u) if alive <= A and not (A & dead)]
        tot = sum(p for _, p in match)
        if tot <= 0:
            raise InconsistentObservation(f"observation at sink {u} has zero probability")
        return {e: sum(p for A, p in match if e in A) / tot for e in free}

    # -- realizations and the objective -----------------------------------

    def sample_live(self, rng: np.random.Generator) -> np.ndarray:
        """One joint realization as a boolean live-edge vector."""
        g = self.graph
        live = np.zeros(g.n_edges, dtype=bool)
        kind = self.model.kind
        if kind == "ic":
            live[:] = rng.random(g.n_edges) < self.model.param
            return live
        for u in range(g.n_sink):
            ins = g.in_edges[u]
            if not ins:
                continue
            if kind == "elt":
                live[[ins[i] for i in rng.integers(len(ins), size=int(self.model.t))]] = True
                continue
            supp = self.sink_support(u)
            probs = np.array([p for _, p in supp])
            i = int(np.searchsorted(np.cumsum(probs), rng.random() * probs.sum(), side="right"))
            for e in supp[min(i, len(supp) - 1)][0]:
                live[e] = True
        return live

    def state_of(self, v, live) -> int:
        mask = 0
        for i, e in enumerate(self.graph.out_edges[v]):
            if live[e]:
                mask |= 1 << i
        return mask

    def observe(self, v, live) -> int:
        return self.state_of(v, live)

    def spread(self, S, live) -> float:
        """Total weight of sinks reached from ``S`` through live edges."""
        g = self.graph
        hit = set()
        for v in S:
            for e in g.out_edges[v]:
                if live[e]:
                    hit.add(int(g.sink[e]))
        return float(sum(g.weights[u] for u in sorted(hit)))

    def _sink_observations(self, psi):
        g = self.graph
        active, dead = set(), {}
        for v, y in psi:
            for i, e in enumerate(g.out_edges[v]):
                u = int(g.sink[e])
                if y >> i & 1:
                    active.add(u)
                else:
                    dead.setdefault(u, []).append(e)
        return active, dead

    def adaptive_gain(self, v, psi=()) -> ExpectedGain:
        """Exact expected marginal gain of source ``v`` after observing ``psi``."""
        psi = tuple(psi)
        if any(s == v for s, _ in psi):
            return ExpectedGain(0.0)
        g = self.graph
        active, dead = self._sink_observations(psi)
        total = 0.0
        for e in g.out_edges[v]:
            u = int(g.sink[e])
            if u in active:
                continue
            total += g.weights[u] * self.alive_given_dead(u, e, dead.get(u, ()))
        return ExpectedGain(total)

    gain_element = adaptive_gain

    def expected_spread(self, S) -> float:
        """Non-adaptive expected spread E[f(S, Phi)]."""
        g = self.graph
        S = set(int(v) for v in S)
        per_sink = {}
        for v in sorted(S):
            for e in g.out_edges[v]:
                per_sink.setdefault(int(g.sink[e]), []).append(e)
        return float(sum(g.weights[u] * (1.0 - self.prob_all_dead(u, es)) for u, es in sorted(per_sink.items())))

    def to_tabular(self, cap=None) -> tuple:
        """Exact joint distribution over source states and the spread objective."""
        g = self.graph
        cap = default_cap() if cap is None else int(cap)
        sinks = [u for u in range(g.n_sink) if g.in_edges[u]]
        supports = [self.sink_support(u) for u in sinks]
        size = math.prod(len(s) for s in supports)
        if size > cap:
            raise BudgetExceeded(cap, "joint support of the influence instance")
        n_states = [1 << g.out_degree(v) for v in range(g.n_src)]
        rows, probs = [], []
        for combo in itertools.product(*supports):
            state = [0] * g.n_src
            p = 1.0
            for A, q in combo:
                p *= q
                for e in A:
                    state[int(g.src[e])] |= 1 << int(g.bitpos[e])
            rows.append(state)
            probs.append(p)
        probs = np.array(probs)
        if not rows:
            rows, probs = [[0] * g.n_src], np.array([1.0])
        probs = probs / probs.sum()
        prior = TabularPrior.from_arrays(np.array(rows, dtype=np.int64).reshape(len(rows), g.n_src), probs, n_states=n_states)
        return prior, spread_objective(g)


def spread_objective(graph: BipartiteGraph) -> Objective:
    """The spread as an objective over source-state realizations."""
    src, bit, sink, w = graph.src, graph.bitpos, graph.sink, graph.weights

    def batch(S, prior):
        states = prior.states
        hit = np.zeros((len(prior), graph.n_sink), dtype=bool)
        for e in range(graph.n_edges):
            if int(src[e]) in S:
                hit[:, sink[e]] |= (states[:, src[e]] >> bit[e]) & 1 == 1
        return hit.astype(float) @ w

    def fn(S, phi):
        total = 0.0
        hit = set()
        for e in range(graph.n_edges):
            if int(src[e]) in S and (phi[src[e]] >> bit[e]) & 1:
                hit.add(int(sink[e]))
        for u in sorted(hit):
            total += w[u]
        return total

    return Objective(fn, batch=batch, name="spread")


# -- generators ------------------------------------------------------------


def _default_model(graph: BipartiteGraph, kind: str, t: int = 3) -> EdgeModel:
    indeg = np.array([graph.in_degree(int(u)) for u in graph.sink], dtype=float)
    recip = np.where(indeg > 0, 1.0 / np.maximum(indeg, 1.0), 0.0)
    if kind in ("ic", "lt"):
        return EdgeModel(kind, param=recip)
    if kind == "elt":
        return EdgeModel("elt", t=t)
    raise InvalidInput(f"model {kind!r} has no default parametrization")


def gen_erdos_renyi(n_src: int, n_sink: int, p_edge: float, model_kind: str = "lt", seed=0, t: int = 3) -> InfluenceInstance:
    """Random bipartite graph with each source-sink pair present with probability ``p_edge``.

    Sink weights are uniform on [0, 1].  Edge parameters are the reciprocal
    of the sink's in-degree for both ``lt`` and ``ic``.
    """
    if not 0.0 <= p_edge <= 1.0:
        raise InvalidInput("p_edge must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    edges = []
    for v in range(n_src):
        d = int(rng.binomial(n_sink, p_edge))
        for u in sorted(rng.choice(n_sink, size=d, replace=False).tolist()):
            edges.append((v, int(u)))
    weights = rng.random(n_sink)
    graph = BipartiteGraph(n_src, n_sink, edges, weights)
    return InfluenceInstance(graph, _default_model(graph, model_kind, t))


def gen_star(k: int) -> InfluenceInstance:
    """k sources pointing at one unit-weight sink under threshold weights 1/k."""
    if k < 1:
        raise InvalidInput("k must be at least 1")
    graph = BipartiteGraph(k, 1, [(v, 0) for v in range(k)], [1.0])
    return InfluenceInstance(graph, EdgeModel("lt", param=np.full(k, 1.0 / k)))


def gen_random_small(kind: str, rng: np.random.Generator, max_src: int = 4, max_sink: int = 3, edge_prob: float = 0.6) -> InfluenceInstance:
    """Small random instance for exhaustive checks.

    Triggering distributions put random weights on a random handful of
    subsets of each sink's in-edges.
    """
    n_src = int(rng.integers(1, max_src + 1))
    n_sink = int(rng.integers(1, max_sink + 1))
    edges = [(v, u) for v in range(n_src) for u in range(n_sink) if rng.random() < edge_prob]
    if not edges:
        edges = [(0, 0)]
    weights = np.round(rng.uniform(0.1, 1.0, n_sink), 3)
    graph = BipartiteGraph(n_src, n_sink, edges, weights)
    if kind == "ic":
        return InfluenceInstance(graph, EdgeModel("ic", param=np.round(rng.uniform(0.05, 0.95, graph.n_edges), 3)))
    if kind == "lt":
        b = np.zeros(graph.n_edges)
        for u in range(n_sink):
            ins = graph.in_edges[u]
            if ins:
                raw = rng.dirichlet(np.ones(len(ins) + 1))
                b[ins] = raw[:-1] if rng.random() < 0.5 else raw[:-1] / raw[:-1].sum()
        return InfluenceInstance(graph, EdgeModel("lt", param=b))
    if kind == "elt":
        return InfluenceInstance(graph, EdgeModel("elt", t=int(rng.integers(1, 4))))
    dists = []
    for u in range(n_sink):
        ins = graph.in_edges[u]
        subsets = [frozenset(c) for r in range(len(ins) + 1) for c in itertools.combinations(ins, r)]
        m = int(rng.integers(1, min(4, len(subsets)) + 1))
        pick = rng.choice(len(subsets), size=m, replace=False)
        w = rng.dirichlet(np.ones(m))
        dists.append([(subsets[i], float(p)) for i, p in zip(pick, w)])
        tot = sum(p for _, p in dists[-1])
        dists[-1] = [(A, p / tot) for A, p in dists[-1]]
    return InfluenceInstance(graph, EdgeModel("triggering", dists=dists))


# -- file format -----------------------------------------------------------


def load_edge_list(path, model_kind: str = "lt", t: int = 3) -> InfluenceInstance:
    """Read an edge-list file (see the README for the format).

    ``u <sink> <weight>`` declares a sink, ``e <src> <sink> <param>`` an edge.
    Lines starting with ``#`` are comments.
    """
    sinks = {}
    edges = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                if parts[0] == "u" and len(parts) == 3:
                    sid = _parse_id(parts[1])
                    if sid in sinks:
                        raise ParseError(f"sink {sid} declared twice", lineno, path)
                    sinks[sid] = _parse_float(parts[2])
                elif parts[0] == "e" and len(parts) == 4:
                    key = (_parse_id(parts[1]), _parse_id(parts[2]))
                    if key in edges:
                        raise DuplicateEdge(f"duplicate edge {key}", lineno, path)
                    edges[key] = _parse_float(parts[3])
                else:
                    raise ParseError(f"unrecognized line {line!r}", lineno, path)
            except ValueError as exc:
                if isinstance(exc, ParseError):
                    raise
                raise ParseError(str(exc), lineno, path) from None
    n_src = 1 + max((v for v, _ in edges), default=-1)
    n_sink = 1 + max([u for _, u in edges] + list(sinks), default=-1)
    weights = np.array([sinks.get(u, 1.0) for u in range(n_sink)], dtype=float)
    keys = list(edges)
    graph = BipartiteGraph(n_src, n_sink, keys, weights)
    if model_kind == "elt":
        model = EdgeModel("elt", t=t)
    else:
        model = EdgeModel(model_kind, param=np.array([edges[k] for k in keys], dtype=float))
    return InfluenceInstance(graph, model)


def _parse_id(tok: str) -> int:
    if not tok.isdigit():
        raise ValueError(f"expected a non-negative integer id, got {tok!r}")
    return int(tok)


def _parse_float(tok: str) -> float:
    val = float(tok)
    if not math.isfinite(val):
        raise ValueError(f"non-finite number {tok!r}")
    return val


# -- baselines and bounds --------------------------------------------------


def degree_baseline(graph: BipartiteGraph, k: int) -> list:
    """Top-k sources by out-degree, ties broken by index."""
    if k < 0 or k > graph.n_src:
        raise InvalidInput(f"k={k} outside [0, {graph.n_src}]")
    order = sorted(range(graph.n_src), key=lambda v: (-graph.out_degree(v), v))
    return order[:k]


def ic_gap_lower_bound(q_max: float, d: int, k: int) -> float:
    """(1 - q_max) ** (min(k, d) - 1), floored at exponent 0."""
    if not 0.0 <= q_max <= 1.0:
        raise InvalidInput("q_max must lie in [0, 1]")
    return (1.0 - q_max) ** max(min(k, d) - 1, 0)
