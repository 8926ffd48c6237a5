"""Adaptive feature selection for sparse regression.

Each feature's column is unknown until it is observed and has its own prior:
either a finite list of candidate columns or a mean column plus entrywise
uniform noise.  The objective for a set ``S`` under realization ``phi`` is the
reduction of squared error ``||b||^2 - min_w ||b - A(phi)_S w||^2``.

Gains have a closed form given the observed columns.  With ``Q`` an
orthonormal basis of the observed span, ``r = b - Q Q^T b`` and
``P x = x - Q Q^T x``, adding column ``x`` increases the objective by
``(r . x)^2 / ||P x||^2`` (zero when ``P x`` vanishes).
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import ExpectedGain, Objective, TabularPrior, default_cap
from .exceptions import BudgetExceeded, DimensionMismatch, InvalidInput, NotNormalized, ParseError
from .linalg import RCOND, gram, least_squares, sym_eigen_extremes

RESID_TOL = 1e-10
DEFAULT_SAMPLES = 64


def r2_value(columns, response) -> float:
    """||b||^2 minus the least-squares residual of ``b`` on ``columns``."""
    b = np.asarray(response, dtype=float).ravel()
    A = np.asarray(columns, dtype=float)
    if A.size == 0:
        return 0.0
    if A.ndim == 1:
        A = A[:, None]
    if A.shape[0] != b.shape[0]:
        raise DimensionMismatch(f"columns have length {A.shape[0]}, response has length {b.shape[0]}")
    _, res = least_squares(A, b)
    val = float(b @ b) - res
    return max(val, 0.0)


def _basis(cols: np.ndarray) -> np.ndarray:
    if cols.shape[1] == 0:
        return cols
    U, s, _ = np.linalg.svd(cols, full_matrices=False)
    keep = s > RCOND * s[0] if s.size and s[0] > 0 else np.zeros(s.shape, dtype=bool)
    return U[:, keep]


def _residual_gains(Q: np.ndarray, r: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Objective increase for each candidate column in the last axis of ``X``.

    ``X`` has shape (..., m, c); the result has shape (..., c).
    """
    PX = X - Q @ (Q.T @ X) if Q.shape[1] else X
    num = np.einsum("m,...mc->...c", r, PX) ** 2
    den = np.einsum("...mc,...mc->...c", PX, PX)
    ref = np.einsum("...mc,...mc->...c", X, X)
    ok = den > (RESID_TOL**2) * np.maximum(ref, 1e-300)
    out = np.zeros_like(den)
    np.divide(num, den, out=out, where=ok)
    return out


class FiniteColumnPrior:
    """Each feature takes one of finitely many columns with given probabilities."""

    kind = "finite"

    def __init__(self, support: Sequence[Sequence[tuple]]):
        self.support = []
        m = None
        for v, pts in enumerate(support):
            vecs = [np.asarray(x, dtype=float).ravel() for x, _ in pts]
            probs = np.array([float(p) for _, p in pts])
            if not vecs or np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
                raise InvalidInput(f"feature {v} needs a non-empty support with probabilities summing to 1")
            m = vecs[0].size if m is None else m
            if any(x.size != m for x in vecs):
                raise DimensionMismatch(f"feature {v} has columns of inconsistent length")
            self.support.append((np.stack(vecs, axis=1), probs))
        self.n = len(self.support)
        self.m = m or 0

    def mean(self) -> np.ndarray:
        return np.stack([cols @ p for cols, p in self.support], axis=1)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        out = np.empty((self.m, self.n))
        for v, (cols, p) in enumerate(self.support):
            out[:, v] = cols[:, int(rng.choice(len(p), p=p))]
        return out


class UniformNoisePrior:
    """Column ``v`` is ``mean[:, v]`` plus independent uniform noise on [-sigma, sigma]."""

    kind = "uniform"

    def __init__(self, mean, sigma: float):
        self._mean = np.asarray(mean, dtype=float)
        if self._mean.ndim != 2:
            raise InvalidInput("mean must be an m-by-n matrix")
        if sigma < 0:
            raise InvalidInput("sigma must be non-negative")
        self.sigma = float(sigma)
        self.m, self.n = self._mean.shape

    def mean(self) -> np.ndarray:
        return self._mean

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self._mean + rng.uniform(-self.sigma, self.sigma, size=self._mean.shape)


@dataclass
class EigenBounds:
    lambda_min_ell: float
    lambda_max_ell: float
    ell: int


class FeatureInstance:
    """Response vector, column prior and (optionally) the hidden true columns.

    ``n_samples`` and ``seed`` control Monte Carlo gain estimates for the
    uniform-noise prior; finite priors are always summed exactly.
    """

    def __init__(self, response, prior, hidden=None, support_true=None, coef=None, n_samples: int = DEFAULT_SAMPLES, seed: int = 0):
        self.response = np.asarray(response, dtype=float).ravel()
        self.prior = prior
        if prior.m != self.response.size:
            raise DimensionMismatch(f"prior columns have length {prior.m}, response has length {self.response.size}")
        if not np.all(np.isfinite(self.response)):
            raise InvalidInput("response must be finite")
        self.hidden = None if hidden is None else np.asarray(hidden, dtype=float)
        self.support_true = None if support_true is None else [int(v) for v in support_true]
        self.coef = None if coef is None else np.asarray(coef, dtype=float)
        self.n_samples = int(n_samples)
        self.seed = int(seed)

    @property
    def n(self) -> int:
        return self.prior.n

    @property
    def m(self) -> int:
        return self.prior.m

    n_elements = n

    def __repr__(self):
        return f"FeatureInstance(n={self.n}, m={self.m}, prior={self.prior.kind!r})"

    def observe(self, v, realization) -> np.ndarray:
        return np.asarray(realization, dtype=float)[:, v].copy()

    def value(self, S, realization) -> float:
        S = sorted(S)
        return r2_value(np.asarray(realization, dtype=float)[:, S], self.response)

    def _state(self, psi):
        cols = np.stack([np.asarray(y, dtype=float) for _, y in psi], axis=1) if psi else np.zeros((self.m, 0))
        Q = _basis(cols)
        b = self.response
        r = b - Q @ (Q.T @ b) if Q.shape[1] else b.copy()
        return Q, r

    def _is_exact(self) -> bool:
        return self.prior.kind == "finite" or self.prior.sigma == 0.0

    def candidate_gains(self, candidates, psi=(), n_samples: Optional[int] = None, seed: Optional[int] = None) -> np.ndarray:
        """Expected gains of ``candidates`` given observed ``(feature, column)`` pairs.

        Monte Carlo draws share one noise matrix across candidates, so the
        comparison between candidates inside a greedy step has lower variance.
        """
        return np.array([float(g) for g in self._gains(candidates, psi, n_samples, seed)])

    def _gains(self, candidates, psi, n_samples, seed) -> list:
        psi = tuple(psi)
        candidates = [int(v) for v in candidates]
        seen = {v for v, _ in psi}
        Q, r = self._state(psi)
        if self.prior.kind == "finite":
            out = []
            for v in candidates:
                if v in seen:
                    out.append(ExpectedGain(0.0))
                    continue
                cols, p = self.prior.support[v]
                out.append(ExpectedGain(float(_residual_gains(Q, r, cols) @ p)))
            return out
        mean = self.prior.mean()[:, candidates]
        if self.prior.sigma == 0.0:
            g = _residual_gains(Q, r, mean)
            return [ExpectedGain(0.0 if v in seen else float(x)) for v, x in zip(candidates, g)]
        S = self.n_samples if n_samples is None else int(n_samples)
        rng = np.random.default_rng([self.seed if seed is None else int(seed), len(psi)])
        noise = rng.uniform(-1.0, 1.0, size=(S, self.m, 1))
        X = mean[None, :, :] + self.prior.sigma * noise
        g = _residual_gains(Q, r, X)
        mu = g.mean(axis=0)
        se = g.std(axis=0, ddof=1) / math.sqrt(S) if S > 1 else np.zeros_like(mu)
        return [ExpectedGain(0.0, S) if v in seen else ExpectedGain(float(a), S, float(s)) for v, a, s in zip(candidates, mu, se)]

    def adaptive_gain_mc(self, v, psi=(), n_samples: Optional[int] = None, seed: Optional[int] = None) -> ExpectedGain:
        """Expected gain of feature ``v``; exact when the prior allows it."""
        return self._gains([v], psi, n_samples, seed)[0]

    gain_element = adaptive_gain_mc

    def to_tabular(self, cap=None) -> tuple:
        """Joint support of a finite prior as a tabular prior plus objective."""
        if self.prior.kind != "finite":
            raise InvalidInput("only finite column priors can be tabulated")
        cap = default_cap() if cap is None else int(cap)
        sizes = [len(p) for _, p in self.prior.support]
        if math.prod(sizes) > cap:
            raise BudgetExceeded(cap, "joint support of the feature prior")
        rows, probs = [], []
        for idx in itertools.product(*[range(s) for s in sizes]):
            rows.append(idx)
            probs.append(math.prod(self.prior.support[v][1][i] for v, i in enumerate(idx)))
        prior = TabularPrior.from_arrays(np.array(rows, dtype=np.int64).reshape(len(rows), self.n), np.array(probs), n_states=sizes)
        return prior, self.objective()

    def objective(self) -> Objective:
        supp = self.prior.support
        b = self.response

        def fn(S, phi):
            if not S:
                return 0.0
            cols = np.stack([supp[v][0][:, phi[v]] for v in sorted(S)], axis=1)
            return r2_value(cols, b)

        return Objective(fn, name="squared_error_reduction")

    def mean_instance(self) -> "FeatureInstance":
        """The same response with the noise removed from the prior."""
        return FeatureInstance(self.response, UniformNoisePrior(self.prior.mean(), 0.0), seed=self.seed)


# -- eigenvalue bounds -----------------------------------------------------


def _check_norms(cols: np.ndarray):
    norms = np.linalg.norm(cols, axis=0)
    if np.any(np.abs(norms - 1.0) > 1e-6):
        warnings.warn("feature columns are not unit norm", NotNormalized, stacklevel=3)


def eigen_bounds_bruteforce(instance: FeatureInstance, ell: int, normalize: bool = False, cap=None) -> EigenBounds:
    """Extreme Gram eigenvalues over all realizations and all |S| <= ell.

    Columns are factorized across features, so each set ``S`` only needs the
    product of its own members' supports.
    """
    if instance.prior.kind != "finite":
        raise InvalidInput("eigenvalue bounds need a finite column prior")
    cap = default_cap() if cap is None else int(cap)
    supp = []
    for cols, _ in instance.prior.support:
        if normalize:
            norms = np.linalg.norm(cols, axis=0)
            cols = cols / np.where(norms > 0, norms, 1.0)
        else:
            _check_norms(cols)
        supp.append(cols)
    lo, hi = math.inf, -math.inf
    count = 0
    for size in range(1, min(ell, instance.n) + 1):
        for S in itertools.combinations(range(instance.n), size):
            for idx in itertools.product(*[range(supp[v].shape[1]) for v in S]):
                count += 1
                if count > cap:
                    raise BudgetExceeded(cap, "eigenvalue bound enumeration")
                A = np.stack([supp[v][:, i] for v, i in zip(S, idx)], axis=1)
                a, b = sym_eigen_extremes(gram(A))
                lo, hi = min(lo, a), max(hi, b)
    if count == 0:
        lo = hi = 1.0
    return EigenBounds(lo, hi, ell)


def ratio_lower_bound(instance: FeatureInstance, ell: int, k: int, normalize: bool = False) -> float:
    """Lower bound on the adaptive ratio at level ell and budget k."""
    return eigen_bounds_bruteforce(instance, k + ell, normalize).lambda_min_ell


def gap_lower_bound(instance: FeatureInstance, k: int, normalize: bool = False) -> float:
    """Lower bound on the adaptivity gap at budget k."""
    eb = eigen_bounds_bruteforce(instance, k, normalize)
    return eb.lambda_min_ell / eb.lambda_max_ell


# -- generators and non-adaptive baselines ---------------------------------


def standardize_columns(M: np.ndarray) -> np.ndarray:
    """Columns shifted to mean 0 and scaled to population standard deviation 1."""
    M = np.asarray(M, dtype=float)
    mu = M.mean(axis=0)
    sd = M.std(axis=0)
    return (M - mu) / np.where(sd > 0, sd, 1.0)


def gen_synthetic(n: int, m: int, sparsity: int, sigma: float, seed=0, n_samples: int = DEFAULT_SAMPLES) -> FeatureInstance:
    """Random regression instance with a hidden noisy design and sparse truth."""
    if not 0 <= sparsity <= n:
        raise InvalidInput("sparsity must lie in [0, n]")
    rng = np.random.default_rng(seed)
    mean = standardize_columns(rng.random((m, n)))
    support = sorted(rng.choice(n, size=sparsity, replace=False).tolist())
    hidden = mean + rng.uniform(-sigma, sigma, size=(m, n))
    w = rng.standard_normal(sparsity)
    y = hidden[:, support] @ w
    child = int(rng.integers(2**63))
    return FeatureInstance(y, UniformNoisePrior(mean, sigma), hidden=hidden, support_true=support, coef=w, n_samples=n_samples, seed=child)


def _greedy_on_scenarios(mats: np.ndarray, b: np.ndarray, budget: int) -> list:
    """Greedy maximizing the average objective over a stack of design matrices."""
    n = mats.shape[2]
    if budget < 0 or budget > n:
        raise InvalidInput(f"budget {budget} outside [0, {n}]")
    from .policies import argmax_lowest

    chosen = []
    for _ in range(budget):
        total = np.zeros(n)
        for A in mats:
            Q = _basis(A[:, chosen])
            r = b - Q @ (Q.T @ b) if Q.shape[1] else b
            total += _residual_gains(Q, r, A)
        total /= len(mats)
        total[chosen] = -np.inf
        chosen.append(argmax_lowest(total))
    return chosen


def noise_oblivious_greedy(instance: FeatureInstance, budget: int) -> list:
    """Greedy on the prior mean design, ignoring noise."""
    return _greedy_on_scenarios(instance.prior.mean()[None], instance.response, budget)


def non_adaptive_greedy_saa(instance: FeatureInstance, budget: int, n_scenarios: int = 32, seed=None) -> list:
    """Greedy on the expected objective, estimated over sampled designs."""
    if instance.prior.kind == "uniform" and instance.prior.sigma == 0.0:
        return noise_oblivious_greedy(instance, budget)
    rng = np.random.default_rng([instance.seed if seed is None else int(seed), 2**32 - 1])
    mats = np.stack([instance.prior.sample(rng) for _ in range(n_scenarios)])
    return _greedy_on_scenarios(mats, instance.response, budget)


# -- text serialization ----------------------------------------------------


def save_instance(instance: FeatureInstance, path):
    """Write an instance in the whitespace-separated text format."""
    p = instance.prior
    lines = ["adasub-features 1"]
    sigma = p.sigma if p.kind == "uniform" else 0.0
    lines.append(f"n {p.n} m {p.m} prior {p.kind} sigma {sigma!r} seed {instance.seed}")
    if p.kind == "uniform":
        lines.append("mean")
        lines += [" ".join(repr(float(x)) for x in row) for row in p.mean()]
    else:
        for v, (cols, probs) in enumerate(p.support):
            lines.append(f"feature {v} {len(probs)}")
            for j in range(len(probs)):
                lines.append(" ".join([repr(float(probs[j]))] + [repr(float(x)) for x in cols[:, j]]))
    lines.append("response")
    lines.append(" ".join(repr(float(x)) for x in instance.response))
    if instance.hidden is not None:
        lines.append("hidden")
        lines += [" ".join(repr(float(x)) for x in row) for row in instance.hidden]
    if instance.support_true is not None:
        lines.append("truth " + " ".join(str(v) for v in instance.support_true))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_instance(path) -> FeatureInstance:
    """Read an instance written by :func:`save_instance`."""
    with open(path, encoding="utf-8") as fh:
        lines = [(i, ln.split()) for i, ln in enumerate(fh, start=1) if ln.strip() and not ln.lstrip().startswith("#")]
    pos = 0

    def take():
        nonlocal pos
        if pos >= len(lines):
            raise ParseError("unexpected end of file", None, path)
        item = lines[pos]
        pos += 1
        return item

    def floats(lineno, toks, count):
        if len(toks) != count:
            raise ParseError(f"expected {count} numbers, got {len(toks)}", lineno, path)
        try:
            return [float(t) for t in toks]
        except ValueError as exc:
            raise ParseError(str(exc), lineno, path) from None

    lineno, toks = take()
    if toks != ["adasub-features", "1"]:
        raise ParseError("missing 'adasub-features 1' header", lineno, path)
    lineno, toks = take()
    try:
        head = dict(zip(toks[::2], toks[1::2]))
        n, m, kind = int(head["n"]), int(head["m"]), head["prior"]
        sigma, seed = float(head["sigma"]), int(head["seed"])
    except (KeyError, ValueError):
        raise ParseError("malformed parameter line", lineno, path) from None
    if kind == "uniform":
        lineno, toks = take()
        if toks != ["mean"]:
            raise ParseError("expected 'mean'", lineno, path)
        mean = np.array([floats(*take(), n) for _ in range(m)])
        prior = UniformNoisePrior(mean, sigma)
    elif kind == "finite":
        support = []
        for v in range(n):
            lineno, toks = take()
            if len(toks) != 3 or toks[0] != "feature" or toks[1] != str(v) or not toks[2].isdigit():
                raise ParseError(f"expected 'feature {v} <count>'", lineno, path)
            pts = []
            for _ in range(int(toks[2])):
                vals = floats(*take(), m + 1)
                pts.append((vals[1:], vals[0]))
            support.append(pts)
        prior = FiniteColumnPrior(support)
    else:
        raise ParseError(f"unknown prior kind {kind!r}", lineno, path)
    lineno, toks = take()
    if toks != ["response"]:
        raise ParseError("expected 'response'", lineno, path)
    response = floats(*take(), m)
    hidden = truth = None
    while pos < len(lines):
        lineno, toks = take()
        if toks == ["hidden"]:
            hidden = np.array([floats(*take(), n) for _ in range(m)])
        elif toks and toks[0] == "truth":
            truth = [int(t) for t in toks[1:]]
        else:
            raise ParseError(f"unexpected section {toks[0]!r}", lineno, path)
    return FeatureInstance(response, prior, hidden=hidden, support_true=truth, seed=seed)


def gen_random_finite(rng: np.random.Generator, max_n: int = 4, max_m: int = 5, max_support: int = 2, normalize: bool = True) -> FeatureInstance:
    """Small instance with a finite column prior, for exhaustive checks."""
    n = int(rng.integers(1, max_n + 1))
    m = int(rng.integers(2, max_m + 1))
    support = []
    for _ in range(n):
        s = int(rng.integers(1, max_support + 1))
        cols = rng.standard_normal((m, s))
        if normalize:
            cols /= np.linalg.norm(cols, axis=0)
        probs = rng.dirichlet(np.ones(s))
        support.append([(cols[:, j], float(probs[j])) for j in range(s)])
    return FeatureInstance(rng.standard_normal(m), FiniteColumnPrior(support))
