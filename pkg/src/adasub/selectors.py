"""scikit-learn style wrappers around the feature-selection greedy routines."""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.feature_selection import SelectorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_budget, check_design, check_noise, check_true_design
from .features import (
    DEFAULT_SAMPLES,
    FeatureInstance,
    UniformNoisePrior,
    non_adaptive_greedy_saa,
    noise_oblivious_greedy,
)
from .policies import adaptive_greedy


class _GreedySelector(SelectorMixin, BaseEstimator):
    """Shared plumbing: build the instance, run a selector, store the support."""

    def _instance(self, X, y):
        X, y = check_design(X, y)
        noise = check_noise(self.noise)
        seed = 0 if self.random_state is None else int(self.random_state)
        inst = FeatureInstance(y, UniformNoisePrior(X, noise), n_samples=self.n_samples, seed=seed)
        return X, y, inst

    def _finish(self, X, order):
        self.n_features_in_ = X.shape[1]
        self.selected_ = list(order)
        mask = np.zeros(X.shape[1], dtype=bool)
        mask[self.selected_] = True
        self.support_ = mask
        return self

    def _get_support_mask(self):
        check_is_fitted(self, "support_")
        return self.support_


class AdaptiveFeatureSelector(_GreedySelector):
    """Adaptive greedy: observe each chosen feature's true column before the next pick.

    ``X`` passed to :meth:`fit` is the noisy (mean) design; ``X_true`` holds
    the columns revealed on selection and defaults to ``X``.
    """

    def __init__(self, n_features_to_select=10, noise=0.1, n_samples=DEFAULT_SAMPLES, random_state=None):
        self.n_features_to_select = n_features_to_select
        self.noise = noise
        self.n_samples = n_samples
        self.random_state = random_state

    def fit(self, X, y, X_true=None):
        X, y, inst = self._instance(X, y)
        truth = check_true_design(X_true, X)
        k = check_budget(self.n_features_to_select, X.shape[1])
        run = adaptive_greedy(inst, k, truth)
        self.gains_ = np.array(run.gains)
        self.score_ = inst.value(run.selected, truth)
        return self._finish(X, run.selected)


class NonAdaptiveFeatureSelector(_GreedySelector):
    """Greedy on the expected objective, estimated from sampled noisy designs."""

    def __init__(self, n_features_to_select=10, noise=0.1, n_samples=32, random_state=None):
        self.n_features_to_select = n_features_to_select
        self.noise = noise
        self.n_samples = n_samples
        self.random_state = random_state

    def fit(self, X, y):
        X, y, inst = self._instance(X, y)
        k = check_budget(self.n_features_to_select, X.shape[1])
        return self._finish(X, non_adaptive_greedy_saa(inst, k, n_scenarios=self.n_samples))


class NoiseObliviousSelector(_GreedySelector):
    """Greedy on the mean design, ignoring noise."""

    def __init__(self, n_features_to_select=10):
        self.n_features_to_select = n_features_to_select

    noise = 0.0
    n_samples = 1
    random_state = None

    def fit(self, X, y):
        X, y, inst = self._instance(X, y)
        k = check_budget(self.n_features_to_select, X.shape[1])
        return self._finish(X, noise_oblivious_greedy(inst, k))
