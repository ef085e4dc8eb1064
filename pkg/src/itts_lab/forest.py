"""Random forest regression built on exhaustive-threshold CART trees.

Trees minimise weighted squared error, consider every feature at every
split, and grow until a node is pure or holds fewer than two distinct
samples. Ties between candidate splits go to the lowest feature index,
then the lowest threshold.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .errors import EvalError, TrainingError
from .seeding import derive_seed


@dataclass
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    weight: np.ndarray
    impurity: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def is_leaf(self, node: int) -> bool:
        return self.feature[node] < 0

    def predict(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        return _kernels.predict_tree(self.feature, self.threshold, self.left, self.right, self.value, X)

    def used_features(self) -> set[int]:
        return {int(f) for f in self.feature if f >= 0}


@dataclass
class ForestParams:
    n_estimators: int = 100
    seed: int = 0
    bootstrap: bool = True
    threads: int = 1


@dataclass
class ForestModel:
    trees: list[Tree]
    n_estimators: int
    seed: int
    feature_names: list[str] = field(default_factory=list)
    bootstrap: bool = True

    def predict(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        acc = np.zeros(X.shape[0], dtype=np.float64)
        for t in self.trees:
            acc += t.predict(X)
        return acc / len(self.trees)

    def used_features(self) -> set[int]:
        out = set()
        for t in self.trees:
            out |= t.used_features()
        return out


def presort(X: np.ndarray) -> np.ndarray:
    """Per-feature stable sample ordering, shape (F, n)."""
    return np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T, dtype=np.int64)


def fit_tree(X, y, sample_weight=None, order=None) -> Tree:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    w = np.ones(len(y)) if sample_weight is None else np.ascontiguousarray(sample_weight, dtype=np.float64)
    if order is None:
        order = presort(X)
    return Tree(*_kernels.grow_tree(X, y, w, order))


def _bootstrap_weights(n: int, seed: int, tree_index: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([seed, tree_index]))
    draws = rng.integers(0, n, size=n)
    return np.bincount(draws, minlength=n).astype(np.float64)


def fit_forest(X, y, params: Optional[ForestParams] = None, feature_names: Optional[Sequence[str]] = None
               ) -> ForestModel:
    """Fit ``n_estimators`` trees, each on its own seeded bootstrap sample.

    Tree ``i`` draws from ``SeedSequence([seed, i])``, so the thread count
    does not affect the result.
    """
    params = params or ForestParams()
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim != 2 or len(y) != X.shape[0]:
        raise TrainingError(f"bad shapes X{X.shape} y{y.shape}")
    n, F = X.shape
    if n < 2:
        raise TrainingError(f"need at least 2 rows, got {n}")
    if F == 0 or not np.any(X.max(axis=0) > X.min(axis=0)):
        raise TrainingError("every feature is constant")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise TrainingError("non-finite values in training data")
    if params.n_estimators < 1:
        raise TrainingError("n_estimators must be >= 1")

    order = presort(X)

    def one(i):
        w = _bootstrap_weights(n, params.seed, i) if params.bootstrap else np.ones(n)
        return fit_tree(X, y, w, order)

    if params.threads > 1 and params.n_estimators > 1:
        with ThreadPoolExecutor(max_workers=params.threads) as pool:
            trees = list(pool.map(one, range(params.n_estimators)))
    else:
        trees = [one(i) for i in range(params.n_estimators)]
    names = list(feature_names) if feature_names is not None else [f"x{i}" for i in range(F)]
    return ForestModel(trees, params.n_estimators, params.seed, names, params.bootstrap)


def gini_importance(model: ForestModel) -> np.ndarray:
    """Impurity-decrease importance, averaged over trees and normalised to sum 1.

    Each split contributes node_weight * impurity minus the same for its two
    children, scaled by the root weight. A forest without a single split
    returns all zeros (see :func:`has_splits`).
    """
    F = len(model.feature_names)
    total = np.zeros(F, dtype=np.float64)
    for t in model.trees:
        imp = np.zeros(F, dtype=np.float64)
        for node in range(t.n_nodes):
            f = t.feature[node]
            if f < 0:
                continue
            l, r = t.left[node], t.right[node]
            dec = (t.weight[node] * t.impurity[node] - t.weight[l] * t.impurity[l]
                   - t.weight[r] * t.impurity[r])
            imp[f] += max(dec, 0.0)
        total += imp / t.weight[0]
    total /= len(model.trees)
    s = math.fsum(total)
    if s <= 0.0:
        return np.zeros(F)
    return total / s


def has_splits(model: ForestModel) -> bool:
    return any(t.n_nodes > 1 for t in model.trees)


def r2_score(y_true, y_pred) -> float:
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    ss_res = float(np.sum((y_true - y_pred) ** 2))
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else 0.0
    return 1.0 - ss_res / ss_tot


@dataclass
class PermutationResult:
    baseline: float
    mean: np.ndarray
    std: np.ndarray
    repeats: int
    raw: np.ndarray  # (F, R) drops


def permutation_importance(model: ForestModel, X, y, repeats: int = 10, seed: int = 0,
                           min_rows: int = 10, columns: Optional[Sequence[int]] = None) -> PermutationResult:
    """Drop in R^2 when a column is shuffled, ``repeats`` seeded shuffles each.

    Columns no tree splits on cannot change a prediction, so their drop is
    exactly zero and they are not re-scored.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] < min_rows:
        raise EvalError(f"held-out set has {X.shape[0]} rows, need at least {min_rows}")
    F = X.shape[1]
    baseline = r2_score(y, model.predict(X))
    used = model.used_features()
    cols = range(F) if columns is None else columns
    raw = np.zeros((F, repeats), dtype=np.float64)
    for f in cols:
        if f not in used:
            continue
        for r in range(repeats):
            raw[f, r] = baseline - _shuffled_r2(model, X, y, [f], seed, f, r)
    return PermutationResult(baseline, raw.mean(axis=1), raw.std(axis=1), repeats, raw)


def group_permutation_importance(model: ForestModel, X, y, groups: dict[str, Sequence[int]],
                                 repeats: int = 10, seed: int = 0) -> dict[str, tuple[float, float]]:
    """Like :func:`permutation_importance`, but all columns of a group share one shuffle."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    baseline = r2_score(y, model.predict(X))
    used = model.used_features()
    out = {}
    for gi, (name, cols) in enumerate(groups.items()):
        cols = list(cols)
        if not used.intersection(cols):
            out[name] = (0.0, 0.0)
            continue
        drops = [baseline - _shuffled_r2(model, X, y, cols, seed, 1_000_000 + gi, r) for r in range(repeats)]
        out[name] = (float(np.mean(drops)), float(np.std(drops)))
    return out


def _shuffled_r2(model, X, y, cols, seed, unit, rep) -> float:
    rng = np.random.default_rng(np.random.SeedSequence([seed, unit, rep]))
    perm = rng.permutation(X.shape[0])
    Xp = X.copy()
    Xp[:, cols] = X[perm][:, cols]
    return r2_score(y, model.predict(Xp))


@dataclass
class ProbeResult:
    survivors: list[int]
    probe_gini: float
    gini: np.ndarray  # over the original columns followed by the probe
    empty: bool


def probe_eliminate(X, y, params: Optional[ForestParams] = None, probe_seed: Optional[int] = None
                    ) -> ProbeResult:
    """Append a U[0,1) noise column, fit, keep features whose Gini importance beats it."""
    params = params or ForestParams()
    X = np.asarray(X, dtype=np.float64)
    if probe_seed is None:
        probe_seed = derive_seed(params.seed, "probe")
    probe = np.random.default_rng(probe_seed).random(X.shape[0])
    Xa = np.column_stack([X, probe])
    model = fit_forest(Xa, y, params)
    gini = gini_importance(model)
    pg = float(gini[-1])
    survivors = [f for f in range(X.shape[1]) if gini[f] > pg]
    return ProbeResult(survivors, pg, gini, not survivors)
