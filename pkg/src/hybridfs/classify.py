"""Classifier-accuracy fitness: 1-NN leave-one-out and one-vs-rest linear SVM k-fold."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import Dataset, FoldPlan, apply_mask, as_mask, stratified_kfold

log = logging.getLogger(__name__)

# Above this many pairwise difference entries, distances are built row by row.
_DENSE_DISTANCE_LIMIT = 2_000_000


class Evaluator(str, enum.Enum):
    KNN_LOOCV = "knn"
    SVM_OVR_KFOLD = "svm"


@dataclass(frozen=True)
class FitnessSpec:
    evaluator: Evaluator = Evaluator.KNN_LOOCV
    K: int = 10
    svm_C: float = 1.0
    rng_seed: int = 0
    svm_tol: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "evaluator", Evaluator(self.evaluator))
        if self.evaluator is Evaluator.SVM_OVR_KFOLD and self.K < 2:
            raise ValueError(f"K must be >= 2 for the SVM evaluator (got {self.K})")
        if self.svm_C <= 0:
            raise ValueError(f"svm_C must be positive (got {self.svm_C})")


@dataclass(frozen=True)
class BinarySvmModel:
    weights: np.ndarray
    bias: float
    class_of_interest: int
    n_iter: int = 0
    kkt_gap: float = 0.0
    objective_history: tuple[float, ...] = ()

    def decision(self, X) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.weights + self.bias


# --------------------------------------------------------------------------
# 1-NN


def knn_1nn_predict(train_X, train_y, query) -> int:
    """Label of the Euclidean-nearest training row; ties go to the lowest index."""
    X = np.asarray(train_X, dtype=np.float64)
    q = np.asarray(query, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] == 0:
        raise ValueError("empty training set")
    if q.ndim == 0:
        q = q[None]
    if q.shape != (X.shape[1],):
        raise ValueError(f"query has {q.size} features, training set has {X.shape[1]}")
    dist = ((X - q) ** 2).sum(axis=1)
    return int(np.asarray(train_y)[int(np.argmin(dist))])


def _squared_distances(X: np.ndarray) -> np.ndarray:
    n, m = X.shape
    if n * n * m <= _DENSE_DISTANCE_LIMIT:
        return ((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2)
    out = np.empty((n, n))
    for i in range(n):
        out[i] = ((X - X[i]) ** 2).sum(axis=1)
    return out


def loocv_predictions_1nn(X, y) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    dist = _squared_distances(X)
    np.fill_diagonal(dist, np.inf)
    return y[np.argmin(dist, axis=1)]


def loocv_accuracy_1nn(d: Dataset) -> float:
    """Fraction of samples whose nearest other sample shares their label.

    A dataset without feature columns scores 0.0.
    """
    if d.n_samples < 2:
        raise ValueError("LOOCV needs at least 2 samples")
    if d.n_features == 0:
        return 0.0
    pred = loocv_predictions_1nn(d.values, d.labels)
    return int((pred == d.labels).sum()) / d.n_samples


# --------------------------------------------------------------------------
# Linear SVM (SMO on the dual)


try:
    from numba import njit
except ImportError:  # pragma: no cover - the pure-Python path is just slower
    def njit(*args, **kwargs):
        return (lambda f: f) if not args or not callable(args[0]) else args[0]


@njit(cache=True)
def _smo_core(K, y, C, tol, max_iter, record):
    """Minimise 0.5 a'Qa - e'a s.t. 0 <= a <= C, y'a = 0, with Q = yy' * K.

    Working pairs: maximal violator for i, second-order gain for j. Stops
    once the KKT gap m(a) - M(a) drops below ``tol``.
    """
    n = y.shape[0]
    alpha = np.zeros(n)
    G = -np.ones(n)
    history = np.zeros(max_iter + 1 if record else 1)
    gap = np.inf
    it = 0
    while it < max_iter:
        i = -1
        m = -np.inf
        for t in range(n):
            if (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0):
                s = -y[t] * G[t]
                if s > m:
                    m = s
                    i = t
        if i < 0:
            gap = 0.0
            break
        M = np.inf
        j = -1
        best = -np.inf
        for t in range(n):
            if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C):
                s = -y[t] * G[t]
                if s < M:
                    M = s
                b = m - s
                if b > 0:
                    a = K[i, i] + K[t, t] - 2.0 * K[i, t]
                    if a <= 1e-12:
                        a = 1e-12
                    g = b * b / a
                    if g > best:
                        best = g
                        j = t
        if j < 0:
            gap = 0.0
            break
        gap = m - M
        if gap < tol:
            break
        a = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if a <= 1e-12:
            a = 1e-12
        step = (m + y[j] * G[j]) / a
        lim_i = C - alpha[i] if y[i] > 0 else alpha[i]
        lim_j = alpha[j] if y[j] > 0 else C - alpha[j]
        if lim_i < step:
            step = lim_i
        if lim_j < step:
            step = lim_j
        alpha[i] += y[i] * step
        alpha[j] -= y[j] * step
        # snap to the box so bound tests stay exact
        for t in (i, j):
            if alpha[t] > C * (1.0 - 1e-12):
                alpha[t] = C
            elif alpha[t] < C * 1e-12:
                alpha[t] = 0.0
        for t in range(n):
            G[t] += step * y[t] * (K[t, i] - K[t, j])
        it += 1
        if record:
            # 0.5 a'Qa - e'a == 0.5 a'(G - e)
            obj = 0.0
            for t in range(n):
                obj += alpha[t] * (G[t] - 1.0)
            history[it] = 0.5 * obj
    return alpha, G, it, gap, history


def _smo(K: np.ndarray, y: np.ndarray, C: float, tol: float, max_iter: int, record: bool):
    K = np.ascontiguousarray(K, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    alpha, G, it, gap, history = _smo_core(K, y, float(C), float(tol), int(max_iter), bool(record))
    if it >= max_iter and gap >= tol:
        log.warning("SMO stopped at max_iter=%d with KKT gap %.3g", max_iter, gap)

    pos = y > 0
    yG = y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = float(yG[free].mean())
    else:
        ub_set = np.where(alpha >= C, ~pos, pos)
        lb_set = ~ub_set
        ub = float(yG[ub_set].min()) if ub_set.any() else np.inf
        lb = float(yG[lb_set].max()) if lb_set.any() else -np.inf
        if np.isfinite(ub) and np.isfinite(lb):
            rho = (ub + lb) / 2
        else:
            rho = ub if np.isfinite(ub) else lb
    hist = tuple(float(h) for h in history[: it + 1]) if record else ()
    return alpha, -rho, int(it), float(gap), hist


def svm_train_binary(
    X,
    labels,
    positive_class: int,
    C: float = 1.0,
    tol: float = 1e-3,
    max_iter: int = 100_000,
    kernel: np.ndarray | None = None,
    record_objective: bool = False,
) -> BinarySvmModel:
    """Soft-margin linear SVM separating ``positive_class`` from the rest.

    ``kernel`` may carry a precomputed ``X @ X.T``. If only one side is
    present the result is a constant classifier voting for that side.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    labels = np.asarray(labels)
    if X.shape[0] == 0:
        raise ValueError("empty training set")
    y = np.where(labels == positive_class, 1.0, -1.0)
    if np.all(y > 0) or np.all(y < 0):
        return BinarySvmModel(np.zeros(X.shape[1]), float(y[0]), positive_class)
    K = X @ X.T if kernel is None else kernel
    alpha, bias, n_iter, gap, history = _smo(K, y, C, tol, max_iter, record_objective)
    w = (alpha * y) @ X
    return BinarySvmModel(w, float(bias), positive_class, n_iter, gap, history)


def ovr_decide(decisions) -> np.ndarray:
    """Class per row of a (n_queries, k) decision matrix.

    A unique positive column wins; otherwise the largest value (lowest
    index on ties).
    """
    D = np.atleast_2d(np.asarray(decisions, dtype=np.float64))
    positive = D > 0
    unique = positive.sum(axis=1) == 1
    return np.where(unique, np.argmax(positive, axis=1), np.argmax(D, axis=1))


def ovr_predict(models: Sequence[BinarySvmModel], query) -> int:
    if len(models) < 2:
        raise ValueError("one-vs-rest needs at least 2 models")
    q = np.atleast_1d(np.asarray(query, dtype=np.float64))
    for mdl in models:
        if mdl.weights.shape[0] != q.shape[0]:
            raise ValueError("query dimension does not match model weights")
    decisions = np.array([float(q @ mdl.weights + mdl.bias) for mdl in models])
    return int(models[ovr_decide(decisions)[0]].class_of_interest)


def train_ovr(X, labels, n_classes: int, C: float = 1.0, tol: float = 1e-3, kernel=None):
    X = np.asarray(X, dtype=np.float64)
    K = X @ X.T if kernel is None else kernel
    return [svm_train_binary(X, labels, c, C, tol, kernel=K) for c in range(n_classes)]


def kfold_accuracy_svm(d: Dataset, spec: FitnessSpec, plan: FoldPlan | None = None) -> float:
    """Mean per-fold test accuracy of one-vs-rest linear SVMs."""
    if d.n_features == 0:
        return 0.0
    if plan is None:
        plan = stratified_kfold(d, spec.K, spec.rng_seed)
    X, y = d.values, d.labels
    gram = X @ X.T
    accs = []
    for fold in range(plan.K):
        test = plan.test_indices(fold)
        train = plan.train_indices(fold)
        models = train_ovr(
            X[train], y[train], d.n_classes, spec.svm_C, spec.svm_tol,
            kernel=gram[np.ix_(train, train)],
        )
        W = np.stack([m.weights for m in models], axis=1)
        bias = np.array([m.bias for m in models])
        pred = ovr_decide(X[test] @ W + bias)
        accs.append(float((pred == y[test]).mean()))
    return float(np.mean(accs))


def fitness(d: Dataset, mask, spec: FitnessSpec) -> float:
    """Cross-validated accuracy of the columns selected by ``mask``; 0.0 if none are."""
    m = as_mask(mask, d.n_features)
    if not m.any():
        return 0.0
    sub = apply_mask(d, m)
    if spec.evaluator is Evaluator.KNN_LOOCV:
        return loocv_accuracy_1nn(sub)
    return kfold_accuracy_svm(sub, spec)


class FitnessFunction:
    """``fitness`` bound to one dataset, memoised on the mask bits.

    The fold plan is drawn once from ``spec.rng_seed`` so the objective is a
    fixed function during a search.
    """

    def __init__(self, d: Dataset, spec: FitnessSpec, cache_size: int = 200_000):
        self.dataset = d
        self.spec = spec
        self._plan = None
        if spec.evaluator is Evaluator.SVM_OVR_KFOLD:
            self._plan = stratified_kfold(d, spec.K, spec.rng_seed)
        self._cache: dict[bytes, float] = {}
        self._cache_size = cache_size
        self.evaluations = 0

    def __call__(self, mask) -> float:
        m = as_mask(mask, self.dataset.n_features)
        key = np.packbits(m).tobytes()
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        self.evaluations += 1
        if not m.any():
            value = 0.0
        else:
            sub = apply_mask(self.dataset, m)
            if self.spec.evaluator is Evaluator.KNN_LOOCV:
                value = loocv_accuracy_1nn(sub)
            else:
                value = kfold_accuracy_svm(sub, self.spec, self._plan)
        if len(self._cache) < self._cache_size:
            self._cache[key] = value
        return value
