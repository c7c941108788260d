"""Six deterministic classifiers built on numpy: logistic regression,
k-nearest neighbours, CART decision tree, random forest, Gaussian naive
Bayes, and a linear SVM with Platt-scaled probabilities.

Every learner is a pure function of (training data, seed); trained models are
immutable and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .features import Dataset

PROB_FLOOR = 1e-6


class SingleClassError(ValueError):
    """Training data contains only one class."""


class ColumnMismatchError(ValueError):
    """Prediction features do not match the training columns."""


class LearnerKind(str, Enum):
    LR = "LR"
    KNN = "KNN"
    DT = "DT"
    RF = "RF"
    NB = "NB"
    SVM = "SVM"


@dataclass(frozen=True)
class LearnerParams:
    """Fixed hyperparameters; no tuning happens anywhere in the rig."""

    knn_k: int = 5
    rf_trees: int = 100
    rf_bootstrap: bool = True
    rf_max_features: int | str | None = "sqrt"
    dt_max_depth: Optional[int] = None
    svm_c: float = 1.0
    svm_iters: int = 1000
    lr_rate: float = 0.1
    lr_iters: int = 1000


@dataclass(frozen=True)
class Model:
    kind: LearnerKind
    feature_names: tuple[str, ...]
    impl: object


def train(kind: LearnerKind, data: Dataset, seed: int = 0,
          params: Optional[LearnerParams] = None) -> Model:
    if 0 in data.class_counts():
        raise SingleClassError("training data must contain both classes")
    if len(data) < 2:
        raise SingleClassError("training data must have at least two rows")
    params = params or LearnerParams()
    rng = np.random.default_rng(seed)
    impl = _FITTERS[LearnerKind(kind)](data.X, data.y, rng, params)
    return Model(kind=LearnerKind(kind), feature_names=data.feature_names,
                 impl=impl)


def predict_proba(model: Model, data: Dataset) -> np.ndarray:
    """P(defective) per row, clamped to [1e-6, 1 - 1e-6]."""
    if tuple(data.feature_names) != tuple(model.feature_names):
        raise ColumnMismatchError(
            f"model trained on {model.feature_names}, "
            f"got {tuple(data.feature_names)}")
    p = np.asarray(model.impl.proba(data.X), dtype=float)
    return np.clip(p, PROB_FLOOR, 1.0 - PROB_FLOOR)


def classify(model: Model, data: Dataset, threshold: float = 0.5) -> np.ndarray:
    """Hard labels; a probability exactly at the threshold goes defective."""
    return (predict_proba(model, data) >= threshold).astype(int)


def model_params(model: Model) -> dict:
    """JSON-friendly dump of fitted parameters, for debugging only."""
    return model.impl.params()


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _standardize(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    mu = X.mean(axis=0)
    sigma = X.std(axis=0)
    sigma[sigma == 0] = 1.0
    return (X - mu) / sigma, mu, sigma


def logistic_loss_grad(w: np.ndarray, Xb: np.ndarray,
                       y: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean negative log-likelihood and its gradient; Xb carries the bias
    column. Exposed so the gradient can be checked against finite
    differences."""
    p = _sigmoid(Xb @ w)
    eps = 1e-12
    loss = -float(np.mean(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps)))
    grad = Xb.T @ (p - y) / len(y)
    return loss, grad


class _Logistic:
    def __init__(self, X, y, rng, params: LearnerParams):
        Z, self.mu, self.sigma = _standardize(X)
        Xb = np.hstack([np.ones((len(Z), 1)), Z])
        w = np.zeros(Xb.shape[1])
        for _ in range(params.lr_iters):
            _, grad = logistic_loss_grad(w, Xb, y)
            w -= params.lr_rate * grad
        self.w = w

    def proba(self, X):
        Z = (X - self.mu) / self.sigma
        Xb = np.hstack([np.ones((len(Z), 1)), Z])
        return _sigmoid(Xb @ self.w)

    def params(self):
        return {"weights": self.w.tolist(), "mu": self.mu.tolist(),
                "sigma": self.sigma.tolist()}


class _Knn:
    def __init__(self, X, y, rng, params: LearnerParams):
        self.X = X.copy()
        self.y = y.copy()
        self.k = max(1, min(params.knn_k, len(y)))

    def proba(self, X):
        out = np.empty(len(X))
        for i, row in enumerate(X):
            dist = np.linalg.norm(self.X - row, axis=1)
            # Stable sort breaks distance ties by training-set order.
            nearest = np.argsort(dist, kind="stable")[:self.k]
            out[i] = self.y[nearest].mean()
        return out

    def params(self):
        return {"k": self.k, "n_train": len(self.y)}


class _TreeNode:
    __slots__ = ("feature", "threshold", "left", "right", "prob")

    def __init__(self):
        self.feature: Optional[int] = None
        self.threshold = 0.0
        self.left: Optional["_TreeNode"] = None
        self.right: Optional["_TreeNode"] = None
        self.prob = 0.0


def _best_split(X: np.ndarray, idx: np.ndarray, y: np.ndarray,
                candidates: np.ndarray) -> Optional[tuple[int, float]]:
    """Weighted-Gini argmin over (feature, midpoint threshold); ties resolve
    to the lowest feature index, then the lowest threshold."""
    sub = X[idx]
    ys = y[idx]
    n = len(idx)
    best_score = math.inf
    best: Optional[tuple[int, float]] = None
    for j in candidates:
        xs = sub[:, j]
        order = np.argsort(xs, kind="stable")
        xo = xs[order]
        yo = ys[order]
        cuts = np.nonzero(xo[:-1] < xo[1:])[0]
        if cuts.size == 0:
            continue
        pos = np.cumsum(yo)
        nl = cuts + 1.0
        nr = n - nl
        pl = pos[cuts]
        pr = pos[-1] - pl
        gini_l = 1.0 - (pl / nl) ** 2 - ((nl - pl) / nl) ** 2
        gini_r = 1.0 - (pr / nr) ** 2 - ((nr - pr) / nr) ** 2
        score = (nl * gini_l + nr * gini_r) / n
        i = int(np.argmin(score))
        if score[i] < best_score - 1e-12:
            best_score = float(score[i])
            best = (int(j), float((xo[cuts[i]] + xo[cuts[i] + 1]) / 2.0))
    return best


def _build_tree(X: np.ndarray, y: np.ndarray, max_depth: Optional[int],
                rng: np.random.Generator,
                max_features: Optional[int]) -> _TreeNode:
    d = X.shape[1]
    root = _TreeNode()
    stack = [(root, np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        ys = y[idx]
        node.prob = float(ys.mean())
        if (ys[0] == ys).all() or len(idx) < 2:
            continue
        if max_depth is not None and depth >= max_depth:
            continue
        if max_features is not None and max_features < d:
            cand = np.sort(rng.choice(d, size=max_features, replace=False))
        else:
            cand = np.arange(d)
        split = _best_split(X, idx, y, cand)
        if split is None and max_features is not None and max_features < d:
            split = _best_split(X, idx, y, np.arange(d))
        if split is None:
            continue
        j, thr = split
        mask = X[idx, j] <= thr
        node.feature = j
        node.threshold = thr
        node.left = _TreeNode()
        node.right = _TreeNode()
        stack.append((node.right, idx[~mask], depth + 1))
        stack.append((node.left, idx[mask], depth + 1))
    return root


def _tree_proba(root: _TreeNode, X: np.ndarray) -> np.ndarray:
    out = np.empty(len(X))
    stack = [(root, np.arange(len(X)))]
    while stack:
        node, idx = stack.pop()
        if idx.size == 0:
            continue
        if node.feature is None:
            out[idx] = node.prob
            continue
        mask = X[idx, node.feature] <= node.threshold
        stack.append((node.left, idx[mask]))
        stack.append((node.right, idx[~mask]))
    return out


def _count_nodes(root: _TreeNode) -> int:
    stack, n = [root], 0
    while stack:
        node = stack.pop()
        n += 1
        if node.feature is not None:
            stack.extend([node.left, node.right])
    return n


class _DecisionTree:
    def __init__(self, X, y, rng, params: LearnerParams):
        self.root = _build_tree(X, y, params.dt_max_depth, rng, None)

    def proba(self, X):
        return _tree_proba(self.root, X)

    def params(self):
        return {"nodes": _count_nodes(self.root)}


class _RandomForest:
    def __init__(self, X, y, rng, params: LearnerParams):
        n, d = X.shape
        mf = params.rf_max_features
        if mf == "sqrt":
            mf = max(1, int(math.sqrt(d)))
        tree_seeds = rng.integers(0, 2 ** 62, size=params.rf_trees)
        self.roots = []
        for t in range(params.rf_trees):
            tree_rng = np.random.default_rng(int(tree_seeds[t]))
            if params.rf_bootstrap:
                idx = tree_rng.integers(0, n, size=n)
            else:
                idx = np.arange(n)
            self.roots.append(
                _build_tree(X[idx], y[idx], params.dt_max_depth, tree_rng, mf))

    def proba(self, X):
        votes = np.stack([_tree_proba(r, X) for r in self.roots])
        return votes.mean(axis=0)

    def params(self):
        return {"trees": len(self.roots)}


class _GaussianNB:
    def __init__(self, X, y, rng, params: LearnerParams):
        eps = 1e-9 * max(float(np.var(X, axis=0).max()), 1e-3)
        self.priors = {}
        self.means = {}
        self.vars = {}
        for c in (0, 1):
            rows = X[y == c]
            self.priors[c] = len(rows) / len(y)
            self.means[c] = rows.mean(axis=0)
            self.vars[c] = rows.var(axis=0) + eps

    def _loglik(self, X, c):
        mu, var = self.means[c], self.vars[c]
        return (-0.5 * np.log(2 * math.pi * var)
                - (X - mu) ** 2 / (2 * var)).sum(axis=1) + math.log(self.priors[c])

    def proba_pair(self, X) -> tuple[np.ndarray, np.ndarray]:
        """(P(clean), P(defective)) per row; the pair sums to one."""
        l0 = self._loglik(X, 0)
        l1 = self._loglik(X, 1)
        p1 = _sigmoid(l1 - l0)
        return 1.0 - p1, p1

    def proba(self, X):
        return self.proba_pair(X)[1]

    def params(self):
        return {"priors": self.priors,
                "means": {c: m.tolist() for c, m in self.means.items()},
                "vars": {c: v.tolist() for c, v in self.vars.items()}}


def _fit_platt(scores: np.ndarray, y: np.ndarray,
               max_iter: int = 100) -> tuple[float, float]:
    """Fit P(y=1|s) = 1/(1+exp(A*s+B)) by damped Newton steps on the
    regularized targets (Platt scaling)."""
    n1 = float(y.sum())
    n0 = float(len(y) - n1)
    hi = (n1 + 1.0) / (n1 + 2.0)
    lo = 1.0 / (n0 + 2.0)
    t = np.where(y == 1, hi, lo)

    def nll(a: float, b: float) -> float:
        z = a * scores + b
        return float(np.sum(np.where(
            z >= 0, t * z + np.log1p(np.exp(-z)),
            (t - 1.0) * z + np.log1p(np.exp(z)))))

    a, b = 0.0, math.log((n0 + 1.0) / (n1 + 1.0))
    loss = nll(a, b)
    for _ in range(max_iter):
        z = a * scores + b
        p = _sigmoid(-z)          # current P(y=1)
        g = t - p
        g1 = float(np.sum(g * scores))
        g2 = float(np.sum(g))
        if abs(g1) < 1e-9 and abs(g2) < 1e-9:
            break
        w = p * (1.0 - p)
        h11 = float(np.sum(w * scores * scores)) + 1e-12
        h22 = float(np.sum(w)) + 1e-12
        h12 = float(np.sum(w * scores))
        det = h11 * h22 - h12 * h12
        if det <= 0:
            break
        da = -(h22 * g1 - h12 * g2) / det
        db = -(h11 * g2 - h12 * g1) / det
        step = 1.0
        for _ in range(20):
            cand = nll(a + step * da, b + step * db)
            if cand < loss + 1e-10:
                a, b, loss = a + step * da, b + step * db, cand
                break
            step /= 2.0
        else:
            break
    return a, b


class _LinearSvm:
    """Linear hinge-loss SVM by full-batch subgradient descent (Pegasos-style
    step sizes) with Platt-scaled probabilities on the margins."""

    def __init__(self, X, y, rng, params: LearnerParams):
        Z, self.mu, self.sigma = _standardize(X)
        Zb = np.hstack([np.ones((len(Z), 1)), Z])
        yy = 2.0 * y - 1.0
        n = len(y)
        lam = 1.0 / (params.svm_c * n)
        w = np.zeros(Zb.shape[1])
        for step in range(1, params.svm_iters + 1):
            margins = yy * (Zb @ w)
            viol = margins < 1.0
            grad = lam * w - (yy[viol, None] * Zb[viol]).sum(axis=0) / n
            w -= grad / (lam * step)
        self.w = w
        self.platt_a, self.platt_b = _fit_platt(Zb @ w, y)

    def _scores(self, X):
        Z = (X - self.mu) / self.sigma
        return np.hstack([np.ones((len(Z), 1)), Z]) @ self.w

    def proba(self, X):
        return _sigmoid(-(self.platt_a * self._scores(X) + self.platt_b))

    def params(self):
        return {"weights": self.w.tolist(), "platt": [self.platt_a,
                                                      self.platt_b]}


_FITTERS = {
    LearnerKind.LR: _Logistic,
    LearnerKind.KNN: _Knn,
    LearnerKind.DT: _DecisionTree,
    LearnerKind.RF: _RandomForest,
    LearnerKind.NB: _GaussianNB,
    LearnerKind.SVM: _LinearSvm,
}
