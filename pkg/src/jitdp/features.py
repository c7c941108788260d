"""Feature engineering, correlation-based subset selection, and minority
oversampling for training data."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .records import DEFECTIVE, CommitRecord

RAW_FEATURES = ("ns", "nd", "nf", "entropy", "la", "ld", "lt", "fix",
                "ndev", "age", "nuc", "exp", "rexp", "sexp")

# ND and REXP are strongly collinear with NF and EXP, so they carry no
# additional signal and are dropped before modeling.
DROPPED_FEATURES = ("nd", "rexp")

ENGINEERED_FEATURES = ("ns", "nf", "entropy", "la", "ld", "lt", "fix",
                       "ndev", "age", "nuc", "exp", "sexp")

_FIX_COLUMN = ENGINEERED_FEATURES.index("fix")


@dataclass
class Dataset:
    """Engineered feature matrix with binary labels (1 = defective)."""

    feature_names: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray
    hashes: tuple[str, ...]

    def __post_init__(self) -> None:
        self.feature_names = tuple(self.feature_names)
        self.hashes = tuple(self.hashes)
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=int)
        n, d = self.X.shape if self.X.ndim == 2 else (len(self.X), -1)
        if self.X.ndim != 2 or d != len(self.feature_names):
            raise ValueError("feature matrix does not match feature names")
        if len(self.y) != n or len(self.hashes) != n:
            raise ValueError("rows, labels and hashes must align")
        if n and not np.isfinite(self.X).all():
            raise ValueError("feature matrix contains NaN or infinite entries")

    def __len__(self) -> int:
        return self.X.shape[0]

    def class_counts(self) -> tuple[int, int]:
        """(defective, clean) row counts."""
        n_def = int(np.sum(self.y == 1))
        return n_def, len(self) - n_def

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=int)
        return Dataset(self.feature_names, self.X[idx], self.y[idx],
                       tuple(self.hashes[i] for i in idx))

    def select_features(self, names: Sequence[str]) -> "Dataset":
        cols = [self.feature_names.index(n) for n in names]
        return Dataset(tuple(names), self.X[:, cols], self.y, self.hashes)


def engineer_features(records: Sequence[CommitRecord]) -> Dataset:
    """Turn raw commit records into the model-ready matrix.

    Applies the relative-churn normalizations (LA/LT, LD/LT, LT/NF, NUC/NF),
    drops ND and REXP, and compresses every remaining numeric feature with
    log(1+x); the boolean FIX flag passes through as 0/1. A zero denominator
    leaves the numerator unscaled rather than discarding the commit.
    """
    rows = np.zeros((len(records), len(ENGINEERED_FEATURES)))
    y = np.zeros(len(records), dtype=int)
    hashes = []
    for i, r in enumerate(records):
        la = r.la / r.lt if r.lt > 0 else float(r.la)
        ld = r.ld / r.lt if r.lt > 0 else float(r.ld)
        lt = r.lt / r.nf if r.nf > 0 else float(r.lt)
        nuc = r.nuc / r.nf if r.nf > 0 else float(r.nuc)
        rows[i] = (r.ns, r.nf, r.entropy, la, ld, lt, float(r.fix),
                   r.ndev, r.age, nuc, r.exp, r.sexp)
        y[i] = 1 if r.label == DEFECTIVE else 0
        hashes.append(r.hash)
    X = np.log1p(rows)
    X[:, _FIX_COLUMN] = rows[:, _FIX_COLUMN]
    return Dataset(ENGINEERED_FEATURES, X, y, tuple(hashes))


@dataclass(frozen=True)
class CfsResult:
    selected: tuple[str, ...]
    merit: float
    k: int
    r_cf: float
    r_ff: float


def _abs_correlations(data: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """|Pearson| feature-feature matrix and |point-biserial| feature-class
    vector; constant columns get correlation 0 everywhere."""
    X = data.X
    y = data.y.astype(float)
    Xc = X - X.mean(axis=0)
    yc = y - y.mean()
    sx = np.sqrt((Xc ** 2).sum(axis=0))
    sy = math.sqrt(float((yc ** 2).sum()))

    d = X.shape[1]
    ff = np.zeros((d, d))
    cf = np.zeros(d)
    live = sx > 0
    if live.any():
        denom = np.outer(sx, sx)
        with np.errstate(divide="ignore", invalid="ignore"):
            raw = np.abs(Xc.T @ Xc) / denom
        ff[np.ix_(live, live)] = raw[np.ix_(live, live)]
        if sy > 0:
            cf[live] = np.abs(Xc.T @ yc)[live] / (sx[live] * sy)
    np.fill_diagonal(ff, 1.0)
    return ff, cf


def _merit(ff: np.ndarray, cf: np.ndarray, idx: tuple[int, ...]) -> float:
    k = len(idx)
    cols = list(idx)
    r_cf = float(cf[cols].mean())
    if k == 1:
        r_ff = 0.0
    else:
        sub = ff[np.ix_(cols, cols)]
        r_ff = float(sub[np.triu_indices(k, 1)].mean())
    return k * r_cf / math.sqrt(k + k * (k - 1) * r_ff)


def subset_merit(data: Dataset, names: Sequence[str]) -> float:
    """CFS merit k*r_cf / sqrt(k + k(k-1)*r_ff) for a named feature subset."""
    ff, cf = _abs_correlations(data)
    idx = tuple(data.feature_names.index(n) for n in names)
    return _merit(ff, cf, idx)


def cfs_select(train: Dataset, max_stale: int = 5) -> CfsResult:
    """Best-first search over feature subsets maximizing the CFS merit.

    Deterministic: merit ties prefer the smaller subset and then the
    lexicographically earlier feature-name tuple. The search stops after
    ``max_stale`` consecutive expansions that fail to improve the best
    subset seen so far.
    """
    if len(train) < 2:
        raise ValueError("cfs_select needs at least two training rows")
    if 0 in train.class_counts():
        raise ValueError("cfs_select needs both classes present")

    ff, cf = _abs_correlations(train)
    names = train.feature_names
    d = len(names)
    tol = 1e-12

    def name_key(idx: tuple[int, ...]) -> tuple[str, ...]:
        return tuple(names[i] for i in idx)

    queue: list[tuple[float, tuple[int, ...]]] = [
        (_merit(ff, cf, (j,)), (j,)) for j in range(d)
    ]
    visited = {frozenset((j,)) for j in range(d)}

    best_merit = -math.inf
    best_idx: tuple[int, ...] = ()
    stale = 0
    while queue and stale < max_stale:
        pos = min(range(len(queue)),
                  key=lambda i: (-queue[i][0], len(queue[i][1]),
                                 name_key(queue[i][1])))
        merit, idx = queue.pop(pos)
        improved = merit > best_merit + tol
        tied_better = (abs(merit - best_merit) <= tol and
                       (len(idx), name_key(idx)) < (len(best_idx),
                                                    name_key(best_idx)))
        if improved or not best_idx:
            best_merit, best_idx = merit, idx
            stale = 0
        else:
            if tied_better:
                best_merit, best_idx = merit, idx
            stale += 1
        for j in range(d):
            if j in idx:
                continue
            child = tuple(sorted(idx + (j,)))
            key = frozenset(child)
            if key in visited:
                continue
            visited.add(key)
            queue.append((_merit(ff, cf, child), child))

    k = len(best_idx)
    cols = list(best_idx)
    r_cf = float(cf[cols].mean())
    r_ff = 0.0 if k == 1 else float(
        ff[np.ix_(cols, cols)][np.triu_indices(k, 1)].mean())
    return CfsResult(selected=name_key(best_idx), merit=best_merit,
                     k=k, r_cf=r_cf, r_ff=r_ff)


def smote_balance(train: Dataset, k: int = 5, seed: int = 0) -> Dataset:
    """Oversample the minority class to an exact 1:1 ratio.

    Synthetic rows interpolate between a minority row and one of its k
    nearest minority neighbours (Euclidean, u ~ U[0,1)), so every synthetic
    point stays inside the minority bounding box. Original rows pass through
    verbatim. Never apply this to test data.
    """
    n_def, n_clean = train.class_counts()
    if n_def == 0 or n_clean == 0:
        raise ValueError("smote_balance requires both classes present")
    if n_def == n_clean:
        return train

    minority = 1 if n_def < n_clean else 0
    need = abs(n_def - n_clean)
    rows = train.X[train.y == minority]
    m = len(rows)
    k_eff = max(1, min(k, m - 1))

    rng = np.random.default_rng(seed)
    if m > 1:
        dist = np.linalg.norm(rows[:, None, :] - rows[None, :, :], axis=2)
        order = np.argsort(dist, axis=1, kind="stable")
        neighbours = order[:, 1:k_eff + 1]

    synthetic = np.empty((need, train.X.shape[1]))
    for i in range(need):
        base = i % m
        other = base if m == 1 else int(neighbours[base, rng.integers(0, k_eff)])
        u = rng.random()
        synthetic[i] = rows[base] + u * (rows[other] - rows[base])

    X = np.vstack([train.X, synthetic])
    y = np.concatenate([train.y, np.full(need, minority, dtype=int)])
    hashes = train.hashes + tuple(f"smote-{i:05d}" for i in range(need))
    return Dataset(train.feature_names, X, y, hashes)
