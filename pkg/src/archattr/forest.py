"""Bagged decision-tree classifiers built from scratch.

Two variants share one seeded kernel: random forest (bootstrap resampling,
exhaustive midpoint threshold search) and extremely randomized trees (full
sample, one uniform random threshold per candidate feature). Trees grow until
pure, depth-capped, or no candidate split has positive Gini gain; leaves keep
raw class counts. Per-tree seeds derive from the master seed and tree index,
so serial results are reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .dataset import Dataset
from .errors import NotBinary, TooFewSamples
from .seeding import SeedParts, derive_rng, derive_uint32

_TAG_TREE = 11
_TAG_FOLDS = 21
_TAG_CV_FIT = 22
_TAG_PRUNE_FIT = 31
_TAG_PRUNE_CV = 32


@dataclass(frozen=True)
class ModelSpec:
    """Ensemble hyper-parameters; defaults follow common library practice."""

    kind: str = "rf"  # "rf" | "ert"
    n_trees: int = 100
    max_depth: int | None = None
    min_samples_leaf: int = 1
    features_per_split: int | str = "sqrt"

    def __post_init__(self) -> None:
        if self.kind not in ("rf", "ert"):
            raise ValueError(f"kind must be 'rf' or 'ert', got {self.kind!r}")
        if self.n_trees < 1 or self.min_samples_leaf < 1:
            raise ValueError("n_trees and min_samples_leaf must be >= 1")
        if isinstance(self.features_per_split, str) and self.features_per_split != "sqrt":
            raise ValueError("features_per_split must be an integer or 'sqrt'")

    @property
    def bootstrap(self) -> bool:
        return self.kind == "rf"

    @property
    def random_thresholds(self) -> bool:
        return self.kind == "ert"

    def resolve_features_per_split(self, n_features: int) -> int:
        if self.features_per_split == "sqrt":
            return max(1, int(np.sqrt(n_features)))
        return min(int(self.features_per_split), n_features)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf,
            "features_per_split": self.features_per_split,
            "bootstrap": self.bootstrap,
        }


@nb.njit(cache=True)
def _fit_tree_kernel(X, y, seed, bootstrap, random_thresholds, m_features, max_depth, min_leaf):
    n, p = X.shape
    np.random.seed(seed)
    inbag = np.zeros(n, np.int64)
    samples = np.empty(n, np.int64)
    if bootstrap:
        draws = np.random.randint(0, n, n)
        for i in range(n):
            samples[i] = draws[i]
            inbag[draws[i]] += 1
    else:
        for i in range(n):
            samples[i] = i
            inbag[i] += 1

    cap = 2 * n + 1
    feat = np.full(cap, -1, np.int64)
    thr = np.zeros(cap, np.float64)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    c0 = np.zeros(cap, np.int64)
    c1 = np.zeros(cap, np.int64)
    imp = np.zeros(p, np.float64)

    stack = np.zeros((cap, 5), np.int64)  # start, end, depth, parent, is_left
    stack[0, 0] = 0
    stack[0, 1] = n
    stack[0, 3] = -1
    top = 1
    n_nodes = 0
    vbuf = np.empty(n, np.float64)
    lbuf = np.empty(n, np.int64)
    sbuf = np.empty(n, np.int64)

    while top > 0:
        top -= 1
        start = stack[top, 0]
        end = stack[top, 1]
        depth = stack[top, 2]
        parent = stack[top, 3]
        is_left = stack[top, 4]
        node = n_nodes
        n_nodes += 1
        if parent >= 0:
            if is_left == 1:
                left[parent] = node
            else:
                right[parent] = node
        k = end - start
        ones = 0
        for i in range(start, end):
            ones += y[samples[i]]
        zeros = k - ones
        c0[node] = zeros
        c1[node] = ones
        if ones == 0 or zeros == 0 or k < 2 * min_leaf or (max_depth >= 0 and depth >= max_depth):
            continue
        g_node = 1.0 - ((zeros / k) ** 2 + (ones / k) ** 2)

        order_feats = np.random.permutation(p)[:m_features]
        best_gain = 0.0
        best_f = -1
        best_t = 0.0
        for fi in range(m_features):
            f = order_feats[fi]
            if random_thresholds:
                lo = X[samples[start], f]
                hi = lo
                for i in range(start + 1, end):
                    v = X[samples[i], f]
                    if v < lo:
                        lo = v
                    elif v > hi:
                        hi = v
                if hi <= lo:
                    continue
                t = lo + np.random.random() * (hi - lo)
                nl = 0
                l1 = 0
                for i in range(start, end):
                    if X[samples[i], f] <= t:
                        nl += 1
                        l1 += y[samples[i]]
                nr = k - nl
                if nl < min_leaf or nr < min_leaf:
                    continue
                l0 = nl - l1
                r1 = ones - l1
                r0 = nr - r1
                gl = 1.0 - ((l0 / nl) ** 2 + (l1 / nl) ** 2)
                gr = 1.0 - ((r0 / nr) ** 2 + (r1 / nr) ** 2)
                gain = g_node - (nl * gl + nr * gr) / k
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    best_t = t
            else:
                for i in range(k):
                    vbuf[i] = X[samples[start + i], f]
                    lbuf[i] = y[samples[start + i]]
                order = np.argsort(vbuf[:k])
                l1 = 0
                for i in range(1, k):
                    l1 += lbuf[order[i - 1]]
                    prev = vbuf[order[i - 1]]
                    cur = vbuf[order[i]]
                    if cur <= prev:
                        continue
                    nl = i
                    nr = k - i
                    if nl < min_leaf or nr < min_leaf:
                        continue
                    l0 = nl - l1
                    r1 = ones - l1
                    r0 = nr - r1
                    gl = 1.0 - ((l0 / nl) ** 2 + (l1 / nl) ** 2)
                    gr = 1.0 - ((r0 / nr) ** 2 + (r1 / nr) ** 2)
                    gain = g_node - (nl * gl + nr * gr) / k
                    if gain > best_gain:
                        best_gain = gain
                        best_f = f
                        mid = 0.5 * (prev + cur)
                        if mid >= cur:  # midpoint rounded up between adjacent floats
                            mid = prev
                        best_t = mid

        if best_f < 0:
            continue
        feat[node] = best_f
        thr[node] = best_t
        imp[best_f] += (k / n) * best_gain
        nl = 0
        for i in range(start, end):  # stable partition keeps ordering deterministic
            if X[samples[i], best_f] <= best_t:
                sbuf[nl] = samples[i]
                nl += 1
        pos = nl
        for i in range(start, end):
            if X[samples[i], best_f] > best_t:
                sbuf[pos] = samples[i]
                pos += 1
        for i in range(k):
            samples[start + i] = sbuf[i]
        stack[top, 0] = start
        stack[top, 1] = start + nl
        stack[top, 2] = depth + 1
        stack[top, 3] = node
        stack[top, 4] = 1
        top += 1
        stack[top, 0] = start + nl
        stack[top, 1] = end
        stack[top, 2] = depth + 1
        stack[top, 3] = node
        stack[top, 4] = 0
        top += 1

    total = imp.sum()
    if total > 0.0:
        imp /= total
    return feat[:n_nodes], thr[:n_nodes], left[:n_nodes], right[:n_nodes], \
        c0[:n_nodes], c1[:n_nodes], imp, inbag


@nb.njit(cache=True)
def _tree_p1_kernel(feat, thr, left, right, c0, c1, X):
    n = X.shape[0]
    out = np.empty(n, np.float64)
    for i in range(n):
        node = 0
        while feat[node] >= 0:
            if X[i, feat[node]] <= thr[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = c1[node] / (c0[node] + c1[node])
    return out


@dataclass
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    count0: np.ndarray
    count1: np.ndarray
    importances: np.ndarray

    def predict_p1(self, X: np.ndarray) -> np.ndarray:
        return _tree_p1_kernel(self.feature, self.threshold, self.left, self.right,
                               self.count0, self.count1, X)


@dataclass
class Ensemble:
    """Fitted bagged-tree classifier over named feature columns."""

    spec: ModelSpec
    columns: tuple[str, ...]
    trees: list[Tree] = field(default_factory=list)
    oob_accuracy: float | None = None

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        p1 = np.zeros(X.shape[0])
        for tree in self.trees:
            p1 += tree.predict_p1(X)
        return p1 / len(self.trees)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.predict_proba(X) > 0.5).astype(np.int64)

    def accuracy(self, d: Dataset) -> float:
        return float(np.mean(self.predict(d.X) == d.y))


def _check_binary(y: np.ndarray) -> np.ndarray:
    if not np.issubdtype(y.dtype, np.integer):
        raise NotBinary("labels must be integers (run balance_classes first)")
    values = np.unique(y)
    if not np.all(np.isin(values, [0, 1])) or len(values) != 2:
        raise NotBinary(f"labels must contain both classes 0 and 1, got {values.tolist()}")
    return y.astype(np.int64)


def fit_ensemble(spec: ModelSpec, train: Dataset, seed: SeedParts) -> Ensemble:
    """Grow spec.n_trees seeded trees on the training data."""
    y = _check_binary(train.y)
    n = train.n_rows
    counts = np.bincount(y, minlength=2)
    if counts.min() < 2:
        raise TooFewSamples(f"need >= 2 rows per class, got {counts.tolist()}")
    X = np.ascontiguousarray(train.X, dtype=np.float64)
    m = spec.resolve_features_per_split(X.shape[1])
    max_depth = -1 if spec.max_depth is None else spec.max_depth
    trees = []
    oob_p1 = np.zeros(n)
    oob_n = np.zeros(n, dtype=np.int64)
    for t in range(spec.n_trees):
        parts = _fit_tree_kernel(
            X, y, derive_uint32(seed, _TAG_TREE, t),
            spec.bootstrap, spec.random_thresholds, m, max_depth, spec.min_samples_leaf,
        )
        tree = Tree(*parts[:7])
        trees.append(tree)
        if spec.bootstrap:
            out_rows = parts[7] == 0
            if np.any(out_rows):
                oob_p1[out_rows] += tree.predict_p1(X[out_rows])
                oob_n[out_rows] += 1
    oob_accuracy = None
    if spec.bootstrap and np.any(oob_n > 0):
        voted = oob_n > 0
        pred = (oob_p1[voted] / oob_n[voted]) > 0.5
        oob_accuracy = float(np.mean(pred == y[voted]))
    return Ensemble(spec, train.columns, trees, oob_accuracy)


def feature_importances(e: Ensemble) -> tuple[np.ndarray, np.ndarray]:
    """(mean, standard error) of per-tree normalized impurity importances."""
    per_tree = np.vstack([t.importances for t in e.trees])
    mean = per_tree.mean(axis=0)
    if per_tree.shape[0] < 2:
        return mean, np.zeros_like(mean)
    se = per_tree.std(axis=0, ddof=1) / np.sqrt(per_tree.shape[0])
    return mean, se


def stratified_folds(y: np.ndarray, k: int, seed: SeedParts) -> np.ndarray:
    """Fold id per row: per-class shuffles concatenated and dealt round-robin,
    so folds stay class-balanced within one row."""
    rng = derive_rng(seed, _TAG_FOLDS)
    fold = np.empty(len(y), dtype=np.int64)
    position = 0
    for cls in np.unique(y):
        members = rng.permutation(np.flatnonzero(y == cls))
        for row in members:
            fold[row] = position % k
            position += 1
    return fold


def kfold_cv(spec: ModelSpec, d: Dataset, k: int = 5, seed: SeedParts = 0) -> tuple[float, float]:
    """Seeded stratified k-fold accuracy: (mean, std) over fold scores."""
    y = _check_binary(d.y)
    if k < 2:
        raise TooFewSamples("k must be >= 2")
    if d.n_rows < k:
        raise TooFewSamples(f"{d.n_rows} rows cannot fill {k} folds")
    fold = stratified_folds(y, k, seed)
    scores = []
    for f in range(k):
        test_idx = np.flatnonzero(fold == f)
        train_idx = np.flatnonzero(fold != f)
        model = fit_ensemble(spec, d.take(train_idx), (*_as_tuple(seed), _TAG_CV_FIT, f))
        scores.append(model.accuracy(d.take(test_idx)))
    scores = np.asarray(scores)
    return float(scores.mean()), float(scores.std())


def _as_tuple(seed: SeedParts) -> tuple[int, ...]:
    return (seed,) if isinstance(seed, int) else tuple(seed)


@dataclass
class PrunePoint:
    features_removed: int
    removed_feature: str | None
    cv_mean: float
    cv_std: float


@dataclass
class PruneCurve:
    """Cross-validation trace of fixed-order least-important-first removal."""

    ranking: tuple[str, ...]  # initial importance order, most important first
    points: list[PrunePoint]

    @property
    def removal_order(self) -> tuple[str, ...]:
        return tuple(reversed(self.ranking))[: len(self.points) - 1]


def prune_loop(spec: ModelSpec, d: Dataset, k: int = 5, seed: SeedParts = 0) -> PruneCurve:
    """Drop features one at a time, least important first, per the importance
    ranking of the initial full-feature fit; the ranking is never recomputed.
    Fold assignment and fit seeds repeat across steps, so curve changes come
    from the feature set alone."""
    base = fit_ensemble(spec, d, (*_as_tuple(seed), _TAG_PRUNE_FIT))
    imp, _ = feature_importances(base)
    order = sorted(range(len(d.columns)), key=lambda j: (-imp[j], j))
    ranking = tuple(d.columns[j] for j in order)
    points = []
    current = d
    cv_seed = (*_as_tuple(seed), _TAG_PRUNE_CV)
    removed: str | None = None
    for step in range(len(ranking)):
        if step > 0:
            removed = ranking[len(ranking) - step]
            current = current.drop_columns({removed})
        mean, std = kfold_cv(spec, current, k, cv_seed)
        points.append(PrunePoint(step, removed, mean, std))
    return PruneCurve(ranking, points)
