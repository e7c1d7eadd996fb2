"""CART regression trees with multi-output variance-reduction splitting.

Node impurity is the sum over output columns of the within-node variance;
a split's quality is the weighted impurity decrease, which is equivalent
to minimizing the summed squared error of the children.  Candidate
thresholds are midpoints between consecutive distinct sorted values.
Ties between equal-gain splits resolve to the lowest feature index, then
the lowest threshold, so a fit is a pure function of (ordered data, seed).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LEAF = -1


@dataclass
class RegressionTree:
    """Flat-array binary tree; arrays are parallel over node ids."""

    feature: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    threshold: np.ndarray = field(default_factory=lambda: np.empty(0))
    left: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    right: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    n_samples: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    impurity: np.ndarray = field(default_factory=lambda: np.empty(0))
    value: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))
    n_features: int = 0

    @property
    def n_nodes(self):
        return len(self.feature)

    def is_leaf(self, node):
        return self.feature[node] == LEAF

    def internal_nodes(self):
        return np.nonzero(self.feature != LEAF)[0]

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        out = np.empty((X.shape[0], self.value.shape[1]))
        stack = [(0, np.arange(X.shape[0]))]
        while stack:
            node, rows = stack.pop()
            if rows.size == 0:
                continue
            if self.feature[node] == LEAF:
                out[rows] = self.value[node]
                continue
            go_left = X[rows, self.feature[node]] <= self.threshold[node]
            stack.append((self.left[node], rows[go_left]))
            stack.append((self.right[node], rows[~go_left]))
        return out

    def to_dict(self):
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "n_samples": self.n_samples.tolist(),
            "impurity": self.impurity.tolist(),
            "value": self.value.tolist(),
            "n_features": self.n_features,
        }

    @classmethod
    def from_dict(cls, raw):
        return cls(
            feature=np.asarray(raw["feature"], dtype=np.int64),
            threshold=np.asarray(raw["threshold"], dtype=float),
            left=np.asarray(raw["left"], dtype=np.int64),
            right=np.asarray(raw["right"], dtype=np.int64),
            n_samples=np.asarray(raw["n_samples"], dtype=np.int64),
            impurity=np.asarray(raw["impurity"], dtype=float),
            value=np.asarray(raw["value"], dtype=float),
            n_features=int(raw["n_features"]),
        )


def resolve_max_features(max_features, n_features):
    """'auto'/None = all features; ints literal; floats as a fraction."""
    if max_features in (None, "auto"):
        return n_features
    if isinstance(max_features, float):
        if not 0.0 < max_features <= 1.0:
            raise ValueError(f"max_features fraction out of (0, 1]: {max_features}")
        return max(1, int(max_features * n_features))
    m = int(max_features)
    if not 1 <= m <= n_features:
        raise ValueError(f"max_features out of [1, {n_features}]: {m}")
    return m


def _best_split(X, Y, rows, feature_ids, min_samples_leaf):
    """Exhaustive best split over the given features.

    Returns (feature, threshold, left_rows, right_rows) or None.  The
    score maximized is ||S_l||^2/n_l + ||S_r||^2/n_r, the part of the
    negated child SSE that depends on the cut; prefix sums over the
    sorted node rows evaluate it for every candidate cut at once.
    """
    n = rows.size
    Xn = X[rows]
    Yn = Y[rows]
    spans = Xn.max(axis=0) - Xn.min(axis=0)
    candidates = feature_ids[spans[feature_ids] > 0]
    if candidates.size == 0:
        return None

    total = Yn.sum(axis=0)
    best = None
    best_score = -np.inf
    for j in candidates:
        order = np.argsort(Xn[:, j], kind="stable")
        xs = Xn[order, j]
        cut = np.nonzero(xs[:-1] < xs[1:])[0]
        n_left = cut + 1
        ok = (n_left >= min_samples_leaf) & (n - n_left >= min_samples_leaf)
        cut, n_left = cut[ok], n_left[ok]
        if cut.size == 0:
            continue
        prefix = np.cumsum(Yn[order], axis=0)
        s_left = prefix[cut]
        s_right = total - s_left
        score = (s_left * s_left).sum(axis=1) / n_left + (s_right * s_right).sum(
            axis=1
        ) / (n - n_left)
        k = int(np.argmax(score))  # first max = lowest threshold
        if score[k] > best_score:
            best_score = score[k]
            threshold = 0.5 * (xs[cut[k]] + xs[cut[k] + 1])
            go_left = Xn[:, j] <= threshold
            best = (int(j), float(threshold), rows[go_left], rows[~go_left])
    return best


def fit_tree(
    X,
    Y,
    min_samples_split=2,
    min_samples_leaf=1,
    max_features=None,
    rng=None,
):
    """Grow a CART tree on X (n, p) and Y (n, q); rows may repeat (bootstrap)."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    n, p = X.shape
    if n < 1:
        raise ValueError("empty training set")
    m = resolve_max_features(max_features, p)
    if m < p and rng is None:
        rng = np.random.default_rng(0)
    all_features = np.arange(p)

    feature, threshold, left, right = [], [], [], []
    n_samples, impurity, value = [], [], []

    def new_node(rows):
        Yn = Y[rows]
        mean = Yn.mean(axis=0)
        sse = float(((Yn - mean) ** 2).sum())
        node = len(feature)
        feature.append(LEAF)
        threshold.append(np.nan)
        left.append(LEAF)
        right.append(LEAF)
        n_samples.append(rows.size)
        impurity.append(sse / rows.size)
        value.append(mean)
        return node, sse

    root_rows = np.arange(n)
    stack = [(new_node(root_rows), root_rows)]
    while stack:
        (node, sse), rows = stack.pop()
        if rows.size < min_samples_split or sse <= 0.0:
            continue
        if m >= p:
            chosen = all_features
        else:
            chosen = np.sort(rng.choice(p, size=m, replace=False))
        split = _best_split(X, Y, rows, chosen, min_samples_leaf)
        if split is None:
            continue
        j, thr, rows_l, rows_r = split
        feature[node] = j
        threshold[node] = thr
        node_l = new_node(rows_l)
        node_r = new_node(rows_r)
        left[node] = node_l[0]
        right[node] = node_r[0]
        stack.append((node_l, rows_l))
        stack.append((node_r, rows_r))

    return RegressionTree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=float),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        n_samples=np.asarray(n_samples, dtype=np.int64),
        impurity=np.asarray(impurity, dtype=float),
        value=np.vstack(value),
        n_features=p,
    )
