"""Random forest of multi-output regression trees.

Each tree sees a bootstrap resample of the rows (same size, drawn with
replacement) and, when max_features restricts the search, a fresh feature
subset per split.  Per-tree randomness derives from the master seed via
numpy SeedSequence spawning, so fits are reproducible bit-for-bit and
trees could equally be grown concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tree import RegressionTree, fit_tree


@dataclass
class RandomForest:
    trees: list = field(default_factory=list)
    n_features: int = 0

    def predict(self, X):
        if not self.trees:
            raise ValueError("forest has no trees")
        acc = self.trees[0].predict(X)
        for tree in self.trees[1:]:
            acc += tree.predict(X)
        return acc / len(self.trees)

    def to_dict(self):
        return {
            "trees": [t.to_dict() for t in self.trees],
            "n_features": self.n_features,
        }

    @classmethod
    def from_dict(cls, raw):
        return cls(
            trees=[RegressionTree.from_dict(t) for t in raw["trees"]],
            n_features=int(raw["n_features"]),
        )


def fit_forest(
    X,
    Y,
    n_estimators=100,
    min_samples_split=2,
    min_samples_leaf=1,
    max_features="auto",
    bootstrap=True,
    seed=0,
):
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n = X.shape[0]
    if n_estimators < 1:
        raise ValueError("n_estimators must be >= 1")
    seeds = np.random.SeedSequence(seed).spawn(n_estimators)
    trees = []
    for ss in seeds:
        rng = np.random.default_rng(ss)
        rows = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        tree = fit_tree(
            X[rows],
            Y[rows],
            min_samples_split=min_samples_split,
            min_samples_leaf=min_samples_leaf,
            max_features=max_features,
            rng=rng,
        )
        trees.append(tree)
    return RandomForest(trees=trees, n_features=X.shape[1])
