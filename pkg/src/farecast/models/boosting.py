"""Squared-loss gradient boosting, fitted independently per output column.

The 96 slot outputs come from single-output regressors wrapped per column:
stage 0 is the column mean, and each later stage fits a tree to the current
residuals and adds learning_rate times its prediction.  The per-stage
training loss is recorded so the monotone-descent property is checkable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tree import RegressionTree, fit_tree


@dataclass
class GradientBoosting:
    base: np.ndarray = field(default_factory=lambda: np.empty(0))  # (q,) column means
    stages: list = field(default_factory=list)  # per output: list of trees
    learning_rate: float = 0.1
    n_features: int = 0
    loss_path: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))
    # (q, n_estimators + 1) training MSE after each stage

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        out = np.tile(self.base, (X.shape[0], 1))
        for k, trees in enumerate(self.stages):
            for tree in trees:
                out[:, k] += self.learning_rate * tree.predict(X)[:, 0]
        return out

    def to_dict(self):
        return {
            "base": self.base.tolist(),
            "stages": [[t.to_dict() for t in trees] for trees in self.stages],
            "learning_rate": self.learning_rate,
            "n_features": self.n_features,
            "loss_path": self.loss_path.tolist(),
        }

    @classmethod
    def from_dict(cls, raw):
        return cls(
            base=np.asarray(raw["base"], dtype=float),
            stages=[
                [RegressionTree.from_dict(t) for t in trees] for trees in raw["stages"]
            ],
            learning_rate=float(raw["learning_rate"]),
            n_features=int(raw["n_features"]),
            loss_path=np.asarray(raw["loss_path"], dtype=float),
        )


def fit_gbdt(
    X,
    Y,
    n_estimators=100,
    min_samples_split=2,
    min_samples_leaf=1,
    max_features="auto",
    learning_rate=0.1,
    seed=0,
):
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if n_estimators < 0:
        raise ValueError("n_estimators must be >= 0")
    n, q = Y.shape
    base = Y.mean(axis=0)
    output_seeds = np.random.SeedSequence(seed).spawn(q)
    stages = []
    loss_path = np.empty((q, n_estimators + 1))
    for k in range(q):
        resid = Y[:, k] - base[k]
        loss_path[k, 0] = float((resid**2).mean())
        stage_seeds = output_seeds[k].spawn(n_estimators) if n_estimators else []
        trees = []
        for m, ss in enumerate(stage_seeds):
            tree = fit_tree(
                X,
                resid,
                min_samples_split=min_samples_split,
                min_samples_leaf=min_samples_leaf,
                max_features=max_features,
                rng=np.random.default_rng(ss),
            )
            resid -= learning_rate * tree.predict(X)[:, 0]
            loss_path[k, m + 1] = float((resid**2).mean())
            trees.append(tree)
        stages.append(trees)
    return GradientBoosting(
        base=base,
        stages=stages,
        learning_rate=learning_rate,
        n_features=X.shape[1],
        loss_path=loss_path,
    )
