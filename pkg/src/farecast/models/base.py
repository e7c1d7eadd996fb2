"""Uniform fit/predict contract over the model families.

A RegressorSpec names a family (ha, lr, rf, gbdt), its hyperparameters and
a seed; fit() trains the family-specific core on a feature matrix and an
(n, 96) target matrix and wraps it in an immutable FittedModel that knows
its feature set, station, fare class and column layout.  Predictions are
clipped to zero at this boundary since entry counts cannot be negative.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..features import FeatureMatrix
from .boosting import GradientBoosting, fit_gbdt
from .forest import RandomForest, fit_forest
from .historical import HistoricalAverage, fit_historical_average
from .linear import ElasticNetModel, fit_elastic_net

FAMILIES = ("ha", "lr", "rf", "gbdt")

HYPERPARAMETER_NAMES = {
    "ha": set(),
    "lr": {"alpha", "l1_ratio", "normalise", "tol", "max_sweeps"},
    "rf": {"n_estimators", "min_samples_split", "min_samples_leaf", "max_features", "bootstrap"},
    "gbdt": {"n_estimators", "min_samples_split", "min_samples_leaf", "max_features", "learning_rate"},
}

DEFAULT_HYPERPARAMETERS = {
    "ha": {},
    "lr": {"alpha": 1.0, "l1_ratio": 0.5, "normalise": False},
    "rf": {
        "n_estimators": 100,
        "min_samples_split": 2,
        "min_samples_leaf": 1,
        "max_features": "auto",
    },
    "gbdt": {
        "n_estimators": 100,
        "min_samples_split": 2,
        "min_samples_leaf": 1,
        "max_features": "auto",
        "learning_rate": 0.1,
    },
}

_INNER_TYPES = {
    "ha": HistoricalAverage,
    "lr": ElasticNetModel,
    "rf": RandomForest,
    "gbdt": GradientBoosting,
}

MODEL_FORMAT = "farecast-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class RegressorSpec:
    family: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        family = self.family.lower()
        object.__setattr__(self, "family", family)
        if family not in FAMILIES:
            raise ValueError(f"unknown model family: {self.family!r}")
        unknown = set(self.hyperparameters) - HYPERPARAMETER_NAMES[family]
        if unknown:
            raise ValueError(
                f"unknown hyperparameters for {family}: {sorted(unknown)}"
            )

    def resolved(self):
        params = dict(DEFAULT_HYPERPARAMETERS[self.family])
        params.update(self.hyperparameters)
        return params

    @classmethod
    def default(cls, family, seed=0):
        return cls(family=family, hyperparameters={}, seed=seed)


@dataclass
class FittedModel:
    """Immutable trained per-station multi-output regressor."""

    spec: RegressorSpec
    feature_set: str
    station_id: str | None
    fare_class: str | None
    columns: list
    inner: object
    warnings: list = field(default_factory=list)

    @property
    def width(self):
        return len(self.columns)

    def predict(self, X):
        if isinstance(X, FeatureMatrix):
            values = X.values
        else:
            values = np.asarray(X, dtype=float)
        if values.ndim != 2 or values.shape[1] != self.width:
            got = values.shape[1] if values.ndim == 2 else values.shape
            raise ValueError(
                f"feature width mismatch: model expects {self.width}, input has {got}"
            )
        raw = self.inner.predict(values)
        return np.clip(raw, 0.0, None)

    def to_dict(self):
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "family": self.spec.family,
            "hyperparameters": self.spec.hyperparameters,
            "seed": self.spec.seed,
            "feature_set": self.feature_set,
            "station_id": self.station_id,
            "fare_class": self.fare_class,
            "columns": list(self.columns),
            "warnings": list(self.warnings),
            "params": self.inner.to_dict(),
        }

    def save(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True)
            fh.write("\n")


def _inner_width(family, inner):
    if family == "ha":
        return len(inner.columns)
    if family == "lr":
        return inner.coef.shape[0]
    return inner.n_features


def load_model(path):
    with open(path) as fh:
        raw = json.load(fh)
    if raw.get("format") != MODEL_FORMAT:
        raise ValueError(f"not a model file: {path}")
    if raw.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version: {raw.get('version')}")
    family = raw["family"]
    inner = _INNER_TYPES[family].from_dict(raw["params"])
    columns = list(raw["columns"])
    width = _inner_width(family, inner)
    if width != len(columns):
        raise ValueError(
            f"model file width mismatch: parameters expect {width} columns, "
            f"metadata lists {len(columns)}"
        )
    return FittedModel(
        spec=RegressorSpec(family=family, hyperparameters=raw["hyperparameters"], seed=raw["seed"]),
        feature_set=raw["feature_set"],
        station_id=raw["station_id"],
        fare_class=raw["fare_class"],
        columns=columns,
        inner=inner,
        warnings=list(raw["warnings"]),
    )


def fit(spec: RegressorSpec, X: FeatureMatrix, Y, station_id=None, fare_class=None):
    """Train `spec` on design matrix X and (n, 96) target Y."""
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.values.shape[0] != Y.shape[0]:
        raise ValueError(
            f"row mismatch: X has {X.values.shape[0]} rows, Y has {Y.shape[0]}"
        )
    if Y.shape[0] < 1:
        raise ValueError("empty training set")
    if (Y < 0).any():
        raise ValueError("target counts must be non-negative")

    params = spec.resolved()
    warnings = []
    if spec.family == "ha":
        if X.set_id in ("D3", "D4"):
            raise ValueError(
                "historical average infeasible for high-dimensional feature sets"
            )
        inner = fit_historical_average(X.values, Y, X.columns)
    elif spec.family == "lr":
        inner = fit_elastic_net(X.values, Y, **params)
        warnings = list(inner.warnings)
    elif spec.family == "rf":
        inner = fit_forest(X.values, Y, seed=spec.seed, **params)
    elif spec.family == "gbdt":
        inner = fit_gbdt(X.values, Y, seed=spec.seed, **params)
    else:  # pragma: no cover - guarded by RegressorSpec
        raise ValueError(spec.family)
    return FittedModel(
        spec=spec,
        feature_set=X.set_id,
        station_id=station_id,
        fare_class=fare_class,
        columns=list(X.columns),
        inner=inner,
        warnings=warnings,
    )
