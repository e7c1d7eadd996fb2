"""Historical average baseline: slot-wise mean by exact day-feature key.

Prediction for a day is the mean of the training days sharing its feature
bit pattern.  Unseen patterns degrade through a fallback chain that zeroes
feature groups in order: special-day flags first, then month, then
day-of-week, ending at the global slot-wise mean.  Each chain level has
its own lookup table built from the same training rows with the same
columns zeroed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _group_columns(columns):
    b = [i for i, c in enumerate(columns) if c.startswith("B:")]
    month = [i for i, c in enumerate(columns) if c.startswith("A:month:")]
    dow = [i for i, c in enumerate(columns) if c.startswith("A:dow:")]
    return [b, month, dow]


def _chain_masks(columns):
    """Per level, the column indices zeroed before keying."""
    groups = _group_columns(columns)
    masks = [[]]
    for g in groups:
        masks.append(masks[-1] + g)
    return masks


def _key(row, zeroed):
    bits = np.rint(row).astype(np.int8)
    if zeroed:
        bits = bits.copy()
        bits[zeroed] = 0
    return bits.tobytes()


@dataclass
class HistoricalAverage:
    columns: list
    tables: list = field(default_factory=list)  # per level: {key: mean (q,)}
    global_mean: np.ndarray = field(default_factory=lambda: np.empty(0))

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        masks = _chain_masks(self.columns)
        out = np.empty((X.shape[0], self.global_mean.shape[0]))
        for i, row in enumerate(X):
            for level, zeroed in enumerate(masks):
                hit = self.tables[level].get(_key(row, zeroed))
                if hit is not None:
                    out[i] = hit
                    break
            else:
                out[i] = self.global_mean
        return out

    def to_dict(self):
        return {
            "columns": list(self.columns),
            "tables": [
                {key.hex(): mean.tolist() for key, mean in table.items()}
                for table in self.tables
            ],
            "global_mean": self.global_mean.tolist(),
        }

    @classmethod
    def from_dict(cls, raw):
        return cls(
            columns=list(raw["columns"]),
            tables=[
                {bytes.fromhex(k): np.asarray(v, dtype=float) for k, v in table.items()}
                for table in raw["tables"]
            ],
            global_mean=np.asarray(raw["global_mean"], dtype=float),
        )


def fit_historical_average(X, Y, columns):
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    masks = _chain_masks(columns)
    tables = []
    for zeroed in masks:
        sums = {}
        counts = {}
        for row, y in zip(X, Y):
            key = _key(row, zeroed)
            if key in sums:
                sums[key] += y
                counts[key] += 1
            else:
                sums[key] = y.copy()
                counts[key] = 1
        tables.append({key: sums[key] / counts[key] for key in sums})
    return HistoricalAverage(
        columns=list(columns),
        tables=tables,
        global_mean=Y.mean(axis=0),
    )
