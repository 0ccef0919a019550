"""Labeled feature tables per release pair and granularity.

A dataset is a fixed-order feature matrix (product block, then process block)
with binary change-prone labels and per-module LOC carried along for the
effort-aware evaluation.  CSV serialization is lossless round-trip.
"""

from __future__ import annotations

import csv
import statistics
from dataclasses import dataclass, replace
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np

from granite.javaparse import ModuleId, parse_module_id
from granite.metrics import CLASS_METRIC_NAMES, METHOD_METRIC_NAMES, PROCESS_METRIC_NAMES


@dataclass(frozen=True)
class FeatureRow:
    module: ModuleId
    features: np.ndarray
    label: int
    loc: int


@dataclass(frozen=True)
class LabeledDataset:
    release: str  # release pair label, e.g. "1.0..1.1"
    granularity: str  # "class" | "method"
    feature_names: Tuple[str, ...]
    modules: Tuple[ModuleId, ...]
    X: np.ndarray  # (n_rows, n_features) float64
    y: np.ndarray  # (n_rows,) int8
    loc: np.ndarray  # (n_rows,) int64

    def __len__(self) -> int:
        return len(self.modules)

    @property
    def rows(self) -> List[FeatureRow]:
        return [
            FeatureRow(m, self.X[i], int(self.y[i]), int(self.loc[i]))
            for i, m in enumerate(self.modules)
        ]

    def subset(self, indices: Sequence[int]) -> "LabeledDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return replace(
            self,
            modules=tuple(self.modules[i] for i in idx),
            X=self.X[idx],
            y=self.y[idx],
            loc=self.loc[idx],
        )


def feature_names_for(granularity: str) -> Tuple[str, ...]:
    if granularity == "class":
        product = CLASS_METRIC_NAMES
    elif granularity == "method":
        product = METHOD_METRIC_NAMES
    else:
        raise ValueError(f"unknown granularity: {granularity!r}")
    return tuple(f"product_{n}" for n in product) + tuple(f"process_{n}" for n in PROCESS_METRIC_NAMES)


def label_change_prone(change_counts: Mapping[ModuleId, int]) -> Dict[ModuleId, int]:
    """1 for modules changed strictly more often than the median module.

    With a median of zeroed histories, any module changed even once is labeled
    change-prone; an even-sized count list uses the mean of the two middle values.
    """
    if not change_counts:
        raise ValueError("no change counts to label")
    median = statistics.median(change_counts.values())
    return {m: int(c > median) for m, c in change_counts.items()}


def assemble(
    product: Mapping[ModuleId, np.ndarray],
    process: Mapping[ModuleId, np.ndarray],
    labels: Mapping[ModuleId, int],
    locs: Mapping[ModuleId, int],
    release: str,
    granularity: str,
) -> LabeledDataset:
    """One row per module, product block then process block, sorted by module id."""
    keys = set(product)
    for name, mapping in (("process", process), ("labels", labels), ("locs", locs)):
        missing = keys ^ set(mapping)
        if missing:
            listed = ", ".join(str(m) for m in sorted(missing, key=lambda m: m.sort_key)[:5])
            raise ValueError(f"module set mismatch in {name}: {listed}")
    modules = tuple(sorted(keys, key=lambda m: m.sort_key))
    names = feature_names_for(granularity)
    X = np.zeros((len(modules), len(names)), dtype=np.float64)
    y = np.zeros(len(modules), dtype=np.int8)
    loc = np.zeros(len(modules), dtype=np.int64)
    for i, m in enumerate(modules):
        X[i] = np.concatenate([product[m], process[m]])
        y[i] = labels[m]
        loc[i] = locs[m]
    return LabeledDataset(release, granularity, names, modules, X, y, loc)


def fit_min_max(X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    return X.min(axis=0), X.max(axis=0)


def apply_min_max(X: np.ndarray, mins: np.ndarray, maxs: np.ndarray) -> np.ndarray:
    span = maxs - mins
    safe = np.where(span == 0, 1.0, span)
    out = (X - mins) / safe
    out[:, span == 0] = 0.0  # constant features map to 0
    return out


def min_max_normalize(ds: LabeledDataset) -> LabeledDataset:
    """Scale each feature to [0, 1]; constant features map to 0."""
    if len(ds) == 0:
        raise ValueError("empty dataset")
    mins, maxs = fit_min_max(ds.X)
    return replace(ds, X=apply_min_max(ds.X, mins, maxs))


def random_under_sample(ds: LabeledDataset, seed: int) -> LabeledDataset:
    """Drop majority rows uniformly at random until both labels are equal."""
    pos = np.flatnonzero(ds.y == 1)
    neg = np.flatnonzero(ds.y == 0)
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("both labels must be present to resample")
    rng = np.random.default_rng(seed)
    if len(pos) > len(neg):
        keep_major = rng.choice(pos, size=len(neg), replace=False)
        keep = np.concatenate([keep_major, neg])
    elif len(neg) > len(pos):
        keep_major = rng.choice(neg, size=len(pos), replace=False)
        keep = np.concatenate([pos, keep_major])
    else:
        return ds
    return ds.subset(np.sort(keep))


# ---------------------------------------------------------------------------
# CSV serialization


def write_csv(ds: LabeledDataset, fp) -> None:
    writer = csv.writer(fp, lineterminator="\n")
    writer.writerow(["module_id", "loc", *ds.feature_names, "label"])
    for i, m in enumerate(ds.modules):
        writer.writerow(
            [str(m), int(ds.loc[i]), *[repr(float(v)) for v in ds.X[i]], int(ds.y[i])]
        )


def read_csv(fp, release: str = "", granularity: str = "") -> LabeledDataset:
    reader = csv.reader(fp)
    header = next(reader)
    names = tuple(header[2:-1])
    modules: List[ModuleId] = []
    X_rows, y_vals, locs = [], [], []
    for row in reader:
        if not row:
            continue
        modules.append(parse_module_id(row[0]))
        locs.append(int(row[1]))
        X_rows.append([float(v) for v in row[2:-1]])
        y_vals.append(int(row[-1]))
    if not granularity and modules:
        granularity = modules[0].kind
    return LabeledDataset(
        release,
        granularity,
        names,
        tuple(modules),
        np.array(X_rows, dtype=np.float64) if X_rows else np.zeros((0, len(names))),
        np.array(y_vals, dtype=np.int8),
        np.array(locs, dtype=np.int64),
    )
