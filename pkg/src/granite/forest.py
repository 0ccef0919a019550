"""Seeded random forest of Gini decision trees, plus stratified cross-validation.

Per-tree randomness derives from (seed, tree index) only, so training is
bit-reproducible regardless of scheduling.  Scores are vote fractions: each
tree votes the majority label of its leaf (ties vote change-prone) and the
forest score is the fraction of trees voting 1.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from granite.dataset import LabeledDataset, apply_min_max, fit_min_max, random_under_sample
from granite.evaluation import EvalScores, auc_roc, classification_scores, ConfusionCounts
from granite.javaparse import ModuleId

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_features: Optional[int] = None  # None means floor(sqrt(n_features))
    min_samples_split: int = 2
    max_depth: Optional[int] = None
    seed: int = 0


@dataclass
class TreeNode:
    feature: int = -1  # -1 marks a leaf
    threshold: float = 0.0
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    counts: Tuple[int, int] = (0, 0)  # (label-0, label-1) rows at a leaf

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0

    @property
    def vote(self) -> int:
        return 1 if self.counts[1] >= self.counts[0] else 0


@dataclass
class ForestModel:
    trees: List[TreeNode]
    params: ForestParams
    feature_names: Tuple[str, ...]


@dataclass(frozen=True)
class PredictionScore:
    module: ModuleId
    score: float

    @property
    def predicted(self) -> int:
        return 1 if self.score >= 0.5 else 0


def _best_split(
    X: np.ndarray, y: np.ndarray, features: Sequence[int]
) -> Optional[Tuple[int, float, np.ndarray]]:
    """Best (feature, threshold, left mask) by weighted Gini over the node rows."""
    n = len(y)
    total_pos = int(y.sum())
    best = None
    best_score = math.inf
    for f in features:
        col = X[:, f]
        order = np.argsort(col, kind="stable")
        xs = col[order]
        ys = y[order]
        cum_pos = np.cumsum(ys)
        idx = np.arange(1, n)
        valid = xs[1:] > xs[:-1]
        if not valid.any():
            continue
        n_l = idx[valid].astype(np.float64)
        n_r = n - n_l
        pos_l = cum_pos[:-1][valid].astype(np.float64)
        pos_r = total_pos - pos_l
        # weighted Gini impurity, up to the constant 1/n factor
        gini_l = n_l - (pos_l**2 + (n_l - pos_l) ** 2) / n_l
        gini_r = n_r - (pos_r**2 + (n_r - pos_r) ** 2) / n_r
        scores = gini_l + gini_r
        j = int(np.argmin(scores))
        if scores[j] < best_score - 1e-12:
            best_score = float(scores[j])
            split_at = idx[valid][j]
            threshold = float((xs[split_at - 1] + xs[split_at]) / 2.0)
            best = (int(f), threshold, col <= threshold)
    return best


def _grow(
    X: np.ndarray,
    y: np.ndarray,
    rng: np.random.Generator,
    max_features: int,
    min_samples_split: int,
    max_depth: Optional[int],
    depth: int = 0,
) -> TreeNode:
    n = len(y)
    pos = int(y.sum())
    if (
        pos == 0
        or pos == n
        or n < min_samples_split
        or (max_depth is not None and depth >= max_depth)
    ):
        return TreeNode(counts=(n - pos, pos))
    features = rng.choice(X.shape[1], size=max_features, replace=False)
    split = _best_split(X, y, features)
    if split is None:
        return TreeNode(counts=(n - pos, pos))
    f, threshold, left_mask = split
    left = _grow(X[left_mask], y[left_mask], rng, max_features, min_samples_split, max_depth, depth + 1)
    right = _grow(X[~left_mask], y[~left_mask], rng, max_features, min_samples_split, max_depth, depth + 1)
    return TreeNode(feature=f, threshold=threshold, left=left, right=right)


def train_random_forest(train: LabeledDataset, params: ForestParams) -> ForestModel:
    """Grow n_trees on bootstrap samples; per-tree draws depend only on (seed, i)."""
    X, y = train.X, train.y.astype(np.int64)
    n, m = X.shape
    if n < 2:
        raise ValueError("need at least 2 training rows")
    if len(np.unique(y)) < 2:
        raise ValueError("training set has a single label")
    max_features = params.max_features or max(1, int(math.isqrt(m)))
    max_features = min(max_features, m)
    trees: List[TreeNode] = []
    for i in range(params.n_trees):
        rng = np.random.default_rng([params.seed & 0x7FFFFFFFFFFF, i])
        sample = rng.integers(0, n, size=n)
        trees.append(
            _grow(X[sample], y[sample], rng, max_features, params.min_samples_split, params.max_depth)
        )
    return ForestModel(trees=trees, params=params, feature_names=train.feature_names)


def _tree_votes(node: TreeNode, X: np.ndarray, out: np.ndarray, idx: np.ndarray) -> None:
    if node.is_leaf:
        out[idx] = node.vote
        return
    mask = X[idx, node.feature] <= node.threshold
    if mask.any():
        _tree_votes(node.left, X, out, idx[mask])
    if (~mask).any():
        _tree_votes(node.right, X, out, idx[~mask])


def score_matrix(model: ForestModel, X: np.ndarray) -> np.ndarray:
    """Vote fraction per row of X."""
    if X.shape[1] != len(model.feature_names):
        raise ValueError(
            f"feature length mismatch: got {X.shape[1]}, model expects {len(model.feature_names)}"
        )
    votes = np.zeros(len(X), dtype=np.float64)
    scratch = np.zeros(len(X), dtype=np.float64)
    all_idx = np.arange(len(X))
    for tree in model.trees:
        scratch[:] = 0.0
        _tree_votes(tree, X, scratch, all_idx)
        votes += scratch
    return votes / len(model.trees)


def predict_proba(model: ForestModel, features: np.ndarray) -> float:
    """Change-proneness score of one feature vector."""
    row = np.asarray(features, dtype=np.float64).reshape(1, -1)
    return float(score_matrix(model, row)[0])


def model_to_json(model: ForestModel) -> str:
    """Debug dump of the tree structures; not a stability-guaranteed format."""

    def node(n: TreeNode) -> dict:
        if n.is_leaf:
            return {"counts": list(n.counts)}
        return {
            "feature": n.feature,
            "threshold": n.threshold,
            "left": node(n.left),
            "right": node(n.right),
        }

    return json.dumps(
        {
            "n_trees": len(model.trees),
            "feature_names": list(model.feature_names),
            "seed": model.params.seed,
            "trees": [node(t) for t in model.trees],
        }
    )


# ---------------------------------------------------------------------------
# cross-validation


@dataclass
class FoldResult:
    fold: int
    scores: Optional[EvalScores]  # None when the fold was skipped
    skipped: bool = False


@dataclass
class CrossValResult:
    dataset: LabeledDataset
    fold_assignment: np.ndarray  # fold index per row
    out_of_fold_scores: np.ndarray  # NaN where a fold was skipped
    folds: List[FoldResult]

    @property
    def predictions(self) -> List[PredictionScore]:
        out = []
        for i, m in enumerate(self.dataset.modules):
            s = self.out_of_fold_scores[i]
            if not np.isnan(s):
                out.append(PredictionScore(m, float(s)))
        return out

    def pooled_scores(self) -> EvalScores:
        """Scores over all out-of-fold predictions pooled together."""
        scored = [
            (float(s), int(y))
            for s, y in zip(self.out_of_fold_scores, self.dataset.y)
            if not np.isnan(s)
        ]
        preds = [s >= 0.5 for s, _ in scored]
        tp = sum(1 for p, (_, y) in zip(preds, scored) if p and y == 1)
        fp = sum(1 for p, (_, y) in zip(preds, scored) if p and y == 0)
        fn = sum(1 for p, (_, y) in zip(preds, scored) if not p and y == 1)
        tn = len(scored) - tp - fp - fn
        base = classification_scores(ConfusionCounts(tp=tp, tn=tn, fp=fp, fn=fn))
        return replace(base, auc=auc_roc(scored))


def _stratified_folds(y: np.ndarray, folds: int, rng: np.random.Generator) -> np.ndarray:
    """Deal each class round-robin after a shuffle; fold sizes stay within one."""
    assignment = np.zeros(len(y), dtype=np.int64)
    next_fold = 0
    for label in (1, 0):
        idx = np.flatnonzero(y == label)
        rng.shuffle(idx)
        for i, row in enumerate(idx):
            assignment[row] = (next_fold + i) % folds
        next_fold = (next_fold + len(idx)) % folds
    return assignment


def _combine_seed(seed: int, salt: int) -> int:
    return (seed * 1_000_003 + salt) % (2**62)


def cross_validate(
    ds: LabeledDataset, folds: int = 10, params: ForestParams = ForestParams()
) -> CrossValResult:
    """Stratified k-fold out-of-fold scoring.

    Normalization and undersampling are fit inside each training fold; a fold
    whose training split is single-label is skipped with a warning.
    """
    n = len(ds)
    if n < folds:
        raise ValueError(f"need at least {folds} rows, have {n}")
    if len(np.unique(ds.y)) < 2:
        raise ValueError("both labels must be present")
    fold_rng = np.random.default_rng([params.seed & 0x7FFFFFFFFFFF, 0xF01D])
    assignment = _stratified_folds(ds.y, folds, fold_rng)
    oof = np.full(n, np.nan, dtype=np.float64)
    results: List[FoldResult] = []
    for fold in range(folds):
        test_idx = np.flatnonzero(assignment == fold)
        train_idx = np.flatnonzero(assignment != fold)
        y_train = ds.y[train_idx]
        if len(test_idx) == 0 or len(np.unique(y_train)) < 2:
            log.warning("%s/%s fold %d skipped: single-label training split", ds.release, ds.granularity, fold)
            results.append(FoldResult(fold, None, skipped=True))
            continue
        mins, maxs = fit_min_max(ds.X[train_idx])
        train_ds = ds.subset(train_idx)
        train_ds = replace(train_ds, X=apply_min_max(train_ds.X, mins, maxs))
        train_ds = random_under_sample(train_ds, seed=_combine_seed(params.seed, 1000 + fold))
        model = train_random_forest(
            train_ds, replace(params, seed=_combine_seed(params.seed, fold + 1))
        )
        X_test = apply_min_max(ds.X[test_idx], mins, maxs)
        scores = score_matrix(model, X_test)
        oof[test_idx] = scores
        scored = list(zip(scores.tolist(), ds.y[test_idx].astype(int).tolist()))
        preds = scores >= 0.5
        truth = ds.y[test_idx] == 1
        tp = int(np.sum(preds & truth))
        fp = int(np.sum(preds & ~truth))
        fn = int(np.sum(~preds & truth))
        tn = int(np.sum(~preds & ~truth))
        base = classification_scores(ConfusionCounts(tp=tp, tn=tn, fp=fp, fn=fn))
        results.append(FoldResult(fold, replace(base, auc=auc_roc(scored))))
    return CrossValResult(ds, assignment, oof, results)
