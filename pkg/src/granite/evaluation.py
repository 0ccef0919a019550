"""Classification scores, class-to-method projection, and effort-aware ratios.

Change-proneness predictions are scored three ways: directly at their own
granularity, projected from classes onto their methods, and by how much of
the realized change a top-k LOC budget of the ranking would have covered.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from granite.javaparse import ModuleId
from granite.textdiff import line_churn
from granite.tracking import ChangeHistory


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class EvalScores:
    precision: float
    recall: float
    f1: float
    accuracy: float
    auc: Optional[float] = None  # absent for projected evaluations


@dataclass(frozen=True)
class RankedModule:
    module: ModuleId
    score: float
    loc: int


Ranking = Tuple[RankedModule, ...]


@dataclass(frozen=True)
class ChangeSizes:
    module: ModuleId
    delta_release: int  # churn between the two endpoint snapshots
    delta_commit: int  # summed per-commit churn across the milestone


def confusion_counts(
    preds: Set[ModuleId], truth: Set[ModuleId], universe: Iterable[ModuleId]
) -> ConfusionCounts:
    """Set-intersection confusion counts over the module universe."""
    all_modules = set(universe)
    tp = len(preds & truth)
    fp = len(preds - truth)
    fn = len(truth - preds)
    tn = len(all_modules) - tp - fp - fn
    return ConfusionCounts(tp=tp, tn=tn, fp=fp, fn=fn)


def classification_scores(c: ConfusionCounts) -> EvalScores:
    """Precision, recall, F1 (harmonic mean), accuracy; 0/0 cases score 0."""
    precision = c.tp / (c.tp + c.fp) if (c.tp + c.fp) else 0.0
    recall = c.tp / (c.tp + c.fn) if (c.tp + c.fn) else 0.0
    f1 = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
    accuracy = (c.tp + c.tn) / c.total if c.total else 0.0
    return EvalScores(precision=precision, recall=recall, f1=f1, accuracy=accuracy)


def auc_roc(scored: Sequence[Tuple[float, int]]) -> Optional[float]:
    """Rank-based AUC (ties count one half); None when one label is missing."""
    pos = [s for s, label in scored if label == 1]
    neg = [s for s, label in scored if label == 0]
    if not pos or not neg:
        return None
    values = sorted(s for s, _ in scored)
    # average ranks, 1-based, with ties averaged
    ranks: Dict[float, float] = {}
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[j + 1] == values[i]:
            j += 1
        ranks[values[i]] = (i + j + 2) / 2.0
        i = j + 1
    rank_sum = sum(ranks[s] for s in pos)
    n_pos, n_neg = len(pos), len(neg)
    u = rank_sum - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def project_class_predictions_to_methods(
    predicted_classes: Set[ModuleId], methods_of: Mapping[ModuleId, Set[ModuleId]]
) -> Set[ModuleId]:
    """Every method of every predicted class becomes a predicted method."""
    out: Set[ModuleId] = set()
    for cls in predicted_classes:
        if cls not in methods_of:
            raise KeyError(f"no method map entry for predicted class {cls}")
        out |= methods_of[cls]
    return out


def rank_by_score(scores, locs: Mapping[ModuleId, int]) -> Ranking:
    """Descending-score ranking; ties order by ascending LOC then module id."""
    items: List[RankedModule] = []
    for s in scores:
        if s.module not in locs:
            raise KeyError(f"no LOC for ranked module {s.module}")
        items.append(RankedModule(s.module, float(s.score), int(locs[s.module])))
    items.sort(key=lambda r: (-r.score, r.loc, r.module.sort_key))
    return tuple(items)


def top_k_cutoff(ranking: Ranking, k: int) -> int:
    """Largest l with the top-l LOC sum strictly below the budget k.

    0 when the first module alone meets the budget; len(ranking) when even the
    whole ranking stays under it.
    """
    if k < 1:
        raise ValueError("k must be positive")
    total = 0
    cutoff = 0
    for r in ranking:
        if total + r.loc < k:
            total += r.loc
            cutoff += 1
        else:
            break
    return cutoff


def change_sizes(
    module: ModuleId,
    history: ChangeHistory,
    body_at_r: Sequence[str],
    body_at_rprime: Sequence[str],
) -> ChangeSizes:
    """Release-based and commit-based change size of one module.

    A module deleted mid-release has an empty body at r', so its deletions
    count toward the release-based size.
    """
    delta_release = line_churn(tuple(body_at_r), tuple(body_at_rprime))
    delta_commit = sum(e.churn for e in history.events)
    return ChangeSizes(module=module, delta_release=delta_release, delta_commit=delta_commit)


def top_k_change_ratio(
    ranking: Ranking,
    k: int,
    sizes: Mapping[ModuleId, ChangeSizes],
    kind: str,
) -> Optional[float]:
    """Summed change size over summed LOC of the top-l modules; None when l is 0."""
    if kind not in ("release", "commit"):
        raise ValueError(f"unknown change size kind: {kind!r}")
    cutoff = top_k_cutoff(ranking, k)
    if cutoff == 0:
        return None
    head = ranking[:cutoff]
    loc_sum = sum(r.loc for r in head)
    if kind == "release":
        delta_sum = sum(sizes[r.module].delta_release for r in head)
    else:
        delta_sum = sum(sizes[r.module].delta_commit for r in head)
    return delta_sum / loc_sum
