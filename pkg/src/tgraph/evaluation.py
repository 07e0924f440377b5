"""Stratified splits, accuracy, and tie-aware rank-based AUC."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .dataset import LabeledDataset
from .errors import GroupTooSmall, SingleClassSlice
from .network import TrainedModel, predict_proba
from .templates import TemplateSet

# Guards floor() against representation error in fraction * count.
_FRACTION_EPS = 1e-9


@dataclass
class EvalReport:
    accuracy: float
    auc: float | None
    per_class_counts: dict[int, int]
    split_seed: int | None = None


def split(data: LabeledDataset, fractions=(0.7, 0.1, 0.2), seed: int = 0):
    """Stratified (train, val, test) index lists.

    Each group is shuffled with the seeded generator, then cut so train and
    val take the floors of their fractions and test takes the remainder.
    Groups are processed in ascending label order, so a seed fixes the split
    exactly.
    """
    if len(fractions) != 3 or any(f <= 0 for f in fractions):
        raise ValueError(f"fractions must be three positives, got {fractions}")
    if abs(sum(fractions) - 1.0) > _FRACTION_EPS:
        raise ValueError(f"fractions must sum to 1, got {fractions}")
    data.validate()
    rng = np.random.default_rng(seed)
    train_idx: list[int] = []
    val_idx: list[int] = []
    test_idx: list[int] = []
    for c, group in enumerate(data.group_index_lists):
        n = len(group)
        if n < 3:
            raise GroupTooSmall(f"group {c} has {n} subjects, need at least 3")
        order = np.array(group)[rng.permutation(n)]
        n_train = int(math.floor(fractions[0] * n + _FRACTION_EPS))
        n_val = int(math.floor(fractions[1] * n + _FRACTION_EPS))
        train_idx.extend(int(k) for k in order[:n_train])
        val_idx.extend(int(k) for k in order[n_train : n_train + n_val])
        test_idx.extend(int(k) for k in order[n_train + n_val :])
    return train_idx, val_idx, test_idx


def auc_binary(scores, positive) -> float:
    """Mann-Whitney AUC from midranks; ties count one half.

    Midrank sums are exact in floating point (integer-and-a-half values), so
    the result matches direct pair counting exactly.
    """
    scores = np.asarray(scores, dtype=float)
    positive = np.asarray(positive, dtype=bool)
    pos = scores[positive]
    neg = scores[~positive]
    if pos.size == 0 or neg.size == 0:
        raise SingleClassSlice("need both classes present to compute AUC")
    ordered = np.sort(scores)
    left = np.searchsorted(ordered, pos, side="left")
    right = np.searchsorted(ordered, pos, side="right")
    midranks = (left + right + 1) / 2.0
    u = midranks.sum() - pos.size * (pos.size + 1) / 2.0
    return float(u / (pos.size * neg.size))


def evaluate(
    model: TrainedModel,
    templates: TemplateSet,
    data: LabeledDataset,
    indices,
    split_seed: int | None = None,
) -> EvalReport:
    """Accuracy and AUC of a model over the given subject positions.

    Predictions argmax the class probabilities, ties going to the lowest
    class.  Binary AUC ranks the class-1 probabilities; with more classes
    the unweighted mean of one-vs-rest AUCs is reported over the classes
    for which both sides are present.  AUC is None when the slice leaves no
    class pair to rank.
    """
    indices = [int(k) for k in indices]
    if not indices:
        raise ValueError("no subjects to evaluate")
    probs = np.stack(
        [
            predict_proba(model, data.subjects[k].matrix, templates)
            for k in indices
        ]
    )
    labels = np.array([data.subjects[k].label for k in indices])
    predictions = np.argmax(probs, axis=1)
    accuracy = float(np.count_nonzero(predictions == labels) / len(indices))
    counts = dict(sorted(Counter(int(l) for l in labels).items()))

    n_classes = data.num_groups
    auc: float | None
    if n_classes == 2:
        try:
            auc = auc_binary(probs[:, 1], labels == 1)
        except SingleClassSlice:
            auc = None
    else:
        parts = []
        for c in range(n_classes):
            mask = labels == c
            if mask.any() and (~mask).any():
                parts.append(auc_binary(probs[:, c], mask))
        auc = float(np.mean(parts)) if parts else None
    return EvalReport(accuracy, auc, counts, split_seed)
