"""Stratified splits and exact rank-based metrics."""

import numpy as np
import pytest

from tgraph.errors import GroupTooSmall, SingleClassSlice
from tgraph.evaluation import auc_binary, evaluate, split
from tgraph.network import NetworkHyperParams, predict_proba, train
from tgraph.synth import SynthSpec, synth_generate
from tgraph.templates import TemplateHyperParams, fit_templates


def auc_pair_count(scores, positive):
    """O(n^2) oracle: wins + half-ties over positive/negative pairs."""
    pos = [s for s, p in zip(scores, positive) if p]
    neg = [s for s, p in zip(scores, positive) if not p]
    total = 0.0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                total += 1.0
            elif sp == sn:
                total += 0.5
    return total / (len(pos) * len(neg))


def test_split_sizes_seven_one_two():
    data, _ = synth_generate(SynthSpec(subjects_per_group=10, seed=0))
    train_idx, val_idx, test_idx = split(data, (0.7, 0.1, 0.2), seed=1)
    assert len(train_idx) == 14
    assert len(val_idx) == 2
    assert len(test_idx) == 4
    labels = [data.subjects[k].label for k in train_idx]
    assert labels.count(0) == 7 and labels.count(1) == 7


def test_split_deterministic():
    data, _ = synth_generate(SynthSpec(subjects_per_group=5, seed=0))
    assert split(data, seed=9) == split(data, seed=9)
    assert split(data, seed=9) != split(data, seed=10)


def test_split_partitions_indices():
    data, _ = synth_generate(
        SynthSpec(num_groups=3, subjects_per_group=7, seed=0)
    )
    every = set(range(len(data.subjects)))
    for seed in range(50):
        tr, va, te = split(data, (0.6, 0.2, 0.2), seed=seed)
        assert set(tr) | set(va) | set(te) == every
        assert len(tr) + len(va) + len(te) == len(every)


def test_split_proportions_within_one_subject():
    data, _ = synth_generate(SynthSpec(subjects_per_group=13, seed=0))
    fractions = (0.7, 0.1, 0.2)
    tr, va, te = split(data, fractions, seed=3)
    for part, f in zip((tr, va, te), fractions):
        for c in range(2):
            got = sum(1 for k in part if data.subjects[k].label == c)
            assert abs(got - f * 13) <= 1.0


def test_split_rejects_small_groups():
    data, _ = synth_generate(SynthSpec(subjects_per_group=2, seed=0))
    with pytest.raises(GroupTooSmall):
        split(data, seed=0)


def test_split_rejects_bad_fractions():
    data, _ = synth_generate(SynthSpec(subjects_per_group=5, seed=0))
    with pytest.raises(ValueError):
        split(data, (0.5, 0.5, 0.5), seed=0)
    with pytest.raises(ValueError):
        split(data, (1.0, 0.0, 0.0), seed=0)


def test_auc_perfect_separation():
    assert auc_binary([0.9, 0.8, 0.1, 0.2], [True, True, False, False]) == 1.0


def test_auc_all_ties():
    assert auc_binary([0.5] * 6, [True, True, False, False, False, True]) == 0.5


def test_auc_matches_pair_count_oracle_exactly():
    rng = np.random.default_rng(18)
    for _ in range(50):
        n = int(rng.integers(4, 30))
        # Coarse grid forces plenty of ties.
        scores = rng.integers(0, 5, size=n) / 4.0
        positive = rng.integers(0, 2, size=n).astype(bool)
        if positive.all() or not positive.any():
            continue
        got = auc_binary(scores, positive)
        assert got == auc_pair_count(list(scores), list(positive))
        assert 0.0 <= got <= 1.0


def test_auc_label_complement():
    rng = np.random.default_rng(19)
    scores = rng.normal(size=20)
    positive = rng.integers(0, 2, size=20).astype(bool)
    positive[0] = True
    positive[1] = False
    a = auc_binary(scores, positive)
    b = auc_binary(scores, ~positive)
    assert abs(a + b - 1.0) <= 1e-12


def test_auc_needs_both_classes():
    with pytest.raises(SingleClassSlice):
        auc_binary([0.1, 0.2], [True, True])


@pytest.fixture(scope="module")
def trained_binary():
    data, _ = synth_generate(
        SynthSpec(num_rois=8, subjects_per_group=6, effect_size=0.9,
                  noise_sigma=0.15, seed=20)
    )
    templates = fit_templates(data, TemplateHyperParams(max_iter=8))
    hyper = NetworkHyperParams(f1=2, f2=3, f3=4, epochs=5, batch_size=4, seed=0)
    tr, va, te = split(data, (0.5, 0.2, 0.3), seed=0)
    model = train(data, templates, hyper, (tr, va))
    return data, templates, model, te


def test_evaluate_accuracy_is_exact_fraction(trained_binary):
    data, templates, model, test_idx = trained_binary
    report = evaluate(model, templates, data, test_idx, split_seed=0)
    correct = 0
    for k in test_idx:
        p = predict_proba(model, data.subjects[k].matrix, templates)
        correct += int(int(np.argmax(p)) == data.subjects[k].label)
    assert report.accuracy == correct / len(test_idx)
    assert report.split_seed == 0
    assert sum(report.per_class_counts.values()) == len(test_idx)


def test_evaluate_binary_auc_matches_oracle(trained_binary):
    data, templates, model, test_idx = trained_binary
    report = evaluate(model, templates, data, test_idx)
    scores = [
        float(predict_proba(model, data.subjects[k].matrix, templates)[1])
        for k in test_idx
    ]
    positive = [data.subjects[k].label == 1 for k in test_idx]
    assert report.auc == auc_pair_count(scores, positive)


def test_evaluate_single_class_slice_has_no_auc(trained_binary):
    data, templates, model, _ = trained_binary
    only_zero = data.group_index_lists[0]
    report = evaluate(model, templates, data, only_zero)
    assert report.auc is None
    assert set(report.per_class_counts) == {0}


def test_evaluate_multiclass_mean_one_vs_rest():
    data, _ = synth_generate(
        SynthSpec(num_rois=6, num_groups=3, subjects_per_group=5,
                  effect_size=0.8, noise_sigma=0.2, seed=21)
    )
    templates = fit_templates(data, TemplateHyperParams(max_iter=5))
    hyper = NetworkHyperParams(f1=2, f2=2, f3=3, epochs=3, batch_size=4, seed=1)
    tr, va, te = split(data, (0.5, 0.2, 0.3), seed=1)
    model = train(data, templates, hyper, (tr, va))
    indices = list(range(len(data.subjects)))
    report = evaluate(model, templates, data, indices)
    probs = np.stack([
        predict_proba(model, data.subjects[k].matrix, templates)
        for k in indices
    ])
    labels = np.array([data.subjects[k].label for k in indices])
    parts = [
        auc_pair_count(list(probs[:, c]), list(labels == c))
        for c in range(3)
    ]
    assert report.auc == pytest.approx(float(np.mean(parts)), abs=1e-15)


def test_evaluate_rejects_empty_indices(trained_binary):
    data, templates, model, _ = trained_binary
    with pytest.raises(ValueError):
        evaluate(model, templates, data, [])
