"""Planted-structure synthetic datasets with known ground truth.

All groups share one sparse symmetric base pattern.  A designated subset of
the base edges is differentiated: group ``c`` adds the offset
``effect_size * (c - (C-1)/2)`` there, so for two groups the offsets are
-effect/2 and +effect/2 and any two groups differ by at least ``effect_size``
on every differentiated edge.  Differentiated base values are clamped so the
group values stay inside the clip range; in particular the base value is
nonzero there, which keeps the summed global template informative on exactly
the edges that separate the groups.

Subjects are the group template plus symmetric Gaussian entry noise, clipped
to [-1, 1], with unit diagonal.  Everything is drawn from one seeded
generator in a fixed order, so a seed pins the dataset bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .connectivity import ConnectivityMatrix
from .dataset import LabeledDataset, Subject
from .errors import InvalidSpec


@dataclass
class SynthSpec:
    num_rois: int = 16
    num_groups: int = 2
    subjects_per_group: int = 10
    support_density: float = 0.2
    effect_size: float = 0.6
    noise_sigma: float = 0.1
    seed: int = 0

    def validate(self) -> None:
        if self.num_rois < 2:
            raise InvalidSpec("num_rois must be at least 2")
        if self.num_groups < 1:
            raise InvalidSpec("num_groups must be at least 1")
        if self.subjects_per_group < 1:
            raise InvalidSpec("subjects_per_group must be at least 1")
        if not 0.0 < self.support_density <= 1.0:
            raise InvalidSpec("support_density must be in (0, 1]")
        if self.effect_size < 0.0:
            raise InvalidSpec("effect_size must be nonnegative")
        if self.noise_sigma < 0.0:
            raise InvalidSpec("noise_sigma must be nonnegative")


@dataclass
class SynthGroundTruth:
    spec: SynthSpec
    templates: list[np.ndarray]
    support_pairs: list[tuple[int, int]]
    differentiated_pairs: list[tuple[int, int]]


def synth_generate(spec: SynthSpec) -> tuple[LabeledDataset, SynthGroundTruth]:
    """Generate a planted dataset and its ground truth."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    m = spec.num_rois
    iu, ju = np.triu_indices(m, k=1)
    n_pairs = iu.size
    n_support = max(1, round(spec.support_density * n_pairs))
    support = np.sort(rng.choice(n_pairs, size=n_support, replace=False))
    n_diff = max(1, n_support // 2)
    diff_pos = np.sort(rng.choice(n_support, size=n_diff, replace=False))
    diff = support[diff_pos]

    magnitudes = rng.uniform(0.3, 0.7, size=n_support)
    signs = rng.choice(np.array([-1.0, 1.0]), size=n_support)
    base_vals = magnitudes * signs
    # Keep group values (base +- effect/2 at the extremes) inside the clip
    # range so clipping does not eat the planted gaps.
    cap = max(0.05, 0.95 - spec.effect_size / 2.0)
    base_vals[diff_pos] = np.clip(base_vals[diff_pos], -cap, cap)

    base = np.zeros((m, m))
    base[iu[support], ju[support]] = base_vals
    base = base + base.T
    np.fill_diagonal(base, 1.0)

    templates = []
    for c in range(spec.num_groups):
        offset = spec.effect_size * (c - (spec.num_groups - 1) / 2.0)
        g = base.copy()
        g[iu[diff], ju[diff]] += offset
        g[ju[diff], iu[diff]] += offset
        np.fill_diagonal(g, 1.0)
        templates.append(g)

    subjects = []
    for c in range(spec.num_groups):
        for k in range(spec.subjects_per_group):
            noise = rng.normal(0.0, spec.noise_sigma, size=n_pairs)
            w = templates[c].copy()
            w[iu, ju] += noise
            w[ju, iu] = w[iu, ju]
            np.clip(w, -1.0, 1.0, out=w)
            np.fill_diagonal(w, 1.0)
            subjects.append(
                Subject(f"g{c}s{k:03d}", ConnectivityMatrix(w), c)
            )

    truth = SynthGroundTruth(
        spec,
        templates,
        [(int(iu[p]), int(ju[p])) for p in support],
        [(int(iu[p]), int(ju[p])) for p in diff],
    )
    return LabeledDataset(subjects, spec.num_groups), truth


def recovered_differentiated_pairs(templates, threshold: float):
    """Upper-triangle pairs whose maximal inter-template gap exceeds
    ``threshold``."""
    mats = [np.asarray(g, dtype=float) for g in getattr(templates, "templates", templates)]
    m = mats[0].shape[0]
    iu, ju = np.triu_indices(m, k=1)
    gap = np.zeros(iu.size)
    for a in range(len(mats)):
        for b in range(a + 1, len(mats)):
            gap = np.maximum(gap, np.abs(mats[a][iu, ju] - mats[b][iu, ju]))
    return [(int(iu[p]), int(ju[p])) for p in np.flatnonzero(gap > threshold)]


def support_f1(recovered, truth_pairs) -> float:
    """Harmonic mean of precision and recall over edge pairs."""
    rec = {tuple(p) for p in recovered}
    tru = {tuple(p) for p in truth_pairs}
    tp = len(rec & tru)
    if tp == 0:
        return 0.0
    precision = tp / len(rec)
    recall = tp / len(tru)
    return 2.0 * precision * recall / (precision + recall)


def differentiated_f1(fitted, truth: SynthGroundTruth, threshold=None) -> float:
    """F1 of recovered differentiated edges against the planted ones.

    The default recovery threshold is half the planted effect size: well
    below the planted gap, well above the noise scale of fitted entries.
    """
    if threshold is None:
        threshold = truth.spec.effect_size / 2.0
    recovered = recovered_differentiated_pairs(fitted, threshold)
    return support_f1(recovered, truth.differentiated_pairs)
