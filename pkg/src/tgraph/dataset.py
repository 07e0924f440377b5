"""Labeled collections of subject connectivity matrices."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .connectivity import ConnectivityMatrix
from .errors import DimensionMismatch, InvalidSpec


@dataclass
class Subject:
    subject_id: str
    matrix: ConnectivityMatrix
    label: int


@dataclass
class LabeledDataset:
    """Subjects partitioned into ``num_groups`` label groups.

    Labels are integers in ``range(num_groups)``.  ``group_index_lists[c]``
    holds the positions (into ``subjects``) of group ``c`` in input order.
    """

    subjects: list[Subject]
    num_groups: int
    group_index_lists: list[list[int]] = field(init=False, repr=False)

    def __post_init__(self):
        self.group_index_lists = [[] for _ in range(self.num_groups)]
        for pos, subj in enumerate(self.subjects):
            if not 0 <= subj.label < self.num_groups:
                raise InvalidSpec(
                    f"subject {subj.subject_id!r} has label {subj.label}, "
                    f"expected 0..{self.num_groups - 1}"
                )
            self.group_index_lists[subj.label].append(pos)

    @property
    def num_rois(self) -> int:
        if not self.subjects:
            raise InvalidSpec("dataset has no subjects")
        return self.subjects[0].matrix.num_rois

    def validate(self) -> None:
        """Raise if the dataset violates its structural invariants."""
        if not self.subjects:
            raise InvalidSpec("dataset has no subjects")
        m = self.subjects[0].matrix.num_rois
        seen: set[str] = set()
        for subj in self.subjects:
            if subj.matrix.num_rois != m:
                raise DimensionMismatch(
                    f"subject {subj.subject_id!r} has {subj.matrix.num_rois} "
                    f"regions, expected {m}"
                )
            if subj.subject_id in seen:
                raise InvalidSpec(f"duplicate subject id {subj.subject_id!r}")
            seen.add(subj.subject_id)
        for c, idx in enumerate(self.group_index_lists):
            if not idx:
                raise InvalidSpec(f"group {c} has no subjects")

    def subset(self, indices) -> "LabeledDataset":
        """New dataset over the given subject positions, same label space."""
        picked = []
        for k in indices:
            k = int(k)
            if not 0 <= k < len(self.subjects):
                raise InvalidSpec(f"subject index {k} out of range")
            picked.append(self.subjects[k])
        return LabeledDataset(picked, self.num_groups)

    def matrices(self) -> list[np.ndarray]:
        return [s.matrix.weights for s in self.subjects]
