"""Subject manifests: the CSV index tying ids and labels to data files.

A manifest is a CSV with header ``subject_id,label,path``.  Paths are
resolved relative to the manifest's directory.  Label indices are assigned
in order of first appearance.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .connectivity import ConnectivityMatrix, read_matrix_csv
from .dataset import LabeledDataset, Subject
from .errors import DataFormatError

_HEADER = ["subject_id", "label", "path"]


@dataclass
class ManifestEntry:
    subject_id: str
    label: str
    path: str


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry]
    base_dir: Path

    @property
    def label_map(self) -> dict[str, int]:
        mapping: dict[str, int] = {}
        for e in self.entries:
            if e.label not in mapping:
                mapping[e.label] = len(mapping)
        return mapping

    def resolve(self, entry: ManifestEntry) -> Path:
        p = Path(entry.path)
        return p if p.is_absolute() else self.base_dir / p


def read_manifest(path) -> DatasetManifest:
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"manifest not found: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataFormatError(f"manifest {path} is empty (missing header)")
    header = [h.strip() for h in rows[0]]
    if header != _HEADER:
        raise DataFormatError(
            f"manifest {path} header is {header}, expected {_HEADER}"
        )
    entries = []
    seen: set[str] = set()
    for i, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 3:
            raise DataFormatError(
                f"manifest {path} line {i} has {len(row)} fields, expected 3"
            )
        sid, label, rel = (tok.strip() for tok in row)
        if not sid or not label or not rel:
            raise DataFormatError(f"manifest {path} line {i} has empty fields")
        if sid in seen:
            raise DataFormatError(
                f"manifest {path} repeats subject_id {sid!r} (line {i})"
            )
        seen.add(sid)
        entries.append(ManifestEntry(sid, label, rel))
    return DatasetManifest(entries, path.parent)


def write_manifest(entries, path) -> None:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_HEADER)
        for e in entries:
            writer.writerow([e.subject_id, e.label, e.path])


def load_dataset(manifest: DatasetManifest) -> LabeledDataset:
    """Read every matrix named by the manifest into a labeled dataset."""
    label_map = manifest.label_map
    subjects = []
    for e in manifest.entries:
        target = manifest.resolve(e)
        if not target.exists():
            raise DataFormatError(
                f"subject {e.subject_id!r}: file not found: {target}"
            )
        w = read_matrix_csv(target)
        if not np.array_equal(w, w.T):
            raise DataFormatError(
                f"subject {e.subject_id!r}: matrix {target} is not symmetric"
            )
        subjects.append(Subject(e.subject_id, ConnectivityMatrix(w), label_map[e.label]))
    if not subjects:
        raise DataFormatError(f"manifest in {manifest.base_dir} lists no subjects")
    data = LabeledDataset(subjects, len(label_map))
    data.validate()
    return data
