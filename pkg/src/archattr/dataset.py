"""Design-matrix container, class balancing, and deterministic splitting."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .attributes import ATTRIBUTE_NAMES, AttributeTable
from .errors import ArchAttrError, DegenerateSplit, TooFewSamples
from .seeding import SeedParts, derive_rng


@dataclass
class Dataset:
    """Feature matrix plus target; y holds accuracies (float) or 0/1 class
    labels (int) depending on pipeline stage."""

    X: np.ndarray
    y: np.ndarray
    columns: tuple[str, ...]
    ids: tuple[str, ...]
    seed: int | None = None

    def __post_init__(self) -> None:
        self.X = np.ascontiguousarray(self.X, dtype=np.float64)
        if self.X.ndim != 2:
            raise ArchAttrError("X must be 2-dimensional")
        if len(self.y) != self.X.shape[0] or len(self.ids) != self.X.shape[0]:
            raise ArchAttrError("row count mismatch between X, y, and ids")
        if len(self.columns) != self.X.shape[1]:
            raise ArchAttrError("column name count does not match X")
        if len(set(self.columns)) != len(self.columns):
            raise ArchAttrError("column names must be unique")
        if not np.all(np.isfinite(self.X)) or not np.all(np.isfinite(self.y)):
            raise ArchAttrError("non-finite entries in dataset")

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def has_labels(self) -> bool:
        return np.issubdtype(self.y.dtype, np.integer)

    def take(self, idx: np.ndarray | list[int]) -> "Dataset":
        idx = np.asarray(idx)
        return replace(self, X=self.X[idx], y=self.y[idx],
                       ids=tuple(self.ids[int(i)] for i in idx))

    def drop_columns(self, names: set[str]) -> "Dataset":
        keep = [j for j, c in enumerate(self.columns) if c not in names]
        return replace(self, X=self.X[:, keep],
                       columns=tuple(self.columns[j] for j in keep))

    @classmethod
    def from_table(cls, table: AttributeTable, seed: int | None = None) -> "Dataset":
        """Dataset with the canonical attribute columns; y = accuracy."""
        if not table.has_accuracy:
            raise ArchAttrError("attribute table has no accuracy column")
        X = np.array([r.as_row() for r in table.rows], dtype=np.float64)
        y = np.array([r.accuracy for r in table.rows], dtype=np.float64)
        return cls(X, y, ATTRIBUTE_NAMES, tuple(r.network_id for r in table.rows), seed)


def balance_classes(d: Dataset, threshold: float, seed: SeedParts) -> Dataset:
    """Label rows healthy (1) iff accuracy > threshold, then undersample the
    majority class (seeded, without replacement) to an exact 50/50 split.
    Retained rows keep their original order."""
    labels = (d.y > threshold).astype(np.int64)
    healthy = np.flatnonzero(labels == 1)
    broken = np.flatnonzero(labels == 0)
    if len(healthy) == 0 or len(broken) == 0:
        raise DegenerateSplit(
            f"threshold {threshold} left {len(healthy)} healthy / {len(broken)} broken rows")
    minority, majority = (healthy, broken) if len(healthy) <= len(broken) else (broken, healthy)
    rng = derive_rng(seed)
    sampled = rng.choice(majority, size=len(minority), replace=False)
    keep = np.sort(np.concatenate([minority, sampled]))
    return Dataset(d.X[keep], labels[keep], d.columns,
                   tuple(d.ids[int(i)] for i in keep), d.seed)


def train_test_split(d: Dataset, test_fraction: float = 0.2,
                     seed: SeedParts = 0) -> tuple[Dataset, Dataset]:
    """Seeded disjoint split; stratified by class when y holds labels."""
    if d.n_rows < 5:
        raise TooFewSamples(f"need at least 5 rows to split, got {d.n_rows}")
    if not 0.0 < test_fraction < 1.0:
        raise ArchAttrError("test_fraction must be in (0, 1)")
    rng = derive_rng(seed)
    test_idx: list[np.ndarray] = []
    if d.has_labels:
        for cls in np.unique(d.y):
            members = np.flatnonzero(d.y == cls)
            k = int(round(len(members) * test_fraction))
            test_idx.append(rng.permutation(members)[:k])
    else:
        k = int(round(d.n_rows * test_fraction))
        test_idx.append(rng.permutation(d.n_rows)[:k])
    test = np.sort(np.concatenate(test_idx)).astype(np.intp)
    mask = np.ones(d.n_rows, dtype=bool)
    mask[test] = False
    train = np.flatnonzero(mask)
    return d.take(train), d.take(test)
