"""Grouped counts of subjects with 0, 1 or 2 affected members."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import TableError


@dataclass(frozen=True)
class FrequencyTable:
    """Counts ``(m0, m1, m2)`` per group, in a fixed group order.

    ``counts`` is a read-only ``(g, 3)`` integer array whose row ``i`` holds the
    number of subjects in group ``i`` with 0, 1 and 2 affected members.
    """

    labels: tuple[str, ...]
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 2 or counts.shape[1] != 3:
            raise TableError(f"counts must have shape (g, 3), got {counts.shape}")
        if not np.issubdtype(counts.dtype, np.integer):
            as_int = counts.astype(np.int64)
            if not np.array_equal(as_int, counts):
                raise TableError("counts must be integers")
            counts = as_int
        counts = counts.astype(np.int64)
        if (counts < 0).any():
            raise TableError("counts must be nonnegative")
        labels = tuple(str(x) for x in self.labels)
        if len(labels) != counts.shape[0]:
            raise TableError(f"{len(labels)} labels for {counts.shape[0]} groups")
        if len(set(labels)) != len(labels):
            raise TableError(f"duplicate group labels in {labels}")
        if counts.shape[0] < 2:
            raise TableError("at least two groups are required")
        empty = [lab for lab, row in zip(labels, counts) if row.sum() == 0]
        if empty:
            raise TableError(f"groups without subjects: {', '.join(empty)}")
        counts.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_rows(cls, rows: Sequence[tuple[str, int, int, int]]) -> "FrequencyTable":
        labels = [r[0] for r in rows]
        return cls(tuple(labels), np.array([r[1:] for r in rows], dtype=np.int64))

    @classmethod
    def from_counts(cls, counts, labels: Sequence[str] | None = None) -> "FrequencyTable":
        counts = np.asarray(counts)
        if labels is None:
            labels = [f"G{i + 1}" for i in range(len(counts))]
        return cls(tuple(labels), counts)

    @property
    def g(self) -> int:
        return self.counts.shape[0]

    @property
    def group_sizes(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def totals(self) -> np.ndarray:
        """Column totals ``(S0, S1, S2)``."""
        return self.counts.sum(axis=0)

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    def rows(self) -> list[tuple[str, int, int, int]]:
        return [(lab, *map(int, row)) for lab, row in zip(self.labels, self.counts)]

    def permuted(self, order: Sequence[int]) -> "FrequencyTable":
        order = list(order)
        return FrequencyTable(tuple(self.labels[i] for i in order), self.counts[order])

    def scaled(self, factor: int) -> "FrequencyTable":
        return FrequencyTable(self.labels, self.counts * int(factor))

    def __eq__(self, other):
        if not isinstance(other, FrequencyTable):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.counts, other.counts)

    def __hash__(self):
        return hash((self.labels, self.counts.tobytes()))
