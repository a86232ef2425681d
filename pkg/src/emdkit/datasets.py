"""Dataset container and the JSON interchange format.

A dataset is an ordered list of weighted point sets sharing one ambient
dimension.  The JSON layout::

    {"dimension": d,
     "items": [{"id": str, "label": str|null, "group": str|null,
                "points": [[f, ...], ...], "weights": [f, ...]|null}]}

Omitted or null ``weights`` means unit mass per point.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .multiset import WeightedPointSet

__all__ = ["Dataset", "load_dataset", "save_dataset"]


@dataclass(frozen=True)
class Dataset:
    items: tuple[WeightedPointSet, ...]
    dimension: int

    def __post_init__(self):
        for s in self.items:
            if s.dimension != self.dimension:
                raise ValueError(
                    f"item {s.id!r} has dimension {s.dimension}, dataset has {self.dimension}"
                )
        object.__setattr__(self, "items", tuple(self.items))

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __getitem__(self, k):
        return self.items[k]

    @property
    def labels(self) -> list[str | None]:
        return [s.class_label for s in self.items]

    @property
    def groups(self) -> list[str | None]:
        return [s.group_label for s in self.items]

    @property
    def ids(self) -> list[str]:
        return [s.id for s in self.items]

    def subset(self, index: Sequence[int]) -> "Dataset":
        return Dataset(tuple(self.items[i] for i in index), self.dimension)

    @classmethod
    def from_items(cls, items: Iterable[WeightedPointSet]) -> "Dataset":
        items = tuple(items)
        if not items:
            raise ValueError("dataset must contain at least one item")
        return cls(items, items[0].dimension)


def load_dataset(path) -> Dataset:
    """Read a dataset from the JSON interchange format."""
    with open(path) as fh:
        payload = json.load(fh)
    dim = int(payload["dimension"])
    items = []
    for k, entry in enumerate(payload["items"]):
        points = np.asarray(entry["points"], dtype=float).reshape(-1, dim)
        weights = entry.get("weights")
        masses = None if weights is None else np.asarray(weights, dtype=float)
        items.append(WeightedPointSet(
            points, masses,
            id=str(entry.get("id", k)),
            class_label=entry.get("label"),
            group_label=entry.get("group"),
            dimension=dim,
        ))
    return Dataset(tuple(items), dim)


def save_dataset(dataset: Dataset, path) -> None:
    """Write a dataset in the JSON interchange format."""
    payload = {
        "dimension": dataset.dimension,
        "items": [
            {
                "id": s.id,
                "label": s.class_label,
                "group": s.group_label,
                "points": [[float(c) for c in p] for p in s.points],
                "weights": [float(w) for w in s.masses],
            }
            for s in dataset
        ],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)
