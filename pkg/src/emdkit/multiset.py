"""Finitely supported weighted multisets and their classical set algebra.

A weighted multiset assigns a non-negative real mass to each of finitely
many support points in ``R^d``.  The density function completely determines
the multiset; intersection, union and sum are the pointwise min, max and sum
of densities.  All values are canonicalized at construction (zero masses
dropped, duplicate coordinates merged, support sorted) and immutable
afterwards, so they are safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "WeightedPointSet",
    "total_mass",
    "intersect",
    "unite",
    "sum_sets",
    "normalize",
]


def _canonicalize(points: np.ndarray, masses: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Merge duplicate coordinates (exact bit equality), drop zero masses, sort support.

    Pairs are sorted before accumulation so that merged masses are summed in
    a fixed order: the canonical form is bitwise identical for any
    construction order of the same (point, mass) pairs.
    """
    if points.shape[0] == 0:
        return points, masses
    keys = (masses,) + tuple(points[:, c] for c in reversed(range(points.shape[1])))
    order = np.lexsort(keys)
    points = points[order]
    masses = masses[order]
    uniq, inverse = np.unique(points, axis=0, return_inverse=True)
    merged = np.zeros(uniq.shape[0])
    np.add.at(merged, inverse.ravel(), masses)
    keep = merged > 0.0
    return uniq[keep], merged[keep]


@dataclass(frozen=True)
class WeightedPointSet:
    """An immutable weighted multiset with finite support.

    Parameters
    ----------
    points : array-like, shape (n, d)
        Support coordinates.  Duplicates are merged by summing masses.
    masses : array-like, shape (n,), optional
        Non-negative mass per point; defaults to unit mass per point.
        Points whose merged mass is exactly zero are dropped.
    id : str
        Opaque label used in Gram matrices and reports.
    class_label, group_label : str, optional
        Classification target and grouping key (e.g. user id for
        leave-one-group-out evaluation).
    dimension : int, optional
        Required only when constructing an empty set; otherwise inferred.
    """

    points: np.ndarray
    masses: np.ndarray = None  # type: ignore[assignment]
    id: str = ""
    class_label: str | None = None
    group_label: str | None = None
    dimension: int = field(default=0)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.size == 0:
            pts = pts.reshape(0, self.dimension if self.dimension else 1)
        if pts.ndim != 2:
            raise ValueError("points must be a 2-d array of shape (n, d)")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        if self.masses is None:
            w = np.ones(pts.shape[0])
        else:
            w = np.asarray(self.masses, dtype=float).ravel()
        if w.shape[0] != pts.shape[0]:
            raise ValueError(f"got {pts.shape[0]} points but {w.shape[0]} masses")
        if not np.all(np.isfinite(w)):
            raise ValueError("masses must be finite")
        if np.any(w < 0):
            raise ValueError("masses must be non-negative")
        pts, w = _canonicalize(pts, w)
        dim = pts.shape[1] if pts.shape[0] else (self.dimension or pts.shape[1])
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "masses", w)
        object.__setattr__(self, "dimension", int(dim))

    @classmethod
    def empty(cls, dimension: int, id: str = "") -> "WeightedPointSet":
        """The empty multiset in ``R^dimension`` (total mass 0)."""
        return cls(np.empty((0, dimension)), np.empty(0), id=id, dimension=dimension)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[Sequence[float] | float, float]], **kwargs) -> "WeightedPointSet":
        """Build from ``(point, mass)`` pairs; scalar points are treated as 1-d."""
        pairs = list(pairs)
        if not pairs:
            return cls.empty(kwargs.pop("dimension", 1), **kwargs)
        points = [np.atleast_1d(p) for p, _ in pairs]
        masses = [m for _, m in pairs]
        return cls(np.array(points, dtype=float), np.array(masses, dtype=float), **kwargs)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    def empty_like(self) -> "WeightedPointSet":
        return WeightedPointSet.empty(self.dimension)

    def scaled(self, factor: float) -> "WeightedPointSet":
        """Same support with all masses multiplied by ``factor >= 0``."""
        if factor < 0:
            raise ValueError("scale factor must be non-negative")
        return self._replace_masses(self.masses * factor)

    def _replace_masses(self, masses: np.ndarray) -> "WeightedPointSet":
        return WeightedPointSet(
            self.points.copy(), masses, id=self.id,
            class_label=self.class_label, group_label=self.group_label,
            dimension=self.dimension,
        )

    def same_support_as(self, other: "WeightedPointSet") -> bool:
        return (
            self.points.shape == other.points.shape
            and bool(np.array_equal(self.points, other.points))
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, WeightedPointSet):
            return NotImplemented
        return self.same_support_as(other) and bool(np.array_equal(self.masses, other.masses))

    def __hash__(self):
        return hash((self.points.tobytes(), self.masses.tobytes()))

    def __repr__(self) -> str:
        return (
            f"WeightedPointSet(n={len(self)}, d={self.dimension}, "
            f"mass={self.total_mass:.6g}, id={self.id!r})"
        )


def _check_same_dimension(a: WeightedPointSet, b: WeightedPointSet) -> int:
    if a.dimension != b.dimension:
        raise ValueError(f"dimension mismatch: {a.dimension} vs {b.dimension}")
    return a.dimension


def _aligned_densities(a: WeightedPointSet, b: WeightedPointSet):
    """Densities of a and b evaluated on the union of their supports."""
    dim = _check_same_dimension(a, b)
    pts = np.concatenate([a.points, b.points], axis=0)
    if pts.shape[0] == 0:
        return np.empty((0, dim)), np.empty(0), np.empty(0)
    uniq, inverse = np.unique(pts, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    da = np.zeros(uniq.shape[0])
    db = np.zeros(uniq.shape[0])
    da[inverse[: len(a)]] = a.masses
    db[inverse[len(a):]] = b.masses
    return uniq, da, db


def total_mass(a: WeightedPointSet) -> float:
    """Total mass of the multiset; 0 for the empty set."""
    return a.total_mass


def intersect(a: WeightedPointSet, b: WeightedPointSet) -> WeightedPointSet:
    """Multiset intersection: pointwise min of the two densities."""
    uniq, da, db = _aligned_densities(a, b)
    return WeightedPointSet(uniq, np.minimum(da, db), dimension=a.dimension)


def unite(a: WeightedPointSet, b: WeightedPointSet) -> WeightedPointSet:
    """Multiset union: pointwise max of the two densities."""
    uniq, da, db = _aligned_densities(a, b)
    return WeightedPointSet(uniq, np.maximum(da, db), dimension=a.dimension)


def sum_sets(a: WeightedPointSet, b: WeightedPointSet) -> WeightedPointSet:
    """Multiset sum: pointwise sum of the two densities."""
    uniq, da, db = _aligned_densities(a, b)
    return WeightedPointSet(uniq, da + db, dimension=a.dimension)


def normalize(a: WeightedPointSet) -> WeightedPointSet:
    """Scale masses so the total mass is 1.

    Raises
    ------
    ValueError
        If the input has zero total mass.
    """
    total = a.total_mass
    if total <= 0.0:
        raise ValueError("cannot normalize a multiset with zero total mass")
    return a._replace_masses(a.masses / total)
