"""Ground distances between individual points and their paired kernels.

A ground distance is the pairwise cost that transport costs aggregate.
Built-in kinds: Euclidean, squared Euclidean, the 0-1 discrete metric,
the geodesic on the unit circle, and index-keyed precomputed matrices.
Any kind can be thresholded (``D_t = min(t, D)``), and arbitrary symmetric
costs can be wrapped from a callable.

The distance <-> kernel conversions implemented here are

    K(x, y) = D(x, x0) + D(y, x0) - D(x, y) - D(x0, x0)
    D(x, y) = K(x, x) + K(y, y) - 2 K(x, y)

The first is positive definite exactly when D is conditionally negative
definite; the second induces the squared feature-space distance of a
positive definite kernel.  Neither property is enforced here; the gram
module provides the diagnostics.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "GroundDistance",
    "SinkSpec",
    "euclidean",
    "squared_euclidean",
    "discrete",
    "circle_geodesic",
    "precomputed",
    "from_callable",
    "circle_geodesic_reference",
    "kernel_from_distance",
    "distance_from_kernel",
    "load_matrix_csv",
    "save_matrix_csv",
]

_TWO_PI = 2.0 * math.pi


def _as_points(x) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    if pts.ndim != 2:
        raise ValueError("points must have shape (n, d)")
    return pts


@dataclass(frozen=True)
class GroundDistance:
    """A symmetric, non-negative pairwise cost on points.

    Use the module-level factories (:func:`euclidean`, :func:`discrete`, ...)
    rather than constructing directly.  Instances are callable on a pair of
    points and provide a vectorized :meth:`pairwise`.

    Attributes
    ----------
    kind : str
        One of ``euclidean``, ``squared_euclidean``, ``discrete``,
        ``circle_geodesic``, ``precomputed``, ``callable``.
    threshold : float or None
        When set, every evaluation is clamped to ``min(threshold, base)``.
    """

    kind: str
    threshold: float | None = None
    matrix: np.ndarray | None = None
    func: Callable[[np.ndarray, np.ndarray], float] | None = None
    func_bound: float = math.inf

    def __post_init__(self):
        if self.threshold is not None and self.threshold <= 0:
            raise ValueError("threshold must be positive")

    def thresholded(self, t: float) -> "GroundDistance":
        """Return ``min(t, D)``; re-thresholding keeps the tighter bound."""
        if t <= 0:
            raise ValueError("threshold must be positive")
        if self.threshold is not None:
            t = min(t, self.threshold)
        return GroundDistance(self.kind, t, self.matrix, self.func, self.func_bound)

    @property
    def bound(self) -> float:
        """Supremum of the distance over its whole domain (inf if unbounded)."""
        base = {
            "euclidean": math.inf,
            "squared_euclidean": math.inf,
            "discrete": 1.0,
            "circle_geodesic": math.pi,
            "precomputed": float(self.matrix.max()) if self.matrix is not None and self.matrix.size else 0.0,
            "callable": self.func_bound,
        }[self.kind]
        if self.threshold is not None:
            return min(self.threshold, base)
        return base

    def __call__(self, x, y) -> float:
        return float(self.pairwise(_as_points(x), _as_points(y))[0, 0])

    def pairwise(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """All-pairs cost matrix of shape ``(len(xs), len(ys))``."""
        xs = _as_points(xs)
        ys = _as_points(ys)
        if self.kind in ("euclidean", "squared_euclidean"):
            if xs.shape[1] != ys.shape[1]:
                raise ValueError("dimension mismatch between point sets")
            diff = xs[:, None, :] - ys[None, :, :]
            d = np.einsum("ijk,ijk->ij", diff, diff)
            if self.kind == "euclidean":
                d = np.sqrt(d)
        elif self.kind == "discrete":
            if xs.shape[1] != ys.shape[1]:
                raise ValueError("dimension mismatch between point sets")
            eq = np.all(xs[:, None, :] == ys[None, :, :], axis=2)
            d = np.where(eq, 0.0, 1.0)
        elif self.kind == "circle_geodesic":
            if xs.shape[1] != 1 or ys.shape[1] != 1:
                raise ValueError("circle_geodesic expects scalar angles")
            a = xs[:, 0]
            b = ys[:, 0]
            for arr in (a, b):
                if np.any(arr < 0) or np.any(arr >= _TWO_PI):
                    raise ValueError("circle angles must lie in [0, 2*pi)")
            diff = np.abs(a[:, None] - b[None, :])
            d = np.minimum(diff, _TWO_PI - diff)
        elif self.kind == "precomputed":
            d = self._precomputed_pairwise(xs, ys)
        elif self.kind == "callable":
            d = np.empty((xs.shape[0], ys.shape[0]))
            for i in range(xs.shape[0]):
                for j in range(ys.shape[0]):
                    d[i, j] = self.func(xs[i], ys[j])
        else:
            raise ValueError(f"unknown ground distance kind {self.kind!r}")
        if self.threshold is not None:
            d = np.minimum(d, self.threshold)
        return d

    def _precomputed_pairwise(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        if xs.shape[1] != 1 or ys.shape[1] != 1:
            raise ValueError("precomputed distances expect scalar point indices")
        i = xs[:, 0]
        j = ys[:, 0]
        ii = i.astype(int)
        jj = j.astype(int)
        if np.any(ii != i) or np.any(jj != j):
            raise ValueError("precomputed distance indices must be integers")
        n = self.matrix.shape[0]
        if np.any(ii < 0) or np.any(ii >= n) or np.any(jj < 0) or np.any(jj >= n):
            raise IndexError("precomputed distance index out of range")
        return self.matrix[np.ix_(ii, jj)]


def euclidean(threshold: float | None = None) -> GroundDistance:
    """Euclidean distance on R^d, optionally thresholded."""
    return GroundDistance("euclidean", threshold)


def squared_euclidean(threshold: float | None = None) -> GroundDistance:
    """Squared Euclidean distance on R^d (a semimetric), optionally thresholded."""
    return GroundDistance("squared_euclidean", threshold)


def discrete(threshold: float | None = None) -> GroundDistance:
    """The 0-1 discrete metric: 0 iff the points are bitwise equal."""
    return GroundDistance("discrete", threshold)


def circle_geodesic(threshold: float | None = None) -> GroundDistance:
    """Arc-length distance between angles in [0, 2*pi) on the unit circle."""
    return GroundDistance("circle_geodesic", threshold)


def precomputed(matrix: np.ndarray, threshold: float | None = None) -> GroundDistance:
    """Index-keyed distance backed by a symmetric non-negative matrix.

    Points are integer indices (as 1-d vectors ``[i]``) into the matrix.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("precomputed distance matrix must be square")
    if not np.all(np.isfinite(m)):
        raise ValueError("precomputed distance matrix must be finite")
    asym = np.abs(m - m.T).max() if m.size else 0.0
    scale = max(np.abs(m).max(), 1.0) if m.size else 1.0
    if asym > 1e-9 * scale:
        raise ValueError("precomputed distance matrix is not symmetric")
    if np.any(m < 0):
        raise ValueError("precomputed distance matrix must be non-negative")
    m = 0.5 * (m + m.T)
    m.setflags(write=False)
    return GroundDistance("precomputed", threshold, matrix=m)


def from_callable(func: Callable, bound: float = math.inf,
                  threshold: float | None = None) -> GroundDistance:
    """Wrap an arbitrary symmetric cost ``func(x, y) -> float``.

    The caller is responsible for symmetry; ``bound`` is the supremum of the
    cost over the intended domain (needed by bounded-distance operations).
    """
    return GroundDistance("callable", threshold, func=func, func_bound=bound)


def circle_geodesic_reference(x: float, y: float) -> float:
    """Arc length via the planar embedding: the angle between the two unit vectors.

    Computed as atan2(|cross|, dot) of (cos x, sin x) and (cos y, sin y),
    which is the numerically stable evaluation of arccos of their dot
    product.  Serves as the reference implementation for the wrapped
    |x - y| fast path.
    """
    ux, uy = math.cos(x), math.sin(x)
    vx, vy = math.cos(y), math.sin(y)
    dot = ux * vx + uy * vy
    cross = ux * vy - uy * vx
    return math.atan2(abs(cross), dot)


def kernel_from_distance(distance, x0) -> Callable:
    """The kernel ``K(x, y) = D(x, x0) + D(y, x0) - D(x, y) - D(x0, x0)``.

    Positive definite whenever ``distance`` is conditionally negative
    definite (a testable property, not enforced).

    Parameters
    ----------
    distance : GroundDistance or callable
    x0 : point
        The anchor element.

    Returns
    -------
    callable
        ``K(x, y) -> float``; also usable with array arguments through
        :func:`pairwise_kernel`.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    d00 = float(_eval(distance, x0, x0))

    def kernel(x, y):
        return float(_eval(distance, x, x0) + _eval(distance, y, x0)
                     - _eval(distance, x, y) - d00)

    kernel.anchor = x0
    kernel.anchor_self = d00
    kernel.distance = distance
    return kernel


def distance_from_kernel(kernel: Callable) -> Callable:
    """The squared feature-space distance ``D(x, y) = K(x,x) + K(y,y) - 2 K(x,y)``.

    Conditionally negative definite whenever ``kernel`` is positive definite
    (a testable property, not enforced).  ``D(x, x) = 0`` by construction.
    """

    def dist(x, y):
        return float(kernel(x, x) + kernel(y, y) - 2.0 * kernel(x, y))

    return dist


def pairwise_kernel(kernel, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """All-pairs evaluation of a scalar kernel; vectorizes anchored-difference kernels."""
    xs = _as_points(xs)
    ys = _as_points(ys)
    dist = getattr(kernel, "distance", None)
    if isinstance(dist, GroundDistance):
        # K = d(x, x0) + d(y, x0) - d(x, y) - d(x0, x0), vectorized
        x0 = kernel.anchor.reshape(1, -1)
        dx = dist.pairwise(xs, x0)[:, 0]
        dy = dist.pairwise(ys, x0)[:, 0]
        return dx[:, None] + dy[None, :] - dist.pairwise(xs, ys) - kernel.anchor_self
    out = np.empty((xs.shape[0], ys.shape[0]))
    for i in range(xs.shape[0]):
        for j in range(ys.shape[0]):
            out[i, j] = kernel(xs[i], ys[j])
    return out


def _eval(distance, x, y) -> float:
    if isinstance(distance, GroundDistance):
        return distance(x, y)
    return float(distance(np.atleast_1d(x), np.atleast_1d(y)))


@dataclass(frozen=True)
class SinkSpec:
    """Destination of excess mass when comparing sets of unequal total mass.

    Two modes:

    * ``point``: excess mass at ``b`` costs ``D(b, p) - D(p, p)/2`` per unit,
      for a designated point ``p`` in the ground space;
    * ``flat_rate``: excess mass costs a flat ``rate`` per unit regardless of
      location (the thresholded-ground-distance shortcut, with rate equal to
      the threshold when the sink lies beyond it for every point).
    """

    mode: str
    point: np.ndarray | None = None
    rate: float = 0.0

    @classmethod
    def at_point(cls, p) -> "SinkSpec":
        return cls("point", point=np.atleast_1d(np.asarray(p, dtype=float)))

    @classmethod
    def flat_rate(cls, rate: float) -> "SinkSpec":
        if rate <= 0:
            raise ValueError("flat rate must be positive")
        return cls("flat_rate", rate=float(rate))

    def self_cost(self, distance) -> float:
        """D(p, p); 0 in flat-rate mode."""
        if self.mode == "flat_rate":
            return 0.0
        return _eval(distance, self.point, self.point)

    def cost_to_sink(self, distance, points: np.ndarray) -> np.ndarray:
        """Per-unit transport cost from each of ``points`` to the sink."""
        points = _as_points(points)
        if self.mode == "flat_rate":
            return np.full(points.shape[0], self.rate)
        if isinstance(distance, GroundDistance):
            return distance.pairwise(points, self.point.reshape(1, -1))[:, 0]
        return np.array([_eval(distance, p, self.point) for p in points])


def load_matrix_csv(path, tol: float = 1e-9) -> tuple[list[str], np.ndarray]:
    """Load a labeled square matrix from CSV.

    Format: header row ``,id1,id2,...``; each body row ``id,v1,v2,...``.
    Asymmetry beyond ``tol`` (relative to the largest magnitude) is an input
    error; smaller asymmetry is repaired by averaging with the transpose.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty matrix file")
    header = rows[0][1:]
    ids = [c.strip() for c in header]
    n = len(ids)
    if len(rows) - 1 != n:
        raise ValueError(f"{path}: expected {n} data rows, got {len(rows) - 1}")
    values = np.empty((n, n))
    for i, row in enumerate(rows[1:]):
        if row[0].strip() != ids[i]:
            raise ValueError(f"{path}: row label {row[0]!r} does not match header order")
        if len(row) - 1 != n:
            raise ValueError(f"{path}: row {i + 2} has {len(row) - 1} values, expected {n}")
        values[i] = [float(v) for v in row[1:]]
    scale = max(float(np.abs(values).max()), 1.0) if values.size else 1.0
    asym = float(np.abs(values - values.T).max()) if values.size else 0.0
    if asym > tol * scale:
        raise ValueError(f"{path}: matrix asymmetry {asym:.3e} exceeds tolerance")
    values = 0.5 * (values + values.T)
    return ids, values


def save_matrix_csv(path, ids: list[str], values: np.ndarray) -> None:
    """Write a labeled square matrix in the CSV format of :func:`load_matrix_csv`."""
    values = np.asarray(values)
    n = len(ids)
    if values.shape != (n, n):
        raise ValueError("ids and matrix shape disagree")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([""] + list(ids))
        for i, row_id in enumerate(ids):
            writer.writerow([row_id] + [repr(float(v)) for v in values[i]])
