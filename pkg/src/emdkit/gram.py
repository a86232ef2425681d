"""Gram-matrix assembly, definiteness diagnostics, and spectral corrections.

Definiteness verdicts follow the quadratic-form definitions: a kernel matrix
G is positive semi-definite when its minimum eigenvalue is non-negative (at a
relative tolerance), and a distance matrix is conditionally negative definite
when the centered matrix P G P, P = I - ones/n, has no positive eigenvalue
(the centering realizes the zero-sum constraint on the coefficients).

Corrections for indefinite kernel matrices:

* Shift — add s I with s the magnitude of the most negative eigenvalue;
* KSVM — eigendecompose the label-conjugated matrix Y G Y = U diag(d) U^T and
  flip negative eigenvalues, training downstream on U |d| U^T with the
  coefficient back-map U sign(d) U^T.

Also here: generalized RBF construction exp(-u D) with the automatic scale
u = 1 / mean training distance, the maximal-entropy transport kernel, the
block flow-Gram PD-ization scheme for disjointly supported multisets, and
randomized searches for non-CND witnesses of circle and planar-grid
transport.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from joblib import Parallel, delayed

from .multiset import WeightedPointSet
from . import transport
from .transform import transform_pd_matrix

__all__ = [
    "GramMatrix",
    "DefinitenessReport",
    "RbfParams",
    "assemble_gram",
    "rbf_from_distance",
    "idk",
    "diagnose",
    "shift_correct",
    "ksvm_basis",
    "ksvm_correct_from_basis",
    "ksvm_correct",
    "KsvmCorrection",
    "flow_gram_pdize",
    "FlowGramResult",
    "NonCndWitness",
    "find_circle_non_cnd_witness",
    "find_square_grid_non_cnd_witness",
    "verify_witness",
]

DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class GramMatrix:
    """A labeled symmetric matrix of kernel or distance evaluations.

    ``kind`` is ``"kernel"`` or ``"distance"``; distance matrices must have
    a zero diagonal and non-negative entries.  Construction symmetrizes by
    averaging; asymmetry beyond 1e-6 relative is an input error.
    """

    values: np.ndarray
    ids: tuple[str, ...]
    kind: str = "kernel"
    provenance: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("Gram matrix must be square")
        if not np.all(np.isfinite(v)):
            raise ValueError("Gram matrix entries must be finite")
        ids = tuple(str(i) for i in self.ids)
        if len(ids) != v.shape[0]:
            raise ValueError("ids length does not match matrix size")
        scale = max(float(np.abs(v).max()), 1.0) if v.size else 1.0
        asym = float(np.abs(v - v.T).max()) if v.size else 0.0
        if asym > 1e-6 * scale:
            raise ValueError(f"matrix asymmetry {asym:.3e} exceeds 1e-6 relative tolerance")
        v = 0.5 * (v + v.T)
        if self.kind == "distance":
            if v.size and float(np.abs(np.diag(v)).max()) > 1e-9 * scale:
                raise ValueError("distance matrix must have a zero diagonal")
            if np.any(v < -1e-12 * scale):
                raise ValueError("distance matrix must be non-negative")
        elif self.kind != "kernel":
            raise ValueError("kind must be 'kernel' or 'distance'")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "ids", ids)

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def submatrix(self, index: Sequence[int]) -> "GramMatrix":
        idx = np.asarray(index, dtype=int)
        return GramMatrix(self.values[np.ix_(idx, idx)],
                          tuple(self.ids[i] for i in idx),
                          kind=self.kind, provenance=self.provenance)


@dataclass(frozen=True)
class DefinitenessReport:
    """Spectral summary of a symmetric matrix with PSD and CND verdicts."""

    eigenvalues: np.ndarray
    min_eig: float
    max_abs_eig: float
    is_psd: bool
    centered_max_eig: float
    is_cnd: bool
    tolerance: float

    def spectrum_concentration(self, k: int) -> float:
        """Fraction of the total absolute spectrum carried by the top-k magnitudes.

        A descriptive statistic (spread-out spectra make partial
        decompositions expensive); no verdict is attached to it.
        """
        mags = np.sort(np.abs(self.eigenvalues))[::-1]
        total = float(mags.sum())
        if total == 0.0:
            return 1.0
        return float(mags[: max(k, 0)].sum() / total)

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "min_eig": self.min_eig,
            "max_abs_eig": self.max_abs_eig,
            "is_psd": self.is_psd,
            "centered_max_eig": self.centered_max_eig,
            "is_cnd": self.is_cnd,
            "tolerance": self.tolerance,
            "spectrum_top5_fraction": self.spectrum_concentration(5),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def diagnose(gram: GramMatrix | np.ndarray, tol: float = DEFAULT_TOL) -> DefinitenessReport:
    """Full-spectrum definiteness diagnostics of a symmetric matrix.

    ``is_psd`` holds when ``min eig >= -tol * max |eig|``; ``is_cnd`` when the
    centered matrix P G P has ``max eig <= tol * max |eig|``.
    """
    g = gram.values if isinstance(gram, GramMatrix) else np.asarray(gram, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError("expected a square matrix")
    n = g.shape[0]
    if n == 0:
        return DefinitenessReport(np.empty(0), 0.0, 0.0, True, 0.0, True, tol)
    eig = np.linalg.eigvalsh(0.5 * (g + g.T))
    max_abs = float(np.abs(eig).max())
    centering = np.eye(n) - np.full((n, n), 1.0 / n)
    centered = centering @ g @ centering
    centered_eig = np.linalg.eigvalsh(0.5 * (centered + centered.T))
    return DefinitenessReport(
        eigenvalues=eig,
        min_eig=float(eig[0]),
        max_abs_eig=max_abs,
        is_psd=bool(eig[0] >= -tol * max_abs),
        centered_max_eig=float(centered_eig[-1]),
        is_cnd=bool(centered_eig[-1] <= tol * max_abs),
        tolerance=tol,
    )


def assemble_gram(items: Sequence[WeightedPointSet], pairwise: Callable,
                  kind: str = "kernel", provenance: str = "",
                  n_jobs: int | None = None) -> GramMatrix:
    """Evaluate a symmetric two-argument function on all item pairs.

    Each (i, j) entry with i <= j is computed exactly once (diagonal
    included) and mirrored, so the result is deterministic regardless of
    parallelism.  Evaluator failures propagate annotated with the offending
    pair.
    """
    n = len(items)
    ids = tuple(s.id or str(k) for k, s in enumerate(items))

    def _row(i):
        out = np.empty(n - i)
        for j in range(i, n):
            try:
                out[j - i] = pairwise(items[i], items[j])
            except Exception as exc:
                raise RuntimeError(f"pairwise evaluation failed at ({ids[i]}, {ids[j]})") from exc
        return out

    if n_jobs in (None, 0, 1):
        rows = [_row(i) for i in range(n)]
    else:
        rows = Parallel(n_jobs=n_jobs)(delayed(_row)(i) for i in range(n))
    values = np.zeros((n, n))
    for i, row in enumerate(rows):
        values[i, i:] = row
        values[i:, i] = row
    return GramMatrix(values, ids, kind=kind, provenance=provenance)


@dataclass(frozen=True)
class RbfParams:
    """Scale of the generalized RBF kernel exp(-u D).

    ``auto=True`` sets u to the inverse of the mean pairwise training
    distance (strict upper triangle of the training block).
    """

    u: float = 1.0
    auto: bool = False

    def resolve(self, distances: np.ndarray, train_index: Sequence[int] | None = None) -> float:
        if not self.auto:
            if self.u <= 0:
                raise ValueError("rbf scale u must be positive")
            return self.u
        d = np.asarray(distances, dtype=float)
        if train_index is not None:
            idx = np.asarray(train_index, dtype=int)
            d = d[np.ix_(idx, idx)]
        n = d.shape[0]
        if n < 2:
            raise ValueError("auto rbf scale needs at least two training items")
        upper = d[np.triu_indices(n, k=1)]
        mean = float(upper.mean())
        if mean <= 0:
            raise ValueError("auto rbf scale undefined: mean training distance is zero")
        return 1.0 / mean


def rbf_from_distance(gram: GramMatrix, params: RbfParams,
                      train_index: Sequence[int] | None = None) -> GramMatrix:
    """Generalized RBF kernel matrix exp(-u * D) from a distance matrix."""
    if gram.kind != "distance":
        raise ValueError("rbf_from_distance expects a distance Gram")
    u = params.resolve(gram.values, train_index)
    return GramMatrix(np.exp(-u * gram.values), gram.ids, kind="kernel",
                      provenance=f"rbf(u={u:.6g}) o {gram.provenance}")


def idk(a: WeightedPointSet, b: WeightedPointSet, distance, u: float) -> float:
    """Maximal-entropy transport kernel exp(-u * sum_ab density_A density_B D).

    The limit of entropically regularized transport when the entropy term
    dominates; indefinite-prone on unnormalized sets since IDK(A, A) < 1
    whenever A has off-diagonal ground cost mass.
    """
    if len(a) == 0 or len(b) == 0:
        return 1.0
    cost = transport._cost_matrix(a, b, distance)
    return float(math.exp(-u * float(a.masses @ cost @ b.masses)))


def shift_correct(gram: GramMatrix, s: float | None = None,
                  tol: float = DEFAULT_TOL) -> tuple[GramMatrix, float]:
    """Eigenvalue shift G + s I; default s is the magnitude of the most negative eigenvalue.

    Returns the corrected matrix and the shift actually applied (0 for PSD
    input when unspecified).
    """
    if gram.kind != "kernel":
        raise ValueError("shift correction applies to kernel matrices")
    if s is None:
        report = diagnose(gram, tol)
        s = 0.0 if report.is_psd else -report.min_eig
    if s < 0:
        raise ValueError("shift must be non-negative")
    if s == 0.0:
        return gram, 0.0
    corrected = gram.values + s * np.eye(gram.size)
    return GramMatrix(corrected, gram.ids, kind="kernel",
                      provenance=f"shift(s={s:.6g}) o {gram.provenance}"), float(s)


def ksvm_basis(gram: GramMatrix | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvectors V and eigenvalues d of G, shared by every one-vs-all machine.

    For any label vector y, Y V are the eigenvectors of Y G Y with the same
    eigenvalues, so a single decomposition serves all classes.
    """
    g = gram.values if isinstance(gram, GramMatrix) else np.asarray(gram, dtype=float)
    d, v = np.linalg.eigh(0.5 * (g + g.T))
    return v, d


@dataclass(frozen=True)
class KsvmCorrection:
    """Flipped-spectrum matrix U |d| U^T of Y G Y plus the back-map basis (U, signs)."""

    corrected: np.ndarray
    eigenvectors: np.ndarray
    signs: np.ndarray
    eigenvalues: np.ndarray

    def map_coefficients(self, alpha: np.ndarray) -> np.ndarray:
        """Apply U sign(d) U^T to solver coefficients."""
        u = self.eigenvectors
        return u @ (self.signs * (u.T @ np.asarray(alpha, dtype=float)))


def ksvm_correct_from_basis(v: np.ndarray, d: np.ndarray, labels: np.ndarray) -> KsvmCorrection:
    """KSVM correction for one label vector, reusing the shared eigenbasis of G."""
    y = np.asarray(labels, dtype=float)
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be +1/-1")
    u = y[:, None] * v
    signs = np.sign(d)
    signs[signs == 0.0] = 1.0
    corrected = (u * np.abs(d)) @ u.T
    return KsvmCorrection(0.5 * (corrected + corrected.T), u, signs, d.copy())


def ksvm_correct(gram: GramMatrix | np.ndarray, labels: np.ndarray) -> KsvmCorrection:
    """Spectral flip of the label-conjugated kernel matrix Y G Y."""
    v, d = ksvm_basis(gram)
    return ksvm_correct_from_basis(v, d, labels)


@dataclass(frozen=True)
class FlowGramResult:
    """Outcome of the block flow-Gram assembly and PD-ization iteration."""

    flow_gram: np.ndarray            # block matrix of flow-weighted kernels H_i^j
    emi_gram: np.ndarray             # per-pair transport intersections (block sums)
    pdized: np.ndarray               # the PSD-ized matrix (per mode)
    iterations: int
    mode: str
    block_slices: tuple


def _disjoint_supports(sets: Sequence[WeightedPointSet]) -> None:
    seen: dict[bytes, int] = {}
    for k, s in enumerate(sets):
        for p in s.points:
            key = p.tobytes()
            if key in seen and seen[key] != k:
                raise ValueError("flow_gram_pdize requires pairwise-disjoint supports")
            seen[key] = k


def flow_gram_pdize(sets: Sequence[WeightedPointSet], kernel: Callable,
                    tol: float = DEFAULT_TOL, mode: str = "emi",
                    cap: int = 64) -> FlowGramResult:
    """Assemble the block flow-Gram for disjoint multisets and transform it PSD.

    For every pair (i, j) the maximum-cost maximum flow F with respect to the
    ground kernel is computed; the block (i, j) holds the Schur product
    F * K, whose total is the transport intersection of the pair.  If the
    requested matrix (the intersection Gram for ``mode="emi"``, the block
    matrix for ``mode="h"``) is not PSD at ``tol``, the definite-preserving
    transform is applied repeatedly until it is, up to ``cap`` iterations.

    Requires pairwise-disjoint supports and a ground kernel that strictly
    satisfies 2 K(x, y) < K(x, x) + K(y, y) on distinct points.
    """
    if mode not in ("emi", "h"):
        raise ValueError("mode must be 'emi' or 'h'")
    _disjoint_supports(sets)
    all_points = np.concatenate([s.points for s in sets], axis=0)
    k_all = ground_kernel_matrix(kernel, all_points)
    n_pts = all_points.shape[0]
    off = ~np.eye(n_pts, dtype=bool)
    diag = np.diag(k_all)
    if np.any((2.0 * k_all >= diag[:, None] + diag[None, :]) & off):
        raise ValueError(
            "ground kernel must strictly satisfy 2K(x,y) < K(x,x) + K(y,y) on distinct points"
        )
    sizes = [len(s) for s in sets]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    slices = tuple(slice(offsets[i], offsets[i + 1]) for i in range(len(sets)))
    n_sets = len(sets)
    h = np.zeros((n_pts, n_pts))
    emi_gram = np.zeros((n_sets, n_sets))
    for i in range(n_sets):
        for j in range(i, n_sets):
            kij = k_all[slices[i], slices[j]]
            flow = transport._min_cost_flow(sets[i].masses, sets[j].masses, -kij)
            block = flow * kij
            h[slices[i], slices[j]] = block
            if i != j:
                h[slices[j], slices[i]] = block.T
            emi_gram[i, j] = emi_gram[j, i] = block.sum()
    target = emi_gram if mode == "emi" else h
    current = target.copy()
    iterations = 0
    while iterations <= cap:
        report = diagnose(current, tol)
        if report.is_psd:
            return FlowGramResult(h, emi_gram, current, iterations, mode, slices)
        current = transform_pd_matrix(current)
        iterations += 1
    raise ValueError(f"flow-Gram not PSD after {cap} transform iterations")


def ground_kernel_matrix(kernel: Callable, points: np.ndarray) -> np.ndarray:
    """Symmetric kernel matrix of a scalar ground kernel over a point roster."""
    from .ground import pairwise_kernel

    k = pairwise_kernel(kernel, points, points)
    return 0.5 * (k + k.T)


# ---------------------------------------------------------------------------
# Randomized non-CND witness searches
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NonCndWitness:
    """A collection of equal-mass distributions whose transport Gram is not CND."""

    space: str                        # "circle" or "square_grid"
    supports: tuple                   # per distribution: list of points (angles or 2-d)
    masses: tuple
    centered_max_eig: float
    scale: float
    trial: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "space": self.space,
            "supports": [[[float(c) for c in np.atleast_1d(p)] for p in sup]
                         for sup in self.supports],
            "masses": [[float(v) for v in m] for m in self.masses],
            "centered_max_eig": float(self.centered_max_eig),
            "scale": float(self.scale),
            "trial": int(self.trial),
            "seed": int(self.seed),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NonCndWitness":
        return cls(
            space=d["space"],
            supports=tuple(tuple(tuple(p) for p in sup) for sup in d["supports"]),
            masses=tuple(tuple(m) for m in d["masses"]),
            centered_max_eig=float(d["centered_max_eig"]),
            scale=float(d["scale"]),
            trial=int(d["trial"]),
            seed=int(d["seed"]),
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path) -> "NonCndWitness":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _witness_sets(witness: NonCndWitness) -> list[WeightedPointSet]:
    return [WeightedPointSet(np.array(sup, dtype=float), np.array(m, dtype=float))
            for sup, m in zip(witness.supports, witness.masses)]


def _witness_gram(witness: NonCndWitness) -> np.ndarray:
    sets = _witness_sets(witness)
    n = len(sets)
    g = np.zeros((n, n))
    if witness.space == "circle":
        for i in range(n):
            for j in range(i + 1, n):
                g[i, j] = g[j, i] = transport.emd_circle(sets[i], sets[j])
    elif witness.space == "square_grid":
        from .ground import euclidean

        d = euclidean()
        for i in range(n):
            for j in range(i + 1, n):
                g[i, j] = g[j, i] = transport.emd(sets[i], sets[j], d).cost
    else:
        raise ValueError(f"unknown witness space {witness.space!r}")
    return g


def verify_witness(witness: NonCndWitness, tol_ratio: float = 1e-6) -> bool:
    """Recompute the witness Gram and check the centered spectrum violation."""
    g = _witness_gram(witness)
    report = diagnose(g, tol=tol_ratio)
    scale = max(report.max_abs_eig, 1e-300)
    return report.centered_max_eig > tol_ratio * scale


def _pair_heavy_masses(rng: np.random.Generator, size: int) -> np.ndarray:
    """Masses concentrated on two atoms with a small remainder spread out."""
    eps = rng.uniform(0.02, 0.2)
    w = np.full(size, eps / max(size - 2, 1))
    pair = rng.choice(size, 2, replace=False)
    w[pair] = (1.0 - eps) / 2.0
    return w / w.sum()


def find_circle_non_cnd_witness(trials: int = 2000, seed: int = 0, n_sets: int = 6,
                                tol_ratio: float = 1e-6) -> NonCndWitness | None:
    """Randomized search for circle-transport distributions violating CND-ness.

    Samples equal-mass distributions with 4 to 8 support points on a shared
    evenly spaced grid (violations concentrate on grids with antipodal
    structure; distributions with generic support test as CND at machine
    precision).  Returns the first witness whose centered Gram has a
    positive eigenvalue above ``tol_ratio`` times the spectral scale.
    """
    rng = np.random.default_rng(seed)
    two_pi = 2.0 * math.pi
    for trial in range(trials):
        grid_k = int(rng.choice([4, 6, 8]))
        offset = rng.uniform(0.0, two_pi)
        base = (np.arange(grid_k) * two_pi / grid_k + offset) % two_pi
        sets = []
        for _ in range(n_sets):
            size = int(rng.integers(4, min(grid_k, 8) + 1))
            idx = np.sort(rng.choice(grid_k, size, replace=False))
            w = _pair_heavy_masses(rng, size)
            sets.append(WeightedPointSet(base[idx].reshape(-1, 1), w))
        g = np.zeros((n_sets, n_sets))
        for i in range(n_sets):
            for j in range(i + 1, n_sets):
                g[i, j] = g[j, i] = transport.emd_circle(sets[i], sets[j])
        report = diagnose(g, tol=tol_ratio)
        scale = max(report.max_abs_eig, 1e-300)
        if report.centered_max_eig > tol_ratio * scale:
            return NonCndWitness(
                space="circle",
                supports=tuple(tuple(tuple(p) for p in s.points) for s in sets),
                masses=tuple(tuple(s.masses) for s in sets),
                centered_max_eig=report.centered_max_eig,
                scale=scale,
                trial=trial,
                seed=seed,
            )
    return None


def find_square_grid_non_cnd_witness(trials: int = 2000, seed: int = 0, n_sets: int = 6,
                                     tol_ratio: float = 1e-6) -> NonCndWitness | None:
    """Search for unit-square-grid transport distributions violating CND-ness.

    Distributions live on the four corners of the unit square with Euclidean
    ground distance.  Absence of a witness at this scale is a report, not an
    assertion of definiteness.
    """
    from .ground import euclidean

    rng = np.random.default_rng(seed)
    corners = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    dist = euclidean()
    for trial in range(trials):
        sets = []
        for _ in range(n_sets):
            mode = int(rng.integers(3))
            if mode == 0:
                w = rng.dirichlet(np.ones(4))
            else:
                w = _pair_heavy_masses(rng, 4)
            sets.append(WeightedPointSet(corners.copy(), w))
        g = np.zeros((n_sets, n_sets))
        for i in range(n_sets):
            for j in range(i + 1, n_sets):
                g[i, j] = g[j, i] = transport.emd(sets[i], sets[j], dist).cost
        report = diagnose(g, tol=tol_ratio)
        scale = max(report.max_abs_eig, 1e-300)
        if report.centered_max_eig > tol_ratio * scale:
            return NonCndWitness(
                space="square_grid",
                supports=tuple(tuple(tuple(p) for p in s.points) for s in sets),
                masses=tuple(tuple(s.masses) for s in sets),
                centered_max_eig=report.centered_max_eig,
                scale=scale,
                trial=trial,
                seed=seed,
            )
    return None
