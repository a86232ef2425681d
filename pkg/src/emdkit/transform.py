"""Definiteness-preserving kernel and distance transformations.

The central transformation normalizes a kernel by an anchored denominator:

    T_K(x, y) = K(x, y) / (K(x, x) + K(y, y) - K(x, y)),   T_K(x, x) = 1,

with T_K defined as 1 when K(x, x) = K(y, y) = 0.  T preserves (strict)
positive definiteness, maps the multiset intersection kernel to the Jaccard
index, and can be nested; the n-fold nesting has the closed form

    T^n_K(x, y) = K(x, y) / (2^(n-1) [K(x,x) + K(y,y)] - (2^n - 1) K(x, y)),

whose n = 0 case is the F-measure style normalization 2K / (Kxx + Kyy).
Iterated transforms of any admissible symmetric kernel on a finite roster
eventually become positive definite (``pd_ization_order`` finds the first
such order).

The complementary distance-side transformation

    N_{D,p}(x, y) = [2 D(x,y) - D(x,x) - D(y,y)]
                    / [D(x,p) + D(y,p) + D(x,y) - sum_{z in {x,y,p}} D(z,z)]

generalizes the biotope (Jaccard/Steinhaus) transform, preserves conditional
negative definiteness, and satisfies T_{K_p} + N_{D,p} = 1 for the anchored
kernel K_p of the same distance.

All transformations come in two forms: pointwise (callables in, callables
out) and matrixwise (square Gram arrays in and out, diagonal included).
"""

from __future__ import annotations

from typing import Callable

import numpy as np

__all__ = [
    "transform_pd",
    "transform_pd_nested",
    "transform_pd_matrix",
    "transform_pd_nested_matrix",
    "transform_pd_nested_cross",
    "pd_ization_order",
    "biotope_transform",
    "biotope_transform_matrix",
]

_ZERO_DIAG_RTOL = 1e-12  # both-diagonals-zero convention applies below this


def _tanimoto_value(kxy: float, kxx: float, kyy: float, n: int = 1) -> float:
    scale = max(abs(kxy), abs(kxx), abs(kyy), 1.0)
    if abs(kxx) <= _ZERO_DIAG_RTOL * scale and abs(kyy) <= _ZERO_DIAG_RTOL * scale:
        return 1.0 if n >= 1 else 0.0
    denom = 2.0 ** (n - 1) * (kxx + kyy) - (2.0 ** n - 1.0) * kxy
    if denom == 0.0:
        raise ZeroDivisionError(
            "transformation denominator vanished for a kernel with non-zero diagonal"
        )
    return kxy / denom


def transform_pd(kernel: Callable) -> Callable:
    """Pointwise definite-preserving transformation of a symmetric kernel.

    Returns a callable ``T(x, y)``; positive definite whenever ``kernel`` is
    (tested via Gram spectra, not enforced).  The range is [0, 1] for
    non-negative positive definite kernels and [-1/3, 1] in general.
    """

    def transformed(x, y):
        return _tanimoto_value(kernel(x, y), kernel(x, x), kernel(y, y))

    return transformed


def transform_pd_nested(kernel: Callable, n: int) -> Callable:
    """The n-fold nested transformation, via the closed form.

    ``n = 1`` is :func:`transform_pd`; ``n = 0`` is the F-measure style
    normalization ``2K / (Kxx + Kyy)``.  Agrees with n-fold iteration of the
    single transform.
    """
    if n < 0:
        raise ValueError("nesting order must be >= 0")

    def transformed(x, y):
        return _tanimoto_value(kernel(x, y), kernel(x, x), kernel(y, y), n=n)

    return transformed


def _check_square(gram: np.ndarray) -> np.ndarray:
    g = np.asarray(gram, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError("expected a square Gram matrix")
    return g


def transform_pd_nested_matrix(gram: np.ndarray, n: int) -> np.ndarray:
    """Matrixwise nested transformation; the diagonal must be present."""
    if n < 0:
        raise ValueError("nesting order must be >= 0")
    g = _check_square(gram)
    if g.size == 0:
        return g.copy()
    d = np.diag(g)
    scale = max(float(np.abs(g).max()), 1.0)
    dsum = d[:, None] + d[None, :]
    denom = 2.0 ** (n - 1) * dsum - (2.0 ** n - 1.0) * g
    both_zero = (np.abs(d)[:, None] <= _ZERO_DIAG_RTOL * scale) & (
        np.abs(d)[None, :] <= _ZERO_DIAG_RTOL * scale
    )
    if np.any((denom == 0.0) & ~both_zero):
        raise ZeroDivisionError(
            "transformation denominator vanished for a kernel with non-zero diagonal"
        )
    out = np.empty_like(g)
    ok = ~both_zero
    out[ok] = g[ok] / denom[ok]
    out[both_zero] = 1.0 if n >= 1 else 0.0
    return out


def transform_pd_matrix(gram: np.ndarray) -> np.ndarray:
    """Matrixwise single transformation (nesting order 1)."""
    return transform_pd_nested_matrix(gram, 1)


def transform_pd_nested_cross(block: np.ndarray, self_rows: np.ndarray,
                              self_cols: np.ndarray, n: int = 1) -> np.ndarray:
    """Nested transformation of a rectangular kernel block.

    ``block[i, j] = K(x_i, y_j)`` with the self-evaluations ``K(x_i, x_i)``
    and ``K(y_j, y_j)`` supplied explicitly; used to transform test-vs-train
    kernel rows consistently with the training Gram.
    """
    if n < 0:
        raise ValueError("nesting order must be >= 0")
    k = np.asarray(block, dtype=float)
    sr = np.asarray(self_rows, dtype=float).ravel()
    sc = np.asarray(self_cols, dtype=float).ravel()
    if k.shape != (sr.shape[0], sc.shape[0]):
        raise ValueError("self-evaluation vectors do not match the block shape")
    scale = max(float(np.abs(k).max(initial=0.0)), float(np.abs(sr).max(initial=0.0)),
                float(np.abs(sc).max(initial=0.0)), 1.0)
    dsum = sr[:, None] + sc[None, :]
    denom = 2.0 ** (n - 1) * dsum - (2.0 ** n - 1.0) * k
    both_zero = (np.abs(sr)[:, None] <= _ZERO_DIAG_RTOL * scale) & (
        np.abs(sc)[None, :] <= _ZERO_DIAG_RTOL * scale
    )
    if np.any((denom == 0.0) & ~both_zero):
        raise ZeroDivisionError(
            "transformation denominator vanished for a kernel with non-zero diagonal"
        )
    out = np.empty_like(k)
    ok = ~both_zero
    out[ok] = k[ok] / denom[ok]
    out[both_zero] = 1.0 if n >= 1 else 0.0
    return out


def pd_ization_order(gram: np.ndarray, tol: float = 1e-8, cap: int = 64) -> int:
    """Smallest nesting order at which the transformed Gram is PSD.

    Requires the admissibility condition 2 K(x, y) != K(x, x) + K(y, y) for
    every pair of distinct roster elements (exact comparison); under it a
    finite order always exists.

    Returns
    -------
    int
        The smallest n (0 meaning the input itself) with
        ``min eig >= -tol * max |eig|`` of the order-n transform.

    Raises
    ------
    ValueError
        If the admissibility condition fails or ``cap`` is exceeded.
    """
    g = _check_square(gram)
    n_el = g.shape[0]
    d = np.diag(g)
    dsum = d[:, None] + d[None, :]
    off = ~np.eye(n_el, dtype=bool)
    if np.any((2.0 * g == dsum) & off):
        raise ValueError(
            "admissibility violated: 2 K(x, y) = K(x, x) + K(y, y) for distinct elements"
        )
    for n in range(cap + 1):
        m = g if n == 0 else transform_pd_nested_matrix(g, n)
        eig = np.linalg.eigvalsh(m)
        max_abs = max(float(np.abs(eig).max()), 1e-300)
        if eig[0] >= -tol * max_abs:
            return n
    raise ValueError(f"no PSD transform order found up to cap {cap}")


def biotope_transform(distance: Callable, anchor) -> Callable:
    """Pointwise biotope transform of a symmetric distance, anchored at ``anchor``.

    Conditionally negative definite whenever ``distance`` is (tested, not
    enforced); range within [0, 4/3]; complementary to the transformed
    anchored kernel: T_{K_p} + N_{D,p} = 1.
    """

    def transformed(x, y):
        dxy = distance(x, y)
        dxx = distance(x, x)
        dyy = distance(y, y)
        dxp = distance(x, anchor)
        dyp = distance(y, anchor)
        dpp = distance(anchor, anchor)
        num = 2.0 * dxy - dxx - dyy
        den = dxp + dyp + dxy - dxx - dyy - dpp
        if den == 0.0:
            if num == 0.0:
                return 0.0  # x = y = anchor
            raise ZeroDivisionError("degenerate anchor for the biotope transform")
        return num / den

    return transformed


def biotope_transform_matrix(distance: np.ndarray, anchor_distances: np.ndarray,
                             anchor_self: float = 0.0) -> np.ndarray:
    """Matrixwise biotope transform.

    Parameters
    ----------
    distance : ndarray, shape (n, n)
        Pairwise distance matrix D (diagonal included).
    anchor_distances : ndarray, shape (n,)
        D(x_i, p) for the anchor element p.
    anchor_self : float
        D(p, p); zero for proper distances and for the empty-set anchor.
    """
    d = _check_square(distance)
    ap = np.asarray(anchor_distances, dtype=float).ravel()
    if ap.shape[0] != d.shape[0]:
        raise ValueError("anchor distance vector length does not match matrix")
    diag = np.diag(d)
    num = 2.0 * d - diag[:, None] - diag[None, :]
    den = ap[:, None] + ap[None, :] + d - diag[:, None] - diag[None, :] - anchor_self
    out = np.zeros_like(d)
    zero = den == 0.0
    if np.any(zero & (num != 0.0)):
        raise ZeroDivisionError("degenerate anchor for the biotope transform")
    ok = ~zero
    out[ok] = num[ok] / den[ok]
    return out
