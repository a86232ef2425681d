"""Dual soft-margin SVM over precomputed kernel matrices.

The solver is SMO-style pairwise coordinate ascent on the standard dual

    min  (1/2) a^T Q a - 1^T a    s.t.  0 <= a <= C,  y^T a = 0,

with maximal-KKT-violating-pair selection and stopping when the violation
gap falls below the tolerance.  Q is the label-conjugated kernel matrix
Y G Y in the plain and shift paths; the KSVM path substitutes the
flipped-spectrum matrix U |d| U^T and maps the resulting coefficients back
into the original indefinite space, so test kernel evaluations never need
modification.  On indefinite Q the same updates run with a bound step
wherever a pair subproblem has non-positive curvature, capped at a
best-effort iteration limit.

``KernelSVC`` wraps one-vs-all training behind the scikit-learn estimator
protocol so the kernels compose with the wider ecosystem.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .gram import (
    GramMatrix,
    KsvmCorrection,
    diagnose,
    ksvm_basis,
    ksvm_correct_from_basis,
    shift_correct,
)

__all__ = [
    "SvmModel",
    "train_binary",
    "predict",
    "train_one_vs_all",
    "predict_one_vs_all",
    "KernelSVC",
]

KKT_TOL = 1e-3
MAX_ITER = 200_000
_CURVATURE_FLOOR = 1e-12


@dataclass(frozen=True)
class SvmModel:
    """Trained binary machine over a precomputed kernel.

    ``alphas`` are the signed coefficients of the decision function
    ``f(x) = sum_i alphas_i K(s_i, x) + bias`` evaluated with the original
    (uncorrected) kernel; KSVM models are dense by construction.
    """

    alphas: np.ndarray
    bias: float
    train_ids: tuple[str, ...]
    class_name: str = ""
    correction: str = "none"
    shift: float = 0.0
    converged: bool = True
    iterations: int = 0

    def to_dict(self) -> dict:
        return {
            "alphas": [float(a) for a in self.alphas],
            "bias": float(self.bias),
            "train_ids": list(self.train_ids),
            "class_name": self.class_name,
            "correction": self.correction,
            "shift": float(self.shift),
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SvmModel":
        return cls(
            alphas=np.asarray(d["alphas"], dtype=float),
            bias=float(d["bias"]),
            train_ids=tuple(d["train_ids"]),
            class_name=d.get("class_name", ""),
            correction=d.get("correction", "none"),
            shift=float(d.get("shift", 0.0)),
            converged=bool(d.get("converged", True)),
            iterations=int(d.get("iterations", 0)),
        )


def _smo_solve(q: np.ndarray, y: np.ndarray, c: float, tol: float, max_iter: int,
               objective_trace: list | None = None):
    """Maximal-violating-pair SMO.

    The feasible pair direction is ``a_i += y_i t, a_j -= y_j t`` with t > 0,
    which preserves y'a; the violation values ``viol_k = -y_k grad_k`` double
    as per-point bias estimates, so the final bias falls out of the same
    quantities.
    """
    n = y.shape[0]
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of (1/2)a'Qa - 1'a at a = 0
    eps_box = 1e-12 * c
    it = 0
    converged = False
    while True:
        viol = -y * grad
        up_mask = np.where(y > 0, alpha < c - eps_box, alpha > eps_box)
        low_mask = np.where(y > 0, alpha > eps_box, alpha < c - eps_box)
        if not up_mask.any() or not low_mask.any():
            converged = True
            break
        i = int(np.argmax(np.where(up_mask, viol, -np.inf)))
        j = int(np.argmin(np.where(low_mask, viol, np.inf)))
        gap = viol[i] - viol[j]
        if gap <= tol:
            converged = True
            break
        if it >= max_iter:
            break
        curvature = q[i, i] + q[j, j] - 2.0 * y[i] * y[j] * q[i, j]
        if curvature <= _CURVATURE_FLOOR:
            curvature = _CURVATURE_FLOOR  # non-convex pair: step lands on the box
        t = gap / curvature
        t = min(t, c - alpha[i] if y[i] > 0 else alpha[i])
        t = min(t, alpha[j] if y[j] > 0 else c - alpha[j])
        if t <= 0.0:
            break
        alpha[i] += y[i] * t
        alpha[j] -= y[j] * t
        grad += (y[i] * t) * q[:, i] - (y[j] * t) * q[:, j]
        it += 1
        if objective_trace is not None:
            objective_trace.append(0.5 * float(alpha @ grad) - 0.5 * float(alpha.sum()))
    # bias: viol_k equals the per-point bias estimate y_k - score_k
    viol = -y * grad
    free = (alpha > eps_box) & (alpha < c - eps_box)
    if free.any():
        bias = float(viol[free].mean())
    else:
        up_mask = np.where(y > 0, alpha < c - eps_box, alpha > eps_box)
        low_mask = np.where(y > 0, alpha > eps_box, alpha < c - eps_box)
        hi = float(np.max(viol[up_mask])) if up_mask.any() else 0.0
        lo = float(np.min(viol[low_mask])) if low_mask.any() else 0.0
        bias = 0.5 * (hi + lo)
    return alpha, bias, it, converged


def _as_matrix(gram) -> tuple[np.ndarray, tuple[str, ...]]:
    if isinstance(gram, GramMatrix):
        return gram.values, gram.ids
    g = np.asarray(gram, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError("expected a square kernel matrix")
    return g, tuple(str(i) for i in range(g.shape[0]))


def train_binary(gram, labels: Sequence[float], c: float = 1.0,
                 correction: str = "none", tol: float = KKT_TOL,
                 max_iter: int = MAX_ITER, class_name: str = "",
                 basis: tuple[np.ndarray, np.ndarray] | None = None,
                 objective_trace: list | None = None) -> SvmModel:
    """Train one binary machine on a precomputed kernel matrix.

    Parameters
    ----------
    gram : GramMatrix or ndarray
        Symmetric kernel matrix over the training items.
    labels : sequence of +1/-1
    correction : "none", "shift", or "ksvm"
        "none" runs the solver directly on the (possibly indefinite)
        conjugated matrix, best effort under the iteration cap; "shift"
        trains on G + sI with s removing the most negative eigenvalue;
        "ksvm" trains on the flipped spectrum of Y G Y and maps the
        coefficients back.
    basis : (V, d), optional
        Shared eigendecomposition of G for KSVM one-vs-all reuse.
    """
    g, ids = _as_matrix(gram)
    y = np.asarray(labels, dtype=float).ravel()
    if y.shape[0] != g.shape[0]:
        raise ValueError("labels length does not match kernel size")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be +1/-1")
    if not np.all(np.isfinite(g)):
        raise ValueError("kernel matrix has non-finite entries")
    if c <= 0:
        raise ValueError("C must be positive")

    shift = 0.0
    if correction == "none":
        q = (y[:, None] * g) * y[None, :]
        alpha, bias, iters, converged = _smo_solve(q, y, c, tol, max_iter, objective_trace)
        gamma = y * alpha
        if not converged:
            warnings.warn(
                "indefinite-kernel training hit the iteration cap; returning the best iterate",
                RuntimeWarning,
            )
    elif correction == "shift":
        gm = gram if isinstance(gram, GramMatrix) else GramMatrix(g, ids)
        corrected, shift = shift_correct(gm)
        q = (y[:, None] * corrected.values) * y[None, :]
        alpha, bias, iters, converged = _smo_solve(q, y, c, tol, max_iter, objective_trace)
        gamma = y * alpha
    elif correction == "ksvm":
        if basis is None:
            basis = ksvm_basis(g)
        corr = ksvm_correct_from_basis(basis[0], basis[1], y)
        alpha, bias, iters, converged = _smo_solve(corr.corrected, y, c, tol, max_iter,
                                                   objective_trace)
        gamma = y * corr.map_coefficients(alpha)
    else:
        raise ValueError(f"unknown correction mode {correction!r}")
    return SvmModel(
        alphas=gamma, bias=bias, train_ids=ids, class_name=class_name,
        correction=correction, shift=shift, converged=converged, iterations=iters,
    )


def predict(model: SvmModel, kernel_row: np.ndarray) -> tuple[float, int]:
    """Decision value and label for one query given its kernel evaluations.

    ``kernel_row[i] = K(s_i, x)`` aligned with ``model.train_ids``.  Ties
    (score exactly 0) resolve to +1.
    """
    row = np.asarray(kernel_row, dtype=float).ravel()
    if row.shape[0] != model.alphas.shape[0]:
        raise ValueError("kernel row length does not match the training set")
    score = float(model.alphas @ row + model.bias)
    return score, (1 if score >= 0.0 else -1)


def train_one_vs_all(gram, class_labels: Sequence[str], c: float = 1.0,
                     correction: str = "none", tol: float = KKT_TOL,
                     max_iter: int = MAX_ITER) -> list[SvmModel]:
    """One binary machine per class (+1 = class, -1 = rest), sorted by class name.

    In KSVM mode the eigendecomposition of G is computed once and re-signed
    per class.
    """
    g, ids = _as_matrix(gram)
    names = np.asarray([str(c_) for c_ in class_labels])
    if names.shape[0] != g.shape[0]:
        raise ValueError("class labels length does not match kernel size")
    classes = sorted(set(names.tolist()))
    if len(classes) < 2:
        raise ValueError("one-vs-all training needs at least two classes")
    basis = ksvm_basis(g) if correction == "ksvm" else None
    models = []
    for cls in classes:
        y = np.where(names == cls, 1.0, -1.0)
        models.append(train_binary(gram, y, c=c, correction=correction, tol=tol,
                                   max_iter=max_iter, class_name=cls, basis=basis))
    return models


def predict_one_vs_all(models: Sequence[SvmModel], kernel_rows: np.ndarray):
    """Argmax-of-scores multiclass prediction.

    ``kernel_rows`` has one row per query, aligned with the shared training
    set.  Ties go to the lexicographically smallest class name (models are
    name-sorted and argmax keeps the first maximum).
    """
    rows = np.atleast_2d(np.asarray(kernel_rows, dtype=float))
    scores = np.stack([rows @ m.alphas + m.bias for m in models], axis=1)
    winners = np.argmax(scores, axis=1)
    labels = [models[w].class_name for w in winners]
    return labels, scores


class KernelSVC(BaseEstimator, ClassifierMixin):
    """scikit-learn style one-vs-all SVM over a precomputed kernel.

    ``fit`` takes the square training kernel matrix; ``predict`` and
    ``decision_function`` take rows of kernel evaluations against the
    training items, in training order.

    Parameters
    ----------
    C : float
        Box constraint of the dual.
    correction : "none" | "shift" | "ksvm"
        Indefinite-kernel handling applied to the training matrix.
    tol : float
        KKT violation tolerance of the solver.
    """

    def __init__(self, C: float = 1.0, correction: str = "none",
                 tol: float = KKT_TOL, max_iter: int = MAX_ITER):
        self.C = C
        self.correction = correction
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, K, y):
        k = np.asarray(K, dtype=float)
        if k.ndim != 2 or k.shape[0] != k.shape[1]:
            raise ValueError("fit expects the square training kernel matrix")
        labels = np.asarray(y)
        if labels.shape[0] != k.shape[0]:
            raise ValueError("label count does not match kernel size")
        self.models_ = train_one_vs_all(k, [str(v) for v in labels], c=self.C,
                                        correction=self.correction, tol=self.tol,
                                        max_iter=self.max_iter)
        self.classes_ = np.array([m.class_name for m in self.models_])
        self.n_train_ = k.shape[0]
        return self

    def decision_function(self, K):
        self._check_fitted()
        rows = np.atleast_2d(np.asarray(K, dtype=float))
        if rows.shape[1] != self.n_train_:
            raise ValueError("kernel rows do not align with the training set")
        _, scores = predict_one_vs_all(self.models_, rows)
        return scores

    def predict(self, K):
        self._check_fitted()
        rows = np.atleast_2d(np.asarray(K, dtype=float))
        if rows.shape[1] != self.n_train_:
            raise ValueError("kernel rows do not align with the training set")
        labels, _ = predict_one_vs_all(self.models_, rows)
        return np.array(labels)

    def _check_fitted(self):
        if not hasattr(self, "models_"):
            raise RuntimeError("this KernelSVC instance is not fitted yet")
