"""Dataset ingestion, synthetic generation, evaluation protocols, experiments.

Reproduces the experimental machinery at desk scale: pairwise kernel
pipelines (transport distance -> generalized RBF -> optional transform ->
correction -> one-vs-all SVM), k-fold / leave-one-group-out / repeated
fixed-split protocols, the lexicographic concatenation baseline for
fixed-length-vector kernels, and ingestion of the motion-capture posture
CSV with its pruning rules.

Every sampling decision is driven by an explicit seed; repeated runs of the
same spec produce identical selections and reports (timings aside).
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from . import ground as ground_mod
from . import transport
from .datasets import Dataset
from .gram import GramMatrix, RbfParams, assemble_gram, diagnose
from .ground import GroundDistance, SinkSpec
from .multiset import WeightedPointSet
from .svm import predict_one_vs_all, train_one_vs_all
from .transform import transform_pd_nested_cross, transform_pd_nested_matrix

__all__ = [
    "ExperimentSpec",
    "generate_synthetic",
    "generate_corner_stand_in",
    "run_experiment",
    "baseline_concat_vectors",
    "ingest_posture",
    "sample_balanced",
    "kfold_indices",
    "leave_one_group_out_indices",
    "fixed_split_indices",
    "variant_evaluator",
    "pairwise_variant_matrix",
    "cross_variant_matrix",
    "FittedKernelPipeline",
    "fit_kernel_pipeline",
    "TransportKernelTransformer",
]

POSTURE_PRUNE_RADIUS_MM = 200.0
POSTURE_MIN_MARKERS = 3

VARIANTS = ("emd", "emd-rubner", "emdhat-alpha", "emdhat-sink", "emjd", "emi", "idk")


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------

def generate_synthetic(classes: int, sets_per_class: int,
                       cardinality_range: tuple[int, int] = (3, 12),
                       dim: int = 3, separation: float = 5.0,
                       seed: int = 0) -> Dataset:
    """Gaussian point-cloud classes with class-dependent cardinality.

    Classes come in pairs sharing a spatial template (cloud centers are
    ``separation`` standard deviations apart between pairs); within a pair
    the two classes draw their cardinalities from the lower and upper half
    of ``cardinality_range``, so total mass carries class signal and
    mass-aware distances have something to gain over normalized transport.
    The template pool is several times larger than the maximum cardinality,
    which keeps the normalized shape of an instance uninformative about its
    cardinality.  Masses are unit per point.
    """
    if separation <= 0:
        raise ValueError("separation must be positive")
    lo, hi = cardinality_range
    if not (1 <= lo <= hi):
        raise ValueError("invalid cardinality range")
    rng = np.random.default_rng(seed)
    mid = (lo + hi) // 2
    pool = 5 * hi
    items = []
    for cls in range(classes):
        center_idx = cls // 2
        center = np.zeros(dim)
        center[center_idx % dim] = separation * (1 + center_idx // dim)
        template = center + rng.normal(size=(pool, dim))
        if cls % 2 == 0:
            card_lo, card_hi = lo, mid
        else:
            card_lo, card_hi = min(mid + 1, hi), hi
        for k in range(sets_per_class):
            n = int(rng.integers(card_lo, card_hi + 1))
            chosen = rng.choice(pool, size=n, replace=False)
            points = template[chosen] + 0.25 * rng.normal(size=(n, dim))
            items.append(WeightedPointSet(
                points, None, id=f"c{cls}s{k}", class_label=f"class{cls}",
            ))
    return Dataset(tuple(items), dim)


# ---------------------------------------------------------------------------
# Evaluation protocols
# ---------------------------------------------------------------------------

def generate_corner_stand_in(classes: int, sets_per_class: int, seed: int = 0) -> Dataset:
    """Planar corner-count stand-in: 2-d point sets in the unit square.

    Each class owns a fixed layout of corner anchors and a sub-range of the
    5-to-15 point count budget; instances jitter around the anchors.  A
    stand-in for keypoint-set data, nothing more.
    """
    rng = np.random.default_rng(seed)
    items = []
    for cls in range(classes):
        n_anchors = 3 + cls % 4
        anchors = rng.uniform(0.1, 0.9, size=(n_anchors, 2))
        lo = 5 + (cls * 7) % 8
        hi = min(lo + 3, 15)
        for k in range(sets_per_class):
            n = int(rng.integers(lo, hi + 1))
            picks = anchors[rng.integers(0, n_anchors, size=n)]
            pts = np.clip(picks + rng.normal(scale=0.03, size=(n, 2)), 0.0, 1.0)
            items.append(WeightedPointSet(
                pts, None, id=f"c{cls}s{k}", class_label=f"class{cls}",
            ))
    return Dataset(tuple(items), 2)


def kfold_indices(n: int, k: int, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """Shuffled k-fold split: folds are disjoint, cover 0..n-1, sizes differ by <= 1."""
    if not 2 <= k <= n:
        raise ValueError("need 2 <= k <= n folds")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    folds = np.array_split(order, k)
    out = []
    for i in range(k):
        test = np.sort(folds[i])
        train = np.sort(np.concatenate([folds[j] for j in range(k) if j != i]))
        out.append((train, test))
    return out


def leave_one_group_out_indices(groups: Sequence[str]) -> list[tuple[np.ndarray, np.ndarray]]:
    """One fold per distinct group label; the group is the test set."""
    arr = np.asarray([str(g) for g in groups])
    out = []
    for g in sorted(set(arr.tolist())):
        test = np.where(arr == g)[0]
        train = np.where(arr != g)[0]
        out.append((train, test))
    return out


def fixed_split_indices(labels: Sequence[str], train_per_class: int, test_per_class: int,
                        repeats: int, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """Repeated disjoint class-balanced train/test draws."""
    arr = np.asarray([str(v) for v in labels])
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(repeats):
        train, test = [], []
        for cls in sorted(set(arr.tolist())):
            idx = np.where(arr == cls)[0]
            if len(idx) < train_per_class + test_per_class:
                raise ValueError(f"class {cls!r} has only {len(idx)} examples")
            perm = rng.permutation(idx)
            train.extend(perm[:train_per_class])
            test.extend(perm[train_per_class:train_per_class + test_per_class])
        out.append((np.sort(np.array(train)), np.sort(np.array(test))))
    return out


# ---------------------------------------------------------------------------
# Pairwise pipeline matrices
# ---------------------------------------------------------------------------

def _make_ground(spec: dict) -> GroundDistance:
    kind = spec.get("ground", "euclidean")
    threshold = spec.get("threshold")
    if kind == "euclidean":
        d = ground_mod.euclidean()
    elif kind == "sqeuclidean":
        d = ground_mod.squared_euclidean()
    elif kind == "discrete":
        d = ground_mod.discrete()
    elif kind == "circle":
        d = ground_mod.circle_geodesic()
    elif kind.startswith("file:"):
        _, matrix = ground_mod.load_matrix_csv(kind[5:])
        d = ground_mod.precomputed(matrix)
    else:
        raise ValueError(f"unknown ground distance {kind!r}")
    if threshold is not None:
        d = d.thresholded(float(threshold))
    return d


def _make_sink(spec: dict, distance: GroundDistance) -> SinkSpec:
    if "sink_flat" in spec and spec["sink_flat"] is not None:
        return SinkSpec.flat_rate(float(spec["sink_flat"]))
    if "sink_point" in spec and spec["sink_point"] is not None:
        return SinkSpec.at_point(np.asarray(spec["sink_point"], dtype=float))
    if distance.threshold is not None:
        # sink beyond the threshold for every point: flat rate = threshold
        return SinkSpec.flat_rate(distance.threshold)
    raise ValueError("sink variant needs sink_flat, sink_point, or a thresholded ground distance")


def variant_evaluator(pipeline: dict):
    """Symmetric pair evaluator and matrix kind for a pipeline's transport variant.

    Distance variants (``emd``, ``emd-rubner``, ``emdhat-alpha``,
    ``emdhat-sink``, ``emjd``) yield distance values; ``emi`` and ``idk``
    yield kernel values directly.
    """
    variant = pipeline.get("variant", "emdhat-sink")
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    distance = _make_ground(pipeline)

    if variant == "emd":
        return (lambda a, b: transport.emd(a, b, distance).cost), "distance"
    if variant == "emd-rubner":
        return (lambda a, b: (transport.emd_rubner(a, b, distance)
                              if min(a.total_mass, b.total_mass) > 0 else 0.0)), "distance"
    if variant == "emdhat-alpha":
        alpha = float(pipeline.get("alpha", 1.0))
        return (lambda a, b: transport.emdhat_alpha(a, b, distance, alpha)), "distance"
    if variant == "emdhat-sink":
        sink = _make_sink(pipeline, distance)
        return (lambda a, b: transport.emdhat_p(a, b, distance, sink)), "distance"
    if variant == "emjd":
        sink = _make_sink(pipeline, distance)

        def emjd_value(a, b):
            # biotope transform of the sink distance anchored at the empty set
            hat_ab = transport.emdhat_p(a, b, distance, sink)
            hat_a = transport.emdhat_p(a, a.empty_like(), distance, sink)
            hat_b = transport.emdhat_p(b, b.empty_like(), distance, sink)
            den = hat_a + hat_b + hat_ab
            if den == 0.0:
                return 0.0
            return 2.0 * hat_ab / den

        return emjd_value, "distance"
    if variant == "emi":
        sink = _make_sink(pipeline, distance)
        return (lambda a, b: transport.emi(a, b, distance, sink)), "kernel"
    # idk
    from .gram import idk

    u = float(pipeline.get("u", 1.0))
    return (lambda a, b: idk(a, b, distance, u)), "kernel"


def pairwise_variant_matrix(dataset: Dataset, pipeline: dict,
                            n_jobs: int | None = None) -> GramMatrix:
    """Pairwise matrix of the requested transport variant over a dataset."""
    fn, kind = variant_evaluator(pipeline)
    provenance = json.dumps({k: pipeline.get(k) for k in sorted(pipeline)}, default=str)
    variant = pipeline.get("variant", "emdhat-sink")
    return assemble_gram(list(dataset), fn, kind=kind,
                         provenance=f"{variant} {provenance}", n_jobs=n_jobs)


def cross_variant_matrix(items_a: Sequence[WeightedPointSet],
                         items_b: Sequence[WeightedPointSet],
                         pipeline: dict) -> np.ndarray:
    """Variant values between two item collections, shape (len(a), len(b))."""
    fn, _ = variant_evaluator(pipeline)
    out = np.empty((len(items_a), len(items_b)))
    for i, a in enumerate(items_a):
        for j, b in enumerate(items_b):
            out[i, j] = fn(a, b)
    return out


@dataclass(frozen=True)
class FittedKernelPipeline:
    """A kernel pipeline frozen on a training set.

    Resolves the RBF scale on the training pairs once; test kernel rows are
    then computed against the stored training items with the same scale and
    transform stage, so test evaluations never depend on test statistics.
    """

    pipeline: dict
    train: Dataset
    kind: str
    u: float | None
    train_kernel: np.ndarray
    train_self: np.ndarray

    def kernel_rows(self, items: Sequence[WeightedPointSet]) -> np.ndarray:
        """Kernel evaluations of each query against the training items."""
        fn, _ = variant_evaluator(self.pipeline)
        raw = cross_variant_matrix(items, list(self.train), self.pipeline)
        if self.kind == "distance":
            k = np.exp(-self.u * raw)
            self_rows = np.ones(len(items))
        else:
            k = raw
            self_rows = np.array([fn(s, s) for s in items])
        xf = self.pipeline.get("transform")
        if xf:
            k = transform_pd_nested_cross(k, self_rows, self.train_self, _transform_order(xf))
        return k


def _transform_order(stage: str) -> int:
    if stage == "tanimoto":
        return 1
    if stage.startswith("nested:"):
        return int(stage.split(":", 1)[1])
    raise ValueError(f"unknown transform stage {stage!r}")


def fit_kernel_pipeline(train: Dataset, pipeline: dict,
                        n_jobs: int | None = None) -> FittedKernelPipeline:
    """Compute the training kernel matrix and freeze the pipeline's scales."""
    full = pairwise_variant_matrix(train, pipeline, n_jobs=n_jobs)
    u = None
    if full.kind == "distance":
        rbf = pipeline.get("rbf", "auto")
        u = RbfParams(auto=True).resolve(full.values) if rbf == "auto" else float(rbf)
        k = np.exp(-u * full.values)
    else:
        k = full.values.copy()
    self_vals = np.diag(k).copy()
    xf = pipeline.get("transform")
    if xf:
        k = transform_pd_nested_matrix(k, _transform_order(xf))
    return FittedKernelPipeline(pipeline=dict(pipeline), train=train, kind=full.kind,
                                u=u, train_kernel=k, train_self=self_vals)


class TransportKernelTransformer(BaseEstimator, TransformerMixin):
    """Point sets in, kernel evaluations against the fitted training set out.

    Composes with scikit-learn pipelines: ``fit`` on the training sets gives
    ``transform(train) == K_train`` (square) and ``transform(test)`` the
    test-vs-train rows that :class:`emdkit.svm.KernelSVC` consumes.

    Parameters mirror the experiment pipeline dictionary: ``variant`` and
    ``ground`` select the transport distance or kernel, ``threshold`` /
    ``alpha`` / ``sink_flat`` / ``sink_point`` / ``u`` parameterize it,
    ``rbf`` is ``"auto"`` or a fixed positive scale (distance variants
    only), and ``transform_stage`` is ``None``, ``"tanimoto"`` or
    ``"nested:N"``.
    """

    def __init__(self, variant: str = "emdhat-sink", ground: str = "euclidean",
                 threshold: float | None = None, alpha: float | None = None,
                 sink_flat: float | None = None, sink_point=None,
                 u: float | None = None, rbf="auto",
                 transform_stage: str | None = None, n_jobs: int | None = None):
        self.variant = variant
        self.ground = ground
        self.threshold = threshold
        self.alpha = alpha
        self.sink_flat = sink_flat
        self.sink_point = sink_point
        self.u = u
        self.rbf = rbf
        self.transform_stage = transform_stage
        self.n_jobs = n_jobs

    def _pipeline(self) -> dict:
        pipeline = {"variant": self.variant, "ground": self.ground, "rbf": self.rbf}
        for key in ("threshold", "alpha", "sink_flat", "sink_point", "u"):
            value = getattr(self, key)
            if value is not None:
                pipeline[key] = value
        if self.transform_stage:
            pipeline["transform"] = self.transform_stage
        return pipeline

    def fit(self, X, y=None):
        items = tuple(X)
        if not items:
            raise ValueError("fit needs at least one point set")
        self.fitted_ = fit_kernel_pipeline(Dataset.from_items(items), self._pipeline(),
                                           n_jobs=self.n_jobs)
        return self

    def transform(self, X):
        if not hasattr(self, "fitted_"):
            raise RuntimeError("this transformer is not fitted yet")
        items = list(X)
        if items and all(a is b for a, b in zip(items, self.fitted_.train.items)) \
                and len(items) == len(self.fitted_.train):
            return self.fitted_.train_kernel
        return self.fitted_.kernel_rows(items)


# ---------------------------------------------------------------------------
# Experiment orchestration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentSpec:
    """Fully seeded description of one classification experiment.

    ``pipeline`` holds the ground distance kind, threshold, variant and any
    variant parameters plus the optional ``transform`` (``tanimoto`` or
    ``nested:N``) and ``rbf`` stages; ``protocol`` is one of
    ``{"kind": "kfold", "k": int, "seed": int}``,
    ``{"kind": "leave_one_group_out"}``, or
    ``{"kind": "fixed_split", "train_per_class": int, "test_per_class": int,
    "repeats": int, "seed": int}``.
    """

    pipeline: dict
    protocol: dict
    correction: str = "none"
    C: float = 1.0
    dataset_path: str | None = None

    def to_dict(self) -> dict:
        return {
            "pipeline": self.pipeline,
            "protocol": self.protocol,
            "correction": self.correction,
            "C": self.C,
            "dataset_path": self.dataset_path,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        return cls(
            pipeline=dict(d["pipeline"]),
            protocol=dict(d["protocol"]),
            correction=d.get("correction", "none"),
            C=float(d.get("C", 1.0)),
            dataset_path=d.get("dataset_path"),
        )

    def hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, default=str)
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _protocol_folds(spec: ExperimentSpec, dataset: Dataset):
    proto = spec.protocol
    kind = proto.get("kind", "kfold")
    if kind == "kfold":
        return kfold_indices(len(dataset), int(proto.get("k", 5)), int(proto.get("seed", 0)))
    if kind == "leave_one_group_out":
        groups = dataset.groups
        if any(g is None for g in groups):
            raise ValueError("leave-one-group-out requires group labels on every item")
        return leave_one_group_out_indices(groups)
    if kind == "fixed_split":
        return fixed_split_indices(
            dataset.labels, int(proto["train_per_class"]), int(proto["test_per_class"]),
            int(proto.get("repeats", 5)), int(proto.get("seed", 0)))
    raise ValueError(f"unknown protocol {kind!r}")


def _fold_kernel(full: GramMatrix, pipeline: dict, train: np.ndarray, test: np.ndarray):
    """Training kernel block and test-vs-train rows for one fold."""
    values = full.values
    if full.kind == "distance":
        u = RbfParams(auto=True).resolve(values, train) if pipeline.get("rbf", "auto") == "auto" \
            else float(pipeline["rbf"])
        k_all = np.exp(-u * values)
    else:
        k_all = values
    xf = pipeline.get("transform")
    if xf:
        k_all = transform_pd_nested_matrix(k_all, _transform_order(xf))
    k_train = k_all[np.ix_(train, train)]
    k_test = k_all[np.ix_(test, train)]
    return k_train, k_test


def _confusion(actual: Sequence[str], predicted: Sequence[str], classes: list[str]) -> dict:
    table = {a: {p: 0 for p in classes} for a in classes}
    for a, p in zip(actual, predicted):
        table[a][p] += 1
    return table


def run_experiment(spec: ExperimentSpec, dataset: Dataset | None = None,
                   n_jobs: int | None = None) -> dict:
    """Execute a spec end to end and return the JSON-ready report.

    The report carries per-fold accuracies and confusions, the definiteness
    diagnosis of each fold's training kernel, mean and sample standard
    deviation of accuracy, the spec hash, and wall-clock timings.
    """
    if dataset is None:
        if spec.dataset_path is None:
            raise ValueError("spec has no dataset path and no dataset was supplied")
        from .datasets import load_dataset

        dataset = load_dataset(spec.dataset_path)
    labels = dataset.labels
    if any(v is None for v in labels):
        raise ValueError("every dataset item needs a class label")
    t0 = time.perf_counter()
    full = pairwise_variant_matrix(dataset, spec.pipeline, n_jobs=n_jobs)
    t_matrix = time.perf_counter() - t0
    folds = _protocol_folds(spec, dataset)
    classes = sorted(set(str(v) for v in labels))
    names = np.asarray([str(v) for v in labels])
    fold_reports = []
    accuracies = []
    t1 = time.perf_counter()
    for train, test in folds:
        k_train, k_test = _fold_kernel(full, spec.pipeline, train, test)
        models = train_one_vs_all(k_train, names[train].tolist(), c=spec.C,
                                  correction=spec.correction)
        predicted, _ = predict_one_vs_all(models, k_test)
        actual = names[test].tolist()
        acc = float(np.mean([a == p for a, p in zip(actual, predicted)]))
        accuracies.append(acc)
        gram_diag = diagnose(k_train).to_dict()
        gram_diag.pop("eigenvalues")
        fold_reports.append({
            "train_size": int(len(train)),
            "test_size": int(len(test)),
            "accuracy": acc,
            "confusion": _confusion(actual, predicted, classes),
            "gram_diag": gram_diag,
        })
    t_folds = time.perf_counter() - t1
    acc_arr = np.asarray(accuracies)
    return {
        "spec_hash": spec.hash(),
        "spec": spec.to_dict(),
        "classes": classes,
        "folds": fold_reports,
        "mean_accuracy": float(acc_arr.mean()),
        "std_accuracy": float(acc_arr.std(ddof=1)) if len(acc_arr) > 1 else 0.0,
        "timings": {"matrix_seconds": t_matrix, "folds_seconds": t_folds},
    }


# ---------------------------------------------------------------------------
# Baselines and ingestion
# ---------------------------------------------------------------------------

def baseline_concat_vectors(dataset: Dataset) -> tuple[np.ndarray, list[str | None]]:
    """Fixed-length vectors: points sorted lexicographically, concatenated, zero-padded.

    The padding brings every instance to the maximum cardinality in the
    dataset; padding positions are exactly trailing zeros.
    """
    max_card = max(len(s) for s in dataset)
    dim = dataset.dimension
    out = np.zeros((len(dataset), max_card * dim))
    for i, s in enumerate(dataset):
        pts = s.points
        if len(pts):
            order = np.lexsort(pts.T[::-1])  # first coordinate is the primary key
            flat = pts[order].ravel()
            out[i, :flat.size] = flat
    return out, dataset.labels


def ingest_posture(path) -> Dataset:
    """Ingest the motion-capture posture CSV.

    Row format: ``class,user,x1,y1,z1,x2,y2,z2,...`` with empty cells or
    ``?`` for absent markers.  Markers farther than 200 millimeters from the
    local origin are pruned and instances left with fewer than 3 markers are
    discarded.  Malformed rows raise with their line number.
    """
    items = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for line_no, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            cells = [c.strip() for c in row]
            if line_no == 1 and not _is_number(cells[2] if len(cells) > 2 else ""):
                continue  # header row
            if len(cells) < 2 + 3 or (len(cells) - 2) % 3 != 0:
                raise ValueError(f"{path}:{line_no}: expected class,user,x,y,z triples")
            cls, user = cells[0], cells[1]
            markers = []
            for m in range((len(cells) - 2) // 3):
                triple = cells[2 + 3 * m: 5 + 3 * m]
                missing = [c in ("", "?") for c in triple]
                if all(missing):
                    continue
                if any(missing):
                    raise ValueError(f"{path}:{line_no}: marker {m} is partially missing")
                try:
                    markers.append([float(c) for c in triple])
                except ValueError as exc:
                    raise ValueError(f"{path}:{line_no}: non-numeric coordinate") from exc
            if not markers:
                continue
            pts = np.asarray(markers)
            keep = np.linalg.norm(pts, axis=1) <= POSTURE_PRUNE_RADIUS_MM
            pts = pts[keep]
            if pts.shape[0] < POSTURE_MIN_MARKERS:
                continue
            items.append(WeightedPointSet(
                pts, None, id=f"row{line_no}", class_label=cls, group_label=user,
            ))
    if not items:
        raise ValueError(f"{path}: no usable instances")
    return Dataset.from_items(items)


def _is_number(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def sample_balanced(dataset: Dataset, per_class_per_group: int, seed: int = 0) -> Dataset:
    """Deterministic without-replacement sampling per (class, group) cell.

    Raises listing every deficient cell if some (class, group) has fewer
    than the requested number of instances.
    """
    rng = np.random.default_rng(seed)
    cells: dict[tuple[str, str], list[int]] = {}
    for i, s in enumerate(dataset):
        cells.setdefault((str(s.class_label), str(s.group_label)), []).append(i)
    deficient = {k: len(v) for k, v in cells.items() if len(v) < per_class_per_group}
    if deficient:
        detail = ", ".join(f"{k}: {n}" for k, n in sorted(deficient.items()))
        raise ValueError(f"insufficient examples for balanced sampling ({detail})")
    chosen: list[int] = []
    for key in sorted(cells):
        idx = np.asarray(cells[key])
        pick = rng.choice(idx, size=per_class_per_group, replace=False)
        chosen.extend(int(v) for v in pick)
    return dataset.subset(sorted(chosen))
