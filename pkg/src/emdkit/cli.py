"""Command line interface.

Subcommands:

    dist            pairwise transport distance matrix of a dataset -> CSV
    gram            pairwise kernel matrix of a dataset (pipeline) -> CSV
    xform           transform a Gram/distance CSV (tanimoto | nested:N | biotope)
    diag            definiteness report of a matrix CSV -> JSON
    correct         spectral correction (shift | ksvm) of a kernel CSV
    train           fit a one-vs-all SVM from a dataset + pipeline -> model JSON
    eval            evaluate a model JSON on a dataset -> accuracy/confusion JSON
    run             execute an experiment spec JSON -> report JSON
    synth           generate a synthetic point-set dataset -> JSON
    ingest-posture  convert the posture CSV to the dataset JSON format
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys

import numpy as np

from . import ground as ground_mod
from .datasets import Dataset, load_dataset, save_dataset
from .gram import GramMatrix, diagnose, ksvm_correct, shift_correct
from .harness import (
    ExperimentSpec,
    fit_kernel_pipeline,
    generate_synthetic,
    ingest_posture,
    pairwise_variant_matrix,
    run_experiment,
)
from .multiset import WeightedPointSet
from .svm import SvmModel, predict_one_vs_all, train_one_vs_all
from .transform import biotope_transform_matrix, transform_pd_nested_matrix

EMPTY_ANCHOR_ID = "empty"


def _pipeline_from_args(args) -> dict:
    pipeline = {
        "variant": args.variant,
        "ground": args.ground,
    }
    if args.threshold is not None:
        pipeline["threshold"] = args.threshold
    if getattr(args, "alpha", None) is not None:
        pipeline["alpha"] = args.alpha
    if getattr(args, "sink_flat", None) is not None:
        pipeline["sink_flat"] = args.sink_flat
    if getattr(args, "sink_point", None) is not None:
        pipeline["sink_point"] = [float(v) for v in args.sink_point.split(",")]
    if getattr(args, "u", None) is not None:
        pipeline["u"] = args.u
    if getattr(args, "rbf", None) is not None:
        pipeline["rbf"] = args.rbf if args.rbf == "auto" else float(args.rbf)
    if getattr(args, "transform", None):
        pipeline["transform"] = args.transform
    return pipeline


def _add_pipeline_flags(p, variants):
    p.add_argument("--variant", default=variants[0], choices=variants)
    p.add_argument("--ground", default="euclidean",
                   help="euclidean|sqeuclidean|discrete|circle|file:PATH")
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--sink-flat", dest="sink_flat", type=float, default=None)
    p.add_argument("--sink-point", dest="sink_point", default=None,
                   help='comma-separated coordinates, e.g. "0,0,0"')


def _cmd_dist(args) -> int:
    dataset = load_dataset(args.infile)
    pipeline = _pipeline_from_args(args)
    gram = pairwise_variant_matrix(dataset, pipeline, n_jobs=args.jobs)
    ids = list(gram.ids)
    values = gram.values
    if args.include_empty:
        from .harness import cross_variant_matrix

        empty = Dataset((WeightedPointSet.empty(dataset.dimension, id=EMPTY_ANCHOR_ID),),
                        dataset.dimension)
        col = cross_variant_matrix(list(dataset), list(empty), pipeline)[:, 0]
        n = len(ids)
        ext = np.zeros((n + 1, n + 1))
        ext[:n, :n] = values
        ext[:n, n] = col
        ext[n, :n] = col
        ids = ids + [EMPTY_ANCHOR_ID]
        values = ext
    ground_mod.save_matrix_csv(args.out, ids, values)
    return 0


def _cmd_gram(args) -> int:
    dataset = load_dataset(args.infile)
    pipeline = _pipeline_from_args(args)
    fitted = fit_kernel_pipeline(dataset, pipeline, n_jobs=args.jobs)
    ground_mod.save_matrix_csv(args.out, dataset.ids, fitted.train_kernel)
    return 0


def _cmd_xform(args) -> int:
    ids, values = ground_mod.load_matrix_csv(args.infile, tol=1e-6)
    if args.op == "tanimoto":
        out = transform_pd_nested_matrix(values, 1)
    elif args.op.startswith("nested:"):
        out = transform_pd_nested_matrix(values, int(args.op.split(":", 1)[1]))
    elif args.op == "biotope":
        if args.anchor_row is None:
            raise SystemExit("--op biotope requires --anchor-row ID (use the id "
                             f"{EMPTY_ANCHOR_ID!r} for a matrix built with dist --include-empty)")
        if args.anchor_row not in ids:
            raise SystemExit(f"anchor row {args.anchor_row!r} not found in matrix ids")
        k = ids.index(args.anchor_row)
        out = biotope_transform_matrix(values, values[:, k], anchor_self=float(values[k, k]))
        keep = [i for i in range(len(ids)) if i != k]
        out = out[np.ix_(keep, keep)]
        ids = [ids[i] for i in keep]
    else:
        raise SystemExit(f"unknown op {args.op!r}")
    ground_mod.save_matrix_csv(args.out, ids, out)
    return 0


def _cmd_diag(args) -> int:
    ids, values = ground_mod.load_matrix_csv(args.infile, tol=1e-6)
    report = diagnose(GramMatrix(values, ids, kind=args.kind), tol=args.tol)
    payload = report.to_dict()
    with open(args.out, "w") as fh:
        json.dump(payload, fh, indent=1)
    print(f"is_psd={payload['is_psd']} is_cnd={payload['is_cnd']} "
          f"min_eig={payload['min_eig']:.6g}")
    return 0


def _cmd_correct(args) -> int:
    ids, values = ground_mod.load_matrix_csv(args.infile, tol=1e-6)
    gram = GramMatrix(values, ids, kind="kernel")
    if args.mode == "shift":
        corrected, s = shift_correct(gram)
        print(f"shift applied: s={s:.6g}")
        out = corrected.values
    else:
        with open(args.labels) as fh:
            labels = np.array([float(line.strip()) for line in fh if line.strip()])
        corr = ksvm_correct(gram, labels)
        out = corr.corrected
    ground_mod.save_matrix_csv(args.out, ids, out)
    return 0


def _cmd_train(args) -> int:
    dataset = load_dataset(args.data)
    labels = dataset.labels
    if any(v is None for v in labels):
        raise SystemExit("every training item needs a class label")
    pipeline = _pipeline_from_args(args)
    fitted = fit_kernel_pipeline(dataset, pipeline, n_jobs=args.jobs)
    models = train_one_vs_all(GramMatrix(fitted.train_kernel, dataset.ids),
                              [str(v) for v in labels], c=args.C,
                              correction=args.correction)
    provenance = json.dumps({"pipeline": pipeline, "correction": args.correction,
                             "C": args.C}, sort_keys=True)
    payload = {
        "pipeline": pipeline,
        "correction": args.correction,
        "C": args.C,
        "pipeline_hash": hashlib.sha256(provenance.encode()).hexdigest()[:16],
        "kind": fitted.kind,
        "u": fitted.u,
        "train_self": [float(v) for v in fitted.train_self],
        "train_data": args.data,
        "models": [m.to_dict() for m in models],
    }
    # embed the training items so kernel rows can be evaluated later
    payload["train_items"] = {
        "dimension": dataset.dimension,
        "items": [
            {"id": s.id, "label": s.class_label, "group": s.group_label,
             "points": [[float(c) for c in p] for p in s.points],
             "weights": [float(w) for w in s.masses]}
            for s in dataset
        ],
    }
    with open(args.out, "w") as fh:
        json.dump(payload, fh)
    print(f"trained {len(models)} one-vs-all machines on {len(dataset)} items")
    return 0


def _load_model(path):
    with open(path) as fh:
        payload = json.load(fh)
    from .harness import FittedKernelPipeline

    train_payload = payload["train_items"]
    dim = int(train_payload["dimension"])
    items = tuple(
        WeightedPointSet(
            np.asarray(e["points"], dtype=float).reshape(-1, dim),
            np.asarray(e["weights"], dtype=float),
            id=str(e["id"]), class_label=e.get("label"), group_label=e.get("group"),
            dimension=dim,
        )
        for e in train_payload["items"]
    )
    train = Dataset(items, dim)
    models = [SvmModel.from_dict(d) for d in payload["models"]]
    fitted = FittedKernelPipeline(
        pipeline=payload["pipeline"], train=train, kind=payload["kind"],
        u=payload["u"], train_kernel=np.empty((0, 0)),
        train_self=np.asarray(payload["train_self"], dtype=float),
    )
    return fitted, models


def _cmd_eval(args) -> int:
    fitted, models = _load_model(args.model)
    dataset = load_dataset(args.data)
    rows = fitted.kernel_rows(list(dataset))
    predicted, scores = predict_one_vs_all(models, rows)
    actual = [str(v) for v in dataset.labels]
    classes = sorted({m.class_name for m in models} | set(a for a in actual if a != "None"))
    correct = sum(a == p for a, p in zip(actual, predicted))
    confusion = {a: {p: 0 for p in classes} for a in classes}
    for a, p in zip(actual, predicted):
        confusion.setdefault(a, {p: 0 for p in classes})[p] = confusion[a].get(p, 0) + 1
    payload = {
        "accuracy": correct / len(dataset),
        "n": len(dataset),
        "confusion": confusion,
        "predictions": [{"id": s.id, "predicted": p, "actual": a}
                        for s, p, a in zip(dataset, predicted, actual)],
    }
    with open(args.out, "w") as fh:
        json.dump(payload, fh, indent=1)
    print(f"accuracy {payload['accuracy']:.4f} on {len(dataset)} items")
    return 0


def _cmd_run(args) -> int:
    with open(args.spec) as fh:
        spec = ExperimentSpec.from_dict(json.load(fh))
    report = run_experiment(spec, n_jobs=args.jobs)
    with open(args.out, "w") as fh:
        json.dump(report, fh, indent=1)
    print(f"mean accuracy {report['mean_accuracy']*100:.2f} "
          f"+/- {report['std_accuracy']*100:.2f} over {len(report['folds'])} folds")
    return 0


def _cmd_synth(args) -> int:
    lo, hi = (int(v) for v in args.cardinality.split(","))
    dataset = generate_synthetic(args.classes, args.per_class, (lo, hi),
                                 dim=args.dim, separation=args.separation, seed=args.seed)
    save_dataset(dataset, args.out)
    print(f"wrote {len(dataset)} items ({args.classes} classes) to {args.out}")
    return 0


def _cmd_ingest_posture(args) -> int:
    dataset = ingest_posture(args.infile)
    save_dataset(dataset, args.out)
    print(f"ingested {len(dataset)} instances from {args.infile}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="emdkit",
                                     description="earth mover's distance kernels toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dist", help="pairwise distance matrix -> CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    _add_pipeline_flags(p, ("emd", "emd-rubner", "emdhat-alpha", "emdhat-sink"))
    p.add_argument("--include-empty", action="store_true",
                   help="append a row/column of distances to the empty set "
                        f"under the id {EMPTY_ANCHOR_ID!r}")
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=_cmd_dist)

    p = sub.add_parser("gram", help="pairwise kernel matrix -> CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    _add_pipeline_flags(p, ("emdhat-sink", "emd", "emd-rubner", "emdhat-alpha", "emjd",
                            "emi", "idk"))
    p.add_argument("--u", type=float, default=None, help="idk scale")
    p.add_argument("--rbf", default=None, help='"auto" or a fixed positive scale')
    p.add_argument("--transform", default=None, help="tanimoto | nested:N")
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=_cmd_gram)

    p = sub.add_parser("xform", help="transform a matrix CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--op", required=True, help="tanimoto | nested:N | biotope")
    p.add_argument("--anchor-row", dest="anchor_row", default=None)
    p.set_defaults(func=_cmd_xform)

    p = sub.add_parser("diag", help="definiteness report -> JSON")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kind", default="kernel", choices=("kernel", "distance"))
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=_cmd_diag)

    p = sub.add_parser("correct", help="spectral correction of a kernel CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", required=True, choices=("shift", "ksvm"))
    p.add_argument("--labels", default=None, help="file with one +1/-1 label per line (ksvm)")
    p.set_defaults(func=_cmd_correct)

    p = sub.add_parser("train", help="fit a one-vs-all SVM -> model JSON")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    _add_pipeline_flags(p, ("emdhat-sink", "emd", "emd-rubner", "emdhat-alpha", "emjd",
                            "emi", "idk"))
    p.add_argument("--u", type=float, default=None)
    p.add_argument("--rbf", default=None)
    p.add_argument("--transform", default=None)
    p.add_argument("--correction", default="none", choices=("none", "shift", "ksvm"))
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a model on a dataset -> JSON")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("run", help="run an experiment spec -> report JSON")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("synth", help="generate a synthetic dataset -> JSON")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--per-class", dest="per_class", type=int, required=True)
    p.add_argument("--dim", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cardinality", default="3,12", help="LO,HI")
    p.add_argument("--separation", type=float, default=5.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("ingest-posture", help="posture CSV -> dataset JSON")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ingest_posture)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
