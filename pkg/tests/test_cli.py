import json

import numpy as np
import pytest

from emdkit.cli import main
from emdkit.datasets import load_dataset, save_dataset
from emdkit.ground import load_matrix_csv
from emdkit.harness import generate_synthetic


@pytest.fixture
def data_path(tmp_path):
    data = generate_synthetic(2, 6, (3, 6), dim=2, separation=8.0, seed=1)
    path = tmp_path / "data.json"
    save_dataset(data, path)
    return path


def test_synth_and_ingest(tmp_path):
    out = tmp_path / "synth.json"
    assert main(["synth", "--classes", "3", "--per-class", "4", "--dim", "2",
                 "--seed", "7", "--cardinality", "3,6", "--out", str(out)]) == 0
    data = load_dataset(out)
    assert len(data) == 12
    assert len({s.class_label for s in data}) == 3


def test_dist_variants(tmp_path, data_path):
    out = tmp_path / "d.csv"
    assert main(["dist", "--in", str(data_path), "--out", str(out),
                 "--variant", "emdhat-sink", "--ground", "euclidean",
                 "--threshold", "1.0", "--sink-flat", "1.0"]) == 0
    ids, values = load_matrix_csv(out)
    assert len(ids) == 12
    assert np.allclose(np.diag(values), 0.0)


def test_dist_include_empty_and_biotope_xform(tmp_path, data_path):
    dist_csv = tmp_path / "d.csv"
    assert main(["dist", "--in", str(data_path), "--out", str(dist_csv),
                 "--variant", "emdhat-sink", "--ground", "euclidean",
                 "--threshold", "1.0", "--include-empty"]) == 0
    ids, values = load_matrix_csv(dist_csv)
    assert ids[-1] == "empty"
    out = tmp_path / "emjd.csv"
    assert main(["xform", "--in", str(dist_csv), "--out", str(out),
                 "--op", "biotope", "--anchor-row", "empty"]) == 0
    ids2, emjd = load_matrix_csv(out)
    assert ids2 == ids[:-1]
    assert np.all(emjd <= 4.0 / 3.0 + 1e-9)
    # matches the direct emjd pipeline
    from emdkit.harness import pairwise_variant_matrix

    direct = pairwise_variant_matrix(load_dataset(data_path),
                                     {"variant": "emjd", "ground": "euclidean",
                                      "threshold": 1.0})
    np.testing.assert_allclose(emjd, direct.values, atol=1e-9)


def test_xform_tanimoto_and_nested(tmp_path, data_path):
    gram_csv = tmp_path / "g.csv"
    main(["gram", "--in", str(data_path), "--out", str(gram_csv),
          "--variant", "emi", "--ground", "euclidean", "--threshold", "1.0",
          "--sink-flat", "1.0"])
    t1 = tmp_path / "t1.csv"
    t2 = tmp_path / "t2.csv"
    assert main(["xform", "--in", str(gram_csv), "--out", str(t1), "--op", "tanimoto"]) == 0
    assert main(["xform", "--in", str(gram_csv), "--out", str(t2), "--op", "nested:1"]) == 0
    _, m1 = load_matrix_csv(t1)
    _, m2 = load_matrix_csv(t2)
    np.testing.assert_allclose(m1, m2, atol=1e-12)
    assert np.allclose(np.diag(m1), 1.0)


def test_diag_and_correct(tmp_path, data_path):
    gram_csv = tmp_path / "g.csv"
    main(["gram", "--in", str(data_path), "--out", str(gram_csv),
          "--variant", "emdhat-sink", "--ground", "euclidean", "--threshold", "1.0",
          "--rbf", "auto"])
    report_path = tmp_path / "diag.json"
    assert main(["diag", "--in", str(gram_csv), "--out", str(report_path)]) == 0
    report = json.loads(report_path.read_text())
    assert set(report) >= {"eigenvalues", "min_eig", "is_psd", "is_cnd"}
    corrected_path = tmp_path / "c.csv"
    assert main(["correct", "--in", str(gram_csv), "--out", str(corrected_path),
                 "--mode", "shift"]) == 0
    _, corrected = load_matrix_csv(corrected_path)
    from emdkit.gram import diagnose

    assert diagnose(corrected).is_psd
    labels_path = tmp_path / "labels.txt"
    labels_path.write_text("\n".join(["1"] * 6 + ["-1"] * 6))
    assert main(["correct", "--in", str(gram_csv), "--out", str(corrected_path),
                 "--mode", "ksvm", "--labels", str(labels_path)]) == 0
    _, corrected = load_matrix_csv(corrected_path)
    assert diagnose(corrected).is_psd


def test_train_eval_roundtrip(tmp_path, data_path):
    model_path = tmp_path / "model.json"
    assert main(["train", "--data", str(data_path), "--out", str(model_path),
                 "--variant", "emdhat-sink", "--ground", "euclidean",
                 "--threshold", "1.0", "--C", "10.0"]) == 0
    payload = json.loads(model_path.read_text())
    assert {"pipeline", "models", "train_items", "u"} <= set(payload)
    eval_path = tmp_path / "eval.json"
    assert main(["eval", "--model", str(model_path), "--data", str(data_path),
                 "--out", str(eval_path)]) == 0
    result = json.loads(eval_path.read_text())
    assert result["accuracy"] == 1.0  # separable training data
    assert "confusion" in result


def test_run_spec(tmp_path, data_path):
    spec = {
        "pipeline": {"variant": "emdhat-sink", "ground": "euclidean",
                     "threshold": 1.0, "rbf": "auto"},
        "protocol": {"kind": "kfold", "k": 3, "seed": 0},
        "correction": "none",
        "C": 10.0,
        "dataset_path": str(data_path),
    }
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(spec))
    report_path = tmp_path / "report.json"
    assert main(["run", "--spec", str(spec_path), "--out", str(report_path)]) == 0
    report = json.loads(report_path.read_text())
    assert report["mean_accuracy"] >= 0.75  # plumbing check, not a benchmark
    assert len(report["folds"]) == 3
    assert report["spec_hash"]


def test_ingest_posture_cli(tmp_path):
    raw = tmp_path / "raw.csv"
    raw.write_text("Class,User,X0,Y0,Z0,X1,Y1,Z1,X2,Y2,Z2\n"
                   "1,0,10,0,0,20,5,0,0,30,5\n"
                   "2,1,10,0,0,20,5,0,0,30,5\n")
    out = tmp_path / "data.json"
    assert main(["ingest-posture", "--in", str(raw), "--out", str(out)]) == 0
    data = load_dataset(out)
    assert len(data) == 2
    assert data[0].group_label == "0"
