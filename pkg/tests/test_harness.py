import json

import numpy as np
import pytest

from emdkit.datasets import Dataset, load_dataset, save_dataset
from emdkit.ground import euclidean
from emdkit.harness import (
    ExperimentSpec,
    baseline_concat_vectors,
    cross_variant_matrix,
    fit_kernel_pipeline,
    fixed_split_indices,
    generate_synthetic,
    ingest_posture,
    kfold_indices,
    leave_one_group_out_indices,
    pairwise_variant_matrix,
    run_experiment,
    sample_balanced,
)
from emdkit.multiset import WeightedPointSet, normalize
from emdkit.transport import emd


class TestSynthetic:
    def test_deterministic(self):
        d1 = generate_synthetic(3, 5, (3, 8), dim=2, separation=5.0, seed=11)
        d2 = generate_synthetic(3, 5, (3, 8), dim=2, separation=5.0, seed=11)
        for a, b in zip(d1, d2):
            assert a == b
            assert a.class_label == b.class_label

    def test_cardinality_range_respected(self):
        data = generate_synthetic(4, 10, (3, 12), dim=3, separation=5.0, seed=0)
        sizes = [len(s) for s in data]
        assert min(sizes) >= 3
        assert max(sizes) <= 12

    def test_unit_masses(self):
        data = generate_synthetic(2, 3, (3, 6), dim=2, separation=5.0, seed=0)
        for s in data:
            np.testing.assert_array_equal(s.masses, np.ones(len(s)))

    def test_corner_stand_in(self):
        from emdkit.harness import generate_corner_stand_in

        data = generate_corner_stand_in(3, 5, seed=2)
        assert len(data) == 15
        assert data.dimension == 2
        for s in data:
            assert 5 <= len(s) <= 15
            assert np.all(s.points >= 0.0) and np.all(s.points <= 1.0)
        d1 = generate_corner_stand_in(3, 5, seed=2)
        assert all(a == b for a, b in zip(data, d1))

    def test_nearest_neighbor_sanity_at_high_separation(self):
        # 2 classes at 10 sigma: mass-aware transport 1-NN is perfect
        # (paired classes share a center, so the cardinality signal matters)
        from emdkit.ground import SinkSpec
        from emdkit.transport import emdhat_p

        data = generate_synthetic(2, 25, (3, 8), dim=2, separation=10.0, seed=3)
        sink = SinkSpec.flat_rate(2.0)  # above the threshold so mass gaps dominate
        d = euclidean(threshold=1.0)
        n = len(data)
        dist = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                dist[i, j] = dist[j, i] = emdhat_p(data[i], data[j], d, sink)
        correct = 0
        for i in range(n):
            order = np.argsort(dist[i])
            nearest = order[1] if order[0] == i else order[0]
            correct += data[nearest].class_label == data[i].class_label
        assert correct == n


class TestProtocols:
    def test_kfold_partition(self):
        folds = kfold_indices(23, 5, seed=2)
        sizes = [len(test) for _, test in folds]
        assert max(sizes) - min(sizes) <= 1
        all_test = np.concatenate([test for _, test in folds])
        assert sorted(all_test.tolist()) == list(range(23))
        for train, test in folds:
            assert not set(train) & set(test)
            assert sorted(set(train) | set(test)) == list(range(23))

    def test_leave_one_group_out(self):
        groups = ["u1", "u2", "u1", "u3", "u2", "u3", "u3"]
        folds = leave_one_group_out_indices(groups)
        assert len(folds) == 3
        arr = np.asarray(groups)
        for train, test in folds:
            assert len(set(arr[test])) == 1
            assert set(arr[test]).isdisjoint(set(arr[train]))

    def test_fixed_split_counts(self):
        labels = ["a"] * 10 + ["b"] * 10
        folds = fixed_split_indices(labels, 4, 3, repeats=5, seed=1)
        assert len(folds) == 5
        for train, test in folds:
            assert len(train) == 8 and len(test) == 6
            assert not set(train) & set(test)

    def test_fixed_split_insufficient(self):
        with pytest.raises(ValueError):
            fixed_split_indices(["a"] * 3, 2, 2, repeats=1)


class TestBaselineConcat:
    def test_lexicographic_example(self):
        s = WeightedPointSet(np.array([[1.0, 0.0], [0.0, 2.0]]), np.ones(2))
        data = Dataset((s,), 2)
        x, _ = baseline_concat_vectors(data)
        np.testing.assert_array_equal(x[0], [0.0, 2.0, 1.0, 0.0])

    def test_padding_trailing_zeros(self):
        a = WeightedPointSet(np.array([[1.0], [2.0], [3.0]]), np.ones(3))
        b = WeightedPointSet(np.array([[5.0]]), np.ones(1))
        x, _ = baseline_concat_vectors(Dataset((a, b), 1))
        np.testing.assert_array_equal(x[0], [1.0, 2.0, 3.0])  # max cardinality: no padding
        np.testing.assert_array_equal(x[1], [5.0, 0.0, 0.0])


class TestDatasets:
    def test_json_round_trip(self, tmp_path):
        data = generate_synthetic(2, 3, (3, 5), dim=2, separation=5.0, seed=1)
        path = tmp_path / "d.json"
        save_dataset(data, path)
        loaded = load_dataset(path)
        assert len(loaded) == len(data)
        for a, b in zip(data, loaded):
            assert a == b
            assert a.id == b.id and a.class_label == b.class_label

    def test_unit_weights_when_omitted(self, tmp_path):
        path = tmp_path / "d.json"
        payload = {"dimension": 1,
                   "items": [{"id": "x", "label": "l", "group": None,
                              "points": [[0.0], [1.0]], "weights": None}]}
        path.write_text(json.dumps(payload))
        loaded = load_dataset(path)
        np.testing.assert_array_equal(loaded[0].masses, [1.0, 1.0])


POSTURE_CSV = """Class,User,X0,Y0,Z0,X1,Y1,Z1,X2,Y2,Z2,X3,Y3,Z3
1,0,10,0,0,20,5,0,0,30,5,?,?,?
1,0,300,0,0,20,5,0,0,30,5,10,10,10
2,1,10,0,0,20,5,0,0,30,5,10,10,10
2,1,10,0,0,250,5,0,,,,?,?,?
"""


class TestIngestPosture:
    def test_rules_applied(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text(POSTURE_CSV)
        data = ingest_posture(path)
        # row 2: 3 usable markers (missing marker skipped)
        # row 3: the 300mm marker is pruned, 3 remain
        # row 4: all 4 markers kept
        # row 5: pruning the 250mm marker leaves 2 -> discarded
        assert len(data) == 3
        assert [s.class_label for s in data] == ["1", "1", "2"]
        assert [s.group_label for s in data] == ["0", "0", "1"]
        assert all(np.linalg.norm(s.points, axis=1).max() <= 200.0 for s in data)
        assert all(len(s) >= 3 for s in data)

    def test_far_marker_pruned(self, tmp_path):
        path = tmp_path / "p.csv"
        # marker at 205 mm from origin is pruned
        path.write_text("1,0,205,0,0,10,0,0,0,10,0,0,0,10\n")
        data = ingest_posture(path)
        assert len(data[0]) == 3

    def test_partial_marker_is_malformed(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("1,0,10,?,0,20,5,0,0,30,5\n")
        with pytest.raises(ValueError, match=":1"):
            ingest_posture(path)

    def test_bad_cell_reports_line(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("1,0,10,0,0,20,5,0,0,30,5\n1,0,xx,0,0,20,5,0,0,30,5\n")
        with pytest.raises(ValueError, match=":2"):
            ingest_posture(path)


class TestSampleBalanced:
    def _toy(self):
        items = []
        for cls in ("a", "b"):
            for grp in ("u1", "u2"):
                for k in range(4):
                    items.append(WeightedPointSet(
                        np.array([[float(k)]]), np.ones(1),
                        id=f"{cls}{grp}{k}", class_label=cls, group_label=grp))
        return Dataset(tuple(items), 1)

    def test_counts(self):
        out = sample_balanced(self._toy(), 2, seed=0)
        assert len(out) == 2 * 2 * 2
        for cls in ("a", "b"):
            for grp in ("u1", "u2"):
                n = sum(1 for s in out if s.class_label == cls and s.group_label == grp)
                assert n == 2

    def test_deterministic(self):
        a = sample_balanced(self._toy(), 2, seed=5)
        b = sample_balanced(self._toy(), 2, seed=5)
        assert [s.id for s in a] == [s.id for s in b]

    def test_deficiency_reported(self):
        with pytest.raises(ValueError, match="u1"):
            sample_balanced(self._toy(), 5, seed=0)


class TestRunExperiment:
    def _spec(self, **over):
        base = dict(
            pipeline={"variant": "emdhat-sink", "ground": "euclidean",
                      "threshold": 1.0, "rbf": "auto"},
            protocol={"kind": "kfold", "k": 3, "seed": 0},
            correction="none",
            C=10.0,
        )
        base.update(over)
        return ExperimentSpec(**base)

    def test_separable_synthetic_is_perfect(self):
        data = generate_synthetic(2, 12, (3, 6), dim=2, separation=10.0, seed=2)
        report = run_experiment(self._spec(), data)
        assert report["mean_accuracy"] == 1.0
        assert report["std_accuracy"] == 0.0
        assert len(report["folds"]) == 3

    def test_normalized_sets_make_emd_equal_emdhat(self):
        data = generate_synthetic(2, 6, (3, 6), dim=2, separation=5.0, seed=4)
        data = Dataset(tuple(normalize(s) for s in data), data.dimension)
        m_emd = pairwise_variant_matrix(
            data, {"variant": "emd", "ground": "euclidean", "threshold": 1.0})
        m_hat = pairwise_variant_matrix(
            data, {"variant": "emdhat-sink", "ground": "euclidean", "threshold": 1.0,
                   "sink_flat": 1.0})
        np.testing.assert_allclose(m_emd.values, m_hat.values, atol=1e-12)

    def test_leave_one_group_out_fold_count(self):
        items = []
        for g in range(4):
            for k in range(3):
                items.append(WeightedPointSet(
                    np.array([[float(g), float(k)]]), np.ones(1),
                    id=f"g{g}k{k}", class_label=f"c{k % 2}", group_label=f"u{g}"))
        data = Dataset(tuple(items), 2)
        spec = self._spec(protocol={"kind": "leave_one_group_out"})
        report = run_experiment(spec, data)
        assert len(report["folds"]) == 4

    def test_report_reproducible(self):
        data = generate_synthetic(2, 8, (3, 5), dim=2, separation=6.0, seed=9)
        r1 = run_experiment(self._spec(), data)
        r2 = run_experiment(self._spec(), data)
        r1.pop("timings")
        r2.pop("timings")
        assert json.dumps(r1, sort_keys=True) == json.dumps(r2, sort_keys=True)

    def test_spec_hash_stable(self):
        s1 = self._spec()
        s2 = self._spec()
        assert s1.hash() == s2.hash()
        s3 = self._spec(C=2.0)
        assert s1.hash() != s3.hash()


class TestFittedPipeline:
    def test_rows_match_square_matrix(self):
        data = generate_synthetic(2, 6, (3, 5), dim=2, separation=5.0, seed=7)
        pipeline = {"variant": "emdhat-sink", "ground": "euclidean", "threshold": 1.0,
                    "rbf": "auto", "transform": "tanimoto"}
        fitted = fit_kernel_pipeline(data, pipeline)
        rows = fitted.kernel_rows(list(data))
        np.testing.assert_allclose(rows, fitted.train_kernel, atol=1e-10)

    def test_kernel_variant_rows(self):
        data = generate_synthetic(2, 5, (3, 5), dim=2, separation=5.0, seed=8)
        pipeline = {"variant": "emi", "ground": "euclidean", "threshold": 1.0,
                    "sink_flat": 1.0}
        fitted = fit_kernel_pipeline(data, pipeline)
        rows = fitted.kernel_rows(list(data))
        np.testing.assert_allclose(rows, fitted.train_kernel, atol=1e-9)

    def test_cross_matrix_shape(self):
        data = generate_synthetic(2, 4, (3, 4), dim=2, separation=5.0, seed=8)
        m = cross_variant_matrix(list(data)[:3], list(data)[3:],
                                 {"variant": "emd", "ground": "euclidean"})
        assert m.shape == (3, 5)


class TestTransportKernelTransformer:
    def test_sklearn_pipeline_composition(self):
        from sklearn.pipeline import Pipeline

        from emdkit.harness import TransportKernelTransformer
        from emdkit.svm import KernelSVC

        data = generate_synthetic(2, 10, (3, 6), dim=2, separation=8.0, seed=6)
        labels = np.array([s.class_label for s in data])
        train, test = list(data)[::2], list(data)[1::2]
        y_train = labels[::2]
        clf = Pipeline([
            ("kernel", TransportKernelTransformer(variant="emdhat-sink",
                                                  threshold=1.0, sink_flat=1.0)),
            ("svc", KernelSVC(C=10.0)),
        ]).fit(train, y_train)
        predictions = clf.predict(test)
        assert np.mean(predictions == labels[1::2]) >= 0.8

    def test_get_params_clone(self):
        from sklearn.base import clone

        from emdkit.harness import TransportKernelTransformer

        t = TransportKernelTransformer(variant="emi", sink_flat=0.5, threshold=0.5)
        assert clone(t).get_params() == t.get_params()

    def test_transform_on_train_is_square_kernel(self):
        from emdkit.harness import TransportKernelTransformer

        data = generate_synthetic(2, 5, (3, 5), dim=2, separation=5.0, seed=6)
        t = TransportKernelTransformer(threshold=1.0, sink_flat=1.0).fit(list(data))
        k = t.transform(list(data))
        assert k.shape == (10, 10)
        np.testing.assert_allclose(k, k.T, atol=1e-12)
