"""Fold plans, F1, conditional accuracy and the cross-validated experiment."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uamas.dataset import Task
from uamas.errors import EmptyRecords, InvalidK, LengthMismatch
from uamas.evaluation import (
    EvalRecord,
    conditional_accuracy,
    f1_score,
    make_folds,
    reports_from_json,
    reports_to_csv,
    reports_to_json,
    run_experiment,
    train_full_model,
)
from uamas.features import extract_many
from uamas.training import TrainConfig


class TestFolds:
    def test_small_case(self):
        plan = make_folds(10, 5, seed=0)
        sizes = [len(plan.fold_indices(f)) for f in range(5)]
        assert sizes == [2, 2, 2, 2, 2]
        all_idx = np.concatenate([plan.fold_indices(f) for f in range(5)])
        assert sorted(all_idx) == list(range(10))

    def test_canonical_size(self):
        plan = make_folds(2205, 5, seed=1)
        assert all(len(plan.fold_indices(f)) == 441 for f in range(5))

    def test_deterministic(self):
        assert make_folds(100, 5, seed=42) == make_folds(100, 5, seed=42)
        assert make_folds(100, 5, seed=42) != make_folds(100, 5, seed=43)

    def test_invalid_k(self):
        with pytest.raises(InvalidK):
            make_folds(10, 1, seed=0)
        with pytest.raises(InvalidK):
            make_folds(3, 5, seed=0)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(5, 400), st.integers(2, 5), st.integers(0, 1000))
    def test_partition_properties(self, n, k, seed):
        if k > n:
            return
        plan = make_folds(n, k, seed)
        folds = [plan.fold_indices(f) for f in range(k)]
        sizes = [len(f) for f in folds]
        assert max(sizes) - min(sizes) <= 1
        combined = np.concatenate(folds)
        assert len(combined) == n
        assert sorted(combined) == list(range(n))
        train = plan.train_indices(0)
        assert set(train).isdisjoint(set(folds[0]))

    def test_stratified_keeps_class_balance(self):
        rng = np.random.default_rng(2)
        labels = rng.choice([3, 20, 100], size=200, p=[0.5, 0.3, 0.2])
        plan = make_folds(200, 5, seed=4, stratify_labels=labels)
        sizes = [len(plan.fold_indices(f)) for f in range(5)]
        assert max(sizes) - min(sizes) <= 1
        for value in (3, 20, 100):
            counts = [
                int(np.sum(labels[plan.fold_indices(f)] == value)) for f in range(5)
            ]
            assert max(counts) - min(counts) <= 1
        # deterministic and different from the unstratified plan
        assert plan == make_folds(200, 5, seed=4, stratify_labels=labels)
        assert plan != make_folds(200, 5, seed=4)


class TestF1:
    def test_perfect(self):
        assert f1_score([0, 1, 2, 1], [0, 1, 2, 1], 3) == 1.0

    def test_hand_oracle_two_class(self):
        # class 0: tp=1 fp=0 fn=1 -> 2/3 ; class 1: tp=2 fp=1 fn=0 -> 4/5
        got = f1_score([0, 0, 1, 1], [0, 1, 1, 1], 2)
        assert abs(got - (2 / 3 + 4 / 5) / 2) < 1e-12

    def test_hand_oracle_single_class_predictions(self):
        # Everything predicted class 1 on balanced binary truth:
        # class 0 F1 = 0, class 1 F1 = 2/3 -> macro 1/3.
        got = f1_score([0, 0, 1, 1], [1, 1, 1, 1], 2)
        assert abs(got - 1 / 3) < 1e-12

    def test_absent_class_excluded(self):
        # Class 2 never occurs in truth or prediction: excluded from macro.
        got = f1_score([0, 0, 1, 1], [0, 0, 1, 1], 3)
        assert got == 1.0

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            f1_score([0, 1], [0], 2)


def record(correct: bool, certain: bool, fold=0) -> EvalRecord:
    return EvalRecord(
        task=Task.COOLER,
        fold=fold,
        cycle_index=0,
        true_class=0,
        modal_class=0 if correct else 1,
        certainty=0.9 if certain else 0.5,
        certain=certain,
    )


class TestConditionalAccuracy:
    def test_enumeration(self):
        records = [
            record(True, True),
            record(False, True),
            record(True, False),
            record(False, False),
        ]
        acc = conditional_accuracy(records, threshold=0.8)
        assert acc.p_certain == 0.5
        assert acc.p_uncertain == 0.5
        assert (acc.n_certain, acc.n_uncertain) == (2, 2)

    def test_all_certain_correct(self):
        acc = conditional_accuracy([record(True, True)] * 4, threshold=0.8)
        assert acc.p_certain == 1.0
        assert acc.p_uncertain is None
        assert acc.n_uncertain == 0

    def test_all_uncertain(self):
        acc = conditional_accuracy(
            [record(True, False), record(False, False)], threshold=0.8
        )
        assert acc.p_certain is None
        assert acc.p_uncertain == 0.5

    def test_empty_rejected(self):
        with pytest.raises(EmptyRecords):
            conditional_accuracy([], threshold=0.8)

    def test_law_of_total_probability(self):
        rng = np.random.default_rng(0)
        records = [
            record(bool(rng.integers(2)), bool(rng.integers(2))) for _ in range(200)
        ]
        acc = conditional_accuracy(records, threshold=0.8)
        total = len(records)
        overall = sum(r.correct for r in records) / total
        combined = (acc.p_certain or 0) * acc.n_certain / total + (
            acc.p_uncertain or 0
        ) * acc.n_uncertain / total
        assert abs(overall - combined) < 1e-12

    def test_threshold_monotone(self):
        rng = np.random.default_rng(1)
        records = [
            EvalRecord(Task.VALVE, 0, i, 0, 0, float(rng.uniform(0.25, 1)), True)
            for i in range(100)
        ]
        counts = [
            conditional_accuracy(records, threshold=t).n_certain
            for t in (0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
        ]
        assert counts == sorted(counts, reverse=True)


@pytest.fixture(scope="module")
def experiment(small_cycles):
    features = extract_many(small_cycles)
    config = TrainConfig(epochs=4, seed=5)
    report, records = run_experiment(
        small_cycles, Task.COOLER, config, T=10, features=features
    )
    return report, records


class TestExperiment:

    def test_record_coverage(self, experiment, small_cycles):
        report, records = experiment
        assert len(records) == len(small_cycles)
        assert sorted(r.cycle_index for r in records) == list(range(len(small_cycles)))
        assert {r.fold for r in records} == set(range(5))

    def test_certain_flag_consistent(self, experiment):
        report, records = experiment
        for r in records:
            assert r.certain == (r.certainty >= report.threshold)
        assert report.n_certain == sum(r.certain for r in records)
        assert report.n_uncertain == sum(not r.certain for r in records)

    def test_report_fields(self, experiment):
        report, _ = experiment
        assert report.task == Task.COOLER
        assert 0.0 <= report.f1_mean <= 1.0
        assert report.f1_std >= 0
        assert len(report.per_fold_f1) == 5
        assert not report.reference_protocol  # epochs=4 is a smoke config

    def test_deterministic(self, experiment, small_cycles):
        report, records = experiment
        features = extract_many(small_cycles)
        config = TrainConfig(epochs=4, seed=5)
        report2, records2 = run_experiment(
            small_cycles, Task.COOLER, config, T=10, features=features
        )
        assert report2 == report
        assert records2 == records

    def test_report_round_trip(self, experiment):
        report, _ = experiment
        text = reports_to_json([report])
        restored = reports_from_json(text)
        assert restored == [report]
        csv_text = reports_to_csv([report])
        assert csv_text.splitlines()[0].startswith("task,f1_mean")
        assert Task.COOLER.value in csv_text

    def test_train_full_model(self, small_cycles):
        bundle = train_full_model(
            small_cycles, Task.COOLER, TrainConfig(epochs=2, seed=1)
        )
        assert bundle.task.task == Task.COOLER
        assert bundle.net.num_classes == 3
        assert bundle.normalizer.fitted_on == "all"
