"""Tests of the evaluation protocols"""

import logging

import numpy as np
import pytest

from lib.dataset import Dataset
from lib.datatypes import ModelKind, SplitProtocol, Target
from lib.exceptions import BadHyperparam, InsufficientData, MissingModel
from lib.synthetic import FREQUENCIES, synthetic_generate
from regressors.model import train
from results.evaluation import (
    EXTERNAL_BASELINE,
    MEAN_BASELINE,
    UNIFIED_GROUP,
    comparison_groups,
    evaluate,
    frequency_sweep,
    learning_curve,
    model_comparison,
    pareto_front,
    pareto_indices,
)
from tests.conftest import FAST_HYPERPARAMS


@pytest.fixture(scope="module")
def cp_model(synthetic_dataset):
    return train(ModelKind.GBT, synthetic_dataset, Target.CP, seed=1)


class TestEvaluate:
    def test_counts(self, synthetic_dataset, linear_dataset):
        models = [
            train(ModelKind.GBT, linear_dataset, target, {"n_estimators": 20})
            for target in Target
        ]
        report = evaluate(models, synthetic_dataset)
        for target in Target:
            assert report.evaluated[target] + report.skipped[target] == report.test_size
            assert report.per_target[target] > 0
        assert [row.get_field(0) for row in report.rows()] == ["cp", "latency", "lut"]
        assert [row.get_field(0) for row in report.design_rows()] == ["synth"]

    def test_missing_labels_reported_as_na(self, linear_dataset, make_record, make_vector, caplog):
        model = train(ModelKind.GBT, linear_dataset, Target.LATENCY, {"n_estimators": 20})
        unlabeled = Dataset(
            tuple(make_record(f"u{i}", make_vector({"instr_total": i}), latency=None) for i in range(5))
        )
        with caplog.at_level(logging.WARNING):
            report = evaluate([model], unlabeled)
        assert report.per_target[Target.LATENCY] is None
        assert report.r_squared[Target.LATENCY] is None
        assert report.skipped[Target.LATENCY] == 5
        assert "reported as NA" in caplog.text

    def test_memorizing_model(self, noiseless_dataset):
        params = {"n_estimators": 1, "max_depth": 0, "bootstrap": False, "max_features": "all"}
        model = train(ModelKind.RF, noiseless_dataset, Target.CP, params)
        # variants with identical inputs share labels, one unpruned tree reproduces all of them
        report = evaluate([model], noiseless_dataset)
        assert report.per_target[Target.CP] == pytest.approx(0, abs=1e-9)


class TestLearningCurve:
    def test_points(self, linear_dataset):
        points = learning_curve(
            linear_dataset, ModelKind.GBT, Target.CP, [0.4, 1.0], seed=0,
            hyperparams={"n_estimators": 20},
        )
        assert [p.fraction for p in points] == [0.4, 1.0]
        assert [p.get_field(1) for p in points] == [12, 30]

    def test_single_fraction(self, linear_dataset):
        points = learning_curve(linear_dataset, ModelKind.RF, Target.CP, [1.0], seed=0,
                                hyperparams={"n_estimators": 10})
        assert len(points) == 1

    @pytest.mark.parametrize("fraction", [0.0, 1.5, -0.2])
    def test_bad_fraction(self, linear_dataset, fraction):
        with pytest.raises(BadHyperparam):
            learning_curve(linear_dataset, ModelKind.GBT, Target.CP, [0.5, fraction], seed=0)

    def test_too_small_training_part(self, linear_dataset):
        with pytest.raises(InsufficientData):
            learning_curve(linear_dataset, ModelKind.GBT, Target.CP, [0.1], seed=0)

    def test_more_data_helps(self, noiseless_dataset):
        params = {"n_estimators": 100}
        curves = [
            learning_curve(noiseless_dataset, ModelKind.GBT, Target.CP, [0.05, 0.3, 0.8], seed, params)
            for seed in range(10)
        ]
        small, medium, large = (np.mean([c[i].r_squared for c in curves]) for i in range(3))
        assert large > small
        assert all(c[1].r_squared >= 0.7 for c in curves)
        assert medium >= 0.7


class TestModelComparison:
    @pytest.fixture(scope="class")
    def comparison(self, synthetic_dataset):
        return model_comparison(synthetic_dataset, list(Target), seed=0, kinds=[ModelKind.GBT, ModelKind.RF])

    def test_rows(self, comparison):
        assert [row.get_field(0) for row in comparison] == ["gbt", "rf", MEAN_BASELINE]

    def test_boosting_beats_baseline(self, comparison):
        gbt, _, mean = comparison
        for target in Target:
            assert gbt.mape(target) <= 15
            assert gbt.mape(target) <= 0.5 * mean.mape(target)

    def test_forest_beats_baseline(self, comparison):
        _, rf, mean = comparison
        for target in Target:
            assert rf.mape(target) < mean.mape(target)

    def test_constant_labels(self, make_record, make_vector, fast_hyperparams):
        dataset = Dataset(
            tuple(
                make_record(f"v{i}", make_vector({"instr_total": i}), cp=3.0, latency=40, luts=700)
                for i in range(40)
            )
        )
        rows = model_comparison(dataset, list(Target), seed=1, hyperparams=fast_hyperparams)
        assert [row.get_field(0) for row in rows] == ["gbt", "rf", "mlp", MEAN_BASELINE]
        for row in rows:
            for target in Target:
                assert row.mape(target) == pytest.approx(0, abs=1e-6)

    def test_external_estimates(self, linear_dataset):
        rows = model_comparison(
            linear_dataset, [Target.CP], seed=1, kinds=[ModelKind.GBT],
            hyperparams=FAST_HYPERPARAMS, baseline_estimates={Target.CP: 12.5},
        )
        assert rows[-1].get_field(0) == EXTERNAL_BASELINE
        assert rows[-1].mape(Target.CP) == 12.5
        assert rows[-1].mape(Target.LUT) is None

    def test_deterministic(self, linear_dataset):
        def run():
            rows = model_comparison(linear_dataset, list(Target), seed=3, hyperparams=FAST_HYPERPARAMS)
            return [row.as_list() for row in rows]

        assert run() == run()


class TestComparisonProtocols:
    @pytest.fixture(scope="class")
    def three_designs(self):
        return synthetic_generate(60, seed=5, noise_level=0.05, designs=3)

    def test_groups(self, three_designs):
        per_design = comparison_groups(three_designs, SplitProtocol.PER_DESIGN)
        assert list(per_design) == ["synth0", "synth1", "synth2"]
        assert all(len(part) == 60 for part in per_design.values())
        unified = comparison_groups(three_designs, SplitProtocol.UNIFIED)
        assert list(unified) == [UNIFIED_GROUP]
        assert len(unified[UNIFIED_GROUP]) == 180

    def test_classes_merge_designs(self, three_designs):
        groups = comparison_groups(
            three_designs, SplitProtocol.CLUSTER, {"synth0": "loops", "synth2": "loops"}
        )
        assert sorted(groups) == ["loops", "synth1"]
        assert len(groups["loops"]) == 120
        assert {r.design for r in groups["loops"]} == {"synth0", "synth2"}

    def test_cluster_without_classes_is_per_design(self, three_designs):
        def run(protocol):
            rows = model_comparison(
                three_designs, [Target.CP], seed=2, kinds=[ModelKind.GBT],
                hyperparams=FAST_HYPERPARAMS, protocol=protocol,
            )
            return [row.as_list() for row in rows]

        assert run(SplitProtocol.CLUSTER) == run(SplitProtocol.PER_DESIGN)

    def test_unified_beats_baseline(self, three_designs):
        gbt, mean = model_comparison(
            three_designs, [Target.CP, Target.LUT], seed=2, kinds=[ModelKind.GBT],
            protocol=SplitProtocol.UNIFIED,
        )
        for target in (Target.CP, Target.LUT):
            assert gbt.mape(target) < mean.mape(target)

    def test_unified_validation_has_no_training_inputs(self, make_record, make_vector, caplog):
        records = [
            make_record(f"v{i}", make_vector({"instr_total": i % 10}), cp=1.0 + i % 10, design=f"d{i % 2}")
            for i in range(40)
        ]
        with caplog.at_level(logging.WARNING):
            rows = model_comparison(
                Dataset(tuple(records)), [Target.CP], seed=0, kinds=[ModelKind.GBT],
                hyperparams=FAST_HYPERPARAMS, protocol=SplitProtocol.UNIFIED,
            )
        assert "test set is empty" in caplog.text
        assert rows[0].mape(Target.CP) is None

    @pytest.mark.parametrize("fraction", [0.0, 1.0])
    def test_bad_train_fraction(self, linear_dataset, fraction):
        with pytest.raises(BadHyperparam):
            model_comparison(
                linear_dataset, [Target.CP], seed=0, train_fraction=fraction,
                protocol=SplitProtocol.UNIFIED,
            )


def dominates(first, second):
    return first[0] <= second[0] and first[1] <= second[1] and first != second


class TestParetoIndices:
    def test_small_set(self):
        points = [(1, 5), (2, 3), (3, 4), (4, 1), (1, 6), (2, 3)]
        assert pareto_indices(points) == [0, 1, 3]

    def test_empty(self):
        assert pareto_indices([]) == []

    def test_random_points(self):
        rng = np.random.default_rng(21)
        for _ in range(50):
            points = [tuple(p) for p in rng.integers(0, 20, size=(30, 2)).tolist()]
            front = pareto_indices(points)
            assert [points[i][0] for i in front] == sorted(points[i][0] for i in front)
            for index in front:
                assert not any(dominates(other, points[index]) for other in points)
            for index in set(range(len(points))) - set(front):
                assert any(
                    points[i] == points[index] or dominates(points[i], points[index]) for i in front
                )


class TestParetoFront:
    @pytest.fixture(scope="class")
    def memorizing_models(self, noiseless_dataset):
        params = {"n_estimators": 1, "max_depth": 0, "bootstrap": False, "max_features": "all"}
        return {
            target: train(ModelKind.RF, noiseless_dataset, target, params, seed=0)
            for target in (Target.LATENCY, Target.LUT)
        }

    def test_memorizing_models_find_the_actual_front(self, memorizing_models, noiseless_dataset):
        labels = {r.key: r.labels for r in noiseless_dataset}
        report = pareto_front(memorizing_models, [(r.key, r.features) for r in noiseless_dataset], labels)
        assert report.actual_front
        predicted = [(round(row.get_field(4)), round(row.get_field(5))) for row in report.rows]
        assert predicted == [(labels[k].latency_cycles, labels[k].luts) for k in report.actual_front]
        assert 0 < report.matched() <= len(report.actual_front)

    def test_front_is_a_trade_off(self, noiseless_dataset):
        train_part = noiseless_dataset.subset(noiseless_dataset.records[:300])
        models = {
            target: train(ModelKind.GBT, train_part, target, FAST_HYPERPARAMS[ModelKind.GBT], seed=1)
            for target in (Target.LATENCY, Target.LUT)
        }
        test_part = noiseless_dataset.records[300:]
        report = pareto_front(
            models, [(r.key, r.features) for r in test_part], {r.key: r.labels for r in test_part}
        )
        latencies = [row.get_field(4) for row in report.rows]
        luts = [row.get_field(5) for row in report.rows]
        assert latencies == sorted(latencies)
        assert all(a > b for a, b in zip(luts, luts[1:]))
        assert all(row.on_actual_front is not None for row in report.rows)
        assert report.rows[0].header[4:6] == ("Latency (clock cycles)", "# of LUTs")

    def test_unlabeled_candidates(self, memorizing_models, noiseless_dataset):
        report = pareto_front(memorizing_models, [(r.key, r.features) for r in noiseless_dataset])
        assert report.actual_front is None
        assert all(row.on_actual_front is None for row in report.rows)
        assert report.matched() == 0

    def test_variants_without_labels_are_not_judged(self, memorizing_models, noiseless_dataset):
        records = noiseless_dataset.records[:50]
        labels = {r.key: r.labels for r in records[:10]}
        report = pareto_front(memorizing_models, [(r.key, r.features) for r in records], labels)
        for row in report.rows:
            assert (row.on_actual_front is None) == (row.key not in labels)
        assert set(report.actual_front) <= set(labels)

    def test_needs_latency_and_lut(self, memorizing_models, noiseless_dataset):
        candidates = [(r.key, r.features) for r in noiseless_dataset.records[:5]]
        with pytest.raises(MissingModel, match="lut"):
            pareto_front({Target.LATENCY: memorizing_models[Target.LATENCY]}, candidates)

    def test_no_candidates(self, memorizing_models):
        with pytest.raises(InsufficientData):
            pareto_front(memorizing_models, [])


class TestFrequencySweep:
    def test_rows(self, cp_model, synthetic_dataset):
        rows = frequency_sweep({Target.CP: cp_model}, synthetic_dataset.records[0].features, FREQUENCIES)
        assert len(rows) == 8
        assert [row.freq_mhz for row in rows] == list(FREQUENCIES)
        assert rows[0].header == ("Frequency (MHz)", "Clock Period (ns)", "Latency (clock cycles)", "# of LUTs")
        assert rows[0].prediction(Target.LUT) is None

    def test_period_shrinks_with_frequency(self, cp_model, synthetic_dataset):
        for record in synthetic_dataset.records[:20]:
            rows = frequency_sweep({Target.CP: cp_model}, record.features, [100.0, 500.0])
            assert rows[1].prediction(Target.CP) <= rows[0].prediction(Target.CP)

    def test_frequency_blind_model(self, make_record, make_vector):
        dataset = Dataset(
            tuple(
                make_record(f"v{i}", make_vector({"instr_total": i}, 100.0), cp=1.0 + i / 10)
                for i in range(30)
            )
        )
        model = train(ModelKind.GBT, dataset, Target.CP, {"n_estimators": 20})
        rows = frequency_sweep({Target.CP: model}, make_vector({"instr_total": 7}), FREQUENCIES)
        assert len({row.prediction(Target.CP) for row in rows}) == 1

    def test_forest_stays_in_label_range(self, synthetic_dataset):
        model = train(ModelKind.RF, synthetic_dataset, Target.CP, FAST_HYPERPARAMS[ModelKind.RF])
        labels = [r.labels.cp_ns for r in synthetic_dataset]
        rows = frequency_sweep({Target.CP: model}, synthetic_dataset.records[5].features, [1.0, 100.0, 5000.0])
        for row in rows:
            assert min(labels) <= row.prediction(Target.CP) <= max(labels)
