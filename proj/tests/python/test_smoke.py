"""Smoke tests for the python bindings."""

import math

import pytest

eden = pytest.importorskip("eden_survival")


def test_version_and_vocabulary():
    assert eden.__version__
    vocab = eden.vocabulary()
    assert len(vocab) == 47
    assert "Metastasis" in vocab
    assert "Lumpectomy/Axillary surgery" in vocab


def test_discount():
    assert eden.discount(0.0) == pytest.approx(1.0)
    assert eden.discount(math.e**2 - math.e) == pytest.approx(0.5)
    assert eden.discount(10.0) < eden.discount(1.0)


def test_chain_rule_and_prediction():
    w = eden.chain_rule([0.5, 0.5, 0.5])
    assert w == [0.5, 0.75, 0.875]
    h = eden.hazards_from_event_rate(w)
    assert h == pytest.approx([0.5, 0.5, 0.5])
    pred = eden.extract_prediction(w, [10, 20, 30], 0.6)
    assert pred["decision"] is True
    assert pred["time"] == 20
    assert pred["score"] == 0.875


def test_merge_consecutive():
    merged = eden.merge_consecutive(
        [(0, ["Mastectomy"]), (3, ["Mastectomy"]), (10, ["Chemotherapy"])]
    )
    assert merged == [(0, ["Mastectomy"]), (10, ["Chemotherapy"])]


def test_metrics():
    assert eden.auc([0.9, 0.4, 0.6], [True, False, True]) == 1.0
    f1, acc = eden.f1_acc([True, False], [True, False])
    assert (f1, acc) == (1.0, 1.0)
    times, survival = eden.kaplan_meier([True, True], [10, 20])
    assert times == [0.0, 10.0, 20.0]
    assert survival == [1.0, 0.5, 0.0]


def test_generate_stats_and_adhoc():
    cohort = eden.generate_cohort({"patients": 120, "seed": 5, "noise_rate": 0.0})
    assert len(cohort) == 120
    stats = cohort.stats()
    assert 0.70 < stats["censoring_rate"] < 0.97
    patient = cohort.patient(0)
    assert patient["visits"][0][0] == 0  # first visit at day 0

    preds = eden.adhoc_predict(cohort)
    truths = [cohort.patient(i)["labels"]["metastatic"][0] for i in range(len(cohort))]
    f1, _ = eden.f1_acc(preds["metastatic"]["decisions"], truths)
    assert f1 == 1.0  # noise-free cohorts are separable for the trigger rules


def test_cohort_roundtrip(tmp_path):
    cohort = eden.generate_cohort({"patients": 20, "seed": 3})
    path = str(tmp_path / "c.cohort")
    cohort.save(path)
    again = eden.read_cohort(path)
    assert len(again) == 20
    assert again.event_names == cohort.event_names


def test_micro_training_runs():
    cohort = eden.generate_cohort({"patients": 120, "seed": 8, "noise_rate": 0.0})
    train_set = cohort.slice(0, 90)
    val_set = cohort.slice(90, 120)
    model = eden.train(
        train_set,
        val_set,
        {"epochs": 2, "n_emb": 4, "n_hidden": 6, "fc_size": 8, "dropout_rate": 0.0, "seed": 1},
    )
    assert len(model.thresholds) == 3
    report = model.evaluate(val_set)
    for name in ("locoregional", "metastatic", "second_cancer"):
        assert 0.0 <= report[name]["f1"] <= 1.0
        assert report[name]["brier"] >= 0.0
    rates = model.event_rates(val_set, 0)
    for row in rates:
        assert all(0.0 <= x <= 1.0 for x in row)
    # event rates are non-decreasing per type (survival output)
    for s in range(3):
        for j in range(1, len(rates)):
            assert rates[j][s] >= rates[j - 1][s]


def test_model_save_load(tmp_path):
    cohort = eden.generate_cohort({"patients": 120, "seed": 8, "noise_rate": 0.0})
    model = eden.train(
        cohort.slice(0, 90),
        cohort.slice(90, 120),
        {"epochs": 1, "n_emb": 4, "n_hidden": 6, "fc_size": 8, "dropout_rate": 0.0, "seed": 1},
    )
    path = str(tmp_path / "m.ckpt")
    model.save(path)
    again = eden.load_model(path, model.thresholds)
    a = model.predict(cohort.slice(90, 120))
    b = again.predict(cohort.slice(90, 120))
    assert a["metastatic"]["scores"] == b["metastatic"]["scores"]
