import json
import math

import numpy as np
import pytest

import tvacal


def test_softmax_and_predict():
    probs = tvacal.softmax(np.array([[math.log(2.0), 0.0]]))
    assert probs[0] == pytest.approx([2 / 3, 1 / 3], abs=1e-15)
    summary = tvacal.predict(np.array([[0.2, 0.7, 0.1]]), np.array([1]))
    assert summary["predicted"].tolist() == [1]
    assert summary["confidence"].tolist() == [0.7]
    assert summary["correct"].tolist() == [1]


def test_metrics():
    assert tvacal.ece([0.9, 0.9, 0.6, 0.6], [1, 0, 1, 1], bins=2) == 0.0
    assert tvacal.ece([0.3, 0.8], [1, 1], bins=2) == pytest.approx(0.45)
    assert tvacal.brier([1.0, 0.7], [1, 0]) == pytest.approx(0.245)
    assert tvacal.auroc([0.9, 0.1], [1, 0]) == 1.0
    with pytest.raises(tvacal.UndefinedMetric):
        tvacal.auroc([0.9, 0.1], [1, 1])
    bins = tvacal.reliability_diagram([0.9, 0.9, 0.6, 0.6], [1, 0, 1, 1], bins=2)
    assert [b["count"] for b in bins] == [0, 4]


def test_errors_map_to_exceptions():
    with pytest.raises(tvacal.InvalidParameter):
        tvacal.softmax(np.zeros((1, 2)), temperature=0.0)
    with pytest.raises(tvacal.InvalidInput):
        tvacal.predict(np.array([[0.5, 0.5]]), np.array([0, 1]))
    assert issubclass(tvacal.FormatError, tvacal.Error)


def test_generate_and_split_are_deterministic():
    a = tvacal.generate(classes=5, samples=100, temperature=1.5, seed=3)
    b = tvacal.generate(classes=5, samples=100, temperature=1.5, seed=3)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    cal, test = tvacal.split(*a, fraction=0.5, seed=1)
    assert len(cal) == 50 and len(test) == 50
    assert sorted(np.concatenate([cal, test]).tolist()) == list(range(100))


def test_tva_histogram_preserves_predictions():
    logits, labels = tvacal.generate(classes=10, samples=4000, temperature=2.5, seed=1)
    cal = tvacal.Calibrator.fit("hb", "tva", logits[:2000], labels[:2000])
    assert cal.prediction_preserving
    out = cal.apply(logits[2000:], labels[2000:])
    assert np.array_equal(out["predicted"], out["raw"]["predicted"])
    assert out["probabilities"] is None
    assert len(set(out["confidence"].tolist())) <= 10
    before = tvacal.Calibrator().evaluate(logits[2000:], labels[2000:])
    after = cal.evaluate(logits[2000:], labels[2000:])
    assert after["accuracy"] == before["accuracy"]
    assert after["ece"] < before["ece"]


def test_temperature_scaling_recovers_distortion():
    logits, labels = tvacal.generate(classes=10, samples=5000, temperature=2.5, seed=2)
    cal = tvacal.Calibrator.fit("ts", "tva", logits, labels)
    model = json.loads(cal.to_json())["model"]
    assert abs(model["T"] - 2.5) <= 0.25


def test_invalid_combination():
    logits, labels = tvacal.generate(classes=3, samples=50, seed=0)
    with pytest.raises(tvacal.InvalidParameter):
        tvacal.Calibrator.fit("ts", "ova", logits, labels)


def test_json_and_dataset_round_trip(tmp_path):
    logits, labels = tvacal.generate(classes=4, samples=300, temperature=2.0, seed=5)
    cal = tvacal.Calibrator.fit("iso", "ova", logits, labels)
    path = tmp_path / "iso.json"
    cal.save(path)
    back = tvacal.Calibrator.load(path)
    assert back.to_json() == cal.to_json()
    a = cal.apply(logits, labels)
    b = back.apply(logits, labels)
    assert np.array_equal(a["probabilities"], b["probabilities"])

    tvacal.save_dataset(tmp_path / "d.bin", logits, labels)
    l2, y2 = tvacal.load_dataset(tmp_path / "d.bin")
    assert np.array_equal(y2, labels)
    assert np.allclose(l2, logits, rtol=1e-6)
    tvacal.save_dataset(tmp_path / "d.csv", logits, labels)
    l3, _ = tvacal.load_dataset(tmp_path / "d.csv")
    assert np.array_equal(l3, logits)
