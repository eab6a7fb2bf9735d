import math

import pytest

import deltaflow as df


@pytest.fixture(scope="module")
def dataset():
    return df.generate(days=10, seed=7, ar_coeff=0.6, rho=0.7, ramp_coupling=0.4)


def test_registry():
    assert df.model_tags() == ["flow", "gaussian", "copula", "hist-multi", "hist-uni"]
    assert "price_time" in df.feature_groups()


def test_dataset_shape(dataset):
    assert dataset.n_hours == 10 * 24
    assert dataset.end() - dataset.start() == 10 * 24 * 3600
    assert df.format_time(dataset.start()) == "2021-01-01 00:00"
    assert df.parse_time("2021-01-01 00:00") == dataset.start()


def test_generate_is_deterministic(dataset, tmp_path):
    again = df.generate(days=10, seed=7, ar_coeff=0.6, rho=0.7, ramp_coupling=0.4)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    dataset.save_csv(str(a))
    again.save_csv(str(b))
    assert a.read_bytes() == b.read_bytes()


def test_train_forecast_evaluate(dataset):
    model = df.train(dataset, model="hist-multi")
    assert model.tag == "hist-multi"
    assert model.train_end > model.train_start

    fcs = df.forecast(dataset, model, samples=50, seed=3)
    assert len(fcs) == 2 * 24  # ten days, 80/20 split
    assert all(len(f.samples) == 50 for f in fcs)
    assert fcs[0].model == "hist-multi"

    report = df.evaluate(dataset, fcs)
    assert report["model"] == "hist-multi"
    assert report["hours"] == len(fcs)
    assert report["energy"]["median"] > 0.0
    assert 0.0 <= report["coverage"]["50"]["overall"] <= 1.0

    repeat = df.forecast(dataset, model, samples=50, seed=3)
    assert [f.samples for f in repeat] == [f.samples for f in fcs]
    other = df.forecast(dataset, model, samples=50, seed=4)
    assert [f.samples for f in other] != [f.samples for f in fcs]


def test_model_round_trip(dataset, tmp_path):
    model = df.train(dataset, model="gaussian", features=["price_time"], epochs=10)
    path = tmp_path / "model.json"
    model.save(str(path))
    loaded = df.load_model(str(path))
    assert loaded.tag == "gaussian"
    assert loaded.features == ["price_time"]

    a = df.forecast(dataset, model, samples=5, seed=1)
    b = df.forecast(dataset, loaded, samples=5, seed=1)
    assert [f.samples for f in a] == [f.samples for f in b]


def test_forecast_csv_round_trip(dataset, tmp_path):
    model = df.train(dataset, model="hist-uni")
    fcs = df.forecast(dataset, model, samples=5, seed=9)
    path = tmp_path / "fc.csv"
    df.save_forecast_csv(fcs, str(path))
    loaded = df.load_forecast_csv(str(path))
    assert [f.hour for f in loaded] == [f.hour for f in fcs]
    assert [f.samples for f in loaded] == [f.samples for f in fcs]


def test_scores_match_manual():
    samples = [[1.0, 2.0, 3.0, 4.0], [2.0, 1.0, 4.0, 3.0]]
    obs = [1.5, 1.5, 3.5, 3.5]

    def dist(a, b):
        return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))

    m = len(samples)
    expected = sum(dist(s, obs) for s in samples) / m - sum(
        dist(a, b) for a in samples for b in samples
    ) / (2 * m * m)
    assert df.energy_score(samples, obs) == pytest.approx(expected, abs=1e-12)

    assert df.winkler_score(-1.0, 2.0, 0.0, 0.9) == pytest.approx(3.0, abs=1e-12)
    assert df.winkler_score(-1.0, 2.0, 4.0, 0.9) == pytest.approx(3.0 + 2 * 2 / 0.1, abs=1e-12)

    assert df.variogram_score(samples, obs, gamma=0.5, scaled=True) >= 0.0


def test_errors_surface_as_exceptions(dataset):
    with pytest.raises(RuntimeError, match="UnknownModel"):
        df.train(dataset, model="nope")
    with pytest.raises(RuntimeError, match="InvalidConfig"):
        df.generate(days=0)
    with pytest.raises(RuntimeError, match="FileUnreadable"):
        df.load_model("/nonexistent/model.json")


def test_explain(dataset):
    report = df.explain(dataset, trees=10, seed=1)
    names = report["feature_names"]
    assert "delta_lag1_00" in names
    assert len(report["feature_groups"]) == len(names)
    assert len(report["importance"]) == 4
    assert all(len(fi) == len(names) for fi in report["importance"])
    assert len(report["r2"]) == 4
    assert report["train_rows"] > report["test_rows"] > 0
