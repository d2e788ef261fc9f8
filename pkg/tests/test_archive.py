import json

import numpy as np
import pytest

from dorqf.archive import fit_from_payload, fit_to_payload, load_fit, save_fit
from dorqf.model import fit_dorqf
from dorqf.simulate import ScenarioSpec, generate_replication


@pytest.fixture(scope="module")
def fit_and_data():
    spec = ScenarioSpec(scenario="A1", n=40, L=100, m=30, reps=1, seed=3,
                        noise_is_sd=True)
    data, _, _ = generate_replication(spec, 0)
    fit = fit_dorqf(data, 3, provenance={"source": "unit-test"})
    return data, fit


def test_round_trip_bit_exact(fit_and_data, tmp_path):
    data, fit = fit_and_data
    path = tmp_path / "fit.json"
    save_fit(fit, path)
    loaded = load_fit(path)
    np.testing.assert_array_equal(loaded.psi_r, fit.psi_r)
    np.testing.assert_array_equal(loaded.psi_ur, fit.psi_ur)
    np.testing.assert_array_equal(loaded.omega, fit.omega)
    np.testing.assert_array_equal(loaded.delta_n, fit.delta_n)
    assert loaded.active_set == fit.active_set
    assert loaded.covariate_scales == fit.covariate_scales
    assert loaded.predictor_scale == fit.predictor_scale
    assert loaded.provenance == fit.provenance


def test_round_trip_preserves_predictions(fit_and_data, tmp_path):
    data, fit = fit_and_data
    path = tmp_path / "fit.json"
    save_fit(fit, path)
    loaded = load_fit(path)
    z = np.array([0.4])
    qx = data.predictor[0] * (fit.predictor_scale[1] - fit.predictor_scale[0]) \
        + fit.predictor_scale[0]
    np.testing.assert_array_equal(loaded.predict(z, qx), fit.predict(z, qx))


def test_payload_is_json_stable(fit_and_data):
    _, fit = fit_and_data
    payload = fit_to_payload(fit)
    # serialization must not lose precision anywhere
    back = fit_from_payload(json.loads(json.dumps(payload)))
    np.testing.assert_array_equal(back.psi_r, fit.psi_r)


def test_loaded_fit_has_no_residuals(fit_and_data, tmp_path):
    _, fit = fit_and_data
    path = tmp_path / "fit.json"
    save_fit(fit, path)
    assert load_fit(path).residuals is None


def test_rejects_wrong_format_tag(fit_and_data, tmp_path):
    _, fit = fit_and_data
    payload = fit_to_payload(fit)
    payload["format"] = "other/1"
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(payload))
    with pytest.raises(ValueError, match="format"):
        load_fit(path)


def test_rejects_tampered_constraint_labels(fit_and_data, tmp_path):
    _, fit = fit_and_data
    payload = fit_to_payload(fit)
    payload["constraint_labels"] = payload["constraint_labels"][:-1]
    path = tmp_path / "bad2.json"
    path.write_text(json.dumps(payload))
    with pytest.raises(ValueError):
        load_fit(path)


def test_submodel_round_trip(tmp_path):
    spec = ScenarioSpec(scenario="B", n=25, L=80, m=20, reps=1, seed=4,
                        noise_is_sd=True)
    data, _, _ = generate_replication(spec, 0)
    fit = fit_dorqf(data, 2)
    path = tmp_path / "dod.json"
    save_fit(fit, path)
    loaded = load_fit(path)
    assert loaded.q == 0
    assert loaded.layout.has_distributional
    np.testing.assert_array_equal(loaded.psi_r, fit.psi_r)
