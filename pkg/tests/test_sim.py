import csv
import io
import json

import numpy as np
import pytest

from gdlstbc import design, sim
from gdlstbc.design import SpecError

from conftest import desk


def test_channel_moments():
    rng = np.random.default_rng(0)
    H = np.stack([sim.sample_channel(2, 2, rng).H for _ in range(20000)])
    assert abs(np.mean(np.abs(H) ** 2) - 1) < 0.02
    assert abs(np.mean(H.real ** 2) - 0.5) < 0.01
    assert abs(np.mean(H)) < 0.01
    with pytest.raises(ValueError):
        sim.sample_channel(0, 2, rng)


def test_noise_variance():
    rng = np.random.default_rng(1)
    X = np.zeros((2, 2))
    Y = np.stack([sim.transmit(X, np.eye(2), 10.0, rng, energy=1.0)[0] for _ in range(20000)])
    assert abs(np.mean(np.abs(Y) ** 2) - 1) < 0.02


@pytest.mark.parametrize("name", ["alamouti", "golden_s2", "fe3x3", "cda2x2"])
def test_average_energy_matches_codebook(name):
    spec = desk(name)
    _, _, X = design.codebook(spec)
    assert np.isclose(sim.average_energy(spec), np.mean(np.linalg.norm(X, axis=(1, 2)) ** 2))


def test_snr_scale():
    spec = desk("alamouti")
    s = sim.snr_scale(spec, 20.0)
    assert np.isclose(s ** 2 * sim.average_energy(spec) / spec.T, 100.0)


def test_transmit_shape_check():
    with pytest.raises(ValueError):
        sim.transmit(np.zeros((3, 2)), np.eye(2), 0.0, np.random.default_rng())


def test_oracle_matches_f():
    spec = desk("golden_s2")
    rng = np.random.default_rng(3)
    H = sim.sample_channel(2, 2, rng).H
    Y = rng.normal(size=(2, 2)) + 0j
    r = sim.oracle_ml(spec, H, Y)
    X = spec.codeword(spec.symbols(r.assignment))
    assert np.isclose(r.metric, np.linalg.norm(Y - H @ X) ** 2)
    assert r.gap >= 0


def test_trial_streams_are_independent():
    a = sim.trial_rng(0, 0, 5).normal()
    assert a == sim.trial_rng(0, 0, 5).normal()
    assert a != sim.trial_rng(0, 0, 6).normal()
    assert a != sim.trial_rng(0, 1, 5).normal()


def test_experiment_is_deterministic():
    cfg = {"code": "fe3x3", "params": sim.DESK_PARAMS["fe3x3"], "trials": 20,
           "snr_db": [0, 15], "seed": 4}
    a = sim.run_experiment(cfg)
    b = sim.run_experiment(cfg)
    assert a.rows == b.rows
    assert len(a.rows) == 2 * 4
    assert all(r["agree_rate"] == 1.0 for r in a.rows)
    assert a.max_metric_error < 1e-8


def test_csv_and_json(tmp_path):
    res = sim.run_experiment({"code": "alamouti", "trials": 5, "decoders": ["gdl", "cml-brute"]})
    p = tmp_path / "out.csv"
    text = res.to_csv(p)
    rows = list(csv.DictReader(io.StringIO(p.read_text())))
    assert tuple(rows[0]) == sim.CSV_COLUMNS
    assert len(rows) == 2 and text == p.read_text()
    d = json.loads(res.to_json())
    assert d["config"]["trials"] == 5 and d["version"].startswith("0.1.0")
    assert len(d["rows"]) == 2


def test_config_errors():
    with pytest.raises(SpecError):
        sim.check_config({})
    with pytest.raises(SpecError):
        sim.check_config({"code": "alamouti", "trails": 3})
    with pytest.raises(SpecError):
        sim.check_config({"code": "alamouti", "decoders": ["sphere"]})
    with pytest.raises(SpecError):
        sim.check_config({"code": "alamouti", "trials": 0})
    assert sim.check_config({"code": "alamouti", "snr_db": 5})["snr_db"] == [5.0]


def test_spec_file_config(tmp_path):
    p = tmp_path / "s.json"
    desk("fe3x3").save(p)
    res = sim.run_experiment({"spec_file": str(p), "trials": 3, "decoders": ["gdl"]})
    assert res.rows[0]["trials"] == 3
