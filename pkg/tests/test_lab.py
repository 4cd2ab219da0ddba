from __future__ import annotations

import json

import pytest

from scriplab.errors import ConfigError, SchemaError
from scriplab.lab.cli import main, parse_seeds
from scriplab.lab.config import ExperimentConfig, from_json, resolve
from scriplab.lab.experiments import Table, format_value, run_experiment, verify_manifest
from scriplab.lab.plots import emit_plot


def test_precedence_preset_file_flags():
    cfg = resolve("fig1", {"rounds": 1000, "alpha": 0.2}, {"rounds": 500})
    assert cfg.n == 1000 and cfg.k == 5  # preset
    assert cfg.alpha == 0.2  # file
    assert cfg.rounds == 500  # flag beats file


def test_round_trip_is_exact():
    cfg = resolve("sim", {"delta": 0.1 + 0.2, "seeds": [3, 1, 2]})
    again = from_json(cfg.to_json())
    assert again == cfg and again.to_json() == cfg.to_json()


@pytest.mark.parametrize("layer,path", [
    ({"n": "ten"}, "n"),
    ({"seeds": [1, "x"]}, "seeds[1]"),
    ({"beta": 1.5}, "beta"),
    ({"bogus": 1}, "bogus"),
    ({"m": 0.0015}, "m"),
    ({"deltas": [0.5, 1.0]}, "deltas[1]"),
])
def test_errors_carry_field_path(layer, path):
    with pytest.raises(ConfigError) as e:
        resolve("sim", layer)
    assert e.value.path == path


def test_parse_seeds():
    assert parse_seeds("1,3-5, 9") == [1, 3, 4, 5, 9]


def test_csv_formatting():
    assert format_value(1 / 3) == "0.333333333333"
    assert format_value(True) == "1" and format_value(7) == "7"
    assert Table("t.csv", ("a", "b"), [(1, 0.5)]).render() == "a,b\n1,0.5\n"


def _small_fig1(out, **extra):
    return resolve("fig1", {"n": 200, "rounds": 600, "seeds": [1, 2, 3], "out": str(out), **extra})


def test_manifest_and_tamper_detection(tmp_path):
    res = run_experiment(_small_fig1(tmp_path))
    manifest = json.loads(res.manifest.read_text())
    assert manifest["seeds"] == [1, 2, 3]
    assert set(manifest["outputs"]) == {"config.json", "fig1.csv"}
    assert verify_manifest(tmp_path) == []
    csv = tmp_path / "fig1.csv"
    raw = csv.read_bytes()
    assert b"\r" not in raw and raw.startswith(b"round,meanDistance,stderr\n")
    csv.write_bytes(raw.replace(b"0.", b"1.", 1))
    assert verify_manifest(tmp_path) == ["fig1.csv"]


def test_written_config_reproduces_run(tmp_path):
    a = run_experiment(_small_fig1(tmp_path / "a"))
    cfg = from_json((tmp_path / "a" / "config.json").read_text())
    cfg.out = str(tmp_path / "b")
    run_experiment(cfg)
    assert (tmp_path / "a" / "fig1.csv").read_bytes() == (tmp_path / "b" / "fig1.csv").read_bytes()
    assert a.out_dir.name == "a"


def test_worker_count_does_not_change_results(tmp_path):
    run_experiment(_small_fig1(tmp_path / "one", workers=1))
    run_experiment(_small_fig1(tmp_path / "two", workers=2))
    assert (tmp_path / "one" / "fig1.csv").read_bytes() == (tmp_path / "two" / "fig1.csv").read_bytes()


def test_plots_are_deterministic(tmp_path):
    data = tmp_path / "fig4.csv"
    data.write_text("gamma,br\n0,0\n1,0\n2,3\n3,3\n4,3\n")
    a = emit_plot(data, "fig4", tmp_path / "a.svg").read_bytes()
    b = emit_plot(data, "fig4", tmp_path / "b.svg").read_bytes()
    assert a == b and a.lstrip().startswith(b"<?xml")


def test_empty_dataset_warns(tmp_path):
    data = tmp_path / "fig5.csv"
    data.write_text("delta,mStar,efficiency,degenerate\n")
    with pytest.warns(UserWarning):
        out = emit_plot(data, "fig5")
    assert out.exists()


def test_schema_mismatch(tmp_path):
    data = tmp_path / "x.csv"
    data.write_text("gamma,wrong\n0,0\n")
    with pytest.raises(SchemaError):
        emit_plot(data, "fig4")


def test_cli_exit_codes(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["fig4", "--n", "1000", "--out", str(out), "--plot"]) == 0
    assert (out / "fig4.svg").exists()
    assert main(["verify", "--out", str(out)]) == 0
    (out / "fig4.csv").write_text("tampered\n")
    assert main(["verify", "--out", str(out)]) == 3
    assert main(["sim", "--beta", "2", "--out", str(tmp_path / "x")]) == 1
    assert main(["sim", "--n", "1000", "--rounds", "1000000", "--out", str(tmp_path / "y")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["sim", "--config", str(bad)]) == 1
    err = capsys.readouterr().err
    assert "beta" in err and "budget" in err


def test_config_file_flags_override(tmp_path):
    f = tmp_path / "c.json"
    f.write_text(json.dumps({"experiment": "sim", "n": 50, "m": 2.0, "rounds": 100, "seeds": [4]}))
    out = tmp_path / "o"
    assert main(["sim", "--config", str(f), "--rounds", "200", "--out", str(out)]) == 0
    written = json.loads((out / "config.json").read_text())
    assert written["rounds"] == 200 and written["n"] == 50 and written["seeds"] == [4]


def test_dataclass_defaults_are_valid():
    assert isinstance(resolve("entropy"), ExperimentConfig)
