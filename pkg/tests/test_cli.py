import json

import numpy as np
import pytest

from fxcast.cli import main, pair_slug, prepare_pair
from fxcast.config import config_hash, load_config, model_spec_for
from fxcast.dataio import price_csv
from fxcast.models import Architecture, init_params, load_model, predict
from fxcast.synth import noisy_sine


def write_fixture_csv(tmp_path, pair, seed, n=260):
    series = noisy_sine(n=n, seed=seed, pair=pair)
    path = tmp_path / f"{pair_slug(pair)}.csv"
    path.write_text(price_csv(series))
    return path


def write_config(tmp_path, pairs, out_dir, epochs=2, extra_train="",
                 name="exp.toml"):
    pair_lines = "\n".join(f'"{p}" = "{path}"' for p, path in pairs.items())
    text = f"""
version = 1

[data]
bucket_seconds = 300
window_len = 6
train_fraction = 0.8

[data.pairs]
{pair_lines}

[train]
learning_rate = 0.01
epochs = {epochs}
dropout_rate = 0.1
seed = 3
{extra_train}

[model]
hidden_layers = 0
hidden_size = 4
input_activation = "linear"

[output]
out_dir = "{out_dir}"
"""
    path = tmp_path / name
    path.write_text(text)
    return path


@pytest.fixture
def workspace(tmp_path):
    csv_a = write_fixture_csv(tmp_path, "SINE/USD", seed=0)
    csv_b = write_fixture_csv(tmp_path, "WAVE/USD", seed=1)
    out = tmp_path / "out"
    cfg = write_config(tmp_path, {"SINE/USD": csv_a, "WAVE/USD": csv_b}, out)
    return cfg, out, tmp_path


def test_pair_slug():
    assert pair_slug("AUD/USD") == "AUD_USD"
    assert pair_slug("eur-usd 1m") == "eur_usd_1m"


def test_stats_writes_artifacts(workspace, capsys):
    cfg, out, _ = workspace
    assert main(["stats", "--config", str(cfg)]) == 0
    text = (out / "stats.csv").read_text()
    assert (out / "SINE_USD_series.csv").exists()
    assert (out / "WAVE_USD_series.csv").exists()
    assert capsys.readouterr().out == text
    assert text.splitlines()[0].startswith("pair,")
    assert "SINE/USD" in text and "WAVE/USD" in text


def test_stats_with_no_pairs_is_a_usage_error(tmp_path, capsys):
    cfg = write_config(tmp_path, {}, tmp_path / "out")
    assert main(["stats", "--config", str(cfg)]) == 2
    assert "error:" in capsys.readouterr().err


def test_missing_data_file_is_a_data_error(tmp_path, capsys):
    cfg = write_config(tmp_path, {"GONE/USD": tmp_path / "nope.csv"},
                       tmp_path / "out")
    assert main(["stats", "--config", str(cfg)]) == 3
    assert "GONE/USD" in capsys.readouterr().err


def test_train_writes_model_loss_and_manifest(workspace, capsys):
    cfg, out, _ = workspace
    code = main(["train", "--config", str(cfg), "--arch", "lstm",
                 "--pair", "SINE/USD"])
    assert code == 0
    assert (out / "SINE_USD_lstm.fxm").exists()
    loss = (out / "SINE_USD_lstm_loss.csv").read_text()
    assert loss.splitlines()[0] == "epoch,train_mse,val_mse"
    assert len(loss.splitlines()) == 3  # header + 2 epochs
    manifest = json.loads((out / "SINE_USD_lstm_manifest.json").read_text())
    assert manifest["pair"] == "SINE/USD"
    assert manifest["architecture"] == "lstm"
    assert manifest["seed"] == 3
    assert manifest["epochs_completed"] == 2
    assert manifest["config_hash"] == config_hash(load_config(cfg))
    assert manifest["metrics"]["mape"] < 1.0
    stdout = capsys.readouterr().out
    assert "SINE/USD lstm: 2 epochs" in stdout


def test_train_unknown_pair_is_a_usage_error(workspace, capsys):
    cfg, _, _ = workspace
    code = main(["train", "--config", str(cfg), "--arch", "lstm",
                 "--pair", "NOPE/USD"])
    assert code == 2
    assert "NOPE/USD" in capsys.readouterr().err


def test_repeated_training_is_byte_identical(workspace, tmp_path):
    cfg, out, _ = workspace
    other = tmp_path / "rerun"
    args = ["train", "--config", str(cfg), "--arch", "rnn", "--pair", "WAVE/USD"]
    assert main(args) == 0
    assert main(args + ["--out", str(other)]) == 0
    for name in ("WAVE_USD_rnn.fxm", "WAVE_USD_rnn_loss.csv",
                 "WAVE_USD_rnn_manifest.json"):
        assert (out / name).read_bytes() == (other / name).read_bytes()


def test_seed_override_changes_the_model(workspace, tmp_path):
    cfg, out, _ = workspace
    args = ["train", "--config", str(cfg), "--arch", "bp", "--pair", "SINE/USD"]
    assert main(args) == 0
    other = tmp_path / "reseeded"
    assert main(args + ["--seed", "11", "--out", str(other)]) == 0
    assert ((out / "SINE_USD_bp.fxm").read_bytes()
            != (other / "SINE_USD_bp.fxm").read_bytes())
    manifest = json.loads((other / "SINE_USD_bp_manifest.json").read_text())
    assert manifest["seed"] == 11


def test_zero_epoch_training_serializes_the_initialization(tmp_path):
    csv = write_fixture_csv(tmp_path, "SINE/USD", seed=0)
    out = tmp_path / "out"
    cfg = write_config(tmp_path, {"SINE/USD": csv}, out, epochs=0)
    assert main(["train", "--config", str(cfg), "--arch", "lstm",
                 "--pair", "SINE/USD"]) == 0
    params, _ = load_model(out / "SINE_USD_lstm.fxm")
    fresh = init_params(model_spec_for(load_config(cfg), Architecture.LSTM))
    for (name, arr), (_, want) in zip(params.named_arrays(),
                                      fresh.named_arrays()):
        np.testing.assert_array_equal(arr, want, err_msg=name)
    loss = (out / "SINE_USD_lstm_loss.csv").read_text()
    assert loss == "epoch,train_mse,val_mse\n"


def test_compare_renders_a_full_table(tmp_path, capsys):
    csv = write_fixture_csv(tmp_path, "SINE/USD", seed=0)
    out = tmp_path / "out"
    cfg = write_config(tmp_path, {"SINE/USD": csv}, out)
    assert main(["compare", "--config", str(cfg), "--jobs", "1"]) == 0
    table_text = (out / "table.txt").read_text()
    assert "MAE(1e-3)" in table_text and "MAPE(%)" in table_text
    assert "SINE/USD" in table_text
    csv_text = (out / "table.csv").read_text()
    assert csv_text.startswith("pair,model,mae,rmse,mape\n")
    assert len(csv_text.splitlines()) == 4  # header + 3 models
    assert capsys.readouterr().out == table_text


def test_compare_is_deterministic(tmp_path):
    csv = write_fixture_csv(tmp_path, "SINE/USD", seed=0)
    cfg = write_config(tmp_path, {"SINE/USD": csv}, tmp_path / "a")
    assert main(["compare", "--config", str(cfg), "--jobs", "1"]) == 0
    assert main(["compare", "--config", str(cfg), "--jobs", "1",
                 "--out", str(tmp_path / "b")]) == 0
    assert ((tmp_path / "a" / "table.csv").read_bytes()
            == (tmp_path / "b" / "table.csv").read_bytes())


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_compare_marks_failed_cells(tmp_path, capsys):
    csv = write_fixture_csv(tmp_path, "SINE/USD", seed=0)
    out = tmp_path / "out"
    cfg = write_config(tmp_path, {"SINE/USD": csv}, out,
                       extra_train="", name="diverge.toml")
    text = cfg.read_text().replace("learning_rate = 0.01",
                                   "learning_rate = 80.0")
    cfg.write_text(text)
    code = main(["compare", "--config", str(cfg), "--jobs", "1",
                 "--allow-lr-outside-paper"])
    assert code == 4
    captured = capsys.readouterr()
    assert "failed:" in captured.err
    assert "fail" in (out / "table.txt").read_text()


def test_predict_round_trips_through_the_model_file(workspace, capsys):
    cfg, out, _ = workspace
    assert main(["train", "--config", str(cfg), "--arch", "lstm",
                 "--pair", "SINE/USD"]) == 0
    capsys.readouterr()
    window = [1.01, 1.02, 1.03, 1.04, 1.05, 1.06]
    model = out / "SINE_USD_lstm.fxm"
    assert main(["predict", str(model)] + [str(v) for v in window]) == 0
    printed = float(capsys.readouterr().out.strip())
    params, scaler = load_model(model)
    assert printed == predict(params, scaler, np.array(window))


def test_predict_wrong_window_length(workspace, capsys):
    cfg, out, _ = workspace
    assert main(["train", "--config", str(cfg), "--arch", "bp",
                 "--pair", "SINE/USD"]) == 0
    capsys.readouterr()
    code = main(["predict", str(out / "SINE_USD_bp.fxm"), "1.0", "1.1"])
    assert code == 2
    assert "expected a window of 6 prices, got 2" in capsys.readouterr().err


def test_predict_missing_model_file(tmp_path, capsys):
    assert main(["predict", str(tmp_path / "absent.fxm"), "1.0"]) == 3
    assert "error:" in capsys.readouterr().err


def test_env_var_overrides(tmp_path, monkeypatch, capsys):
    csv = write_fixture_csv(tmp_path, "SINE/USD", seed=0)
    cfg = write_config(tmp_path, {"SINE/USD": csv}, tmp_path / "ignored")
    env_out = tmp_path / "from_env"
    monkeypatch.setenv("FXCAST_OUT", str(env_out))
    assert main(["stats", "--config", str(cfg)]) == 0
    assert (env_out / "stats.csv").exists()
    monkeypatch.setenv("FXCAST_JOBS", "not-a-number")
    assert main(["compare", "--config", str(cfg)]) == 2
    assert "FXCAST_JOBS" in capsys.readouterr().err


def test_explicit_out_flag_beats_env(tmp_path, monkeypatch):
    csv = write_fixture_csv(tmp_path, "SINE/USD", seed=0)
    cfg = write_config(tmp_path, {"SINE/USD": csv}, tmp_path / "ignored")
    monkeypatch.setenv("FXCAST_OUT", str(tmp_path / "env_dir"))
    flag_out = tmp_path / "flag_dir"
    assert main(["stats", "--config", str(cfg), "--out", str(flag_out)]) == 0
    assert (flag_out / "stats.csv").exists()
    assert not (tmp_path / "env_dir").exists()


def test_prepare_pair_train_only_never_leaks_test_data(workspace):
    cfg_path, _, _ = workspace
    config = load_config(cfg_path)
    train_ds, test_ds, scaler = prepare_pair(config, "SINE/USD")
    # the scaler is fit on the training segment alone: a test window may
    # legitimately fall outside [0, 1] after scaling
    assert train_ds.features.min() >= 0.0
    assert train_ds.features.max() <= 1.0
    assert len(train_ds) > len(test_ds) > 0
