import json

import numpy as np
import pytest

from qutritml import cli
from qutritml.errors import ConfigError
from qutritml.experiment import (
    ExperimentConfig,
    boundary_grid,
    dump_config,
    git_blob_hash,
    padded_bounds,
    parse_config_text,
    read_predictions_csv,
    run_experiment,
    to_json,
)
from qutritml.kernel import read_gram_csv


def small(tmp_path, **kw):
    base = dict(seed=0, dataset="circles", n_samples=40, out=str(tmp_path / "run"))
    base.update(kw)
    return ExperimentConfig(**base)


def test_config_parse_and_round_trip():
    text = """
    # comment
    task = qnn
    seed = 7
    dataset = xor
    data.n = 120
    data.noise = 0.0
    qnn.layers = 2
    qnn.lr = 0.01
    preprocess.pca = none
    output.gram = true
    """
    cfg = parse_config_text(text)
    assert (cfg.task, cfg.seed, cfg.dataset, cfg.n_samples, cfg.noise) == ("qnn", 7, "xor", 120, 0.0)
    assert cfg.layers == 2 and cfg.lr == 0.01 and cfg.pca is None and cfg.write_gram is True
    assert parse_config_text(dump_config(cfg)) == cfg


def test_config_errors():
    with pytest.raises(ConfigError):
        parse_config_text("nonsense = 1")
    with pytest.raises(ConfigError):
        parse_config_text("seed 1")
    with pytest.raises(ConfigError):
        parse_config_text("seed = abc")
    with pytest.raises(ConfigError):
        ExperimentConfig().validate()  # seed is mandatory
    with pytest.raises(ConfigError):
        ExperimentConfig(seed=1, dataset="/no/such/file.csv").validate()
    with pytest.raises(ConfigError):
        ExperimentConfig(seed=1, task="forest").validate()


def test_json_format():
    assert to_json({"a": 0.1, "b": [1, 2.5]}) == '{\n  "a": 0.10000000000000001,\n  "b": [1, 2.5]\n}\n'
    assert json.loads(to_json({"x": 1 / 3}))["x"] == 1 / 3


def test_git_blob_hash():
    # `printf 'hello\n' | git hash-object --stdin`
    assert git_blob_hash(b"hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a"


def test_boundary_grid_examples():
    grid = boundary_grid(lambda P: (np.zeros(len(P), int), np.ones(len(P))), (0, 1, 0, 2), 50)
    assert grid.shape == (2500, 4)
    assert np.all(grid[:, 2] == 0)
    # row-major: x varies fastest
    assert grid[0, 0] == 0 and grid[1, 0] > 0 and grid[1, 1] == 0 and grid[-1, 1] == 2
    with pytest.raises(ConfigError):
        boundary_grid(lambda P: P, (0, 1, 0, 1), 5, n_inputs=3)
    with pytest.raises(ConfigError):
        boundary_grid(lambda P: P, (0, 1, 0, 1), 1)


def test_padded_bounds():
    assert np.allclose(padded_bounds(np.array([[0.0, 0.0], [10.0, 2.0]])), (-1, 11, -0.2, 2.2))


def test_qksvm_run_outputs_and_determinism(tmp_path):
    cfg = small(tmp_path, boundary_res=5, write_gram=True)
    res = run_experiment(cfg)
    out = tmp_path / "run"
    names = {p.name for p in out.iterdir()}
    assert {"metrics.json", "predictions.csv", "gram.csv", "boundary.csv", "model.txt", "manifest.json"} <= names
    m = json.loads((out / "metrics.json").read_text())
    assert m["n_train"] + m["n_test"] == 40
    assert sum(map(sum, m["confusion"])) == m["n_test"]
    K = read_gram_csv(out / "gram.csv")
    assert K.shape == (m["n_train"],) * 2 and np.allclose(np.diag(K), 1)
    assert len((out / "boundary.csv").read_text().splitlines()) == 26
    man = json.loads((out / "manifest.json").read_text())
    assert {"config", "seed", "inputs", "versions", "wall_time_s", "outputs"} <= set(man)
    assert len(man["inputs"]["git_blob"]) == 40
    first = (out / "metrics.json").read_bytes()
    run_experiment(small(tmp_path, boundary_res=5, write_gram=True))
    assert (out / "metrics.json").read_bytes() == first
    assert res.metrics["accuracy"] == m["accuracy"]


def test_qnn_zero_epochs(tmp_path):
    res = run_experiment(small(tmp_path, task="qnn", dataset="xor", epochs=0, boundary_res=4))
    assert (tmp_path / "run" / "manifest.json").is_file()
    assert res.metrics["epochs_run"] == 0
    conf = res.boundary[:, 3]
    assert np.all((conf >= 0.5 - 1e-12) & (conf <= 1 + 1e-12))


def test_svm_run_and_iris(tmp_path):
    res = run_experiment(small(tmp_path, task="svm", dataset="iris"), write=False)
    assert res.metrics["n_classes"] == 3 and res.metrics["accuracy"] > 0.8
    with pytest.raises(ConfigError):
        run_experiment(small(tmp_path, dataset="iris", boundary_res=5), write=False)


def test_cli_success_and_metrics_subcommand(tmp_path, capsys):
    out = tmp_path / "cli"
    assert cli.main(["qksvm", "--seed", "1", "--dataset", "moons", "--n", "40", "--out", str(out)]) == 0
    assert "test accuracy" in capsys.readouterr().out
    y_true, y_pred = read_predictions_csv(out / "predictions.csv")
    assert cli.main(["metrics", str(out / "predictions.csv"), "--classes", "2", "--out", str(tmp_path / "m")]) == 0
    a = json.loads((tmp_path / "m" / "metrics.json").read_text())
    b = json.loads((out / "metrics.json").read_text())
    assert a["accuracy"] == b["accuracy"] == np.mean(np.asarray(y_true) == np.asarray(y_pred))


def test_cli_config_with_override(tmp_path):
    conf = tmp_path / "c.cfg"
    conf.write_text(f"task = svm\nseed = 3\ndataset = xor\ndata.n = 40\noutput.dir = {tmp_path / 'a'}\n")
    args = cli.build_parser().parse_args(["gram", "--config", str(conf), "--seed", "5", "--no-hadamard"])
    cfg = cli.config_from_args(args)
    assert cfg.seed == 5 and cfg.task == "qksvm" and cfg.write_gram and not cfg.hadamard
    assert cfg.dataset == "xor" and cfg.n_samples == 40
    args = cli.build_parser().parse_args(["boundary", "--seed", "1", "--task", "qnn"])
    cfg = cli.config_from_args(args)
    assert cfg.task == "qnn" and cfg.boundary_res == 50


def test_cli_errors(tmp_path, capsys):
    assert cli.main(["qksvm", "--dataset", "xor"]) == 2  # no seed
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "ConfigError" and err["command"] == "qksvm"
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b,c\n1,zz,x\n2,3,y\n")
    assert cli.main(["svm", "--seed", "1", "--dataset", str(bad), "--out", str(tmp_path / "o")]) == 1
    assert json.loads(capsys.readouterr().err)["error"] == "DataParseError"
