import csv
import json
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from memsvm.bench import (
    SWEEP_COLUMNS,
    ExperimentConfig,
    GridSpec,
    UnsupportedDimensionError,
    cmd_compare,
    cmd_energy,
    cmd_regions,
    cmd_run,
    cmd_sweep_noise,
    config_from_mapping,
    decision_regions,
    load_config,
    stage_seeds,
)
from memsvm.cli import main
from memsvm.crossbar import program, save_crossbar
from memsvm.data import apply_normalization, gen_synthetic, load_csv
from memsvm.device import DeviceParams
from memsvm.errors import ConfigurationError
from memsvm.svm import TemplateSvmModel, load_model, predict_batch

DATA = Path(__file__).resolve().parents[1] / "data"


def _cfg(tmp_path, **kw):
    kw.setdefault("output_dir", str(tmp_path / "out"))
    return replace(ExperimentConfig(), **kw)


def test_run_on_synthetic_writes_artifacts(tmp_path):
    cfg = _cfg(tmp_path)
    report = cmd_run(cfg)
    out = Path(cfg.output_dir)
    for name in ("results.json", "report.txt", "model.json", "crossbar.json", "split.json", "timing.json"):
        assert (out / name).is_file()
    rec = report.rows[0]
    assert rec["test_acc"] >= 95.0
    assert report.energy_j == pytest.approx(rec["n_potentiation"] * 0.7e-9)


def test_missing_dataset_fails_before_any_work(tmp_path):
    cfg = _cfg(tmp_path, dataset=str(tmp_path / "nope.csv"))
    with pytest.raises(ConfigurationError):
        cmd_run(cfg)
    assert not Path(cfg.output_dir).exists()


def test_results_are_byte_identical(tmp_path):
    a = _cfg(tmp_path, output_dir=str(tmp_path / "a"), dataset="three_class_100x3", seed=3)
    b = replace(a, output_dir=str(tmp_path / "b"))
    cmd_run(a)
    cmd_run(b)
    for name in ("results.json", "model.json", "crossbar.json", "split.json", "report.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_report_matches_reloaded_artifacts(tmp_path):
    cfg = _cfg(tmp_path, dataset=str(DATA / "haberman.csv"), seed=2)
    cmd_run(cfg)
    out = Path(cfg.output_dir)
    rec = json.loads((out / "results.json").read_text())["records"][0]
    split = json.loads((out / "split.json").read_text())
    model = load_model(out / "model.json")
    data = load_csv(DATA / "haberman.csv")
    test = apply_normalization(data.subset(np.array(split["test_index"])), model.normalization)
    acc = float(np.mean(predict_batch(model, test.features)[0] == test.labels))
    assert rec["test_acc"] == round(100 * acc, 4)
    assert f"{rec['test_acc']:.2f}" in (out / "report.txt").read_text()


@pytest.mark.parametrize("target, joules", [(0.0, 0.0), (1.0, 85 * 0.7e-9)])
def test_energy_of_single_cell(tmp_path, target, joules):
    save_crossbar(program([[target]], DeviceParams()), tmp_path / "crossbar.json")
    report = cmd_energy(tmp_path)
    assert report.energy_j == pytest.approx(joules, rel=1e-12, abs=0)
    assert json.loads((tmp_path / "energy.json").read_text())["total_energy_j"] == report.energy_j


def test_energy_without_artifact(tmp_path):
    with pytest.raises(FileNotFoundError):
        cmd_energy(tmp_path)


def _regions(tmp_path, model):
    rows = decision_regions(model)
    assert rows.shape == (121, 3)
    return rows[:, 2]


def test_regions_constant_model(tmp_path):
    model = TemplateSvmModel(templates=np.full((2, 3), 0.5), weights=np.zeros((2, 3)), biases=np.array([0.0, 1.0]))
    assert set(_regions(tmp_path, model).tolist()) == {1.0}


def test_regions_split_model(tmp_path):
    # score0 = x - 0.5, so class 0 wins on the right half of the grid
    model = TemplateSvmModel(templates=np.array([[1.0], [0.0]]), weights=np.array([[1.0]]), biases=np.array([-0.5]))
    rows = decision_regions(model)
    assert set(rows[:, 2].tolist()) == {0.0, 1.0}
    assert np.all(rows[rows[:, 0] > 0.5, 2] == 0) and np.all(rows[rows[:, 0] < 0.5, 2] == 1)


def test_regions_file_and_dimension_check(tmp_path):
    cfg = _cfg(tmp_path)
    cmd_run(cfg)
    out = tmp_path / "regions.csv"
    n = cmd_regions(Path(cfg.output_dir) / "model.json", out, GridSpec(nx=5, ny=4))
    with out.open() as fh:
        rows = list(csv.reader(fh))
    assert n == 20 and rows[0] == ["x", "y", "class"] and len(rows) == 21
    model3 = TemplateSvmModel(templates=np.full((3, 2), 0.5), weights=np.zeros((2, 2)), biases=np.zeros(2))
    with pytest.raises(UnsupportedDimensionError):
        decision_regions(model3)


def test_sweep_shape_and_zero_noise_point(tmp_path):
    cfg = _cfg(tmp_path, dataset="three_class_100x3", repeats=2, sigma_program_grid=(0.0, 0.05), sigma_read_grid=(0.0, 0.01))
    report = cmd_sweep_noise(cfg)
    assert len(report.rows) == 4
    with (Path(cfg.output_dir) / "sweep.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert tuple(rows[0]) == SWEEP_COLUMNS and len(rows) == 4
    clean = report.rows[0]
    assert (clean["sigma_program"], clean["sigma_read"], clean["test_acc_std"]) == (0.0, 0.0, 0.0)
    run = cmd_run(replace(cfg, output_dir=str(tmp_path / "run")))
    assert clean["test_acc_mean"] == run.rows[0]["test_acc"]


def test_compare_summary(tmp_path):
    cfg = _cfg(tmp_path, repeats=2)
    report = cmd_compare(cfg)
    summary = report.extra["summary"]
    assert [s["method"] for s in summary] == ["traditional", "template"]
    assert all(s["repeats"] == 2 for s in summary)
    assert (Path(cfg.output_dir) / "compare.txt").is_file()


def test_stage_seeds_independent_of_repeat_for_split():
    a, b = stage_seeds(4, 0), stage_seeds(4, 1)
    assert a["split"] == b["split"] and a["templates"] == b["templates"]
    assert a["program"] != b["program"]


def test_config_file_and_overrides(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text("# experiment\ndataset = three_class_100x3\nP = 6\nC: 2.5\nsigma_program = 0.01\nseed = 9\n")
    cfg = load_config(path, {"seed": "4"})
    assert (cfg.dataset, cfg.n_templates, cfg.C, cfg.seed) == ("three_class_100x3", 6, 2.5, 4)
    assert cfg.device.sigma_program == 0.01
    with pytest.raises(ConfigurationError):
        config_from_mapping({"temperature": "300"})
    with pytest.raises(ConfigurationError):
        config_from_mapping({"seed": "x"})


def test_cli_run_and_flag_override(tmp_path, capsys):
    cfgfile = tmp_path / "exp.cfg"
    cfgfile.write_text(f"dataset = two_class_100x2\ntemplates = 3\noutput_dir = {tmp_path / 'from_file'}\n")
    out = tmp_path / "from_flag"
    assert main(["run", "--config", str(cfgfile), "--templates", "5", "--output-dir", str(out)]) == 0
    doc = json.loads((out / "results.json").read_text())
    assert doc["config"]["n_templates"] == 5
    assert not (tmp_path / "from_file").exists()
    assert main(["energy", str(out)]) == 0
    assert "J" in capsys.readouterr().out


def test_cli_exit_codes(tmp_path):
    assert main(["run", "--dataset", str(tmp_path / "missing.csv"), "--output-dir", str(tmp_path / "o")]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b,y\n1,2,A\n3,x,B\n")
    assert main(["run", "--dataset", str(bad), "--output-dir", str(tmp_path / "o")]) == 3
    assert main(["energy", str(tmp_path / "empty")]) == 5
    assert main(["run", "--templates", "0", "--output-dir", str(tmp_path / "o")]) == 2
    assert main([
        "run", "--dataset", str(DATA / "pima_diabetes.csv"), "--tol", "1e-9", "--max-passes", "1",
        "--strict-convergence", "--output-dir", str(tmp_path / "o"),
    ]) == 4


def test_cli_regions_rejects_wide_model(tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--dataset", "three_class_100x3", "--output-dir", str(out)]) == 0
    assert main(["regions", str(out / "model.json"), "--out", str(tmp_path / "r.csv")]) == 2


def test_cli_gen_synthetic(tmp_path):
    path = tmp_path / "blobs.csv"
    assert main(["gen-synthetic", "nine_class_1000x9", "--seed", "2", "--out", str(path)]) == 0
    data = load_csv(path)
    assert data.features.shape == (1000, 9) and data.n_classes == 9
    np.testing.assert_array_equal(data.features, gen_synthetic("nine_class_1000x9", 2).features)
