"""Experiment orchestration: train, fold, program, evaluate, report.

One pipeline run goes

    load -> split -> normalise -> choose templates -> program crossbar
         -> read training features through the crossbar (calibration)
         -> synthesise kernel -> dual solve per class -> fold -> evaluate

and every command below is built from ``run_once``. Output files:

    results.json   records, one per (dataset, method, seed); byte-stable
    report.txt     the same numbers as a fixed-width table
    model.json     serialised template model (crossbar embedded)
    crossbar.json  programmed crossbar with its pulse log
    split.json     train / test row indices of the recorded split
    timing.json    wall-clock runtime, kept apart so results stay byte-stable
"""
from __future__ import annotations

import csv
import itertools
import json
import logging
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .config import parse_bool, parse_float_list, read_flat_config
from .crossbar import CrossbarArray, ReadoutConfig, load_crossbar, program, save_crossbar
from .data import (
    SYNTHETIC_KINDS,
    Dataset,
    SplitSpec,
    apply_normalization,
    gen_synthetic,
    load_arem,
    load_csv,
    normalize,
    one_vs_rest,
    split_indices,
)
from .device import DeviceParams, PulseLog, energy_of, params_from_mapping, params_to_mapping
from .errors import ConfigurationError, ConvergenceError, MemSvmError, StageError
from .svm import (
    KernelSpec,
    TemplateSvmModel,
    default_gamma,
    kernel_accuracy,
    load_model,
    predict_batch,
    save_model,
    train_kernel_svm,
    train_multiclass,
)
from .templates import TemplateSource, choose_templates

log = logging.getLogger(__name__)


class UnsupportedDimensionError(ConfigurationError):
    pass


@dataclass
class ExperimentConfig:
    dataset: str = "two_class_100x2"
    label_column: str = "-1"
    header: bool = True
    activity: str | None = None  # AReM directory: the activity-vs-rest task
    train_fraction: float = 0.7
    stratified: bool = True
    seed: int = 0
    repeats: int = 5
    device: DeviceParams = field(default_factory=DeviceParams)
    n_templates: int = 10
    template_policy: str = TemplateSource.LADDER_RANDOM.value
    template_file: str | None = None
    C: float = 1.0
    tol: float = 1e-3
    gamma: float | None = None
    max_passes: int = 1000
    calibrate: bool = True
    absolute_value: bool = True
    sigma_program_grid: tuple[float, ...] = (0.0, 0.01, 0.02, 0.05)
    sigma_read_grid: tuple[float, ...] = (0.0,)
    strict_convergence: bool = False
    output_dir: str = "out"

    @property
    def is_synthetic(self) -> bool:
        return self.dataset in SYNTHETIC_KINDS

    @property
    def name(self) -> str:
        if self.is_synthetic:
            return self.dataset
        base = Path(self.dataset).stem
        return f"{base}:{self.activity}" if self.activity else base

    def validate(self) -> None:
        if not self.is_synthetic and not Path(self.dataset).exists():
            raise ConfigurationError(f"dataset not found: {self.dataset}")
        if Path(self.dataset).is_dir() and not self.activity:
            raise ConfigurationError("a dataset directory (AReM layout) needs an activity")
        if self.n_templates < 1:
            raise ConfigurationError(f"n_templates must be >= 1, got {self.n_templates}")
        if self.repeats < 1:
            raise ConfigurationError("repeats must be >= 1")
        try:
            TemplateSource(self.template_policy)
        except ValueError:
            raise ConfigurationError(f"unknown template policy {self.template_policy!r}") from None
        if self.template_policy == TemplateSource.FILE.value:
            if not self.template_file or not Path(self.template_file).is_file():
                raise ConfigurationError(f"template file not found: {self.template_file}")
        if not self.C > 0 or not self.tol > 0:
            raise ConfigurationError("C and tol must be > 0")
        if self.gamma is not None and not self.gamma > 0:
            raise ConfigurationError("gamma must be > 0")
        if not 0 < self.train_fraction < 1:
            raise ConfigurationError("train_fraction must be in (0, 1)")

    def echo(self) -> dict:
        """Config as plain JSON data, output_dir left out so results do not depend on it."""
        out = {}
        for f in fields(self):
            if f.name == "output_dir":
                continue
            value = getattr(self, f.name)
            if isinstance(value, DeviceParams):
                value = params_to_mapping(value)
            elif isinstance(value, tuple):
                value = list(value)
            out[f.name] = value
        return out


_CONFIG_CASTS = {
    "header": parse_bool,
    "stratified": parse_bool,
    "calibrate": parse_bool,
    "absolute_value": parse_bool,
    "strict_convergence": parse_bool,
    "train_fraction": float,
    "seed": int,
    "repeats": int,
    "n_templates": int,
    "max_passes": int,
    "C": float,
    "tol": float,
    "gamma": float,
    "sigma_program_grid": lambda s: tuple(parse_float_list(s)),
    "sigma_read_grid": lambda s: tuple(parse_float_list(s)),
}
_OPTIONAL = {"gamma", "activity", "template_file"}
_ALIASES = {"p": "n_templates", "c": "C", "templates": "n_templates"}


def config_from_mapping(mapping: dict[str, str], base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Apply string-valued settings on top of ``base``.

    Device keys (``num_states``, ``sigma_program`` ...) go to the device
    params; anything unknown is a configuration error.
    """
    base = base or ExperimentConfig()
    own = {f.name for f in fields(ExperimentConfig)} - {"device"}
    device_keys = {f.name for f in fields(DeviceParams)} | {"ladder_file"}
    kwargs, dev = {}, {}
    for key, value in mapping.items():
        key = _ALIASES.get(key, key)
        if key in own:
            if key in _OPTIONAL and value.strip().lower() in ("", "none"):
                kwargs[key] = None
                continue
            try:
                kwargs[key] = _CONFIG_CASTS.get(key, str)(value)
            except ValueError as exc:
                raise ConfigurationError(f"bad value for {key}: {value!r}") from exc
        elif key in device_keys:
            dev[key] = value
        else:
            raise ConfigurationError(f"unknown config key {key!r}")
    cfg = replace(base, **kwargs)
    if dev:
        try:
            cfg = replace(cfg, device=params_from_mapping(dev, cfg.device))
        except MemSvmError as exc:
            raise ConfigurationError(str(exc)) from exc
    return cfg


def load_config(path, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    mapping = read_flat_config(path)
    mapping.update(overrides or {})
    return config_from_mapping(mapping)


# --------------------------------------------------------------------------
# pipeline


class _stage:
    """Context manager that tags errors with the pipeline stage they came from."""

    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and isinstance(exc, Exception) and not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        return False


def stage_seeds(seed: int, repeat: int = 0) -> dict[str, int]:
    """Independent integer seeds for each random stage.

    split and templates depend only on ``seed``; program and read also on
    ``repeat`` so noise sweeps re-draw the device without moving the split.
    """
    base = np.random.SeedSequence(seed).generate_state(2)
    dev = np.random.SeedSequence([seed, repeat, 7]).generate_state(3)
    return {
        "split": int(base[0]),
        "templates": int(base[1]),
        "program": int(dev[0]),
        "calibrate": int(dev[1]),
        "read": int(dev[2]),
    }


def load_dataset(cfg: ExperimentConfig) -> Dataset:
    with _stage("load"):
        if cfg.is_synthetic:
            return gen_synthetic(cfg.dataset, cfg.seed)
        if Path(cfg.dataset).is_dir():
            return one_vs_rest(load_arem(cfg.dataset), cfg.activity)
        data = load_csv(cfg.dataset, cfg.label_column, cfg.header)
        return one_vs_rest(data, cfg.activity) if cfg.activity else data


@dataclass
class RunResult:
    model: TemplateSvmModel
    crossbar: CrossbarArray
    train_index: np.ndarray
    test_index: np.ndarray
    train_acc: float
    test_acc: float
    train: Dataset
    test: Dataset


def prepare_split(cfg: ExperimentConfig, data: Dataset, seeds: dict) -> tuple[Dataset, Dataset, np.ndarray, np.ndarray]:
    with _stage("split"):
        tr_idx, te_idx = split_indices(data.labels, SplitSpec(cfg.train_fraction, cfg.stratified, seeds["split"]))
    with _stage("normalize"):
        train = normalize(data.subset(tr_idx))
        test = apply_normalization(data.subset(te_idx), train.normalization)
    return train, test, tr_idx, te_idx


def run_once(cfg: ExperimentConfig, data: Dataset, repeat: int = 0, seed: int | None = None) -> RunResult:
    """One pass of the template-SVM pipeline on one split."""
    seeds = stage_seeds(cfg.seed if seed is None else seed, repeat)
    train, test, tr_idx, te_idx = prepare_split(cfg, data, seeds)
    device = cfg.device
    with _stage("choose_templates"):
        M = choose_templates(
            device,
            train.n_features,
            cfg.n_templates,
            seeds["templates"],
            cfg.template_policy,
            features=train.features,
            path=cfg.template_file,
        )
    with _stage("program"):
        xbar = program(M, device, seeds["program"])
    readout = ReadoutConfig(noise_enabled=device.sigma_read > 0, absolute_value=cfg.absolute_value)
    with _stage("train"):
        source = xbar if cfg.calibrate else M
        model = train_multiclass(
            train, source, cfg.C, cfg.tol, readout, cfg.max_passes, seed=seeds["calibrate"]
        )
        if not cfg.calibrate:
            model = replace(model, crossbar=xbar)
    if not model.converged:
        msg = f"{cfg.name}: dual solver did not converge within max_passes={cfg.max_passes}"
        if cfg.strict_convergence:
            raise StageError("train", ConvergenceError(msg))
        log.warning(msg)
    with _stage("evaluate"):
        rng = np.random.default_rng(seeds["read"])
        train_acc = float(np.mean(predict_batch(model, train.features, rng)[0] == train.labels))
        test_acc = float(np.mean(predict_batch(model, test.features, rng)[0] == test.labels))
    return RunResult(model, xbar, tr_idx, te_idx, train_acc, test_acc, train, test)


def run_traditional(cfg: ExperimentConfig, train: Dataset, test: Dataset) -> dict:
    with _stage("traditional"):
        gamma = cfg.gamma if cfg.gamma is not None else default_gamma(train.n_features)
        model = train_kernel_svm(train, KernelSpec.rbf(gamma), cfg.C, cfg.tol, cfg.max_passes)
        if not model.converged and cfg.strict_convergence:
            raise ConvergenceError(f"{cfg.name}: rbf baseline did not converge")
        return {
            "n_support": model.n_support,
            "train_acc": kernel_accuracy(model, train),
            "test_acc": kernel_accuracy(model, test),
        }


# --------------------------------------------------------------------------
# reports


@dataclass
class BenchReport:
    rows: list[dict]
    energy_j: float = 0.0
    runtime_s: float = 0.0
    extra: dict = field(default_factory=dict)

    def table(self) -> str:
        return format_table(self.rows)


def _pct(x: float) -> float:
    return round(100.0 * x, 4)


def _record(dataset, method, seed, n_support, train_acc, test_acc, **more) -> dict:
    rec = {
        "dataset": dataset,
        "method": method,
        "seed": seed,
        "n_support": int(n_support),
        "train_acc": _pct(train_acc),
        "test_acc": _pct(test_acc),
    }
    rec.update(more)
    return rec


def format_table(rows: list[dict]) -> str:
    head = f"{'dataset':<24} {'method':<12} {'seed':>6} {'SVs':>6} {'train %':>9} {'test %':>9}"
    lines = [head, "-" * len(head)]
    for r in rows:
        seed = r.get("seed")
        seed = "mean" if seed is None else str(seed)
        lines.append(
            f"{r['dataset']:<24} {r['method']:<12} {seed:>6} {r['n_support']:>6} "
            f"{r['train_acc']:>9.2f} {r['test_acc']:>9.2f}"
        )
    return "\n".join(lines) + "\n"


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def _outdir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --------------------------------------------------------------------------
# commands


def cmd_run(cfg: ExperimentConfig) -> BenchReport:
    """Full pipeline on one split; writes results, model, crossbar and split files."""
    t0 = time.perf_counter()
    cfg.validate()
    data = load_dataset(cfg)
    res = run_once(cfg, data)
    energy = energy_of(res.crossbar.pulse_log, cfg.device)
    rec = _record(
        cfg.name,
        "template",
        cfg.seed,
        cfg.n_templates,
        res.train_acc,
        res.test_acc,
        energy_j=energy,
        n_potentiation=res.crossbar.pulse_log.n_potentiation,
        n_depression=res.crossbar.pulse_log.n_depression,
    )
    out = _outdir(cfg)
    with _stage("write"):
        save_model(res.model, out / "model.json")
        save_crossbar(res.crossbar, out / "crossbar.json")
        _write_json(out / "split.json", {"train_index": res.train_index.tolist(), "test_index": res.test_index.tolist()})
        _write_json(out / "results.json", {"config": cfg.echo(), "records": [rec]})
        (out / "report.txt").write_text(format_table([rec]) + f"programming energy: {energy:.6g} J\n")
    report = BenchReport([rec], energy_j=energy, runtime_s=time.perf_counter() - t0)
    _write_json(out / "timing.json", {"command": "run", "runtime_s": report.runtime_s})
    return report


def _mean_record(recs: list[dict]) -> dict:
    r0 = recs[0]
    return {
        "dataset": r0["dataset"],
        "method": r0["method"],
        "seed": None,
        "n_support": int(round(np.mean([r["n_support"] for r in recs]))),
        "train_acc": round(float(np.mean([r["train_acc"] for r in recs])), 4),
        "test_acc": round(float(np.mean([r["test_acc"] for r in recs])), 4),
        "test_acc_std": round(float(np.std([r["test_acc"] for r in recs])), 4),
        "repeats": len(recs),
    }


def cmd_compare(cfg: ExperimentConfig) -> BenchReport:
    """Traditional rbf SVM vs template SVM on identical splits, ``repeats`` seeds."""
    t0 = time.perf_counter()
    cfg.validate()
    data = load_dataset(cfg)
    trad, tmpl = [], []
    energy = 0.0
    for r in range(cfg.repeats):
        seed = cfg.seed + r
        res = run_once(cfg, data, seed=seed)
        energy += energy_of(res.crossbar.pulse_log, cfg.device)
        base = run_traditional(cfg, res.train, res.test)
        trad.append(_record(cfg.name, "traditional", seed, base["n_support"], base["train_acc"], base["test_acc"]))
        tmpl.append(_record(cfg.name, "template", seed, cfg.n_templates, res.train_acc, res.test_acc))
    summary = [_mean_record(trad), _mean_record(tmpl)]
    out = _outdir(cfg)
    _write_json(out / "compare.json", {"config": cfg.echo(), "records": trad + tmpl, "summary": summary})
    (out / "compare.txt").write_text(format_comparison(summary))
    report = BenchReport(trad + tmpl, energy_j=energy, runtime_s=time.perf_counter() - t0, extra={"summary": summary})
    _write_json(out / "timing.json", {"command": "compare", "runtime_s": report.runtime_s})
    return report


def format_comparison(summary: list[dict]) -> str:
    """Traditional-vs-template table, one line per dataset."""
    by = {}
    for r in summary:
        by.setdefault(r["dataset"], {})[r["method"]] = r
    head = (
        f"{'dataset':<24} | {'trad SVs':>8} {'train':>7} {'test':>7} | {'tmpl P':>6} {'train':>7} {'test':>7}"
    )
    lines = [head, "-" * len(head)]
    for name, pair in by.items():
        t, m = pair.get("traditional"), pair.get("template")
        left = f"{t['n_support']:>8} {t['train_acc']:>7.2f} {t['test_acc']:>7.2f}" if t else " " * 24
        right = f"{m['n_support']:>6} {m['train_acc']:>7.2f} {m['test_acc']:>7.2f}" if m else ""
        lines.append(f"{name:<24} | {left} | {right}")
    return "\n".join(lines) + "\n"


SWEEP_COLUMNS = (
    "sigma_program",
    "sigma_read",
    "repeats",
    "train_acc_mean",
    "train_acc_std",
    "test_acc_mean",
    "test_acc_std",
)


def cmd_sweep_noise(cfg: ExperimentConfig) -> BenchReport:
    """Accuracy vs device noise. The split and templates stay fixed at ``cfg.seed``;
    every repeat re-programs the crossbar with fresh device randomness.
    """
    t0 = time.perf_counter()
    cfg.validate()
    data = load_dataset(cfg)
    rows = []
    for sp, sr in itertools.product(cfg.sigma_program_grid, cfg.sigma_read_grid):
        noisy = replace(cfg, device=cfg.device.with_noise(sp, sr))
        results = [run_once(noisy, data, repeat=r) for r in range(cfg.repeats)]
        tr = np.array([100.0 * x.train_acc for x in results])
        te = np.array([100.0 * x.test_acc for x in results])
        rows.append({
            "sigma_program": sp,
            "sigma_read": sr,
            "repeats": len(results),
            "train_acc_mean": round(float(tr.mean()), 4),
            "train_acc_std": round(float(tr.std()), 4),
            "test_acc_mean": round(float(te.mean()), 4),
            "test_acc_std": round(float(te.std()), 4),
        })
    out = _outdir(cfg)
    with (out / "sweep.csv").open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    _write_json(out / "sweep.json", {"config": cfg.echo(), "dataset": cfg.name, "rows": rows})
    report = BenchReport(rows, runtime_s=time.perf_counter() - t0)
    _write_json(out / "timing.json", {"command": "sweep-noise", "runtime_s": report.runtime_s})
    return report


def energy_report(xbar: CrossbarArray) -> dict:
    params = xbar.params
    pulses = xbar.cell_pulses()
    per_column = [energy_of(PulseLog(int(c), 0), params) for c in pulses.sum(axis=0)]
    return {
        "rows": xbar.rows,
        "cols": xbar.cols,
        "n_potentiation": xbar.pulse_log.n_potentiation,
        "n_depression": xbar.pulse_log.n_depression,
        "total_energy_j": energy_of(xbar.pulse_log, params),
        "mean_pulses_per_cell": float(xbar.pulse_log.total / (xbar.rows * xbar.cols)),
        "programming_energy_per_column_j": per_column,
        "e_potentiation_j": params.e_potentiation,
        "e_depression_j": params.e_depression,
    }


def cmd_energy(artifact_dir) -> BenchReport:
    """Programming energy of the crossbar written by a previous ``run``."""
    path = Path(artifact_dir) / "crossbar.json"
    if not path.is_file():
        raise FileNotFoundError(f"no crossbar artifact at {path}; run the 'run' command first")
    doc = energy_report(load_crossbar(path))
    _write_json(Path(artifact_dir) / "energy.json", doc)
    return BenchReport([doc], energy_j=doc["total_energy_j"])


@dataclass(frozen=True)
class GridSpec:
    x_min: float = 0.0
    x_max: float = 1.0
    y_min: float = 0.0
    y_max: float = 1.0
    nx: int = 11
    ny: int = 11

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ConfigurationError("grid needs nx, ny >= 1")


def decision_regions(model: TemplateSvmModel, grid: GridSpec = GridSpec(), raw_space: bool = False) -> np.ndarray:
    """(x, y, class) rows over a rectangular grid, x varying fastest.

    Grid coordinates are model inputs in [0, 1] unless ``raw_space``, in
    which case they are raw feature values passed through the model's
    normalisation.
    """
    if model.n_features != 2:
        raise UnsupportedDimensionError(f"decision regions need a 2-feature model, got d={model.n_features}")
    xs = np.linspace(grid.x_min, grid.x_max, grid.nx)
    ys = np.linspace(grid.y_min, grid.y_max, grid.ny)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    inputs = pts
    if raw_space:
        if model.normalization is None:
            raise ConfigurationError("model has no normalisation metadata for raw-space grids")
        inputs = model.normalization.transform(pts)
    classes, _ = predict_batch(model, inputs)
    return np.column_stack([pts, classes])


def cmd_regions(model_path, out_path, grid: GridSpec = GridSpec(), raw_space: bool = False) -> int:
    model = load_model(model_path)
    rows = decision_regions(model, grid, raw_space)
    with Path(out_path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "class"])
        for x, y, c in rows:
            w.writerow([repr(float(x)), repr(float(y)), int(c)])
    return rows.shape[0]
