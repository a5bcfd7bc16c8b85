"""Command-line entry point: ``memsvm <command> [flags]``.

Experiment flags mirror ExperimentConfig fields. ``--config FILE`` reads a
flat ``key = value`` file first; flags given on the command line win.

Exit codes: 0 ok, 2 configuration error, 3 data error, 4 solver did not
converge (with --strict-convergence), 5 missing file / I/O error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .bench import (
    ExperimentConfig,
    GridSpec,
    cmd_compare,
    cmd_energy,
    cmd_regions,
    cmd_run,
    cmd_sweep_noise,
    config_from_mapping,
    format_comparison,
)
from .config import normalize_key, read_flat_config
from .data import SYNTHETIC_KINDS, gen_synthetic, save_csv
from .errors import (
    ConfigurationError,
    ConvergenceError,
    DataError,
    MemSvmError,
    ParameterError,
    StageError,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_CONVERGENCE = 4
EXIT_IO = 5

# (flag, config key, help)
EXPERIMENT_FLAGS = [
    ("--dataset", "dataset", "CSV path, AReM directory, or a synthetic kind"),
    ("--label-column", "label_column", "label column name or index (default -1, the last)"),
    ("--header", "header", "whether the CSV has a header row (true/false)"),
    ("--activity", "activity", "class treated as positive in a one-vs-rest task"),
    ("--train-fraction", "train_fraction", "training share of the split (default 0.7)"),
    ("--stratified", "stratified", "stratify the split by class (true/false)"),
    ("--seed", "seed", "base random seed"),
    ("--repeats", "repeats", "seeds per comparison / device draws per sweep point"),
    ("--templates", "n_templates", "number of template vectors P (default 10)"),
    ("--template-policy", "template_policy", "ladder_random | data_medoids | file"),
    ("--template-file", "template_file", "d x P matrix file for the 'file' policy"),
    ("--C", "C", "box constraint"),
    ("--tol", "tol", "KKT tolerance of the dual solver"),
    ("--gamma", "gamma", "rbf gamma for the traditional baseline (default 1/d)"),
    ("--max-passes", "max_passes", "solver budget in multiples of N pair updates"),
    ("--calibrate", "calibrate", "train on features read through the crossbar (true/false)"),
    ("--absolute-value", "absolute_value", "magnitude readout (true/false)"),
    ("--sigma-program-grid", "sigma_program_grid", "comma list for sweep-noise"),
    ("--sigma-read-grid", "sigma_read_grid", "comma list for sweep-noise"),
    ("--num-states", "num_states", "device ladder levels (default 86)"),
    ("--ladder-shape", "ladder_shape", "linear | exponential"),
    ("--ladder-file", "ladder_file", "single-column file of ladder levels"),
    ("--g-min", "g_min", "lowest memductance"),
    ("--g-max", "g_max", "highest memductance"),
    ("--sigma-program", "sigma_program", "programming variability, fraction of range"),
    ("--sigma-read", "sigma_read", "read noise, fraction of range"),
    ("--e-potentiation", "e_potentiation", "joules per potentiating pulse"),
    ("--e-depression", "e_depression", "joules per depressing pulse"),
    ("--output-dir", "output_dir", "directory for all outputs"),
]


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    for flag, key, help_ in EXPERIMENT_FLAGS:
        p.add_argument(flag, dest=f"cfg_{key}", default=None, help=help_)
    p.add_argument("--strict-convergence", dest="cfg_strict_convergence", action="store_const", const="true",
                   default=None, help="fail with exit code 4 when the solver hits its budget")


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    mapping: dict[str, str] = {}
    if args.config:
        mapping.update(read_flat_config(args.config))
    for name, value in vars(args).items():
        if name.startswith("cfg_") and value is not None:
            mapping[normalize_key(name[4:])] = str(value)
    return config_from_mapping(mapping)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="memsvm", description="Template-vector SVM on a simulated memtransistor crossbar")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_ in [
        ("run", "train, fold, program and evaluate one split"),
        ("compare", "traditional rbf SVM vs template SVM over several seeds"),
        ("sweep-noise", "accuracy vs device programming/read noise"),
    ]:
        _add_experiment_flags(sub.add_parser(name, help=help_))

    p = sub.add_parser("energy", help="programming energy of a previous run")
    p.add_argument("artifact_dir", help="output directory of a 'run'")

    p = sub.add_parser("regions", help="decision-region grid of a 2-feature model")
    p.add_argument("model", help="model.json written by 'run'")
    p.add_argument("--out", required=True, help="CSV with x, y, class rows")
    p.add_argument("--grid", default="0,1,0,1,11,11", help="xmin,xmax,ymin,ymax,nx,ny")
    p.add_argument("--raw-space", action="store_true", help="grid in raw feature units")

    p = sub.add_parser("gen-synthetic", help="write a synthetic blob dataset as CSV")
    p.add_argument("kind", choices=sorted(SYNTHETIC_KINDS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    return parser


def _parse_grid(text: str) -> GridSpec:
    parts = text.split(",")
    if len(parts) != 6:
        raise ConfigurationError(f"--grid needs 6 comma-separated values, got {text!r}")
    try:
        x0, x1, y0, y1 = (float(v) for v in parts[:4])
        nx, ny = int(parts[4]), int(parts[5])
    except ValueError as exc:
        raise ConfigurationError(f"bad --grid {text!r}") from exc
    return GridSpec(x0, x1, y0, y1, nx, ny)


def _dispatch(args: argparse.Namespace) -> None:
    if args.command == "run":
        report = cmd_run(build_config(args))
        print(report.table(), end="")
        print(f"programming energy: {report.energy_j:.6g} J   runtime: {report.runtime_s:.2f} s")
    elif args.command == "compare":
        report = cmd_compare(build_config(args))
        print(format_comparison(report.extra["summary"]), end="")
    elif args.command == "sweep-noise":
        report = cmd_sweep_noise(build_config(args))
        for row in report.rows:
            print(
                f"sigma_program={row['sigma_program']:<8g} sigma_read={row['sigma_read']:<8g} "
                f"test={row['test_acc_mean']:.2f} +/- {row['test_acc_std']:.2f} (n={row['repeats']})"
            )
    elif args.command == "energy":
        doc = cmd_energy(args.artifact_dir).rows[0]
        print(
            f"{doc['rows']}x{doc['cols']} crossbar: {doc['n_potentiation']} potentiation + "
            f"{doc['n_depression']} depression pulses = {doc['total_energy_j']:.6g} J"
        )
    elif args.command == "regions":
        n = cmd_regions(args.model, args.out, _parse_grid(args.grid), args.raw_space)
        print(f"wrote {n} grid points to {args.out}")
    elif args.command == "gen-synthetic":
        data = gen_synthetic(args.kind, args.seed)
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        save_csv(data, args.out)
        print(f"wrote {data.n_samples} x {data.n_features} ({data.n_classes} classes) to {args.out}")


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, StageError):
        return exit_code_for(exc.cause)
    if isinstance(exc, ConvergenceError):
        return EXIT_CONVERGENCE
    if isinstance(exc, DataError):
        return EXIT_DATA
    if isinstance(exc, (ConfigurationError, ParameterError)):
        return EXIT_CONFIG
    if isinstance(exc, OSError):
        return EXIT_IO
    if isinstance(exc, MemSvmError):
        return EXIT_DATA
    raise exc


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        _dispatch(args)
    except (MemSvmError, OSError) as exc:
        print(f"memsvm: error: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
