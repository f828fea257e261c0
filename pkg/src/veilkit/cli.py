"""Experiment runner: compose dataset -> fusion -> PCA -> classifier -> CV.

Exit codes: 0 ok, 1 configuration error, 2 data-format error, 3 runtime
failure. Output files are written atomically (temp + rename) so a failed
run never leaves a partial report. VEILKIT_THREADS caps the fold worker
pool.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, replace

from . import fusion
from .classify import ClassifierSpec, GaussianNBSpec, KnnSpec, MlpSpec, RandomForestSpec
from .dataset import TASKS, FeatureDataset, label_view, load_features
from .errors import (
    ConfigError,
    DimMismatch,
    FormatError,
    NonFiniteValueError,
    RowOrderMismatch,
    VeilkitError,
)
from .evaluate import EvalReport, PipelineConfig, cross_validate

CLF_CHOICES = ("1nn", "3nn", "5nn", "nb", "rf", "mlp")
MERGE_CHOICES = ("none", "min", "max", "mean")
# An MLP this wide trains very slowly; the protocol applies PCA first.
MLP_WIDTH_WARNING = 1024

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3

_DATA_ERRORS = (FormatError, NonFiniteValueError, DimMismatch, RowOrderMismatch)


@dataclass(frozen=True)
class ExperimentConfig:
    task: str
    fc6: str | None
    fc7: str | None
    merge: str
    pca: float | None
    pca_scope: str
    spec: ClassifierSpec
    folds: int = 10
    seed: int = 42
    stratified: bool = True

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}")
        if self.merge not in MERGE_CHOICES:
            raise ConfigError(f"unknown merge {self.merge!r}")
        if self.merge != "none" and (self.fc6 is None or self.fc7 is None):
            raise ConfigError("--merge requires both --fc6 and --fc7")
        if self.merge == "none" and (self.fc6 is None) == (self.fc7 is None):
            raise ConfigError("without --merge, give exactly one of --fc6/--fc7")
        if self.pca is not None and not 0.0 < self.pca <= 1.0:
            raise ConfigError("--pca must be in (0, 1] or 'none'")
        if self.folds < 2:
            raise ConfigError("--folds must be >= 2")


def _parse_pca(text: str) -> float | None:
    if text == "none":
        return None
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"--pca expects a fraction or 'none', got {text!r}") from None


_CLF_OPT_TYPES = {
    KnnSpec: {},
    GaussianNBSpec: {"var_floor_scale": float},
    RandomForestSpec: {"trees": int, "max_features": int, "bootstrap": bool, "seed": int},
    MlpSpec: {
        "hidden_units": int,
        "learning_rate": float,
        "momentum": float,
        "epochs": int,
        "standardize": bool,
        "seed": int,
    },
}


def build_spec(clf: str, opts: list[str] | None) -> ClassifierSpec:
    """Make a classifier spec from the CLI token plus key=value overrides."""
    if clf not in CLF_CHOICES:
        raise ConfigError(f"unknown classifier {clf!r}")
    if clf.endswith("nn"):
        spec: ClassifierSpec = KnnSpec(k=int(clf[0]))
    elif clf == "nb":
        spec = GaussianNBSpec()
    elif clf == "rf":
        spec = RandomForestSpec()
    else:
        spec = MlpSpec()
    allowed = _CLF_OPT_TYPES[type(spec)]
    for opt in opts or []:
        if "=" not in opt:
            raise ConfigError(f"--clf-opt expects key=value, got {opt!r}")
        key, raw = opt.split("=", 1)
        if key not in allowed:
            raise ConfigError(f"{clf} has no option {key!r} (allowed: {sorted(allowed) or 'none'})")
        typ = allowed[key]
        try:
            if typ is bool:
                if raw not in ("true", "false"):
                    raise ValueError
                value: object = raw == "true"
            else:
                value = typ(raw)
        except ValueError:
            raise ConfigError(f"--clf-opt {key} expects {typ.__name__}, got {raw!r}") from None
        try:
            spec = replace(spec, **{key: value})
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    return spec


def _load_inputs(config: ExperimentConfig) -> FeatureDataset:
    if config.merge != "none":
        a = load_features(config.fc6)
        b = load_features(config.fc7)
        return fusion.merge(a, b, config.merge)
    return load_features(config.fc6 if config.fc6 is not None else config.fc7)


def execute(config: ExperimentConfig, ds: FeatureDataset | None = None) -> EvalReport:
    """Run one experiment; `ds` short-circuits input loading when pre-merged."""
    if ds is None:
        ds = _load_inputs(config)
    view = label_view(ds, config.task)
    if isinstance(config.spec, MlpSpec) and ds.dim >= MLP_WIDTH_WARNING:
        print(
            f"warning: training an mlp on {ds.dim}-dim features is slow; consider --pca",
            file=sys.stderr,
        )
    pipeline = PipelineConfig(
        spec=config.spec,
        pca=config.pca,
        pca_scope=config.pca_scope,
        merge=None if config.merge == "none" else config.merge,
    )
    return cross_validate(
        ds, view, pipeline, k=config.folds, seed=config.seed, stratified=config.stratified
    )


def _atomic_write(path: str, text: str) -> None:
    tmp = f"{path}.tmp-{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; config errors must be 1.
    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="veilkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one experiment and write its report")
    _add_common(run_p)
    run_p.add_argument("--out", required=True, help="report file to write")

    sweep_p = sub.add_parser("sweep", help="run a grid of experiments into a table")
    sweep_p.add_argument("--task", required=True, choices=TASKS)
    sweep_p.add_argument("--fc6", help="first feature file")
    sweep_p.add_argument("--fc7", help="second feature file (needed for merge rows)")
    sweep_p.add_argument(
        "--rows",
        default="fc6,fc7,min,max,mean",
        help="comma list of feature rows: fc6,fc7,min,max,mean",
    )
    sweep_p.add_argument(
        "--pca-levels", default="none,0.99,0.97,0.95", help="comma list of retentions or 'none'"
    )
    sweep_p.add_argument("--clfs", default=",".join(CLF_CHOICES), help="comma list of classifiers")
    sweep_p.add_argument("--pca-scope", default="fold", choices=("fold", "global"))
    sweep_p.add_argument(
        "--clf-opt",
        action="append",
        metavar="CLF.KEY=VALUE",
        help="per-classifier override, e.g. mlp.epochs=100",
    )
    sweep_p.add_argument("--folds", type=int, default=10)
    sweep_p.add_argument("--seed", type=int, default=42)
    sweep_p.add_argument("--no-stratify", action="store_true")
    sweep_p.add_argument("--out", required=True, help="output directory")

    val_p = sub.add_parser("validate", help="check a feature file and print a summary")
    val_p.add_argument("path")
    val_p.add_argument("--dim", type=int, default=None, help="expected feature count")
    return parser


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--task", required=True, choices=TASKS)
    p.add_argument("--fc6", help="first feature file")
    p.add_argument("--fc7", help="second feature file")
    p.add_argument("--merge", default="none", choices=MERGE_CHOICES)
    p.add_argument("--pca", default="none", help="variance retention in (0,1] or 'none'")
    p.add_argument("--pca-scope", default="fold", choices=("fold", "global"))
    p.add_argument("--clf", required=True, choices=CLF_CHOICES)
    p.add_argument("--clf-opt", action="append", metavar="KEY=VALUE")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--no-stratify", action="store_true", help="plain (unstratified) folds")


def _cmd_run(args) -> int:
    config = ExperimentConfig(
        task=args.task,
        fc6=args.fc6,
        fc7=args.fc7,
        merge=args.merge,
        pca=_parse_pca(args.pca),
        pca_scope=args.pca_scope,
        spec=build_spec(args.clf, args.clf_opt),
        folds=args.folds,
        seed=args.seed,
        stratified=not args.no_stratify,
    )
    report = execute(config)
    _atomic_write(args.out, report.to_text())
    print(f"accuracy={report.accuracy:.6f} wall_time={report.wall_time_s:.2f}s -> {args.out}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    rows = [tok for tok in args.rows.split(",") if tok]
    pca_levels = [tok for tok in args.pca_levels.split(",") if tok]
    clfs = [tok for tok in args.clfs.split(",") if tok]
    for tok in rows:
        if tok not in ("fc6", "fc7", "min", "max", "mean"):
            raise ConfigError(f"unknown sweep row {tok!r}")
    for tok in clfs:
        if tok not in CLF_CHOICES:
            raise ConfigError(f"unknown classifier {tok!r}")
    # sweep options are namespaced per classifier: mlp.epochs=100
    opts_by_clf: dict[str, list[str]] = {}
    for opt in args.clf_opt or []:
        head, _, rest = opt.partition(".")
        if head not in CLF_CHOICES or "=" not in rest:
            raise ConfigError(f"sweep --clf-opt expects CLF.KEY=VALUE, got {opt!r}")
        opts_by_clf.setdefault(head, []).append(rest)
    os.makedirs(args.out, exist_ok=True)
    reports_dir = os.path.join(args.out, "reports")
    os.makedirs(reports_dir, exist_ok=True)

    # Load each input once; merged rows reuse them.
    cache: dict[str, FeatureDataset] = {}

    def dataset_for(row: str) -> FeatureDataset:
        if row not in cache:
            if row == "fc6":
                if args.fc6 is None:
                    raise ConfigError("row fc6 requires --fc6")
                cache[row] = load_features(args.fc6)
            elif row == "fc7":
                if args.fc7 is None:
                    raise ConfigError("row fc7 requires --fc7")
                cache[row] = load_features(args.fc7)
            else:
                cache[row] = fusion.merge(dataset_for("fc6"), dataset_for("fc7"), row)
        return cache[row]

    table_lines = ["row,pca," + ",".join(clfs)]
    metric_lines = ["row,pca,clf,accuracy,weighted_f_measure,roc_area,prc_area"]
    failed = 0
    for row in rows:
        for level in pca_levels:
            cells = []
            for clf in clfs:
                try:
                    merge = row if row in ("min", "max", "mean") else "none"
                    config = ExperimentConfig(
                        task=args.task,
                        fc6=args.fc6 if merge != "none" or row == "fc6" else None,
                        fc7=args.fc7 if merge != "none" or row == "fc7" else None,
                        merge=merge,
                        pca=_parse_pca(level),
                        pca_scope=args.pca_scope,
                        spec=build_spec(clf, opts_by_clf.get(clf)),
                        folds=args.folds,
                        seed=args.seed,
                        stratified=not args.no_stratify,
                    )
                    report = execute(config, ds=dataset_for(row))
                    cells.append(f"{report.accuracy:.6f}")
                    metric_lines.append(
                        f"{row},{level},{clf},{report.accuracy:.6f},"
                        f"{report.weighted_f:.6f},{report.roc:.6f},{report.prc:.6f}"
                    )
                    cell_name = f"{row}_{level}_{clf}.txt"
                    _atomic_write(os.path.join(reports_dir, cell_name), report.to_text())
                except Exception as exc:  # cell failures must not stop the sweep
                    failed += 1
                    cells.append("ERR")
                    metric_lines.append(f"{row},{level},{clf},ERR,ERR,ERR,ERR")
                    print(f"cell {row}/{level}/{clf} failed: {exc}", file=sys.stderr)
            table_lines.append(f"{row},{level}," + ",".join(cells))
    _atomic_write(os.path.join(args.out, "accuracy.csv"), "\n".join(table_lines) + "\n")
    _atomic_write(os.path.join(args.out, "metrics.csv"), "\n".join(metric_lines) + "\n")
    print(f"wrote {args.out}/accuracy.csv ({failed} failed cells)")
    return EXIT_OK if failed == 0 else EXIT_RUNTIME


def _cmd_validate(args) -> int:
    ds = load_features(args.path, expected_dim=args.dim)
    print(f"n={ds.n}, d={ds.dim}, layer={ds.layer_tag}")
    for task in TASKS:
        view = label_view(ds, task)
        sizes = view.class_sizes()
        pairs = " ".join(f"{name}={int(c)}" for name, c in zip(view.class_names, sizes))
        print(f"{task}: {pairs}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        return _cmd_validate(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except VeilkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
