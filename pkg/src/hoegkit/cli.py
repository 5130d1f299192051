"""Command-line interface.

Exit codes: 0 success, 1 domain violation (invalid log), 2 usage or I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import io as ocel_io
from .encoders import encode_efg, encode_hoeg
from .extraction import extract
from .features import build_feature_config, fit_normalization, assign_splits
from .learn import ModelConfig, ModelParams, model_predictor
from .model import validate
from .pipeline import (
    SUMMARY_COLUMNS,
    RunConfig,
    build_dataset,
    fit_and_evaluate,
    median_report,
    metric_rows,
    split_metrics,
    summary_row,
)
from .synthetic import make_linear_log

log = logging.getLogger("hoegkit")

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def load_run_config(args) -> RunConfig:
    """RunConfig from ``--config`` (if any) with command-line overrides applied."""
    data = {}
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
    model = dict(data.pop("model", {}) or {})
    overrides = {
        "input": args.input,
        "out": args.out,
        "seed": args.seed,
        "encoder": args.encoder,
        "extraction": args.extraction,
        "dataset": getattr(args, "dataset", None),
        "splits": _floats(args.splits) if args.splits else None,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    for key, attr in (("hidden_dim", "hidden_dim"), ("learning_rate", "lr"), ("max_epochs", "epochs"),
                      ("early_stop_patience", "patience")):
        value = getattr(args, attr, None)
        if value is not None:
            model[key] = value
    if "seed" in data and "seed" not in model:
        model["seed"] = data["seed"]
    try:
        run = RunConfig(**data, model=ModelConfig(**model))
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid configuration: {exc}") from None
    if not run.input or not Path(run.input).exists():
        raise UsageError(f"input file not found: {run.input!r}")
    return run


def _read_log(path, strict: bool = True):
    try:
        return ocel_io.read_ocel(path, strict)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    except ocel_io.OcelParseError as exc:
        raise UsageError(f"parse error in {path}: {exc}") from None


def _require_input(args) -> str:
    if not args.input:
        raise UsageError("--input is required")
    return args.input


def cmd_validate(args) -> int:
    event_log, report = _read_log(_require_input(args), strict=False)
    for w in report.warnings:
        log.warning(w)
    violations = validate(event_log, zero_fill=args.zero_fill)
    for v in violations:
        print(v)
    if violations:
        return EXIT_VIOLATION
    print(f"ok: {report.events} events, {report.objects} objects, {report.types} object types")
    return EXIT_OK


def cmd_stats(args) -> int:
    event_log, _ = _read_log(_require_input(args))
    try:
        stats = ocel_io.log_stats(event_log, args.extraction or "cc")
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print(stats.row())
    return EXIT_OK


def cmd_extract(args) -> int:
    event_log, _ = _read_log(_require_input(args))
    try:
        executions = extract(event_log, args.extraction or "cc")
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print(f"{len(executions)} executions")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        doc = [
            {"id": ex.id, "objects": sorted(ex.object_ids), "events": list(ex.event_ids),
             "edges": sorted(list(e) for e in ex.edges)}
            for ex in executions
        ]
        (out / "executions.json").write_text(json.dumps(doc, indent=1) + "\n")
    return EXIT_OK


def cmd_encode(args) -> int:
    run = load_run_config(args)
    event_log, _ = _read_log(run.input)
    try:
        executions = [ex for ex in extract(event_log, run.extraction) if ex.event_ids]
        split = assign_splits(executions, run.splits, run.seed, run.chronological)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    train_ex = [ex for ex in executions if split.assignment[ex.id] == "train"]
    cfg = build_feature_config(train_ex, event_log, **run.features)
    stats = fit_normalization(train_ex, event_log, cfg)
    if args.prefix:
        executions = [ex for ex in executions if args.prefix in ex.event_ids]
        if not executions:
            raise UsageError(f"prefix event {args.prefix!r} is in no execution")
    encode = encode_efg if run.encoder in ("efg", "efg_ss") else encode_hoeg

    out = Path(run.out)
    (out / "graphs").mkdir(parents=True, exist_ok=True)
    manifest = {"config": run.to_dict(), "feature_config": cfg.to_dict(), "stats": stats.to_dict(), "graphs": []}
    for ex in executions:
        g = encode(ex, event_log, cfg, stats, args.prefix)
        name = f"graphs/{ex.id}.json"
        (out / name).write_bytes(ocel_io.serialize_hoeg(g))
        manifest["graphs"].append({"execution_id": ex.id, "file": name, "split": split.assignment[ex.id]})
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    print(f"wrote {len(executions)} graphs to {out}")
    return EXIT_OK


def _train_run(run: RunConfig):
    event_log, _ = _read_log(run.input)
    for problem in run.model.grid_deviations():
        log.info("note: %s", problem)
    try:
        dataset = build_dataset(event_log, run)
        params, report = fit_and_evaluate(dataset, run.model)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return dataset, params, report


def cmd_train(args) -> int:
    run = load_run_config(args)
    dataset, params, report = _train_run(run)
    out = Path(run.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(run.to_json() + "\n")
    (out / "features.json").write_text(json.dumps(
        {"feature_config": dataset.feature_config.to_dict(), "stats": dataset.stats.to_dict()}, indent=1) + "\n")
    (out / "splits.json").write_text(json.dumps(dataset.split.to_dict(), indent=1, sort_keys=True) + "\n")
    params.save(out / "checkpoint.json")
    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=1) + "\n")
    row = summary_row(run.dataset_name, run.encoder, report.metrics, report.fit_seconds, report.predict_seconds)
    ocel_io.write_metrics_csv(out / "metrics.csv", [row], SUMMARY_COLUMNS)
    ocel_io.write_metrics_csv(out / "metrics_long.csv", metric_rows(
        run.dataset_name, run.encoder, report.metrics, report.fit_seconds, report.predict_seconds))
    m = report.metrics
    print(f"best epoch {report.best_epoch}/{report.epochs_run}; "
          f"test MAE {m['test']['mae']:.4f} MSE {m['test']['mse']:.4f}; fit {report.fit_seconds:.2f}s")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    if not args.out:
        raise UsageError("--out must point to a directory written by 'train'")
    out = Path(args.out)
    try:
        run = RunConfig.from_json((out / "config.json").read_text())
        params = ModelParams.load(out / "checkpoint.json")
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot load trained run from {out}: {exc}") from None
    if args.input:
        run.input = args.input
    event_log, _ = _read_log(run.input)
    dataset = build_dataset(event_log, run)
    metrics, seconds = split_metrics(model_predictor(params), dataset)
    rows = metric_rows(run.dataset_name, run.encoder, metrics, 0.0, seconds)
    med, med_seconds = median_report(dataset)
    rows += metric_rows(run.dataset_name, "median", med, 0.0, med_seconds)
    ocel_io.write_metrics_csv(out / "evaluation.csv", rows)
    for r in rows:
        print(f"{r['model']:>8} {r['split']:>10}  MAE {r['mae']:.4f}  MSE {r['mse']:.4f}")
    return EXIT_OK


def cmd_grid(args) -> int:
    run = load_run_config(args)
    hds = sorted(set(_ints(args.hidden_dims)))
    lrs = sorted(set(_floats(args.learning_rates)))
    if not hds or not lrs:
        raise UsageError("empty hyperparameter grid")
    rows = []
    for hd in hds:
        for lr in lrs:
            run.model.hidden_dim = hd
            run.model.learning_rate = lr
            _, _, report = _train_run(run)
            row = {"hidden_dim": hd, "learning_rate": lr}
            row.update(summary_row(run.dataset_name, run.encoder, report.metrics,
                                   report.fit_seconds, report.predict_seconds))
            rows.append(row)
            log.info("hd=%s lr=%s test MAE %.4f", hd, lr, report.metrics["test"]["mae"])
    out = Path(run.out)
    out.mkdir(parents=True, exist_ok=True)
    ocel_io.write_metrics_csv(out / "grid.csv", rows, ["hidden_dim", "learning_rate"] + SUMMARY_COLUMNS)
    print(f"wrote {len(rows)} rows to {out / 'grid.csv'}")
    return EXIT_OK


def cmd_fixture(args) -> int:
    if not args.out:
        raise UsageError("--out is required")
    if args.synthetic:
        event_log = make_linear_log(args.synthetic, seed=args.seed or 0)
    else:
        event_log = ocel_io.build_otc_fixture()
    path = Path(args.out)
    if path.parent:
        path.parent.mkdir(parents=True, exist_ok=True)
    try:
        ocel_io.write_ocel(event_log, path)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from None
    print(f"wrote {len(event_log.events)} events to {path}")
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "stats": cmd_stats,
    "extract": cmd_extract,
    "encode": cmd_encode,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "grid": cmd_grid,
    "fixture": cmd_fixture,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hoegkit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--input", help="JSON-OCEL file")
        p.add_argument("--out", help="output directory (file for 'fixture')")
        p.add_argument("--seed", type=int)
        p.add_argument("--encoder", choices=("efg", "hoeg", "efg_ss"))
        p.add_argument("--extraction", help="cc or leading:TYPE")
        p.add_argument("--splits", help="train,validation,test ratios, e.g. 0.7,0.15,0.15")
        p.add_argument("--dataset", help="dataset name used in metric files")
        p.add_argument("--hidden-dim", type=int)
        p.add_argument("--lr", type=float)
        p.add_argument("--epochs", type=int)
        p.add_argument("--patience", type=int)
        return p

    for name in COMMANDS:
        p = common(sub.add_parser(name))
        if name == "validate":
            p.add_argument("--zero-fill", action="store_true",
                           help="allow missing numeric object attributes")
        if name == "encode":
            p.add_argument("--prefix", help="keep only events up to this event id")
        if name == "grid":
            p.add_argument("--hidden-dims", default="8,16,24,32,48,64,128,256")
            p.add_argument("--learning-rates", default="0.01,0.001")
        if name == "fixture":
            p.add_argument("--synthetic", type=int, metavar="N",
                           help="write a synthetic log with N executions instead")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
