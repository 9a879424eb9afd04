"""Command-line entry point: synth, preprocess, train, evaluate and sweep.

Exit codes: 0 success, 1 usage or configuration error, 2 data error, 3 training failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .config import FROZEN_CONFIG, ConfigError, RunConfig, parse_seeds
from .data import (DataError, corpus_holidays, load_corpus, load_holidays, preprocess_corpus, synthesize_corpus,
                   write_corpus)
from .evaluation import EvaluationReport, ForecastSet, MetricError, evaluate, seed_ci, write_reports
from .models import ModelKind, build_model, model_from_checkpoint, save_checkpoint
from .resources import resource_report, write_resource_reports
from .training import TrainingError, sweep, train, write_trials
from .windowing import WindowSpec, apply_feature_config, build_datasets

log = logging.getLogger("heatbench")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_TRAIN = 0, 1, 2, 3
CLEANED_DIR = "cleaned"
CHECKPOINT_DIR = "checkpoints"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--model", choices=[k.value for k in ModelKind])
    p.add_argument("--horizon", type=int, choices=[3, 24])
    p.add_argument("--feature-config", type=int, choices=[1, 2, 3],
                   help="1 past consumption only, 2 plus weather and calendar, 3 plus building attributes")
    p.add_argument("--seeds", help="comma list or inclusive range, e.g. 1,2,3 or 0-4")
    p.add_argument("--out", help="output directory")
    p.add_argument("--data", help="corpus directory (raw or preprocessed); synthesized when absent")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="heatbench", description="Heat-demand forecasting benchmark")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    synth = sub.add_parser("synth", help="write a seeded synthetic corpus")
    _common(synth)
    synth.add_argument("--buildings", type=int)
    synth.add_argument("--days", type=int)
    synth.add_argument("--long-gaps", type=int)
    for name, text in [("preprocess", "clean the corpus and write features, stats and a report"),
                       ("train", "train one model per seed and write checkpoints and loss curves"),
                       ("evaluate", "score checkpoints in --out on the test split, next to the naive baseline"),
                       ("sweep", "run the configured hyperparameter search")]:
        _common(sub.add_parser(name, help=text))
    return parser


def _overrides(args) -> dict:
    o: dict = {}
    if args.model:
        o.setdefault("model", {})["kind"] = args.model
    if args.horizon:
        o.setdefault("window", {})["horizon"] = args.horizon
    if args.feature_config:
        o.setdefault("window", {})["feature_config"] = args.feature_config
    if args.seeds:
        o["seeds"] = parse_seeds(args.seeds)
    if args.out:
        o["out"] = args.out
    if args.data:
        o.setdefault("data", {})["path"] = str(Path(args.data).resolve())
    for flag, key in (("buildings", "n_buildings"), ("days", "days"), ("long_gaps", "long_gaps")):
        if getattr(args, flag, None) is not None:
            o.setdefault("data", {}).setdefault("synth", {})[key] = getattr(args, flag)
    return o


# data

def _load_corpus(cfg: RunConfig):
    path = cfg.data_path
    if path is None:
        s = cfg.synth
        corpus = synthesize_corpus(s.pop("n_buildings"), s.pop("days"), s.pop("seed"), **s)
        return corpus, corpus_holidays(corpus)
    if (path / CLEANED_DIR).is_dir():
        path = path / CLEANED_DIR
    return load_corpus(path), load_holidays(path)


def _frames(cfg: RunConfig):
    corpus, holidays = _load_corpus(cfg)
    return preprocess_corpus(corpus, holidays, cfg.cleaning_config())


def _feature_dims(frames, spec: WindowSpec) -> tuple[int, int]:
    _, cov_names, _, static_names = apply_feature_config(frames[0], spec.feature_config)
    return len(cov_names), len(static_names)


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True))


# commands

def cmd_synth(cfg: RunConfig) -> int:
    out = cfg.out_dir
    s = cfg.synth
    corpus = synthesize_corpus(s.pop("n_buildings"), s.pop("days"), s.pop("seed"), **s)
    write_corpus(out, corpus, corpus_holidays(corpus))
    cfg.freeze(out)
    log.info("wrote %d synthetic buildings to %s", len(corpus), out)
    return EXIT_OK


def cmd_preprocess(cfg: RunConfig) -> int:
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    corpus, holidays = _load_corpus(cfg)
    result = preprocess_corpus(corpus, holidays, cfg.cleaning_config())
    write_corpus(out / CLEANED_DIR, result.cleaned, holidays)
    _dump(out / "report.json", result.report.to_dict())
    split = build_datasets(result.frames, cfg.window_spec(), "sequential")
    _dump(out / "standardization.json", {sid: st.to_dict() for sid, st in split.stats.items()})
    _dump(out / "splits.json", [asdict(r) for r in split.report])
    arrays = {}
    for f in result.frames:
        key = f.series_id.replace("/", "__")
        arrays[f"{key}__consumption"] = f.consumption
        arrays[f"{key}__covariates"] = f.covariates
        arrays[f"{key}__static"] = np.asarray(f.static, dtype=float)
    np.savez(out / "features.npz", **arrays)
    cfg.freeze(out)
    r = result.report
    log.info("%d series, %d points, %d removed, %.4f interpolated", r.n_series, r.n_points,
             r.n_removed_this_pass, r.interpolated_fraction)
    return EXIT_OK


def run_name(kind: ModelKind, horizon: int, seed: int) -> str:
    return f"{kind.value}_h{horizon}_seed{seed}"


def cmd_train(cfg: RunConfig) -> int:
    out = cfg.out_dir
    (out / CHECKPOINT_DIR).mkdir(parents=True, exist_ok=True)
    (out / "curves").mkdir(exist_ok=True)
    frames = _frames(cfg).frames
    wspec = cfg.window_spec()
    split = build_datasets(frames, wspec, "sequential")
    mspec = cfg.model_spec(split.train.n_c, split.train.n_s)
    tr, va = split.train.as_layout(mspec.layout), split.val.as_layout(mspec.layout)
    _dump(out / "datasets.json", {name: {"X": list(d.as_layout(mspec.layout).X.shape), "y": list(d.y.shape)}
                                  for name, d in (("train", split.train), ("val", split.val), ("test", split.test))})
    cfg.freeze(out)
    failures = []
    for seed in cfg.seeds:
        name = run_name(mspec.kind, mspec.n_out, seed)
        try:
            trained = train(build_model(mspec, seed), tr, va, cfg.train_config(seed))
        except TrainingError as exc:
            log.error("%s failed: %s", name, exc)
            failures.append(name)
            continue
        meta = {**trained.meta(), "window": wspec.to_dict()}
        save_checkpoint(out / CHECKPOINT_DIR / f"{name}.zip", mspec, trained.state(), meta)
        with open(out / "curves" / f"{name}.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["epoch", "train_loss", "val_loss", "seconds"])
            w.writeheader()
            for row in trained.history.rows():
                w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
        log.info("%s: best epoch %d, val loss %.6f", name, trained.history.best_epoch + 1,
                 min(trained.history.val_loss) if trained.history.val_loss else float("nan"))
    if failures:
        log.error("%d of %d runs failed: %s", len(failures), len(cfg.seeds), ", ".join(failures))
        return EXIT_TRAIN
    return EXIT_OK


def _test_forecasts(model, split) -> ForecastSet:
    te = split.test.as_layout(model.spec.layout)
    pred = model.predict(te.X, te.future)
    return ForecastSet.from_standardized(te.series_id, te.start, te.y, pred, split.stats)


def cmd_evaluate(cfg: RunConfig) -> int:
    run_dir = cfg.out_dir
    paths = sorted((run_dir / CHECKPOINT_DIR).glob("*.zip"))
    if not paths:
        raise DataError(f"no checkpoints under {run_dir / CHECKPOINT_DIR}")
    frames = _frames(cfg).frames
    splits: dict[WindowSpec, object] = {}
    reports: list[EvaluationReport] = []
    resources = []
    by_kind: dict[str, list[EvaluationReport]] = {}
    naive_done = set()
    for path in paths:
        try:
            model, meta = model_from_checkpoint(path)
        except ValueError as exc:
            raise DataError(str(exc)) from None
        wspec = WindowSpec(**meta["window"])
        if wspec not in splits:
            splits[wspec] = build_datasets(frames, wspec, "sequential")
        split = splits[wspec]
        key = (wspec.n_in, wspec.n_out)
        if key not in naive_done:
            naive_done.add(key)
            naive = build_model(cfg.model_spec(split.train.n_c, split.train.n_s, ModelKind.NAIVE)
                                .with_(n_in=wspec.n_in, n_out=wspec.n_out))
            name = "naive" if len(naive_done) == 1 else f"naive_in{wspec.n_in}_h{wspec.n_out}"
            reports.append(evaluate(name, _test_forecasts(naive, split), split.test_mean_consumption()))
        rep = evaluate(path.stem, _test_forecasts(model, split), split.test_mean_consumption())
        reports.append(rep)
        by_kind.setdefault(f"{model.spec.kind.value}_h{model.spec.n_out}", []).append(rep)
        if model.trainable:
            resources.append(resource_report(model, meta.get("epoch_seconds", []), cfg.device,
                                             cfg.carbon_intensity, name=path.stem))
    for rep in reports:
        bad = rep.check_identities()
        if bad:
            raise MetricError(f"{rep.model}: metric identities violated: {bad}")
    seeds = {kind: {m: seed_ci([r.overall[m] for r in reps]).to_dict() for m in ("RMSE", "MAE")}
             for kind, reps in by_kind.items()}
    eval_dir = run_dir / "evaluation"
    write_reports(reports, eval_dir)
    _dump(eval_dir / "seeds.json", seeds)
    write_resource_reports(resources, eval_dir / "resources.json")
    if not (run_dir / FROZEN_CONFIG).exists():
        cfg.freeze(run_dir)
    for rep in reports:
        log.info("%-28s RMSE %.4f  MAE %.4f  nRMSE %.4f", rep.model, rep.overall["RMSE"], rep.overall["MAE"],
                 rep.overall["nRMSE"])
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    spec = cfg.sweep_spec()
    frames = _frames(cfg).frames
    wspec = cfg.window_spec()
    n_c, n_s = _feature_dims(frames, wspec)
    base = cfg.model_spec(n_c, n_s)
    results = sweep(spec, frames, base, cfg.train_config(), wspec.feature_config)
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    write_trials(results, out / "trials.csv")
    cfg.freeze(out)
    ok = [r for r in results if r.status == "ok"]
    if ok:
        log.info("best trial %d: %s val RMSE %.4f", ok[0].index, ok[0].params, ok[0].val_rmse)
    return EXIT_OK if ok else EXIT_TRAIN


COMMANDS = {"synth": cmd_synth, "preprocess": cmd_preprocess, "train": cmd_train, "evaluate": cmd_evaluate,
            "sweep": cmd_sweep}


def _load_config(args) -> RunConfig:
    path = args.config
    if path is None and args.command == "evaluate" and args.out and (Path(args.out) / FROZEN_CONFIG).exists():
        path = Path(args.out) / FROZEN_CONFIG
    return RunConfig.load(path, _overrides(args))


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load_config(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"heatbench: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, MetricError) as exc:
        print(f"heatbench: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TrainingError as exc:
        print(f"heatbench: training failed: {exc}", file=sys.stderr)
        return EXIT_TRAIN
    except ValueError as exc:
        print(f"heatbench: invalid setting: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
