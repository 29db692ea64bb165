"""``xgx`` command line: train, explain, profile, report, metrics.

stdout carries JSON only; diagnostics go to stderr. Exit codes: 0 ok,
2 data error, 3 training error, 4 empty selection, 5 configuration error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace

from . import analysis
from .errors import DataError, EmptyGroup, TrainingError, UnknownFeature
from .events import DEFAULT_RARE_THRESHOLD, GroupSelector, build_encoding, encode, match_split, parse_csv, select
from .glocal import DEFAULT_GRID_POINTS, aggregate_profiles, aggregate_shap, cp_profile, make_grid, pdp
from .metrics import compute_metrics, write_metrics_csv
from .models import GBTConfig, evaluate, load_model, save_model, train_gbt, train_logistic
from .shapley import DEFAULT_BACKGROUND, DEFAULT_PERMUTATIONS, BackgroundSet, FeatureGrouping, explain_rows

log = logging.getLogger("xgx")

EXIT_DATA, EXIT_TRAIN, EXIT_EMPTY, EXIT_CONFIG = 2, 3, 4, 5
WORKFLOWS = {
    "scoring-potential": "scoring_potential",
    "goalkeeper-blindspot": "goalkeeper_blindspot",
    "season-comparison": "season_comparison",
}


class ConfigError(Exception):
    pass


def _emit(obj, out=None):
    text = json.dumps(obj, indent=2, ensure_ascii=False) + "\n"
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        sys.stdout.write(json.dumps({"written": [out]}) + "\n")
    else:
        sys.stdout.write(text)


def _require_file(path, what):
    if not path or not os.path.isfile(path):
        raise DataError(f"{what} not found: {path}")


def _load(args):
    _require_file(args.data, "data file")
    _require_file(args.model, "model file")
    model = load_model(args.model)
    events = parse_csv(args.data)
    if not events:
        raise DataError(f"{args.data}: no shot rows")
    return model, encode(events, model.encoding)


def _selector(args, extra=None):
    try:
        return GroupSelector.parse(list(args.select or []) + list(extra or []))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _background(args, dataset):
    train, _ = match_split(dataset)
    return BackgroundSet.draw(dataset, args.background, args.seed, train if train.size else None)


def _check_feature(dataset, feature):
    if feature not in dataset.encoding.features:
        raise UnknownFeature(feature)


def cmd_train(args):
    _require_file(args.data, "data file")
    events = parse_csv(args.data)
    if not events:
        raise DataError(f"{args.data}: no shot rows")
    dataset = encode(events, build_encoding(events, args.rare_threshold))
    train_idx, test_idx = match_split(dataset)
    train = dataset.subset(train_idx)
    if args.model_type == "logistic":
        model = train_logistic(train, penalty=args.penalty)
    else:
        model = train_gbt(train, GBTConfig(trees=args.trees, depth=args.depth,
                                           learning_rate=args.learning_rate,
                                           min_leaf=args.min_leaf, seed=args.seed))
    save_model(model, args.out)
    result = {"model": args.out, "model_type": args.model_type,
              "n_train": int(train_idx.size), "n_test": int(test_idx.size),
              "train": evaluate(model, train).to_dict()}
    if test_idx.size:
        result["test"] = evaluate(model, dataset.subset(test_idx)).to_dict()
    _emit(result)


def cmd_explain(args):
    model, dataset = _load(args)
    rows = select(dataset, _selector(args))
    if rows.size == 0:
        raise EmptyGroup("selection matched no shots")
    bg = _background(args, dataset)
    grouping = FeatureGrouping.from_encoding(dataset.encoding)
    attrs = explain_rows(model, dataset.X[rows], bg, grouping, method=args.method,
                         n_perm=args.n_perm, seed=args.seed, ids=rows.tolist(), threads=args.threads)
    if rows.size == 1:
        _emit(attrs[0].to_dict(), args.out)
    else:
        _emit(aggregate_shap(attrs, mode=args.mode, group=_selector(args).to_dict()).to_dict(), args.out)


def cmd_profile(args):
    model, dataset = _load(args)
    _check_feature(dataset, args.feature)
    grid = make_grid(dataset, args.feature, args.grid_points)
    if not args.select:
        prof = pdp(model, dataset, args.feature, grid, threads=args.threads)
    else:
        rows = select(dataset, _selector(args))
        if rows.size == 0:
            raise EmptyGroup("selection matched no shots")
        if rows.size == 1:
            prof = cp_profile(model, dataset.X[rows[0]], args.feature, grid, dataset.encoding)
        else:
            prof = aggregate_profiles(model, dataset, rows, args.feature, grid, threads=args.threads)
    _emit(prof.to_dict(), args.out)


def _names(text):
    return [s.strip() for s in (text or "").split(",") if s.strip()]


def cmd_report(args):
    workflow = WORKFLOWS.get(args.workflow)
    if workflow is None:
        raise ConfigError(f"unknown workflow {args.workflow!r}; choose from {', '.join(WORKFLOWS)}")
    model, dataset = _load(args)
    features = _names(args.features)
    for f in features:
        _check_feature(dataset, f)
    extra = _selector(args)
    if workflow == "scoring_potential":
        players = _names(args.players)
        if not players:
            raise ConfigError("--players is required")
        report = analysis.scoring_potential(
            model, dataset, [replace(extra, player=p) for p in players],
            features=features or analysis.SCORING_FEATURES, grid_points=args.grid_points,
            threads=args.threads)
    elif workflow == "goalkeeper_blindspot":
        teams = _names(args.keepers)
        if not teams:
            raise ConfigError("--keepers is required (team names)")
        labels = _names(args.labels) or None
        if labels is not None and len(labels) != len(teams):
            raise ConfigError("--labels must match --keepers")
        report = analysis.goalkeeper_blindspot(
            model, dataset, [replace(extra, team=t) for t in teams],
            features=features or analysis.KEEPER_FEATURES, labels=labels, threads=args.threads)
    else:
        seasons = _names(args.seasons)
        if not args.team or len(seasons) != 2:
            raise ConfigError("--team and two --seasons are required")
        report = analysis.season_comparison(
            model, dataset, replace(extra, team=args.team), seasons, background=_background(args, dataset),
            method=args.method, n_perm=args.n_perm, seed=args.seed, mode=args.mode, threads=args.threads)
    os.makedirs(args.out_dir, exist_ok=True)
    json_path = os.path.join(args.out_dir, f"{workflow}.json")
    with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report.to_json())
    paths = analysis.render_svg(report, args.out_dir)
    sys.stdout.write(json.dumps({"report": json_path, "figures": paths}, indent=2, ensure_ascii=False) + "\n")


def cmd_metrics(args):
    model, dataset = _load(args)
    base = _selector(args)
    if args.by:
        rows = select(dataset, base)
        if rows.size == 0:
            raise EmptyGroup("selection matched no shots")
        keys = sorted(set(dataset.meta[args.by][rows].tolist()))
        subjects = [replace(base, **{args.by: k}) for k in keys]
    else:
        subjects = [base]
    reports = [compute_metrics(model, dataset, s, exclude_penalties=args.exclude_penalties) for s in subjects]
    if args.csv:
        write_metrics_csv(reports, args.csv)
    _emit([r.to_dict() for r in reports], args.out)


def _threads_default():
    try:
        return max(1, int(os.environ.get("XGX_THREADS", "1")))
    except ValueError:
        return 1


def build_parser():
    parser = argparse.ArgumentParser(prog="xgx", description="Glocal explanations of expected-goal models.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_model=True):
        p.add_argument("--data", required=True, help="shot CSV")
        if needs_model:
            p.add_argument("--model", required=True, help="model JSON from `xgx train`")
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--threads", type=int, default=_threads_default())

    def selecting(p):
        p.add_argument("--select", action="append", metavar="KEY=VALUE",
                       help="equality filter; repeat for a conjunction")

    def shap_opts(p):
        p.add_argument("--method", choices=("auto", "exact", "sampled"), default="auto")
        p.add_argument("--n-perm", type=int, default=DEFAULT_PERMUTATIONS)
        p.add_argument("--background", type=int, default=DEFAULT_BACKGROUND)
        p.add_argument("--mode", choices=("mean", "sum"), default="mean")

    p = sub.add_parser("train", help="fit a reference xG model")
    common(p, needs_model=False)
    p.add_argument("--out", required=True)
    p.add_argument("--model-type", choices=("gbt", "logistic"), default="gbt")
    p.add_argument("--trees", type=int, default=200)
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--min-leaf", type=int, default=20)
    p.add_argument("--penalty", type=float, default=1.0)
    p.add_argument("--rare-threshold", type=int, default=DEFAULT_RARE_THRESHOLD)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("explain", help="SHAP for one shot or aSHAP for a group")
    common(p)
    selecting(p)
    shap_opts(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("profile", help="CP / AP / PDP for one feature")
    common(p)
    selecting(p)
    p.add_argument("--feature", required=True)
    p.add_argument("--grid-points", type=int, default=DEFAULT_GRID_POINTS)
    p.add_argument("--out")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("report", help="run an analysis workflow, write JSON + SVG")
    p.add_argument("workflow", help=", ".join(WORKFLOWS))
    common(p)
    selecting(p)
    shap_opts(p)
    p.add_argument("--players", help="comma-separated player names")
    p.add_argument("--keepers", help="comma-separated team names whose conceded shots are analysed")
    p.add_argument("--labels", help="display names for --keepers")
    p.add_argument("--team")
    p.add_argument("--seasons", help="two comma-separated seasons")
    p.add_argument("--features", help="comma-separated feature names")
    p.add_argument("--grid-points", type=int, default=DEFAULT_GRID_POINTS)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("metrics", help="xG, xGOT, xGA, xGAOT for a selection")
    common(p)
    selecting(p)
    p.add_argument("--by", choices=("player", "team"))
    p.add_argument("--exclude-penalties", action="store_true")
    p.add_argument("--csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("xgx: %(message)s"))
    log.handlers = [handler]
    log.propagate = False
    log.setLevel(logging.INFO if args.verbose else logging.WARNING)
    try:
        args.func(args)
    except DataError as exc:
        log.error("data error: %s", exc)
        return EXIT_DATA
    except TrainingError as exc:
        log.error("training error: %s", exc)
        return EXIT_TRAIN
    except EmptyGroup as exc:
        log.error("empty selection: %s", exc)
        return EXIT_EMPTY
    except (ConfigError, UnknownFeature, ValueError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
