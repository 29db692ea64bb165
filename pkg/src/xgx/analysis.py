"""Performance-analysis workflows built from group explanations.

Three report generators:

* ``scoring_potential``: aggregated profiles of players' shots on
  continuous features, ranked per grid point (higher is better).
* ``goalkeeper_blindspot``: aggregated profiles of the on-target shots a
  team conceded, over categorical features (lower is better), with the
  level of each keeper's worst relative rank flagged.
* ``season_comparison``: mean aggregated SHAP of a team's shots in two
  seasons and the per-feature change between them.
"""
from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy.stats import rankdata

from . import svg
from .errors import EmptyGroup
from .events import EncodedDataset, GroupSelector, match_split, select
from .glocal import DEFAULT_GRID_POINTS, aggregate_profiles, aggregate_shap, make_grid
from .metrics import compute_metrics
from .models import Predictor, model_fingerprint
from .shapley import DEFAULT_BACKGROUND, DEFAULT_PERMUTATIONS, BackgroundSet, FeatureGrouping, explain_rows

SCORING_FEATURES = ("distance_to_goal", "angle_to_goal")
KEEPER_FEATURES = ("situation", "shot_type", "home_away")


@dataclass
class AnalysisReport:
    workflow: str
    created_from: dict
    subjects: List[dict] = field(default_factory=list)
    artifacts: List[dict] = field(default_factory=list)
    tables: List[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"workflow": self.workflow, "created_from": self.created_from,
                "subjects": self.subjects, "artifacts": self.artifacts, "tables": self.tables}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"


def _provenance(model, dataset, config):
    return {"model_fingerprint": model_fingerprint(model),
            "dataset_fingerprint": dataset.fingerprint(), "config": config}


def _ranks(values: np.ndarray, higher_is_better: bool) -> np.ndarray:
    """Competition ranks per column (1 = best, ties share the best rank)."""
    keyed = -values if higher_is_better else values
    return np.column_stack([rankdata(keyed[:, g], method="min").astype(int)
                            for g in range(values.shape[1])])


def _profile_artifact(label, profile):
    return {"subject": label, "type": "profile", **profile.to_dict()}


def scoring_potential(model: Predictor, dataset: EncodedDataset, players: Sequence[GroupSelector],
                      features: Sequence[str] = SCORING_FEATURES, grid_points: int = DEFAULT_GRID_POINTS,
                      threads: int = 1) -> AnalysisReport:
    if not players:
        raise ValueError("at least one player selector is required")
    report = AnalysisReport("scoring_potential", _provenance(
        model, dataset, {"features": list(features), "grid_points": grid_points}))
    groups = []
    for sel in players:
        rows = select(dataset, sel)
        entry = {"label": sel.label(), "selector": sel.to_dict(), "n": int(rows.size)}
        if rows.size == 0:
            entry["warning"] = "no shots matched; subject skipped"
        else:
            groups.append((sel.label(), rows))
        report.subjects.append(entry)
    if not groups:
        raise EmptyGroup("no player selector matched any shot")
    everyone = np.unique(np.concatenate([rows for _, rows in groups]))
    for feature in features:
        grid = make_grid(dataset, feature, grid_points)
        profiles = [(label, aggregate_profiles(model, dataset, rows, feature, grid, threads=threads))
                    for label, rows in groups]
        report.artifacts.extend(_profile_artifact(label, prof) for label, prof in profiles)
        values = np.array([prof.values for _, prof in profiles])
        ranks = _ranks(values, higher_is_better=True)
        ref = None
        if not grid.categorical:
            col = dataset.encoding.feature_columns(feature)[0]
            ref = float(np.mean(dataset.X[everyone, col]))
        report.tables.append({
            "feature": feature, "type": "ap_ranking", "higher_is_better": True,
            "grid": list(grid.values), "reference_mean": ref,
            "rows": [{"subject": label, "values": values[i].tolist(), "ranks": ranks[i].tolist()}
                     for i, (label, _) in enumerate(profiles)],
        })
    return report


def _blind_spots(ranks: np.ndarray) -> List[List[int]]:
    """Per subject, grid positions holding its worst rank (none if flat)."""
    flags = []
    for r in ranks:
        worst = r.max()
        flags.append([] if worst == r.min() else np.flatnonzero(r == worst).tolist())
    return flags


def goalkeeper_blindspot(model: Predictor, dataset: EncodedDataset, keepers: Sequence[GroupSelector],
                         features: Sequence[str] = KEEPER_FEATURES, labels: Optional[Sequence[str]] = None,
                         threads: int = 1) -> AnalysisReport:
    """Selectors are forced to conceded, on-target shots of the keeper's team."""
    if not keepers:
        raise ValueError("at least one keeper selector is required")
    keepers = [replace(k, role="conceded", on_target=True) for k in keepers]
    labels = list(labels) if labels is not None else [k.label() for k in keepers]
    report = AnalysisReport("goalkeeper_blindspot", _provenance(
        model, dataset, {"features": list(features)}))
    groups = []
    for label, sel in zip(labels, keepers):
        rows = select(dataset, sel)
        if rows.size == 0:
            raise EmptyGroup(f"no conceded on-target shots for {label}")
        groups.append((label, rows))
        report.subjects.append({"label": label, "selector": sel.to_dict(), "n": int(rows.size)})
        try:
            metrics = compute_metrics(model, dataset, replace(sel, role="taken", on_target=None))
            report.artifacts.append({"subject": label, "type": "metrics", **metrics.to_dict()})
        except EmptyGroup:
            pass
    for feature in features:
        grid = make_grid(dataset, feature)
        profiles = [(label, aggregate_profiles(model, dataset, rows, feature, grid, threads=threads))
                    for label, rows in groups]
        report.artifacts.extend(_profile_artifact(label, prof) for label, prof in profiles)
        values = np.array([prof.values for _, prof in profiles])
        ranks = _ranks(values, higher_is_better=False)
        flags = _blind_spots(ranks)
        report.tables.append({
            "feature": feature, "type": "blind_spot", "higher_is_better": False,
            "grid": list(grid.values),
            "rows": [{"subject": label, "values": values[i].tolist(), "ranks": ranks[i].tolist(),
                      "blind_spots": [grid.values[g] for g in flags[i]]}
                     for i, (label, _) in enumerate(profiles)],
        })
    return report


def season_comparison(model: Predictor, dataset: EncodedDataset, team: Union[str, GroupSelector],
                      seasons: Sequence[str], background: Optional[BackgroundSet] = None,
                      method: str = "auto", n_perm: int = DEFAULT_PERMUTATIONS, seed: int = 42,
                      mode: str = "mean", threads: int = 1) -> AnalysisReport:
    if len(seasons) != 2:
        raise ValueError("exactly two seasons are compared")
    base = GroupSelector(team=team) if isinstance(team, str) else replace(team, role="taken")
    if background is None:
        train, _ = match_split(dataset)
        background = BackgroundSet.draw(dataset, DEFAULT_BACKGROUND, seed, train if train.size else None)
    grouping = FeatureGrouping.from_encoding(dataset.encoding)
    report = AnalysisReport("season_comparison", _provenance(model, dataset, {
        "seasons": list(seasons), "method": method, "n_perm": n_perm, "seed": seed, "mode": mode,
        "background_size": background.size}))
    aggregates = []
    for season in seasons:
        sel = replace(base, season=season)
        rows = select(dataset, sel)
        if rows.size == 0:
            raise EmptyGroup(f"no shots for {sel.label()} in {season}")
        attrs = explain_rows(model, dataset.X[rows], background, grouping, method=method,
                             n_perm=n_perm, seed=seed, ids=rows.tolist(), threads=threads)
        agg = aggregate_shap(attrs, mode=mode, group=sel.to_dict())
        metrics = compute_metrics(model, dataset, sel)
        aggregates.append(agg)
        report.subjects.append({"label": f"{sel.label()} {season}", "selector": sel.to_dict(),
                                "n": int(rows.size)})
        report.artifacts.append({"subject": season, "type": "ashap", **agg.to_dict()})
        report.artifacts.append({"subject": season, "type": "metrics", **metrics.to_dict()})
    first, second = aggregates
    deltas = [(f, second.phi_bar[f] - first.phi_bar[f]) for f in grouping.names]
    deltas.sort(key=lambda item: -abs(item[1]))
    report.tables.append({
        "type": "ashap_delta", "from": seasons[0], "to": seasons[1],
        "rows": [{"feature": f, "from": first.phi_bar[f], "to": second.phi_bar[f], "delta": d}
                 for f, d in deltas],
    })
    return report


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "-", text).strip("-")


def render_svg(report: AnalysisReport, out_dir) -> List[str]:
    """Write one SVG per figure and return the paths in creation order."""
    os.makedirs(out_dir, exist_ok=True)
    figures = []
    wf = report.workflow
    if wf == "scoring_potential":
        for table in report.tables:
            series = [(row["subject"], table["grid"], row["values"]) for row in table["rows"]]
            figures.append((table["feature"], svg.line_chart(
                f"Aggregated profiles: {table['feature']}", table["feature"], "average prediction",
                series, vline=table["reference_mean"])))
    elif wf == "goalkeeper_blindspot":
        for table in report.tables:
            series = [(row["subject"], row["values"]) for row in table["rows"]]
            figures.append((table["feature"], svg.grouped_bar_chart(
                f"Goalkeeper profiles: {table['feature']}", "average prediction (on-target conceded)",
                [str(level) for level in table["grid"]], series)))
    elif wf == "season_comparison":
        for art in report.artifacts:
            if art["type"] != "ashap":
                continue
            items = sorted(art["phi_bar"].items(), key=lambda kv: -abs(kv[1]))
            figures.append((art["subject"], svg.signed_bar_chart(
                f"aSHAP ({art['mode']}): {art['subject']}", [k for k, _ in items], [v for _, v in items],
                f"baseline {art['phi0']:.4f}   mean prediction {art['mean_prediction']:.4f}   n={art['n']}")))
    else:
        raise ValueError(f"unknown workflow {wf!r}")
    paths = []
    for name, text in figures:
        path = os.path.join(out_dir, f"{wf}_{_slug(name)}.svg")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        paths.append(path)
    return paths
