"""Expected-goal totals for a player or team.

xG sums model probabilities over shots taken, xGA over shots conceded;
the on-target variants (xGOT, xGAOT) keep only shots on target. All
four use predicted probabilities, never outcomes.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, replace
from typing import Iterable, Optional

import numpy as np

from .errors import EmptyGroup
from .events import EncodedDataset, GroupSelector, select
from .models import Predictor, predict_batch


@dataclass
class MetricReport:
    group: dict
    m: int
    m_conceded: int
    xg: float
    xgot: float
    xga: float
    xgaot: float
    goals: int
    goals_conceded: int
    delta: float
    xg_per_shot: float
    xga_per_shot: Optional[float]

    def to_dict(self) -> dict:
        return asdict(self)


def _penalty_mask(dataset):
    cols = dataset.encoding.feature_columns("situation")
    levels = dataset.encoding.levels["situation"]
    if "Penalty" not in levels:
        return np.zeros(dataset.n, dtype=bool)
    return dataset.X[:, cols[levels.index("Penalty")]] == 1.0


def metrics_from_predictions(pred, z, y, taken, conceded, group=None) -> MetricReport:
    """Assemble a report from per-row predictions and the two index sets."""
    taken = np.asarray(taken, dtype=np.int64)
    conceded = np.asarray(conceded, dtype=np.int64)
    if taken.size == 0:
        raise EmptyGroup("subject has no shots taken")
    xg = math.fsum(pred[taken])
    xga = math.fsum(pred[conceded])
    goals = int(np.sum(y[taken]))
    return MetricReport(
        group=dict(group or {}),
        m=int(taken.size),
        m_conceded=int(conceded.size),
        xg=xg,
        xgot=math.fsum(pred[taken] * z[taken]),
        xga=xga,
        xgaot=math.fsum(pred[conceded] * z[conceded]),
        goals=goals,
        goals_conceded=int(np.sum(y[conceded])),
        delta=goals - xg,
        xg_per_shot=xg / taken.size,
        xga_per_shot=xga / conceded.size if conceded.size else None,
    )


def resolve_subject(dataset: EncodedDataset, subject: GroupSelector, exclude_penalties: bool = False):
    """Row indices of shots taken and conceded by ``subject``.

    The on-target filter is dropped (masking happens per metric). Only a
    team subject concedes shots.
    """
    base = replace(subject, on_target=None)
    taken = select(dataset, base.with_role("taken"))
    conceded = select(dataset, base.with_role("conceded")) if base.team is not None else np.empty(0, np.int64)
    if exclude_penalties:
        pen = _penalty_mask(dataset)
        taken = taken[~pen[taken]]
        conceded = conceded[~pen[conceded]]
    return taken, conceded


def compute_metrics(model: Predictor, dataset: EncodedDataset, subject: GroupSelector,
                    exclude_penalties: bool = False, predictions=None) -> MetricReport:
    taken, conceded = resolve_subject(dataset, subject, exclude_penalties)
    if taken.size == 0:
        raise EmptyGroup(f"no shots taken for {subject.label()}")
    if predictions is None:
        rows = np.union1d(taken, conceded)
        predictions = np.zeros(dataset.n)
        predictions[rows] = predict_batch(model, dataset.X[rows])
    group = replace(subject, on_target=None, role="taken").to_dict()
    return metrics_from_predictions(np.asarray(predictions), np.asarray(dataset.z, dtype=float),
                                    np.asarray(dataset.y), taken, conceded, group)


def performance_delta(report: MetricReport) -> float:
    """Goals minus xG: positive is over-performance, negative under-performance."""
    return report.goals - report.xg


def write_metrics_csv(reports: Iterable[MetricReport], path) -> None:
    """One row per group; the group descriptor is flattened to ``key=value;...``."""
    reports = list(reports)
    fields = ["group"] + [k for k in MetricReport.__dataclass_fields__ if k != "group"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fields)
        for r in reports:
            d = r.to_dict()
            d["group"] = ";".join(f"{k}={v}" for k, v in r.group.items())
            writer.writerow(["" if d[k] is None else d[k] for k in fields])
