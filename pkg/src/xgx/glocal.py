"""Group-level explanations: aggregated SHAP and aggregated profiles."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import EmptyGroup, MixedBaselines, UnknownFeature
from .events import EncodedDataset, FeatureEncoding
from .models import Predictor
from .shapley import Attribution

BASELINE_TOL = 1e-12
DEFAULT_GRID_POINTS = 101
_CHUNK_ROWS = 200_000


@dataclass
class AggregatedAttribution:
    """Per-feature mean (or sum) of member attributions over a shot group.

    In ``sum`` mode ``phi_bar`` holds the totals ``n * mean``.
    """

    group: dict
    n: int
    mode: str
    phi0: float
    phi_bar: Dict[str, float]
    phi_sd: Dict[str, float]
    mean_prediction: float

    def to_dict(self) -> dict:
        return {"group": self.group, "n": self.n, "mode": self.mode, "phi0": self.phi0,
                "phi_bar": dict(self.phi_bar), "phi_sd": dict(self.phi_sd),
                "mean_prediction": self.mean_prediction}


def aggregate_shap(attributions: Sequence[Attribution], mode: str = "mean",
                   group: Optional[dict] = None) -> AggregatedAttribution:
    if mode not in ("mean", "sum"):
        raise ValueError(f"mode must be 'mean' or 'sum', got {mode!r}")
    if not attributions:
        raise EmptyGroup("no attributions to aggregate")
    first = attributions[0]
    names = list(first.phi)
    for a in attributions[1:]:
        if abs(a.phi0 - first.phi0) > BASELINE_TOL:
            raise MixedBaselines(f"baselines differ: {first.phi0!r} vs {a.phi0!r}")
        if list(a.phi) != names:
            raise ValueError("attributions cover different features")
    M = np.array([[a.phi[k] for k in names] for a in attributions])
    n = M.shape[0]
    agg = M.mean(axis=0)
    if mode == "sum":
        agg = n * agg
    return AggregatedAttribution(
        group=dict(group or {}), n=n, mode=mode, phi0=first.phi0,
        phi_bar=dict(zip(names, agg.tolist())),
        phi_sd=dict(zip(names, M.std(axis=0).tolist())),
        mean_prediction=float(np.mean([a.prediction for a in attributions])),
    )


@dataclass(frozen=True)
class Grid:
    feature: str
    values: Tuple
    categorical: bool

    def __post_init__(self):
        if not self.values:
            raise ValueError("grid must be non-empty")
        if not self.categorical and np.any(np.diff(np.asarray(self.values, dtype=float)) <= 0):
            raise ValueError("continuous grid must be strictly increasing")


def make_grid(dataset: EncodedDataset, feature: str, points: int = DEFAULT_GRID_POINTS) -> Grid:
    """Quantile grid over the whole dataset, or every level of a categorical."""
    enc = dataset.encoding
    if enc.is_categorical(feature):
        return Grid(feature, tuple(enc.levels[feature]), True)
    col = dataset.X[:, enc.feature_columns(feature)[0]]
    qs = np.unique(np.quantile(col, np.linspace(0.0, 1.0, points)))
    return Grid(feature, tuple(float(q) for q in qs), False)


@dataclass
class Profile:
    feature: str
    kind: str
    k: int
    grid: List
    values: np.ndarray
    group_feature_mean: Optional[float] = None

    def to_dict(self) -> dict:
        return {"feature": self.feature, "kind": self.kind, "k": self.k, "grid": list(self.grid),
                "values": self.values.tolist(), "group_feature_mean": self.group_feature_mean}


def _encoding_of(model, encoding):
    enc = encoding if encoding is not None else model.encoding
    if enc is None:
        raise ValueError("an encoding is required to locate feature columns")
    return enc


def _sweep(rows: np.ndarray, enc: FeatureEncoding, grid: Grid) -> np.ndarray:
    """Stack every row with the feature set to each grid value (row-major)."""
    k, G = rows.shape[0], len(grid.values)
    out = np.repeat(rows, G, axis=0).reshape(k, G, rows.shape[1])
    cols = enc.feature_columns(grid.feature)
    if grid.categorical:
        out[:, :, cols] = 0.0
        for g, level in enumerate(grid.values):
            out[:, g, enc.level_column(grid.feature, level)] = 1.0
    else:
        out[:, :, cols[0]] = np.asarray(grid.values, dtype=float)[None, :]
    return out.reshape(k * G, rows.shape[1])


def _feature_mean(rows, enc, feature):
    if enc.is_categorical(feature):
        return None
    return float(np.mean(rows[:, enc.feature_columns(feature)[0]]))


def cp_profile(model: Predictor, x, feature: str, grid: Grid,
               encoding: Optional[FeatureEncoding] = None) -> Profile:
    """Ceteris-paribus curve of one observation.

    For a continuous feature the observation's own value is merged into
    the grid, so the curve passes through ``f(x)``.
    """
    enc = _encoding_of(model, encoding)
    if feature not in enc.features or grid.feature != feature:
        raise UnknownFeature(feature)
    x = np.asarray(x, dtype=float)
    if not grid.categorical:
        own = x[enc.feature_columns(feature)[0]]
        if own not in grid.values:
            grid = Grid(feature, tuple(sorted(grid.values + (float(own),))), False)
    values = model.predict(_sweep(x[None, :], enc, grid))
    return Profile(feature, "CP", 1, list(grid.values), values, _feature_mean(x[None, :], enc, feature))


def cp_matrix(model: Predictor, rows: np.ndarray, grid: Grid, encoding: FeatureEncoding,
              threads: int = 1) -> np.ndarray:
    """Member CP curves on a shared grid, shape ``(len(rows), len(grid))``."""
    G = len(grid.values)
    per_chunk = max(1, _CHUNK_ROWS // G)
    starts = list(range(0, rows.shape[0], per_chunk))

    def block(s):
        return model.predict(_sweep(rows[s:s + per_chunk], encoding, grid))

    if threads <= 1 or len(starts) == 1:
        parts = [block(s) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(block, starts))
    return np.concatenate(parts).reshape(rows.shape[0], G)


def aggregate_profiles(model: Predictor, dataset: EncodedDataset, rows: Sequence[int], feature: str,
                       grid: Grid, kind: str = "AP", threads: int = 1) -> Profile:
    """Pointwise mean of the members' CP curves on the shared ``grid``."""
    enc = dataset.encoding
    if feature not in enc.features or grid.feature != feature:
        raise UnknownFeature(feature)
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size == 0:
        raise EmptyGroup(f"no observations to aggregate for {feature}")
    members = np.asarray(dataset.X[rows], dtype=float)
    curves = cp_matrix(model, members, grid, enc, threads=threads)
    # relative to the first curve so that identical member curves average to themselves exactly
    mean = curves[0] + (curves - curves[0]).mean(axis=0)
    return Profile(feature, kind, int(rows.size), list(grid.values), mean,
                   _feature_mean(members, enc, feature))


def pdp(model: Predictor, dataset: EncodedDataset, feature: str, grid: Grid, threads: int = 1) -> Profile:
    return aggregate_profiles(model, dataset, np.arange(dataset.n), feature, grid, kind="PDP",
                              threads=threads)
