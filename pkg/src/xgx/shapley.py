"""Per-shot Shapley attributions with an interventional value function.

The payoff of a coalition ``S`` of features is the mean prediction over
background rows whose ``S`` columns are overwritten with the explained
row. All one-hot columns of a categorical feature act as one player.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import permutations
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DimensionMismatch, TooManyFeatures, UnknownFeature
from .events import EncodedDataset, FeatureEncoding
from .models import Predictor

MAX_EXACT_FEATURES = 20
AUTO_EXACT_LIMIT = 12
DEFAULT_BACKGROUND = 100
DEFAULT_PERMUTATIONS = 2000


@dataclass(frozen=True)
class FeatureGrouping:
    """Partition of encoded columns into Shapley players."""

    names: Tuple[str, ...]
    groups: Tuple[Tuple[int, ...], ...]
    n_columns: int

    def __post_init__(self):
        cols = sorted(c for g in self.groups for c in g)
        if cols != list(range(self.n_columns)):
            raise ValueError("feature groups must partition the encoded columns exactly")
        if len(self.names) != len(self.groups):
            raise ValueError("one name per group required")

    @classmethod
    def from_encoding(cls, enc: FeatureEncoding) -> "FeatureGrouping":
        return cls(
            names=tuple(enc.features),
            groups=tuple(tuple(int(c) for c in enc.feature_columns(f)) for f in enc.features),
            n_columns=enc.n_columns,
        )

    @classmethod
    def singletons(cls, d: int, names: Optional[Sequence[str]] = None) -> "FeatureGrouping":
        names = tuple(names) if names is not None else tuple(f"x{j}" for j in range(d))
        return cls(names=names, groups=tuple((j,) for j in range(d)), n_columns=d)

    @property
    def p(self) -> int:
        return len(self.groups)

    def column_owner(self) -> np.ndarray:
        owner = np.empty(self.n_columns, dtype=np.int64)
        for g, cols in enumerate(self.groups):
            owner[list(cols)] = g
        return owner

    def mask_of(self, coalition) -> int:
        """Bitmask for a coalition given as an int, names or group indices."""
        if isinstance(coalition, (int, np.integer)):
            return int(coalition)
        mask = 0
        for item in coalition:
            if isinstance(item, str):
                if item not in self.names:
                    raise UnknownFeature(item)
                item = self.names.index(item)
            mask |= 1 << int(item)
        return mask


@dataclass(frozen=True)
class BackgroundSet:
    rows: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        if self.rows.ndim != 2 or self.rows.shape[0] < 1:
            raise ValueError("background needs at least one row")
        self.rows.setflags(write=False)

    @property
    def size(self) -> int:
        return self.rows.shape[0]

    @classmethod
    def draw(cls, dataset: EncodedDataset, size: int = DEFAULT_BACKGROUND, seed: int = 42,
             candidates: Optional[Sequence[int]] = None) -> "BackgroundSet":
        """Sample ``size`` distinct dataset rows (all of them if fewer exist)."""
        pool = np.arange(dataset.n) if candidates is None else np.asarray(candidates)
        rng = np.random.default_rng(seed)
        take = np.sort(rng.choice(pool, size=min(size, pool.size), replace=False))
        return cls(rows=np.array(dataset.X[take], dtype=float), seed=seed)


@dataclass
class Attribution:
    phi0: float
    phi: Dict[str, float]
    prediction: float
    method: str
    n_perm: Optional[int] = None
    se: Optional[Dict[str, float]] = None
    observation_id: Optional[Union[int, str]] = None

    @property
    def values(self) -> np.ndarray:
        return np.array(list(self.phi.values()))

    def to_dict(self) -> dict:
        out = {"observation_id": self.observation_id, "phi0": self.phi0, "phi": dict(self.phi),
               "prediction": self.prediction, "method": self.method}
        if self.method == "sampled":
            out["n_perm"] = self.n_perm
            out["se"] = dict(self.se)
        return out


def _check_row(model, x, bg, grouping):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != grouping.n_columns or bg.rows.shape[1] != grouping.n_columns:
        raise DimensionMismatch("row, background and grouping widths disagree")
    if model.n_features != grouping.n_columns:
        raise DimensionMismatch(f"model expects {model.n_features} columns, grouping has {grouping.n_columns}")
    return x


def coalition_values(model: Predictor, x, bg: BackgroundSet, grouping: FeatureGrouping,
                     masks: Sequence[int]) -> np.ndarray:
    """Value function for each coalition bitmask in ``masks``.

    Hybrid rows that coincide (a background row already agreeing with
    ``x`` on some features) are predicted once; values are unaffected.
    """
    x = _check_row(model, x, bg, grouping)
    masks = np.asarray(masks, dtype=np.int64)
    p = grouping.p
    full = (1 << p) - 1
    owner = grouping.column_owner()
    B = bg.size
    differs = (bg.rows != x[None, :])
    diff_bits = np.zeros(B, dtype=np.int64)
    for g, cols in enumerate(grouping.groups):
        diff_bits |= differs[:, list(cols)].any(axis=1).astype(np.int64) << g
    keys = masks[None, :] & diff_bits[:, None]
    codes = np.arange(B, dtype=np.int64)[:, None] * (full + 1) + keys
    uniq, inverse = np.unique(codes, return_inverse=True)
    b_idx, k = np.divmod(uniq, full + 1)
    take_x = ((k[:, None] >> owner[None, :]) & 1).astype(bool)
    hybrid = np.where(take_x, x[None, :], bg.rows[b_idx])
    P = model.predict(hybrid)[inverse.reshape(B, masks.size)]
    # mean taken relative to the first row: exact whenever the column is constant,
    # so a coalition the model cannot distinguish from another gets the same value
    values = P[0] + (P - P[0]).mean(axis=0)
    if np.any(masks == full):
        values[masks == full] = model.predict_one(x)
    return values


def value_function(model: Predictor, x, coalition, bg: BackgroundSet,
                   grouping: FeatureGrouping) -> float:
    """Mean prediction with ``coalition`` features taken from ``x``."""
    return float(coalition_values(model, x, bg, grouping, [grouping.mask_of(coalition)])[0])


def shapley_weights(p: int) -> np.ndarray:
    """|S|!(p-|S|-1)!/p! indexed by |S|."""
    return np.array([math.factorial(s) * math.factorial(p - s - 1) / math.factorial(p)
                     for s in range(p)])


def shapley_from_values(v: np.ndarray, p: int) -> np.ndarray:
    """Exact Shapley values from a full table ``v[mask]`` of 2**p payoffs."""
    v = np.asarray(v, dtype=float)
    if v.shape != (1 << p,):
        raise ValueError("value table must have 2**p entries")
    masks = np.arange(1 << p)
    sizes = np.array([bin(m).count("1") for m in masks])
    w = shapley_weights(p)
    phi = np.empty(p)
    for j in range(p):
        bit = 1 << j
        without = masks[(masks & bit) == 0]
        phi[j] = np.sum(w[sizes[without]] * (v[without | bit] - v[without]))
    return phi


def exact_shap(model: Predictor, x, bg: BackgroundSet, grouping: FeatureGrouping,
               observation_id=None) -> Attribution:
    p = grouping.p
    if p > MAX_EXACT_FEATURES:
        raise TooManyFeatures(f"exact Shapley supports at most {MAX_EXACT_FEATURES} features, got {p}")
    v = coalition_values(model, x, bg, grouping, np.arange(1 << p))
    phi = shapley_from_values(v, p)
    return Attribution(
        phi0=float(v[0]), phi=dict(zip(grouping.names, phi.tolist())),
        prediction=float(v[-1]), method="exact", observation_id=observation_id,
    )


def _draw_permutations(p: int, n_perm: int, rng: np.random.Generator) -> np.ndarray:
    """``n_perm`` distinct orderings (every ordering if fewer than that exist)."""
    if p <= 10 and math.factorial(p) <= n_perm:
        return np.array(list(permutations(range(p))), dtype=np.int64).reshape(-1, p)
    seen = set()
    out = []
    while len(out) < n_perm:
        perm = rng.permutation(p)
        key = perm.tobytes()
        if key not in seen:
            seen.add(key)
            out.append(perm)
    return np.array(out, dtype=np.int64)


def sampled_shap(model: Predictor, x, bg: BackgroundSet, grouping: FeatureGrouping,
                 n_perm: int = DEFAULT_PERMUTATIONS, seed: int = 42, observation_id=None) -> Attribution:
    """Permutation-sampling estimate of the same Shapley values.

    Orderings are drawn without replacement. Each ordering's marginal
    contributions telescope to f(x) - phi0, so the estimate is locally
    accurate; ``se`` is the per-feature sample SD over sqrt(n_perm).
    """
    if n_perm < 1:
        raise ValueError("n_perm must be >= 1")
    p = grouping.p
    if p > 62:
        raise TooManyFeatures("coalition masks are limited to 62 features")
    perms = _draw_permutations(p, n_perm, np.random.default_rng(seed))
    bits = np.left_shift(np.int64(1), perms)
    after = np.cumsum(bits, axis=1)
    before = after - bits
    masks = np.unique(np.concatenate([[0, (1 << p) - 1], before.ravel(), after.ravel()]))
    v = coalition_values(model, x, bg, grouping, masks)
    contrib = np.empty(perms.shape)
    rows = np.arange(perms.shape[0])[:, None]
    contrib[rows, perms] = v[np.searchsorted(masks, after)] - v[np.searchsorted(masks, before)]
    n = contrib.shape[0]
    phi = contrib.mean(axis=0)
    se = contrib.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros(p)
    return Attribution(
        phi0=float(v[0]), phi=dict(zip(grouping.names, phi.tolist())),
        prediction=float(v[-1]), method="sampled", n_perm=int(n),
        se=dict(zip(grouping.names, se.tolist())), observation_id=observation_id,
    )


def explain(model: Predictor, x, bg: BackgroundSet, grouping: FeatureGrouping, method: str = "auto",
            n_perm: int = DEFAULT_PERMUTATIONS, seed: int = 42, observation_id=None) -> Attribution:
    """Exact attribution for up to 12 players, permutation sampling beyond."""
    if method == "auto":
        method = "exact" if grouping.p <= AUTO_EXACT_LIMIT else "sampled"
    if method == "exact":
        return exact_shap(model, x, bg, grouping, observation_id=observation_id)
    if method == "sampled":
        return sampled_shap(model, x, bg, grouping, n_perm=n_perm, seed=seed,
                            observation_id=observation_id)
    raise ValueError(f"unknown method {method!r}")


def explain_rows(model: Predictor, rows, bg: BackgroundSet, grouping: FeatureGrouping,
                 method: str = "auto", n_perm: int = DEFAULT_PERMUTATIONS, seed: int = 42,
                 ids: Optional[Iterable] = None, threads: int = 1) -> List[Attribution]:
    """Attributions for many rows; output order and values do not depend on ``threads``."""
    rows = np.asarray(rows, dtype=float)
    ids = list(ids) if ids is not None else list(range(rows.shape[0]))

    def one(i):
        return explain(model, rows[i], bg, grouping, method=method, n_perm=n_perm, seed=seed,
                       observation_id=ids[i])

    if threads <= 1:
        return [one(i) for i in range(rows.shape[0])]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, range(rows.shape[0])))
