"""Reference xG predictors, their training routines and evaluation.

Any object with ``predict(X) -> probabilities`` and ``n_features`` can be
explained; the two trained references here are a boosted tree ensemble
(the default) and an L2-penalised logistic regression.
"""
from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from numba import njit
from scipy.stats import rankdata

from .errors import DimensionMismatch, NonConvergence, SingleClassData
from .events import EncodedDataset, FeatureEncoding

PROB_CLIP = 1e-12


def sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


class Predictor:
    """Opaque probability model over encoded rows."""

    n_features: int
    encoding: Optional[FeatureEncoding] = None

    def predict(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def predict_one(self, x) -> float:
        return float(self.predict(np.asarray(x, dtype=float)[None, :])[0])


class FunctionPredictor(Predictor):
    """Wrap a vectorised callable ``fn(X) -> values`` as a Predictor."""

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], n_features: int,
                 encoding: Optional[FeatureEncoding] = None):
        self.fn = fn
        self.n_features = n_features
        self.encoding = encoding

    def predict(self, X):
        return np.asarray(self.fn(X), dtype=float).reshape(X.shape[0])


def predict_batch(model: Predictor, rows, threads: int = 1) -> np.ndarray:
    """Row-wise probabilities; chunked threads never change values or order."""
    rows = np.asarray(rows, dtype=float)
    if rows.size == 0:
        return np.empty(0)
    if rows.ndim != 2 or rows.shape[1] != model.n_features:
        raise DimensionMismatch(f"expected rows of width {model.n_features}, got shape {rows.shape}")
    if threads <= 1 or rows.shape[0] < 2048:
        return model.predict(rows)
    chunks = np.array_split(rows, threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(model.predict, chunks))
    return np.concatenate(parts)


# -- logistic regression -----------------------------------------------------

@dataclass
class LogisticModel(Predictor):
    coef: np.ndarray
    intercept: float
    penalty: float
    encoding: Optional[FeatureEncoding] = None
    config: dict = field(default_factory=dict)
    train_fingerprint: str = ""

    @property
    def n_features(self):
        return self.coef.shape[0]

    def decision_function(self, X):
        # column-wise accumulation keeps every row's arithmetic independent of batch size
        z = np.full(X.shape[0], self.intercept)
        for j in range(self.coef.shape[0]):
            z += self.coef[j] * X[:, j]
        return z

    def predict(self, X):
        return sigmoid(self.decision_function(np.asarray(X, dtype=float)))


def _check_classes(y):
    if y.size == 0 or y.min() == y.max():
        raise SingleClassData("training data must contain both goals and non-goals")


def train_logistic(data: EncodedDataset, penalty: float = 1.0, tol: float = 1e-8,
                   max_iter: int = 100) -> LogisticModel:
    """Fit an L2-penalised logistic regression by damped Newton iterations.

    The intercept is unpenalised. Iteration stops once the largest
    parameter change drops below ``tol``.
    """
    X = np.asarray(data.X, dtype=float)
    y = np.asarray(data.y, dtype=float)
    _check_classes(y)
    n, d = X.shape
    A = np.hstack([np.ones((n, 1)), X])
    reg = np.full(d + 1, float(penalty))
    reg[0] = 0.0
    w = np.zeros(d + 1)
    prev = y.mean()
    w[0] = np.log(prev / (1 - prev))

    def objective(w):
        t = A @ w
        return np.sum(np.logaddexp(0.0, t) - y * t) + 0.5 * np.sum(reg * w * w)

    obj = objective(w)
    for it in range(1, max_iter + 1):
        p = sigmoid(A @ w)
        grad = A.T @ (p - y) + reg * w
        H = (A * (p * (1 - p))[:, None]).T @ A + np.diag(reg)
        try:
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, grad, rcond=None)[0]
        scale = 1.0
        while True:
            cand = w - scale * step
            cand_obj = objective(cand)
            if cand_obj <= obj + 1e-12 * abs(obj) or scale < 1e-10:
                break
            scale *= 0.5
        delta = np.max(np.abs(cand - w))
        w, obj = cand, cand_obj
        if delta < tol:
            break
    else:
        p = sigmoid(A @ w)
        grad = A.T @ (p - y) + reg * w
        raise NonConvergence(max_iter, float(np.linalg.norm(grad)))
    return LogisticModel(
        coef=w[1:].copy(), intercept=float(w[0]), penalty=float(penalty),
        encoding=data.encoding,
        config={"penalty": float(penalty), "tol": tol, "max_iter": max_iter, "iterations": it},
        train_fingerprint=data.fingerprint(),
    )


# -- gradient boosted trees --------------------------------------------------

@dataclass(frozen=True)
class GBTConfig:
    trees: int = 200
    depth: int = 4
    learning_rate: float = 0.1
    min_leaf: int = 20
    seed: int = 42
    subsample: float = 1.0
    max_bins: int = 256


@njit(cache=True, nogil=True)
def _ensemble_margin(X, feat, thr, left, right, value, base, lr):
    n = X.shape[0]
    out = np.empty(n)
    for i in range(n):
        s = 0.0
        for t in range(feat.shape[0]):
            node = 0
            f = feat[t, 0]
            while f >= 0:
                if X[i, f] <= thr[t, node]:
                    node = left[t, node]
                else:
                    node = right[t, node]
                f = feat[t, node]
            s += value[t, node]
        out[i] = base + lr * s
    return out


@njit(cache=True, nogil=True)
def _histogram(codes, idx, g, width):
    d = codes.shape[1]
    G = np.zeros((d, width))
    N = np.zeros((d, width))
    for r in idx:
        gr = g[r]
        for j in range(d):
            b = codes[r, j]
            G[j, b] += gr
            N[j, b] += 1.0
    return G, N


@dataclass
class GBTModel(Predictor):
    """Boosted regression trees on the log-odds scale.

    Tree ``t`` is stored row-wise in the node arrays; ``feature == -1``
    marks a leaf. Rows go left when ``x[feature] <= threshold``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    base_score: float
    learning_rate: float
    n_features: int
    max_depth: int
    encoding: Optional[FeatureEncoding] = None
    config: dict = field(default_factory=dict)
    train_fingerprint: str = ""

    @property
    def n_trees(self):
        return self.feature.shape[0]

    def margin(self, X):
        X = np.ascontiguousarray(X, dtype=float)
        return _ensemble_margin(X, self.feature, self.threshold, self.left, self.right,
                                self.value, self.base_score, self.learning_rate)

    def predict(self, X):
        return sigmoid(self.margin(X))

    def tree_depths(self) -> List[int]:
        depths = []
        for t in range(self.n_trees):
            stack, deepest = [(0, 0)], 0
            while stack:
                node, dep = stack.pop()
                deepest = max(deepest, dep)
                if self.feature[t, node] >= 0:
                    stack.append((self.left[t, node], dep + 1))
                    stack.append((self.right[t, node], dep + 1))
            depths.append(deepest)
        return depths


def _bin_columns(X, max_bins):
    """Integer bin codes per column plus the split thresholds between bins."""
    n, d = X.shape
    codes = np.empty((n, d), dtype=np.int32)
    cuts = []
    for j in range(d):
        col = X[:, j]
        uniq = np.unique(col)
        if uniq.size <= max_bins:
            c = (uniq[:-1] + uniq[1:]) / 2.0
        else:
            qs = np.quantile(col, np.linspace(0.0, 1.0, max_bins + 1)[1:-1])
            c = np.unique(qs)
            c = c[c < uniq[-1]]
        codes[:, j] = np.searchsorted(c, col, side="left")
        cuts.append(c)
    return codes, cuts


class _TreeBuilder:
    def __init__(self, codes, cuts, depth, min_leaf):
        self.codes = codes
        self.cuts = cuts
        self.depth = depth
        self.min_leaf = min_leaf
        n, d = codes.shape
        self.width = max(len(c) for c in cuts) + 1
        nbins = np.array([len(c) + 1 for c in cuts])
        # a split after bin b is valid only if b < nbins - 1
        self.valid = np.arange(self.width)[None, :] < (nbins - 1)[:, None]

    def build(self, idx, g, h):
        nodes = {"feature": [], "threshold": [], "left": [], "right": [], "value": []}
        self._grow(self._new(nodes), idx, g, h, 0, nodes)
        return nodes

    def _new(self, nodes):
        for key in nodes:
            nodes[key].append(-1 if key in ("feature", "left", "right") else 0.0)
        return len(nodes["feature"]) - 1

    def _grow(self, node, idx, g, h, depth, nodes):
        split = self._best_split(idx, g) if depth < self.depth else None
        if split is None:
            nodes["value"][node] = g[idx].sum() / max(h[idx].sum(), 1e-12)
            return
        j, b = split
        go_left = self.codes[idx, j] <= b
        left, right = self._new(nodes), self._new(nodes)
        nodes["feature"][node] = j
        nodes["threshold"][node] = float(self.cuts[j][b])
        nodes["left"][node] = left
        nodes["right"][node] = right
        self._grow(left, idx[go_left], g, h, depth + 1, nodes)
        self._grow(right, idx[~go_left], g, h, depth + 1, nodes)

    def _best_split(self, idx, g):
        m = idx.size
        if m < 2 * self.min_leaf:
            return None
        G, N = _histogram(self.codes, idx, g, self.width)
        GL, NL = np.cumsum(G, axis=1), np.cumsum(N, axis=1)
        gtot = g[idx].sum()
        GR, NR = gtot - GL, m - NL
        ok = self.valid & (NL >= self.min_leaf) & (NR >= self.min_leaf)
        if not ok.any():
            return None
        with np.errstate(divide="ignore", invalid="ignore"):
            gain = GL * GL / NL + GR * GR / NR - gtot * gtot / m
        gain = np.where(ok, gain, -np.inf)
        best = int(np.argmax(gain))
        if not gain.flat[best] > 1e-12:
            return None
        return divmod(best, self.width)


def _stack_trees(trees):
    size = max(len(t["feature"]) for t in trees)
    shape = (len(trees), size)
    out = {
        "feature": np.full(shape, -1, dtype=np.int32),
        "threshold": np.zeros(shape),
        "left": np.full(shape, -1, dtype=np.int32),
        "right": np.full(shape, -1, dtype=np.int32),
        "value": np.zeros(shape),
    }
    for t, tree in enumerate(trees):
        k = len(tree["feature"])
        for key in out:
            out[key][t, :k] = tree[key]
    return out


def train_gbt(data: EncodedDataset, config: GBTConfig = GBTConfig()) -> GBTModel:
    """Stagewise boosting of depth-capped regression trees on log-loss.

    Splits maximise variance reduction of the negative gradient over
    histogram bins (exact for columns with at most ``max_bins`` distinct
    values); leaves take a single Newton step.
    """
    if config.trees < 1:
        raise ValueError("trees must be >= 1")
    X = np.asarray(data.X, dtype=float)
    y = np.asarray(data.y, dtype=float)
    _check_classes(y)
    n = X.shape[0]
    prev = y.mean()
    base = float(np.log(prev / (1 - prev)))
    codes, cuts = _bin_columns(X, config.max_bins)
    builder = _TreeBuilder(codes, cuts, config.depth, config.min_leaf)
    rng = np.random.default_rng(config.seed)
    margin = np.full(n, base)
    all_rows = np.arange(n)
    trees = []
    for _ in range(config.trees):
        p = sigmoid(margin)
        g = y - p
        h = p * (1 - p)
        rows = all_rows
        if config.subsample < 1.0:
            k = max(1, int(round(config.subsample * n)))
            rows = np.sort(rng.choice(n, size=k, replace=False))
        tree = builder.build(rows, g, h)
        trees.append(tree)
        stacked = _stack_trees([tree])
        margin = margin + config.learning_rate * _ensemble_margin(
            X, stacked["feature"], stacked["threshold"], stacked["left"],
            stacked["right"], stacked["value"], 0.0, 1.0)
    arrays = _stack_trees(trees)
    return GBTModel(
        **arrays, base_score=base, learning_rate=float(config.learning_rate),
        n_features=X.shape[1], max_depth=config.depth, encoding=data.encoding,
        config=config.__dict__.copy(), train_fingerprint=data.fingerprint(),
    )


# -- evaluation --------------------------------------------------------------

@dataclass
class EvalReport:
    n: int
    log_loss: float
    brier: float
    auc: Optional[float]
    calibration: List[dict]

    def to_dict(self):
        return {"n": self.n, "log_loss": self.log_loss, "brier": self.brier,
                "auc": self.auc, "calibration": self.calibration}


def roc_auc(y, p) -> Optional[float]:
    """Mann-Whitney AUC with ties counted as one half; None for one class."""
    y = np.asarray(y).astype(bool)
    n1 = int(y.sum())
    n0 = y.size - n1
    if n1 == 0 or n0 == 0:
        return None
    ranks = rankdata(p)
    return float((ranks[y].sum() - n1 * (n1 + 1) / 2.0) / (n1 * n0))


def calibration_table(y, p, bins: int = 10) -> List[dict]:
    order = np.argsort(p, kind="stable")
    table = []
    for chunk in np.array_split(order, bins):
        if chunk.size == 0:
            table.append({"count": 0, "mean_predicted": None, "observed_rate": None})
            continue
        table.append({"count": int(chunk.size),
                      "mean_predicted": float(np.mean(p[chunk])),
                      "observed_rate": float(np.mean(y[chunk]))})
    return table


def evaluate(model: Predictor, data: EncodedDataset) -> EvalReport:
    p = predict_batch(model, data.X)
    y = np.asarray(data.y, dtype=float)
    pc = np.clip(p, PROB_CLIP, 1 - PROB_CLIP)
    return EvalReport(
        n=int(y.size),
        log_loss=float(-np.mean(y * np.log(pc) + (1 - y) * np.log(1 - pc))),
        brier=float(np.mean((p - y) ** 2)),
        auc=roc_auc(y, p),
        calibration=calibration_table(y, p),
    )


# -- serialization -----------------------------------------------------------

def model_to_dict(model) -> dict:
    enc = model.encoding.to_dict() if model.encoding is not None else None
    if isinstance(model, GBTModel):
        params = {
            "base_score": model.base_score,
            "learning_rate": model.learning_rate,
            "n_features": model.n_features,
            "max_depth": model.max_depth,
            "trees": [
                {key: getattr(model, key)[t].tolist()
                 for key in ("feature", "threshold", "left", "right", "value")}
                for t in range(model.n_trees)
            ],
        }
        kind = "gbt"
    elif isinstance(model, LogisticModel):
        params = {"coef": model.coef.tolist(), "intercept": model.intercept, "penalty": model.penalty}
        kind = "logistic"
    else:
        raise TypeError(f"cannot serialise {type(model).__name__}")
    return {"model_type": kind, "encoding": enc, "parameters": params,
            "config": model.config, "train_fingerprint": model.train_fingerprint}


def model_from_dict(d: dict):
    enc = FeatureEncoding.from_dict(d["encoding"]) if d.get("encoding") else None
    params = d["parameters"]
    if d["model_type"] == "logistic":
        return LogisticModel(coef=np.array(params["coef"], dtype=float),
                             intercept=float(params["intercept"]), penalty=float(params["penalty"]),
                             encoding=enc, config=d.get("config", {}),
                             train_fingerprint=d.get("train_fingerprint", ""))
    if d["model_type"] == "gbt":
        arrays = _stack_trees(params["trees"])
        return GBTModel(**arrays, base_score=float(params["base_score"]),
                        learning_rate=float(params["learning_rate"]),
                        n_features=int(params["n_features"]), max_depth=int(params["max_depth"]),
                        encoding=enc, config=d.get("config", {}),
                        train_fingerprint=d.get("train_fingerprint", ""))
    raise ValueError(f"unknown model_type {d['model_type']!r}")


def dumps_model(model) -> str:
    return json.dumps(model_to_dict(model), sort_keys=True)


def save_model(model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_model(model))
        fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))


def model_fingerprint(model) -> str:
    try:
        text = dumps_model(model)
    except TypeError:
        return type(model).__name__
    return hashlib.sha256(text.encode()).hexdigest()[:16]
