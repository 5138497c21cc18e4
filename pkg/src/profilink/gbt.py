"""Gradient-boosted regression trees with logistic loss, from scratch.

Each round fits a least-squares regression tree to the pseudo-residuals
``y - p`` and sets leaf values with a one-step Newton update (Friedman's
TreeBoost), shrunk by the learning rate.

Model snapshot: indented JSON, one node list per tree::

    {"format": "profilink-gbt", "version": 1, "features": [...],
     "base_score": ..., "learning_rate": ..., "trees": [[node, ...], ...]}

where a node is ``{"feature": name, "threshold": t, "left": i, "right": j}``
(``x <= t`` goes left) or ``{"leaf": value}``. Leaf values already include
the shrinkage; ``raw = base_score + sum(leaves)``.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

logger = logging.getLogger(__name__)

SNAPSHOT_FORMAT = "profilink-gbt"
SNAPSHOT_VERSION = 1


@dataclass
class GbtConfig:
    n_rounds: int = 100
    max_depth: int = 3
    learning_rate: float = 0.1
    min_samples_leaf: int = 2

    def __post_init__(self):
        if self.n_rounds < 0 or self.max_depth < 1 or self.min_samples_leaf < 1:
            raise ValueError(f"invalid GBT config: {self}")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")


@dataclass
class Split:
    feature: int
    threshold: float
    gain: float


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def log_loss(y: np.ndarray, raw: np.ndarray) -> float:
    # log(1 + exp(-z)) for z = +-raw, numerically stable
    z = np.where(y > 0.5, raw, -raw)
    return float(np.mean(np.logaddexp(0.0, -z)))


def best_split(X: np.ndarray, r: np.ndarray, rows: np.ndarray, orders: list[np.ndarray], min_leaf: int) -> Split | None:
    """Best least-squares split of ``rows`` on residuals ``r``.

    Thresholds are midpoints between consecutive distinct values. Ties go to
    the lower feature index, then the lower threshold.
    """
    n = len(rows)
    if n < 2 * min_leaf:
        return None
    member = np.zeros(len(X), dtype=bool)
    member[rows] = True
    total = r[rows].sum()
    base = total * total / n
    best: Split | None = None
    for f, order in enumerate(orders):
        idx = order[member[order]]
        x = X[idx, f]
        csum = np.cumsum(r[idx])[:-1]
        n_left = np.arange(1, n)
        valid = (x[1:] > x[:-1]) & (n_left >= min_leaf) & (n - n_left >= min_leaf)
        if not valid.any():
            continue
        gain = csum**2 / n_left + (total - csum) ** 2 / (n - n_left) - base
        gain = np.where(valid, gain, -np.inf)
        pos = int(np.argmax(gain))
        g = float(gain[pos])
        if g > 0 and (best is None or g > best.gain):
            lo, hi = float(x[pos]), float(x[pos + 1])
            t = (lo + hi) / 2.0
            best = Split(f, t if t < hi else lo, g)
    return best


def _leaf_value(y, raw, rows, lr) -> float:
    """Shrunk Newton step, halved until the leaf's loss does not increase."""
    p = sigmoid(raw[rows])
    grad = float((y[rows] - p).sum())
    hess = float((p * (1.0 - p)).sum())
    if grad == 0.0:
        return 0.0
    v = lr * grad / max(hess, 1e-12)
    before = log_loss(y[rows], raw[rows])
    for _ in range(60):
        if log_loss(y[rows], raw[rows] + v) <= before:
            return v
        v /= 2.0
    return 0.0


@dataclass
class GbtModel:
    features: list[str]
    base_score: float
    learning_rate: float
    trees: list[list[dict]] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def raw_scores(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.full(len(X), self.base_score)
        fidx = {name: i for i, name in enumerate(self.features)}
        for tree in self.trees:
            out += _apply_tree(tree, X, fidx)
        return out

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return sigmoid(self.raw_scores(X))

    def depth(self) -> int:
        return max((_depth(t, 0) for t in self.trees), default=0)

    def to_json(self) -> dict:
        return {
            "format": SNAPSHOT_FORMAT,
            "version": SNAPSHOT_VERSION,
            "features": self.features,
            "base_score": self.base_score,
            "learning_rate": self.learning_rate,
            "config": self.config,
            "trees": self.trees,
        }

    def save(self, path: str | Path, extra: dict | None = None) -> None:
        obj = self.to_json()
        if extra:
            obj.update(extra)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(obj, f, indent=1, sort_keys=True)
            f.write("\n")

    @classmethod
    def from_json(cls, obj: dict) -> "GbtModel":
        if obj.get("format") != SNAPSHOT_FORMAT or obj.get("version") != SNAPSHOT_VERSION:
            raise ValueError(f"not a version-{SNAPSHOT_VERSION} GBT snapshot")
        model = cls(list(obj["features"]), float(obj["base_score"]), float(obj["learning_rate"]),
                    obj["trees"], obj.get("config", {}))
        known = set(model.features)
        for tree in model.trees:
            for node in tree:
                if "leaf" not in node and node["feature"] not in known:
                    raise ValueError(f"split on unknown feature {node['feature']!r}")
        return model

    @classmethod
    def load(cls, path: str | Path) -> "GbtModel":
        with open(path, encoding="utf-8") as f:
            return cls.from_json(json.load(f))


def _apply_tree(tree: list[dict], X: np.ndarray, fidx: dict[str, int]) -> np.ndarray:
    out = np.empty(len(X))
    stack = [(0, np.arange(len(X)))]
    while stack:
        node_id, rows = stack.pop()
        node = tree[node_id]
        if "leaf" in node:
            out[rows] = node["leaf"]
            continue
        go_left = X[rows, fidx[node["feature"]]] <= node["threshold"]
        stack.append((node["left"], rows[go_left]))
        stack.append((node["right"], rows[~go_left]))
    return out


def _depth(tree: list[dict], node_id: int) -> int:
    node = tree[node_id]
    if "leaf" in node:
        return 0
    return 1 + max(_depth(tree, node["left"]), _depth(tree, node["right"]))


def train_gbt(
    X: np.ndarray,
    y: np.ndarray,
    feature_names: Sequence[str],
    config: GbtConfig | None = None,
    history: list[float] | None = None,
) -> GbtModel:
    """Fit a boosted ensemble; ``history`` (if given) receives the training
    log-loss before the first round and after every round."""
    config = config or GbtConfig()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[1] != len(feature_names) or len(X) != len(y):
        raise ValueError("X must be (n_samples, n_features) matching feature_names and y")
    pos = int((y > 0.5).sum())
    if pos == 0 or pos == len(y):
        raise ValueError("training data must contain both positive and negative samples")
    y = (y > 0.5).astype(float)

    base = math.log(pos / (len(y) - pos))
    raw = np.full(len(y), base)
    orders = [np.argsort(X[:, f], kind="stable") for f in range(X.shape[1])]
    model = GbtModel(list(feature_names), base, config.learning_rate, config=asdict(config))
    if history is not None:
        history.append(log_loss(y, raw))

    for rnd in range(config.n_rounds):
        resid = y - sigmoid(raw)
        tree: list[dict] = []
        _grow(tree, X, y, raw, resid, np.arange(len(y)), orders, 0, config, model.features)
        raw = raw + _apply_tree(tree, X, {n: i for i, n in enumerate(feature_names)})
        model.trees.append(tree)
        if history is not None:
            history.append(log_loss(y, raw))
    logger.debug("trained %d trees, final loss %.6f", len(model.trees), log_loss(y, raw))
    return model


def _grow(tree, X, y, raw, resid, rows, orders, depth, config, names) -> int:
    node_id = len(tree)
    tree.append({})
    split = best_split(X, resid, rows, orders, config.min_samples_leaf) if depth < config.max_depth else None
    if split is None:
        tree[node_id] = {"leaf": _leaf_value(y, raw, rows, config.learning_rate)}
        return node_id
    go_left = X[rows, split.feature] <= split.threshold
    left = _grow(tree, X, y, raw, resid, rows[go_left], orders, depth + 1, config, names)
    right = _grow(tree, X, y, raw, resid, rows[~go_left], orders, depth + 1, config, names)
    tree[node_id] = {"feature": names[split.feature], "threshold": split.threshold, "left": left, "right": right}
    return node_id
