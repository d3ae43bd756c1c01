"""Random-forest regressor used to predict where a local search will end up.

Written directly on numpy: bootstrap sampling, a random feature subset per
split and variance-reduction splits on sorted cumulative sums.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArityMismatch, InsufficientData

FORMAT_VERSION = 1


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 30
    max_depth: int = 12
    min_leaf: int = 2
    min_train_rows: int = 50
    max_features: int | None = None  # default ceil(sqrt(F))


@dataclass
class TrainRow:
    features: np.ndarray
    label: float


class RegressionTree:
    """Binary regression tree stored as flat arrays; leaves have ``feature == -1``."""

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=float)

    @property
    def n_nodes(self) -> int:
        return len(self.value)

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        while True:
            feat = self.feature[node]
            inner = feat >= 0
            if not inner.any():
                return self.value[node]
            r, n, f = rows[inner], node[inner], feat[inner]
            go_left = X[r, f] <= self.threshold[n]
            node[inner] = np.where(go_left, self.left[n], self.right[n])

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist()
                for k in ("feature", "threshold", "left", "right", "value")}


def _best_split(X, y, idx, feats, min_leaf):
    n = len(idx)
    Xs = X[np.ix_(idx, feats)]
    order = np.argsort(Xs, axis=0, kind="stable")
    xs = np.take_along_axis(Xs, order, axis=0)
    ys = y[idx][order]
    csum = np.cumsum(ys, axis=0)
    csum2 = np.cumsum(ys * ys, axis=0)
    n_left = np.arange(1, n)[:, None]
    n_right = n - n_left
    s_l, s2_l = csum[:-1], csum2[:-1]
    s_r, s2_r = csum[-1] - s_l, csum2[-1] - s2_l
    sse = (s2_l - s_l ** 2 / n_left) + (s2_r - s_r ** 2 / n_right)
    valid = (xs[1:] > xs[:-1]) & (n_left >= min_leaf) & (n_right >= min_leaf)
    if not valid.any():
        return None
    sse = np.where(valid, sse, np.inf)
    pos = int(np.argmin(sse))
    i, c = divmod(pos, len(feats))
    total = csum2[-1, 0] - csum[-1, 0] ** 2 / n
    if not sse[i, c] < total - 1e-12 * max(abs(total), 1.0):
        return None
    threshold = 0.5 * (xs[i, c] + xs[i + 1, c])
    if not threshold < xs[i + 1, c]:  # midpoint rounded onto the upper value
        threshold = xs[i, c]
    return int(feats[c]), float(threshold)


def fit_tree(X, y, rng, max_depth=12, min_leaf=2, max_features=None) -> RegressionTree:
    n_feat = X.shape[1]
    mtry = max_features or math.ceil(math.sqrt(n_feat))
    mtry = min(mtry, n_feat)
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(val):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(val)
        return len(value) - 1

    root = new_node(float(y.mean()))
    stack = [(root, np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        yy = y[idx]
        if depth >= max_depth or len(idx) < 2 * min_leaf or np.ptp(yy) == 0.0:
            continue
        feats = rng.choice(n_feat, size=mtry, replace=False)
        split = _best_split(X, y, idx, feats, min_leaf)
        if split is None:
            continue
        f, thr = split
        mask = X[idx, f] <= thr
        li, ri = idx[mask], idx[~mask]
        ln = new_node(float(y[li].mean()))
        rn = new_node(float(y[ri].mean()))
        feature[node], threshold[node], left[node], right[node] = f, thr, ln, rn
        stack.append((rn, ri, depth + 1))
        stack.append((ln, li, depth + 1))
    return RegressionTree(feature, threshold, left, right, value)


@dataclass
class ForestModel:
    trees: list[RegressionTree]
    feature_count: int
    rows_seen: int = 0
    oob_error: float = float("nan")
    label_range: tuple[float, float] = (float("nan"), float("nan"))
    meta: dict = field(default_factory=dict)

    def predict(self, features) -> np.ndarray | float:
        X = np.asarray(features, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != self.feature_count:
            raise ArityMismatch(f"model expects {self.feature_count} features, got {X.shape[1]}")
        out = np.mean([t.predict(X) for t in self.trees], axis=0)
        return float(out[0]) if single else out

    def dumps(self) -> str:
        return json.dumps({
            "format_version": FORMAT_VERSION,
            "feature_count": self.feature_count,
            "rows_seen": self.rows_seen,
            "oob_error": None if math.isnan(self.oob_error) else self.oob_error,
            "label_range": list(self.label_range),
            "trees": [t.to_dict() for t in self.trees],
        })

    @classmethod
    def loads(cls, text: str) -> "ForestModel":
        data = json.loads(text)
        if data.get("format_version") != FORMAT_VERSION:
            raise ValueError("unsupported model format")
        trees = [RegressionTree(**t) for t in data["trees"]]
        oob = data["oob_error"]
        return cls(trees=trees, feature_count=data["feature_count"], rows_seen=data["rows_seen"],
                   oob_error=float("nan") if oob is None else oob,
                   label_range=tuple(data["label_range"]))


def _as_arrays(rows):
    if isinstance(rows, tuple) and len(rows) == 2:
        X, y = rows
        return np.asarray(X, dtype=float), np.asarray(y, dtype=float)
    X = np.array([r.features for r in rows], dtype=float)
    y = np.array([r.label for r in rows], dtype=float)
    return X, y


def fit(rows, params: ForestParams | None = None, rng=None) -> ForestModel:
    """Fit a forest on ``TrainRow`` objects or an ``(X, y)`` pair."""
    params = params or ForestParams()
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    X, y = _as_arrays(rows)
    n = len(y)
    if n < params.min_train_rows:
        raise InsufficientData(f"{n} rows, need at least {params.min_train_rows}")
    if not np.all(np.isfinite(y)):
        raise ValueError("labels must be finite")
    seeds = rng.integers(0, 2**63 - 1, size=params.n_trees)
    trees = []
    oob_sum = np.zeros(n)
    oob_cnt = np.zeros(n)
    for s in seeds:
        trng = np.random.default_rng(int(s))
        boot = trng.integers(0, n, size=n)
        tree = fit_tree(X[boot], y[boot], trng, params.max_depth, params.min_leaf,
                        params.max_features)
        trees.append(tree)
        out = np.ones(n, dtype=bool)
        out[boot] = False
        if out.any():
            oob_sum[out] += tree.predict(X[out])
            oob_cnt[out] += 1
    has = oob_cnt > 0
    oob = float(np.mean((oob_sum[has] / oob_cnt[has] - y[has]) ** 2)) if has.any() else float("nan")
    return ForestModel(trees=trees, feature_count=X.shape[1], rows_seen=n, oob_error=oob,
                       label_range=(float(y.min()), float(y.max())))


def predict(model: ForestModel, features):
    return model.predict(features)
