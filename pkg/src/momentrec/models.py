"""Regressors mapping tag-strength vectors to a single audio feature.

Three kinds: a seeded random-normal baseline, closed-form L2-regularized
least squares, and gradient-boosted regression trees built from scratch
with histogram split finding (quantile threshold candidates, max 32 per
feature).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import FEATURE_RANGES

MODEL_FORMAT_VERSION = 1
MAX_BINS = 32


class ModelError(ValueError):
    pass


def _clamp_to_range(values: np.ndarray, target_feature: str) -> np.ndarray:
    lo, hi = FEATURE_RANGES[target_feature]
    return np.clip(values, lo, None if np.isinf(hi) else hi)


def evaluate_rmse(model: "TrainedRegressor", X: np.ndarray, y: np.ndarray) -> float:
    if len(X) != len(y) or len(y) == 0:
        raise ValueError("X and y must be non-empty and equally sized")
    predictions = model.predict(np.asarray(X, dtype=float))
    return float(np.sqrt(np.mean((predictions - np.asarray(y, dtype=float)) ** 2)))


# ---------------------------------------------------------------------------
# Regression tree (boosting base learner)


@dataclass
class TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    value: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def as_dict(self) -> dict:
        if self.is_leaf:
            return {"value": self.value}
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left.as_dict(),
            "right": self.right.as_dict(),
        }

    @staticmethod
    def from_dict(data: dict) -> "TreeNode":
        if "value" in data:
            return TreeNode(value=data["value"])
        return TreeNode(
            feature=data["feature"],
            threshold=data["threshold"],
            left=TreeNode.from_dict(data["left"]),
            right=TreeNode.from_dict(data["right"]),
        )


class RegressionTree:
    """Depth-limited least-squares tree over pre-binned features."""

    def __init__(self, root: TreeNode, max_depth: int) -> None:
        self.root = root
        self.max_depth = max_depth

    def predict(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(len(X))
        # iterative partition: each node routes its row subset to children
        stack = [(self.root, np.arange(len(X)))]
        while stack:
            node, idx = stack.pop()
            if len(idx) == 0:
                continue
            if node.is_leaf:
                out[idx] = node.value
                continue
            go_left = X[idx, node.feature] <= node.threshold
            stack.append((node.left, idx[go_left]))
            stack.append((node.right, idx[~go_left]))
        return out


def _bin_features(X: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Quantile-bin every feature; returns uint8 codes and per-feature edges.

    Edges are interior thresholds: code = number of edges <= value, so a
    split at edge e sends (value <= e) left.
    """
    n, p = X.shape
    codes = np.zeros((n, p), dtype=np.uint8)
    edges_per_feature: list[np.ndarray] = []
    quantiles = np.linspace(0, 1, MAX_BINS + 1)[1:-1]
    for j in range(p):
        col = X[:, j]
        edges = np.unique(np.quantile(col, quantiles))
        # drop edges that cannot separate anything (>= max value)
        edges = edges[edges < col.max()] if len(col) else edges
        edges_per_feature.append(edges)
        if len(edges):
            codes[:, j] = np.searchsorted(edges, col, side="left").astype(np.uint8)
    return codes, edges_per_feature


def _best_split(
    codes: np.ndarray,
    residuals: np.ndarray,
    idx: np.ndarray,
    n_bins: int,
) -> tuple[int, int, float] | None:
    """Deterministic arg-best (feature, bin, gain) by SSE reduction.

    Ties resolve to the lowest feature index, then lowest threshold, via
    first-max semantics on a (feature, bin)-ordered gain matrix.
    """
    n_node = len(idx)
    p = codes.shape[1]
    sub = codes[idx]
    offsets = np.arange(p, dtype=np.int64) * n_bins
    flat = (sub.astype(np.int64) + offsets).ravel()
    res_rep = np.repeat(residuals[idx], p)
    sums = np.bincount(flat, weights=res_rep, minlength=p * n_bins).reshape(p, n_bins)
    counts = np.bincount(flat, minlength=p * n_bins).reshape(p, n_bins)

    left_sum = np.cumsum(sums, axis=1)[:, :-1]
    left_cnt = np.cumsum(counts, axis=1)[:, :-1]
    total_sum = sums.sum(axis=1, keepdims=True)
    right_sum = total_sum - left_sum
    right_cnt = n_node - left_cnt

    valid = (left_cnt > 0) & (right_cnt > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = (
            np.where(valid, left_sum**2 / np.maximum(left_cnt, 1), 0.0)
            + np.where(valid, right_sum**2 / np.maximum(right_cnt, 1), 0.0)
            - total_sum**2 / n_node
        )
    gain[~valid] = -np.inf
    best = int(np.argmax(gain))
    feature, bin_idx = divmod(best, n_bins - 1)
    best_gain = gain[feature, bin_idx]
    if not np.isfinite(best_gain) or best_gain <= 1e-12:
        return None
    return feature, bin_idx, float(best_gain)


def _refine_threshold(
    X: np.ndarray,
    codes: np.ndarray,
    residuals: np.ndarray,
    idx: np.ndarray,
    feature: int,
    bin_idx: int,
    edge: float,
) -> float:
    """Exact threshold scan inside the chosen bin.

    The histogram picks the best bin boundary; rows sharing that bin may
    still straddle the true cut. Scanning the bin's sorted values recovers
    the exact best threshold at bounded cost (one bin's worth of rows).
    """
    col = X[idx, feature]
    node_codes = codes[idx, feature]
    in_bin = node_codes == bin_idx
    if in_bin.sum() < 2:
        return edge
    below = node_codes < bin_idx
    res = residuals[idx]
    total_sum, total_cnt = res.sum(), len(idx)
    base_sum, base_cnt = res[below].sum(), int(below.sum())

    order = np.argsort(col[in_bin], kind="stable")
    values = col[in_bin][order]
    sums = np.cumsum(res[in_bin][order])
    counts = np.arange(1, len(values) + 1)
    left_sum = base_sum + sums
    left_cnt = base_cnt + counts
    right_sum = total_sum - left_sum
    right_cnt = total_cnt - left_cnt
    # candidate thresholds: each observed value (split keeps v <= t left);
    # the last position reproduces the original bin-edge split
    valid = (right_cnt > 0) & (left_cnt > 0)
    # exclude positions where the next value is identical (not a real cut)
    distinct = np.ones(len(values), dtype=bool)
    distinct[:-1] = values[:-1] < values[1:]
    valid &= distinct
    if not valid.any():
        return edge
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = np.where(
            valid,
            left_sum**2 / np.maximum(left_cnt, 1)
            + right_sum**2 / np.maximum(right_cnt, 1),
            -np.inf,
        )
    best = int(np.argmax(gain))
    if best == len(values) - 1:
        return edge
    # midpoint keeps unseen values on the expected side
    return float((values[best] + values[best + 1]) / 2)


def _grow_tree(
    X: np.ndarray,
    codes: np.ndarray,
    edges: list[np.ndarray],
    residuals: np.ndarray,
    max_depth: int,
) -> TreeNode:
    def build(idx: np.ndarray, depth: int) -> TreeNode:
        node = TreeNode(value=float(residuals[idx].mean()))
        if depth >= max_depth or len(idx) < 2:
            return node
        split = _best_split(codes, residuals, idx, MAX_BINS)
        if split is None:
            return node
        feature, bin_idx, _ = split
        if bin_idx >= len(edges[feature]):
            return node
        threshold = _refine_threshold(
            X, codes, residuals, idx, feature, bin_idx, float(edges[feature][bin_idx])
        )
        go_left = X[idx, feature] <= threshold
        left_idx, right_idx = idx[go_left], idx[~go_left]
        if len(left_idx) == 0 or len(right_idx) == 0:
            return node
        node.feature = feature
        node.threshold = threshold
        node.left = build(left_idx, depth + 1)
        node.right = build(right_idx, depth + 1)
        return node

    return build(np.arange(len(residuals)), 0)


# ---------------------------------------------------------------------------
# Trained model container


@dataclass
class TrainedRegressor:
    kind: str  # "baseline" | "ridge" | "gbt"
    target_feature: str
    parameters: dict = field(default_factory=dict)
    seed: int = 0
    train_rmse: float = 0.0
    train_seconds: float = 0.0

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.kind == "baseline":
            rng = np.random.default_rng(self.seed)
            raw = rng.normal(
                self.parameters["mean"], self.parameters["std"], size=len(X)
            )
        elif self.kind == "ridge":
            weights = np.asarray(self.parameters["weights"])
            if X.shape[1] != len(weights):
                raise ModelError(
                    f"input has {X.shape[1]} features, model expects {len(weights)}"
                )
            raw = X @ weights + self.parameters["intercept"]
        elif self.kind == "gbt":
            trees: list[RegressionTree] = self.parameters["trees"]
            raw = np.full(len(X), self.parameters["init"])
            lr = self.parameters["learning_rate"]
            for tree in trees:
                raw = raw + lr * tree.predict(X)
        else:
            raise ModelError(f"unknown model kind {self.kind!r}")
        return _clamp_to_range(raw, self.target_feature)


# ---------------------------------------------------------------------------
# Training


def train_baseline(
    train_targets: np.ndarray, seed: int = 0, target_feature: str = "danceability"
) -> TrainedRegressor:
    """Random predictor drawing from N(mean, std) of the training targets."""
    y = np.asarray(train_targets, dtype=float)
    if len(y) < 2:
        raise ValueError("need at least 2 training targets")
    start = time.perf_counter()
    model = TrainedRegressor(
        kind="baseline",
        target_feature=target_feature,
        parameters={"mean": float(y.mean()), "std": float(y.std())},
        seed=seed,
    )
    model.train_rmse = evaluate_rmse(model, np.zeros((len(y), 1)), y)
    model.train_seconds = time.perf_counter() - start
    return model


def train_ridge(
    X: np.ndarray,
    y: np.ndarray,
    lam: float = 1.0,
    target_feature: str = "danceability",
) -> TrainedRegressor:
    """Closed-form ridge on centered data; lam=0 falls back to minimum-norm lstsq."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if lam < 0:
        raise ValueError("lam must be >= 0")
    start = time.perf_counter()
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    yc = y - y_mean
    if lam == 0:
        weights, *_ = np.linalg.lstsq(Xc, yc, rcond=None)
    else:
        p = X.shape[1]
        weights = np.linalg.solve(Xc.T @ Xc + lam * np.eye(p), Xc.T @ yc)
    intercept = float(y_mean - x_mean @ weights)
    model = TrainedRegressor(
        kind="ridge",
        target_feature=target_feature,
        parameters={"weights": weights, "intercept": intercept, "lam": lam},
    )
    model.train_rmse = evaluate_rmse(model, X, y)
    model.train_seconds = time.perf_counter() - start
    return model


def train_gbt(
    X: np.ndarray,
    y: np.ndarray,
    rounds: int = 200,
    depth: int = 4,
    learning_rate: float = 0.1,
    seed: int = 0,
    target_feature: str = "danceability",
) -> TrainedRegressor:
    """Least-squares gradient boosting: each round fits a tree to the residuals."""
    if rounds < 1 or depth < 1 or not 0 < learning_rate <= 1:
        raise ValueError("invalid boosting hyperparameters")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    start = time.perf_counter()
    init = float(y.mean())
    codes, edges = _bin_features(X)
    predictions = np.full(len(y), init)
    trees: list[RegressionTree] = []
    rmse_path: list[float] = [float(np.sqrt(np.mean((y - predictions) ** 2)))]
    for _ in range(rounds):
        residuals = y - predictions
        if np.allclose(residuals, 0):
            break
        root = _grow_tree(X, codes, edges, residuals, depth)
        tree = RegressionTree(root, depth)
        predictions = predictions + learning_rate * tree.predict(X)
        trees.append(tree)
        rmse_path.append(float(np.sqrt(np.mean((y - predictions) ** 2))))
    model = TrainedRegressor(
        kind="gbt",
        target_feature=target_feature,
        parameters={
            "trees": trees,
            "init": init,
            "learning_rate": learning_rate,
            "rounds": rounds,
            "depth": depth,
            "rmse_path": rmse_path,
        },
        seed=seed,
    )
    model.train_rmse = evaluate_rmse(model, X, y)
    model.train_seconds = time.perf_counter() - start
    return model


# ---------------------------------------------------------------------------
# Serialization


def save_model(model: TrainedRegressor, path: Path) -> None:
    params = dict(model.parameters)
    if model.kind == "ridge":
        params["weights"] = list(map(float, params["weights"]))
    elif model.kind == "gbt":
        params["trees"] = [
            {"max_depth": t.max_depth, "root": t.root.as_dict()}
            for t in params["trees"]
        ]
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": model.kind,
        "target_feature": model.target_feature,
        "seed": model.seed,
        "train_rmse": model.train_rmse,
        "train_seconds": model.train_seconds,
        "parameters": params,
    }
    Path(path).write_text(json.dumps(payload))


def load_model(path: Path) -> TrainedRegressor:
    payload = json.loads(Path(path).read_text())
    if payload.get("format_version") != MODEL_FORMAT_VERSION:
        raise ModelError(f"unsupported model format: {payload.get('format_version')}")
    if payload.get("kind") not in ("baseline", "ridge", "gbt"):
        raise ModelError(f"unknown model kind {payload.get('kind')!r}")
    params = payload["parameters"]
    if payload["kind"] == "ridge":
        params["weights"] = np.array(params["weights"], dtype=float)
    elif payload["kind"] == "gbt":
        params["trees"] = [
            RegressionTree(TreeNode.from_dict(t["root"]), t["max_depth"])
            for t in params["trees"]
        ]
    return TrainedRegressor(
        kind=payload["kind"],
        target_feature=payload["target_feature"],
        parameters=params,
        seed=payload["seed"],
        train_rmse=payload["train_rmse"],
        train_seconds=payload["train_seconds"],
    )
