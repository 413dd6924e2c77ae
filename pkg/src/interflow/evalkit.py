"""Baseline detection model and metric computations.

The baseline is an L2-regularized logistic regression trained by full-batch
gradient descent on standardized features. Metrics: rank-based AUROC
(ties count one half), balanced accuracy, and MAE/RMSE/MAPE for the
regression targets. All computations are deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLabels, ShapeError
from .featurizer import FeatureSchema


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    bias: float
    l2_lambda: float
    feature_mean: np.ndarray
    feature_std: np.ndarray

    def scores(self, x: np.ndarray) -> np.ndarray:
        z = (x - self.feature_mean) / self.feature_std
        return 1.0 / (1.0 + np.exp(-(z @ self.weights + self.bias)))


@dataclass(frozen=True)
class ClassMetrics:
    auroc: float
    balanced_accuracy: float
    tp: int
    fp: int
    tn: int
    fn: int


@dataclass(frozen=True)
class RegMetrics:
    mae: float
    rmse: float
    mape: float
    mape_excluded: int  # rows with zero truth, excluded from MAPE


def logistic_loss_grad(
    w: np.ndarray, b: float, x: np.ndarray, y: np.ndarray, l2_lambda: float
) -> tuple[float, np.ndarray, float]:
    """Mean log-loss with L2 on the weights (not the bias), and gradients."""
    z = x @ w + b
    # log(1 + e^z) - y*z, computed stably
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z)) + 0.5 * l2_lambda * float(
        w @ w
    )
    p = 1.0 / (1.0 + np.exp(-z))
    r = p - y
    grad_w = x.T @ r / len(y) + l2_lambda * w
    grad_b = float(np.mean(r))
    return loss, grad_w, grad_b


def train_logistic(
    x: np.ndarray,
    y: np.ndarray,
    l2_lambda: float = 1e-3,
    max_iter: int = 500,
    tol: float = 1e-8,
    seed: int = 0,
) -> LinearModel:
    """Gradient-descent fit with a halving step on loss increase."""
    y = np.asarray(y, dtype=float)
    if len(np.unique(y)) < 2:
        raise DegenerateLabels("training labels contain a single class")
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    std = np.where(std == 0, 1.0, std)
    xs = (x - mean) / std

    w = np.zeros(x.shape[1])
    b = 0.0
    lr = 1.0
    loss, gw, gb = logistic_loss_grad(w, b, xs, y, l2_lambda)
    for _ in range(max_iter):
        w_new = w - lr * gw
        b_new = b - lr * gb
        new_loss, new_gw, new_gb = logistic_loss_grad(w_new, b_new, xs, y, l2_lambda)
        if new_loss > loss:
            lr *= 0.5
            if lr < 1e-12:
                break
            continue
        converged = loss - new_loss < tol
        w, b, loss, gw, gb = w_new, b_new, new_loss, new_gw, new_gb
        if converged:
            break
    return LinearModel(
        weights=w, bias=b, l2_lambda=l2_lambda, feature_mean=mean, feature_std=std
    )


def auroc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Rank-based (Mann-Whitney) AUROC; tied scores contribute one half."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    if pos.size == 0 or neg.size == 0:
        raise DegenerateLabels("auroc needs both classes")
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(scores.size)
    sorted_scores = scores[order]
    # average ranks over ties
    i = 0
    while i < scores.size:
        j = i
        while j + 1 < scores.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1
        i = j + 1
    rank_sum = ranks[labels == 1].sum()
    u = rank_sum - pos.size * (pos.size + 1) / 2
    return float(u / (pos.size * neg.size))


def balanced_accuracy(pred: np.ndarray, labels: np.ndarray) -> float:
    pred = np.asarray(pred)
    labels = np.asarray(labels)
    if len(np.unique(labels)) < 2:
        raise DegenerateLabels("balanced accuracy needs both classes in labels")
    tpr = np.mean(pred[labels == 1] == 1)
    tnr = np.mean(pred[labels == 0] == 0)
    return float((tpr + tnr) / 2)


def classification_metrics(
    scores: np.ndarray, labels: np.ndarray, threshold: float = 0.5
) -> ClassMetrics:
    pred = (np.asarray(scores) >= threshold).astype(int)
    labels = np.asarray(labels)
    return ClassMetrics(
        auroc=auroc(scores, labels),
        balanced_accuracy=balanced_accuracy(pred, labels),
        tp=int(np.sum((pred == 1) & (labels == 1))),
        fp=int(np.sum((pred == 1) & (labels == 0))),
        tn=int(np.sum((pred == 0) & (labels == 0))),
        fn=int(np.sum((pred == 0) & (labels == 1))),
    )


def regression_metrics(pred: np.ndarray, truth: np.ndarray) -> RegMetrics:
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape or pred.size == 0:
        raise ShapeError(f"shape mismatch: {pred.shape} vs {truth.shape}")
    err = pred - truth
    nonzero = truth != 0
    mape = (
        float(np.mean(np.abs(err[nonzero] / truth[nonzero]))) if nonzero.any() else 0.0
    )
    return RegMetrics(
        mae=float(np.mean(np.abs(err))),
        rmse=float(np.sqrt(np.mean(err**2))),
        mape=mape,
        mape_excluded=int(np.sum(~nonzero)),
    )


def column_group(name: str) -> str:
    if name.startswith("cov"):
        return "covering"
    if name.startswith("appcount_"):
        return "app_count"
    return "intra"


def feature_group_importance(
    model: LinearModel, schema: FeatureSchema
) -> list[tuple[str, float]]:
    """Mean |weight| per column group, ranked descending.

    Weights act on standardized features, so magnitudes are comparable.
    """
    groups: dict[str, list[float]] = {}
    for name, w in zip(schema.columns, model.weights):
        groups.setdefault(column_group(name), []).append(abs(float(w)))
    ranked = [(g, float(np.mean(v))) for g, v in groups.items()]
    ranked.sort(key=lambda kv: (-kv[1], kv[0]))
    return ranked
