"""Metrics and the logistic baseline, with finite-difference gradient checks."""
import numpy as np
import pytest

from interflow.errors import DegenerateLabels, ShapeError
from interflow.evalkit import (
    auroc,
    balanced_accuracy,
    classification_metrics,
    feature_group_importance,
    logistic_loss_grad,
    regression_metrics,
    train_logistic,
)
from interflow.featurizer import make_schema


def test_auroc_perfect_ordering():
    assert auroc(np.array([0.1, 0.2, 0.8, 0.9]), np.array([0, 0, 1, 1])) == 1.0


def test_auroc_reversed():
    assert auroc(np.array([0.9, 0.8, 0.2, 0.1]), np.array([0, 0, 1, 1])) == 0.0


def test_auroc_hand_enumerated():
    # pairs: (0.35,0.1) ok, (0.35,0.4) bad, (0.8,0.1) ok, (0.8,0.4) ok -> 3/4
    scores = np.array([0.1, 0.4, 0.35, 0.8])
    labels = np.array([0, 0, 1, 1])
    assert auroc(scores, labels) == 0.75


def test_auroc_ties_half_credit():
    assert auroc(np.array([0.5, 0.5]), np.array([0, 1])) == 0.5


def test_auroc_single_class_rejected():
    with pytest.raises(DegenerateLabels):
        auroc(np.array([0.1, 0.2]), np.array([1, 1]))


def test_auroc_monotone_invariance():
    rng = np.random.default_rng(4)
    scores = rng.random(200)
    labels = (rng.random(200) < 0.4).astype(int)
    base = auroc(scores, labels)
    assert auroc(np.exp(5 * scores), labels) == pytest.approx(base)
    assert auroc(np.log(scores + 1e-9), labels) == pytest.approx(base)


def test_balanced_accuracy_perfect_and_constant():
    labels = np.array([0, 0, 1, 1])
    assert balanced_accuracy(labels, labels) == 1.0
    assert balanced_accuracy(np.ones(4, dtype=int), labels) == 0.5


def test_balanced_accuracy_constructed_08():
    # tpr 0.9 (9/10), tnr 0.7 (7/10) -> 0.8
    labels = np.array([1] * 10 + [0] * 10)
    pred = np.array([1] * 9 + [0] + [0] * 7 + [1] * 3)
    assert balanced_accuracy(pred, labels) == pytest.approx(0.8)


def test_balanced_accuracy_class_swap_symmetry():
    rng = np.random.default_rng(9)
    labels = (rng.random(100) < 0.3).astype(int)
    pred = (rng.random(100) < 0.5).astype(int)
    assert balanced_accuracy(pred, labels) == pytest.approx(
        balanced_accuracy(1 - pred, 1 - labels)
    )


def test_regression_metrics_exact():
    zero = regression_metrics(np.array([1.0, 2.0]), np.array([1.0, 2.0]))
    assert (zero.mae, zero.rmse, zero.mape) == (0.0, 0.0, 0.0)
    r = regression_metrics(np.array([11.0, 9.0]), np.array([10.0, 10.0]))
    assert r.mae == 1.0 and r.rmse == 1.0 and r.mape == pytest.approx(0.1)


def test_regression_mape_excludes_zero_truth():
    r = regression_metrics(np.array([1.0, 5.0]), np.array([0.0, 10.0]))
    assert r.mape_excluded == 1
    assert r.mape == pytest.approx(0.5)
    assert r.rmse >= r.mae >= 0


def test_regression_shape_mismatch():
    with pytest.raises(ShapeError):
        regression_metrics(np.zeros(3), np.zeros(4))


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(40, 5))
    y = (rng.random(40) < 0.5).astype(float)
    w = rng.normal(size=5) * 0.5
    b = 0.3
    lam = 0.01
    _, gw, gb = logistic_loss_grad(w, b, x, y, lam)
    eps = 1e-6
    for j in range(5):
        e = np.zeros(5)
        e[j] = eps
        lp, _, _ = logistic_loss_grad(w + e, b, x, y, lam)
        lm, _, _ = logistic_loss_grad(w - e, b, x, y, lam)
        assert abs((lp - lm) / (2 * eps) - gw[j]) < 1e-6
    lp, _, _ = logistic_loss_grad(w, b + eps, x, y, lam)
    lm, _, _ = logistic_loss_grad(w, b - eps, x, y, lam)
    assert abs((lp - lm) / (2 * eps) - gb) < 1e-6


def test_separable_toy_perfect_training_auroc():
    x = np.array([[0.0, 0.0], [0.1, 0.2], [5.0, 5.0], [5.2, 4.8]])
    y = np.array([0, 0, 1, 1])
    model = train_logistic(x, y, l2_lambda=1e-4)
    assert auroc(model.scores(x), y) == 1.0


def test_all_zero_features_predict_prior():
    x = np.zeros((100, 3))
    y = np.array([0, 1] * 50)
    model = train_logistic(x, y)
    metrics = classification_metrics(model.scores(x), y)
    assert metrics.balanced_accuracy == 0.5


def test_single_class_training_rejected():
    with pytest.raises(DegenerateLabels):
        train_logistic(np.zeros((5, 2)), np.ones(5))


def test_training_deterministic():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(200, 8))
    y = (x[:, 0] + rng.normal(size=200) > 0).astype(float)
    a = train_logistic(x, y, seed=5)
    b = train_logistic(x, y, seed=5)
    assert np.array_equal(a.weights, b.weights)
    assert a.bias == b.bias


def _model_with_weights(schema, weights):
    from interflow.evalkit import LinearModel

    return LinearModel(
        weights=weights,
        bias=0.0,
        l2_lambda=0.0,
        feature_mean=np.zeros(schema.total_width),
        feature_std=np.ones(schema.total_width),
    )


def test_importance_zero_covering_weights_rank_intra_first():
    schema = make_schema(5, 2)
    w = np.zeros(schema.total_width)
    for i, name in enumerate(schema.columns):
        if not name.startswith(("cov", "appcount_")):
            w[i] = 1.0
    ranked = feature_group_importance(_model_with_weights(schema, w), schema)
    assert ranked[0][0] == "intra"


def test_importance_planted_covering_signal_ranks_first():
    schema = make_schema(5, 2)
    rng = np.random.default_rng(11)
    n = 400
    x = rng.normal(size=(n, schema.total_width))
    cov_cols = [i for i, c in enumerate(schema.columns) if c.startswith("cov")]
    signal = x[:, cov_cols[:5]].sum(axis=1)
    y = (signal > 0).astype(float)
    model = train_logistic(x, y, l2_lambda=1e-3)
    ranked = feature_group_importance(model, schema)
    assert ranked[0][0] == "covering"
