"""Grid-searched benchmark protocol over exported feature matrices.

Three model families (gradient-boosted trees, feed-forward network,
regularized logistic/linear baseline), k-fold cross-validated grid
selection, classification and regression metrics, and a grouped
permutation-attribution report. Default grids are ours, kept small enough
for desk-scale runs; real experiments are expected to pass their own.
"""
from __future__ import annotations

import itertools
import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.ensemble import (
    HistGradientBoostingClassifier,
    HistGradientBoostingRegressor,
)
from sklearn.inspection import permutation_importance
from sklearn.linear_model import LogisticRegression, Ridge
from sklearn.metrics import balanced_accuracy_score, roc_auc_score
from sklearn.model_selection import StratifiedKFold
from sklearn.neural_network import MLPClassifier, MLPRegressor
from sklearn.pipeline import Pipeline
from sklearn.preprocessing import StandardScaler

from .matrix import (
    GROUPS,
    TARGET_COLUMNS,
    TARGET_NAMES,
    Matrix,
    MatrixError,
    column_group,
    load,
)

FAMILIES = ("boosted_trees", "mlp", "logistic")
TASKS = ("classify", "regress")

DEFAULT_GRIDS = {
    "boosted_trees": {"learning_rate": [0.1, 0.3]},
    "mlp": {"hidden_layer_sizes": [[32], [64]]},
    "logistic": {"C": [0.1, 1.0]},
}


class ExperimentError(Exception):
    """Invalid spec or an unrecoverable condition during a run."""


@dataclass(frozen=True)
class ExperimentSpec:
    train_matrix: str
    test_matrix: str
    schema: str  # one sidecar shared by both matrices
    family: str
    grid: dict = field(default_factory=dict)
    cv_folds: int = 5
    seed: int = 0
    tasks: tuple[str, ...] = TASKS

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ExperimentError(
                f"unknown family {self.family!r} (known: {', '.join(FAMILIES)})"
            )
        if self.cv_folds < 2:
            raise ExperimentError(f"cv_folds must be >= 2, got {self.cv_folds}")
        for g in self.grid.values():
            if not g:
                raise ExperimentError("grid axes must be non-empty")
        bad = [t for t in self.tasks if t not in TASKS]
        if bad or not self.tasks:
            raise ExperimentError(f"tasks must be a non-empty subset of {TASKS}")

    @classmethod
    def from_json(cls, path: str) -> "ExperimentSpec":
        with open(path) as f:
            doc = json.load(f)
        known = {
            "train_matrix", "test_matrix", "schema", "family",
            "grid", "cv_folds", "seed", "tasks",
        }
        unknown = set(doc) - known
        if unknown:
            raise ExperimentError(f"unknown spec keys: {', '.join(sorted(unknown))}")
        if "tasks" in doc:
            doc["tasks"] = tuple(doc["tasks"])
        return cls(**doc)

    def effective_grid(self) -> dict:
        return self.grid or DEFAULT_GRIDS[self.family]


def _grid_points(grid: dict) -> list[dict]:
    """Deterministic enumeration: axes sorted by name, values in given order."""
    keys = sorted(grid)
    return [
        dict(zip(keys, combo))
        for combo in itertools.product(*(grid[k] for k in keys))
    ]


def _make_model(family: str, task: str, params: dict, seed: int):
    if family == "boosted_trees":
        cls = (
            HistGradientBoostingClassifier
            if task == "classify"
            else HistGradientBoostingRegressor
        )
        est = cls(random_state=seed, early_stopping=False)
    elif family == "mlp":
        cls = MLPClassifier if task == "classify" else MLPRegressor
        net = cls(random_state=seed, max_iter=60, hidden_layer_sizes=(32,))
        # standard scaling on network inputs only
        est = Pipeline([("scale", StandardScaler()), ("net", net)])
    else:
        est = (
            LogisticRegression(max_iter=1000)
            if task == "classify"
            else Ridge(random_state=seed)
        )
    valid = est.get_params()
    prefix = "net__" if family == "mlp" else ""
    applicable = {
        prefix + k: tuple(v) if isinstance(v, list) else v
        for k, v in params.items()
        if prefix + k in valid
    }
    est.set_params(**applicable)
    return est


def _scores(model, x: np.ndarray) -> np.ndarray:
    if hasattr(model, "predict_proba"):
        return model.predict_proba(x)[:, 1]
    return model.decision_function(x)


def _folds(y: np.ndarray, n_folds: int, seed: int, notes: list[str]):
    """Stratified folds; a single-class training side triggers a reseed."""
    for attempt in range(5):
        kf = StratifiedKFold(n_splits=n_folds, shuffle=True, random_state=seed + attempt)
        try:
            splits = list(kf.split(np.zeros_like(y), y))
        except ValueError as exc:
            raise ExperimentError(f"cannot fold labels: {exc}") from exc
        if all(len(np.unique(y[tr])) > 1 for tr, _ in splits):
            if attempt:
                notes.append(f"single-class fold; resampled with seed {seed + attempt}")
            return splits
    raise ExperimentError("could not build folds with both classes on every side")


def _cv_select(spec, task, x, y, score_fn, maximize, notes):
    """Mean CV score per grid point; best wins, first point breaks ties."""
    grid = _grid_points(spec.effective_grid())
    if task == "classify":
        splits = _folds(y, spec.cv_folds, spec.seed, notes)
    else:
        kf_y = np.zeros(len(y), dtype=int)  # unstratified for regression
        kf = StratifiedKFold(spec.cv_folds, shuffle=True, random_state=spec.seed)
        splits = list(kf.split(np.zeros_like(kf_y), kf_y))
    best = None
    for params in grid:
        fold_scores = []
        for tr, va in splits:
            model = _make_model(spec.family, task, params, spec.seed)
            model.fit(x[tr], y[tr])
            fold_scores.append(score_fn(model, x[va], y[va]))
        mean = float(np.mean(fold_scores))
        if best is None or (mean > best[0] if maximize else mean < best[0]):
            best = (mean, params)
    return best


def _mape(pred: np.ndarray, true: np.ndarray) -> tuple[float | None, int]:
    nz = true != 0
    excluded = int((~nz).sum())
    if not nz.any():
        return None, excluded
    return float(np.mean(np.abs((pred[nz] - true[nz]) / true[nz]))), excluded


def _importance(model, x, y, columns, seed) -> dict:
    """Permutation attribution on a held-out subsample, grouped and
    normalized so the group shares sum to one."""
    rng = np.random.default_rng(seed)
    idx = rng.permutation(len(y))[: min(len(y), 1000)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        result = permutation_importance(
            model, x[idx], y[idx], scoring="roc_auc", n_repeats=5, random_state=seed
        )
    # ignored features fluctuate around zero; clip so that mass does not
    # accumulate across hundreds of unused columns
    values = np.clip(result.importances_mean, 0.0, None)
    per_group = {g: 0.0 for g in GROUPS}
    for name, v in zip(columns, values):
        per_group[column_group(name)] += float(v)
    total = sum(per_group.values())
    if total > 0:
        shares = {g: v / total for g, v in per_group.items()}
    else:
        shares = {g: 1.0 / len(GROUPS) for g in GROUPS}
    order = np.argsort(-values, kind="stable")[:20]
    return {
        "group_shares": shares,
        "top": [[columns[i], float(values[i])] for i in order],
    }


def run_experiment(spec: ExperimentSpec) -> dict:
    train = load(spec.train_matrix, spec.schema)
    test = load(spec.test_matrix, spec.schema)
    if train.schema != test.schema:
        raise MatrixError("train and test matrices disagree with the shared sidecar")
    notes: list[str] = []
    report: dict = {
        "family": spec.family,
        "seed": spec.seed,
        "cv_folds": spec.cv_folds,
        "selected": {},
        "warnings": notes,
    }

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if "classify" in spec.tasks:
            y_tr = train.label.astype(int)
            if len(np.unique(y_tr)) < 2:
                raise ExperimentError("training labels contain a single class")

            def auc(model, xv, yv):
                return roc_auc_score(yv, _scores(model, xv))

            cv_score, params = _cv_select(
                spec, "classify", train.x, y_tr, auc, maximize=True, notes=notes
            )
            model = _make_model(spec.family, "classify", params, spec.seed)
            model.fit(train.x, y_tr)
            scores = _scores(model, test.x)
            report["auroc"] = float(roc_auc_score(test.label, scores))
            report["balanced_accuracy"] = float(
                balanced_accuracy_score(test.label, (scores >= 0.5).astype(int))
            )
            report["selected"]["classify"] = {"params": params, "cv_auroc": cv_score}
            report["importance"] = _importance(
                model, test.x, test.label, train.schema.feature_columns, spec.seed
            )

        if "regress" in spec.tasks:

            def neg_mae(model, xv, yv):
                return float(np.mean(np.abs(model.predict(xv) - yv)))

            for col in TARGET_COLUMNS:
                y_tr = train.targets[col]
                cv_score, params = _cv_select(
                    spec, "regress", train.x, y_tr, neg_mae, maximize=False, notes=notes
                )
                model = _make_model(spec.family, "regress", params, spec.seed)
                model.fit(train.x, y_tr)
                pred = model.predict(test.x)
                true = test.targets[col]
                err = pred - true
                mape, excluded = _mape(pred, true)
                report[TARGET_NAMES[col]] = {
                    "mae": float(np.mean(np.abs(err))),
                    "rmse": float(np.sqrt(np.mean(err**2))),
                    "mape": mape,
                    "mape_excluded_rows": excluded,
                }
                report["selected"][TARGET_NAMES[col]] = {
                    "params": params,
                    "cv_mae": cv_score,
                }
    return report


def _flat_metrics(report: dict) -> dict[str, float]:
    out = {}
    for key in ("auroc", "balanced_accuracy"):
        if key in report:
            out[key] = report[key]
    for name in TARGET_NAMES.values():
        if name in report:
            for metric in ("mae", "rmse", "mape"):
                value = report[name][metric]
                if value is not None:
                    out[f"{name}/{metric}"] = value
    return out


def compare_reports(a: dict, b: dict, tolerance: float = 0.0) -> dict:
    """Per-metric deltas (b minus a) plus a flag when any regression error
    grows beyond the tolerance."""
    fa, fb = _flat_metrics(a), _flat_metrics(b)
    shared = sorted(set(fa) & set(fb))
    if not shared:
        raise ExperimentError("reports share no tasks")
    deltas = {k: fb[k] - fa[k] for k in shared}
    regressed = any(
        deltas[k] > tolerance for k in shared if k.split("/")[-1] in ("mae", "rmse", "mape")
    )
    return {"deltas": deltas, "regressed": regressed, "tolerance": tolerance}
