"""Shared fixtures."""
import numpy as np
import pytest

from toymatrix import FEATURES, write_matrix, write_sidecar


@pytest.fixture

def separable(tmp_path):
    """Linearly separable toy: label and targets driven by column 0."""
    rng = np.random.default_rng(0)
    n = 200
    x = rng.normal(size=(n, len(FEATURES)))
    label = (x[:, 0] > 0).astype(int)
    x[:, 0] += label * 4.0
    targets = np.column_stack([
        label * 2.0,
        x[:, 0] * 3.0,
        np.abs(x[:, 1]),
        np.abs(x[:, 1]) + 1.0,
    ])
    train_p, test_p, schema_p = (
        tmp_path / "train.csv", tmp_path / "test.csv", tmp_path / "schema.json",
    )
    write_sidecar(schema_p)
    write_matrix(train_p, x[:150], label[:150], targets[:150])
    write_matrix(test_p, x[150:], label[150:], targets[150:])
    return str(train_p), str(test_p), str(schema_p)
