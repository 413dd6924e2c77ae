"""Matrix/sidecar loading and the trust-boundary checks."""
import numpy as np
import pytest

from toymatrix import FEATURES, write_matrix, write_sidecar
from ml_harness.matrix import MatrixError, column_group, load


def test_load_roundtrip(tmp_path):
    x = np.arange(10.0).reshape(2, 5)
    write_sidecar(tmp_path / "s.json")
    write_matrix(tmp_path / "m.csv", x, [0, 1], np.ones((2, 4)))
    m = load(str(tmp_path / "m.csv"), str(tmp_path / "s.json"))
    assert m.target_ids == ("t00000", "t00001")
    assert np.array_equal(m.x, x)
    assert list(m.label) == [0, 1]
    assert np.array_equal(m.targets["sd_count"], [1.0, 1.0])


def test_header_mismatch_reports_diff(tmp_path):
    write_sidecar(tmp_path / "s.json")
    wrong = tuple(FEATURES[:-1]) + ("bogus_col",)
    write_matrix(tmp_path / "m.csv", np.zeros((1, 5)), [1], features=wrong)
    with pytest.raises(MatrixError, match="missing: appcount_web.*extra: bogus_col"):
        load(str(tmp_path / "m.csv"), str(tmp_path / "s.json"))


def test_ragged_row_rejected(tmp_path):
    write_sidecar(tmp_path / "s.json")
    write_matrix(tmp_path / "m.csv", np.zeros((1, 5)), [1])
    with open(tmp_path / "m.csv", "a") as f:
        f.write("t1,1.0\n")
    with pytest.raises(MatrixError, match="cells"):
        load(str(tmp_path / "m.csv"), str(tmp_path / "s.json"))


def test_empty_body_rejected(tmp_path):
    write_sidecar(tmp_path / "s.json")
    write_matrix(tmp_path / "m.csv", np.zeros((0, 5)), [])
    with pytest.raises(MatrixError, match="no rows"):
        load(str(tmp_path / "m.csv"), str(tmp_path / "s.json"))


def test_column_groups_partition():
    groups = [column_group(c) for c in FEATURES]
    assert groups == ["intra", "intra", "covering", "covering", "app_count"]
