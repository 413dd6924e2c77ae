"""Builders for small hand-made matrices."""
import json

import numpy as np

FEATURES = (
    "o_delay_mean",
    "o_delay_std",
    "cov00_delay_mean",
    "cov00_raw_d01",
    "appcount_web",
)
LABELS = ("label_sd", "sd_count", "longest_len_s", "longest_start_s", "longest_end_s")


def write_sidecar(path, features=FEATURES):
    with open(path, "w") as f:
        json.dump(
            {"feature_columns": list(features), "label_columns": list(LABELS)}, f
        )


def write_matrix(path, x, label, targets=None, features=FEATURES):
    n = len(label)
    targets = targets if targets is not None else np.zeros((n, 4))
    with open(path, "w") as f:
        f.write(",".join(("target_id",) + tuple(features) + LABELS) + "\n")
        for i in range(n):
            cells = [f"t{i:05d}"]
            cells += [repr(float(v)) for v in x[i]]
            cells.append(str(int(label[i])))
            cells += [repr(float(v)) for v in targets[i]]
            f.write(",".join(cells) + "\n")
