"""Per-tick telemetry log and the JSON run summary."""

from __future__ import annotations

import csv
import json

import numpy as np

COLUMNS = (
    ["t_s", "px_m", "py_m", "pz_m", "vx_mps", "vy_mps", "vz_mps",
     "qw", "qx", "qy", "qz", "wx_radps", "wy_radps", "wz_radps"]
    + [f"arm{i}_deg" for i in range(1, 5)]
    + [f"f{i}_cmd_n" for i in range(1, 5)]
    + [f"f{i}_n" for i in range(1, 5)]
    + ["power_w", "energy_j",
       "m_hat_kg", "x_cog_hat_m", "y_cog_hat_m", "m_load_hat_kg",
       "jxx_hat", "jyy_hat", "jzz_hat", "hover_confidence",
       "fz_des_n", "mx_des_nm", "my_des_nm", "mz_des_nm",
       "pos_err_x_m", "pos_err_y_m", "pos_err_z_m", "saturated"]
)


class TelemetryLog:
    """Row-per-control-tick log; kept as a list of tuples until export."""

    def __init__(self):
        self.rows = []

    def append(self, row):
        self.rows.append(tuple(row))

    def __len__(self):
        return len(self.rows)

    def as_array(self):
        return np.asarray(self.rows, dtype=float)

    def column(self, name):
        idx = COLUMNS.index(name)
        return np.array([r[idx] for r in self.rows])

    def columns(self, names):
        idx = [COLUMNS.index(n) for n in names]
        arr = self.as_array()
        return arr[:, idx]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(COLUMNS)
            writer.writerows(self.rows)


def write_summary(summary, path):
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
