"""Training on a column of an arbitrary CSV file.

A year of synthetic daily temperatures stands in for real weather data. The
same flow works for any headed CSV: point csv_path / csv_column at it.
"""
# %%
from pathlib import Path

import numpy as np

from qlstm.experiment import ExperimentConfig, run_eval, run_train, write_atomic

rng = np.random.default_rng(7)
day = np.arange(365)
tavg = 11 + 9 * np.sin(2 * np.pi * (day - 110) / 365) + rng.normal(0, 2.0, day.size)
rows = ["date,tavg"] + [f"2021-{1 + d // 31:02d}-{1 + d % 31:02d},{v:.1f}" for d, v in zip(day, tavg)]
csv_path = Path("runs/demo_weather/daily.csv")
write_atomic(csv_path, "\n".join(rows) + "\n")

# %% Min-max scaling is fitted on the first 80% only, predictions come back in degrees.
cfg = ExperimentConfig(
    source="csv", csv_path=str(csv_path), csv_column="tavg", epochs=10, out="runs/demo_weather"
)
res = run_train(cfg)
print(f"train mse {res.train_mse:.4f}  test mse {res.test_mse:.4f} (scaled units)")

# %% Re-evaluating the saved model gives the same numbers.
again = run_eval(cfg, "runs/demo_weather/model.json")
print("eval mse", again.mse)
print(Path("runs/demo_weather/predictions.csv").read_text().splitlines()[:4])
