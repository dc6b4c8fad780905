"""Forecasting a noisy sine with both hidden-state rules.

100 points on [0, 8 pi] with uniform noise of +-0.1, windows of four values,
80/20 chronological split, Adam with lr 0.01 and batches of five. Writes
loss and prediction CSVs plus SVG plots under runs/demo_sine_<mode>/.
A full run takes roughly half a minute per mode.
"""
# %%
import sys

from qlstm.experiment import ExperimentConfig, run_train
from qlstm.plot import plot_csv

epochs = int(sys.argv[1]) if len(sys.argv) > 1 else 100

for mode in ("diagonal", "collapsed"):
    cfg = ExperimentConfig(hidden_mode=mode, epochs=epochs, seed=42, out=f"runs/demo_sine_{mode}")

    def log(rec):
        if rec.epoch % 10 == 0:
            print(f"  [{mode}] epoch {rec.epoch:3d}  loss {rec.train_loss:.5f}")

    res = run_train(cfg, log)
    print(f"{mode}: train mse {res.train_mse:.5f}  test mse {res.test_mse:.5f}")
    for name in ("loss.csv", "predictions.csv"):
        print("  wrote", plot_csv(f"{cfg.out}/{name}"))
