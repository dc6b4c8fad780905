"""Series generation and ingestion, min-max scaling, sliding windows."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np


class DataError(ValueError):
    """Malformed or insufficient input data."""


@dataclass(frozen=True)
class RawSeries:
    values: np.ndarray
    source_tag: str = ""
    t: Optional[np.ndarray] = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise DataError("a series needs at least 2 values")
        if not np.all(np.isfinite(v)):
            raise DataError("series contains non-finite values")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size


def generate_noisy_sine(
    n_points: int = 100,
    t_range: tuple[float, float] = (0.0, 8 * math.pi),
    noise: tuple[float, float] = (-0.1, 0.1),
    seed: int = 0,
) -> RawSeries:
    """sin(t) on an even grid plus uniform noise drawn from ``noise``."""
    if n_points < 2:
        raise DataError("n_points must be >= 2")
    rng = np.random.default_rng(seed)
    t = np.linspace(t_range[0], t_range[1], n_points)
    values = np.sin(t) + rng.uniform(noise[0], noise[1], n_points)
    return RawSeries(values, f"sine(seed={seed})", t)


def load_csv(path, column: str) -> RawSeries:
    """Read one numeric column from a headed, comma-separated file.

    Rows are numbered from 1 after the header line.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise DataError(f"{path} is empty")
        header = [h.strip() for h in header]
        if column not in header:
            raise DataError(
                f"column {column!r} not found in {path}; available: {', '.join(header)}"
            )
        col = header.index(column)
        values = []
        for row_no, row in enumerate(reader, start=1):
            if not row:
                continue
            cell = row[col].strip() if col < len(row) else ""
            try:
                v = float(cell)
            except ValueError:
                raise DataError(
                    f"row {row_no} (line {row_no + 1}): cannot parse {cell!r} in column {column!r}"
                ) from None
            if not math.isfinite(v):
                raise DataError(f"row {row_no} (line {row_no + 1}): non-finite value {cell!r}")
            values.append(v)
    if len(values) < 2:
        raise DataError(f"{path} has {len(values)} numeric rows, need at least 2")
    return RawSeries(np.array(values), f"{path.name}:{column}")


def series_csv(series: RawSeries) -> str:
    """``t,value`` CSV text; ``t`` falls back to the sample index."""
    t = series.t if series.t is not None else np.arange(len(series), dtype=float)
    lines = ["t,value"] + [f"{a!r},{b!r}" for a, b in zip(t.tolist(), series.values.tolist())]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ScalingSpec:
    kind: str = "minmax"
    out_lo: float = -0.8
    out_hi: float = 0.8
    fitted_min: float = 0.0
    fitted_max: float = 1.0

    def __post_init__(self):
        if self.kind not in ("none", "minmax"):
            raise ValueError(f"unknown scaling kind {self.kind!r}")
        if not self.out_lo < self.out_hi:
            raise ValueError("out_lo must be below out_hi")

    def apply(self, v):
        v = np.asarray(v, dtype=float)
        if self.kind == "none":
            return v.copy()
        frac = (v - self.fitted_min) / (self.fitted_max - self.fitted_min)
        return self.out_lo + frac * (self.out_hi - self.out_lo)

    def inverse(self, v):
        v = np.asarray(v, dtype=float)
        if self.kind == "none":
            return v.copy()
        frac = (v - self.out_lo) / (self.out_hi - self.out_lo)
        return self.fitted_min + frac * (self.fitted_max - self.fitted_min)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "out_lo": self.out_lo,
            "out_hi": self.out_hi,
            "fitted_min": self.fitted_min,
            "fitted_max": self.fitted_max,
        }


def fit_apply_scaling(
    series: RawSeries,
    kind: str = "minmax",
    out_range: tuple[float, float] = (-0.8, 0.8),
    train_fraction: float = 0.8,
) -> tuple[RawSeries, ScalingSpec]:
    """Fit min-max bounds on the leading ``train_fraction`` of the series, scale all of it."""
    if kind == "none":
        spec = ScalingSpec("none", *out_range)
        return RawSeries(spec.apply(series.values), series.source_tag, series.t), spec
    n_fit = max(2, int(math.floor(train_fraction * len(series))))
    head = series.values[:n_fit]
    lo, hi = float(head.min()), float(head.max())
    if hi == lo:
        raise DataError("cannot min-max scale a constant series")
    spec = ScalingSpec(kind, out_range[0], out_range[1], lo, hi)
    return RawSeries(spec.apply(series.values), series.source_tag, series.t), spec


@dataclass(frozen=True)
class TimeSeriesDataset:
    inputs: np.ndarray  # (n_windows, window_length)
    targets: np.ndarray  # (n_windows,)
    target_positions: np.ndarray  # series index of each target
    train_indices: np.ndarray
    test_indices: np.ndarray
    window_length: int
    scaling: ScalingSpec = field(default_factory=lambda: ScalingSpec("none"))

    def __len__(self):
        return self.targets.size

    def partition(self, name: str) -> np.ndarray:
        if name == "train":
            return self.train_indices
        if name == "test":
            return self.test_indices
        raise ValueError(f"unknown partition {name!r}")


def make_windows(
    series: RawSeries,
    window_length: int = 4,
    split_fraction: float = 0.8,
    shuffle_seed: Optional[int] = None,
    scaling: Optional[ScalingSpec] = None,
) -> TimeSeriesDataset:
    """Windows x[k:k+L] -> x[k+L]; the first floor(split_fraction * n) windows train.

    The split is chronological. Only the order of the train indices is
    shuffled (when ``shuffle_seed`` is given).
    """
    if window_length < 1:
        raise DataError("window_length must be >= 1")
    v = series.values
    n = v.size - window_length
    if n < 2:
        raise DataError(
            f"series of length {v.size} yields {max(n, 0)} windows of length {window_length}; need 2"
        )
    inputs = np.lib.stride_tricks.sliding_window_view(v, window_length)[:n].copy()
    targets = v[window_length:].copy()
    n_train = int(math.floor(split_fraction * n))
    n_train = min(max(n_train, 1), n - 1)
    train = np.arange(n_train)
    if shuffle_seed is not None:
        train = np.random.default_rng(shuffle_seed).permutation(train)
    return TimeSeriesDataset(
        inputs,
        targets,
        np.arange(window_length, v.size),
        train,
        np.arange(n_train, n),
        window_length,
        scaling if scaling is not None else ScalingSpec("none"),
    )
