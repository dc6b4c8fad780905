"""Experiment configuration, model files and the train/eval pipelines behind the CLI."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .cell import HIDDEN_MODES, CellAnsatz, EncoderParameters, QLstmParameters
from .circuit import ROTATIONS
from .data import (
    ScalingSpec,
    TimeSeriesDataset,
    fit_apply_scaling,
    generate_noisy_sine,
    load_csv,
    make_windows,
)
from .tensor import MAX_QUBITS
from .training import EvalResult, TrainConfig, TrainRecord, evaluate, train

MODEL_FORMAT = "qlstm-model/1"


class ConfigError(ValueError):
    """Invalid experiment configuration or incompatible model file."""


@dataclass
class ExperimentConfig:
    n_sys: int = 2
    n_anc: int = 2
    layers_en: int = 2
    layers_dis: int = 2
    rotation_kind: str = "RX"
    hidden_mode: str = "diagonal"
    readout_qubit: int = 0
    window_length: int = 4
    split_fraction: float = 0.8
    scaling: str = "minmax"
    scale_lo: float = -0.8
    scale_hi: float = 0.8
    learning_rate: float = 0.01
    batch_size: int = 5
    epochs: int = 100
    optimizer: str = "adam"
    grad_mode: str = "parameter_shift"
    fd_step: float = 1e-5
    source: str = "sine"
    points: int = 100
    t_max: float = 8 * math.pi
    noise: float = 0.1
    csv_path: Optional[str] = None
    csv_column: Optional[str] = None
    out: str = "runs/qlstm"
    seed: int = 42
    record_wall_time: bool = False

    def validate(self) -> "ExperimentConfig":
        def bad(name, why):
            raise ConfigError(f"{name}: {why}")

        for name in ("n_sys", "n_anc"):
            if not isinstance(getattr(self, name), int) or getattr(self, name) < 1:
                bad(name, "must be an integer >= 1")
        if self.n_sys + self.n_anc > MAX_QUBITS:
            bad("n_sys", f"n_sys + n_anc = {self.n_sys + self.n_anc} exceeds {MAX_QUBITS} qubits")
        for name in ("layers_en", "layers_dis"):
            if getattr(self, name) < 0:
                bad(name, "must be >= 0")
        if self.rotation_kind not in ROTATIONS:
            bad("rotation_kind", f"must be one of {ROTATIONS}")
        if self.hidden_mode not in HIDDEN_MODES:
            bad("hidden_mode", f"must be one of {HIDDEN_MODES}")
        if not 0 <= self.readout_qubit < self.n_sys:
            bad("readout_qubit", "must index a system qubit")
        if self.window_length < 1:
            bad("window_length", "must be >= 1")
        if not 0 < self.split_fraction < 1:
            bad("split_fraction", "must lie in (0, 1)")
        if self.scaling not in ("none", "minmax"):
            bad("scaling", "must be 'none' or 'minmax'")
        if not self.scale_lo < self.scale_hi:
            bad("scale_lo", "must be below scale_hi")
        if self.epochs < 1:
            bad("epochs", "must be >= 1")
        try:
            self.train_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.source == "sine":
            if self.points < self.window_length + 2:
                bad("points", "too few points for two windows")
        elif self.source == "csv":
            if not self.csv_path or not Path(self.csv_path).is_file():
                bad("csv_path", f"file not found: {self.csv_path!r}")
            if not self.csv_column:
                bad("csv_column", "required for csv source")
        else:
            bad("source", "must be 'sine' or 'csv'")
        return self

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            epochs=self.epochs,
            optimizer=self.optimizer,
            seed=self.seed,
            grad_mode=self.grad_mode,
            fd_step=self.fd_step,
        )

    def ansatz(self) -> CellAnsatz:
        return CellAnsatz(self.n_sys, self.n_anc, self.layers_en, self.layers_dis, self.rotation_kind)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(d) - set(known))
        if unknown:
            raise ConfigError(f"unknown config field(s): {', '.join(unknown)}")
        cfg = cls()
        for k, v in d.items():
            default = getattr(cfg, k)
            if isinstance(default, bool):
                if not isinstance(v, bool):
                    raise ConfigError(f"{k}: expected true/false")
            elif isinstance(default, int) and not (isinstance(v, int) and not isinstance(v, bool)):
                raise ConfigError(f"{k}: expected an integer, got {v!r}")
            elif isinstance(default, float):
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise ConfigError(f"{k}: expected a number, got {v!r}")
                v = float(v)
            setattr(cfg, k, v)
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            d = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(d, dict):
            raise ConfigError(f"{path}: expected a JSON object")
        return cls.from_dict(d)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# files


def write_atomic(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temp file in the same directory and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def loss_csv(records: list[TrainRecord], with_wall_time: bool) -> str:
    rows = [
        (r.epoch, repr(r.train_loss), repr(r.grad_norm), f"{r.wall_ms:.3f}" if with_wall_time else "")
        for r in records
    ]
    return _csv_text(["epoch", "train_loss", "grad_norm", "wall_ms"], rows)


def predictions_csv(rows) -> str:
    return _csv_text(["index", "true", "predicted"], [(i, repr(t), repr(p)) for i, t, p in rows])


def model_to_dict(params: QLstmParameters, cfg: ExperimentConfig, scaling: ScalingSpec) -> dict:
    return {
        "format": MODEL_FORMAT,
        "seed": cfg.seed,
        "n_sys": cfg.n_sys,
        "n_anc": cfg.n_anc,
        "layers_en": cfg.layers_en,
        "layers_dis": cfg.layers_dis,
        "rotation_kind": cfg.rotation_kind,
        "hidden_mode": params.hidden_mode,
        "readout_qubit": params.readout_qubit,
        "window_length": cfg.window_length,
        "encoder": {"w": params.encoder.w.tolist(), "b": params.encoder.b.tolist()},
        "theta_en": params.theta_en.tolist(),
        "theta_dis": params.theta_dis.tolist(),
        "scaling": scaling.to_dict(),
    }


def load_model(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"model file not found: {path}")
    try:
        d = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(d, dict) or d.get("format") != MODEL_FORMAT:
        raise ConfigError(f"{path}: not a {MODEL_FORMAT} file")
    return d


def params_from_model(d: dict, ansatz: Optional[CellAnsatz] = None) -> tuple[QLstmParameters, CellAnsatz]:
    try:
        model_ansatz = CellAnsatz(d["n_sys"], d["n_anc"], d["layers_en"], d["layers_dis"], d["rotation_kind"])
        if ansatz is not None and ansatz != model_ansatz:
            raise ConfigError(f"model shape {model_ansatz} does not match config shape {ansatz}")
        params = QLstmParameters(
            EncoderParameters(d["encoder"]["w"], d["encoder"]["b"]),
            d["theta_en"],
            d["theta_dis"],
            d["readout_qubit"],
            d["hidden_mode"],
        )
        model_ansatz.check(params)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed model file: {exc}") from None
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"model parameters do not fit their declared shape: {exc}") from None
    return params, model_ansatz


# ---------------------------------------------------------------------------
# pipelines


def build_dataset(cfg: ExperimentConfig) -> TimeSeriesDataset:
    if cfg.source == "sine":
        raw = generate_noisy_sine(cfg.points, (0.0, cfg.t_max), (-cfg.noise, cfg.noise), cfg.seed)
    else:
        raw = load_csv(cfg.csv_path, cfg.csv_column)
    scaled, spec = fit_apply_scaling(raw, cfg.scaling, (cfg.scale_lo, cfg.scale_hi), cfg.split_fraction)
    return make_windows(scaled, cfg.window_length, cfg.split_fraction, cfg.seed, spec)


def to_original_units(result: EvalResult, scaling: ScalingSpec) -> list:
    return [
        (i, float(scaling.inverse(t)), float(scaling.inverse(p))) for i, t, p in result.rows
    ]


@dataclass
class TrainOutcome:
    params: QLstmParameters
    records: list
    train_mse: float
    test_mse: float
    dataset: TimeSeriesDataset


def run_train(cfg: ExperimentConfig, log=None) -> TrainOutcome:
    """Data -> init -> train -> evaluate; writes loss.csv, predictions.csv, model.json, config.json."""
    cfg.validate()
    ds = build_dataset(cfg)
    ansatz = cfg.ansatz()
    params = ansatz.init_params(
        np.random.default_rng(cfg.seed), readout_qubit=cfg.readout_qubit, hidden_mode=cfg.hidden_mode
    )
    params, records = train(ds, params, ansatz, cfg.train_config(), log)
    tr = evaluate(ds, "train", params, ansatz)
    te = evaluate(ds, "test", params, ansatz)
    out = Path(cfg.out)
    write_atomic(out / "loss.csv", loss_csv(records, cfg.record_wall_time))
    write_atomic(out / "predictions.csv", predictions_csv(to_original_units(te, ds.scaling)))
    write_atomic(out / "model.json", json.dumps(model_to_dict(params, cfg, ds.scaling), indent=2) + "\n")
    write_atomic(out / "config.json", cfg.dumps())
    return TrainOutcome(params, records, tr.mse, te.mse, ds)


def run_eval(cfg: ExperimentConfig, model_path) -> EvalResult:
    """Evaluate a saved model on the config's test partition; writes predictions.csv."""
    cfg.validate()
    model = load_model(model_path)
    params, ansatz = params_from_model(model, cfg.ansatz())
    if model.get("window_length") != cfg.window_length:
        raise ConfigError("window_length: model and config disagree")
    ds = build_dataset(cfg)
    res = evaluate(ds, "test", params, ansatz)
    write_atomic(Path(cfg.out) / "predictions.csv", predictions_csv(to_original_units(res, ds.scaling)))
    return res
