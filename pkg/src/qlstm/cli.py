"""Command line entry point: ``qlstm {generate-sine,train,eval,entpower,plot}``.

Exit status is 0 on success, 1 for invalid input (config, files, shapes) and
2 for failures while running.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .data import DataError, generate_noisy_sine, series_csv
from .entanglement import PowerConfig, estimate_disentangling_power, estimate_entangling_power
from .experiment import (
    ConfigError,
    ExperimentConfig,
    load_model,
    params_from_model,
    run_eval,
    run_train,
    write_atomic,
)
from .plot import PlotError, plot_csv
from .tensor import BipartiteSplit, DimensionError, InvalidStateError

BUILTIN_UNITARIES = {
    "identity": np.eye(4),
    "cnot": np.eye(4)[[0, 1, 3, 2]],
    "swap": np.eye(4)[[0, 2, 1, 3]],
    "cz": np.diag([1, 1, 1, -1]),
}

# CLI flags that map onto ExperimentConfig fields
OVERRIDES = {
    "seed": int,
    "out": str,
    "epochs": int,
    "hidden_mode": str,
    "learning_rate": float,
    "batch_size": int,
    "window_length": int,
    "n_sys": int,
    "n_anc": int,
    "source": str,
    "csv_path": str,
    "csv_column": str,
    "scaling": str,
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat JSON experiment config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    for name in OVERRIDES:
        v = getattr(args, name, None)
        if v is not None:
            setattr(cfg, name, v)
    return cfg


def cmd_generate_sine(args) -> int:
    series = generate_noisy_sine(
        args.points, (0.0, args.t_max), (-args.noise, args.noise), 0 if args.seed is None else args.seed
    )
    out = Path(args.out or ".") / "sine.csv"
    write_atomic(out, series_csv(series))
    print(out)
    return 0


def cmd_train(args) -> int:
    cfg = _config(args)

    def log(rec):
        if args.verbose:
            print(f"epoch {rec.epoch:4d}  loss {rec.train_loss:.6f}  |grad| {rec.grad_norm:.4f}", file=sys.stderr)

    res = run_train(cfg, log)
    print(
        f"final train_loss={res.records[-1].train_loss:.6g} train_mse={res.train_mse:.6g} "
        f"test_mse={res.test_mse:.6g} out={cfg.out}"
    )
    return 0


def cmd_eval(args) -> int:
    cfg = _config(args)
    res = run_eval(cfg, args.model)
    print(f"test_mse={res.mse!r}")
    return 0


def _parse_split(text: str) -> tuple[int, int]:
    try:
        a, b = (int(t) for t in text.replace("|", ",").split(","))
    except ValueError:
        raise ConfigError(f"--split must look like '1,1', got {text!r}") from None
    return a, b


def cmd_entpower(args) -> int:
    if args.model:
        params, ansatz = params_from_model(load_model(args.model))
        u = ansatz.unitary(params)
        split = ansatz.split
        name = Path(args.model).stem
    else:
        if args.builtin not in BUILTIN_UNITARIES:
            raise ConfigError(
                f"unknown built-in {args.builtin!r}; choose from {', '.join(BUILTIN_UNITARIES)}"
            )
        u = BUILTIN_UNITARIES[args.builtin]
        split = BipartiteSplit.from_qubits(*_parse_split(args.split))
        name = args.builtin
    if split.dim != u.shape[0]:
        raise ConfigError(f"split {split.n_a}|{split.n_b} does not match a {u.shape[0]}-dim unitary")
    pc = PowerConfig(restarts=args.restarts, steps=args.steps, seed=args.seed or 0)
    up = estimate_entangling_power(u, split, pc)
    down = estimate_disentangling_power(u, split, pc)
    text = "name,E_up,E_down,restarts,converged\n" + (
        f"{name},{up.value:.6f},{down.value:.6f},{up.restarts_used},{str(up.converged and down.converged).lower()}\n"
    )
    sys.stdout.write(text)
    if args.out:
        write_atomic(Path(args.out) / "entpower.csv", text)
    return 0


def cmd_plot(args) -> int:
    out = plot_csv(args.input, args.output)
    print(out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qlstm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-sine", help="write a noisy sine series to <out>/sine.csv")
    _add_common(p)
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--noise", type=float, default=0.1, help="half-width of the uniform noise")
    p.add_argument("--t-max", type=float, default=8 * np.pi)
    p.set_defaults(func=cmd_generate_sine)

    p = sub.add_parser("train", help="train a model and write loss/predictions/model files")
    _add_common(p)
    p.add_argument("--epochs", type=int)
    p.add_argument("--hidden-mode", choices=["collapsed", "diagonal"])
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--window-length", type=int)
    p.add_argument("--n-sys", type=int)
    p.add_argument("--n-anc", type=int)
    p.add_argument("--source", choices=["sine", "csv"])
    p.add_argument("--csv-path")
    p.add_argument("--csv-column")
    p.add_argument("--scaling", choices=["none", "minmax"])
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved model on the test partition")
    _add_common(p)
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("entpower", help="estimate entangling/disentangling power")
    _add_common(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--builtin", help=f"one of {', '.join(BUILTIN_UNITARIES)}")
    src.add_argument("--model", help="model.json; analyses U_dis U_en")
    p.add_argument("--split", default="1,1", help="system,ancilla qubit counts for built-ins")
    p.add_argument("--restarts", type=int, default=32)
    p.add_argument("--steps", type=int, default=500)
    p.set_defaults(func=cmd_entpower)

    p = sub.add_parser("plot", help="render loss.csv or predictions.csv as SVG")
    p.add_argument("input")
    p.add_argument("-o", "--output", help="SVG path (default: input with .svg suffix)")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DataError, PlotError, FileNotFoundError, DimensionError, InvalidStateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure, e.g. divergence
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
