"""Command-line entry point.

Subcommands: ``generate`` (synthetic dataset CSV), ``train`` (baseline or
sparse Bayesian LSTM), ``sweep`` (uncertainty/acquisition over the design
parameter), ``compare`` (sampled vs mean-based propagation). Every command
writes machine-readable outputs into ``--out`` and, unless ``--no-plots``
is given, renders the matching figures next to them.

Configuration precedence: command-line flags > ``--config`` JSON file >
defaults. The environment variable ``ARDLSTM_SEED`` provides the seed when
neither flags nor file set one.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import figures
from .ard_lstm import ArdLstm, ArdLstmConfig
from .checkpoint import load_checkpoint, save_checkpoint
from .linalg import stream
from .data import (
    BendingSurrogateConfig,
    CsvSchema,
    DEFAULT_DESIGNS,
    SequenceDataset,
    generate_bending_like,
    load_csv,
    write_csv,
)
from .errors import ArdLstmError, ConfigError
from .evaluation import r_squared, uncertainty_sweep, write_sweep_csv
from .lstm import PointLstm

METRICS_SCHEMA_VERSION = 1

#: keys excluded from determinism guarantees and golden-file comparisons
WALL_TIME_FIELDS = ("wall_time_s", "time_per_epoch_s")


@dataclass
class RunConfig:
    """Flat run configuration; field names double as config-file keys."""

    model: str = "ard-lstm"            # "ard-lstm" | "lstm"
    units: int = 16
    epochs: int = 4000
    lr: float = 0.005
    mc_samples: int = 100
    tau: float = 1e-4
    alpha_min: float = 1e1
    alpha_max: float = 1e6
    beta_min: float = 1e4
    beta_max: float = 1e6
    seed: int = 0
    data: str = "generate"             # "generate" or a CSV path
    out: str = "."
    mode: str = "sampled"              # "sampled" | "mean-based"
    share_weights: bool = True
    noise: float = 0.0
    designs: int = len(DEFAULT_DESIGNS)
    steps: int = 41
    nodes: int = 45
    plots: bool = True

    def validate(self) -> "RunConfig":
        checks = [
            ("model", self.model in ("ard-lstm", "lstm")),
            ("units", self.units >= 1),
            ("epochs", self.epochs >= 1),
            ("lr", self.lr > 0),
            ("mc_samples", self.mc_samples >= 1),
            ("tau", self.tau >= 0),
            ("mode", self.mode in ("sampled", "mean-based")),
            ("alpha_min", 0 < self.alpha_min <= self.alpha_max),
            ("beta_min", 0 < self.beta_min <= self.beta_max),
            ("designs", self.designs >= 1),
            ("steps", self.steps >= 2),
            ("nodes", self.nodes >= 1),
            ("noise", self.noise >= 0),
        ]
        bad = [name for name, ok in checks if not ok]
        if bad:
            raise ConfigError(f"invalid configuration field(s): {', '.join(bad)}")
        return self


def _internal_mode(mode: str) -> str:
    return "mean" if mode == "mean-based" else "sampled"


def build_config(args: argparse.Namespace) -> RunConfig:
    """Merge defaults, config file and explicit flags, in that order."""
    values = asdict(RunConfig())
    file_values: dict = {}
    path = getattr(args, "config", None)
    if path:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                file_values = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from None
        known = {f.name for f in fields(RunConfig)}
        unknown = set(file_values) - known
        if unknown:
            raise ConfigError(f"unknown config file key(s): {', '.join(sorted(unknown))}")
        values.update(file_values)
    for name in values:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    if getattr(args, "seed", None) is None and "seed" not in file_values:
        env_seed = os.environ.get("ARDLSTM_SEED")
        if env_seed is not None:
            try:
                values["seed"] = int(env_seed)
            except ValueError:
                raise ConfigError(f"ARDLSTM_SEED must be an integer, got {env_seed!r}") from None
    return RunConfig(**values).validate()


def resolve_dataset(config: RunConfig) -> SequenceDataset:
    if config.data == "generate":
        designs = DEFAULT_DESIGNS if config.designs == len(DEFAULT_DESIGNS) else tuple(
            np.linspace(-60.0, 60.0, config.designs))
        return generate_bending_like(
            BendingSurrogateConfig(n_nodes=config.nodes, noise=config.noise),
            designs=designs, m=config.steps, seed=config.seed)
    if not os.path.exists(config.data):
        raise ConfigError(f"dataset file not found: {config.data}")
    return load_csv(config.data, CsvSchema())


def write_metrics(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_metrics(path) -> dict:
    """Load a metrics document keeping every field, known or not."""
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _write_history_csv(path, rows: list[dict], columns: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join("" if row.get(c) is None else repr(row[c])
                              if isinstance(row.get(c), float) else str(row[c])
                              for c in columns) + "\n")


def _ard_model(config: RunConfig, dataset: SequenceDataset) -> ArdLstm:
    return ArdLstm(ArdLstmConfig(
        n_features=dataset.n_features, n_units=config.units,
        n_outputs=dataset.n_outputs, mc_samples=config.mc_samples,
        target_rate=config.lr, prune_tau=config.tau,
        max_epochs=config.epochs,
        alpha_bounds=(config.alpha_min, config.alpha_max),
        beta_bounds=(config.beta_min, config.beta_max),
        share_weights_over_time=config.share_weights,
        mode=_internal_mode(config.mode)))


def cmd_generate(config: RunConfig) -> int:
    os.makedirs(config.out, exist_ok=True)
    dataset = resolve_dataset(config)
    out_path = os.path.join(config.out, "dataset.csv")
    write_csv(dataset, out_path)
    print(f"wrote {out_path}: {dataset.n_designs} designs x {dataset.n_steps} steps "
          f"x {dataset.n_outputs} outputs")
    return 0


def _config_for_metrics(config: RunConfig) -> dict:
    """Config record for metrics files; run-environment fields excluded."""
    return {k: v for k, v in asdict(config).items() if k not in ("out", "plots")}


def cmd_train(config: RunConfig) -> int:
    os.makedirs(config.out, exist_ok=True)
    dataset = resolve_dataset(config)
    y_norm = dataset.target_norm.normalize(dataset.targets)
    started = time.perf_counter()

    metrics = {
        "schema_version": METRICS_SCHEMA_VERSION,
        "model": config.model,
        "config": _config_for_metrics(config),
    }
    checkpoint_path = os.path.join(config.out, "checkpoint.bin")
    history_path = os.path.join(config.out, "history.csv")

    if config.model == "lstm":
        model = PointLstm.train(dataset, config.units, config.epochs, config.lr,
                                seed=config.seed)
        preds = model.predict(dataset)
        wall = time.perf_counter() - started
        metrics |= {
            "epochs_used": config.epochs,
            "converged": False,
            "r2": r_squared(y_norm, preds),
            "final_loss": model.loss_history[-1],
            "wall_time_s": wall,
            "time_per_epoch_s": wall / config.epochs,
        }
        _write_history_csv(history_path,
                           [{"epoch": e + 1, "loss": v}
                            for e, v in enumerate(model.loss_history)],
                           ["epoch", "loss"])
        if config.plots:
            figures.plot_loss_history(model.loss_history,
                                      os.path.join(config.out, "history.png"))
    else:
        model = _ard_model(config, dataset)
        report = model.fit(dataset, seed=config.seed)
        pred = model.predict(dataset, seed=config.seed)
        wall = time.perf_counter() - started
        last_sparsity = report.sparsity_history[-1]
        metrics |= {
            "epochs_used": report.epochs_used,
            "converged": report.converged,
            "r2": r_squared(y_norm, pred.mean),
            "final_loglik": report.final_loglik,
            "sparsity": last_sparsity,
            "sparsity_epoch0": report.sparsity_history[0],
            "wall_time_s": wall,
            "time_per_epoch_s": report.time_per_epoch_s,
        }
        rows = [{"epoch": 0, "loglik": None,
                 **{f"sparsity_{k}": v for k, v in report.sparsity_history[0].items()}}]
        for e, ll in enumerate(report.loglik_history, start=1):
            rows.append({"epoch": e, "loglik": ll,
                         **{f"sparsity_{k}": v
                            for k, v in report.sparsity_history[e].items()}})
        _write_history_csv(history_path, rows,
                           ["epoch", "loglik"] + [f"sparsity_{k}"
                                                  for k in last_sparsity])
        if config.plots:
            figures.plot_likelihood_history(report.loglik_history,
                                            os.path.join(config.out, "history.png"))
            figures.plot_sparsity(report.sparsity_history,
                                  os.path.join(config.out, "sparsity.png"))
            figures.plot_fit_overview(dataset.time, y_norm, pred.mean, pred.variance,
                                      os.path.join(config.out, "fit.png"))

    save_checkpoint(model, checkpoint_path)
    write_metrics(os.path.join(config.out, "metrics.json"), metrics)
    print(f"trained {config.model} ({metrics['epochs_used']} epochs), "
          f"R2={metrics['r2']:.4f}; outputs in {config.out}")
    return 0


def cmd_sweep(config: RunConfig, checkpoint: str, grid_spec: str,
              reference_data: str | None = None) -> int:
    os.makedirs(config.out, exist_ok=True)
    model = load_checkpoint(checkpoint)
    if not isinstance(model, ArdLstm):
        raise ConfigError("sweep requires an ard-lstm checkpoint")
    dataset = resolve_dataset(config)
    reference = None
    if reference_data is not None:
        if not os.path.exists(reference_data):
            raise ConfigError(f"reference dataset not found: {reference_data}")
        reference = load_csv(reference_data, CsvSchema())
    try:
        lo, hi, count = grid_spec.split(":")
        grid = np.linspace(float(lo), float(hi), int(count))
    except ValueError:
        raise ConfigError(f"grid must be 'lo:hi:count', got {grid_spec!r}") from None
    result = uncertainty_sweep(model, grid, dataset,
                               mode=_internal_mode(config.mode), seed=config.seed,
                               reference=reference)
    csv_path = os.path.join(config.out, "sweep.csv")
    write_sweep_csv(result, csv_path)
    if config.plots:
        figures.plot_sweep(result, os.path.join(config.out, "sweep.png"),
                           train_designs=model.train_designs)
    print(f"wrote {csv_path}: {len(result)} rows")
    return 0


def cmd_compare(config: RunConfig) -> int:
    os.makedirs(config.out, exist_ok=True)
    dataset = resolve_dataset(config)
    results = {}
    models = {}
    for mode in ("sampled", "mean-based"):
        cfg = RunConfig(**{**asdict(config), "mode": mode})
        model = _ard_model(cfg, dataset)
        report = model.fit(dataset, seed=config.seed)
        models[mode] = model
        results[mode] = {
            "epochs_used": report.epochs_used,
            "time_per_epoch_s": report.time_per_epoch_s,
            "final_loglik": report.final_loglik,
        }
    pred_sampled = models["sampled"].predict(dataset, mode="sampled", seed=config.seed)
    pred_mean = models["mean-based"].predict(dataset, mode="mean")
    agreement = {
        "max_abs_mean_diff": float(np.max(np.abs(pred_sampled.mean - pred_mean.mean))),
        "rms_mean_diff": float(np.sqrt(np.mean((pred_sampled.mean - pred_mean.mean) ** 2))),
    }
    payload = {
        "schema_version": METRICS_SCHEMA_VERSION,
        "config": _config_for_metrics(config),
        "modes": results,
        "time_per_epoch_ratio": results["mean-based"]["time_per_epoch_s"]
        / results["sampled"]["time_per_epoch_s"],
        "agreement": agreement,
    }
    write_metrics(os.path.join(config.out, "compare.json"), payload)
    if config.plots:
        # hidden-state posterior of the unit with the largest magnitude,
        # sampled at the final step of the first design
        sampled_model = models["sampled"]
        pred_k = sampled_model.predict(dataset, mode="sampled", seed=config.seed,
                                       mc_samples=max(config.mc_samples, 1000))
        unit = int(np.argmax(np.abs(pred_k.hidden_mean[0, -1])))
        x_tm = np.swapaxes(dataset.input_norm.normalize(dataset.inputs), 0, 1).copy()
        trace = sampled_model.forward_epoch(x_tm, stream(config.seed, 3),
                                            mode="sampled",
                                            mc_samples=max(config.mc_samples, 1000),
                                            keep_samples=True)
        samples = trace.hidden_samples[:, -1, 0, unit]
        mean_based = models["mean-based"].predict(dataset, mode="mean")
        figures.plot_hidden_posterior(samples, mean_based.hidden_mean[0, -1, unit],
                                      os.path.join(config.out, "hidden_posterior.png"))
    ratio = payload["time_per_epoch_ratio"]
    print(f"mean-based/sampled time per epoch: {ratio:.3f}; "
          f"max |mean diff| {agreement['max_abs_mean_diff']:.4g}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ardlstm",
        description="Sparse Bayesian LSTM surrogate training and evaluation")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON file with RunConfig fields")
        p.add_argument("--model", choices=["ard-lstm", "lstm"])
        p.add_argument("--units", type=int, help="hidden state width")
        p.add_argument("--epochs", type=int, help="maximum training epochs")
        p.add_argument("--lr", type=float, help="target update rate")
        p.add_argument("--mc-samples", dest="mc_samples", type=int,
                       help="Monte-Carlo samples per gate")
        p.add_argument("--tau", type=float, help="relevance pruning threshold")
        p.add_argument("--seed", type=int, help="RNG seed (env ARDLSTM_SEED fallback)")
        p.add_argument("--data", help="dataset CSV path or 'generate'")
        p.add_argument("--out", help="output directory")
        p.add_argument("--mode", choices=["sampled", "mean-based"],
                       help="propagation mode")
        p.add_argument("--share-weights", dest="share_weights",
                       action=argparse.BooleanOptionalAction,
                       help="share posteriors across time steps")
        p.add_argument("--plots", dest="plots",
                       action=argparse.BooleanOptionalAction,
                       help="render figures next to the delimited outputs")
        p.add_argument("--noise", type=float, help="synthetic dataset noise level")
        p.add_argument("--designs", type=int, help="number of synthetic designs")
        p.add_argument("--steps", type=int, help="time steps for synthetic data")
        p.add_argument("--nodes", type=int, help="synthetic node count")

    add_common(sub.add_parser("generate", help="write a synthetic dataset CSV"))
    add_common(sub.add_parser("train", help="train a model, write checkpoint and metrics"))
    p_sweep = sub.add_parser("sweep", help="uncertainty/acquisition sweep over designs")
    add_common(p_sweep)
    p_sweep.add_argument("--checkpoint", required=True, help="trained model archive")
    p_sweep.add_argument("--grid", default="-75:75:100", help="lo:hi:count design grid")
    p_sweep.add_argument("--reference-data", dest="reference_data",
                         help="CSV whose interpolated response anchors the "
                              "expected improvement (default: the training data)")
    add_common(sub.add_parser("compare", help="sampled vs mean-based propagation"))
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        config = build_config(args)
        if args.command == "generate":
            return cmd_generate(config)
        if args.command == "train":
            return cmd_train(config)
        if args.command == "sweep":
            return cmd_sweep(config, args.checkpoint, args.grid,
                             getattr(args, "reference_data", None))
        if args.command == "compare":
            return cmd_compare(config)
        raise ConfigError(f"unknown command {args.command!r}")
    except ArdLstmError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
