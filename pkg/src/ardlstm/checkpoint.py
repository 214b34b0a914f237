"""Model checkpoints: a zip archive with a JSON index and raw array entries.

The manifest carries the config, normalizer constants, training designs and
the likelihood history; every numpy array is stored as its own ``.npy``
entry so the container stays self-describing and portable. Zip entries get
a fixed timestamp, making archives byte-identical across runs.
"""
from __future__ import annotations

import io
import json
import os
import zipfile
from dataclasses import asdict

import numpy as np

from .ard_lstm import ArdLstm, ArdLstmConfig, RegressionBank
from .data import Normalizer
from .errors import MissingCheckpoint
from .lstm import GATES, LstmWeights, PointLstm

FORMAT_VERSION = 1
_EPOCH_STAMP = (1980, 1, 1, 0, 0, 0)

_BANK_FIELDS = ("alpha", "beta", "mu", "sigma", "gamma", "mask")


def _write_entry(zf: zipfile.ZipFile, name: str, payload: bytes) -> None:
    info = zipfile.ZipInfo(name, date_time=_EPOCH_STAMP)
    info.compress_type = zipfile.ZIP_STORED
    zf.writestr(info, payload)


def _array_bytes(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    np.save(buf, np.ascontiguousarray(arr), allow_pickle=False)
    return buf.getvalue()


def _write_archive(path, manifest: dict, arrays: dict[str, np.ndarray]) -> None:
    manifest = dict(manifest, format_version=FORMAT_VERSION, arrays=sorted(arrays))
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        _write_entry(zf, "manifest.json",
                     json.dumps(manifest, sort_keys=True, indent=1).encode())
        for name in sorted(arrays):
            _write_entry(zf, f"arrays/{name}.npy", _array_bytes(arrays[name]))


def _read_archive(path) -> tuple[dict, dict[str, np.ndarray]]:
    if not os.path.exists(path):
        raise MissingCheckpoint(f"no checkpoint at {path}")
    try:
        zf = zipfile.ZipFile(path)
    except zipfile.BadZipFile as exc:
        raise MissingCheckpoint(f"{path} is not a checkpoint archive: {exc}") from None
    with zf:
        try:
            manifest = json.loads(zf.read("manifest.json"))
        except KeyError:
            raise MissingCheckpoint(f"{path} has no manifest.json") from None
        if manifest.get("format_version") != FORMAT_VERSION:
            raise MissingCheckpoint(
                f"unsupported checkpoint format {manifest.get('format_version')!r}")
        arrays = {name: np.load(io.BytesIO(zf.read(f"arrays/{name}.npy")),
                                allow_pickle=False)
                  for name in manifest["arrays"]}
    return manifest, arrays


def save_checkpoint(model, path) -> None:
    """Write config, posteriors, hyperparameters, masks, normalizers, history."""
    if isinstance(model, PointLstm):
        _save_point_lstm(model, path)
        return
    arrays: dict[str, np.ndarray] = {}
    for bank_name, bank in (("gates", model.gates), ("output", model.output)):
        for field in _BANK_FIELDS:
            arrays[f"{bank_name}/{field}"] = getattr(bank, field)
    arrays["norm/input_center"] = model.input_norm.center
    arrays["norm/input_halfrange"] = model.input_norm.halfrange
    arrays["norm/target_center"] = model.target_norm.center
    arrays["norm/target_halfrange"] = model.target_norm.halfrange
    arrays["train_designs"] = model.train_designs
    arrays["loglik_history"] = np.asarray(model.loglik_history, dtype=np.float64)

    manifest = {
        "model": "ard-lstm",
        "config": asdict(model.config),
        "n_steps_trained": model.n_steps_trained,
        "sparsity_history": model.sparsity_history,
    }
    _write_archive(path, manifest, arrays)


def _save_point_lstm(model: PointLstm, path) -> None:
    arrays = {f"weights/w_{g}": model.weights.weights[g] for g in GATES}
    arrays |= {f"weights/b_{g}": model.weights.biases[g] for g in GATES}
    arrays["weights/w_y"] = model.weights.w_y
    arrays["norm/input_center"] = model.input_norm.center
    arrays["norm/input_halfrange"] = model.input_norm.halfrange
    arrays["norm/target_center"] = model.target_norm.center
    arrays["norm/target_halfrange"] = model.target_norm.halfrange
    arrays["train_designs"] = model.train_designs
    arrays["loss_history"] = np.asarray(model.loss_history, dtype=np.float64)
    _write_archive(path, {"model": "lstm"}, arrays)


def load_checkpoint(path):
    """Rebuild a fitted model (ArdLstm or PointLstm) from an archive."""
    manifest, arrays = _read_archive(path)
    input_norm = Normalizer(arrays["norm/input_center"], arrays["norm/input_halfrange"])
    target_norm = Normalizer(arrays["norm/target_center"], arrays["norm/target_halfrange"])

    if manifest.get("model") == "lstm":
        weights = LstmWeights(
            weights={g: arrays[f"weights/w_{g}"] for g in GATES},
            biases={g: arrays[f"weights/b_{g}"] for g in GATES},
            w_y=arrays["weights/w_y"])
        return PointLstm(weights=weights, input_norm=input_norm,
                         target_norm=target_norm,
                         loss_history=arrays["loss_history"].tolist(),
                         train_designs=arrays["train_designs"])

    config = ArdLstmConfig(**{k: tuple(v) if isinstance(v, list) else v
                              for k, v in manifest["config"].items()})
    model = ArdLstm(config)
    for bank_name in ("gates", "output"):
        fields = {f: arrays[f"{bank_name}/{f}"] for f in _BANK_FIELDS}
        setattr(model, bank_name, RegressionBank(**fields))
    model.input_norm = input_norm
    model.target_norm = target_norm
    model.train_designs = arrays["train_designs"]
    model.loglik_history = arrays["loglik_history"].tolist()
    model.sparsity_history = manifest.get("sparsity_history", [])
    model.n_steps_trained = manifest["n_steps_trained"]
    model._repack()
    return model
