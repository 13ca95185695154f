"""Checkpoint bundle: parameters, optimizer, vocab, RNG states, history."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import Hyperparameters
from .errors import CheckpointVersionError, LoadError
from .nn import AdamState, ParameterSet, read_container, write_container
from .tokens import Vocabulary
from .training import TrainingHistory

CHECKPOINT_VERSION = 1


@dataclass
class Checkpoint:
    params: ParameterSet
    hyper: Hyperparameters
    ontology_hash: str
    vocab: Vocabulary
    adam: AdamState | None = None
    rng_states: dict = field(default_factory=dict)
    history: TrainingHistory = field(default_factory=TrainingHistory)
    meta: dict = field(default_factory=dict)
    best_params: ParameterSet | None = None   # best-dev snapshot while resumable


def _pack_params(prefix: str, params: ParameterSet, arrays: dict) -> dict:
    layout = {}
    for group, group_params in params.groups.items():
        layout[group] = {"trainable": params.is_trainable(group),
                         "names": list(group_params)}
        for name, value in group_params.items():
            arrays[f"{prefix}/{group}/{name}"] = value
    return layout


def _unpack_params(prefix: str, layout: dict, arrays: dict) -> ParameterSet:
    params = ParameterSet()
    for group, info in layout.items():
        params.add_group(group,
                         {name: arrays[f"{prefix}/{group}/{name}"] for name in info["names"]},
                         trainable=info["trainable"])
    return params


def save_checkpoint(ckpt: Checkpoint, path: str) -> None:
    arrays: dict[str, np.ndarray] = {}
    layout = _pack_params("param", ckpt.params, arrays)
    meta = {
        "version": CHECKPOINT_VERSION,
        "hyper": ckpt.hyper.to_dict(),
        "ontology_hash": ckpt.ontology_hash,
        "vocab": ckpt.vocab.id_to_token,
        "params": layout,
        "rng_states": ckpt.rng_states,
        "history": ckpt.history.records,
        "meta": ckpt.meta,
        "adam": None,
        "best_params": None,
    }
    if ckpt.adam is not None:
        meta["adam"] = {
            "learning_rate": ckpt.adam.learning_rate, "beta1": ckpt.adam.beta1,
            "beta2": ckpt.adam.beta2, "eps": ckpt.adam.eps, "t": ckpt.adam.t,
            "keys": sorted("/".join(k) for k in ckpt.adam.m),
        }
        for key in ckpt.adam.m:
            flat = "/".join(key)
            arrays[f"adam_m/{flat}"] = ckpt.adam.m[key]
            arrays[f"adam_v/{flat}"] = ckpt.adam.v[key]
    if ckpt.best_params is not None:
        meta["best_params"] = _pack_params("best", ckpt.best_params, arrays)
    write_container(path, meta, arrays)


def load_checkpoint(path: str) -> Checkpoint:
    meta, arrays = read_container(path)
    if meta.get("version") != CHECKPOINT_VERSION:
        raise CheckpointVersionError(
            f"{path}: checkpoint version {meta.get('version')!r} is incompatible "
            f"(expected {CHECKPOINT_VERSION})")
    try:
        params = _unpack_params("param", meta["params"], arrays)
        hyper = Hyperparameters.from_dict(meta["hyper"])
        vocab = Vocabulary(id_to_token=list(meta["vocab"]))
    except KeyError as exc:
        raise LoadError(f"{path}: checkpoint is missing field {exc}") from exc
    adam = None
    if meta.get("adam") is not None:
        info = meta["adam"]
        adam = AdamState(learning_rate=info["learning_rate"], beta1=info["beta1"],
                         beta2=info["beta2"], eps=info["eps"], t=info["t"])
        for flat in info["keys"]:
            group, name = flat.split("/", 1)
            adam.m[(group, name)] = arrays[f"adam_m/{flat}"]
            adam.v[(group, name)] = arrays[f"adam_v/{flat}"]
    best = None
    if meta.get("best_params") is not None:
        best = _unpack_params("best", meta["best_params"], arrays)
    history = TrainingHistory(records=list(meta.get("history", [])))
    return Checkpoint(params=params, hyper=hyper, ontology_hash=meta["ontology_hash"],
                      vocab=vocab, adam=adam, rng_states=meta.get("rng_states", {}),
                      history=history, meta=meta.get("meta", {}), best_params=best)
