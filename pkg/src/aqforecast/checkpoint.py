"""Saving and restoring trained predictors.

A checkpoint is a directory holding ``checkpoint.json`` (format tag, method
tag, architecture specs, seeds and free-form metadata) and ``weights.npz``
(parameters keyed ``m{member}/{name}`` plus SWAG moments when present).
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .models import build_model
from .uncertainty import EnsembleHandle, SwagPosterior, SwagState

FORMAT = "aqforecast-checkpoint/1"
META_FILE = "checkpoint.json"
WEIGHTS_FILE = "weights.npz"


def _members(predictor) -> tuple[list, list]:
    if predictor is None:
        return [], []
    if isinstance(predictor, EnsembleHandle):
        return list(predictor.members), list(predictor.seeds)
    if isinstance(predictor, SwagPosterior):
        return [predictor.base], [predictor.base.spec.get("seed", 0)]
    return [predictor], [predictor.spec.get("seed", 0)]


def save_checkpoint(directory, method: str, predictor, meta: dict | None = None) -> Path:
    """Write ``predictor`` (a model, SWAG posterior, ensemble handle, or None
    for weightless baselines) under ``directory``."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    members, seeds = _members(predictor)
    arrays = {}
    for i, m in enumerate(members):
        for name, p in m.named_parameters():
            arrays[f"m{i}/{name}"] = p.data
    if isinstance(predictor, SwagPosterior):
        arrays.update(predictor.state.to_arrays())
    doc = {
        "format": FORMAT,
        "method": method,
        "specs": [m.spec for m in members],
        "seeds": seeds,
        "task": members[0].task if members else (meta or {}).get("task"),
        "meta": meta or {},
    }
    (out / META_FILE).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    np.savez(out / WEIGHTS_FILE, **arrays)
    return out


def load_checkpoint(directory, expect_method: str | None = None):
    """Return ``(predictor, document)``; refuses a checkpoint of another method."""
    d = Path(directory)
    meta_path = d / META_FILE
    if not meta_path.exists():
        raise DataError(f"no checkpoint at {d}")
    doc = json.loads(meta_path.read_text())
    if doc.get("format") != FORMAT:
        raise DataError(f"{meta_path}: unknown checkpoint format {doc.get('format')!r}")
    if expect_method is not None and doc["method"] != expect_method:
        raise ConfigError(
            f"checkpoint was trained with method {doc['method']!r}, config asks for {expect_method!r}"
        )
    with np.load(d / WEIGHTS_FILE) as npz:
        arrays = {k: npz[k] for k in npz.files}
    members = []
    for i, spec in enumerate(doc["specs"]):
        m = build_model(spec)
        for name, p in m.named_parameters():
            key = f"m{i}/{name}"
            if key not in arrays:
                raise DataError(f"checkpoint lacks weights for {key}")
            if arrays[key].shape != p.shape:
                raise DataError(f"{key}: stored shape {arrays[key].shape} != model shape {p.shape}")
            p.data[...] = arrays[key]
        m.trained = True
        members.append(m)
    if not members:
        return None, doc
    if "swag_mean" in arrays:
        return SwagPosterior(members[0], SwagState.from_arrays(arrays)), doc
    if doc["method"] == "ensemble":
        return EnsembleHandle(members, doc["seeds"]), doc
    return members[0], doc
