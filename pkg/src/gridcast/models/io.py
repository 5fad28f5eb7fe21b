"""Model checkpoints: binary parameter container plus a JSON sidecar with
config, feature schema, normalizer constants and seed.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from ..nn import ParameterStore
from ..preprocess import CovariateSchema, Normalizer
from .common import TrainedModel, config_from_dict, config_to_dict, write_json

PARAMS_FILE = "params.bin"
SIDECAR_FILE = "model.json"


def config_hash(config) -> str:
    payload = json.dumps(config_to_dict(config), sort_keys=True).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


def save_model(model: TrainedModel, directory, extra: dict | None = None) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if model.store is not None:
        model.store.save(directory / PARAMS_FILE, config_hash(model.config))
    sidecar = {
        "kind": model.kind,
        "config": config_to_dict(model.config),
        "config_hash": config_hash(model.config),
        "level": model.level,
        "series_ids": list(model.series_ids),
        "seed": model.seed,
        "schema": model.schema.to_jsonable() if model.schema else None,
        "normalizers": {sid: norm.to_jsonable()
                        for sid, norm in model.normalizers.items()},
        "arima_coefficients": model.arima_coefficients,
        "history": list(model.history),
        "extra": extra or {},
    }
    write_json(directory / SIDECAR_FILE, sidecar)
    return directory


def read_extra(directory) -> dict:
    """Auxiliary training metadata stored next to a checkpoint."""
    sidecar = json.loads((Path(directory) / SIDECAR_FILE).read_text(encoding="utf-8"))
    return sidecar.get("extra", {})


def load_model(directory) -> TrainedModel:
    directory = Path(directory)
    sidecar = json.loads((directory / SIDECAR_FILE).read_text(encoding="utf-8"))
    kind = sidecar["kind"]
    config = config_from_dict(kind, sidecar["config"])
    store = None
    params_path = directory / PARAMS_FILE
    if params_path.exists():
        store, header = ParameterStore.load(params_path)
        if header.get("config_hash") != sidecar.get("config_hash"):
            raise ValueError(f"checkpoint {directory}: parameter container and "
                             "sidecar disagree on the config hash")
    schema = (CovariateSchema.from_jsonable(sidecar["schema"])
              if sidecar.get("schema") else None)
    normalizers = {sid: Normalizer.from_jsonable(data)
                   for sid, data in sidecar.get("normalizers", {}).items()}
    return TrainedModel(
        kind=kind, config=config, level=sidecar["level"],
        series_ids=tuple(sidecar["series_ids"]), seed=sidecar["seed"],
        schema=schema, normalizers=normalizers, store=store,
        arima_coefficients=sidecar.get("arima_coefficients", {}),
        history=tuple(sidecar.get("history", [])))
