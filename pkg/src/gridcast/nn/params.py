"""Named parameter store with seeded initialization and a binary checkpoint
container (length-prefixed JSON header + packed little-endian float64 data).
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1


class ParameterStore:
    """Owns the named parameters (and their gradients) of one training run.

    Parameters are created on first request in a deterministic order, so two
    stores built by the same forward pass with the same seed hold identical
    values. Weight matrices initialize uniform(-1/sqrt(fan_in), +1/sqrt(fan_in));
    biases and norm offsets start at zero, norm gains at one.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._rng = np.random.default_rng(self.seed)
        self._params: dict[str, "Tensor"] = {}

    def param(self, name: str, shape: tuple[int, ...], init: str = "fan_in"):
        from .autodiff import Tensor

        existing = self._params.get(name)
        if existing is not None:
            if existing.shape != tuple(shape):
                raise ValueError(
                    f"parameter {name!r} exists with shape {existing.shape}, "
                    f"requested {tuple(shape)}")
            return existing
        if init == "fan_in":
            bound = 1.0 / np.sqrt(max(1, shape[0]))
            data = self._rng.uniform(-bound, bound, size=shape)
        elif init == "zeros":
            data = np.zeros(shape)
        elif init == "ones":
            data = np.ones(shape)
        else:
            raise ValueError(f"unknown init {init!r}")
        tensor = Tensor(data, requires_grad=True)
        self._params[name] = tensor
        return tensor

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def get(self, name: str):
        return self._params[name]

    def zero_grad(self) -> None:
        for p in self._params.values():
            p.grad = None

    def parameter_count(self) -> int:
        return sum(p.size for p in self._params.values())

    # --- checkpoint container ---

    def save(self, path, config_hash: str = "") -> None:
        """Write a self-describing container: u64 header length, JSON header
        (names, shapes, offsets, seed, config hash), then packed <f8 data."""
        entries = {}
        offset = 0
        blobs = []
        for name, p in self._params.items():
            blob = np.ascontiguousarray(p.data, dtype="<f8").tobytes()
            entries[name] = {"shape": list(p.shape), "dtype": "<f8",
                             "offset": offset, "nbytes": len(blob)}
            blobs.append(blob)
            offset += len(blob)
        header = json.dumps({
            "version": FORMAT_VERSION,
            "seed": self.seed,
            "config_hash": config_hash,
            "tensors": entries,
        }, sort_keys=True).encode("utf-8")
        with Path(path).open("wb") as fh:
            fh.write(struct.pack("<Q", len(header)))
            fh.write(header)
            for blob in blobs:
                fh.write(blob)

    @classmethod
    def load(cls, path) -> tuple["ParameterStore", dict]:
        from .autodiff import Tensor

        raw = Path(path).read_bytes()
        if len(raw) < 8:
            raise ValueError(f"checkpoint {path} truncated")
        (header_len,) = struct.unpack("<Q", raw[:8])
        header = json.loads(raw[8:8 + header_len].decode("utf-8"))
        if header.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint version {header.get('version')}")
        body = raw[8 + header_len:]
        store = cls(header["seed"])
        for name, meta in header["tensors"].items():
            blob = body[meta["offset"]:meta["offset"] + meta["nbytes"]]
            data = np.frombuffer(blob, dtype="<f8").reshape(meta["shape"]).copy()
            store._params[name] = Tensor(data, requires_grad=True)
        return store, header
