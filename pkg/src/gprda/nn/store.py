"""Named trainable parameters, seeded initialization, and checkpoint files.

A checkpoint is a JSON manifest (parameter names, shapes, hyperparameters)
next to a binary blob of little-endian 64-bit floats laid out in parameter
declaration order.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from gprda.errors import ShapeError
from gprda.nn.engine import Tensor


class ParameterStore:
    """Ordered mapping of parameter names to trainable tensors.

    Optimizers hang their per-parameter state (moments or velocity) off
    ``opt_state`` so state shapes stay next to the tensors they belong to.
    """

    def __init__(self):
        self._params: dict[str, Tensor] = {}
        self.opt_state: dict[str, dict[str, np.ndarray]] = {}

    def add(self, name: str, values: np.ndarray) -> Tensor:
        if name in self._params:
            raise ShapeError(f"duplicate parameter name {name!r}")
        t = Tensor(np.array(values, dtype=np.float64), requires_grad=True)
        self._params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def zero_grad(self) -> None:
        for t in self._params.values():
            t.grad = None

    def n_parameters(self) -> int:
        return sum(t.data.size for t in self._params.values())

    def state_equal(self, other: "ParameterStore", names=None) -> bool:
        keys = names if names is not None else self.names()
        return all(np.array_equal(self._params[k].data, other._params[k].data) for k in keys)

    def save(self, json_path, bin_path, hyperparameters: dict | None = None) -> None:
        entries = [
            {"name": k, "shape": list(t.data.shape)} for k, t in self._params.items()
        ]
        manifest = {
            "format": "gprda-checkpoint-v1",
            "dtype": "<f8",
            "parameters": entries,
            "hyperparameters": hyperparameters or {},
        }
        Path(json_path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        with open(bin_path, "wb") as fh:
            for t in self._params.values():
                fh.write(np.ascontiguousarray(t.data, dtype="<f8").tobytes())

    def load(self, json_path, bin_path) -> dict:
        manifest = json.loads(Path(json_path).read_text())
        blob = np.frombuffer(Path(bin_path).read_bytes(), dtype="<f8")
        offset = 0
        for entry in manifest["parameters"]:
            name, shape = entry["name"], tuple(entry["shape"])
            if name not in self._params:
                raise ShapeError(f"checkpoint parameter {name!r} unknown to this model")
            t = self._params[name]
            if t.data.shape != shape:
                raise ShapeError(
                    f"checkpoint shape {shape} for {name!r} does not match model {t.data.shape}"
                )
            size = int(np.prod(shape)) if shape else 1
            t.data = blob[offset : offset + size].reshape(shape).astype(np.float64)
            offset += size
        if offset != blob.size:
            raise ShapeError("checkpoint blob size does not match manifest shapes")
        return manifest["hyperparameters"]


def kaiming_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int,
                    slope: float = 0.01) -> np.ndarray:
    """Fan-in Kaiming-uniform draw with the leaky-rectifier gain."""
    gain = np.sqrt(2.0 / (1.0 + slope * slope))
    bound = gain * np.sqrt(3.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)
