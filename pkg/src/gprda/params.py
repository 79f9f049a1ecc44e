"""Material parameter spaces: named ranges mapped onto layer-stack fields."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gprda.errors import ConfigError
from gprda.fdtd import LayerStack

LAYER_FIELDS = ("relative_permittivity", "conductivity", "thickness")


@dataclass(frozen=True)
class ParameterSpec:
    """One scene parameter: its range and the stack field it drives.

    The grid is defined either by `step` or by `count`; with neither the
    parameter is continuous (samplable but not griddable).
    """

    name: str
    low: float
    high: float
    layer: int = 0  # index into LayerStack.layers, top first
    field: str = "relative_permittivity"
    step: float | None = None
    count: int | None = None

    def validate(self):
        if self.high <= self.low:
            raise ConfigError(f"parameter {self.name!r}: high must exceed low")
        if self.field not in LAYER_FIELDS:
            raise ConfigError(f"parameter {self.name!r}: unknown field {self.field!r}")
        if self.step is not None and self.step <= 0:
            raise ConfigError(f"parameter {self.name!r}: step must be positive")
        if self.count is not None and self.count < 1:
            raise ConfigError(f"parameter {self.name!r}: count must be >= 1")

    def grid_values(self) -> np.ndarray:
        if self.count is not None:
            return np.linspace(self.low, self.high, self.count)
        if self.step is not None:
            n = int(np.floor((self.high - self.low) / self.step + 1e-9)) + 1
            return self.low + self.step * np.arange(n)
        raise ConfigError(f"parameter {self.name!r} is continuous; no grid defined")


class ParameterSpace:
    """Ordered collection of parameter specs with unique names."""

    def __init__(self, specs: list[ParameterSpec]):
        names = [s.name for s in specs]
        if len(set(names)) != len(names):
            raise ConfigError("parameter names must be unique")
        for s in specs:
            s.validate()
        self.specs = list(specs)

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.specs]

    def __len__(self):
        return len(self.specs)

    def __iter__(self):
        return iter(self.specs)

    def spec(self, name: str) -> ParameterSpec:
        for s in self.specs:
            if s.name == name:
                return s
        raise ConfigError(f"unknown parameter {name!r}")

    def ranges(self) -> dict[str, tuple[float, float]]:
        return {s.name: (s.low, s.high) for s in self.specs}

    def grid(self) -> dict[str, np.ndarray]:
        return {s.name: s.grid_values() for s in self.specs}

    def apply(self, stack: LayerStack, values) -> LayerStack:
        """Return a stack with every parameter set from a value vector/map."""
        if not isinstance(values, dict):
            values = dict(zip(self.names, values))
        for s in self.specs:
            stack = stack.with_parameter(s.layer, s.field, float(values[s.name]))
        return stack

    def sample_uniform(self, rng: np.random.Generator, n: int) -> np.ndarray:
        lows = np.array([s.low for s in self.specs])
        highs = np.array([s.high for s in self.specs])
        return rng.uniform(lows, highs, size=(n, len(self.specs)))
