"""A-scan preprocessing: amplitude envelope, unit normalization, label scaling.

The envelope is the magnitude of the analytic signal built in the DFT
domain: positive-frequency bins are doubled, negative frequencies zeroed,
and DC plus the even-length Nyquist bin kept at weight one. The DFT length
equals the trace length (no zero padding).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gprda.errors import ConfigError, DegenerateInputError
from gprda.fdtd import AScan


def _analytic_weights(n: int) -> np.ndarray:
    w = np.zeros(n)
    w[0] = 1.0
    if n % 2 == 0:
        w[1 : n // 2] = 2.0
        w[n // 2] = 1.0
    else:
        w[1 : (n + 1) // 2] = 2.0
    return w


def envelope_rows(traces: np.ndarray) -> np.ndarray:
    """Row-wise amplitude envelope of a (n_traces, n_samples) matrix."""
    traces = np.asarray(traces, dtype=np.float64)
    n = traces.shape[-1]
    if n < 2:
        raise ConfigError("envelope needs at least 2 samples")
    spectrum = np.fft.fft(traces, axis=-1)
    return np.abs(np.fft.ifft(spectrum * _analytic_weights(n), axis=-1))


def envelope(trace: AScan) -> AScan:
    """Amplitude envelope of a single trace; output is non-negative."""
    return AScan(envelope_rows(trace.samples[None, :])[0], trace.dt)


def normalize_signal(env: AScan) -> AScan:
    """Scale a trace by its own maximum so the output peaks at exactly 1."""
    peak = float(np.max(env.samples))
    if peak <= 0.0:
        raise DegenerateInputError("cannot normalize an all-zero trace")
    return AScan(env.samples / peak, env.dt)


def preprocess_rows(traces: np.ndarray) -> np.ndarray:
    """Envelope + per-trace max normalization for a trace matrix."""
    env = envelope_rows(traces)
    peaks = env.max(axis=-1, keepdims=True)
    if np.any(peaks <= 0.0):
        raise DegenerateInputError("dataset contains an all-zero trace")
    return env / peaks


def model_inputs(traces: np.ndarray) -> np.ndarray:
    """Preprocessed traces shaped (n, 1, num_samples) for the conv models."""
    return preprocess_rows(traces)[:, None, :]


@dataclass(frozen=True)
class LabelScaler:
    """Per-parameter affine map between physical units and [0, 1].

    Ranges come from the declared generating grid, never from the sample at
    hand, so pruned subsets keep the same scaling across hierarchy stages.
    """

    names: tuple[str, ...]
    low: np.ndarray
    high: np.ndarray

    @classmethod
    def from_ranges(cls, ranges: dict[str, tuple[float, float]],
                    names: list[str] | None = None) -> "LabelScaler":
        names = list(names if names is not None else ranges.keys())
        low = np.array([ranges[n][0] for n in names], dtype=np.float64)
        high = np.array([ranges[n][1] for n in names], dtype=np.float64)
        if np.any(high <= low):
            raise DegenerateInputError("label range must have high > low")
        return cls(tuple(names), low, high)

    def apply(self, labels: np.ndarray) -> np.ndarray:
        labels = np.asarray(labels, dtype=np.float64)
        return (labels - self.low) / (self.high - self.low)

    def invert(self, scaled: np.ndarray) -> np.ndarray:
        scaled = np.asarray(scaled, dtype=np.float64)
        return scaled * (self.high - self.low) + self.low

    def column_index(self, name: str) -> int:
        return self.names.index(name)

    def apply_column(self, name: str, values: np.ndarray) -> np.ndarray:
        i = self.column_index(name)
        return (np.asarray(values, dtype=np.float64) - self.low[i]) / (self.high[i] - self.low[i])

    def invert_column(self, name: str, scaled: np.ndarray) -> np.ndarray:
        i = self.column_index(name)
        return np.asarray(scaled, dtype=np.float64) * (self.high[i] - self.low[i]) + self.low[i]


def fit_label_scaler(param_space_or_ranges, names=None) -> LabelScaler:
    """Build the scaler from declared grid ranges (not from samples)."""
    if hasattr(param_space_or_ranges, "ranges"):
        ranges = param_space_or_ranges.ranges()
        names = names if names is not None else param_space_or_ranges.names
    else:
        ranges = param_space_or_ranges
    return LabelScaler.from_ranges(ranges, names)
