"""First-order Sobol sensitivity indices and the estimation-order ranking.

The estimator is the standard pick-and-freeze form over two independent
uniform sample matrices A and B plus the hybrids B_A^(i) (column i taken
from B, the rest from A). Since f(B) and f(B_A^(i)) share only factor i,

    V_i(t) = (1/N) sum_j (f(B)_j(t) - mu(t)) * (f(B_A^(i))_j(t) - f(A)_j(t))
    S_i(t) = V_i(t) / V(t)

with mu(t) and V(t) the mean and population variance of the pooled A and B
evaluations; centering by mu makes the estimate exactly invariant to
constant output offsets.
Model outputs may be vectors (time-resolved traces); indices are computed
per output sample and summarized by their arithmetic mean. Samples whose
pooled variance is near zero (the pre-arrival quiet zone) get S_i = 0 and
are flagged in a mask.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from gprda.errors import ConfigError
from gprda.params import ParameterSpace

VARIANCE_FLOOR = 1e-12  # relative to the largest per-sample variance


@dataclass
class SobolResult:
    names: list[str]
    indices_over_output: np.ndarray  # (M, T) time-resolved first-order indices
    means: np.ndarray  # (M,) arithmetic mean over the output samples
    n_samples: int
    active_mask: np.ndarray  # (T,) False where output variance was degenerate
    degenerate: bool  # True when every output sample had ~zero variance


def saltelli_matrices(n: int, space: ParameterSpace, seed: int):
    """Independent uniform draws A, B plus the M column-swapped hybrids."""
    if n < 2:
        raise ConfigError("need at least 2 samples")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x50B01]))
    a = space.sample_uniform(rng, n)
    b = space.sample_uniform(rng, n)
    hybrids = []
    for i in range(len(space)):
        h = a.copy()
        h[:, i] = b[:, i]
        hybrids.append(h)
    return a, b, hybrids


def _evaluate(model, rows: np.ndarray, memo: dict) -> np.ndarray:
    out = []
    for row in rows:
        key = tuple(float(v) for v in row)
        if key not in memo:
            memo[key] = np.atleast_1d(np.asarray(model(row), dtype=np.float64))
        out.append(memo[key])
    return np.stack(out)


def first_order_indices(model, matrices, names: list[str]) -> SobolResult:
    """Estimate per-parameter first-order indices of a deterministic model.

    `model` maps one parameter vector to a scalar or a 1D output vector;
    evaluations are memoized by parameter tuple.
    """
    a, b, hybrids = matrices
    n = a.shape[0]
    memo: dict = {}
    f_a = _evaluate(model, a, memo)  # (N, T)
    f_b = _evaluate(model, b, memo)
    pooled = np.concatenate([f_a, f_b], axis=0)
    mu = pooled.mean(axis=0)
    variance = pooled.var(axis=0)  # population variance per output sample
    floor = VARIANCE_FLOOR * max(float(variance.max()), VARIANCE_FLOOR)
    active = variance > floor
    degenerate = not bool(active.any())

    indices = np.zeros((len(names), f_a.shape[1]))
    fb_centered = f_b - mu
    for i, hybrid in enumerate(hybrids):
        f_h = _evaluate(model, hybrid, memo)
        v_i = np.mean(fb_centered * (f_h - f_a), axis=0)
        indices[i, active] = v_i[active] / variance[active]
    return SobolResult(
        names=list(names),
        indices_over_output=indices,
        means=indices.mean(axis=1),
        n_samples=n,
        active_mask=active,
        degenerate=degenerate,
    )


def rank_parameters(result: SobolResult) -> list[str]:
    """Parameter names sorted by descending mean index; ties keep declared order."""
    order = sorted(range(len(result.names)),
                   key=lambda i: (-result.means[i], i))
    return [result.names[i] for i in order]


def save_indices_csv(result: SobolResult, path) -> Path:
    """Time-resolved indices as CSV: one row per output sample plus a mean row."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["output_sample"] + [f"S_{n}" for n in result.names])
        for t in range(result.indices_over_output.shape[1]):
            writer.writerow([t] + [repr(float(v))
                                   for v in result.indices_over_output[:, t]])
        writer.writerow(["mean"] + [repr(float(v)) for v in result.means])
    return path
