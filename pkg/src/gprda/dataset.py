"""Labeled trace datasets: grid generation, disk format, row selection.

On disk a dataset is a directory holding
  manifest.json  -- parameter grid, radar config, seed, trace length, dt
  traces.f32     -- little-endian float32, row-major [trace x sample]
  labels.csv     -- header row of parameter names, one row per trace
"""

from __future__ import annotations

import csv
import itertools
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from gprda.errors import ConfigError, DependencyError
from gprda.fdtd import LayerStack, MaterialLayer, RadarConfig, simulate_ascan
from gprda.params import ParameterSpace, ParameterSpec

TRACES_FILE = "traces.f32"
LABELS_FILE = "labels.csv"
MANIFEST_FILE = "manifest.json"


def trace_seed(root_seed: int, index: int) -> int:
    """Stable per-trace RNG seed, independent of generation order."""
    return int(np.random.SeedSequence([root_seed, index]).generate_state(1, np.uint64)[0])


@dataclass
class LabeledDataset:
    """Traces plus per-trace parameter labels and the generating grid."""

    traces: np.ndarray  # (n, num_samples) float32
    labels: np.ndarray  # (n, M) float64, physical units
    param_names: list[str]
    grid_values: dict[str, np.ndarray]  # current retained grid per parameter
    declared_ranges: dict[str, tuple[float, float]]
    dt: float
    seed: int = 0
    radar: dict = field(default_factory=dict)

    def __post_init__(self):
        self.traces = np.asarray(self.traces, dtype=np.float32)
        self.labels = np.asarray(self.labels, dtype=np.float64)
        if self.traces.shape[0] != self.labels.shape[0]:
            raise ConfigError("traces and labels row counts differ")
        if self.labels.shape[1] != len(self.param_names):
            raise ConfigError("label columns do not match parameter names")

    @property
    def n(self) -> int:
        return self.traces.shape[0]

    @property
    def num_samples(self) -> int:
        return self.traces.shape[1]

    def column(self, name: str) -> np.ndarray:
        return self.labels[:, self.param_names.index(name)]

    def select(self, indices: np.ndarray, grid_values: dict | None = None) -> "LabeledDataset":
        return LabeledDataset(
            traces=self.traces[indices],
            labels=self.labels[indices],
            param_names=list(self.param_names),
            grid_values=dict(grid_values if grid_values is not None else self.grid_values),
            declared_ranges=dict(self.declared_ranges),
            dt=self.dt,
            seed=self.seed,
            radar=dict(self.radar),
        )

    def save(self, directory) -> list[Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        traces_path = directory / TRACES_FILE
        traces_path.write_bytes(np.ascontiguousarray(self.traces, dtype="<f4").tobytes())
        labels_path = directory / LABELS_FILE
        with open(labels_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.param_names)
            for row in self.labels:
                writer.writerow([repr(float(v)) for v in row])
        manifest = {
            "n_traces": int(self.n),
            "num_samples": int(self.num_samples),
            "dt": self.dt,
            "seed": self.seed,
            "radar": self.radar,
            "parameters": [
                {
                    "name": name,
                    "low": self.declared_ranges[name][0],
                    "high": self.declared_ranges[name][1],
                    "grid_values": [float(v) for v in self.grid_values[name]],
                }
                for name in self.param_names
            ],
            "files": {"traces": TRACES_FILE, "labels": LABELS_FILE, "dtype": "<f4"},
        }
        manifest_path = directory / MANIFEST_FILE
        manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return [manifest_path, traces_path, labels_path]

    @classmethod
    def load(cls, directory) -> "LabeledDataset":
        directory = Path(directory)
        manifest_path = directory / MANIFEST_FILE
        if not manifest_path.exists():
            raise DependencyError(f"missing dataset manifest: {manifest_path}")
        manifest = json.loads(manifest_path.read_text())
        n, m = manifest["n_traces"], len(manifest["parameters"])
        traces = np.frombuffer((directory / TRACES_FILE).read_bytes(), dtype="<f4")
        traces = traces.reshape(n, manifest["num_samples"]).copy()
        names = [p["name"] for p in manifest["parameters"]]
        labels = np.zeros((n, m))
        with open(directory / LABELS_FILE, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != names:
                raise ConfigError("label header does not match manifest parameters")
            for i, row in enumerate(reader):
                labels[i] = [float(v) for v in row]
        return cls(
            traces=traces,
            labels=labels,
            param_names=names,
            grid_values={p["name"]: np.asarray(p["grid_values"]) for p in manifest["parameters"]},
            declared_ranges={p["name"]: (p["low"], p["high"]) for p in manifest["parameters"]},
            dt=manifest["dt"],
            seed=manifest["seed"],
            radar=manifest["radar"],
        )


def _simulate_row(args):
    stack, radar, seed = args
    return simulate_ascan(stack, radar, seed).samples.astype(np.float32)


def generate_grid_dataset(space: ParameterSpace, stack_template: LayerStack,
                          radar: RadarConfig, seed: int,
                          workers: int = 1) -> LabeledDataset:
    """One trace per Cartesian grid point, labels in physical grid units."""
    grid = space.grid()
    axes = [grid[name] for name in space.names]
    combos = list(itertools.product(*axes))
    if not combos:
        raise ConfigError("parameter grid is empty")
    labels = np.array(combos, dtype=np.float64)
    jobs = [
        (space.apply(stack_template, labels[i]), radar, trace_seed(seed, i))
        for i in range(len(combos))
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_simulate_row, jobs, chunksize=8))
    else:
        rows = [_simulate_row(j) for j in jobs]
    return LabeledDataset(
        traces=np.stack(rows),
        labels=labels,
        param_names=space.names,
        grid_values={k: np.asarray(v) for k, v in grid.items()},
        declared_ranges=space.ranges(),
        dt=radar.time_window / radar.num_samples,
        seed=seed,
        radar=radar.to_dict(),
    )


@dataclass
class TargetSet:
    """Unlabeled target-domain scans grouped by case (specimen)."""

    traces: np.ndarray  # (n, num_samples) float32
    case_ids: list[str]
    dt: float
    seed: int = 0
    radar: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.traces.shape[0]

    def cases(self) -> list[str]:
        seen: dict[str, None] = {}
        for c in self.case_ids:
            seen.setdefault(c, None)
        return list(seen)

    def case_traces(self, case: str) -> np.ndarray:
        mask = np.array([c == case for c in self.case_ids])
        return self.traces[mask]

    def save(self, directory) -> list[Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        traces_path = directory / TRACES_FILE
        traces_path.write_bytes(np.ascontiguousarray(self.traces, dtype="<f4").tobytes())
        cases_path = directory / "cases.csv"
        with open(cases_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["scan", "case"])
            for i, c in enumerate(self.case_ids):
                writer.writerow([i, c])
        manifest = {
            "n_traces": int(self.n),
            "num_samples": int(self.traces.shape[1]),
            "dt": self.dt,
            "seed": self.seed,
            "radar": self.radar,
            "files": {"traces": TRACES_FILE, "cases": "cases.csv", "dtype": "<f4"},
        }
        manifest_path = directory / MANIFEST_FILE
        manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return [manifest_path, traces_path, cases_path]

    @classmethod
    def load(cls, directory) -> "TargetSet":
        directory = Path(directory)
        manifest_path = directory / MANIFEST_FILE
        if not manifest_path.exists():
            raise DependencyError(f"missing target manifest: {manifest_path}")
        manifest = json.loads(manifest_path.read_text())
        traces = np.frombuffer((directory / TRACES_FILE).read_bytes(), dtype="<f4")
        traces = traces.reshape(manifest["n_traces"], manifest["num_samples"]).copy()
        case_ids = []
        with open(directory / "cases.csv", newline="") as fh:
            reader = csv.reader(fh)
            next(reader)
            for row in reader:
                case_ids.append(row[1])
        return cls(traces=traces, case_ids=case_ids, dt=manifest["dt"],
                   seed=manifest["seed"], radar=manifest["radar"])


def generate_target_set(specimens: list[dict], space: ParameterSpace,
                        stack_template: LayerStack, radar: RadarConfig, seed: int,
                        workers: int = 1) -> tuple[TargetSet, dict[str, dict[str, float]]]:
    """Gap-perturbed scans at held-out parameter tuples.

    Each specimen dict carries `name`, `values` (parameter name -> physical
    value, off-grid allowed) and `scans`. Returns the target set plus the
    ground-truth map, which callers must store separately: training code
    never sees it.
    """
    jobs = []
    case_ids = []
    truth: dict[str, dict[str, float]] = {}
    index = 0
    for spec in specimens:
        name = spec["name"]
        values = {k: float(v) for k, v in spec["values"].items()}
        truth[name] = values
        stack = space.apply(stack_template, values)
        for _ in range(int(spec["scans"])):
            jobs.append((stack, radar, trace_seed(seed, index)))
            case_ids.append(name)
            index += 1
    if not jobs:
        raise ConfigError("no target specimens configured")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_simulate_row, jobs, chunksize=8))
    else:
        rows = [_simulate_row(j) for j in jobs]
    target = TargetSet(
        traces=np.stack(rows),
        case_ids=case_ids,
        dt=radar.time_window / radar.num_samples,
        seed=seed,
        radar=radar.to_dict(),
    )
    return target, truth
