"""Sequential parameter estimation with between-stage dataset pruning.

For each target case, one single-output model per parameter is trained in
sensitivity order on the current source subset plus the case's unlabeled
scans. The stage's aggregated estimate is snapped to the nearest grid value
(ties resolve to the lower value) and the source set is pruned to rows
within the configured number of grid steps before the next stage trains.
Negative conductivity estimates are clamped to zero before snapping, as a
post-processing rule; training itself never clamps.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from gprda.architectures import build_dann, build_phydann
from gprda.dataset import LabeledDataset
from gprda.errors import ConfigError, PruningError
from gprda.params import ParameterSpace
from gprda.signal_prep import LabelScaler, model_inputs
from gprda.training import TrainConfig, predict, train_dann, train_phydann

log = logging.getLogger("gprda.hierarchy")

STAGE_VARIANTS = ("dann", "phydann1", "phydann2")


@dataclass(frozen=True)
class HierPlan:
    """Estimation order plus the stage model family and pruning window."""

    order: tuple[str, ...]
    variant: str = "dann"
    tolerance_steps: int = 0

    def validate(self, available: list[str]):
        if self.variant not in STAGE_VARIANTS:
            raise ConfigError(f"unknown stage variant {self.variant!r}")
        if self.tolerance_steps < 0:
            raise ConfigError("pruning tolerance must be >= 0 grid steps")
        if sorted(self.order) != sorted(set(self.order)):
            raise ConfigError("plan order repeats a parameter")
        unknown = set(self.order) - set(available)
        if unknown:
            raise ConfigError(f"plan references unknown parameters {sorted(unknown)}")


@dataclass
class StageResult:
    parameter: str
    per_scan_estimates: np.ndarray  # physical units, unclamped
    estimate: float  # aggregated (mean, clamp rules applied)
    snapped_value: float  # nearest grid value used for pruning
    retained_grid_values: list[float]
    input_size: int  # source rows this stage trained on
    pruned_size: int  # source rows left for the next stage
    train_seconds: float = 0.0


def clamp_conductivity(estimate: float) -> float:
    """Negative conductivity is unphysical; assign zero."""
    return max(float(estimate), 0.0)


def snap_to_grid(estimate: float, grid_values: np.ndarray) -> float:
    """Nearest grid value; an exact midpoint snaps to the lower value."""
    grid = np.sort(np.asarray(grid_values, dtype=np.float64))
    return float(grid[int(np.argmin(np.abs(grid - estimate)))])


def prune_dataset(dataset: LabeledDataset, param: str, estimate: float,
                  tolerance_steps: int = 0) -> LabeledDataset:
    """Retain rows whose label sits within the tolerance window of the
    estimate snapped to the parameter's current grid."""
    if param not in dataset.param_names:
        raise ConfigError(f"dataset has no parameter {param!r}")
    grid = np.sort(np.asarray(dataset.grid_values[param], dtype=np.float64))
    snapped = snap_to_grid(estimate, grid)
    center = int(np.argmin(np.abs(grid - snapped)))
    lo = max(center - tolerance_steps, 0)
    hi = min(center + tolerance_steps, grid.size - 1)
    retained_values = grid[lo : hi + 1]
    labels = dataset.column(param)
    mask = np.zeros(dataset.n, dtype=bool)
    for v in retained_values:
        mask |= np.isclose(labels, v, rtol=0.0, atol=1e-9 * max(1.0, abs(v)))
    if not mask.any():
        raise PruningError(
            f"pruning {param!r} to {snapped!r} (tolerance {tolerance_steps}) left no rows; "
            f"grid values: {[float(v) for v in grid]}")
    new_grid = dict(dataset.grid_values)
    new_grid[param] = retained_values
    return dataset.select(np.flatnonzero(mask), grid_values=new_grid)


def _is_conductivity(param: str, space: ParameterSpace | None) -> bool:
    if space is not None:
        try:
            return space.spec(param).field == "conductivity"
        except ConfigError:
            pass
    return "conduct" in param.lower()


def _stage_seed(seed: int, case_index: int, stage_index: int) -> int:
    return int(np.random.SeedSequence(
        [seed, case_index, stage_index]).generate_state(1, np.uint64)[0])


def _train_stage(variant: str, x_source: np.ndarray, y_source: np.ndarray,
                 x_target: np.ndarray, cfg: TrainConfig, seed: int):
    if variant == "dann":
        model = build_dann(x_source.shape[2], 1, seed=seed, slope=cfg.leaky_slope)
        report = train_dann(model, x_source, y_source, x_target, cfg)
    else:
        which = 1 if variant == "phydann1" else 2
        model = build_phydann(which, x_source.shape[2], 1, seed=seed,
                              slope=cfg.leaky_slope)
        report = train_phydann(model, x_source, y_source, x_target, cfg)
    return model, report


def run_case(plan: HierPlan, source: LabeledDataset, target_traces: np.ndarray,
             scaler: LabelScaler, cfg: TrainConfig, seed: int,
             case_index: int = 0, space: ParameterSpace | None = None) -> list[StageResult]:
    """Run every stage of the plan for one target case."""
    x_target = model_inputs(target_traces)
    current = source
    results: list[StageResult] = []
    for stage_index, param in enumerate(plan.order):
        x_source = model_inputs(current.traces)
        y_source = scaler.apply_column(param, current.column(param))[:, None]
        stage_cfg = TrainConfig(**{**cfg.__dict__,
                                   "batch_size": min(cfg.batch_size, current.n),
                                   "seed": _stage_seed(cfg.seed, case_index, stage_index)})
        model, report = _train_stage(plan.variant, x_source, y_source, x_target,
                                     stage_cfg, seed=stage_cfg.seed)
        per_scan = scaler.invert_column(param, predict(model, x_target)[:, 0])
        estimate = float(per_scan.mean())
        if _is_conductivity(param, space):
            estimate = clamp_conductivity(estimate)
        is_last = stage_index == len(plan.order) - 1
        if not is_last:
            pruned = prune_dataset(current, param, estimate, plan.tolerance_steps)
        else:
            pruned = current
        snapped = snap_to_grid(estimate, current.grid_values[param])
        results.append(StageResult(
            parameter=param,
            per_scan_estimates=per_scan,
            estimate=estimate,
            snapped_value=snapped,
            retained_grid_values=[float(v) for v in
                                  (pruned.grid_values[param] if not is_last
                                   else [snapped])],
            pruned_size=pruned.n,
            train_seconds=report.wall_time,
        ))
        current = pruned
        log.info("case %d stage %s: estimate %.5g -> snapped %.5g, %d rows remain",
                 case_index, param, estimate, snapped, current.n)
    return results


def _run_case_job(args):
    plan, source, traces, scaler, cfg, seed, case_index, space = args
    return run_case(plan, source, traces, scaler, cfg, seed,
                    case_index=case_index, space=space)


def run_hierarchy(plan: HierPlan, source: LabeledDataset,
                  target_cases: dict[str, np.ndarray], scaler: LabelScaler,
                  cfg: TrainConfig, seed: int, space: ParameterSpace | None = None,
                  workers: int = 1) -> dict[str, list[StageResult]]:
    """Independent sequential estimation for every target case.

    Stage models retrain per case; distinct cases may run in parallel
    processes with results merged by case name.
    """
    plan.validate(source.param_names)
    cases = list(target_cases.items())
    jobs = [(plan, source, traces, scaler, cfg, seed, idx, space)
            for idx, (_, traces) in enumerate(cases)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_case_job, jobs))
    else:
        outcomes = [_run_case_job(j) for j in jobs]
    return {name: outcome for (name, _), outcome in zip(cases, outcomes)}


def build_plan(ranked: list[str], space: ParameterSpace, means: dict[str, float],
               variant: str = "dann", tolerance_steps: int = 0) -> HierPlan:
    """Order parameters for estimation: the layer with the larger total
    sensitivity first, then within-layer sensitivity order."""
    layers: dict[int, list[str]] = {}
    for name in ranked:
        layers.setdefault(space.spec(name).layer, []).append(name)
    layer_order = sorted(layers, key=lambda l: -sum(means[n] for n in layers[l]))
    order: list[str] = []
    for layer in layer_order:
        order.extend(layers[layer])  # already in ranked (descending) order
    return HierPlan(order=tuple(order), variant=variant, tolerance_steps=tolerance_steps)
