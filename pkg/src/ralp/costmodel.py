"""Closed-form per-step communication volumes and compute loads.

Three aggregation strategies are modeled:

* baseline parameter server: every worker pushes gradients for the whole
  model and pulls the whole model back, so 2*S*W bytes cross the network
  per step;
* ring allreduce: 2*S*(W-1) bytes per step across W peers, no server;
* split placement ("ralp"): the back segment lives in the PS machine, so
  only the cut activation (both directions) and the front-segment
  parameters (both directions) travel, per worker.

W counts synchronizing network endpoints; reduction among devices inside
one endpoint is treated as free.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .layers import ModelGraph
from .profiler import ProfilerConfig, profile

CSV_HEADER = "model,strategy,W,total_bytes,param_bytes,activation_bytes"


class CostModelError(ValueError):
    pass


class StrategyKind(str, enum.Enum):
    BASELINE_PS = "baseline"
    RALP = "ralp"
    RING_ALLREDUCE = "ring"


@dataclass(frozen=True)
class Strategy:
    kind: StrategyKind
    split_index: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind is StrategyKind.RALP and self.split_index is None:
            raise CostModelError("ralp strategy needs a split_index")
        if self.kind is not StrategyKind.RALP and self.split_index is not None:
            raise CostModelError(f"{self.kind.value} strategy does not take a split_index")

    @classmethod
    def baseline(cls) -> "Strategy":
        return cls(StrategyKind.BASELINE_PS)

    @classmethod
    def ralp(cls, split_index: int) -> "Strategy":
        return cls(StrategyKind.RALP, split_index)

    @classmethod
    def ring(cls) -> "Strategy":
        return cls(StrategyKind.RING_ALLREDUCE)


@dataclass(frozen=True)
class JobSpec:
    model: ModelGraph
    strategy: Strategy
    worker_count: int
    ps_count: int = 1

    def __post_init__(self) -> None:
        if self.worker_count < 1:
            raise CostModelError("worker_count must be >= 1")
        kind = self.strategy.kind
        if kind is StrategyKind.RALP and self.ps_count != 1:
            raise CostModelError("split placement runs exactly one PS worker")
        if kind is StrategyKind.RING_ALLREDUCE and self.ps_count != 0:
            raise CostModelError("ring allreduce runs without parameter servers")
        if kind is StrategyKind.BASELINE_PS and self.ps_count < 1:
            raise CostModelError("baseline needs at least one parameter server")
        if kind is StrategyKind.RALP:
            split = self.strategy.split_index
            if not 1 <= split < self.model.num_layers:
                raise CostModelError(
                    f"split_index {split} out of range for {self.model.num_layers}-layer model"
                )


@dataclass(frozen=True)
class StrategyVolumes:
    total_bytes_per_step: int
    per_worker_bytes: float
    parameter_sync_bytes: int
    activation_bytes: int

    def __post_init__(self) -> None:
        if min(self.total_bytes_per_step, self.parameter_sync_bytes, self.activation_bytes) < 0:
            raise CostModelError("negative volume")
        if self.parameter_sync_bytes + self.activation_bytes != self.total_bytes_per_step:
            raise CostModelError("breakdown does not sum to total")

    @property
    def breakdown(self) -> dict[str, int]:
        return {
            "parameter_sync_bytes": self.parameter_sync_bytes,
            "activation_bytes": self.activation_bytes,
        }


def volume_baseline(model: ModelGraph, worker_count: int) -> StrategyVolumes:
    """Each worker pushes gradients of size S and pulls parameters of size S."""
    if worker_count < 1:
        raise CostModelError("worker_count must be >= 1")
    total = 2 * model.total_param_bytes * worker_count
    return StrategyVolumes(
        total_bytes_per_step=total,
        per_worker_bytes=2.0 * model.total_param_bytes,
        parameter_sync_bytes=total,
        activation_bytes=0,
    )


def volume_ring(model: ModelGraph, worker_count: int) -> StrategyVolumes:
    """Ring allreduce exchanges 2*S*(W-1) bytes per step across W peers."""
    if worker_count < 1:
        raise CostModelError("worker_count must be >= 1")
    total = 2 * model.total_param_bytes * (worker_count - 1)
    return StrategyVolumes(
        total_bytes_per_step=total,
        per_worker_bytes=total / worker_count,
        parameter_sync_bytes=total,
        activation_bytes=0,
    )


def volume_ralp(model: ModelGraph, split_index: int, worker_count: int) -> StrategyVolumes:
    """Split placement: activations cross the cut both ways, front-segment
    parameters sync both ways; back-segment parameters never touch the
    network."""
    if worker_count < 1:
        raise CostModelError("worker_count must be >= 1")
    if not 1 <= split_index < model.num_layers:
        raise CostModelError(
            f"split_index {split_index} out of range for {model.num_layers}-layer model"
        )
    act_per_worker = 2 * model.output_bytes(split_index)
    param_per_worker = 2 * model.cumulative_param_bytes(split_index)
    return StrategyVolumes(
        total_bytes_per_step=worker_count * (act_per_worker + param_per_worker),
        per_worker_bytes=float(act_per_worker + param_per_worker),
        parameter_sync_bytes=worker_count * param_per_worker,
        activation_bytes=worker_count * act_per_worker,
    )


def volumes_for(job: JobSpec) -> StrategyVolumes:
    kind = job.strategy.kind
    if kind is StrategyKind.BASELINE_PS:
        return volume_baseline(job.model, job.worker_count)
    if kind is StrategyKind.RING_ALLREDUCE:
        return volume_ring(job.model, job.worker_count)
    return volume_ralp(job.model, job.strategy.split_index, job.worker_count)


def compute_load(
    model: ModelGraph, split_index: Optional[int] = None, worker_count: int = 1
) -> tuple[int, int]:
    """(worker_flops_per_step, ps_flops_per_step) for one training step.

    Forward plus backward, with backward costed at twice the forward pass.
    With a split, the PS worker runs the back segment once per arriving
    worker batch; without one, all layer compute stays on the workers and
    the PS does aggregation only (not counted here).
    """
    if worker_count < 1:
        raise CostModelError("worker_count must be >= 1")
    n = model.num_layers
    if split_index is None:
        split_index = n
    if not 1 <= split_index <= n:
        raise CostModelError(f"split_index {split_index} out of range for {n}-layer model")
    front_fwd = model.forward_flops_per_sample(1, split_index)
    back_fwd = model.forward_flops_per_sample(split_index + 1, n) if split_index < n else 0
    worker_flops = 3 * front_fwd * model.batch_size
    ps_flops = 3 * back_fwd * model.batch_size * worker_count
    return worker_flops, ps_flops


@dataclass(frozen=True)
class VolumeRow:
    model: str
    strategy: str
    worker_count: int
    volumes: StrategyVolumes


def compare_strategies(
    model: ModelGraph,
    worker_counts: Sequence[int],
    kinds: Iterable[StrategyKind] = tuple(StrategyKind),
    split_index: Optional[int] = None,
) -> list[VolumeRow]:
    """Tabulate volumes for each (strategy, W).

    For the split strategy, the split defaults to the profiler's choice;
    when the model is not partitionable the split plan degenerates to the
    baseline (that is what the runtime would fall back to).
    """
    if not worker_counts:
        raise CostModelError("worker_counts must be nonempty")
    kinds = list(kinds)
    if StrategyKind.RALP in kinds and split_index is None:
        report = profile(model, ProfilerConfig())
        split_index = report.split_index
    rows = []
    for kind in kinds:
        for w in worker_counts:
            if kind is StrategyKind.BASELINE_PS:
                vol = volume_baseline(model, w)
            elif kind is StrategyKind.RING_ALLREDUCE:
                vol = volume_ring(model, w)
            elif split_index is not None:
                vol = volume_ralp(model, split_index, w)
            else:
                vol = volume_baseline(model, w)
            rows.append(VolumeRow(model.name, kind.value, w, vol))
    return rows


def gpu_assignments(total_gpus: int) -> dict[str, dict[str, int]]:
    """Worker/PS device accounting per plan for a given device budget.

    baseline splits the budget evenly between workers and parameter
    servers; ring uses every device as a worker; the split plan comes in a
    resource-saving variant (half the devices plus one PS) and a
    throughput variant (all devices, one of them the PS).
    """
    if total_gpus < 2:
        raise CostModelError("need at least 2 devices")
    half = total_gpus // 2
    return {
        "baseline": {"workers": half, "ps": total_gpus - half, "gpus": total_gpus},
        "ring": {"workers": total_gpus, "ps": 0, "gpus": total_gpus},
        "ralp-h": {"workers": half, "ps": 1, "gpus": half + 1},
        "ralp-n": {"workers": total_gpus - 1, "ps": 1, "gpus": total_gpus},
    }


def rows_to_csv(rows: Sequence[VolumeRow]) -> str:
    lines = [CSV_HEADER]
    for row in rows:
        v = row.volumes
        lines.append(
            f"{row.model},{row.strategy},{row.worker_count},"
            f"{v.total_bytes_per_step},{v.parameter_sync_bytes},{v.activation_bytes}"
        )
    return "\n".join(lines) + "\n"


def rows_to_json(rows: Sequence[VolumeRow]) -> str:
    payload = [
        {
            "model": row.model,
            "strategy": row.strategy,
            "W": row.worker_count,
            "total_bytes": row.volumes.total_bytes_per_step,
            "param_bytes": row.volumes.parameter_sync_bytes,
            "activation_bytes": row.volumes.activation_bytes,
        }
        for row in rows
    ]
    return json.dumps(payload, indent=2)
