"""Static model profiler: skewness gate and network-cost-minimizing split.

The profiler looks only at the model itself (parameter sizes, activation
sizes, layer kinds), never at runtime state, so its output is a pure
function of the model descriptor and the configuration.
"""

from __future__ import annotations

import enum
import json
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .layers import LayerKind, ModelGraph


class ProfilerError(ValueError):
    """Raised on inputs the skewness statistic is undefined for."""


class SkewnessMode(str, enum.Enum):
    # Third standardized moment of the layer *index*, weighted by each
    # layer's share of the parameter mass.  Tail-heavy models come out
    # negative, matching the convention that negative = parameters
    # concentrated in the latter layers.
    INDEX_WEIGHTED = "index_weighted"
    # Third standardized moment of the parameter sizes themselves
    # (population denominators).  Kept for fidelity with the printed
    # formula; a few large values make this *positive* for tail-heavy
    # models, so it is not the default.
    LITERAL_VALUES = "literal_values"


@dataclass(frozen=True)
class ProfilerConfig:
    threshold: float = -0.5
    mode: SkewnessMode = SkewnessMode.INDEX_WEIGHTED

    def __post_init__(self) -> None:
        if self.threshold >= 0:
            # A non-negative threshold admits right-skewed models, which the
            # partitioning rationale does not cover.  Warn, never alter.
            warnings.warn(
                f"threshold {self.threshold} is non-negative; the eligibility gate "
                "expects a negative cutoff",
                stacklevel=2,
            )


def compute_skewness(
    params: Sequence[float], mode: SkewnessMode = SkewnessMode.INDEX_WEIGHTED
) -> float:
    """Skewness factor of the per-layer parameter distribution.

    Returns 0.0 when the second moment vanishes (all mass at one point or
    a uniform distribution in index_weighted mode has m3 == 0 anyway).
    """
    p = np.asarray(params, dtype=np.float64)
    if p.ndim != 1 or p.size < 2:
        raise ProfilerError("skewness needs at least 2 layers")
    if np.any(p < 0):
        raise ProfilerError("negative parameter sizes")
    total = float(p.sum())
    if total == 0.0:
        raise ProfilerError("all layers carry zero parameters")

    mode = SkewnessMode(mode)
    if mode is SkewnessMode.LITERAL_VALUES:
        dev = p - p.mean()
        m2 = float(np.mean(dev**2))
        m3 = float(np.mean(dev**3))
    else:
        weights = p / total
        idx = np.arange(1, p.size + 1, dtype=np.float64)
        mu = float(np.dot(weights, idx))
        dev = idx - mu
        m2 = float(np.dot(weights, dev**2))
        m3 = float(np.dot(weights, dev**3))
    if m2 == 0.0:
        return 0.0
    return m3 / m2**1.5


def gate_eligibility(skewness: float, config: ProfilerConfig) -> bool:
    """True iff the model is skewed enough to partition (strict comparison)."""
    if not np.isfinite(skewness):
        raise ProfilerError(f"non-finite skewness {skewness!r}")
    return skewness < config.threshold


@dataclass(frozen=True)
class SplitChoice:
    index: int
    cost_bytes: int


def find_split(
    param_bytes: Sequence[int],
    output_bytes: Sequence[int],
    kinds: Sequence[LayerKind],
) -> Optional[SplitChoice]:
    """Choose the split layer minimizing per-step network cost.

    The cost of splitting after layer i is O_i + sum(P_1..P_i): the cut
    activation plus every front-segment parameter that still crosses the
    network at aggregation.  Boundaries between two compute-demand layers
    (convolutions or fused blocks) are not candidates.  Ties go to the
    smallest index.  Splitting after the last layer offloads nothing, so
    when that degenerate point wins (including the all-convolution case
    where it is the only candidate) the result is None and the caller
    falls back to the plain parameter-server plan.
    """
    n = len(param_bytes)
    if n == 0 or len(output_bytes) != n or len(kinds) != n:
        raise ProfilerError("per-layer lists must be nonempty and equal length")

    compute = [k in (LayerKind.CONVOLUTION, LayerKind.BLOCK) for k in kinds]
    best_index = 0
    best_cost = 0
    cum = 0
    for i in range(1, n + 1):
        cum += param_bytes[i - 1]
        if i < n and compute[i - 1] and compute[i]:
            continue
        cost = output_bytes[i - 1] + cum
        if best_index == 0 or cost < best_cost:
            best_index, best_cost = i, cost
    if best_index == n and n > 1:
        return None
    return SplitChoice(best_index, best_cost)


@dataclass(frozen=True)
class ProfileReport:
    """Per-layer sizes, skewness verdict, and the chosen split (if any).

    ``eligible`` reflects the final partitioning decision: the skewness gate
    passed *and* a feasible split exists.  ``split_index``/``split_cost_bytes``
    are present exactly when ``eligible`` is true.
    """

    model_name: str
    layer_names: tuple[str, ...]
    layer_kinds: tuple[str, ...]
    param_bytes: tuple[int, ...]
    output_bytes: tuple[int, ...]
    cumulative_param_bytes: tuple[int, ...]
    skewness: float
    threshold: float
    mode: str
    eligible: bool
    split_index: Optional[int]
    split_cost_bytes: Optional[int]
    recommendation: str

    def to_dict(self) -> dict:
        return {
            "model": self.model_name,
            "layers": [
                {
                    "index": i + 1,
                    "name": self.layer_names[i],
                    "kind": self.layer_kinds[i],
                    "param_bytes": self.param_bytes[i],
                    "output_bytes": self.output_bytes[i],
                    "cumulative_param_bytes": self.cumulative_param_bytes[i],
                }
                for i in range(len(self.layer_names))
            ],
            "skewness": self.skewness,
            "threshold": self.threshold,
            "mode": self.mode,
            "eligible": self.eligible,
            "split_index": self.split_index,
            "split_cost_bytes": self.split_cost_bytes,
            "recommendation": self.recommendation,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def profile(model: ModelGraph, config: ProfilerConfig = ProfilerConfig()) -> ProfileReport:
    """Run the full static profile: skewness, gate, split choice."""
    p_bytes = tuple(model.param_bytes(i) for i in range(1, model.num_layers + 1))
    o_bytes = tuple(model.output_bytes(i) for i in range(1, model.num_layers + 1))
    cum = []
    running = 0
    for p in p_bytes:
        running += p
        cum.append(running)

    kinds = tuple(layer.kind for layer in model.layers)
    degenerate = model.num_layers < 2 or model.total_param_count == 0
    if degenerate:
        skew = 0.0
        passed_gate = False
    else:
        skew = compute_skewness(p_bytes, config.mode)
        passed_gate = gate_eligibility(skew, config)

    split = find_split(p_bytes, o_bytes, kinds) if passed_gate else None
    eligible = passed_gate and split is not None
    if eligible:
        recommendation = f"partition after layer {split.index}; back segment runs in the PS machine"
    else:
        recommendation = "no partitioning; train on the standard parameter-server plan"

    return ProfileReport(
        model_name=model.name,
        layer_names=tuple(l.name for l in model.layers),
        layer_kinds=tuple(l.kind.value for l in model.layers),
        param_bytes=p_bytes,
        output_bytes=o_bytes,
        cumulative_param_bytes=tuple(cum),
        skewness=skew,
        threshold=config.threshold,
        mode=SkewnessMode(config.mode).value,
        eligible=eligible,
        split_index=split.index if eligible else None,
        split_cost_bytes=split.cost_bytes if eligible else None,
        recommendation=recommendation,
    )
