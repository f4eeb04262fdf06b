"""Layer-level representation of CNN training workloads.

A model is an ordered chain of layers.  Everything downstream (the split
planner, the communication cost model, the simulator) consumes only three
numbers per layer: parameter count, per-sample output size, and forward
multiply-add flops.  This module defines the layer chain types and the
closed-form counting rules that populate those numbers.
"""

from __future__ import annotations

import enum
import types
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional


class ModelError(ValueError):
    """Raised when a layer chain violates a structural constraint."""


class LayerKind(enum.Enum):
    CONVOLUTION = "conv"
    POOLING = "pool"
    FULLY_CONNECTED = "fc"
    NORMALIZATION = "norm"
    ACTIVATION = "act"
    FLATTEN = "flatten"
    CONCAT = "concat"
    RESIDUAL_ADD = "add"
    LOSS = "loss"
    # Fused subgraph (e.g. an inception branch conv or a bottleneck conv with
    # batch norm folded in) whose totals are given explicitly.
    BLOCK = "block"


# Kinds that may carry parameters.
PARAMETERIZED_KINDS = frozenset(
    {LayerKind.CONVOLUTION, LayerKind.FULLY_CONNECTED, LayerKind.BLOCK}
)

# Kinds the split planner must not cut between (compute-heavy layers).
COMPUTE_DEMAND_KINDS = frozenset({LayerKind.CONVOLUTION, LayerKind.BLOCK})


@dataclass(frozen=True)
class TensorShape:
    """Activation shape: spatial (h, w, c), or a flat vector when h == w == 0."""

    h: int
    w: int
    c: int

    @classmethod
    def flat(cls, n: int) -> "TensorShape":
        return cls(0, 0, n)

    @property
    def is_flat(self) -> bool:
        return self.h == 0 and self.w == 0

    @property
    def elems(self) -> int:
        if self.is_flat:
            return self.c
        return self.h * self.w * self.c

    def __str__(self) -> str:
        if self.is_flat:
            return str(self.c)
        return f"{self.h}x{self.w}x{self.c}"


def conv_output_hw(h: int, w: int, kernel: int, stride: int, pad: int) -> tuple[int, int]:
    """Spatial output dims for a conv/pool window with explicit padding."""
    if kernel <= 0 or stride <= 0 or pad < 0:
        raise ModelError(f"nonpositive window geometry: kernel={kernel} stride={stride} pad={pad}")
    h_out = (h + 2 * pad - kernel) // stride + 1
    w_out = (w + 2 * pad - kernel) // stride + 1
    if h_out <= 0 or w_out <= 0:
        raise ModelError(
            f"window {kernel}x{kernel} stride {stride} does not fit padded input {h}x{w} (pad {pad})"
        )
    return h_out, w_out


def infer_conv(
    in_shape: TensorShape, kernel: int, c_out: int, stride: int = 1, pad: int = 0
) -> tuple[int, TensorShape, int]:
    """Parameter count, output shape, and forward flops of a convolution.

    params = K*K*C_in*C_out + C_out (bias included);
    flops = 2*K*K*C_in*C_out*H_out*W_out (multiply-add counted as 2).
    """
    if in_shape.is_flat:
        raise ModelError("convolution requires a spatial input shape")
    if c_out <= 0:
        raise ModelError(f"nonpositive output channels: {c_out}")
    h_out, w_out = conv_output_hw(in_shape.h, in_shape.w, kernel, stride, pad)
    c_in = in_shape.c
    params = kernel * kernel * c_in * c_out + c_out
    flops = 2 * kernel * kernel * c_in * c_out * h_out * w_out
    return params, TensorShape(h_out, w_out, c_out), flops


def infer_pool(
    in_shape: TensorShape, window: int, stride: Optional[int] = None, pad: int = 0
) -> tuple[int, TensorShape, int]:
    if in_shape.is_flat:
        raise ModelError("pooling requires a spatial input shape")
    if stride is None:
        stride = window
    h_out, w_out = conv_output_hw(in_shape.h, in_shape.w, window, stride, pad)
    return 0, TensorShape(h_out, w_out, in_shape.c), 0


def infer_fc(in_elems: int, out_width: int) -> tuple[int, TensorShape, int]:
    """params = I*U + U (bias included); flops = 2*I*U."""
    if in_elems <= 0 or out_width <= 0:
        raise ModelError(f"nonpositive fully-connected dims: in={in_elems} out={out_width}")
    params = in_elems * out_width + out_width
    flops = 2 * in_elems * out_width
    return params, TensorShape.flat(out_width), flops


def infer_layer(
    kind: LayerKind, hyperparams: Mapping[str, int], input_shape: TensorShape
) -> tuple[int, int, int, TensorShape]:
    """Derive (param_count, output_elems_per_sample, flops, output_shape).

    Pooling, normalization, activation, flatten, concat and residual-add
    carry zero parameters; their compute is treated as negligible next to
    convolutions and fully-connected layers.
    """
    if kind is LayerKind.CONVOLUTION:
        params, shape, flops = infer_conv(
            input_shape,
            kernel=hyperparams["k"],
            c_out=hyperparams["cout"],
            stride=hyperparams.get("stride", 1),
            pad=hyperparams.get("pad", 0),
        )
        return params, shape.elems, flops, shape
    if kind is LayerKind.POOLING:
        _, shape, _ = infer_pool(
            input_shape,
            window=hyperparams["window"],
            stride=hyperparams.get("stride"),
            pad=hyperparams.get("pad", 0),
        )
        return 0, shape.elems, 0, shape
    if kind is LayerKind.FULLY_CONNECTED:
        in_elems = hyperparams.get("in", input_shape.elems)
        params, shape, flops = infer_fc(in_elems, hyperparams["out"])
        return params, shape.elems, flops, shape
    if kind is LayerKind.FLATTEN:
        shape = TensorShape.flat(input_shape.elems)
        return 0, shape.elems, 0, shape
    if kind in (LayerKind.NORMALIZATION, LayerKind.ACTIVATION, LayerKind.CONCAT, LayerKind.RESIDUAL_ADD):
        return 0, input_shape.elems, 0, input_shape
    if kind is LayerKind.LOSS:
        # A loss layer terminates the chain; nothing flows forward.
        return 0, 0, 0, TensorShape.flat(0)
    raise ModelError(f"layer kind {kind.value} has no derivation rule; give explicit totals")


@dataclass(frozen=True)
class LayerSpec:
    """One forward-pass layer.

    ``index`` is the 1-based position in forward order.  ``param_count`` and
    ``output_elems_per_sample`` are element counts; byte sizes come from the
    owning ModelGraph's element width and batch size.
    """

    index: int
    name: str
    kind: LayerKind
    param_count: int
    output_elems_per_sample: int
    compute_flops_per_sample: int
    hyperparams: Mapping[str, int] = field(default_factory=dict)
    output_shape: Optional[TensorShape] = None

    def __post_init__(self) -> None:
        # freeze the hyperparameter mapping so shared instances stay inert
        object.__setattr__(self, "hyperparams", types.MappingProxyType(dict(self.hyperparams)))
        if self.index < 1:
            raise ModelError(f"layer {self.name}: index must be 1-based, got {self.index}")
        if self.param_count < 0 or self.output_elems_per_sample < 0 or self.compute_flops_per_sample < 0:
            raise ModelError(f"layer {self.name}: negative derived quantity")
        if self.param_count > 0 and self.kind not in PARAMETERIZED_KINDS:
            raise ModelError(
                f"layer {self.name}: kind {self.kind.value} cannot carry parameters"
            )
        if self.output_elems_per_sample == 0 and self.kind is not LayerKind.LOSS:
            raise ModelError(f"layer {self.name}: empty output on a non-loss layer")

    @property
    def is_compute_demand(self) -> bool:
        return self.kind in COMPUTE_DEMAND_KINDS


@dataclass(frozen=True)
class ModelGraph:
    """Ordered layer chain plus the training configuration it is profiled at."""

    name: str
    layers: tuple[LayerSpec, ...]
    batch_size: int
    bytes_per_element: int = 4

    def __post_init__(self) -> None:
        if not self.layers:
            raise ModelError(f"model {self.name}: empty layer chain")
        if self.batch_size < 1:
            raise ModelError(f"model {self.name}: batch_size must be >= 1")
        if self.bytes_per_element < 1:
            raise ModelError(f"model {self.name}: bytes_per_element must be >= 1")
        for pos, layer in enumerate(self.layers, start=1):
            if layer.index != pos:
                raise ModelError(
                    f"model {self.name}: layer indices must be contiguous from 1 "
                    f"(layer {layer.name} has index {layer.index}, expected {pos})"
                )

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    @property
    def total_param_count(self) -> int:
        return sum(layer.param_count for layer in self.layers)

    @property
    def total_param_bytes(self) -> int:
        """Model size in bytes (houses the aggregate synchronized each step)."""
        return self.bytes_per_element * self.total_param_count

    def layer(self, index: int) -> LayerSpec:
        if not 1 <= index <= self.num_layers:
            raise ModelError(f"model {self.name}: layer index {index} out of range")
        return self.layers[index - 1]

    def param_bytes(self, index: int) -> int:
        return self.layer(index).param_count * self.bytes_per_element

    def output_bytes(self, index: int) -> int:
        """Per-step activation size of layer ``index`` at the configured batch."""
        return self.layer(index).output_elems_per_sample * self.batch_size * self.bytes_per_element

    def cumulative_param_bytes(self, index: int) -> int:
        """Parameter bytes of layers 1..index inclusive."""
        if not 1 <= index <= self.num_layers:
            raise ModelError(f"model {self.name}: layer index {index} out of range")
        return self.bytes_per_element * sum(l.param_count for l in self.layers[:index])

    def forward_flops_per_sample(self, start: int = 1, stop: Optional[int] = None) -> int:
        """Forward flops of layers start..stop inclusive (whole model by default)."""
        if stop is None:
            stop = self.num_layers
        if not 1 <= start <= stop <= self.num_layers:
            raise ModelError(f"model {self.name}: bad layer range [{start}, {stop}]")
        return sum(l.compute_flops_per_sample for l in self.layers[start - 1 : stop])

    def with_batch_size(self, batch_size: int) -> "ModelGraph":
        return replace(self, batch_size=batch_size)
