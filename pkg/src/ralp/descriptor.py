"""Line-oriented model descriptor format.

One layer per line, ``<name> <kind> key=value ...``, preceded by a header
``model <name> batch=<n> elem_bytes=<n> [input=HxWxC|N]``.  ``#`` starts a
comment.  Layers are either *derived* (hyperparameters given, counts
inferred and shape-checked against the previous layer) or *explicit*
(``params= out= flops=`` given directly, used for fused blocks and for
linearized branchy architectures where chain inference does not apply).
"""

from __future__ import annotations

import re
from typing import Optional

from .layers import (
    LayerKind,
    LayerSpec,
    ModelError,
    ModelGraph,
    TensorShape,
    infer_layer,
)

_KIND_TOKENS = {kind.value: kind for kind in LayerKind}

_INT_KEYS = {"k", "cin", "cout", "stride", "pad", "window", "in", "out", "params", "flops"}


class DescriptorError(ValueError):
    """Descriptor syntax or consistency error, with source position."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class ShapeMismatchError(DescriptorError):
    """Adjacent layers disagree on the tensor flowing between them."""


def _parse_shape(text: str, line: int, col: int) -> TensorShape:
    parts = text.lower().split("x")
    try:
        dims = [int(p) for p in parts]
    except ValueError:
        raise DescriptorError(f"bad shape {text!r} (expected HxWxC or N)", line, col) from None
    if len(dims) == 1:
        return TensorShape.flat(dims[0])
    if len(dims) == 3:
        return TensorShape(*dims)
    raise DescriptorError(f"bad shape {text!r} (expected HxWxC or N)", line, col)


def _parse_kv(tokens: list[str], line: int, offsets: list[int]) -> dict[str, object]:
    pairs: dict[str, object] = {}
    for token, col in zip(tokens, offsets):
        if "=" not in token:
            raise DescriptorError(f"expected key=value, got {token!r}", line, col)
        key, _, value = token.partition("=")
        if not key or not value:
            raise DescriptorError(f"expected key=value, got {token!r}", line, col)
        if key in pairs:
            raise DescriptorError(f"duplicate key {key!r}", line, col)
        if key in _INT_KEYS or key == "batch" or key == "elem_bytes":
            try:
                pairs[key] = int(value)
            except ValueError:
                raise DescriptorError(f"key {key!r} needs an integer, got {value!r}", line, col) from None
        else:
            pairs[key] = value
    return pairs


def _tokenize(raw: str) -> tuple[list[str], list[int]]:
    tokens, offsets = [], []
    for match in re.finditer(r"\S+", raw):
        tokens.append(match.group(0))
        offsets.append(match.start() + 1)
    return tokens, offsets


def parse_model(text: str) -> ModelGraph:
    """Parse a descriptor document into a validated ModelGraph."""
    header: Optional[dict[str, object]] = None
    header_line = 0
    layers: list[LayerSpec] = []
    shape: Optional[TensorShape] = None
    prev_name = "<input>"

    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].rstrip()
        if not stripped.strip():
            continue
        tokens, offsets = _tokenize(stripped)

        if header is None:
            if tokens[0] != "model":
                raise DescriptorError(f"expected 'model' header, got {tokens[0]!r}", lineno, offsets[0])
            if len(tokens) < 2 or "=" in tokens[1]:
                raise DescriptorError("model header needs a name", lineno, offsets[0])
            header = {"name": tokens[1]}
            header.update(_parse_kv(tokens[2:], lineno, offsets[2:]))
            if "batch" not in header:
                raise DescriptorError("model header needs batch=<n>", lineno, offsets[0])
            if "input" in header:
                shape = _parse_shape(str(header["input"]), lineno, offsets[0])
            header_line = lineno
            continue

        if len(tokens) < 2:
            raise DescriptorError("layer line needs <name> <kind> [key=value ...]", lineno, offsets[0])
        name, kind_token = tokens[0], tokens[1]
        if "=" in name or "=" in kind_token:
            raise DescriptorError("layer line needs <name> <kind> before key=value pairs", lineno, offsets[0])
        kind = _KIND_TOKENS.get(kind_token)
        if kind is None:
            raise DescriptorError(
                f"unknown layer kind {kind_token!r} (expected one of {', '.join(sorted(_KIND_TOKENS))})",
                lineno,
                offsets[1],
            )
        kv = _parse_kv(tokens[2:], lineno, offsets[2:])
        out_shape_override = None
        if "shape" in kv:
            out_shape_override = _parse_shape(str(kv.pop("shape")), lineno, offsets[0])

        explicit = "params" in kv or ("out" in kv and kind is not LayerKind.FULLY_CONNECTED)
        try:
            if explicit:
                params = int(kv.pop("params", 0))
                if "out" not in kv:
                    raise DescriptorError(f"explicit layer {name!r} needs out=<elems>", lineno, offsets[0])
                # Fully-connected lines keep out= as their width hyperparameter.
                out_elems = int(kv["out"] if kind is LayerKind.FULLY_CONNECTED else kv.pop("out"))
                flops = int(kv.pop("flops", 0))
                new_shape = out_shape_override or TensorShape.flat(out_elems)
            else:
                if kind is LayerKind.BLOCK:
                    raise DescriptorError(
                        f"block layer {name!r} needs explicit params= out= flops=", lineno, offsets[0]
                    )
                if shape is None:
                    raise DescriptorError(
                        f"layer {name!r} needs an input shape (set input= in the header "
                        "or give explicit out=)",
                        lineno,
                        offsets[0],
                    )
                if kind is LayerKind.CONVOLUTION and "cin" in kv:
                    declared = int(kv["cin"])
                    if shape.is_flat or declared != shape.c:
                        raise ShapeMismatchError(
                            f"layer {name!r} declares cin={declared} but {prev_name!r} "
                            f"produces {shape}",
                            lineno,
                            offsets[0],
                        )
                if kind is LayerKind.FULLY_CONNECTED and "in" in kv:
                    declared = int(kv["in"])
                    if declared != shape.elems:
                        raise ShapeMismatchError(
                            f"layer {name!r} declares in={declared} but {prev_name!r} "
                            f"produces {shape.elems} elements",
                            lineno,
                            offsets[0],
                        )
                params, out_elems, flops, new_shape = infer_layer(kind, kv, shape)
                if out_shape_override is not None:
                    new_shape = out_shape_override
        except ModelError as exc:
            raise DescriptorError(str(exc), lineno, offsets[0]) from None

        try:
            layers.append(
                LayerSpec(
                    index=len(layers) + 1,
                    name=name,
                    kind=kind,
                    param_count=params,
                    output_elems_per_sample=out_elems,
                    compute_flops_per_sample=flops,
                    hyperparams=dict(kv),
                    output_shape=new_shape,
                )
            )
        except ModelError as exc:
            raise DescriptorError(str(exc), lineno, offsets[0]) from None
        shape = new_shape
        prev_name = name

    if header is None:
        raise DescriptorError("empty descriptor (no 'model' header)", max(1, len(text.splitlines()) or 1))
    try:
        return ModelGraph(
            name=str(header["name"]),
            layers=tuple(layers),
            batch_size=int(header["batch"]),  # type: ignore[arg-type]
            bytes_per_element=int(header.get("elem_bytes", 4)),  # type: ignore[arg-type]
        )
    except ModelError as exc:
        raise DescriptorError(str(exc), header_line) from None


def serialize_model(graph: ModelGraph) -> str:
    """Render a ModelGraph back to descriptor text.

    Every layer is written with its explicit totals (plus any recorded
    hyperparameters), so parse(serialize(g)) reproduces g exactly.
    """
    lines = [f"model {graph.name} batch={graph.batch_size} elem_bytes={graph.bytes_per_element}"]
    for layer in graph.layers:
        parts = [layer.name, layer.kind.value]
        for key in sorted(layer.hyperparams):
            parts.append(f"{key}={layer.hyperparams[key]}")
        parts.append(f"params={layer.param_count}")
        if "out" not in layer.hyperparams:
            parts.append(f"out={layer.output_elems_per_sample}")
        parts.append(f"flops={layer.compute_flops_per_sample}")
        if layer.output_shape is not None and not layer.output_shape.is_flat:
            parts.append(f"shape={layer.output_shape}")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"
