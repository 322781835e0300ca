"""Activation-grid shape inference.

Height runs along the strip axis, width along the plane axis. Convolution
dimensions round down; pooling rounds up and clips a final window that would
start past the (symmetrically padded) input extent, matching the framework
conventions the source networks were built for.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConvAfterFlatten, KernelTooLarge, ShapeMismatch
from .graph import NetworkGraph, topological_order


@dataclass(frozen=True)
class GridShape:
    height: int
    width: int
    features: int

    @property
    def area(self) -> int:
        return self.height * self.width

    @property
    def size(self) -> int:
        return self.height * self.width * self.features


@dataclass(frozen=True)
class ShapeTable:
    """Per-layer output grid, indexed by layer index; flattened is True from
    the first InnerProduct onward."""

    shapes: tuple[GridShape, ...]
    flattened: tuple[bool, ...]

    def __getitem__(self, i: int) -> GridShape:
        return self.shapes[i]


def conv_output_dim(in_dim: int, kernel: int, stride: int, pad: int = 0) -> int:
    """floor((in + 2*pad - kernel)/stride) + 1."""
    if in_dim + 2 * pad < kernel:
        raise KernelTooLarge(f"kernel {kernel} exceeds padded input {in_dim} + 2*{pad}")
    return (in_dim + 2 * pad - kernel) // stride + 1

def pool_output_dim(in_dim: int, kernel: int, stride: int, pad: int = 0) -> int:
    """ceil((in + 2*pad - kernel)/stride) + 1, dropping windows that would
    start past in + pad - 1 (they would cover right padding only). For the
    usual pad < kernel case at most one window is dropped."""
    if in_dim + 2 * pad < kernel:
        raise KernelTooLarge(f"kernel {kernel} exceeds padded input {in_dim} + 2*{pad}")
    span = in_dim + 2 * pad - kernel
    out = -(-span // stride) + 1
    max_windows = (in_dim + pad - 1) // stride + 1
    return min(out, max_windows)


def infer_shapes(g: NetworkGraph) -> ShapeTable:
    """Output GridShape for every layer, assigned in topological order."""
    n = len(g.layers)
    pred = g.predecessors()
    shapes: list[GridShape | None] = [None] * n
    flat: list[bool] = [False] * n
    for i in topological_order(g):
        layer = g.layers[i]
        ins = [shapes[p] for p in pred[i]]
        in_flat = any(flat[p] for p in pred[i])
        if layer.kind == "Input":
            h, w, c = layer.input_shape
            shapes[i] = GridShape(h, w, c)
        elif layer.kind in ("Convolution", "Pooling"):
            if in_flat:
                raise ConvAfterFlatten(f"layer '{layer.name}': {layer.kind} after an InnerProduct")
            (src,) = ins
            dim = conv_output_dim if layer.kind == "Convolution" else pool_output_dim
            try:
                h = dim(src.height, layer.kernel_h, layer.stride_h, layer.pad_h)
                w = dim(src.width, layer.kernel_w, layer.stride_w, layer.pad_w)
            except KernelTooLarge as e:
                raise KernelTooLarge(f"layer '{layer.name}': {e}") from e
            feats = layer.num_output if layer.kind == "Convolution" else src.features
            shapes[i] = GridShape(h, w, feats)
        elif layer.kind == "Concat":
            hw = {(s.height, s.width) for s in ins}
            if len(hw) != 1:
                dims = [f"{g.layers[p].name}:{shapes[p].height}x{shapes[p].width}" for p in pred[i]]
                raise ShapeMismatch(f"layer '{layer.name}': concat inputs disagree ({', '.join(dims)})")
            h, w = next(iter(hw))
            shapes[i] = GridShape(h, w, sum(s.features for s in ins))
            flat[i] = in_flat
        elif layer.kind == "InnerProduct":
            shapes[i] = GridShape(1, 1, layer.num_output)
            flat[i] = True
        else:  # ReLU, Sigmoid, Output pass through
            (src,) = ins
            shapes[i] = src
            flat[i] = in_flat
    return ShapeTable(tuple(shapes), tuple(flat))
