"""Shared builders for test graphs."""

from __future__ import annotations

import numpy as np

from archattr.graph import LayerSpec, NetworkGraph, build_graph


def inp(name: str, h: int = 28, w: int = 28, c: int = 1) -> LayerSpec:
    return LayerSpec(name=name, kind="Input", input_shape=(h, w, c))


def conv(name: str, kh: int, kw: int, sh: int = 1, sw: int = 1,
         ph: int = 0, pw: int = 0, f: int = 8) -> LayerSpec:
    return LayerSpec(name=name, kind="Convolution", kernel_h=kh, kernel_w=kw,
                     stride_h=sh, stride_w=sw, pad_h=ph, pad_w=pw, num_output=f)


def pool(name: str, kh: int = 2, kw: int = 2, sh: int = 2, sw: int = 2,
         ph: int = 0, pw: int = 0, method: str = "max") -> LayerSpec:
    return LayerSpec(name=name, kind="Pooling", kernel_h=kh, kernel_w=kw,
                     stride_h=sh, stride_w=sw, pad_h=ph, pad_w=pw, pool_method=method)


def ip(name: str, n: int) -> LayerSpec:
    return LayerSpec(name=name, kind="InnerProduct", num_output=n)


def relu(name: str) -> LayerSpec:
    return LayerSpec(name=name, kind="ReLU")


def sigmoid(name: str) -> LayerSpec:
    return LayerSpec(name=name, kind="Sigmoid")


def concat(name: str) -> LayerSpec:
    return LayerSpec(name=name, kind="Concat")


def outp(name: str = "out") -> LayerSpec:
    return LayerSpec(name=name, kind="Output")


def chain(*layers: LayerSpec) -> NetworkGraph:
    bottoms = [[] if i == 0 else [i - 1] for i in range(len(layers))]
    return build_graph(list(layers), bottoms)


def graph(layers: list[LayerSpec], bottoms: list[list[int]]) -> NetworkGraph:
    return build_graph(layers, bottoms)


def random_valid_graph(rng: np.random.Generator, max_layers: int = 12) -> NetworkGraph:
    """Random NetworkGraph satisfying every structural invariant and safe to
    shape-infer: all kernels/strides are 1x1 so branches stay merge-compatible,
    and flattened tips never feed window layers."""
    target = int(rng.integers(5, max_layers + 1))
    n_inputs = int(rng.integers(1, min(3, target - 2) + 1))
    h, w, c = int(rng.integers(4, 17)), int(rng.integers(4, 17)), int(rng.integers(1, 4))
    layers: list[LayerSpec] = []
    bottoms: list[list[int]] = []
    flattened: list[bool] = []

    def add(layer: LayerSpec, preds: list[int], flat: bool) -> int:
        layers.append(layer)
        bottoms.append(preds)
        flattened.append(flat)
        return len(layers) - 1

    tips = [add(inp(f"in{i}", h, w, c), [], False) for i in range(n_inputs)]
    k = 0
    while len(layers) + len(tips) < target:
        k += 1
        roll = rng.random()
        grid_tips = [t for t in tips if not flattened[t]]
        flat_tips = [t for t in tips if flattened[t]]
        if roll < 0.2 and (len(grid_tips) >= 2 or len(flat_tips) >= 2):
            group = grid_tips if len(grid_tips) >= 2 else flat_tips
            take = int(rng.integers(2, min(3, len(group)) + 1))
            merged = [group[int(j)] for j in rng.choice(len(group), take, replace=False)]
            for t in merged:
                tips.remove(t)
            tips.append(add(concat(f"cat{k}"), merged, flattened[merged[0]]))
            continue
        branch = roll < 0.35 and len(layers) + len(tips) + 2 <= target
        if branch:
            candidates = [i for i in range(len(layers)) if layers[i].kind != "Output"]
            src = int(rng.choice(candidates))
        else:
            src = tips.pop(int(rng.integers(len(tips))))
        flat = flattened[src]
        kinds = ["ip", "relu", "sigmoid"] if flat else ["conv", "pool", "ip", "relu", "sigmoid"]
        kind = kinds[int(rng.integers(len(kinds)))]
        if kind == "conv":
            node = add(conv(f"conv{k}", 1, 1, f=int(rng.integers(1, 65))), [src], False)
        elif kind == "pool":
            node = add(pool(f"pool{k}", 1, 1, 1, 1), [src], False)
        elif kind == "ip":
            node = add(ip(f"ip{k}", int(rng.integers(1, 129))), [src], True)
        elif kind == "relu":
            node = add(relu(f"relu{k}"), [src], flat)
        else:
            node = add(sigmoid(f"sig{k}"), [src], flat)
        tips.append(node)
    for j, t in enumerate(list(tips)):
        add(outp(f"out{j}"), [t], flattened[t])
    return build_graph(layers, bottoms)
