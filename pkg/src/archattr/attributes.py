"""Architectural attribute vector extraction.

Thirty scalar attributes are computed per network from the layer DAG and its
inferred activation grids, in a fixed canonical order. Attributes whose
denominator population is empty (e.g. no InnerProduct layers) are reported as
0.0 and flagged as undefined in the vector's metadata.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ArchAttrError, ParseError, ShapeError
from .graph import NetworkGraph, topological_order
from .shapes import ShapeTable, infer_shapes

ATTRIBUTE_NAMES: tuple[str, ...] = (
    "net_depth_avg",
    "num_conv_layers",
    "num_pooling_layers",
    "avg_IP_neurons",
    "avg_IP_weights",
    "num_conv_features",
    "prop_conv_into_pool",
    "prop_pool_into_pool",
    "prop_1x1_kernels",
    "prop_square_kernels",
    "prop_horiz_kernels",
    "prop_vert_kernels",
    "num_relu",
    "num_sigmoid",
    "avg_grid_reduction_area_consecutive",
    "avg_grid_reduction_height_consecutive",
    "avg_grid_reduction_width_consecutive",
    "avg_grid_reduction_area_total",
    "avg_grid_reduction_height_total",
    "avg_grid_reduction_width_total",
    "prop_nonoverlapping",
    "avg_stride_h",
    "avg_stride_w",
    "avg_ratio_features_to_depth",
    "avg_ratio_features_to_kerArea",
    "avg_ratio_features_to_kerHeight",
    "avg_ratio_features_to_kerWidth",
    "avg_ratio_kerArea_to_depth",
    "avg_ratio_kerHeight_to_depth",
    "avg_ratio_kerWidth_to_depth",
)


@dataclass
class AttributeVector:
    """One network's attribute values, keyed in canonical order."""

    network_id: str
    values: dict[str, float]
    undefined: frozenset[str] = frozenset()
    accuracy: float | None = None

    def as_row(self) -> list[float]:
        return [self.values[name] for name in ATTRIBUTE_NAMES]


def _mean(xs: list[float]) -> tuple[float, bool]:
    """(mean, defined); empty populations map to (0.0, False)."""
    if not xs:
        return 0.0, False
    return sum(xs) / len(xs), True


# --- depth -----------------------------------------------------------------


def _mean_depth_from_inputs(g: NetworkGraph) -> tuple[list[int], list[int]]:
    """Per node: (count of Input-to-node paths, summed path layer counts)."""
    n = len(g.layers)
    pred = g.predecessors()
    count = [0] * n
    total = [0] * n
    for u in topological_order(g):
        if g.layers[u].kind == "Input":
            count[u] = 1
            total[u] = 1
            continue
        for p in pred[u]:
            count[u] += count[p]
            total[u] += total[p] + count[p]  # each path grows by one layer
    return count, total


def average_depth(g: NetworkGraph) -> float:
    """Mean layer count over all directed Input-to-Output paths (both ends
    included), computed by dynamic programming over the DAG."""
    count, total = _mean_depth_from_inputs(g)
    outs = g.outputs()
    n_paths = sum(count[o] for o in outs)
    return sum(total[o] for o in outs) / n_paths


def layer_mean_depths(g: NetworkGraph) -> dict[int, float]:
    """Mean Input-to-layer path length per layer index (inclusive ends)."""
    count, total = _mean_depth_from_inputs(g)
    return {i: total[i] / count[i] for i in range(len(g.layers)) if count[i] > 0}


# --- layer-kind counts -------------------------------------------------------


def layer_counts(g: NetworkGraph, shapes: ShapeTable) -> tuple[dict[str, float], set[str]]:
    pred = g.predecessors()
    convs = [l for l in g.layers if l.kind == "Convolution"]
    ips = [i for i, l in enumerate(g.layers) if l.kind == "InnerProduct"]
    values: dict[str, float] = {
        "num_conv_layers": float(sum(l.kind == "Convolution" for l in g.layers)),
        "num_pooling_layers": float(sum(l.kind == "Pooling" for l in g.layers)),
    }
    undefined: set[str] = set()

    # activations count only when they gate a Convolution directly
    for attr, kind in (("num_relu", "ReLU"), ("num_sigmoid", "Sigmoid")):
        values[attr] = float(sum(
            1 for i, l in enumerate(g.layers)
            if l.kind == kind and g.layers[pred[i][0]].kind == "Convolution"
        ))

    values["num_conv_features"], ok = _mean([float(l.num_output) for l in convs])
    if not ok:
        undefined.add("num_conv_features")
    values["avg_IP_neurons"], ok = _mean([float(g.layers[i].num_output) for i in ips])
    if not ok:
        undefined.add("avg_IP_neurons")
    # weight count = flattened predecessor size x width, biases excluded
    weights = [float(shapes[pred[i][0]].size * g.layers[i].num_output) for i in ips]
    values["avg_IP_weights"], ok = _mean(weights)
    if not ok:
        undefined.add("avg_IP_weights")
    return values, undefined


# --- succession --------------------------------------------------------------


def _effective_successors(g: NetworkGraph, succ: list[list[int]], i: int) -> list[int]:
    """Direct successors of layer i, looking through ReLU/Sigmoid layers."""
    out: list[int] = []
    stack = list(succ[i])
    while stack:
        j = stack.pop()
        if g.layers[j].kind in ("ReLU", "Sigmoid"):
            stack.extend(succ[j])
        else:
            out.append(j)
    return out


def succession_props(g: NetworkGraph) -> tuple[dict[str, float], set[str]]:
    succ = g.successors()
    values: dict[str, float] = {}
    undefined: set[str] = set()
    for attr, kind in (("prop_conv_into_pool", "Convolution"), ("prop_pool_into_pool", "Pooling")):
        hits = []
        for i, l in enumerate(g.layers):
            if l.kind != kind:
                continue
            nexts = _effective_successors(g, succ, i)
            hits.append(float(any(g.layers[j].kind == "Pooling" for j in nexts)))
        values[attr], ok = _mean(hits)
        if not ok:
            undefined.add(attr)
    return values, undefined


# --- kernel geometry -----------------------------------------------------------


def kernel_shape_props(g: NetworkGraph) -> tuple[dict[str, float], set[str]]:
    convs = [l for l in g.layers if l.kind == "Convolution"]
    per_attr = {
        "prop_1x1_kernels": [float(l.kernel_h == 1 and l.kernel_w == 1) for l in convs],
        "prop_square_kernels": [float(l.kernel_h == l.kernel_w) for l in convs],
        "prop_horiz_kernels": [float(l.kernel_w > l.kernel_h) for l in convs],
        "prop_vert_kernels": [float(l.kernel_h > l.kernel_w) for l in convs],
        "prop_nonoverlapping": [float(l.stride_h >= l.kernel_h and l.stride_w >= l.kernel_w) for l in convs],
        "avg_stride_h": [float(l.stride_h) for l in convs],
        "avg_stride_w": [float(l.stride_w) for l in convs],
    }
    values: dict[str, float] = {}
    undefined: set[str] = set()
    for attr, xs in per_attr.items():
        values[attr], ok = _mean(xs)
        if not ok:
            undefined.add(attr)
    return values, undefined


# --- grid reductions ------------------------------------------------------------


def consecutive_conv_pairs(g: NetworkGraph) -> set[tuple[int, int]]:
    """Pairs (A, B) of Convolution layers where some path reaches B from A
    with no other Convolution in between."""
    pred = g.predecessors()
    pairs: set[tuple[int, int]] = set()
    for b, layer in enumerate(g.layers):
        if layer.kind != "Convolution":
            continue
        stack = list(pred[b])
        seen: set[int] = set()
        while stack:
            u = stack.pop()
            if u in seen:
                continue
            seen.add(u)
            if g.layers[u].kind == "Convolution":
                pairs.add((u, b))
            else:
                stack.extend(pred[u])
    return pairs


def total_reduction_pairs(g: NetworkGraph) -> set[tuple[int, int]]:
    """Pairs (Input, F) where F is a Convolution that is last on some
    Input-to-Output path starting at that Input."""
    succ = g.successors()
    n = len(g.layers)
    # conv_free[v]: an Output is reachable from v without passing a Convolution
    conv_free = [False] * n
    for v in reversed(topological_order(g)):
        if g.layers[v].kind == "Output":
            conv_free[v] = True
        elif g.layers[v].kind != "Convolution":
            conv_free[v] = any(conv_free[w] for w in succ[v])
    finals = [
        i for i, l in enumerate(g.layers)
        if l.kind == "Convolution" and any(conv_free[w] for w in succ[i])
    ]
    pairs: set[tuple[int, int]] = set()
    for src in g.inputs():
        reach = [False] * n
        reach[src] = True
        for v in topological_order(g):
            if reach[v]:
                for w in succ[v]:
                    reach[w] = True
        pairs.update((src, f) for f in finals if reach[f])
    return pairs


def _percent_reductions(pairs: set[tuple[int, int]], shapes: ShapeTable) -> dict[str, list[float]]:
    out: dict[str, list[float]] = {"area": [], "height": [], "width": []}
    for a, b in sorted(pairs):
        sa, sb = shapes[a], shapes[b]
        out["area"].append(100.0 * (sa.area - sb.area) / sa.area)
        out["height"].append(100.0 * (sa.height - sb.height) / sa.height)
        out["width"].append(100.0 * (sa.width - sb.width) / sa.width)
    return out


def grid_reductions(g: NetworkGraph, shapes: ShapeTable) -> tuple[dict[str, float], set[str]]:
    values: dict[str, float] = {}
    undefined: set[str] = set()
    # Convolution layers are never downstream of a flatten, so both pair sets
    # live entirely on un-flattened grids.
    for tag, pairs in (("consecutive", consecutive_conv_pairs(g)), ("total", total_reduction_pairs(g))):
        reds = _percent_reductions(pairs, shapes)
        for q in ("area", "height", "width"):
            attr = f"avg_grid_reduction_{q}_{tag}"
            values[attr], ok = _mean(reds[q])
            if not ok:
                undefined.add(attr)
    return values, undefined


# --- per-layer ratio attributes ----------------------------------------------------


def ratio_attributes(g: NetworkGraph, shapes: ShapeTable) -> tuple[dict[str, float], set[str]]:
    depths = layer_mean_depths(g)
    rows: dict[str, list[float]] = {name: [] for name in (
        "avg_ratio_features_to_depth",
        "avg_ratio_features_to_kerArea",
        "avg_ratio_features_to_kerHeight",
        "avg_ratio_features_to_kerWidth",
        "avg_ratio_kerArea_to_depth",
        "avg_ratio_kerHeight_to_depth",
        "avg_ratio_kerWidth_to_depth",
    )}
    for i, l in enumerate(g.layers):
        if l.kind != "Convolution":
            continue
        d = depths[i]
        f = float(l.num_output)
        ker_area = float(l.kernel_h * l.kernel_w)
        rows["avg_ratio_features_to_depth"].append(f / d)
        rows["avg_ratio_features_to_kerArea"].append(f / ker_area)
        rows["avg_ratio_features_to_kerHeight"].append(f / l.kernel_h)
        rows["avg_ratio_features_to_kerWidth"].append(f / l.kernel_w)
        rows["avg_ratio_kerArea_to_depth"].append(ker_area / d)
        rows["avg_ratio_kerHeight_to_depth"].append(l.kernel_h / d)
        rows["avg_ratio_kerWidth_to_depth"].append(l.kernel_w / d)
    values: dict[str, float] = {}
    undefined: set[str] = set()
    for attr, xs in rows.items():
        values[attr], ok = _mean(xs)
        if not ok:
            undefined.add(attr)
    return values, undefined


# --- composition --------------------------------------------------------------


def extract_attributes(g: NetworkGraph, network_id: str = "",
                       accuracy: float | None = None) -> AttributeVector:
    """Full canonical attribute vector for one network."""
    try:
        shapes = infer_shapes(g)
    except ShapeError as e:
        raise type(e)(f"network '{network_id}': {e}") from e
    values: dict[str, float] = {"net_depth_avg": average_depth(g)}
    undefined: set[str] = set()
    for part_values, part_undefined in (
        layer_counts(g, shapes),
        succession_props(g),
        kernel_shape_props(g),
        grid_reductions(g, shapes),
        ratio_attributes(g, shapes),
    ):
        values.update(part_values)
        undefined.update(part_undefined)
    ordered = {name: values[name] for name in ATTRIBUTE_NAMES}
    for name, v in ordered.items():
        if not math.isfinite(v):
            raise ArchAttrError(f"network '{network_id}': attribute {name} is not finite")
    return AttributeVector(network_id, ordered, frozenset(undefined), accuracy)


# --- tabular interchange ---------------------------------------------------------


def _format_value(x: float) -> str:
    return f"{x:.17g}"


@dataclass
class AttributeTable:
    """Ordered attribute vectors sharing the canonical column layout."""

    rows: list[AttributeVector] = field(default_factory=list)

    def __post_init__(self) -> None:
        ids = [r.network_id for r in self.rows]
        if len(set(ids)) != len(ids):
            raise ArchAttrError("duplicate network_id in attribute table")

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def has_accuracy(self) -> bool:
        return bool(self.rows) and all(r.accuracy is not None for r in self.rows)

    def to_csv(self, include_accuracy: bool | None = None) -> str:
        """Canonical CSV text: network_id first, accuracy (if any) last,
        floats at 17 significant digits, LF line endings."""
        if include_accuracy is None:
            include_accuracy = self.has_accuracy
        if include_accuracy and not self.has_accuracy:
            raise ArchAttrError("accuracy requested but not set on every row")
        header = ["network_id", *ATTRIBUTE_NAMES] + (["accuracy"] if include_accuracy else [])
        lines = [",".join(header)]
        for r in self.rows:
            cells = [r.network_id, *(_format_value(v) for v in r.as_row())]
            if include_accuracy:
                cells.append(_format_value(r.accuracy))
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def write_csv(self, path: str | Path, include_accuracy: bool | None = None) -> None:
        Path(path).write_text(self.to_csv(include_accuracy), encoding="utf-8", newline="\n")

    @classmethod
    def from_csv(cls, text: str) -> "AttributeTable":
        lines = [ln for ln in text.split("\n") if ln]
        if not lines:
            raise ParseError("empty attribute CSV")
        header = lines[0].split(",")
        with_acc = header == ["network_id", *ATTRIBUTE_NAMES, "accuracy"]
        if not with_acc and header != ["network_id", *ATTRIBUTE_NAMES]:
            raise ParseError("attribute CSV header does not match the canonical column order")
        rows = []
        for k, ln in enumerate(lines[1:], start=2):
            cells = ln.split(",")
            if len(cells) != len(header):
                raise ParseError(f"row has {len(cells)} cells, expected {len(header)}", k)
            try:
                vals = [float(c) for c in cells[1:]]
            except ValueError as e:
                raise ParseError(f"non-numeric cell: {e}", k) from e
            acc = vals.pop() if with_acc else None
            rows.append(AttributeVector(cells[0], dict(zip(ATTRIBUTE_NAMES, vals)), frozenset(), acc))
        return cls(rows)

    @classmethod
    def read_csv(cls, path: str | Path) -> "AttributeTable":
        return cls.from_csv(Path(path).read_text(encoding="utf-8"))
