"""Layer DAG model: architecture-file parsing, validation, and traversal.

The file format is a sequence of ``layer { ... }`` blocks with quoted-string
and integer fields (see README for the grammar). Layers reference their
producers by name via repeatable ``bottom:`` fields; a file with no bottom
declarations at all is read as a linear chain.
"""

from __future__ import annotations

import heapq
import re
from dataclasses import dataclass, field

from .errors import (
    CycleError,
    DanglingReference,
    DuplicateLayerName,
    InvalidGraph,
    MissingField,
    ParseError,
    PathExplosion,
    UnexpectedField,
    UnknownLayerKind,
)

KINDS = ("Input", "Convolution", "Pooling", "InnerProduct", "ReLU", "Sigmoid", "Concat", "Output")
ACTIVATIONS = ("ReLU", "Sigmoid")
POOL_METHODS = ("max", "avg")

_WINDOW_KINDS = ("Convolution", "Pooling")
_WINDOW_FIELDS = ("kernel_h", "kernel_w", "stride_h", "stride_w", "pad_h", "pad_w")


@dataclass(frozen=True)
class LayerSpec:
    """One typed layer. Kind-specific fields are None unless the kind uses them."""

    name: str
    kind: str
    kernel_h: int | None = None
    kernel_w: int | None = None
    stride_h: int | None = None
    stride_w: int | None = None
    pad_h: int | None = None
    pad_w: int | None = None
    num_output: int | None = None
    input_shape: tuple[int, int, int] | None = None
    pool_method: str | None = None

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise InvalidGraph(f"layer '{self.name}': unknown kind {self.kind!r}")
        want_window = self.kind in _WINDOW_KINDS
        for f in _WINDOW_FIELDS:
            v = getattr(self, f)
            if want_window and v is None:
                raise InvalidGraph(f"layer '{self.name}': {self.kind} requires {f}")
            if not want_window and v is not None:
                raise InvalidGraph(f"layer '{self.name}': {f} not allowed on {self.kind}")
        if want_window:
            for f in ("kernel_h", "kernel_w", "stride_h", "stride_w"):
                if getattr(self, f) < 1:
                    raise InvalidGraph(f"layer '{self.name}': {f} must be >= 1")
            for f in ("pad_h", "pad_w"):
                if getattr(self, f) < 0:
                    raise InvalidGraph(f"layer '{self.name}': {f} must be >= 0")
        if self.kind in ("Convolution", "InnerProduct"):
            if self.num_output is None:
                raise InvalidGraph(f"layer '{self.name}': {self.kind} requires num_output")
            if self.num_output < 1:
                raise InvalidGraph(f"layer '{self.name}': num_output must be >= 1")
        elif self.num_output is not None:
            raise InvalidGraph(f"layer '{self.name}': num_output not allowed on {self.kind}")
        if self.kind == "Input":
            if self.input_shape is None:
                raise InvalidGraph(f"layer '{self.name}': Input requires input_dim x3")
            if any(d < 1 for d in self.input_shape):
                raise InvalidGraph(f"layer '{self.name}': input dims must be >= 1")
        elif self.input_shape is not None:
            raise InvalidGraph(f"layer '{self.name}': input_dim not allowed on {self.kind}")
        if self.kind == "Pooling":
            if self.pool_method not in POOL_METHODS:
                raise InvalidGraph(f"layer '{self.name}': pool_method must be one of {POOL_METHODS}")
        elif self.pool_method is not None:
            raise InvalidGraph(f"layer '{self.name}': pool_method not allowed on {self.kind}")


@dataclass(frozen=True)
class NetworkGraph:
    """Validated DAG of layers. Edges are (producer index, consumer index),
    grouped by consumer in layer order."""

    layers: tuple[LayerSpec, ...]
    edges: tuple[tuple[int, int], ...]
    population_tag: str | None = None

    def __len__(self) -> int:
        return len(self.layers)

    def successors(self) -> list[list[int]]:
        succ: list[list[int]] = [[] for _ in self.layers]
        for u, v in self.edges:
            succ[u].append(v)
        return succ

    def predecessors(self) -> list[list[int]]:
        pred: list[list[int]] = [[] for _ in self.layers]
        for u, v in self.edges:
            pred[v].append(u)
        return pred

    def inputs(self) -> list[int]:
        return [i for i, l in enumerate(self.layers) if l.kind == "Input"]

    def outputs(self) -> list[int]:
        return [i for i, l in enumerate(self.layers) if l.kind == "Output"]


def build_graph(
    layers: list[LayerSpec],
    bottoms: list[list[int]],
    population_tag: str | None = None,
) -> NetworkGraph:
    """Assemble and validate a graph from per-layer producer index lists.

    Canonical edge order (by consumer, then declaration order) keeps
    serialize/parse round trips exact.
    """
    edges = tuple((u, v) for v, bs in enumerate(bottoms) for u in bs)
    g = NetworkGraph(tuple(layers), edges, population_tag)
    validate_graph(g)
    return g


def validate_graph(g: NetworkGraph) -> None:
    """Check every NetworkGraph invariant; raises CycleError/InvalidGraph."""
    for layer in g.layers:
        layer.validate()
    names = [l.name for l in g.layers]
    if len(set(names)) != len(names):
        dup = next(n for n in names if names.count(n) > 1)
        raise InvalidGraph(f"duplicate layer name '{dup}'")
    n = len(g.layers)
    for u, v in g.edges:
        if not (0 <= u < n and 0 <= v < n):
            raise InvalidGraph(f"edge ({u}, {v}) references a nonexistent layer")
    indeg = [0] * n
    outdeg = [0] * n
    for u, v in g.edges:
        indeg[v] += 1
        outdeg[u] += 1
    topological_order(g)  # raises CycleError
    if not g.inputs():
        raise InvalidGraph("no Input layer")
    if not g.outputs():
        raise InvalidGraph("no Output layer")
    for i, layer in enumerate(g.layers):
        if layer.kind == "Input":
            if indeg[i] != 0:
                raise InvalidGraph(f"Input layer '{layer.name}' has in-degree {indeg[i]}")
        elif indeg[i] == 0:
            raise InvalidGraph(f"layer '{layer.name}' is dangling (in-degree 0)")
        if layer.kind == "Output":
            if outdeg[i] != 0:
                raise InvalidGraph(f"Output layer '{layer.name}' has out-degree {outdeg[i]}")
        elif outdeg[i] == 0:
            raise InvalidGraph(f"layer '{layer.name}' is dangling (out-degree 0)")
        if indeg[i] > 1 and layer.kind != "Concat":
            raise InvalidGraph(f"layer '{layer.name}' ({layer.kind}) has in-degree {indeg[i]}; only Concat may merge")


def topological_order(g: NetworkGraph) -> list[int]:
    """Layer indices with every edge (u, v) placing u first; ties broken by file order."""
    n = len(g.layers)
    indeg = [0] * n
    succ = g.successors()
    for _, v in g.edges:
        indeg[v] += 1
    ready = [i for i in range(n) if indeg[i] == 0]
    heapq.heapify(ready)
    order: list[int] = []
    while ready:
        u = heapq.heappop(ready)
        order.append(u)
        for v in succ[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(ready, v)
    if len(order) != n:
        stuck = [g.layers[i].name for i in range(n) if indeg[i] > 0]
        raise CycleError(f"cycle through layers {stuck}")
    return order


def count_io_paths(g: NetworkGraph) -> int:
    """Number of directed Input-to-Output paths (dynamic programming, no enumeration)."""
    order = topological_order(g)
    succ = g.successors()
    below = [0] * len(g.layers)  # paths from node (inclusive) down to any Output
    for u in reversed(order):
        if g.layers[u].kind == "Output":
            below[u] = 1
        else:
            below[u] = sum(below[v] for v in succ[u])
    return sum(below[i] for i in g.inputs())


def enumerate_io_paths(g: NetworkGraph, cap: int) -> list[tuple[int, ...]]:
    """All Input-to-Output paths as layer-index tuples.

    Raises PathExplosion (rather than truncating) when the DP count exceeds
    ``cap``; callers fall back on the DP depth computations.
    """
    total = count_io_paths(g)
    if total > cap:
        raise PathExplosion(total, cap)
    succ = [sorted(s) for s in g.successors()]
    paths: list[tuple[int, ...]] = []

    def walk(u: int, prefix: list[int]) -> None:
        prefix.append(u)
        if g.layers[u].kind == "Output":
            paths.append(tuple(prefix))
        else:
            for v in succ[u]:
                walk(v, prefix)
        prefix.pop()

    for i in g.inputs():
        walk(i, [])
    return paths


# --- text format -------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<comment>\#[^\n]*)
      | (?P<string>"[^"\n]*")
      | (?P<int>-?\d+)
      | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
      | (?P<lbrace>\{)
      | (?P<rbrace>\})
      | (?P<colon>:)
    """,
    re.VERBOSE,
)

_INT_FIELDS = ("kernel_h", "kernel_w", "stride_h", "stride_w", "pad_h", "pad_w", "num_output", "input_dim")
_STR_FIELDS = ("name", "type", "bottom", "top", "pool_method")


@dataclass
class _Token:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        tok = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(_Token(kind, tok, line, col))
        nl = tok.count("\n")
        if nl:
            line += nl
            col = len(tok) - tok.rfind("\n")
        else:
            col += len(tok)
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def expect(self, kind: str, what: str) -> _Token:
        tok = self.peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else None
            raise ParseError(f"unexpected end of input, expected {what}",
                             last.line if last else 1, last.col if last else 1)
        if tok.kind != kind:
            raise ParseError(f"expected {what}, got {tok.text!r}", tok.line, tok.col)
        self.pos += 1
        return tok

    def parse_blocks(self) -> tuple[list[dict], str | None]:
        blocks = []
        population_tag = None
        while (tok := self.peek()) is not None:
            if tok.kind != "ident":
                raise ParseError(f"expected 'layer' block, got {tok.text!r}", tok.line, tok.col)
            if tok.text == "population":
                self.pos += 1
                self.expect("colon", "':'")
                val = self.expect("string", "quoted population tag")
                population_tag = val.text[1:-1]
                continue
            if tok.text != "layer":
                raise ParseError(f"expected 'layer', got {tok.text!r}", tok.line, tok.col)
            self.pos += 1
            self.expect("lbrace", "'{'")
            blocks.append(self._parse_fields(tok))
            self.expect("rbrace", "'}'")
        return blocks, population_tag

    def _parse_fields(self, opener: _Token) -> dict:
        fields: dict = {"_line": opener.line, "bottom": [], "input_dim": []}
        while True:
            tok = self.peek()
            if tok is None:
                raise ParseError("unterminated layer block", opener.line, opener.col)
            if tok.kind == "rbrace":
                return fields
            key = self.expect("ident", "field name")
            self.expect("colon", "':'")
            if key.text in _STR_FIELDS:
                val = self.expect("string", f"quoted string for {key.text}")
                parsed: object = val.text[1:-1]
            elif key.text in _INT_FIELDS:
                val = self.expect("int", f"integer for {key.text}")
                parsed = int(val.text)
            else:
                raise UnexpectedField(f"unknown field {key.text!r}", key.line, key.col)
            if key.text == "bottom":
                fields["bottom"].append(parsed)
            elif key.text == "input_dim":
                fields["input_dim"].append(parsed)
            elif key.text in fields:
                raise ParseError(f"field {key.text!r} given twice", key.line, key.col)
            else:
                fields[key.text] = parsed


_KIND_FIELDS = {
    "Input": {"input_dim"},
    "Convolution": {"kernel_h", "kernel_w", "stride_h", "stride_w", "pad_h", "pad_w", "num_output"},
    "Pooling": {"kernel_h", "kernel_w", "stride_h", "stride_w", "pad_h", "pad_w", "pool_method"},
    "InnerProduct": {"num_output"},
    "ReLU": set(),
    "Sigmoid": set(),
    "Concat": set(),
    "Output": set(),
}
_REQUIRED_FIELDS = {
    "Convolution": ("kernel_h", "kernel_w", "stride_h", "stride_w", "num_output"),
    "Pooling": ("kernel_h", "kernel_w", "stride_h", "stride_w"),
    "InnerProduct": ("num_output",),
}


def _layer_from_block(block: dict) -> LayerSpec:
    line = block["_line"]
    if "name" not in block:
        raise MissingField("layer block missing 'name'", line)
    name = block["name"]
    if "type" not in block:
        raise MissingField(f"layer '{name}' missing 'type'", line)
    kind = block["type"]
    if kind not in KINDS:
        raise UnknownLayerKind(f"layer '{name}': unknown type {kind!r}", line)
    allowed = _KIND_FIELDS[kind]
    for key in block:
        if key.startswith("_") or key in ("name", "type", "bottom", "top"):
            continue
        if key == "input_dim" and not block["input_dim"]:
            continue  # empty accumulator, nothing was declared
        if key not in allowed:
            raise UnexpectedField(f"layer '{name}': field {key!r} not valid for {kind}", line)
    for key in _REQUIRED_FIELDS.get(kind, ()):
        if key not in block:
            raise MissingField(f"layer '{name}': {kind} requires {key!r}", line)
    kwargs: dict = {"name": name, "kind": kind}
    if kind in _WINDOW_KINDS:
        for f in ("kernel_h", "kernel_w", "stride_h", "stride_w"):
            kwargs[f] = block[f]
        kwargs["pad_h"] = block.get("pad_h", 0)
        kwargs["pad_w"] = block.get("pad_w", 0)
    if kind in ("Convolution", "InnerProduct"):
        kwargs["num_output"] = block["num_output"]
    if kind == "Input":
        dims = block["input_dim"]
        if len(dims) != 3:
            raise MissingField(f"layer '{name}': Input requires exactly 3 input_dim entries "
                               f"(height, width, channels), got {len(dims)}", line)
        kwargs["input_shape"] = tuple(dims)
    if kind == "Pooling":
        kwargs["pool_method"] = block.get("pool_method", "max")
    spec = LayerSpec(**kwargs)
    try:
        spec.validate()
    except InvalidGraph as e:
        raise ParseError(str(e), line) from e
    return spec


def parse_network(text: str) -> NetworkGraph:
    """Parse architecture text into a validated NetworkGraph.

    Layer order in the file is preserved. Raises ParseError subclasses on
    malformed text and CycleError/InvalidGraph on structural violations.
    """
    blocks, population_tag = _Parser(text).parse_blocks()
    if not blocks:
        raise ParseError("no layer blocks found", 1, 1)
    layers = [_layer_from_block(b) for b in blocks]

    by_name: dict[str, int] = {}
    for i, (layer, block) in enumerate(zip(layers, blocks)):
        for alias in {layer.name, block.get("top", layer.name)}:
            if alias in by_name:
                raise DuplicateLayerName(f"name or top alias '{alias}' declared twice", block["_line"])
            by_name[alias] = i

    any_bottom = any(b["bottom"] for b in blocks)
    bottoms: list[list[int]] = []
    for block in blocks:
        if any_bottom:
            refs = []
            for ref in block["bottom"]:
                if ref not in by_name:
                    raise DanglingReference(f"layer '{block['name']}': bottom '{ref}' does not exist",
                                            block["_line"])
                refs.append(by_name[ref])
            bottoms.append(refs)
        else:
            bottoms.append([])
    if not any_bottom and len(layers) > 1:
        # convenience: a bottom-less file is a linear chain in file order
        bottoms = [[] if i == 0 else [i - 1] for i in range(len(layers))]

    return build_graph(layers, bottoms, population_tag)


def serialize_network(g: NetworkGraph) -> str:
    """Render a NetworkGraph back to architecture text (inverse of parse_network)."""
    pred = g.predecessors()
    out = []
    if g.population_tag is not None:
        out.append(f'population: "{g.population_tag}"')
    for i, layer in enumerate(g.layers):
        out.append("layer {")
        out.append(f'  name: "{layer.name}"')
        out.append(f'  type: "{layer.kind}"')
        for u in pred[i]:
            out.append(f'  bottom: "{g.layers[u].name}"')
        if layer.kind == "Input":
            for d in layer.input_shape:
                out.append(f"  input_dim: {d}")
        if layer.kind in _WINDOW_KINDS:
            for f in _WINDOW_FIELDS:
                out.append(f"  {f}: {getattr(layer, f)}")
        if layer.kind == "Pooling":
            out.append(f'  pool_method: "{layer.pool_method}"')
        if layer.num_output is not None:
            out.append(f"  num_output: {layer.num_output}")
        out.append("}")
    return "\n".join(out) + "\n"
