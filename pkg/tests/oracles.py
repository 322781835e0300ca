"""Independent brute-force oracles.

Everything here recomputes quantities from first principles (explicit path
enumeration, materialized index windows, grid scans) without touching the
production code paths it is used to check.
"""

from __future__ import annotations

import numpy as np

from archattr.graph import NetworkGraph


def dfs_io_paths(g: NetworkGraph) -> set[tuple[int, ...]]:
    """All Input-to-Output paths by plain recursive DFS."""
    succ: dict[int, list[int]] = {i: [] for i in range(len(g.layers))}
    for u, v in g.edges:
        succ[u].append(v)
    found: set[tuple[int, ...]] = set()

    def visit(node: int, trail: tuple[int, ...]) -> None:
        trail = trail + (node,)
        if g.layers[node].kind == "Output":
            found.add(trail)
            return
        for nxt in succ[node]:
            visit(nxt, trail)

    for i, layer in enumerate(g.layers):
        if layer.kind == "Input":
            visit(i, ())
    return found


def mean_path_length(g: NetworkGraph) -> float:
    paths = dfs_io_paths(g)
    return sum(len(p) for p in paths) / len(paths)


def mean_depth_to_layer(g: NetworkGraph, target: int) -> float:
    """Mean layer count over Input-to-target paths, by backward DFS."""
    pred: dict[int, list[int]] = {i: [] for i in range(len(g.layers))}
    for u, v in g.edges:
        pred[v].append(u)
    lengths: list[int] = []

    def back(node: int, depth: int) -> None:
        if g.layers[node].kind == "Input":
            lengths.append(depth)
            return
        for p in pred[node]:
            back(p, depth + 1)

    back(target, 1)
    return sum(lengths) / len(lengths)


def conv_pairs_from_paths(g: NetworkGraph) -> tuple[set[tuple[int, int]], set[tuple[int, int]]]:
    """(consecutive-conv pairs, input/final-conv pairs) from path enumeration."""
    consecutive: set[tuple[int, int]] = set()
    total: set[tuple[int, int]] = set()
    for path in dfs_io_paths(g):
        convs = [i for i in path if g.layers[i].kind == "Convolution"]
        consecutive.update(zip(convs, convs[1:]))
        if convs:
            total.add((path[0], convs[-1]))
    return consecutive, total


def conv_windows(in_dim: int, kernel: int, stride: int, pad: int) -> int:
    """Count kernel placements fully inside the padded extent."""
    padded = in_dim + 2 * pad
    count = 0
    start = 0
    while start + kernel <= padded:
        count += 1
        start += stride
    return count


def pool_windows(in_dim: int, kernel: int, stride: int, pad: int) -> int:
    """Slide until a window reaches the padded end (windows may overhang),
    then discard a window that begins past the unpadded extent."""
    padded = in_dim + 2 * pad
    starts = []
    j = 0
    while True:
        start = j * stride
        starts.append(start)
        if start + kernel >= padded:
            break
        j += 1
    return sum(1 for s in starts if s <= in_dim + pad - 1)


def boxcox_grid_lambda(y: np.ndarray, lo: float = -5.0, hi: float = 5.0,
                       step: float = 1e-3) -> float:
    """Argmax of the Box-Cox profile log-likelihood over a fixed grid."""
    y = np.asarray(y, dtype=np.float64)
    n = len(y)
    logy = np.log(y)
    logsum = logy.sum()
    grid = np.arange(lo, hi + step / 2, step)
    best_lam, best_ll = grid[0], -np.inf
    for lam in grid:
        z = logy if abs(lam) < 1e-12 else (np.exp(lam * logy) - 1.0) / lam
        var = z.var()
        if var <= 0:
            continue
        ll = -0.5 * n * np.log(var) + (lam - 1.0) * logsum
        if ll > best_ll:
            best_ll, best_lam = ll, lam
    return float(best_lam)
