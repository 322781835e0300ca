"""Synthetic architecture populations with planted accuracy signals.

Networks are drawn layer by layer from a configurable distribution, rejected
and resampled whenever shape inference fails, and written in the standard
architecture file format. Accuracies come from a planted function of chosen
attributes plus noise, with a broken-mode mixture that reproduces the
low-accuracy spike seen in evolved populations, so classifier and regressor
behavior can be checked against a known ground truth.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.special import ndtr

from . import config as kv
from .attributes import ATTRIBUTE_NAMES, AttributeTable, AttributeVector, extract_attributes
from .errors import ArchAttrError, ConfigError, GenerationExhausted, ShapeError
from .graph import LayerSpec, NetworkGraph, build_graph, serialize_network
from .seeding import SeedParts, derive_rng
from .shapes import infer_shapes

_TAG_ARCH = 1
_TAG_ACCURACY = 2


@dataclass(frozen=True)
class GenConfig:
    """Architecture sampling distribution."""

    population_size: int = 1000
    seed: int = 20200614
    input_topology: str = "three-view"   # "single" | "three-view"
    output_topology: str = "dual"        # "single" | "dual"
    input_height: int = 127
    input_width: int = 47
    input_channels: int = 2
    view_stack_min: int = 1
    view_stack_max: int = 2
    layers_min: int = 2                  # trunk conv/pool slots after the merge
    layers_max: int = 8
    kernel_sizes: tuple[int, ...] = (1, 2, 3, 5, 7)
    strides: tuple[int, ...] = (1, 2)
    pads: tuple[int, ...] = (0, 0, 0, 1, 2)
    pool_kernels: tuple[int, ...] = (2, 3)
    pool_strides: tuple[int, ...] = (1, 2, 2)
    conv_weight: float = 0.7
    pool_weight: float = 0.3
    act_none: float = 0.3
    act_relu: float = 0.35
    act_sigmoid: float = 0.35
    features_min: int = 4
    features_max: int = 64
    ip_layers_min: int = 1
    ip_layers_max: int = 3
    ip_width_min: int = 16
    ip_width_max: int = 512

    def __post_init__(self) -> None:
        if self.input_topology not in ("single", "three-view"):
            raise ConfigError(f"input_topology must be single or three-view, got {self.input_topology!r}")
        if self.output_topology not in ("single", "dual"):
            raise ConfigError(f"output_topology must be single or dual, got {self.output_topology!r}")
        for lo, hi, what in (
            (self.view_stack_min, self.view_stack_max, "view_stack"),
            (self.layers_min, self.layers_max, "layers"),
            (self.ip_layers_min, self.ip_layers_max, "ip_layers"),
            (self.features_min, self.features_max, "features"),
            (self.ip_width_min, self.ip_width_max, "ip_width"),
        ):
            if lo < (1 if what in ("ip_layers", "features", "ip_width", "view_stack") else 0) or hi < lo:
                raise ConfigError(f"{what} range [{lo}, {hi}] is empty or invalid")
        for name in ("kernel_sizes", "strides", "pads", "pool_kernels", "pool_strides"):
            vals = getattr(self, name)
            if not vals or any(v < (0 if name == "pads" else 1) for v in vals):
                raise ConfigError(f"{name} must be a non-empty list of valid sizes")
        if self.conv_weight + self.pool_weight <= 0 or min(self.conv_weight, self.pool_weight) < 0:
            raise ConfigError("conv/pool weights must be non-negative and not both zero")
        acts = (self.act_none, self.act_relu, self.act_sigmoid)
        if min(acts) < 0 or sum(acts) <= 0:
            raise ConfigError("activation weights must be non-negative and not all zero")
        if min(self.input_height, self.input_width, self.input_channels) < 1:
            raise ConfigError("input dimensions must be >= 1")

    _INT_KEYS = (
        "population_size", "seed", "input_height", "input_width", "input_channels",
        "view_stack_min", "view_stack_max", "layers_min", "layers_max",
        "features_min", "features_max", "ip_layers_min", "ip_layers_max",
        "ip_width_min", "ip_width_max",
    )
    _FLOAT_KEYS = ("conv_weight", "pool_weight", "act_none", "act_relu", "act_sigmoid")
    _LIST_KEYS = ("kernel_sizes", "strides", "pads", "pool_kernels", "pool_strides")
    _STR_KEYS = ("input_topology", "output_topology")

    @classmethod
    def from_kv(cls, pairs: dict[str, str]) -> "GenConfig":
        kwargs: dict = {}
        for key, value in pairs.items():
            if key in cls._INT_KEYS:
                kwargs[key] = kv.parse_int(key, value)
            elif key in cls._FLOAT_KEYS:
                kwargs[key] = kv.parse_float(key, value)
            elif key in cls._LIST_KEYS:
                kwargs[key] = kv.parse_int_list(key, value)
            elif key in cls._STR_KEYS:
                kwargs[key] = value
            elif key in PlantSpec._KEYS:
                continue  # plant keys may share the file
            else:
                raise ConfigError(f"unknown generator config key {key!r}")
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {
            "population_size": self.population_size,
            "seed": self.seed,
            "input_topology": self.input_topology,
            "output_topology": self.output_topology,
            "input_height": self.input_height,
            "input_width": self.input_width,
            "input_channels": self.input_channels,
            "view_stack_min": self.view_stack_min,
            "view_stack_max": self.view_stack_max,
            "layers_min": self.layers_min,
            "layers_max": self.layers_max,
            "kernel_sizes": list(self.kernel_sizes),
            "strides": list(self.strides),
            "pads": list(self.pads),
            "pool_kernels": list(self.pool_kernels),
            "pool_strides": list(self.pool_strides),
            "conv_weight": self.conv_weight,
            "pool_weight": self.pool_weight,
            "act_none": self.act_none,
            "act_relu": self.act_relu,
            "act_sigmoid": self.act_sigmoid,
            "features_min": self.features_min,
            "features_max": self.features_max,
            "ip_layers_min": self.ip_layers_min,
            "ip_layers_max": self.ip_layers_max,
            "ip_width_min": self.ip_width_min,
            "ip_width_max": self.ip_width_max,
        }


@dataclass(frozen=True)
class PlantSpec:
    """Planted accuracy signal: accuracy = link(sum w_i z_i) + noise, where
    z_i are population-standardized signal attributes, mixed with a
    broken-mode spike drawn uniformly from a low-accuracy band."""

    signal: dict[str, float] = field(default_factory=lambda: dict(_DEFAULT_SIGNAL))
    link: str = "logistic"               # "logistic" | "linear-clipped"
    noise_std: float = 0.1
    broken_prob: float = 0.35
    broken_low: float = 0.0
    broken_high: float = 0.05
    stats: dict[str, tuple[float, float]] | None = None  # per-signal (mean, std)

    def __post_init__(self) -> None:
        unknown = set(self.signal) - set(ATTRIBUTE_NAMES)
        if unknown:
            raise ConfigError(f"signal features not in the canonical attribute set: {sorted(unknown)}")
        if not self.signal:
            raise ConfigError("at least one signal feature is required")
        if self.link not in ("logistic", "linear-clipped"):
            raise ConfigError(f"link must be logistic or linear-clipped, got {self.link!r}")
        if self.noise_std < 0:
            raise ConfigError("noise_std must be >= 0")
        if not 0.0 <= self.broken_prob <= 1.0:
            raise ConfigError("broken_prob must be in [0, 1]")
        if not 0.0 <= self.broken_low <= self.broken_high <= 1.0:
            raise ConfigError("broken accuracy range must satisfy 0 <= low <= high <= 1")

    _KEYS = ("signal_features", "link", "noise_std", "broken_prob", "broken_low", "broken_high")

    @classmethod
    def from_kv(cls, pairs: dict[str, str]) -> "PlantSpec":
        kwargs: dict = {}
        for key, value in pairs.items():
            if key == "signal_features":
                kwargs["signal"] = kv.parse_weighted_names(key, value)
            elif key in ("noise_std", "broken_prob", "broken_low", "broken_high"):
                kwargs[key] = kv.parse_float(key, value)
            elif key == "link":
                kwargs[key] = value
        return cls(**kwargs)

    def with_stats(self, table: AttributeTable) -> "PlantSpec":
        """Fill standardization stats from a realized population."""
        stats = {}
        for name in self.signal:
            col = np.array([r.values[name] for r in table.rows])
            stats[name] = (float(col.mean()), float(col.std()))
        return replace(self, stats=stats)

    def to_dict(self) -> dict:
        return {
            "signal": dict(self.signal),
            "link": self.link,
            "noise_std": self.noise_std,
            "broken_prob": self.broken_prob,
            "broken_low": self.broken_low,
            "broken_high": self.broken_high,
            "stats": None if self.stats is None else {k: list(v) for k, v in self.stats.items()},
        }


_DEFAULT_SIGNAL = {
    "avg_IP_neurons": 1.0,
    "num_sigmoid": -0.8,
    "prop_pool_into_pool": 0.6,
}


def _log_uniform_int(rng: np.random.Generator, lo: int, hi: int) -> int:
    if lo == hi:
        return lo
    v = math.exp(rng.uniform(math.log(lo), math.log(hi + 1)))
    return max(lo, min(hi, int(v)))


def _sample_trunk_plan(cfg: GenConfig, rng: np.random.Generator, n_slots: int) -> list[dict]:
    p_conv = cfg.conv_weight / (cfg.conv_weight + cfg.pool_weight)
    plan = []
    for _ in range(n_slots):
        if rng.random() < p_conv:
            plan.append(_sample_conv_params(cfg, rng))
        else:
            plan.append({
                "kind": "pool",
                "kernel": int(rng.choice(cfg.pool_kernels)),
                "stride": int(rng.choice(cfg.pool_strides)),
                "method": "max" if rng.random() < 0.7 else "avg",
            })
    return plan


def _sample_conv_params(cfg: GenConfig, rng: np.random.Generator) -> dict:
    acts = np.array([cfg.act_none, cfg.act_relu, cfg.act_sigmoid])
    act = ["none", "relu", "sigmoid"][int(rng.choice(3, p=acts / acts.sum()))]
    return {
        "kind": "conv",
        "kernel_h": int(rng.choice(cfg.kernel_sizes)),
        "kernel_w": int(rng.choice(cfg.kernel_sizes)),
        "stride_h": int(rng.choice(cfg.strides)),
        "stride_w": int(rng.choice(cfg.strides)),
        "pad_h": int(rng.choice(cfg.pads)),
        "pad_w": int(rng.choice(cfg.pads)),
        "features": _log_uniform_int(rng, cfg.features_min, cfg.features_max),
        "activation": act,
    }


_ACT_KIND = {"relu": "ReLU", "sigmoid": "Sigmoid"}


class _Builder:
    def __init__(self) -> None:
        self.layers: list[LayerSpec] = []
        self.bottoms: list[list[int]] = []
        self.counter = 0

    def add(self, layer: LayerSpec, bottom: list[int]) -> int:
        self.layers.append(layer)
        self.bottoms.append(bottom)
        return len(self.layers) - 1

    def next_id(self) -> int:
        self.counter += 1
        return self.counter

    def add_slot(self, plan: dict, prev: int, n: int, suffix: str = "") -> int:
        """Materialize one conv/pool plan entry (plus activation) after prev."""
        if plan["kind"] == "conv":
            idx = self.add(LayerSpec(
                name=f"conv{n}{suffix}", kind="Convolution",
                kernel_h=plan["kernel_h"], kernel_w=plan["kernel_w"],
                stride_h=plan["stride_h"], stride_w=plan["stride_w"],
                pad_h=plan["pad_h"], pad_w=plan["pad_w"],
                num_output=plan["features"],
            ), [prev])
            if plan["activation"] != "none":
                idx = self.add(LayerSpec(name=f"{plan['activation']}{n}{suffix}",
                                         kind=_ACT_KIND[plan["activation"]]), [idx])
            return idx
        return self.add(LayerSpec(
            name=f"pool{n}{suffix}", kind="Pooling",
            kernel_h=plan["kernel"], kernel_w=plan["kernel"],
            stride_h=plan["stride"], stride_w=plan["stride"],
            pad_h=0, pad_w=0, pool_method=plan["method"],
        ), [prev])


def _build_candidate(cfg: GenConfig, rng: np.random.Generator, tag: str | None) -> NetworkGraph:
    b = _Builder()
    if cfg.input_topology == "three-view":
        shape = (cfg.input_height, cfg.input_width, cfg.input_channels)
        view_plan = [_sample_conv_params(cfg, rng)
                     for _ in range(int(rng.integers(cfg.view_stack_min, cfg.view_stack_max + 1)))]
        view_ids = [b.next_id() for _ in view_plan]
        tips = []
        for view in ("x", "u", "v"):
            prev = b.add(LayerSpec(name=f"data_{view}", kind="Input", input_shape=shape), [])
            for plan, slot_id in zip(view_plan, view_ids):
                prev = b.add_slot(plan, prev, slot_id, suffix=f"_{view}")
            tips.append(prev)
        # identical per-view towers guarantee the merge is shape-consistent
        prev = b.add(LayerSpec(name="merge", kind="Concat"), tips)
    else:
        prev = b.add(LayerSpec(name="data", kind="Input",
                               input_shape=(cfg.input_height, cfg.input_width, cfg.input_channels)), [])
    for plan in _sample_trunk_plan(cfg, rng, int(rng.integers(cfg.layers_min, cfg.layers_max + 1))):
        prev = b.add_slot(plan, prev, b.next_id())
    n_ip = int(rng.integers(cfg.ip_layers_min, cfg.ip_layers_max + 1))
    branch = prev
    for _ in range(n_ip):
        branch = prev
        prev = b.add(LayerSpec(name=f"ip{b.next_id()}", kind="InnerProduct",
                               num_output=_log_uniform_int(rng, cfg.ip_width_min, cfg.ip_width_max)),
                     [prev])
    b.add(LayerSpec(name="out", kind="Output"), [prev])
    if cfg.output_topology == "dual":
        side = b.add(LayerSpec(name=f"ip{b.next_id()}_aux", kind="InnerProduct",
                               num_output=_log_uniform_int(rng, cfg.ip_width_min, cfg.ip_width_max)),
                     [branch])
        b.add(LayerSpec(name="out_aux", kind="Output"), [side])
    return build_graph(b.layers, b.bottoms, tag)


def sample_architecture(cfg: GenConfig, index: int, tag: str | None = None) -> NetworkGraph:
    """Shape-valid network, deterministic per (cfg.seed, index). Infeasible
    kernel/stride draws are rejected and resampled, up to 1000 attempts."""
    rng = derive_rng((cfg.seed, index), _TAG_ARCH)
    for _ in range(1000):
        try:
            g = _build_candidate(cfg, rng, tag)
            infer_shapes(g)
            return g
        except ShapeError:
            continue
    raise GenerationExhausted(
        f"no shape-valid network after 1000 attempts (seed={cfg.seed}, index={index}); "
        "check kernel sizes against input dimensions")


def _link(plant: PlantSpec, s: np.ndarray | float) -> np.ndarray | float:
    if plant.link == "logistic":
        return 1.0 / (1.0 + np.exp(-s))
    return np.clip(0.5 + s, 0.0, 1.0)


def _signal_sum(v: AttributeVector, plant: PlantSpec) -> float:
    if plant.stats is None:
        raise ArchAttrError("plant standardization stats unset; use PlantSpec.with_stats "
                            "or generate_population")
    s = 0.0
    for name, w in plant.signal.items():
        mean, std = plant.stats[name]
        z = 0.0 if std == 0 else (v.values[name] - mean) / std
        s += w * z
    return s


def planted_accuracy(v: AttributeVector, plant: PlantSpec, seed: SeedParts) -> float:
    """Accuracy in [0, 1] drawn from the planted model for one network."""
    rng = derive_rng(seed)
    if rng.random() < plant.broken_prob:
        return float(rng.uniform(plant.broken_low, plant.broken_high))
    acc = _link(plant, _signal_sum(v, plant))
    if plant.noise_std > 0:
        acc += rng.normal(0.0, plant.noise_std)
    return float(np.clip(acc, 0.0, 1.0))


def estimate_bayes_rate(table: AttributeTable, plant: PlantSpec, threshold: float) -> float:
    """Best achievable classification accuracy on a 50/50-balanced sample of
    this population, from the known generative model (Monte-Carlo over rows)."""
    if plant.stats is None:
        plant = plant.with_stats(table)
    s = np.array([_signal_sum(r, plant) for r in table.rows])
    base = np.asarray(_link(plant, s), dtype=np.float64)
    if plant.noise_std > 0:
        p_healthy_mode = 1.0 - ndtr((threshold - base) / plant.noise_std)
    else:
        p_healthy_mode = (base > threshold).astype(np.float64)
    width = plant.broken_high - plant.broken_low
    if width > 0:
        p_broken_above = np.clip((plant.broken_high - threshold) / width, 0.0, 1.0)
    else:
        p_broken_above = float(plant.broken_low > threshold)
    pi1 = (1.0 - plant.broken_prob) * p_healthy_mode + plant.broken_prob * p_broken_above
    prior = pi1.mean()
    if prior <= 0.0 or prior >= 1.0:
        raise ArchAttrError("population is single-class at this threshold")
    predict_healthy = pi1 > prior
    correct_h = float(pi1[predict_healthy].sum()) / (len(pi1) * prior)
    correct_b = float((1.0 - pi1)[~predict_healthy].sum()) / (len(pi1) * (1.0 - prior))
    return 0.5 * correct_h + 0.5 * correct_b


def generate_population(cfg: GenConfig, plant: PlantSpec, out_dir: str | Path,
                        n: int | None = None) -> AttributeTable:
    """Write n architecture files plus attribute and accuracy CSVs.

    Layout: <out_dir>/networks/net_#####.prototxt, attributes.csv (canonical
    columns + accuracy), accuracies.csv (network_id, accuracy), and
    generation.json recording the resolved configuration. Re-extracting the
    written files reproduces attributes.csv exactly.
    """
    n = cfg.population_size if n is None else n
    out = Path(out_dir)
    net_dir = out / "networks"
    net_dir.mkdir(parents=True, exist_ok=True)
    vectors = []
    for i in range(n):
        g = sample_architecture(cfg, i)
        network_id = f"net_{i:05d}"
        (net_dir / f"{network_id}.prototxt").write_text(serialize_network(g), encoding="utf-8")
        vectors.append(extract_attributes(g, network_id))
    table = AttributeTable(vectors)
    plant = plant.with_stats(table)
    for i, v in enumerate(vectors):
        v.accuracy = planted_accuracy(v, plant, (cfg.seed, i, _TAG_ACCURACY))
    table.write_csv(out / "attributes.csv", include_accuracy=True)
    acc_lines = ["network_id,accuracy"]
    acc_lines += [f"{v.network_id},{v.accuracy:.17g}" for v in vectors]
    (out / "accuracies.csv").write_text("\n".join(acc_lines) + "\n", encoding="utf-8")
    meta = {"schema_version": 1, "n": n, "config": cfg.to_dict(), "plant": plant.to_dict()}
    (out / "generation.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    return table
