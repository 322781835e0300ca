"""Batch command-line front end: gen, extract, classify, prune, regress.

Exit codes: 0 success, 1 fatal error, 2 configuration/usage error,
3 partial success (extract only).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .attributes import ATTRIBUTE_NAMES, AttributeTable
from .config import parse_bool, parse_float, parse_int, read_kv
from .dataset import Dataset, balance_classes, train_test_split
from .errors import (
    ArchAttrError,
    ConfigError,
    DegenerateSplit,
    DegenerateVariance,
    GenerationExhausted,
    NonPositiveValue,
    TooFewSamples,
    Underdetermined,
)
from .forest import ModelSpec, feature_importances, fit_ensemble, kfold_cv, prune_loop
from .graph import parse_network
from .popgen import GenConfig, PlantSpec, generate_population
from .regression import boxcox_lambda, boxcox_transform, interaction_expand, ols_fit, standardize
from .report import build_report, jsonable, write_report

_USAGE_ERRORS = (ConfigError, DegenerateSplit, TooFewSamples, Underdetermined,
                 NonPositiveValue, DegenerateVariance, GenerationExhausted)

# fixed tags appended to the master seed, one per stochastic stage
_SEED_TAGS = {
    "balance": 101,
    "split": 102,
    "fit_rf": 103,
    "fit_ert": 104,
    "cv_rf": 105,
    "cv_ert": 106,
    "prune_rf": 107,
    "prune_ert": 108,
}

_DEFAULTS = {
    "seed": 0,
    "threshold": None,
    "model": "both",
    "trees": 100,
    "folds": 5,
    "test_fraction": 0.2,
    "base_only": False,
    "n": None,
}


def _resolve(args: argparse.Namespace, keys: list[str]) -> dict:
    """Explicit flags beat config-file values beat built-in defaults."""
    file_values: dict[str, str] = {}
    if getattr(args, "config", None):
        file_values = read_kv(args.config)
    resolved: dict = {}
    for key in keys:
        flag = getattr(args, key, None)
        if flag is not None:
            resolved[key] = flag
        elif key in file_values:
            raw = file_values[key]
            if key in ("seed", "trees", "folds", "n"):
                resolved[key] = parse_int(key, raw)
            elif key in ("threshold", "test_fraction"):
                resolved[key] = parse_float(key, raw)
            elif key == "base_only":
                resolved[key] = parse_bool(key, raw)
            else:
                resolved[key] = raw
        else:
            resolved[key] = _DEFAULTS.get(key)
    if "threshold" in keys and resolved["threshold"] is None:
        raise ConfigError("--threshold is required (set a flag or config value)")
    if "model" in keys and resolved["model"] not in ("rf", "ert", "both"):
        raise ConfigError(f"--model must be rf, ert, or both, got {resolved['model']!r}")
    return resolved


def _model_kinds(model: str) -> list[str]:
    return ["rf", "ert"] if model == "both" else [model]


def _seed_map(seed: int, stages: list[str]) -> dict:
    return {"master": seed, **{s: [seed, _SEED_TAGS[s]] for s in stages}}


# --- gen ----------------------------------------------------------------------


def _cmd_gen(args: argparse.Namespace) -> int:
    pairs = read_kv(args.config) if args.config else {}
    cfg = GenConfig.from_kv(pairs)
    plant = PlantSpec.from_kv(pairs)
    if args.seed is not None:
        cfg = GenConfig.from_kv({**pairs, "seed": str(args.seed)})
    n = args.n if args.n is not None else cfg.population_size
    if n < 1:
        raise ConfigError(f"population size must be >= 1, got {n}")
    table = generate_population(cfg, plant, args.output, n)
    print(f"wrote {len(table)} networks and attribute CSVs under {args.output}")
    return 0


# --- extract --------------------------------------------------------------------


def _collect_input_files(inputs: list[str]) -> list[Path]:
    files: list[Path] = []
    for item in inputs:
        p = Path(item)
        if p.is_dir():
            files.extend(sorted(p.glob("*.prototxt")))
        else:
            files.append(p)
    return files


def _cmd_extract(args: argparse.Namespace) -> int:
    from .attributes import extract_attributes

    files = _collect_input_files(args.input)
    if not files:
        raise ConfigError("no input files found")
    accuracies: dict[str, float] | None = None
    if args.accuracies:
        accuracies = {}
        lines = Path(args.accuracies).read_text(encoding="utf-8").splitlines()
        if not lines or lines[0] != "network_id,accuracy":
            raise ConfigError(f"{args.accuracies}: expected header 'network_id,accuracy'")
        for ln in lines[1:]:
            if ln:
                nid, acc = ln.split(",", 1)
                accuracies[nid] = float(acc)
    rows = []
    failures = []
    for path in files:
        network_id = path.stem
        try:
            graph = parse_network(path.read_text(encoding="utf-8"))
            acc = None
            if accuracies is not None:
                if network_id not in accuracies:
                    raise ConfigError(f"no accuracy recorded for '{network_id}'")
                acc = accuracies[network_id]
            rows.append(extract_attributes(graph, network_id, acc))
        except ArchAttrError as e:
            failures.append({"file": str(path), "error": type(e).__name__, "message": str(e)})
    if rows:
        AttributeTable(rows).write_csv(args.output, include_accuracy=accuracies is not None)
    sidecar = Path(str(args.output) + ".errors.json")
    if failures:
        sidecar.write_text(json.dumps(failures, indent=2) + "\n", encoding="utf-8")
        print(f"{len(failures)} of {len(files)} files failed; details in {sidecar}", file=sys.stderr)
        return 3 if rows else 1
    print(f"extracted {len(rows)} networks to {args.output}")
    return 0


# --- classify / prune -------------------------------------------------------------


def _load_balanced(path: str, threshold: float, seed: int) -> tuple[Dataset, dict]:
    table = AttributeTable.read_csv(path)
    d = Dataset.from_table(table, seed)
    balanced = balance_classes(d, threshold, (seed, _SEED_TAGS["balance"]))
    info = {
        "rows_total": d.n_rows,
        "rows_balanced": balanced.n_rows,
        "healthy_total": int(np.sum(d.y > threshold)),
        "broken_total": int(np.sum(d.y <= threshold)),
        "threshold": threshold,
    }
    return balanced, info


def _cmd_classify(args: argparse.Namespace) -> int:
    cfg = _resolve(args, ["threshold", "seed", "model", "trees", "folds", "test_fraction"])
    cfg = {"input": args.input, "output": args.output, **cfg, "config": args.config}
    seed = cfg["seed"]
    balanced, data_info = _load_balanced(args.input, cfg["threshold"], seed)
    train, test = train_test_split(balanced, cfg["test_fraction"], (seed, _SEED_TAGS["split"]))
    models = {}
    for kind in _model_kinds(cfg["model"]):
        spec = ModelSpec(kind=kind, n_trees=cfg["trees"])
        cv_mean, cv_std = kfold_cv(spec, train, cfg["folds"], (seed, _SEED_TAGS[f"cv_{kind}"]))
        ens = fit_ensemble(spec, train, (seed, _SEED_TAGS[f"fit_{kind}"]))
        imp_mean, imp_se = feature_importances(ens)
        models[kind] = {
            "spec": spec.to_dict(),
            "cv_mean": cv_mean,
            "cv_std": cv_std,
            "cv_se": cv_std / np.sqrt(cfg["folds"]),
            "test_accuracy": ens.accuracy(test),
            "oob_accuracy": ens.oob_accuracy,
            "importances": {
                "names": list(train.columns),
                "mean": imp_mean,
                "se": imp_se,
            },
        }
    stages = ["balance", "split"] + [f"{s}_{k}" for k in _model_kinds(cfg["model"]) for s in ("fit", "cv")]
    payload = {
        "dataset": data_info,
        "train_rows": train.n_rows,
        "test_rows": test.n_rows,
        "models": models,
    }
    write_report(args.output, build_report("classify", cfg, _seed_map(seed, stages), payload))
    print(f"classification report written to {args.output}")
    return 0


def _cmd_prune(args: argparse.Namespace) -> int:
    cfg = _resolve(args, ["threshold", "seed", "model", "trees", "folds", "test_fraction"])
    cfg = {"input": args.input, "output": args.output, **cfg, "config": args.config}
    seed = cfg["seed"]
    balanced, data_info = _load_balanced(args.input, cfg["threshold"], seed)
    train, _ = train_test_split(balanced, cfg["test_fraction"], (seed, _SEED_TAGS["split"]))
    models = {}
    curve_lines = ["model,features_removed,removed_feature,cv_mean,cv_std"]
    for kind in _model_kinds(cfg["model"]):
        spec = ModelSpec(kind=kind, n_trees=cfg["trees"])
        curve = prune_loop(spec, train, cfg["folds"], (seed, _SEED_TAGS[f"prune_{kind}"]))
        models[kind] = {
            "spec": spec.to_dict(),
            "ranking": list(curve.ranking),
            "curve": [
                {
                    "features_removed": pt.features_removed,
                    "removed_feature": pt.removed_feature,
                    "cv_mean": pt.cv_mean,
                    "cv_std": pt.cv_std,
                }
                for pt in curve.points
            ],
        }
        for pt in curve.points:
            curve_lines.append(
                f"{kind},{pt.features_removed},{pt.removed_feature or ''},"
                f"{pt.cv_mean:.17g},{pt.cv_std:.17g}")
    stages = ["balance", "split"] + [f"prune_{k}" for k in _model_kinds(cfg["model"])]
    payload = {"dataset": data_info, "train_rows": train.n_rows, "models": models}
    write_report(args.output, build_report("prune", cfg, _seed_map(seed, stages), payload))
    curve_path = Path(args.output).with_name(Path(args.output).stem + "_curve.csv")
    curve_path.write_text("\n".join(curve_lines) + "\n", encoding="utf-8")
    print(f"prune report written to {args.output} (curve CSV: {curve_path})")
    return 0


# --- regress ---------------------------------------------------------------------


def _cmd_regress(args: argparse.Namespace) -> int:
    cfg = _resolve(args, ["threshold", "seed", "base_only"])
    cfg = {"input": args.input, "output": args.output, **cfg, "config": args.config}
    table = AttributeTable.read_csv(args.input)
    d = Dataset.from_table(table, cfg["seed"])
    healthy = np.flatnonzero(d.y > cfg["threshold"])
    if len(healthy) < 10:
        raise TooFewSamples(f"only {len(healthy)} healthy rows above threshold {cfg['threshold']}")
    X = d.X[healthy]
    y_raw = d.y[healthy]
    lam = boxcox_lambda(y_raw)
    y = boxcox_transform(y_raw, lam)
    names = list(d.columns)
    if not cfg["base_only"]:
        X, names = interaction_expand(X, names)
    Z, _, _, constant = standardize(X)
    kept = [j for j in range(Z.shape[1]) if not constant[j]]
    dropped_constant = [names[j] for j in range(Z.shape[1]) if constant[j]]
    fit = ols_fit(Z[:, kept], y, [names[j] for j in kept], boxcox_lam=lam)
    coef_table = [
        {"name": n, "coef": c, "stderr": s, "t": t, "p": p}
        for n, c, s, t, p in fit.by_abs_coef()
    ]
    payload = {
        "dataset": {
            "rows_total": d.n_rows,
            "healthy_rows": int(len(healthy)),
            "threshold": cfg["threshold"],
        },
        "ols": {
            "boxcox_lambda": lam,
            "r_squared": fit.r_squared,
            "adj_r_squared": fit.adj_r_squared,
            "n_columns": len(kept),
            "dropped_constant": dropped_constant,
            "dropped_rank_deficient": fit.dropped,
            "coefficients": coef_table,
            "pvalues": {"names": fit.names, "values": fit.pvalues},
            "residuals": fit.residuals,
            "fitted": fit.fitted,
            "qq": {"theoretical": fit.qq_theoretical, "sample": fit.qq_sample},
        },
    }
    write_report(args.output, build_report("regress", cfg, {"master": cfg["seed"]}, payload))
    print(f"regression report written to {args.output} (R^2 = {fit.r_squared:.4f})")
    return 0


# --- wiring ---------------------------------------------------------------------


def _add_common_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--threshold", type=float, default=None,
                   help="healthy/broken accuracy threshold (required)")
    p.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    p.add_argument("--model", choices=["rf", "ert", "both"], default=None)
    p.add_argument("--trees", type=int, default=None, help="trees per ensemble (default 100)")
    p.add_argument("--folds", type=int, default=None, help="cross-validation folds (default 5)")
    p.add_argument("--test-fraction", dest="test_fraction", type=float, default=None)
    p.add_argument("--config", default=None, help="key=value config file merged under flags")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="archattr",
        description="Characterize network architectures and predict performance before training.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic architecture population")
    p.add_argument("--config", default=None, help="generator/plant key=value config file")
    p.add_argument("--n", type=int, default=None, help="population size override")
    p.add_argument("--seed", type=int, default=None, help="generator seed override")
    p.add_argument("--output", required=True, help="output directory")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("extract", help="extract attribute vectors from architecture files")
    p.add_argument("--input", action="append", required=True,
                   help="architecture file or directory of *.prototxt (repeatable)")
    p.add_argument("--accuracies", default=None,
                   help="optional network_id,accuracy CSV to merge into the output")
    p.add_argument("--output", required=True, help="attribute CSV path")
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("classify", help="broken/healthy classification with RF and ERT")
    p.add_argument("--input", required=True, help="attribute CSV with accuracy column")
    p.add_argument("--output", required=True, help="JSON report path")
    _add_common_model_flags(p)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("prune", help="fixed-order importance pruning curve")
    p.add_argument("--input", required=True, help="attribute CSV with accuracy column")
    p.add_argument("--output", required=True, help="JSON report path")
    _add_common_model_flags(p)
    p.set_defaults(func=_cmd_prune)

    p = sub.add_parser("regress", help="Box-Cox + interactions + OLS on healthy networks")
    p.add_argument("--input", required=True, help="attribute CSV with accuracy column")
    p.add_argument("--output", required=True, help="JSON report path")
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--base-only", dest="base_only", action="store_const", const=True, default=None,
                   help="skip interaction expansion")
    p.add_argument("--config", default=None)
    p.set_defaults(func=_cmd_regress)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except _USAGE_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ArchAttrError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
