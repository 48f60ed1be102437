"""Command-line front end.

Subcommands: datagen, train, eval, sweep, expressibility, noise, catalog.
Every command accepts ``--config`` (JSON), ``--seed``, ``--out`` and ``--jobs``;
explicit flags override config values.  Exit codes: 0 success, 2 configuration
error, 3 data error, 4 runtime failure.
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import os
import sys
from functools import partial
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from . import analysis, ansatz, dataset, models, noisestudy
from .errors import ConfigurationError, DataError, HQNNError, UsageError
from .parallel import ordered_map

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_RUNTIME = 0, 2, 3, 4

ALL_TEMPLATES = list(range(1, ansatz.NUM_TEMPLATES + 1))

DEFAULTS: Dict[str, Any] = {
    "dataset": {"csv": None, "synth": {"n": 468, "seed": 7}},
    "backbone": "strict",
    "circuit": {"type": "single", "template": 13, "levels": 2, "templates": None},
    "train": {"epochs": 300, "learning_rate": 1e-3, "batch_size": None, "patience": None,
              "loss_weights": [1.0] * 6},
    "metrics": {"num_splits": 5, "split_index": 0, "ratios": [0.6, 0.2, 0.2]},
    "expressibility": {"pairs": 5000, "bins": 75, "templates": ALL_TEMPLATES, "levels": [1, 2, 3, 4, 5]},
    "sweep": {"templates": ALL_TEMPLATES, "levels": [1, 2, 3, 4, 5], "mixed_levels": 2, "d_kl": True},
    "noise": {"grid": [list(g) for g in noisestudy.DEFAULT_GRID], "mode": "evaluate",
              "circuit": {"type": "single", "template": 13, "levels": 4, "templates": None}},
    "seed": 0,
    "out": "hqnn_out",
    "jobs": 1,
}

# stream identifiers for seed derivation
_SPLIT, _MODEL, _TRAIN, _EXPR = 1, 2, 3, 4


def derive_seed(seed: int, *keys: int) -> int:
    """Independent 32-bit seed for a (global seed, component, index...) tuple."""
    return int(np.random.SeedSequence([int(seed), *map(int, keys)]).generate_state(1)[0])


# -- configuration ---------------------------------------------------------------------

def _merge(base: dict, override: dict, where: str) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if key not in base:
            raise ConfigurationError(f"unknown config key {where}{key!r}")
        if isinstance(base[key], dict) and value is not None:
            if not isinstance(value, dict):
                raise ConfigurationError(f"config key {where}{key!r} must be an object")
            out[key] = _merge(base[key], value, f"{where}{key}.")
        else:
            out[key] = value
    return out


def load_config(path: Optional[str]) -> dict:
    if path is None:
        return copy.deepcopy(DEFAULTS)
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"{path}: cannot read config ({exc.strerror})") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path}: config must be a JSON object")
    return _merge(DEFAULTS, raw, "")


def _int_list(values, name) -> List[int]:
    if not isinstance(values, list) or not values:
        raise ConfigurationError(f"{name} must be a nonempty list")
    try:
        return [int(v) for v in values]
    except (TypeError, ValueError):
        raise ConfigurationError(f"{name} must contain integers") from None


def circuit_spec(d: dict):
    kind = d.get("type")
    if kind == "single":
        return ansatz.SingleTemplate(int(d["template"]), int(d["levels"]))
    if kind == "mixed":
        return ansatz.MixedSequence(tuple(_int_list(d.get("templates"), "circuit.templates")))
    raise ConfigurationError(f"circuit.type must be 'single' or 'mixed', got {kind!r}")


def validate_config(cfg: dict) -> dict:
    """Check every value before any compute; raises ConfigurationError."""
    try:
        if cfg["backbone"] not in models.BACKBONES:
            raise ConfigurationError(f"backbone must be one of {models.BACKBONES}")
        if cfg["backbone"] != "mlp":
            ansatz.compile(circuit_spec(cfg["circuit"]))
        ansatz.compile(circuit_spec(cfg["noise"]["circuit"]))
        train_config(cfg, 0)
        syn = cfg["dataset"]["synth"]
        if cfg["dataset"]["csv"] is None and int(syn["n"]) <= 0:
            raise ConfigurationError("dataset.synth.n must be positive")
        m = cfg["metrics"]
        if int(m["num_splits"]) <= 0 or not 0 <= int(m["split_index"]):
            raise ConfigurationError("metrics.num_splits must be positive and split_index nonnegative")
        ratios = [float(r) for r in m["ratios"]]
        if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
            raise ConfigurationError("metrics.ratios must be three nonnegative numbers summing to 1")
        e = cfg["expressibility"]
        if int(e["pairs"]) < 1000 or int(e["bins"]) < 2:
            raise ConfigurationError("expressibility needs pairs >= 1000 and bins >= 2")
        for name in ("templates", "levels"):
            _int_list(e[name], f"expressibility.{name}")
            _int_list(cfg["sweep"][name], f"sweep.{name}")
        for t in cfg["sweep"]["templates"] + e["templates"]:
            ansatz.build_template(int(t))
        for lv in cfg["sweep"]["levels"] + e["levels"] + [cfg["sweep"]["mixed_levels"]]:
            if not 1 <= int(lv) <= ansatz.MAX_LEVELS:
                raise ConfigurationError(f"levels must lie in 1..{ansatz.MAX_LEVELS}, got {lv}")
        if cfg["noise"]["mode"] not in noisestudy.MODES:
            raise ConfigurationError(f"noise.mode must be one of {noisestudy.MODES}")
        grid = cfg["noise"]["grid"]
        if not isinstance(grid, list) or not grid or any(len(g) != 2 for g in grid):
            raise ConfigurationError("noise.grid must be a nonempty list of [p1, p2] pairs")
        for g in grid:
            noisestudy._check_p(*g)
        if int(cfg["jobs"]) < 1:
            raise ConfigurationError("jobs must be at least 1")
        int(cfg["seed"])
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"invalid config value: {exc}") from None
    return cfg


def train_config(cfg: dict, seed: int) -> models.TrainConfig:
    t = cfg["train"]
    return models.TrainConfig(
        epochs=int(t["epochs"]),
        learning_rate=float(t["learning_rate"]),
        batch_size=None if t["batch_size"] is None else int(t["batch_size"]),
        seed=seed,
        loss_weights=tuple(float(w) for w in t["loss_weights"]),
        patience=None if t["patience"] is None else int(t["patience"]),
    )


def load_records(cfg: dict) -> List[dataset.DeviceRecord]:
    src = cfg["dataset"]
    if src["csv"] is not None:
        if not os.path.exists(src["csv"]):
            raise DataError(f"{src['csv']}: no such data file")
        return dataset.load_csv(src["csv"])
    return dataset.synthesize(int(src["synth"]["n"]), int(src["synth"]["seed"]))


def prepare_split(cfg: dict, records, split_index: int) -> dataset.PreparedData:
    seed = derive_seed(cfg["seed"], _SPLIT, split_index)
    return dataset.prepare(records, seed, tuple(float(r) for r in cfg["metrics"]["ratios"]))


# -- output helpers ------------------------------------------------------------------------

def _out_dir(cfg) -> Path:
    path = Path(cfg["out"])
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise HQNNError(f"{path}: cannot create output directory ({exc.strerror})") from None
    return path


def _write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_rows(path: Path, header: Sequence[str], rows: Sequence[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(r.get(h)) for h in header])


# -- commands ------------------------------------------------------------------------------

def cmd_datagen(cfg: dict, n: int, seed: int, path: str) -> Path:
    if n <= 0:
        raise ConfigurationError(f"n must be positive, got {n}")
    records = dataset.synthesize(n, seed)
    target = Path(path)
    if target.suffix.lower() != ".csv":
        target = _out_dir({"out": path}) / "devices.csv"
    elif target.parent != Path(""):
        target.parent.mkdir(parents=True, exist_ok=True)
    try:
        dataset.write_csv(records, target)
    except OSError as exc:
        raise HQNNError(f"{target}: cannot write ({exc.strerror})") from None
    return target


def _fit(cfg: dict, records, spec, backbone: str, split_index: int, model_index: int = 0):
    data = prepare_split(cfg, records, split_index)
    circuit = None if backbone == "mlp" else ansatz.compile(spec)
    model = models.build_model(backbone, circuit, seed=derive_seed(cfg["seed"], _MODEL, model_index, split_index))
    model.standardizer = data.standardizer
    tc = train_config(cfg, derive_seed(cfg["seed"], _TRAIN, model_index, split_index))
    model, history = models.train(model, data.arrays("train"), data.arrays("val"), tc)
    return model, history, data


def cmd_train(cfg: dict) -> Dict[str, Path]:
    records = load_records(cfg)
    out = _out_dir(cfg)
    split_index = int(cfg["metrics"]["split_index"])
    spec = circuit_spec(cfg["circuit"])
    model, history, data = _fit(cfg, records, spec, cfg["backbone"], split_index)
    model.metadata = {"split_seed": derive_seed(cfg["seed"], _SPLIT, split_index),
                      "ratios": list(cfg["metrics"]["ratios"])}
    reports = {w: models.evaluate(model, data.x[w], data.y_raw[w], data.standardizer).to_dict()
               for w in ("train", "val", "test")}
    paths = {"model": out / "model.json", "metrics": out / "metrics.json", "history": out / "history.csv"}
    models.save_model(model, paths["model"])
    _write_json(paths["metrics"], {
        "backbone": cfg["backbone"],
        "circuit": None if model.circuit is None else model.circuit.label,
        "param_count": None if model.circuit is None else model.circuit.num_params,
        "best_epoch": history.best_epoch,
        "metrics": reports,
        "config": {k: v for k, v in cfg.items() if k not in ("out", "jobs")},
    })
    _write_rows(paths["history"], ["epoch", "train_loss", "val_loss"],
                [{"epoch": i, "train_loss": a, "val_loss": b}
                 for i, (a, b) in enumerate(zip(history.train_loss, history.val_loss))])
    return paths


def _model_split(cfg: dict, model, records) -> dataset.PreparedData:
    meta = getattr(model, "metadata", None) or {}
    seed = meta.get("split_seed", derive_seed(cfg["seed"], _SPLIT, int(cfg["metrics"]["split_index"])))
    ratios = tuple(meta.get("ratios", cfg["metrics"]["ratios"]))
    data = dataset.prepare(records, int(seed), ratios)
    if model.standardizer is not None:
        data.standardizer = model.standardizer
        for w in ("train", "val", "test"):
            part = data.assignment.select(records, w)
            if part:
                data.x[w] = model.standardizer.transform_features(part)
                data.y[w] = model.standardizer.transform_targets(part)
    return data


def cmd_eval(cfg: dict, model_path: str, which: str = "test") -> Path:
    model = _load_model(model_path)
    records = load_records(cfg)
    out = _out_dir(cfg)
    if which == "all":
        if model.standardizer is None:
            raise UsageError("model has no fitted standardizer")
        x = model.standardizer.transform_features(records)
        y_raw = dataset.as_arrays(records)[1]
        report = models.evaluate(model, x, y_raw, model.standardizer)
    else:
        data = _model_split(cfg, model, records)
        if data.x[which].shape[0] == 0:
            raise DataError(f"{which} split is empty")
        report = models.evaluate(model, data.x[which], data.y_raw[which], data.standardizer)
    path = out / "eval_metrics.json"
    _write_json(path, {"split": which, "model": str(model_path), "metrics": report.to_dict()})
    return path


def _load_model(path):
    if not os.path.exists(path):
        raise DataError(f"{path}: no such model file")
    return models.load_model(path)


SWEEP_HEADER = ("index", "label", "templates", "levels", "backbone", "param_count", "depth", "two_qubit_count",
                "entangler_family", "d_kl", "overall_nrmse", "overall_r2", "status", "error")


def _sweep_row(item, cfg, records):
    index, spec_doc, backbone = item
    spec = models.spec_from_dict(spec_doc)
    row: Dict[str, Any] = {"index": index, "backbone": backbone, "status": "ok"}
    try:
        circuit = ansatz.compile(spec)
        desc = circuit.descriptors
        row.update(label=circuit.label, param_count=desc.param_count, depth=desc.depth,
                   two_qubit_count=desc.two_qubit_gate_count, entangler_family=desc.entangler_family)
        if isinstance(spec, ansatz.SingleTemplate):
            row.update(templates=str(spec.template), levels=spec.levels)
        else:
            row.update(templates=" ".join(map(str, spec.templates)), levels=len(spec.templates))
        if cfg["sweep"]["d_kl"]:
            e = cfg["expressibility"]
            row["d_kl"] = analysis.estimate_expressibility(
                circuit, int(e["pairs"]), int(e["bins"]), derive_seed(cfg["seed"], _EXPR, index))
        nrmse, r2 = [], []
        for k in range(int(cfg["metrics"]["num_splits"])):
            model, _, data = _fit(cfg, records, spec, backbone, k, model_index=index)
            rep = models.evaluate(model, data.x["test"], data.y_raw["test"], data.standardizer)
            nrmse.append(rep.overall_nrmse)
            r2.append(rep.overall_r2)
        row.update(overall_nrmse=float(np.mean(nrmse)), overall_r2=float(np.mean(r2)))
    except (HQNNError, FloatingPointError) as exc:
        row.update(status="failed", error=f"{type(exc).__name__}: {exc}")
    return row


def sweep_items(cfg: dict, mode: str):
    sw = cfg["sweep"]
    if mode == "single":
        return [(i, {"type": "single", "template": int(t), "levels": int(lv)}, "strict")
                for i, (t, lv) in enumerate((t, lv) for t in sw["templates"] for lv in sw["levels"])]
    if mode == "mixed":
        depth = int(sw["mixed_levels"])
        pairs = [(a, b) for a in sw["templates"] for b in sw["templates"]]
        items = []
        for i, (a, b) in enumerate(pairs):
            # alternate the ordered pair up to the requested depth; depth 2 is the pair itself
            seq = ([int(a), int(b)] * depth)[:depth]
            items.append((i, {"type": "mixed", "templates": seq}, "dual"))
        return items
    raise ConfigurationError(f"sweep mode must be 'single' or 'mixed', got {mode!r}")


def cmd_sweep(cfg: dict, mode: str) -> Dict[str, Path]:
    items = sweep_items(cfg, mode)
    records = load_records(cfg)
    out = _out_dir(cfg)
    rows = ordered_map(partial(_sweep_row, cfg=cfg, records=records), items, int(cfg["jobs"]))
    paths = {"results": out / f"sweep_{mode}.csv"}
    _write_rows(paths["results"], SWEEP_HEADER, rows)
    if mode == "single":
        ok = [r for r in rows if r["status"] == "ok"]
        ablation_rows = [analysis.AblationRow(r["label"], int(r["templates"]), r["levels"], r["param_count"],
                                              r["depth"], r["two_qubit_count"],
                                              r["d_kl"] if r.get("d_kl") is not None else float("nan"),
                                              r["entangler_family"], r["overall_nrmse"]) for r in ok]
        paths["ablation"] = out / "ablation.json"
        if len(ablation_rows) >= 10 and cfg["sweep"]["d_kl"]:
            report = analysis.ablation_table(ablation_rows).to_dict()
        else:
            report = {"n_rows": len(ablation_rows), "correlations": None,
                      "notes": ["ablation needs at least 10 successful rows with d_kl"]}
        _write_json(paths["ablation"], report)
    return paths


def cmd_expressibility(cfg: dict) -> Path:
    e = cfg["expressibility"]
    items = [(i, int(t), int(lv)) for i, (t, lv) in
             enumerate((t, lv) for t in e["templates"] for lv in e["levels"])]
    rows = ordered_map(partial(_expr_row, cfg=cfg), items, int(cfg["jobs"]))
    path = _out_dir(cfg) / "expressibility.csv"
    _write_rows(path, ["template", "levels", "param_count", "entangler_family", "d_kl"], rows)
    return path


def _expr_row(item, cfg):
    index, t, lv = item
    e = cfg["expressibility"]
    circuit = ansatz.compile(ansatz.SingleTemplate(t, lv))
    d = analysis.estimate_expressibility(circuit, int(e["pairs"]), int(e["bins"]), derive_seed(cfg["seed"], _EXPR, index))
    return {"template": t, "levels": lv, "param_count": circuit.num_params,
            "entangler_family": circuit.descriptors.entangler_family, "d_kl": d}


def cmd_noise(cfg: dict, model_path: Optional[str]) -> Dict[str, Path]:
    records = load_records(cfg)
    out = _out_dir(cfg)
    mode = cfg["noise"]["mode"]
    grid = [tuple(float(p) for p in g) for g in cfg["noise"]["grid"]]
    if model_path is not None:
        model = _load_model(model_path)
        data = _model_split(cfg, model, records)
        if mode == "retrain":
            fresh = models.build_model(model.kind, model.circuit, seed=derive_seed(cfg["seed"], _MODEL, 0, 0))
            fresh.standardizer = model.standardizer
            model = fresh
    else:
        spec = circuit_spec(cfg["noise"]["circuit"])
        if mode == "retrain":
            data = prepare_split(cfg, records, int(cfg["metrics"]["split_index"]))
            model = models.build_model(cfg["backbone"], ansatz.compile(spec),
                                       seed=derive_seed(cfg["seed"], _MODEL, 0, 0))
        else:
            model, _, data = _fit(cfg, records, spec, cfg["backbone"], int(cfg["metrics"]["split_index"]))
    tc = train_config(cfg, derive_seed(cfg["seed"], _TRAIN, 0, 0))
    points = noisestudy.noise_sweep(model, data, grid, mode, tc, int(cfg["jobs"]))
    paths = {"grid": out / "noise_grid.csv", "delta": out / "noise_delta.csv"}
    noisestudy.write_grid_csv(points, paths["grid"])
    noisestudy.write_delta_csv(points, paths["delta"])
    return paths


def cmd_catalog(cfg: dict) -> Path:
    path = _out_dir(cfg) / "catalog.csv"
    ansatz.write_catalog(path)
    return path


# -- argument parsing ----------------------------------------------------------------------

def _grid_arg(text: str):
    try:
        pts = [[float(v) for v in part.split(",")] for part in text.split(";") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid grid {text!r}; use 'p1,p2;p1,p2'") from None
    if not pts or any(len(p) != 2 for p in pts):
        raise argparse.ArgumentTypeError(f"invalid grid {text!r}; use 'p1,p2;p1,p2'")
    return pts


def _int_list_arg(text: str):
    try:
        out = []
        for part in text.split(","):
            if "-" in part:
                a, b = part.split("-")
                out.extend(range(int(a), int(b) + 1))
            else:
                out.append(int(part))
        return out
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config; flags override its values")
    common.add_argument("--seed", type=int, help="global seed")
    common.add_argument("--out", help="output directory (datagen: CSV path or directory)")
    common.add_argument("--jobs", type=int, help="parallel worker processes")

    training = argparse.ArgumentParser(add_help=False)
    training.add_argument("--data", help="device CSV (default: synthetic data from the config)")
    training.add_argument("--backbone", choices=models.BACKBONES)
    training.add_argument("--template", type=int)
    training.add_argument("--levels", type=int)
    training.add_argument("--mixed", type=_int_list_arg, help="mixed template sequence, e.g. 13,5")
    training.add_argument("--epochs", type=int)
    training.add_argument("--lr", type=float)
    training.add_argument("--batch-size", type=int)
    training.add_argument("--num-splits", type=int)
    training.add_argument("--split-index", type=int)

    p = argparse.ArgumentParser(prog="hqnn", description="Hybrid quantum-classical regression toolkit")
    sub = p.add_subparsers(dest="command", required=True)
    g = sub.add_parser("datagen", parents=[common], help="write a synthetic device CSV")
    g.add_argument("--n", type=int, default=468)
    sub.add_parser("train", parents=[common, training], help="train a model and write metrics")
    e = sub.add_parser("eval", parents=[common, training], help="evaluate a saved model")
    e.add_argument("--model", required=True)
    e.add_argument("--split", choices=("train", "val", "test", "all"), default="test")
    s = sub.add_parser("sweep", parents=[common, training], help="single-template or mixed circuit sweep")
    s.add_argument("--mode", choices=("single", "mixed"), default="single")
    s.add_argument("--templates", type=_int_list_arg)
    s.add_argument("--sweep-levels", type=_int_list_arg)
    s.add_argument("--no-dkl", action="store_true", help="skip expressibility estimates")
    x = sub.add_parser("expressibility", parents=[common], help="D_KL to Haar per template and depth")
    x.add_argument("--templates", type=_int_list_arg)
    x.add_argument("--level-range", type=_int_list_arg)
    x.add_argument("--pairs", type=int)
    x.add_argument("--bins", type=int)
    n = sub.add_parser("noise", parents=[common, training], help="noise-grid evaluation or retraining")
    n.add_argument("--model")
    n.add_argument("--grid", type=_grid_arg, help="'p1,p2;p1,p2;...'")
    n.add_argument("--mode", choices=noisestudy.MODES)
    sub.add_parser("catalog", parents=[common], help="template descriptor catalog")
    return p


def _apply_flags(cfg: dict, args) -> dict:
    def put(path, value):
        if value is None:
            return
        node = cfg
        for k in path[:-1]:
            node = node[k]
        node[path[-1]] = value

    put(("seed",), args.seed)
    put(("out",), args.out)
    put(("jobs",), args.jobs)
    get = lambda name: getattr(args, name, None)
    put(("dataset", "csv"), get("data"))
    put(("backbone",), get("backbone"))
    if get("mixed") is not None:
        cfg["circuit"] = {"type": "mixed", "template": None, "levels": None, "templates": get("mixed")}
    elif get("template") is not None or get("levels") is not None:
        c = cfg["circuit"]
        if c["type"] != "single":
            cfg["circuit"] = c = {"type": "single", "template": 13, "levels": 2, "templates": None}
        put(("circuit", "template"), get("template"))
        put(("circuit", "levels"), get("levels"))
        if args.command == "noise":
            cfg["noise"]["circuit"] = copy.deepcopy(c)
    put(("train", "epochs"), get("epochs"))
    put(("train", "learning_rate"), get("lr"))
    put(("train", "batch_size"), get("batch_size"))
    put(("metrics", "num_splits"), get("num_splits"))
    put(("metrics", "split_index"), get("split_index"))
    if args.command == "sweep":
        put(("sweep", "templates"), get("templates"))
        put(("sweep", "levels"), get("sweep_levels"))
        if get("no_dkl"):
            cfg["sweep"]["d_kl"] = False
    if args.command == "expressibility":
        put(("expressibility", "templates"), get("templates"))
        put(("expressibility", "levels"), get("level_range"))
        put(("expressibility", "pairs"), get("pairs"))
        put(("expressibility", "bins"), get("bins"))
    if args.command == "noise":
        put(("noise", "grid"), get("grid"))
        put(("noise", "mode"), get("mode"))
    return cfg


def run(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = validate_config(_apply_flags(load_config(args.config), args))
    cmd = args.command
    if cmd == "datagen":
        seed = cfg["seed"] if args.seed is not None else int(cfg["dataset"]["synth"]["seed"])
        out = args.out if args.out is not None else os.path.join(cfg["out"], "devices.csv")
        written = {"data": cmd_datagen(cfg, args.n, seed, out)}
    elif cmd == "train":
        written = cmd_train(cfg)
    elif cmd == "eval":
        written = {"metrics": cmd_eval(cfg, args.model, args.split)}
    elif cmd == "sweep":
        written = cmd_sweep(cfg, args.mode)
    elif cmd == "expressibility":
        written = {"expressibility": cmd_expressibility(cfg)}
    elif cmd == "noise":
        written = cmd_noise(cfg, args.model)
    else:
        written = {"catalog": cmd_catalog(cfg)}
    for name, path in written.items():
        print(f"{name}: {path}")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        code = run(argv)
    except (ConfigurationError, UsageError) as exc:
        print(f"hqnn: configuration error: {exc}", file=sys.stderr)
        code = EXIT_CONFIG
    except DataError as exc:
        print(f"hqnn: data error: {exc}", file=sys.stderr)
        code = EXIT_DATA
    except (HQNNError, OSError, ArithmeticError) as exc:
        print(f"hqnn: runtime failure: {exc}", file=sys.stderr)
        code = EXIT_RUNTIME
    return code


if __name__ == "__main__":
    sys.exit(main())
