"""Command-line driver: ``qel gen | train | eval | table``.

Every verb reads the same configuration (preset + JSON file + ``--set``
overrides) and works inside ``out_dir``:

    dataset.jsonl   gen
    checkpoint.json train
    results*.csv, summary*.json, timing*.json   eval
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from qel import datagen
from qel.ansatz import CircuitLayout, init_params
from qel.config import ConfigError, RunConfig, load_config, with_seed
from qel.evaluation import evaluate
from qel.gradient import GradMode
from qel.parallel import set_threads
from qel.statevector import CapacityError
from qel.training import NumericAbort, OptimizerConfig, load_checkpoint, save_checkpoint, train

EXIT_CONFIG, EXIT_CAPACITY, EXIT_NUMERIC = 2, 3, 4


def _log(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


# ---------------------------------------------------------------- pipeline


def generate(cfg: RunConfig) -> datagen.Dataset:
    if cfg.kind == "maxcut":
        ds = datagen.gen_maxcut(cfg.size, cfg.n_instances, cfg.seed_data)
    elif cfg.kind == "qap":
        ds = datagen.gen_qap(cfg.size, cfg.n_instances, cfg.seed_data, cfg.penalty)
    else:
        feats = datagen.load_node_features(cfg.node_features) if cfg.node_features else None
        ds = datagen.gen_bmp(
            cfg.size, cfg.d_node_features, cfg.n_instances, cfg.seed_data, cfg.penalty, cfg.density, feats
        )
    return datagen.split(ds, cfg.n_train, cfg.n_val, cfg.n_test, cfg.seed_data)


def dataset_path(cfg: RunConfig) -> Path:
    return Path(cfg.out_dir) / "dataset.jsonl"


def checkpoint_path(cfg: RunConfig) -> Path:
    return Path(cfg.out_dir) / "checkpoint.json"


def cmd_gen(cfg: RunConfig, dump_model: bool = False) -> datagen.Dataset:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ds = generate(cfg)
    datagen.save_jsonl(ds, dataset_path(cfg))
    manifest = {"config": asdict(cfg), "config_hash": cfg.hash(), "data_hash": cfg.data_hash(), "dataset_hash": ds.config_hash()}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    if dump_model:
        print(ds.instances[0].model().dump())
    _log(f"wrote {len(ds)} instances to {dataset_path(cfg)}")
    return ds


def load_or_generate(cfg: RunConfig) -> datagen.Dataset:
    """Reuse ``dataset.jsonl`` when its manifest matches the data-related config."""
    path, manifest = dataset_path(cfg), Path(cfg.out_dir) / "manifest.json"
    if path.exists() and manifest.exists():
        if json.loads(manifest.read_text()).get("data_hash") == cfg.data_hash():
            return datagen.load_jsonl(path)
        _log("dataset on disk does not match the config; regenerating")
    return cmd_gen(cfg)


def layout_for(cfg: RunConfig, ds: datagen.Dataset) -> CircuitLayout:
    return CircuitLayout.for_spec(ds.spec, cfg.p, cfg.strategy, cfg.encoder, ds.descriptor["d_x"])


def optimizer_for(cfg: RunConfig) -> OptimizerConfig:
    return OptimizerConfig(
        kind=cfg.optimizer, lr=cfg.lr, eta0=cfg.eta0, batch_size=cfg.batch_size, epochs=cfg.epochs, patience=cfg.patience
    )


def calibration(train_set, k: int = 8):
    """Covariate/coefficient sample used to put the encoder on the data's scale."""
    head = train_set[:k]
    return np.concatenate([i.covariates for i in head]), np.concatenate([i.y for i in head])


def cmd_train(cfg: RunConfig):
    ds = load_or_generate(cfg)
    tr, va = ds.subset("train"), ds.subset("val")
    layout = layout_for(cfg, ds)
    print(f"parameters: {layout.total}", flush=True)
    ckpt = checkpoint_path(cfg)
    start = None
    if ckpt.exists():
        state, h = load_checkpoint(ckpt)
        if h == cfg.hash():
            start = state
            _log(f"resuming from epoch {state.epoch}")
    if start is None:
        rng = np.random.default_rng(cfg.seed_init)
        start = init_params(layout, rng, calibration(tr), cfg.angle_scale)

    def on_epoch(state, rec):
        _log(
            f"epoch {rec['epoch']:3d}  train {rec['train_loss']:.6g}  val {rec['val_loss']:.6g}  "
            f"|g| {rec['grad_norm']:.4g}"
        )
        save_checkpoint(state, ckpt, cfg.hash())

    state = train(start, tr, va, optimizer_for(cfg), GradMode.parse(cfg.grad_mode), cfg.seed_train, on_epoch)
    save_checkpoint(state, ckpt, cfg.hash())
    return state


def cmd_eval(cfg: RunConfig, policy: str = "qel"):
    ds = load_or_generate(cfg)
    params = None
    if policy == "qel":
        ckpt = checkpoint_path(cfg)
        if not ckpt.exists():
            raise FileNotFoundError(f"no checkpoint at {ckpt}; run `qel train` first")
        state, h = load_checkpoint(ckpt)
        if h != cfg.hash():
            raise ConfigError("checkpoint was trained with a different config")
        params = state.best_params()
    t0 = time.perf_counter()
    report = evaluate(params, ds.subset("test"), cfg.shots, cfg.seed_eval, policy)
    elapsed = time.perf_counter() - t0
    suffix = "" if policy == "qel" else f"_{policy}"
    out = Path(cfg.out_dir)
    report.write_csv(out / f"results{suffix}.csv", ds.test)
    summary = {
        **report.summary(),
        "param_count": layout_for(cfg, ds).total,
        "policy": policy,
        "problem": cfg.problem,
        "encoder": cfg.encoder,
        "strategy": cfg.strategy,
        "p": cfg.p,
        "grad_mode": cfg.grad_mode,
        "config_hash": cfg.hash(),
        "data_hash": cfg.data_hash(),
        "seeds": cfg.seeds(),
    }
    (out / f"summary{suffix}.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    (out / f"timing{suffix}.json").write_text(json.dumps({"eval_seconds": elapsed}) + "\n")
    _log(f"mean regret {report.mean:.4f}  CI {report.ci[0]:.4f}..{report.ci[1]:.4f}")
    return summary


TABLE_COLUMNS = ("problem", "policy", "encoder", "strategy", "p", "param_count", "mean_regret", "ci_low", "ci_high", "fallback_rate")


def cmd_table(paths, csv_path=None) -> str:
    rows = []
    for p in paths:
        with open(p) as fh:
            rows.append(json.load(fh))
    keys = {(r["problem"], r["data_hash"]) for r in rows}
    if len(keys) > 1:
        raise ConfigError("summaries come from different problem presets or datasets; refusing to merge")
    lines = [TABLE_COLUMNS]
    for r in rows:
        lines.append((
            r["problem"], r["policy"], r["encoder"], r["strategy"], str(r["p"]), str(r["param_count"]),
            f"{r['mean_regret']:.4f}", f"{r['ci95'][0]:.4f}", f"{r['ci95'][1]:.4f}", f"{r['fallback_rate']:.3f}",
        ))
    widths = [max(len(str(row[i])) for row in lines) for i in range(len(TABLE_COLUMNS))]
    text = "\n".join("  ".join(str(c).ljust(w) for c, w in zip(row, widths)).rstrip() for row in lines)
    if csv_path:
        with open(csv_path, "w") as fh:
            fh.write("\n".join(",".join(map(str, row)) for row in lines) + "\n")
    return text


# ---------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qel", description="Contextual QAOA training and evaluation.")
    sub = ap.add_subparsers(dest="verb", required=True)
    for verb in ("gen", "train", "eval"):
        sp = sub.add_parser(verb)
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one config key")
        sp.add_argument("--seed", type=int, help="set every seed (data, init, train, eval)")
        sp.add_argument("--threads", type=int, help="worker threads")
        sp.add_argument("--problem", help="preset name")
        sp.add_argument("--out", dest="out_dir", help="output directory")
        if verb == "gen":
            sp.add_argument("--dump-model", action="store_true", help="print the first instance's Ising model")
        if verb == "train":
            sp.add_argument("--grad-mode", help="exact or shots:M")
        if verb == "eval":
            pol = sp.add_mutually_exclusive_group()
            pol.add_argument("--oracle-policy", action="store_true", help="decide with the hindsight optimum")
            pol.add_argument("--random-policy", action="store_true", help="decide uniformly at random")
    tp = sub.add_parser("table")
    tp.add_argument("summaries", nargs="*")
    tp.add_argument("--csv", help="also write the table as CSV")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.verb == "table":
            print(cmd_table(args.summaries, args.csv))
            return 0
        flags = {"problem": args.problem, "out_dir": args.out_dir, "threads": args.threads}
        if args.verb == "train":
            flags["grad_mode"] = args.grad_mode
        cfg = load_config(args.config, args.set, **flags)
        if args.seed is not None:
            cfg = with_seed(cfg, args.seed)
        set_threads(cfg.threads)
        if args.verb == "gen":
            cmd_gen(cfg, args.dump_model)
        elif args.verb == "train":
            cmd_train(cfg)
        else:
            policy = "oracle" if args.oracle_policy else "random" if args.random_policy else "qel"
            print(json.dumps(cmd_eval(cfg, policy), sort_keys=True))
        return 0
    except CapacityError as e:
        _log(f"capacity error: {e}")
        return EXIT_CAPACITY
    except NumericAbort as e:
        _log(f"numeric abort: {e}")
        return EXIT_NUMERIC
    except (ConfigError, FileNotFoundError) as e:
        _log(f"config error: {e}")
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
