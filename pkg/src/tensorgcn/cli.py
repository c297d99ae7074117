"""Command line: ``tensorgcn {verify,train,sweep,eval}``.

Exit codes: 0 success, 1 a verified property failed, 2 configuration error,
3 data error, 4 numeric failure (e.g. divergence), 5 checkpoint error.
"""
from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

from .config import DATA_ENV, ExperimentConfig
from .data import DATASETS, find_dataset, load_graph
from .errors import CheckpointError, ConfigError, DataError, NumericError
from .experiment import prepare, run, score_test
from .training import load_checkpoint, save_checkpoint, write_history
from .verify import SUITES

EXIT_OK, EXIT_PROPERTY, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC, EXIT_CHECKPOINT = range(6)

log = logging.getLogger("tensorgcn")


def _add_config_args(p):
    p.add_argument("--config", help="JSON config file; flags below override it")
    p.add_argument("--dataset", choices=sorted(DATASETS))
    p.add_argument("--data-path", help=f"dataset file or directory (default ${DATA_ENV})")
    p.add_argument("--split", type=int, nargs=3, metavar=("TRAIN", "VAL", "TEST"))
    p.add_argument("--bandwidth", type=int)
    p.add_argument("--edge-life", type=int)
    p.add_argument("--out-features", type=int)
    p.add_argument("--layers", type=int)
    p.add_argument("--symmetric", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--lr", type=float)
    p.add_argument("--momentum", type=float)
    p.add_argument("--iterations", type=int)
    p.add_argument("--eval-interval", type=int)
    p.add_argument("--alpha", type=float, nargs="+", dest="alpha_grid",
                   help="minority-class weights a0 (two-class datasets)")
    p.add_argument("--seed", type=int)
    p.add_argument("--log-features", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--cache-dir")


def build_config(args) -> ExperimentConfig:
    base = ExperimentConfig.load(args.config).to_dict() if args.config else {}
    overrides = {k: getattr(args, k) for k in (
        "dataset", "data_path", "split", "bandwidth", "edge_life", "out_features", "layers",
        "symmetric", "lr", "momentum", "iterations", "eval_interval", "alpha_grid", "seed",
        "log_features", "cache_dir") if getattr(args, k, None) is not None}
    base.update(overrides)
    return ExperimentConfig.from_dict(base)


def _write_outputs(out, config, report):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    config.save(out / "config.json")
    res = report.result
    extra = {"config_hash": config.model_hash(), "alpha": list(report.selected_alpha),
             "best_iteration": res.best_iteration, "best_val": res.best_val,
             "test_metric": report.test_metric}
    state = res.state
    best_state = type(state)(res.best_params, state.velocity, res.best_iteration, state.seed)
    save_checkpoint(out / "checkpoint.json", best_state, extra)
    write_history(out / "history.csv", res.history)
    (out / "report.txt").write_text(report.to_text())
    if len(report.rows) > 1:
        (out / "sweep.csv").write_text(report.sweep_csv())


def cmd_verify(args) -> int:
    scopes = list(SUITES) if args.scope == "all" else [args.scope]
    failed = False
    for scope in scopes:
        print(f"== {scope} ==")
        if scope == "algebra":
            results = SUITES[scope](trials=args.trials, seed=args.seed, inject_fault=args.inject_fault)
        elif scope == "spectral":
            results = SUITES[scope](trials=args.trials, seed=args.seed,
                                    datasets=_spectral_datasets(args), max_nodes=args.max_nodes)
        else:
            results = SUITES[scope](seed=args.seed)
        for r in results:
            print(r.line())
            failed |= not r.passed
    print("FAILED" if failed else "all properties passed")
    return EXIT_PROPERTY if failed else EXIT_OK


def _spectral_datasets(args):
    if not args.data_path:
        return {}
    out = {}
    for kind in args.datasets:
        try:
            g = load_graph(kind, find_dataset(kind, args.data_path))
        except DataError as exc:
            print(f"[SKIP] {kind}: {exc}")
            continue
        out[kind] = (g, DATASETS[kind].split[0], args.bandwidth)
    return out


def cmd_train(args) -> int:
    config = build_config(args)
    alphas = config.alphas()
    if args.command == "train":
        alphas = alphas[:1]
    report = run(config, alphas=alphas)
    _write_outputs(args.out, config, report)
    print(report.to_text(), end="")
    return EXIT_OK


def cmd_eval(args) -> int:
    config = build_config(args)
    state, extra = load_checkpoint(args.checkpoint)
    if extra.get("config_hash") not in (None, config.model_hash()):
        warnings.warn("checkpoint was trained with a different data/model configuration")
        print("warning: config does not match the checkpoint's training config", file=sys.stderr)
    data = prepare(config)
    expected = [data.train.num_features] + config.layer_sizes
    got = [state.params.layers[0].shape[0]] + [w.shape[1] for w in state.params.layers]
    if expected != got or state.params.num_classes != data.num_classes:
        raise CheckpointError(f"checkpoint shapes {got} do not match config {expected}")
    value = score_test(config, data, state.params)
    print(f"test {config.metric}: {value!r}")
    return EXIT_OK


def make_parser():
    parser = argparse.ArgumentParser(prog="tensorgcn", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run algebraic, spectral and gradient property suites")
    p.add_argument("scope", nargs="?", default="all", choices=["algebra", "spectral", "gradients", "all"])
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--inject-fault", action="store_true", help="perturb the cached inverse of M")
    p.add_argument("--data-path", help="directory holding dataset files for the spectral bound")
    p.add_argument("--datasets", nargs="+", default=["bitcoin_alpha", "bitcoin_otc"])
    p.add_argument("--bandwidth", type=int, default=20)
    p.add_argument("--max-nodes", type=int, default=2000)
    p.set_defaults(func=cmd_verify)

    for name, helptext in (("train", "train with the first alpha of the grid"),
                           ("sweep", "train once per alpha and select on validation")):
        p = sub.add_parser(name, help=helptext)
        _add_config_args(p)
        p.add_argument("--out", required=True, help="output directory")
        p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="recompute the test metric of a checkpoint")
    _add_config_args(p)
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CheckpointError as exc:
        print(f"checkpoint error: {exc}", file=sys.stderr)
        return EXIT_CHECKPOINT
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
