"""Command-line entry point: simulate, corpus, extract, train, evaluate, sweep, loop.

Each subcommand is a thin wrapper over one module operation. Exit codes:
0 success, 2 usage or configuration error, 1 runtime error. All outputs are
written atomically; reruns with the same seed are bit-identical.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import controller, corpus, evaluation, features, models
from .errors import (
    ConfigError,
    ContractViolation,
    InputError,
    SchemaError,
    TrainingError,
)
from .sim import SimConfig, simulate
from .sim.trace import load_trace_csv, write_trace_csv


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plrlab",
        description="CSMA/CA packet-loss prediction workbench: simulator, "
        "feature extraction, models, evaluation, and the MAC-switch loop.",
    )
    parser.add_argument("--seed", type=int, default=42, help="master seed (default 42)")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one simulation config to a trace CSV")
    p.add_argument("--config", required=True, help="SimConfig JSON file")
    p.add_argument("--out", required=True, help="output trace CSV")
    p.add_argument("--backend", choices=("python", "cython"), default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("corpus", help="generate the seeded train/test corpora")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--spec", default=None, help="CorpusSpec JSON (default grid if omitted)")
    p.add_argument("--fast", action="store_true", help="60 s per grid point instead of 1080 s")
    p.add_argument(
        "--split",
        choices=("both", "train", "test"),
        default="both",
        help="which corpora to generate (default both)",
    )
    p.add_argument("--replay", action="store_true", help="also write the controller replay traces")
    p.add_argument("--workers", type=int, default=0, help="parallel simulation workers")
    p.set_defaults(func=cmd_corpus)

    p = sub.add_parser("extract", help="trace(s) -> windowed feature dataset CSV")
    p.add_argument("--traces", required=True, help="corpus directory (with manifest) or one trace CSV")
    p.add_argument("--config", default=None, help="SimConfig JSON, required for a bare trace CSV")
    p.add_argument("--interval", type=float, default=30.0, help="observation window (s)")
    p.add_argument("--horizon", type=int, default=0, help="label shift in windows")
    p.add_argument("--out", required=True, help="output dataset CSV")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="fit one model on a dataset CSV")
    p.add_argument("--data", required=True, help="dataset CSV from extract")
    p.add_argument("--model", required=True, choices=models.MODEL_KINDS)
    p.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="hyperparameter override, repeatable (values parsed as JSON)",
    )
    p.add_argument("--out", required=True, help="output model JSON")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a model on a held-out dataset CSV")
    p.add_argument("--model", required=True, help="model JSON from train")
    p.add_argument("--data", required=True, help="test dataset CSV")
    p.add_argument("--out", required=True, help="per-window report CSV")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="observation-interval sweep over a corpus")
    p.add_argument("--corpus", required=True, help="corpus directory with manifest")
    p.add_argument("--intervals", default=None, help="comma-separated seconds, e.g. 5,10,15,30,60")
    p.add_argument("--kinds", default=",".join(models.MODEL_KINDS), help="comma-separated model kinds")
    p.add_argument("--k", type=int, default=10, help="cross-validation folds")
    p.add_argument("--out", required=True, help="sweep report CSV")
    p.add_argument("--gnuplot-dir", default=None, help="also write per-kind .dat files here")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("loop", help="replay a feature CSV through the MAC-switch controller")
    p.add_argument("--model", required=True, help="model JSON from train")
    p.add_argument("--data", required=True, help="dataset CSV to replay in window order")
    p.add_argument("--up", type=float, default=0.2, help="switch-up plr threshold")
    p.add_argument("--down", type=float, default=0.1, help="switch-back plr threshold")
    p.add_argument("--dwell", type=int, default=2, help="consecutive windows before switching")
    p.add_argument("--target", default="TSCH", help="protocol to switch to")
    p.add_argument("--out", required=True, help="decision log CSV")
    p.set_defaults(func=cmd_loop)

    return parser


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


def _load_json(path, what: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {what}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{what} is not valid JSON: {exc}", field_path=str(path)) from None


# ------------------------------------------------------------- subcommands


def cmd_simulate(args) -> int:
    config = SimConfig.from_dict(_load_json(args.config, "config"))
    trace = simulate(config, backend=args.backend)
    write_trace_csv(trace, args.out)
    _say(args, f"wrote {args.out}: {len(trace.time_s)} events over {config.duration_s:g} s")
    return 0


def cmd_corpus(args) -> int:
    if args.spec is not None:
        spec = corpus.CorpusSpec.from_dict(_load_json(args.spec, "corpus spec"))
        if args.seed != 42:
            raise ConfigError("--seed conflicts with a spec file; set master_seed there")
    else:
        duration = corpus.FAST_POINT_DURATION_S if args.fast else corpus.DEFAULT_POINT_DURATION_S
        spec = corpus.CorpusSpec(per_point_duration_s=duration, master_seed=args.seed)
    spec.validate()

    splits = {"both": ("train", "test"), "train": ("train",), "test": ("test",)}[args.split]
    codes = {"train": corpus.TRAIN_SPLIT, "test": corpus.TEST_SPLIT}
    for name in splits:
        target = os.path.join(args.out, name)
        progress = None if args.quiet else (lambda f, n: print(f"  {f}: {n} events"))
        _say(args, f"{name} corpus -> {target}")
        manifest = corpus.generate_corpus(
            spec, target, split=codes[name], workers=args.workers, progress=progress
        )
        _say(args, f"  {len(manifest['traces'])} traces + manifest")

    if args.replay:
        replay_dir = os.path.join(args.out, "replay")
        os.makedirs(replay_dir, exist_ok=True)
        for scenario in corpus.REPLAY_SCENARIOS:
            config = corpus.replay_scenario(scenario, master_seed=spec.master_seed)
            trace = simulate(config)
            out = os.path.join(replay_dir, scenario.replace("-", "_") + ".csv")
            write_trace_csv(trace, out)
            with open(out + ".config.json", "w", encoding="utf-8") as fh:
                json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
            _say(args, f"replay {scenario} -> {out}")
    return 0


def _load_traces(args):
    """--traces is either a corpus dir (manifest drives configs) or one CSV."""
    if os.path.isdir(args.traces):
        return list(corpus.iter_corpus_traces(args.traces))
    if args.config is None:
        raise ConfigError("a bare trace CSV needs --config with its SimConfig JSON")
    config = SimConfig.from_dict(_load_json(args.config, "config"))
    return [load_trace_csv(args.traces, config)]


def cmd_extract(args) -> int:
    traces = _load_traces(args)
    parts = [
        features.build_dataset(t, args.interval, horizon=args.horizon) for t in traces
    ]
    dataset = features.merge_datasets(parts)
    features.write_dataset_csv(dataset, args.out)
    _say(
        args,
        f"wrote {args.out}: {len(dataset)} samples from {len(traces)} trace(s) "
        f"at {args.interval:g} s windows",
    )
    if dataset.clamped_windows:
        _say(args, f"  note: {dataset.clamped_windows} windows had plr clamped")
    return 0


def _parse_overrides(pairs) -> dict:
    hp = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {pair!r} is not KEY=VALUE")
        try:
            hp[key] = json.loads(value)
        except json.JSONDecodeError:
            raise ConfigError(f"override value {value!r} is not a JSON literal") from None
    return hp


def cmd_train(args) -> int:
    dataset = features.load_dataset_csv(args.data)
    hp = _parse_overrides(args.overrides)
    if args.model == "mlp" and "init_seed" not in hp:
        hp["init_seed"] = args.seed
    model = models.train_model(args.model, dataset, hp or None)
    models.save_model(model, args.out)
    meta = model.training_meta
    extra = f", final loss {meta['final_loss']:.6g}" if "final_loss" in meta else ""
    _say(args, f"wrote {args.out}: {args.model} on {len(dataset)} samples{extra}")
    return 0


def cmd_evaluate(args) -> int:
    model = models.load_model(args.model)
    dataset = features.load_dataset_csv(args.data)
    report = evaluation.evaluate_on_test(model, dataset)
    evaluation.write_test_report(report, args.out)
    _say(
        args,
        f"wrote {args.out}: {len(report.true_plr)} windows, "
        f"overall RMSE {report.overall_rmse:.6f}",
    )
    return 0


def cmd_sweep(args) -> int:
    traces = list(corpus.iter_corpus_traces(args.corpus))
    intervals = None
    if args.intervals:
        try:
            intervals = [float(tok) for tok in args.intervals.split(",") if tok]
        except ValueError as exc:
            raise ConfigError(f"bad --intervals: {exc}") from None
    kinds = tuple(tok for tok in args.kinds.split(",") if tok)
    for kind in kinds:
        if kind not in models.MODEL_KINDS:
            raise ConfigError(f"unknown model kind {kind!r}")
    report = evaluation.sweep_intervals(
        traces, intervals=intervals, model_kinds=kinds, k=args.k, seed=args.seed
    )
    evaluation.write_sweep_report(report, args.out)
    _say(args, evaluation.format_sweep_table(report))
    if args.gnuplot_dir:
        os.makedirs(args.gnuplot_dir, exist_ok=True)
        written = evaluation.write_sweep_gnuplot_data(report, args.gnuplot_dir)
        _say(args, "gnuplot data: " + ", ".join(written))
    return 0


def cmd_loop(args) -> int:
    model = models.load_model(args.model)
    dataset = features.load_dataset_csv(args.data)
    policy = controller.ControllerPolicy(
        switch_up_threshold=args.up,
        switch_down_threshold=args.down,
        min_dwell_windows=args.dwell,
        target_protocol=args.target,
    )
    policy.validate()
    log = controller.run_loop(dataset.samples, model, policy)
    controller.write_decision_log(log, args.out)
    switches = sum(1 for d in log if d.action == controller.ACTION_SWITCH)
    _say(args, f"wrote {args.out}: {len(log)} decisions, {switches} switches")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ContractViolation, InputError, TrainingError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
