"""Batch front end: one subcommand per pipeline step, machine-readable
outputs, reproducibility metadata (seeds, hyperparameters, input digests)
embedded in everything it writes.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 collection
permission/interface error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from datetime import datetime, timezone

from . import classifiers, collector, dataset, evaluation, events, mitigation, synth
from .errors import CollectorError, ConfigError, DataError, PerfprintError

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_COLLECT = 4


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _load_scenario(spec: str):
    """A preset name, or a path to a JSON collector config."""
    if spec in events.SCENARIO_NAMES:
        preset = events.preset(spec)
        return preset.config, preset.target_process_pattern, spec
    if os.path.exists(spec):
        try:
            with open(spec) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{spec}: malformed scenario file: {exc}") from exc
        config = events.config_from_dict(data)
        return config, data.get("target_process_pattern"), data.get("name", spec)
    raise ConfigError(
        f"unknown scenario {spec!r}: not a preset "
        f"({', '.join(events.SCENARIO_NAMES)}) and no such file"
    )


def _write_json(path: str, doc: dict):
    with open(path, "w") as fh:
        json.dump(doc, fh, separators=(",", ":"))
        fh.write("\n")


def _hyperparams(args) -> dict:
    if args.kind == "knn":
        return {"k": args.k}
    if args.kind == "tree":
        hp = {"min_leaf": args.min_leaf, "min_parent": args.min_parent}
        if args.max_splits is not None:
            hp["max_splits"] = args.max_splits
        return hp
    if args.kind == "svm":
        return {"c": args.C, "tol": args.tol, "max_passes": args.max_passes}
    if args.kind == "net":
        hp = {
            "seed": args.train_seed,
            "max_iterations": args.max_iter,
            "l2_weight": args.l2,
            "learning_rate": args.lr,
            "memory_budget_mb": args.memory_budget_mb,
        }
        if args.hidden1 is not None:
            hp["hidden1"] = args.hidden1
        if args.hidden2 is not None:
            hp["hidden2"] = args.hidden2
        if args.softmax_iter is not None:
            hp["softmax_iterations"] = args.softmax_iter
        if args.finetune_iter is not None:
            hp["finetune_iterations"] = args.finetune_iter
        return hp
    raise ConfigError(f"unknown model kind {args.kind!r}")


def _add_model_flags(parser):
    parser.add_argument("--kind", required=True, choices=classifiers.MODEL_KINDS)
    parser.add_argument("--k", type=int, default=1, help="kNN neighbor count")
    parser.add_argument("--max-splits", type=int, default=None, help="tree split budget (default N-1)")
    parser.add_argument("--min-leaf", type=int, default=1)
    parser.add_argument("--min-parent", type=int, default=10)
    parser.add_argument("--C", type=float, default=1.0, help="SVM regularization")
    parser.add_argument("--tol", type=float, default=classifiers.svm.DEFAULT_TOL)
    parser.add_argument("--max-passes", type=int, default=classifiers.svm.DEFAULT_MAX_PASSES)
    parser.add_argument("--hidden1", type=int, default=None, help="net hidden-1 units (default 100*N)")
    parser.add_argument("--hidden2", type=int, default=None, help="net hidden-2 units (default 10*N)")
    parser.add_argument("--max-iter", type=int, default=classifiers.net.DEFAULT_MAX_ITERATIONS)
    parser.add_argument("--softmax-iter", type=int, default=None)
    parser.add_argument("--finetune-iter", type=int, default=None)
    parser.add_argument("--l2", type=float, default=classifiers.net.DEFAULT_L2_WEIGHT)
    parser.add_argument("--lr", type=float, default=classifiers.net.DEFAULT_LEARNING_RATE)
    parser.add_argument("--memory-budget-mb", type=float, default=classifiers.net.DEFAULT_MEMORY_BUDGET_MB)
    parser.add_argument("--train-seed", type=int, default=0)


def cmd_collect(args) -> int:
    config, default_pattern, scenario_name = _load_scenario(args.scenario)
    if args.cpu is not None:
        config = events.CollectorConfig(
            events=config.events,
            scope=events.ProfilingScope.core(args.cpu),
            duration_s=config.duration_s,
            read_interval_us=config.read_interval_us,
        )
    pattern = args.await_pattern or default_pattern
    if config.scope.is_process_specific and config.scope.pid < 0:
        if args.pid is not None:
            config = config.with_pid(args.pid)
        elif pattern:
            pid = collector.await_target_process(pattern, timeout_s=args.await_timeout)
            print(f"target process {pid} matched {pattern!r}")
            config = config.with_pid(pid)
        else:
            raise ConfigError("process-specific scenario needs --pid or --await")
    raw = collector.collect(config)
    measurement = dataset.concatenate(raw, args.label)
    meta = dict(measurement.meta)
    meta["captured_at"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    measurement = dataset.Measurement(
        label=measurement.label, features=measurement.features, meta=meta
    )
    dataset.append_measurement(
        args.out,
        measurement,
        dataset_meta={
            "scenario": scenario_name,
            "events": config.event_names,
            "samples_per_event": config.expected_samples,
        },
    )
    print(f"appended {len(measurement.features)}-feature measurement "
          f"labeled {args.label!r} to {args.out}")
    return 0


def cmd_synth(args) -> int:
    noise = synth.NoiseModel(
        additive_sigma=args.noise_sigma,
        max_shift=args.noise_shift,
        amplitude_jitter=args.noise_jitter,
        background_floor=args.noise_floor,
    )
    profiles = synth.gen_profiles(args.classes, args.events, args.samples_per_event, args.seed)
    d = synth.gen_dataset(profiles, args.per_class, noise, args.seed)
    dataset.save(d, args.out)
    print(f"wrote {len(d)} measurements ({args.classes} classes) to {args.out}")
    print(f"sha256 {_sha256(args.out)}")
    return 0


def cmd_prep(args) -> int:
    d = dataset.load(args.data)
    if args.downsample > 1:
        d = dataset.downsample(d, args.downsample)
    if args.split_train:
        if not (args.train_out and args.test_out):
            raise ConfigError("--split-train needs --train-out and --test-out")
        train, test = dataset.split(d, args.split_train, args.split_test, args.split_seed)
        if args.normalize:
            train = dataset.normalize_fit(train)
            test = dataset.normalize_apply(train.normalization, test)
        dataset.save(train, args.train_out)
        dataset.save(test, args.test_out)
        print(f"train sha256 {_sha256(args.train_out)}")
        print(f"test sha256 {_sha256(args.test_out)}")
        return 0
    if args.normalize:
        d = dataset.normalize_fit(d)
    if not args.out:
        raise ConfigError("--out required when not splitting")
    dataset.save(d, args.out)
    print(f"sha256 {_sha256(args.out)}")
    return 0


def cmd_train(args) -> int:
    d = dataset.load(args.data)
    trainer = classifiers.make_trainer(args.kind, **_hyperparams(args))
    model = trainer(d)
    classifiers.save_model(
        model,
        args.out,
        provenance={"train_data": args.data, "train_data_sha256": _sha256(args.data)},
    )
    print(f"trained {args.kind} on {len(d)} measurements "
          f"({model.n_classes} classes) in {model.train_seconds:.1f} s -> {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    model = classifiers.load_model(args.model)
    test = dataset.load(args.data)
    report = evaluation.evaluate(model, test, g_max=args.topk)
    meta = dict(report.meta)
    meta.update(
        {
            "model_file": args.model,
            "model_sha256": _sha256(args.model),
            "test_data": args.data,
            "test_data_sha256": _sha256(args.data),
        }
    )
    report = evaluation.EvalReport(
        success_rate=report.success_rate,
        per_class=report.per_class,
        topk_curve=report.topk_curve,
        confusion=report.confusion,
        classes=report.classes,
        meta=meta,
    )
    os.makedirs(args.out_dir, exist_ok=True)
    evaluation.write_report_json(report, os.path.join(args.out_dir, "report.json"))
    evaluation.write_per_class_csv(report, os.path.join(args.out_dir, "per_class.csv"))
    evaluation.write_topk_csv(report, os.path.join(args.out_dir, "topk.csv"))
    print(f"success rate {report.success_rate:.4f} over {len(test)} measurements")
    print(f"reports in {args.out_dir}")
    return 0


def cmd_crossval(args) -> int:
    d = dataset.load(args.data)
    trainer = classifiers.make_trainer(args.kind, **_hyperparams(args))
    result = evaluation.cross_validate(trainer, d, args.folds, args.seed)
    doc = {
        "format": "perfprint-crossval",
        "version": 1,
        "kind": args.kind,
        "mean_success_rate": result.mean_success_rate,
        "fold_rates": result.fold_rates,
        "folds": args.folds,
        "seed": args.seed,
        "hyperparams": _hyperparams(args),
        "data": args.data,
        "data_sha256": _sha256(args.data),
    }
    _write_json(args.out, doc)
    print(f"mean success rate {result.mean_success_rate:.4f} over {args.folds} folds")
    return 0


def cmd_curve(args) -> int:
    d = dataset.load(args.data)
    sizes = [int(s) for s in args.sizes.split(",") if s]
    trainer = classifiers.make_trainer(args.kind, **_hyperparams(args))
    curve = evaluation.learning_curve(trainer, d, sizes, args.n_test, args.seed)
    evaluation.write_curve_csv(curve, args.out)
    for size in sorted(curve):
        print(f"train size {size}: success rate {curve[size]:.4f}")
    return 0


def cmd_mitigate(args) -> int:
    d = dataset.load(args.data)
    if args.policy == "noise":
        policy = mitigation.MitigationPolicy.noise_injection(args.sigma, seed=args.policy_seed)
    elif args.policy == "downsample":
        policy = mitigation.MitigationPolicy.sampling_degradation(args.factor)
    elif args.policy == "deny":
        policy = mitigation.MitigationPolicy.access_denied()
    else:
        raise ConfigError(f"unknown policy {args.policy!r}")
    trainer = classifiers.make_trainer(args.kind, **_hyperparams(args))
    result = mitigation.leakage_report(
        trainer, d, policy, args.n_train, args.n_test, args.split_seed
    )
    doc = {
        "format": "perfprint-leakage",
        "version": 1,
        "kind": args.kind,
        "policy": args.policy,
        "policy_params": {"sigma": args.sigma, "factor": args.factor},
        "before": evaluation.report_to_dict(result.before),
        "after": evaluation.report_to_dict(result.after),
        "accuracy_delta": result.accuracy_delta,
        "seeds": result.seeds,
        "hyperparams": _hyperparams(args),
        "data": args.data,
        "data_sha256": _sha256(args.data),
    }
    _write_json(args.out, doc)
    print(
        f"success rate {result.before.success_rate:.4f} -> "
        f"{result.after.success_rate:.4f} "
        f"(drop {result.accuracy_delta:.4f}) under {args.policy}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="perfprint",
        description="Hardware-performance-event trace collection and fingerprinting.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("collect", help="record one labeled measurement")
    p.add_argument("--scenario", required=True, help="preset name or JSON config file")
    p.add_argument("--label", required=True)
    p.add_argument("--out", required=True, help="trace file to append to")
    p.add_argument("--await", dest="await_pattern", default=None,
                   help="wait for a new process matching this name")
    p.add_argument("--await-timeout", type=float, default=30.0)
    p.add_argument("--pid", type=int, default=None)
    p.add_argument("--cpu", type=int, default=None)
    p.set_defaults(func=cmd_collect)

    p = sub.add_parser("synth", help="generate a synthetic labeled dataset")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--per-class", type=int, required=True)
    p.add_argument("--events", type=int, default=3)
    p.add_argument("--samples-per-event", type=int, default=10000)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--noise-shift", type=float, default=0.0)
    p.add_argument("--noise-jitter", type=float, default=0.0)
    p.add_argument("--noise-floor", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("prep", help="downsample / normalize / split a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--downsample", type=int, default=1)
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--split-train", type=int, default=0, help="train measurements per class")
    p.add_argument("--split-test", type=int, default=0)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--train-out")
    p.add_argument("--test-out")
    p.add_argument("--out")
    p.set_defaults(func=cmd_prep)

    p = sub.add_parser("train", help="train a classifier on a dataset file")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    _add_model_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a model on a test dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--topk", type=int, default=None)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("crossval", help="stratified k-fold cross-validation")
    p.add_argument("--data", required=True)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_model_flags(p)
    p.set_defaults(func=cmd_crossval)

    p = sub.add_parser("curve", help="success rate vs training-set size")
    p.add_argument("--data", required=True)
    p.add_argument("--sizes", required=True, help="comma-separated per-class sizes")
    p.add_argument("--n-test", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_model_flags(p)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("mitigate", help="before/after leakage comparison")
    p.add_argument("--data", required=True)
    p.add_argument("--policy", required=True, choices=("noise", "downsample", "deny"))
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--factor", type=int, default=2)
    p.add_argument("--policy-seed", type=int, default=0)
    p.add_argument("--n-train", type=int, required=True)
    p.add_argument("--n-test", type=int, required=True)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_model_flags(p)
    p.set_defaults(func=cmd_mitigate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except CollectorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COLLECT
    except PerfprintError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
