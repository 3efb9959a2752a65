"""Command-line interface.

Subcommands: train, evaluate, gradcheck, experiment, synthetic-gen.

Exit codes are stable for scripting: 0 success, 1 numerical check failed,
2 bad usage, 3 dataset problem, 4 training diverged. Every run with a
--seed is fully deterministic, including every byte of the output files,
which is why wall-clock timings stay out of traces unless asked for.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from pathlib import Path

from ._version import VERSION
from .activation import ProximalActivation, parse_activation
from .data import (
    DataError,
    IdxImages,
    TEST_IMAGES,
    TEST_LABELS,
    TRAIN_IMAGES,
    TRAIN_LABELS,
    write_idx_images,
    write_idx_labels,
)
from .experiment import (
    DEFAULT_ITERATIONS,
    DEFAULT_SEED,
    DatasetSpec,
    ExperimentConfig,
    TrainerSpec,
    accuracy,
    default_synthetic_experiment_spec,
    idx_spec,
    comparison_experiment_config,
    resolve_datasets,
    run_experiment,
    synthetic_holdout,
    synthetic_spec,
    write_metadata_json,
    write_trace_csv,
)
from .loss import bregman_loss, bregman_loss_grad_z, central_difference_grad, envelope_loss
from .optim import CLASSIC_ROSENBLATT, TAU_SCALED, THRESHOLD_RULES, TRAINER_KINDS, PerceptronModel
from .tensor import DenseMatrix, DenseVector

DATA_ENV = "BREGMAN_PERCEPTRON_DATA"

MODEL_FORMAT = "bregman-perceptron-model"

FD_TOLERANCE = 1e-5
ENVELOPE_TOLERANCE = 1e-10


def save_model(model: PerceptronModel, activation_spec: str, path, creation: dict):
    """Write a model as human-diffable JSON; weights stored row-major."""
    doc = {
        "format": MODEL_FORMAT,
        "version": VERSION,
        "input_dim": model.W.rows,
        "output_dim": model.W.cols,
        "activation": activation_spec,
        "weights": list(model.W._data),
        "bias": list(model.b._data),
        "creation": creation,
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_model(path) -> tuple:
    """Read a model JSON file; returns (model, activation, activation spec, doc)."""
    p = Path(path)
    if not p.exists():
        raise DataError(f"model file not found: {p}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"model file {p} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise DataError(f"model file {p} lacks the {MODEL_FORMAT} format tag")
    try:
        m, n = doc["input_dim"], doc["output_dim"]
        act_spec = doc["activation"]
        W = DenseMatrix(m, n, doc["weights"])
        b = DenseVector(doc["bias"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"model file {p} is malformed: {exc}") from None
    return PerceptronModel(W, b), parse_activation(act_spec), act_spec, doc


def _add_data_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("data source")
    g.add_argument("--data-dir", help=f"directory of IDX files (default: ${DATA_ENV})")
    g.add_argument("--synthetic", action="store_true", help="use the synthetic generator")
    g.add_argument("--train-count", type=int, help="training samples (idx: 3000, synthetic: 300)")
    g.add_argument("--val-count", type=int, help="validation samples (idx: full split, synthetic: 1000)")
    g.add_argument("--input-dim", type=int, help="synthetic input dimension (default 20)")
    g.add_argument("--classes", type=int, help="label classes (synthetic: 5; idx one-hot width: 10)")
    g.add_argument("--noise", type=float, help="synthetic noise half-width (default 0.25)")


def _dataset_spec(args) -> DatasetSpec:
    data_dir = args.data_dir or os.environ.get(DATA_ENV)
    if args.synthetic and args.data_dir:
        raise ValueError("--synthetic and --data-dir are mutually exclusive")
    if args.synthetic:
        base = default_synthetic_experiment_spec()
        return synthetic_spec(
            train_count=args.train_count if args.train_count is not None else base.train_count,
            val_count=args.val_count if args.val_count is not None else base.val_count,
            input_dim=args.input_dim if args.input_dim is not None else base.input_dim,
            n_classes=args.classes if args.classes is not None else base.n_classes,
            noise=args.noise if args.noise is not None else base.noise,
        )
    if not data_dir:
        raise ValueError(f"need --data-dir (or ${DATA_ENV}) or --synthetic")
    if args.input_dim is not None or args.noise is not None:
        raise ValueError("--input-dim/--noise apply only to --synthetic")
    return idx_spec(
        data_dir,
        train_count=args.train_count if args.train_count is not None else 3000,
        val_count=args.val_count,
        n_classes=args.classes if args.classes is not None else 10,
    )


def _parse_batch(text):
    """--batch grammar: 'full' | <size> (cyclic windows) | random:<size>."""
    if text is None or text == "full":
        return "full", None
    if text.startswith("random:"):
        size = int(text.split(":", 1)[1])
        return "random", size
    return "deterministic", int(text)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_train(args) -> int:
    if args.alpha < 0:
        raise ValueError("--alpha must be >= 0")
    dataset = _dataset_spec(args)
    try:
        batch_mode, batch_size = _parse_batch(args.batch)
    except ValueError:
        raise ValueError(f"bad --batch value {args.batch!r}; use full, <size>, or random:<size>")
    if args.trainer == CLASSIC_ROSENBLATT:
        if (batch_mode, batch_size) not in (("full", None), ("deterministic", 1)):
            raise ValueError("the classic rule is per-sample; only --batch 1 fits it")
        if args.tau_w is not None or args.tau_b is not None:
            raise ValueError("the classic rule uses step size 1; drop --tau-w/--tau-b")
        batch_mode, batch_size = "deterministic", 1
    spec = TrainerSpec(
        name=args.trainer,
        kind=args.trainer,
        activation=args.activation,
        alpha=args.alpha,
        schedule=args.schedule,
        tau0=args.tau_w,
        bias_tau0=args.tau_b,
        batch_mode=batch_mode,
        batch_size=batch_size,
        threshold_rule=args.threshold_rule,
    )
    config = ExperimentConfig(
        trainers=(spec,),
        dataset=dataset,
        iterations=args.iters,
        seed=args.seed,
        eval_stride=args.stride,
        collect_timings=args.timings,
    )
    result = run_experiment(config)
    out = _out_dir(args)
    write_trace_csv(result.traces, out / "trace.csv")
    write_metadata_json(result.metadata, out / "metadata.json")
    creation = {
        "trainer": result.metadata["trainers"][spec.name],
        "dataset": result.metadata["dataset"],
        "seed": args.seed,
        "iterations": args.iters,
        "initial_model_sha256": result.metadata["initial_model_sha256"],
    }
    save_model(result.final_models[spec.name], args.activation, out / "model.json", creation)
    last = result.traces[spec.name][-1]
    print(f"wrote {out / 'model.json'}, {out / 'trace.csv'}, {out / 'metadata.json'}")
    print(
        f"{spec.name}: iteration {last.iteration} objective {last.objective:.6g} "
        f"train_acc {last.train_accuracy:.4f} val_acc {last.val_accuracy:.4f} "
        f"sparsity {last.weight_sparsity:.4f}"
    )
    if result.metadata["diverged"]:
        print(f"training diverged at iteration {result.metadata['diverged'][spec.name]}", file=sys.stderr)
        return 4
    return 0


def cmd_evaluate(args) -> int:
    model, act, act_spec, doc = load_model(args.model)
    dataset = _dataset_spec(args)
    # Regenerate/subsample with the model's own training seed unless overridden,
    # so a synthetic holdout is the same one the trainer saw.
    seed = args.seed
    if seed is None:
        creation = doc.get("creation")
        seed = creation.get("seed", 0) if isinstance(creation, dict) else 0
    train, val = resolve_datasets(dataset, seed)
    ds = train if args.split == "train" else val
    acc = accuracy(model, ds, act)
    print(f"samples {ds.sample_count} activation {act_spec} accuracy {acc:.6f}")
    return 0


def _gradcheck_points(act: ProximalActivation, rng: random.Random, margin: float = 1e-3):
    if act.kind == "relu":
        kinks = (0.0,)
        draw_y = lambda: rng.uniform(0.0, 4.0)
    elif act.kind == "softshrink":
        kinks = (-act.theta, act.theta)
        draw_y = lambda: rng.uniform(-4.0, 4.0)
    else:
        kinks = ()
        draw_y = lambda: rng.uniform(-4.0, 4.0)
    n = rng.randint(1, 6)
    z = []
    while len(z) < n:
        c = rng.uniform(-8.0, 8.0)
        if all(abs(c - kk) >= margin for kk in kinks):
            z.append(c)
    y = [draw_y() for _ in range(n)]
    return DenseVector(y), DenseVector(z)


def run_gradcheck(act: ProximalActivation, trials: int, seed: int, poison: bool = False) -> dict:
    """Finite-difference and envelope-identity sweep over random points.

    Gradient error is |fd - analytic| / max(1, |analytic|), maximized over
    coordinates; the poison flag perturbs analytic coordinate 0 and exists
    as a negative control for the check itself.
    """
    rng = random.Random(seed)
    worst_fd = (0.0, -1, -1)  # error, trial, coordinate
    worst_env = (0.0, -1)
    for t in range(trials):
        y, z = _gradcheck_points(act, rng)
        grad = list(bregman_loss_grad_z(act, y, z))
        if poison:
            grad[0] += 1e-3
        fd = central_difference_grad(lambda zz: bregman_loss(act, y, zz), z)
        for j in range(len(z)):
            err = abs(fd[j] - grad[j]) / max(1.0, abs(grad[j]))
            if err > worst_fd[0]:
                worst_fd = (err, t, j)
        env = abs(bregman_loss(act, y, z) - envelope_loss(act, y, z))
        if env > worst_env[0]:
            worst_env = (env, t)
    return {
        "max_fd_error": worst_fd[0],
        "fd_trial": worst_fd[1],
        "fd_coordinate": worst_fd[2],
        "max_envelope_gap": worst_env[0],
        "envelope_trial": worst_env[1],
        "fd_ok": worst_fd[0] <= FD_TOLERANCE,
        "envelope_ok": worst_env[0] <= ENVELOPE_TOLERANCE,
    }


def cmd_gradcheck(args) -> int:
    act = parse_activation(args.activation)
    if not isinstance(act, ProximalActivation):
        raise ValueError("gradcheck needs a proximal activation (relu, identity, softshrink:<t>)")
    if args.trials < 1:
        raise ValueError("--trials must be >= 1")
    report = run_gradcheck(act, args.trials, args.seed, poison=args.poison)
    print(f"gradcheck: activation={args.activation} trials={args.trials} seed={args.seed}")
    print(f"max relative gradient error: {report['max_fd_error']:.3e} (tolerance {FD_TOLERANCE:g})")
    print(f"max envelope discrepancy:    {report['max_envelope_gap']:.3e} (tolerance {ENVELOPE_TOLERANCE:g})")
    if report["fd_ok"] and report["envelope_ok"]:
        print("PASS")
        return 0
    if not report["fd_ok"]:
        print(
            f"FAIL: gradient mismatch at trial {report['fd_trial']} "
            f"coordinate {report['fd_coordinate']}"
        )
    if not report["envelope_ok"]:
        print(f"FAIL: envelope identity breached at trial {report['envelope_trial']}")
    return 1


def cmd_experiment(args) -> int:
    dataset = _dataset_spec(args)
    alpha_scale = args.alpha_scale
    if args.paper_defaults:
        if alpha_scale is not None:
            raise ValueError("--paper-defaults fixes the alphas; drop --alpha-scale")
        alpha_scale = 1.0
    config = comparison_experiment_config(
        dataset,
        iterations=args.iters,
        seed=args.seed,
        alpha_scale=alpha_scale,
        threshold_rule=args.threshold_rule,
        eval_stride=args.stride,
        collect_timings=args.timings,
    )
    result = run_experiment(config)
    out = _out_dir(args)
    write_trace_csv(result.traces, out / "trace.csv")
    write_metadata_json(result.metadata, out / "metadata.json")
    print(f"wrote {out / 'trace.csv'}, {out / 'metadata.json'}")
    print("final validation accuracy:")
    for name in sorted(result.traces):
        last = result.traces[name][-1]
        mark = "  (diverged)" if name in result.metadata["diverged"] else ""
        print(f"  {name:24s} {last.val_accuracy:.4f}  sparsity {last.weight_sparsity:.4f}{mark}")
    return 0


def cmd_synthetic_gen(args) -> int:
    if args.train_count is not None and args.train_count < 1:
        raise ValueError("--train-count must be >= 1")
    base = default_synthetic_experiment_spec()
    train_count = args.train_count if args.train_count is not None else base.train_count
    val_count = args.val_count if args.val_count is not None else base.val_count
    input_dim = args.input_dim if args.input_dim is not None else base.input_dim
    classes = args.classes if args.classes is not None else base.n_classes
    noise = args.noise if args.noise is not None else base.noise
    train, val = synthetic_holdout(train_count, val_count, input_dim, classes, args.seed, noise)
    out = _out_dir(args)
    written = []
    for ds, img_name, lab_name in (
        (train, TRAIN_IMAGES, TRAIN_LABELS),
        (val, TEST_IMAGES, TEST_LABELS),
    ):
        payload = bytes(
            min(255, max(0, round(v * 255.0))) for v in ds.X._data
        )
        write_idx_images(out / img_name, IdxImages(ds.sample_count, 1, ds.input_dim, payload))
        write_idx_labels(out / lab_name, list(ds.labels))
        written += [out / img_name, out / lab_name]
    for p in written:
        print(f"wrote {p}")
    print(
        f"synthetic set: train {train.sample_count}, val {val.sample_count}, "
        f"dim {input_dim}, classes {classes}, noise {noise} "
        "(pixels quantized to bytes; load with --classes "
        f"{classes})"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bregman-perceptron",
        description="Train generalized perceptrons with proximal activations "
        "via a Bregman-distance loss that never differentiates the activation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one model and write model/trace files")
    p.add_argument("--trainer", required=True, choices=TRAINER_KINDS)
    p.add_argument("--activation", default="relu",
                   help="relu | identity | softshrink:<theta> | heaviside (classic rule only)")
    p.add_argument("--alpha", type=float, default=0.0, help="l1 weight on W (default 0)")
    p.add_argument("--tau-w", type=float, help="weight step size (default: safe full-batch step)")
    p.add_argument("--tau-b", type=float, help="bias step size (default: same as --tau-w)")
    p.add_argument("--schedule", choices=("constant", "diminishing"), default="constant")
    p.add_argument("--batch", help="full | <size> | random:<size> (default full)")
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stride", type=int, default=1, help="trace every Nth iteration")
    p.add_argument("--threshold-rule", choices=THRESHOLD_RULES, default=TAU_SCALED)
    p.add_argument("--timings", action="store_true",
                   help="record wall time in traces (breaks byte-identical reruns)")
    p.add_argument("--out", required=True, help="output directory")
    _add_data_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="accuracy of a saved model on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--split", choices=("train", "val"), default="val")
    p.add_argument("--seed", type=int, default=None,
                   help="seed for subsampling/synthetic regeneration "
                        "(default: the seed recorded in the model file)")
    _add_data_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("gradcheck", help="finite-difference and envelope-identity checks")
    p.add_argument("--activation", default="relu")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--poison", action="store_true",
                   help="negative control: corrupt the analytic gradient; must FAIL")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("experiment", help="four-trainer comparison with trace output")
    p.add_argument("--iters", type=int, default=DEFAULT_ITERATIONS)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--alpha-scale", type=float,
                   help="scale all four alphas (default: 1.0 for idx data, 0.02 synthetic)")
    p.add_argument("--paper-defaults", action="store_true",
                   help="use the literal alphas 0.9/0.81/0.81/0.85")
    p.add_argument("--threshold-rule", choices=THRESHOLD_RULES, default=TAU_SCALED)
    p.add_argument("--timings", action="store_true",
                   help="record wall time in traces (breaks byte-identical reruns)")
    p.add_argument("--out", required=True, help="output directory")
    _add_data_flags(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("synthetic-gen", help="write a synthetic dataset as IDX files")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--train-count", type=int)
    p.add_argument("--val-count", type=int)
    p.add_argument("--input-dim", type=int)
    p.add_argument("--classes", type=int)
    p.add_argument("--noise", type=float)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_synthetic_gen)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (None, 0) else int(exc.code)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
