"""Side-by-side trainer comparison with reproducible trace output.

An experiment runs several trainers from one shared initial model on one
shared dataset, recording per-iteration objective, train/validation
accuracy, and exact-zero weight sparsity. Each trainer's objective column
uses its own loss (Bregman for the Bregman-path trainers, squared loss for
the baselines) plus its own alpha * l1(W) term; validation accuracy is the
cross-trainer comparable column.

Everything is seeded and the CSV/JSON writers avoid timestamps, so a rerun
of the same configuration is byte-identical. Wall-clock timings are
therefore opt-in and default to zero in the trace.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
import time
from array import array
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from ._backend import BACKEND
from ._version import VERSION
from .activation import parse_activation
from .data import LabeledDataset, load_dataset_dir, subsample, synthetic_dataset
from .optim import (
    CLASSIC_ROSENBLATT,
    TAU_SCALED,
    THRESHOLD_RULES,
    TRAINER_KINDS,
    PerceptronModel,
    Trainer,
    constant_step,
    deterministic_batches,
    diminishing_step,
    forward_all,
    full_batch,
    init_model,
    objective_from_preactivations,
    random_batches,
    safe_constant_step,
)
from .tensor import DenseVector, ShapeMismatchError, zero_fraction

COMPARISON_ALPHAS = (0.9, 0.81, 0.81, 0.85)


@dataclass(frozen=True)
class TrainerSpec:
    """One trainer's recipe; tau0=None defers to the data-derived safe step."""

    name: str
    kind: str
    activation: str = "relu"
    alpha: float = 0.0
    schedule: str = "constant"  # "constant" | "diminishing"
    tau0: Optional[float] = None
    bias_tau0: Optional[float] = None
    batch_mode: str = "full"  # "full" | "deterministic" | "random"
    batch_size: Optional[int] = None
    threshold_rule: str = TAU_SCALED

    def __post_init__(self):
        if not self.name:
            raise ValueError("trainer spec needs a nonempty name")
        if self.kind not in TRAINER_KINDS:
            raise ValueError(f"unknown trainer kind {self.kind!r}")
        if self.schedule not in ("constant", "diminishing"):
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.threshold_rule not in THRESHOLD_RULES:
            raise ValueError(f"unknown threshold rule {self.threshold_rule!r}")
        if self.batch_mode not in ("full", "deterministic", "random"):
            raise ValueError(f"unknown batch mode {self.batch_mode!r}")
        if self.batch_mode != "full" and self.batch_size is None:
            raise ValueError(f"batch mode {self.batch_mode!r} needs batch_size")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.tau0 is not None and self.tau0 <= 0:
            raise ValueError("tau0 must be positive")
        if self.bias_tau0 is not None and self.bias_tau0 <= 0:
            raise ValueError("bias_tau0 must be positive")


@dataclass(frozen=True)
class DatasetSpec:
    """Where samples come from: IDX files on disk, or the synthetic generator."""

    source: str  # "idx" | "synthetic"
    data_dir: Optional[str] = None
    train_count: int = 3000
    val_count: Optional[int] = None  # None: the full validation split
    input_dim: int = 20  # synthetic only
    n_classes: int = 3  # one-hot width; synthetic class count
    noise: float = 0.05  # synthetic only

    def __post_init__(self):
        if self.source not in ("idx", "synthetic"):
            raise ValueError(f"unknown dataset source {self.source!r}")
        if self.source == "idx" and not self.data_dir:
            raise ValueError("idx dataset spec needs data_dir")
        if self.train_count < 1:
            raise ValueError("train_count must be positive")


def idx_spec(
    data_dir,
    train_count: int = 3000,
    val_count: Optional[int] = None,
    n_classes: int = 10,
) -> DatasetSpec:
    return DatasetSpec(
        "idx",
        data_dir=str(data_dir),
        train_count=train_count,
        val_count=val_count,
        n_classes=n_classes,
    )


def synthetic_spec(
    train_count: int = 300,
    val_count: int = 1000,
    input_dim: int = 20,
    n_classes: int = 3,
    noise: float = 0.05,
) -> DatasetSpec:
    return DatasetSpec(
        "synthetic",
        train_count=train_count,
        val_count=val_count,
        input_dim=input_dim,
        n_classes=n_classes,
        noise=noise,
    )


@dataclass(frozen=True)
class ExperimentConfig:
    trainers: tuple
    dataset: DatasetSpec
    iterations: int
    seed: int
    eval_stride: int = 1
    collect_timings: bool = False

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.eval_stride < 1:
            raise ValueError("eval_stride must be >= 1")
        if not self.trainers:
            raise ValueError("an experiment needs at least one trainer")
        names = [t.name for t in self.trainers]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate trainer names: {names}")
        for t in self.trainers:
            if t.alpha < 0:
                raise ValueError("alpha must be >= 0")


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    objective: float
    train_accuracy: float
    val_accuracy: float
    weight_sparsity: float
    wall_time_ms: float


@dataclass(frozen=True)
class ExperimentResult:
    traces: dict  # trainer name -> list of TraceRecord
    metadata: dict
    final_models: dict  # trainer name -> PerceptronModel


def resolve_datasets(spec: DatasetSpec, seed: int) -> tuple:
    """Materialize (train, validation) datasets for a spec.

    IDX sources subsample the train split with the experiment seed and keep
    the validation split whole unless val_count trims it. Synthetic sources
    draw one generator stream and split it, so both sets share class
    templates (see synthetic_holdout).
    """
    if spec.source == "idx":
        train = load_dataset_dir(spec.data_dir, "train", spec.n_classes)
        if spec.train_count < train.sample_count:
            train = subsample(train, spec.train_count, seed)
        val = load_dataset_dir(spec.data_dir, "t10k", spec.n_classes)
        if spec.val_count is not None and spec.val_count < val.sample_count:
            val = subsample(val, spec.val_count, seed + 1)
        return train, val
    val_count = spec.val_count if spec.val_count is not None else 1000
    return synthetic_holdout(
        spec.train_count, val_count, spec.input_dim, spec.n_classes, seed, spec.noise
    )


def synthetic_holdout(
    train_count: int, val_count: int, input_dim: int, n_classes: int, seed: int, noise: float
) -> tuple:
    """One synthetic draw split into train/validation around shared templates.

    Generating train and validation in a single call keeps both sets tied to
    the same class templates; splitting two independent generator calls would
    compare against different classes entirely.
    """
    total = synthetic_dataset(train_count + val_count, input_dim, n_classes, seed, noise)
    train = _slice_rows(total, 0, train_count)
    val = _slice_rows(total, train_count, train_count + val_count)
    return train, val


def _slice_rows(dataset: LabeledDataset, lo: int, hi: int) -> LabeledDataset:
    m, n = dataset.input_dim, dataset.n_classes
    from .tensor import DenseMatrix

    X = DenseMatrix._wrap(hi - lo, m, dataset.X._data[lo * m : hi * m])
    Y = DenseMatrix._wrap(hi - lo, n, dataset.Y._data[lo * n : hi * n])
    return LabeledDataset(X, Y, dataset.labels[lo:hi], dataset.n_classes)


def model_digest(model: PerceptronModel) -> str:
    """SHA-256 over big-endian packed dims, weights (row-major), and bias."""
    h = hashlib.sha256()
    m, n = model.W.rows, model.W.cols
    h.update(struct.pack(">II", m, n))
    h.update(struct.pack(f">{m * n}d", *model.W._data))
    h.update(struct.pack(f">{n}d", *model.b._data))
    return h.hexdigest()


def _argmax_lowest(out, n: int, base: int) -> int:
    best = 0
    bv = out[base]
    for j in range(1, n):
        v = out[base + j]
        if v > bv:
            best = j
            bv = v
    return best


def accuracy_from_preactivations(zflat: array, dataset: LabeledDataset, act) -> float:
    s, n = dataset.sample_count, dataset.n_classes
    if len(zflat) != s * n:
        raise ShapeMismatchError(
            f"{len(zflat)} pre-activations cannot cover {s} samples x {n} classes"
        )
    labels = dataset.labels
    correct = 0
    for i in range(s):
        out = act.output(DenseVector._wrap(zflat[i * n : (i + 1) * n]))
        if _argmax_lowest(out._data, n, 0) == labels[i]:
            correct += 1
    return correct / s


def accuracy(model: PerceptronModel, dataset: LabeledDataset, act) -> float:
    """Fraction of samples whose argmax output unit matches the label.

    Ties break toward the lowest index, so an all-zero model predicts
    class 0 for every sample.
    """
    if model.W.cols != dataset.n_classes:
        raise ShapeMismatchError(
            f"dataset one-hots to {dataset.n_classes} classes, "
            f"model has {model.W.cols} output units"
        )
    return accuracy_from_preactivations(forward_all(model, dataset.X), dataset, act)


def _build_trainer(spec: TrainerSpec, model: PerceptronModel, sample_count: int, auto_tau: float) -> Trainer:
    act = parse_activation(spec.activation)
    if spec.kind == CLASSIC_ROSENBLATT:
        return Trainer(spec.kind, model, act, deterministic_batches(1, sample_count))
    tau0 = spec.tau0 if spec.tau0 is not None else auto_tau
    bias_tau0 = spec.bias_tau0 if spec.bias_tau0 is not None else tau0
    make = constant_step if spec.schedule == "constant" else diminishing_step
    if spec.batch_mode == "full":
        plan = full_batch(sample_count)
    elif spec.batch_mode == "deterministic":
        plan = deterministic_batches(spec.batch_size, sample_count)
    else:
        plan = random_batches(spec.batch_size, sample_count, 0)
    return Trainer(
        spec.kind,
        model,
        act,
        plan,
        make(tau0),
        make(bias_tau0),
        alpha=spec.alpha,
        threshold_rule=spec.threshold_rule,
    )


def _spec_metadata(spec: TrainerSpec, trainer: Trainer) -> dict:
    return {
        "kind": spec.kind,
        "activation": spec.activation,
        "alpha": spec.alpha,
        "schedule": spec.schedule,
        "tau0_weights": trainer.weight_schedule.tau0,
        "tau0_bias": trainer.bias_schedule.tau0,
        "batch_mode": trainer.batch_plan.mode,
        "batch_size": trainer.batch_plan.size,
        "threshold_rule": spec.threshold_rule,
    }


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run every configured trainer from one shared initial model.

    A non-finite objective marks that trainer as diverged: its trace keeps
    the offending record and stops early, while the other trainers run on.
    """
    train, val = resolve_datasets(config.dataset, config.seed)
    model0 = init_model(train.input_dim, train.n_classes, config.seed)
    auto_tau = safe_constant_step(train.X)
    traces = {}
    final_models = {}
    diverged = {}
    trainer_meta = {}
    for spec in config.trainers:
        trainer = _build_trainer(spec, model0, train.sample_count, auto_tau)
        trainer_meta[spec.name] = _spec_metadata(spec, trainer)
        records = []
        spent_ms = 0.0
        act = trainer.activation

        def record_point(k: int) -> bool:
            zt = forward_all(trainer.model, train.X)
            obj = objective_from_preactivations(
                zt, train, trainer.loss_kind, trainer.alpha, trainer.model
            )
            records.append(
                TraceRecord(
                    iteration=k,
                    objective=obj,
                    train_accuracy=accuracy_from_preactivations(zt, train, act),
                    val_accuracy=accuracy(trainer.model, val, act),
                    weight_sparsity=zero_fraction(trainer.model.W),
                    wall_time_ms=spent_ms if config.collect_timings else 0.0,
                )
            )
            return math.isfinite(obj)

        alive = record_point(0)
        for k in range(1, config.iterations + 1):
            if not alive:
                break
            start = time.perf_counter()
            trainer.step(train)
            spent_ms += (time.perf_counter() - start) * 1e3
            if k % config.eval_stride == 0 or k == config.iterations:
                alive = record_point(k)
                if not alive:
                    diverged[spec.name] = k
        if not alive and spec.name not in diverged:
            diverged[spec.name] = 0
        traces[spec.name] = records
        final_models[spec.name] = trainer.model
    metadata = {
        "version": VERSION,
        "backend": BACKEND,
        "seed": config.seed,
        "iterations": config.iterations,
        "eval_stride": config.eval_stride,
        "timings_collected": config.collect_timings,
        "dataset": {
            "source": config.dataset.source,
            "data_dir": config.dataset.data_dir,
            "train_count": train.sample_count,
            "val_count": val.sample_count,
            "input_dim": train.input_dim,
            "n_classes": train.n_classes,
            "noise": config.dataset.noise if config.dataset.source == "synthetic" else None,
        },
        "initial_model_sha256": model_digest(model0),
        "auto_tau0": auto_tau,
        "trainers": trainer_meta,
        "diverged": diverged,
    }
    return ExperimentResult(traces=traces, metadata=metadata, final_models=final_models)


def comparison_trainer_specs(alpha_scale: float = 1.0, threshold_rule: str = TAU_SCALED) -> tuple:
    """The four-way comparison lineup: the sparse Bregman trainer against
    constant-step, diminishing-step, and ISTA subgradient baselines.

    Default alphas follow the (0.9, 0.81, 0.81, 0.85) pattern; alpha_scale
    rescales all four together for datasets whose gradient magnitudes sit
    far from the regime those values were tuned for.
    """
    if not (alpha_scale >= 0 and math.isfinite(alpha_scale)):
        raise ValueError("alpha_scale must be finite and >= 0")
    a1, a2, a3, a4 = (a * alpha_scale for a in COMPARISON_ALPHAS)
    return (
        TrainerSpec("rosenblatt-ista", "rosenblatt-ista", alpha=a1, threshold_rule=threshold_rule),
        TrainerSpec("subgradient-constant", "subgradient", alpha=a2),
        TrainerSpec("subgradient-diminishing", "subgradient", alpha=a3, schedule="diminishing"),
        TrainerSpec("subgradient-ista", "subgradient-ista", alpha=a4, threshold_rule=threshold_rule),
    )


# Defaults for "the" comparison run: 200 full-batch iterations from seed 1.
# On the synthetic fallback the alphas shrink by SYNTHETIC_ALPHA_SCALE; the
# literal 0.8-0.9 values assume gradient magnitudes far above what a
# 20-dimensional synthetic cluster set produces, and would zero W outright.
DEFAULT_SEED = 1
DEFAULT_ITERATIONS = 200
SYNTHETIC_ALPHA_SCALE = 0.02


def default_synthetic_experiment_spec() -> DatasetSpec:
    """The stock offline comparison set: 5 overlapping classes in 20 dims.

    Chosen so the trainers separate: a five-class draw usually leaves some
    output unit dead at initialization, which stalls the subderivative-based
    baselines while the Bregman-path trainers keep moving.
    """
    return synthetic_spec(
        train_count=300, val_count=1000, input_dim=20, n_classes=5, noise=0.25
    )


def comparison_experiment_config(
    dataset: DatasetSpec,
    iterations: int = DEFAULT_ITERATIONS,
    seed: int = DEFAULT_SEED,
    alpha_scale: Optional[float] = None,
    threshold_rule: str = TAU_SCALED,
    eval_stride: int = 1,
    collect_timings: bool = False,
) -> ExperimentConfig:
    """Stock four-trainer comparison config over the given data source."""
    if alpha_scale is None:
        alpha_scale = 1.0 if dataset.source == "idx" else SYNTHETIC_ALPHA_SCALE
    return ExperimentConfig(
        trainers=comparison_trainer_specs(alpha_scale, threshold_rule),
        dataset=dataset,
        iterations=iterations,
        seed=seed,
        eval_stride=eval_stride,
        collect_timings=collect_timings,
    )


def sparsity_sweep(
    dataset: DatasetSpec, alphas: Sequence[float], iterations: int, seed: int
) -> list:
    """Final exact-zero sparsity of the sparse Bregman trainer per alpha."""
    out = []
    for alpha in alphas:
        config = ExperimentConfig(
            trainers=(TrainerSpec("sweep", "rosenblatt-ista", alpha=alpha),),
            dataset=dataset,
            iterations=iterations,
            seed=seed,
        )
        result = run_experiment(config)
        out.append(result.traces["sweep"][-1].weight_sparsity)
    return out


CSV_HEADER = "trainer,iteration,objective,train_acc,val_acc,sparsity,wall_time_ms"


def write_trace_csv(traces: dict, path):
    """CSV with rows sorted by (trainer, iteration); reals at 17 significant
    digits so a rerun of the same seed is byte-identical."""
    lines = [CSV_HEADER]
    for name in sorted(traces):
        for rec in sorted(traces[name], key=lambda r: r.iteration):
            lines.append(
                f"{name},{rec.iteration},{rec.objective:.17g},"
                f"{rec.train_accuracy:.17g},{rec.val_accuracy:.17g},"
                f"{rec.weight_sparsity:.17g},{rec.wall_time_ms:.17g}"
            )
    Path(path).write_text("\n".join(lines) + "\n")


def write_metadata_json(metadata: dict, path):
    Path(path).write_text(json.dumps(metadata, indent=2, sort_keys=True) + "\n")
