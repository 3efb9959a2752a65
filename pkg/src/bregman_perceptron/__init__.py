"""Generalized perceptron training with proximal activations.

The central object is a single-layer model ``y ~ act(W^T x + b)`` trained
under a Bregman-distance loss whose gradient in the pre-activation is just
``act(z) - y``, so no derivative of the activation is ever needed. Classic
error-driven learning and the delta rule drop out as special cases, and an
iterative shrinkage variant trains sparse weights under an l1 penalty.

Numeric kernels run on a compiled extension when available and on a pure
Python fallback otherwise; both produce bit-identical IEEE-754 results.
Set ``BREGMAN_PERCEPTRON_PURE=1`` to force the fallback.
"""

from ._backend import BACKEND
from ._version import VERSION as __version__
from .activation import (
    HeavisideActivation,
    ProximalActivation,
    heaviside,
    identity_activation,
    parse_activation,
    rectifier,
    softshrink,
)
from .data import (
    DataError,
    LabeledDataset,
    load_dataset_dir,
    load_labeled,
    normalize_pixels,
    one_hot,
    subsample,
    synthetic_dataset,
)
from .experiment import (
    DatasetSpec,
    ExperimentConfig,
    ExperimentResult,
    TraceRecord,
    TrainerSpec,
    accuracy,
    default_synthetic_experiment_spec,
    idx_spec,
    comparison_trainer_specs,
    comparison_experiment_config,
    resolve_datasets,
    run_experiment,
    synthetic_spec,
    write_metadata_json,
    write_trace_csv,
)
from .loss import (
    BregmanLoss,
    SquaredLoss,
    TargetDomainError,
    bregman_distance,
    bregman_loss,
    bregman_loss_grad_z,
    envelope_loss,
    squared_loss,
    squared_loss_subgrad_z,
)
from .optim import (
    BatchPlan,
    PerceptronModel,
    StepSchedule,
    Trainer,
    TrainingSet,
    bregman_sgd_step,
    constant_step,
    diminishing_step,
    forward,
    init_model,
    objective,
    rosenblatt_ista_step,
    rosenblatt_step,
    safe_constant_step,
    soft_threshold,
    subgradient_ista_step,
    subgradient_step,
)
from .tensor import DenseMatrix, DenseVector, ShapeMismatchError

__all__ = [
    "BACKEND",
    "BatchPlan",
    "BregmanLoss",
    "DataError",
    "DatasetSpec",
    "DenseMatrix",
    "DenseVector",
    "ExperimentConfig",
    "ExperimentResult",
    "HeavisideActivation",
    "LabeledDataset",
    "PerceptronModel",
    "ProximalActivation",
    "ShapeMismatchError",
    "SquaredLoss",
    "StepSchedule",
    "TargetDomainError",
    "TraceRecord",
    "Trainer",
    "TrainerSpec",
    "TrainingSet",
    "__version__",
    "accuracy",
    "bregman_distance",
    "bregman_loss",
    "bregman_loss_grad_z",
    "bregman_sgd_step",
    "constant_step",
    "default_synthetic_experiment_spec",
    "diminishing_step",
    "envelope_loss",
    "forward",
    "heaviside",
    "identity_activation",
    "idx_spec",
    "init_model",
    "load_dataset_dir",
    "load_labeled",
    "normalize_pixels",
    "objective",
    "one_hot",
    "comparison_trainer_specs",
    "comparison_experiment_config",
    "parse_activation",
    "rectifier",
    "resolve_datasets",
    "rosenblatt_ista_step",
    "rosenblatt_step",
    "run_experiment",
    "safe_constant_step",
    "soft_threshold",
    "softshrink",
    "squared_loss",
    "squared_loss_subgrad_z",
    "subgradient_ista_step",
    "subgradient_step",
    "subsample",
    "synthetic_dataset",
    "synthetic_spec",
    "write_metadata_json",
    "write_trace_csv",
]
