"""Training procedures for the generalized perceptron.

Four update rules over a shared model shape (weights m x n, bias n):

* classic error-driven rule: per-sample, step size one, no regularizer;
* incremental gradient on the Bregman loss: residual ``act(z) - y`` with no
  derivative of the activation (reduces to the classic rule at step one and
  batch size one, and to the delta rule under the identity activation);
* mini-batch subgradient descent on the squared loss: residual carries the
  activation subderivative, so dead units contribute nothing;
* the ISTA variants of both: gradient step on the data term, then the l1
  proximal (soft-threshold) applied to the weights, never to the bias.

All batch gradients accumulate in ascending sample order with plain
binary64 arithmetic, so cross-trainer equivalences hold bitwise, not just
to rounding.
"""

from __future__ import annotations

import math
import random
from array import array
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Sequence

from ._backend import kernels
from .activation import ProximalActivation
from .loss import BregmanLoss, SquaredLoss, bregman_loss_grad_z, squared_loss_subgrad_z
from .tensor import DenseMatrix, DenseVector, ShapeMismatchError

CLASSIC_ROSENBLATT = "classic-rosenblatt"
BREGMAN_SGD = "bregman-sgd"
SUBGRADIENT = "subgradient"
ROSENBLATT_ISTA = "rosenblatt-ista"
SUBGRADIENT_ISTA = "subgradient-ista"

TRAINER_KINDS = (
    CLASSIC_ROSENBLATT,
    BREGMAN_SGD,
    SUBGRADIENT,
    ROSENBLATT_ISTA,
    SUBGRADIENT_ISTA,
)

_BREGMAN_KINDS = (BREGMAN_SGD, ROSENBLATT_ISTA)
_SUBGRADIENT_KINDS = (SUBGRADIENT, SUBGRADIENT_ISTA)
_ISTA_KINDS = (ROSENBLATT_ISTA, SUBGRADIENT_ISTA)

# How the l1 prox threshold is derived from (alpha, tau_w): "literal-alpha"
# shrinks by alpha itself, "tau-scaled" by tau_w * alpha. The scaled form is
# the actual prox of the regularized objective and is the default; the
# literal form matches the shrinkage rule as classically printed.
LITERAL_ALPHA = "literal-alpha"
TAU_SCALED = "tau-scaled"
THRESHOLD_RULES = (LITERAL_ALPHA, TAU_SCALED)


class TrainingSet(NamedTuple):
    """Minimal aligned (inputs, targets) pair the step functions accept.

    Targets are arbitrary vectors; classification datasets (one-hot rows)
    satisfy the same X/Y shape and work unchanged.
    """

    X: DenseMatrix
    Y: DenseMatrix


@dataclass(frozen=True)
class PerceptronModel:
    """Weights W (inputs x outputs) and bias b (outputs)."""

    W: DenseMatrix
    b: DenseVector

    def __post_init__(self):
        if self.W.cols != len(self.b):
            raise ShapeMismatchError(
                f"bias length {len(self.b)} does not match {self.W.cols} outputs"
            )

    @property
    def input_dim(self) -> int:
        return self.W.rows

    @property
    def output_dim(self) -> int:
        return self.W.cols


def init_model(input_dim: int, output_dim: int, seed: int) -> PerceptronModel:
    """Seeded uniform init: W entries in [-1/sqrt(m), 1/sqrt(m)], zero bias.

    Entries are drawn in row-major order so the same seed yields the same
    model across platforms and backends.
    """
    if input_dim < 1 or output_dim < 1:
        raise ValueError("model dimensions must be positive")
    rng = random.Random(seed)
    r = 1.0 / math.sqrt(input_dim)
    w = array("d", (rng.uniform(-r, r) for _ in range(input_dim * output_dim)))
    b = array("d", bytes(8 * output_dim))
    return PerceptronModel(
        DenseMatrix._wrap(input_dim, output_dim, w), DenseVector._wrap(b)
    )


@dataclass(frozen=True)
class StepSchedule:
    kind: str  # "constant" | "diminishing"
    tau0: float

    def __post_init__(self):
        if self.kind not in ("constant", "diminishing"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if not (self.tau0 > 0.0 and math.isfinite(self.tau0)):
            raise ValueError("base step size must be positive and finite")


def constant_step(tau0: float) -> StepSchedule:
    return StepSchedule("constant", tau0)


def diminishing_step(tau0: float) -> StepSchedule:
    """tau0 / sqrt(k) at iteration k >= 1."""
    return StepSchedule("diminishing", tau0)


def step_size(schedule: StepSchedule, k: int) -> float:
    if k < 1:
        raise ValueError(f"iterations count from 1, got {k}")
    if schedule.kind == "constant":
        return schedule.tau0
    return schedule.tau0 / math.sqrt(k)


@dataclass(frozen=True)
class BatchPlan:
    mode: str  # "full" | "deterministic" | "random"
    size: int
    sample_count: int
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("full", "deterministic", "random"):
            raise ValueError(f"unknown batch mode {self.mode!r}")
        if self.sample_count < 1:
            raise ValueError("sample count must be positive")
        if not 1 <= self.size <= self.sample_count:
            raise ValueError(
                f"batch size {self.size} not in [1, {self.sample_count}]"
            )
        if self.mode == "full" and self.size != self.sample_count:
            raise ValueError("full-batch plan must cover every sample")


def full_batch(sample_count: int) -> BatchPlan:
    return BatchPlan("full", sample_count, sample_count)


def deterministic_batches(size: int, sample_count: int) -> BatchPlan:
    """Contiguous cyclic windows; consecutive iterations tile the sample set."""
    return BatchPlan("deterministic", size, sample_count)


def random_batches(size: int, sample_count: int, seed: int) -> BatchPlan:
    return BatchPlan("random", size, sample_count, seed)


def select_batch(plan: BatchPlan, k: int) -> list:
    """Zero-based sample indices for iteration k >= 1.

    Deterministic windows start at ((k-1) * size) mod s and wrap. Random
    batches draw without replacement from a generator keyed on (seed, k),
    so a given iteration is reproducible in isolation.
    """
    if k < 1:
        raise ValueError(f"iterations count from 1, got {k}")
    s = plan.sample_count
    if plan.mode == "full":
        return list(range(s))
    if plan.mode == "deterministic":
        start = ((k - 1) * plan.size) % s
        return [(start + t) % s for t in range(plan.size)]
    rng = random.Random(plan.seed * 1_000_003 + k)
    return rng.sample(range(s), plan.size)


def forward(model: PerceptronModel, x: DenseVector, act) -> tuple:
    """Pre-activation z = W^T x + b and output act(z), both returned."""
    m, n = model.W.rows, model.W.cols
    if len(x) != m:
        raise ShapeMismatchError(f"input length {len(x)}, model expects {m}")
    z = array("d", bytes(8 * n))
    kernels.affine_transposed(model.W._data, m, n, x._data, 0, model.b._data, z)
    zv = DenseVector._wrap(z)
    return zv, act.output(zv)


def forward_all(model: PerceptronModel, X: DenseMatrix) -> array:
    """Flat row-major pre-activations (s x n) for every row of X."""
    if X.cols != model.W.rows:
        raise ShapeMismatchError(
            f"inputs have {X.cols} features, model expects {model.W.rows}"
        )
    s, m, n = X.rows, model.W.rows, model.W.cols
    out = array("d", bytes(8 * s * n))
    kernels.matmul_affine(X._data, s, m, model.W._data, n, model.b._data, out)
    return out


def rosenblatt_step(
    model: PerceptronModel, x: DenseVector, y: DenseVector, act
) -> PerceptronModel:
    """Classic per-sample rule: e = y - act(z); W += x e^T; b += e.

    No step size and no regularizer; works with any activation that has an
    output, the step function included.
    """
    m, n = model.W.rows, model.W.cols
    if len(y) != n:
        raise ShapeMismatchError(f"target length {len(y)}, model expects {n}")
    _, out = forward(model, x, act)
    e = array("d", bytes(8 * n))
    yd, od = y._data, out._data
    for j in range(n):
        e[j] = yd[j] - od[j]
    wnew = array("d", model.W._data)
    kernels.add_outer(wnew, e, n, x._data, 0, m)
    bnew = array("d", bytes(8 * n))
    kernels.axpy(1.0, e, model.b._data, bnew)
    return PerceptronModel(DenseMatrix._wrap(m, n, wnew), DenseVector._wrap(bnew))


def _check_batch(dataset, model: PerceptronModel, batch) -> list:
    idx = sorted(batch)
    s = dataset.X.rows
    if not idx:
        raise ValueError("batch must contain at least one sample")
    if idx[0] < 0 or idx[-1] >= s:
        raise IndexError(f"batch index outside [0, {s}): {idx[0]}..{idx[-1]}")
    if dataset.X.cols != model.W.rows or dataset.Y.cols != model.W.cols:
        raise ShapeMismatchError(
            f"dataset {dataset.X.cols}->{dataset.Y.cols} vs "
            f"model {model.W.rows}->{model.W.cols}"
        )
    return idx


def _batch_gradient(
    model: PerceptronModel,
    dataset,
    batch: Sequence[int],
    residual: Callable[[DenseVector, DenseVector], DenseVector],
) -> tuple:
    """Mean of residual outer products over the batch, ascending index order."""
    idx = _check_batch(dataset, model, batch)
    m, n = model.W.rows, model.W.cols
    X, Y = dataset.X, dataset.Y
    wd, bd = model.W._data, model.b._data
    G = array("d", bytes(8 * m * n))
    gb = array("d", bytes(8 * n))
    zbuf = array("d", bytes(8 * n))
    for i in idx:
        kernels.affine_transposed(wd, m, n, X._data, i * m, bd, zbuf)
        r = residual(Y.row(i), DenseVector._wrap(zbuf))
        rd = r._data
        kernels.add_outer(G, rd, n, X._data, i * m, m)
        for j in range(n):
            gb[j] += rd[j]
    inv = 1.0 / len(idx)
    kernels.scale_inplace(G, inv)
    kernels.scale_inplace(gb, inv)
    return G, gb


def _apply_gradient(model, G, gb, tau_w: float, tau_b: float) -> PerceptronModel:
    m, n = model.W.rows, model.W.cols
    wnew = array("d", bytes(8 * m * n))
    kernels.axpy(-tau_w, G, model.W._data, wnew)
    bnew = array("d", bytes(8 * n))
    kernels.axpy(-tau_b, gb, model.b._data, bnew)
    return PerceptronModel(DenseMatrix._wrap(m, n, wnew), DenseVector._wrap(bnew))


def _require_prox(act):
    if not isinstance(act, ProximalActivation):
        raise TypeError(
            "Bregman-loss training needs a proximal activation; "
            f"got {type(act).__name__}"
        )


def _require_subderivative(act):
    if not hasattr(act, "subderivative"):
        raise TypeError(
            f"{type(act).__name__} has no subderivative rule; "
            "subgradient training is undefined for it"
        )


def _check_steps(tau_w: float, tau_b: float):
    if not (tau_w > 0.0 and math.isfinite(tau_w)):
        raise ValueError("weight step size must be positive and finite")
    if not (tau_b > 0.0 and math.isfinite(tau_b)):
        raise ValueError("bias step size must be positive and finite")


def _check_alpha(alpha: float):
    if not (alpha >= 0.0 and math.isfinite(alpha)):
        raise ValueError("l1 weight alpha must be finite and >= 0")


def bregman_sgd_step(
    model: PerceptronModel,
    dataset,
    batch: Sequence[int],
    act: ProximalActivation,
    tau_w: float,
    tau_b: float,
) -> PerceptronModel:
    """Gradient step on the Bregman loss: residual act(z) - y, no subderivative.

    At batch size one and both steps equal to one this reproduces
    :func:`rosenblatt_step` bit for bit.
    """
    _require_prox(act)
    _check_steps(tau_w, tau_b)
    G, gb = _batch_gradient(
        model, dataset, batch, lambda y, z: bregman_loss_grad_z(act, y, z)
    )
    return _apply_gradient(model, G, gb, tau_w, tau_b)


def subgradient_step(
    model: PerceptronModel,
    dataset,
    batch: Sequence[int],
    act,
    tau_w: float,
    tau_b: float,
) -> PerceptronModel:
    """Mini-batch subgradient step on the squared loss; keeps the act'(z) factor."""
    _require_subderivative(act)
    _check_steps(tau_w, tau_b)
    G, gb = _batch_gradient(
        model, dataset, batch, lambda y, z: squared_loss_subgrad_z(act, y, z)
    )
    return _apply_gradient(model, G, gb, tau_w, tau_b)


def soft_threshold(W: DenseMatrix, theta: float) -> DenseMatrix:
    """Elementwise sign(w) * max(|w| - theta, 0); the l1 prox on matrices."""
    if not (theta >= 0.0 and math.isfinite(theta)):
        raise ValueError("threshold must be finite and >= 0")
    out = array("d", bytes(8 * W.rows * W.cols))
    kernels.soft_threshold(W._data, theta, out)
    return DenseMatrix._wrap(W.rows, W.cols, out)


def _threshold_for(alpha: float, tau_w: float, threshold_rule: str) -> float:
    if threshold_rule not in THRESHOLD_RULES:
        raise ValueError(f"unknown threshold rule {threshold_rule!r}")
    return alpha if threshold_rule == LITERAL_ALPHA else tau_w * alpha


def rosenblatt_ista_step(
    model: PerceptronModel,
    dataset,
    batch: Sequence[int],
    act: ProximalActivation,
    tau_w: float,
    tau_b: float,
    alpha: float,
    threshold_rule: str = TAU_SCALED,
) -> PerceptronModel:
    """Bregman gradient step, then soft-threshold of the weights only.

    The residual is act(z) - y with no subderivative factor, so shrinkage is
    the only nonsmooth operation in the update. The bias follows the plain
    gradient step and is never thresholded.
    """
    _require_prox(act)
    _check_steps(tau_w, tau_b)
    _check_alpha(alpha)
    theta = _threshold_for(alpha, tau_w, threshold_rule)
    G, gb = _batch_gradient(
        model, dataset, batch, lambda y, z: bregman_loss_grad_z(act, y, z)
    )
    stepped = _apply_gradient(model, G, gb, tau_w, tau_b)
    return PerceptronModel(soft_threshold(stepped.W, theta), stepped.b)


def subgradient_ista_step(
    model: PerceptronModel,
    dataset,
    batch: Sequence[int],
    act,
    tau_w: float,
    tau_b: float,
    alpha: float,
    threshold_rule: str = TAU_SCALED,
) -> PerceptronModel:
    """Like rosenblatt_ista_step but the data step uses the squared-loss
    subgradient, so the act'(z) factor (and its dead zones) comes back."""
    _require_subderivative(act)
    _check_steps(tau_w, tau_b)
    _check_alpha(alpha)
    theta = _threshold_for(alpha, tau_w, threshold_rule)
    G, gb = _batch_gradient(
        model, dataset, batch, lambda y, z: squared_loss_subgrad_z(act, y, z)
    )
    stepped = _apply_gradient(model, G, gb, tau_w, tau_b)
    return PerceptronModel(soft_threshold(stepped.W, theta), stepped.b)


def objective(model: PerceptronModel, dataset, loss_kind, alpha: float) -> float:
    """Mean per-sample loss plus alpha * l1 norm of the weights (bias exempt)."""
    _check_alpha(alpha)
    zflat = forward_all(model, dataset.X)
    return objective_from_preactivations(zflat, dataset, loss_kind, alpha, model)


def objective_from_preactivations(
    zflat: array, dataset, loss_kind, alpha: float, model: PerceptronModel
) -> float:
    """Objective evaluated from precomputed pre-activations (see forward_all).

    Split out so callers that also need per-sample outputs can reuse one
    matrix product per evaluation point.
    """
    s = dataset.X.rows
    n = model.W.cols
    total = 0.0
    for i in range(s):
        z = DenseVector._wrap(zflat[i * n : (i + 1) * n])
        total += loss_kind.per_sample(dataset.Y.row(i), z)
    return total / s + alpha * kernels.l1_norm(model.W._data)


def augmented_gram_lipschitz(
    X: DenseMatrix, tol: float = 1e-10, max_iterations: int = 500
) -> float:
    """Top eigenvalue of (1/s) Xa^T Xa, Xa being X with a ones column appended.

    Power iteration from the all-ones direction; the appended column models
    the bias coordinate, so the result bounds the gradient Lipschitz
    constant of the full-batch data term jointly in (W, b).
    """
    s, m = X.rows, X.cols
    ma = m + 1
    xa = array("d", bytes(8 * s * ma))
    xd = X._data
    for i in range(s):
        xa[i * ma : i * ma + m] = xd[i * m : (i + 1) * m]
        xa[i * ma + m] = 1.0
    v = array("d", [1.0 / math.sqrt(ma)] * ma)
    u = array("d", bytes(8 * s))
    w = array("d", bytes(8 * ma))
    no_bias = array("d", [0.0])
    lam = 0.0
    for _ in range(max_iterations):
        kernels.matmul_affine(xa, s, ma, v, 1, no_bias, u)
        kernels.matvec_transposed(xa, s, ma, u, 0, w)
        kernels.scale_inplace(w, 1.0 / s)
        new_lam = kernels.dot(v, w)
        norm = math.sqrt(kernels.dot(w, w))
        if norm == 0.0:
            return 0.0
        for t in range(ma):
            v[t] = w[t] / norm
        done = abs(new_lam - lam) <= tol * max(1.0, abs(new_lam))
        lam = new_lam
        if done:
            break
    return lam


def safe_constant_step(X: DenseMatrix, margin: float = 1.01) -> float:
    """Constant step 1 / (margin * Lipschitz estimate).

    The margin absorbs the one-sided error of power iteration (which
    approaches the top eigenvalue from below), keeping full-batch descent
    on the Bregman objective monotone.
    """
    if margin < 1.0:
        raise ValueError("margin must be >= 1")
    return 1.0 / (margin * augmented_gram_lipschitz(X))


class Trainer:
    """One trainer kind bound to its model, activation, and hyperparameters.

    Holds the mutable state (current model, completed iteration count) so
    different trainers can be stepped side by side from a shared initial
    model and compared iteration by iteration.
    """

    def __init__(
        self,
        kind: str,
        model: PerceptronModel,
        activation,
        batch_plan: BatchPlan,
        weight_schedule: Optional[StepSchedule] = None,
        bias_schedule: Optional[StepSchedule] = None,
        alpha: float = 0.0,
        threshold_rule: str = TAU_SCALED,
    ):
        if kind not in TRAINER_KINDS:
            raise ValueError(f"unknown trainer kind {kind!r}")
        if kind in _BREGMAN_KINDS:
            _require_prox(activation)
        if kind in _SUBGRADIENT_KINDS:
            _require_subderivative(activation)
        _check_alpha(alpha)
        if threshold_rule not in THRESHOLD_RULES:
            raise ValueError(f"unknown threshold rule {threshold_rule!r}")
        if kind == CLASSIC_ROSENBLATT:
            if batch_plan.mode != "deterministic" or batch_plan.size != 1:
                raise ValueError(
                    "the classic rule is per-sample: use a deterministic "
                    "batch plan of size 1"
                )
            if alpha != 0.0:
                raise ValueError("the classic rule has no l1 term; alpha must be 0")
            weight_schedule = weight_schedule or constant_step(1.0)
            bias_schedule = bias_schedule or weight_schedule
            if (weight_schedule, bias_schedule) != (constant_step(1.0),) * 2:
                raise ValueError("the classic rule uses step size 1 exactly")
        else:
            if weight_schedule is None:
                raise ValueError(f"{kind} requires a weight step schedule")
            bias_schedule = bias_schedule or weight_schedule
        self.kind = kind
        self.model = model
        self.activation = activation
        self.batch_plan = batch_plan
        self.weight_schedule = weight_schedule
        self.bias_schedule = bias_schedule
        self.alpha = alpha
        self.threshold_rule = threshold_rule
        self.iteration = 0
        if kind in _BREGMAN_KINDS:
            self.loss_kind = BregmanLoss(activation)
        else:
            self.loss_kind = SquaredLoss(activation)

    def step(self, dataset):
        """Advance exactly one iteration."""
        k = self.iteration + 1
        batch = select_batch(self.batch_plan, k)
        if self.kind == CLASSIC_ROSENBLATT:
            i = batch[0]
            self.model = rosenblatt_step(
                self.model, dataset.X.row(i), dataset.Y.row(i), self.activation
            )
        else:
            tau_w = step_size(self.weight_schedule, k)
            tau_b = step_size(self.bias_schedule, k)
            if self.kind == BREGMAN_SGD:
                self.model = bregman_sgd_step(
                    self.model, dataset, batch, self.activation, tau_w, tau_b
                )
            elif self.kind == SUBGRADIENT:
                self.model = subgradient_step(
                    self.model, dataset, batch, self.activation, tau_w, tau_b
                )
            elif self.kind == ROSENBLATT_ISTA:
                self.model = rosenblatt_ista_step(
                    self.model, dataset, batch, self.activation,
                    tau_w, tau_b, self.alpha, self.threshold_rule,
                )
            else:
                self.model = subgradient_ista_step(
                    self.model, dataset, batch, self.activation,
                    tau_w, tau_b, self.alpha, self.threshold_rule,
                )
        self.iteration = k

    def objective(self, dataset) -> float:
        """This trainer's own objective: its loss plus its alpha * l1(W)."""
        return objective(self.model, dataset, self.loss_kind, self.alpha)

    def run(self, dataset, iterations: int, observer=None):
        """Step `iterations` times; observer(k, model) fires at the current
        state first and then after every step."""
        if iterations < 0:
            raise ValueError("iteration count must be >= 0")
        if observer is not None:
            observer(self.iteration, self.model)
        for _ in range(iterations):
            self.step(dataset)
            if observer is not None:
                observer(self.iteration, self.model)
