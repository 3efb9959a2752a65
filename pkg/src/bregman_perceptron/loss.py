"""Per-sample losses on the pre-activation z = W^T x + b.

Two families:

* Bregman loss: ``1/2 ||y - act(z)||^2`` plus a generalized Bregman distance
  from ``y`` to ``act(z)`` taken with respect to the activation's penalty.
  Its gradient in ``z`` is exactly ``act(z) - y``; no derivative of the
  activation appears, so training works through kinks and dead zones.
* Squared loss: plain ``1/2 ||y - act(z)||^2``. Its (sub)gradient carries the
  factor ``subderivative(z)``, which vanishes on dead units.

The Bregman loss also equals a difference of two Moreau envelope values,
``envelope_value(y) - envelope_value(act(z))``; ``envelope_loss`` evaluates
that form independently and serves as a cross-check oracle in the tests.
"""

from __future__ import annotations

import math
from array import array
from typing import Callable

from ._backend import kernels
from .activation import ProximalActivation
from .tensor import DenseVector, ShapeMismatchError


class TargetDomainError(ValueError):
    """Raised when a target vector lies outside the activation's domain."""


def _require_same_len(a: DenseVector, b: DenseVector, what: str):
    if len(a) != len(b):
        raise ShapeMismatchError(f"{what}: lengths {len(a)} vs {len(b)}")


def _half_sq_dist(a: DenseVector, b: DenseVector) -> float:
    total = 0.0
    ad, bd = a._data, b._data
    for t in range(len(ad)):
        d = ad[t] - bd[t]
        total += 0.5 * (d * d)
    return total


def bregman_distance(
    act: ProximalActivation, u: DenseVector, v: DenseVector, q: DenseVector
) -> float:
    """Generalized Bregman distance penalty(u) - penalty(v) - <q, u - v>.

    ``q`` is the caller's choice of subgradient of the penalty at ``v``; the
    loss below always passes ``z - act(z)``, but the argument stays explicit
    so the definition can be probed directly. Returns ``math.inf`` when ``u``
    falls outside the penalty's domain.
    """
    _require_same_len(u, v, "bregman_distance u/v")
    _require_same_len(q, v, "bregman_distance q/v")
    pv = act.penalty(v)
    if not math.isfinite(pv):
        raise ValueError("bregman_distance base point v outside penalty domain")
    pu = act.penalty(u)
    if not math.isfinite(pu):
        return math.inf
    diff = array("d", bytes(8 * len(u)))
    ud, vd = u._data, v._data
    for t in range(len(ud)):
        diff[t] = ud[t] - vd[t]
    return pu - pv - kernels.dot(q._data, diff)


def bregman_loss(act: ProximalActivation, y: DenseVector, z: DenseVector) -> float:
    """Data term 1/2 ||y - act(z)||^2 + distance from y to act(z).

    The distance is taken with the specific subgradient ``z - act(z)``, which
    the prox optimality condition guarantees is valid at ``act(z)``.
    """
    _require_same_len(y, z, "bregman_loss y/z")
    if not act.in_domain(y):
        raise TargetDomainError("target outside activation penalty domain")
    s = act.prox(z)
    q = array("d", bytes(8 * len(z)))
    zd, sd = z._data, s._data
    for t in range(len(zd)):
        q[t] = zd[t] - sd[t]
    return _half_sq_dist(y, s) + bregman_distance(act, y, s, DenseVector._wrap(q))


def envelope_value(act: ProximalActivation, x: DenseVector, z: DenseVector) -> float:
    """Moreau envelope integrand 1/2 ||x - z||^2 + penalty(x)."""
    _require_same_len(x, z, "envelope_value x/z")
    return _half_sq_dist(x, z) + act.penalty(x)


def envelope_loss(act: ProximalActivation, y: DenseVector, z: DenseVector) -> float:
    """Bregman loss computed as a difference of two envelope evaluations.

    Algebraically identical to :func:`bregman_loss` but shares no
    intermediate terms with it, so it works as an independent oracle.
    """
    _require_same_len(y, z, "envelope_loss y/z")
    if not act.in_domain(y):
        raise TargetDomainError("target outside activation penalty domain")
    return envelope_value(act, y, z) - envelope_value(act, act.prox(z), z)


def bregman_loss_grad_z(
    act: ProximalActivation, y: DenseVector, z: DenseVector
) -> DenseVector:
    """Gradient of the Bregman loss in z: act(z) - y, with no derivative of act."""
    _require_same_len(y, z, "bregman_loss_grad_z y/z")
    if not act.in_domain(y):
        raise TargetDomainError("target outside activation penalty domain")
    s = act.prox(z)
    out = array("d", bytes(8 * len(z)))
    sd, yd = s._data, y._data
    for t in range(len(sd)):
        out[t] = sd[t] - yd[t]
    return DenseVector._wrap(out)


def squared_loss(act, y: DenseVector, z: DenseVector) -> float:
    """Baseline 1/2 ||y - act(z)||^2; accepts any activation with output()."""
    _require_same_len(y, z, "squared_loss y/z")
    return _half_sq_dist(y, act.output(z))


def squared_loss_subgrad_z(act, y: DenseVector, z: DenseVector) -> DenseVector:
    """Componentwise (act(z) - y) * subderivative(z).

    The subderivative factor is what kills learning on dead units; it is kept
    deliberately so the baselines reproduce that behavior.
    """
    _require_same_len(y, z, "squared_loss_subgrad_z y/z")
    if not hasattr(act, "subderivative"):
        raise TypeError(
            f"{type(act).__name__} has no subderivative rule; "
            "subgradient updates are undefined for it"
        )
    s = act.output(z)
    d = act.subderivative(z)
    out = array("d", bytes(8 * len(z)))
    sd, yd, dd = s._data, y._data, d._data
    for t in range(len(sd)):
        out[t] = (sd[t] - yd[t]) * dd[t]
    return DenseVector._wrap(out)


def central_difference_grad(
    loss: Callable[[DenseVector], float], z: DenseVector, h: float = 1e-6
) -> DenseVector:
    """Central finite differences of a scalar loss over coordinates of z.

    Meaningful only where the loss is differentiable; callers keep z away
    from activation kinks, where one-sided behavior would poison the quotient.
    """
    base = z.to_list()
    out = array("d", bytes(8 * len(base)))
    for j in range(len(base)):
        bumped = list(base)
        bumped[j] = base[j] + h
        up = loss(DenseVector(bumped))
        bumped[j] = base[j] - h
        down = loss(DenseVector(bumped))
        out[j] = (up - down) / (2.0 * h)
    return DenseVector._wrap(out)


class BregmanLoss:
    """Loss-kind tag: Bregman data term under a proximal activation."""

    needs_subderivative = False

    def __init__(self, activation: ProximalActivation):
        if not isinstance(activation, ProximalActivation):
            raise TypeError("Bregman loss requires a proximal activation")
        self.activation = activation

    def per_sample(self, y: DenseVector, z: DenseVector) -> float:
        return bregman_loss(self.activation, y, z)

    def grad_z(self, y: DenseVector, z: DenseVector) -> DenseVector:
        return bregman_loss_grad_z(self.activation, y, z)

    def __repr__(self):
        return f"BregmanLoss({self.activation.spec_string()})"


class SquaredLoss:
    """Loss-kind tag: squared Euclidean baseline, any activation."""

    needs_subderivative = True

    def __init__(self, activation):
        self.activation = activation

    def per_sample(self, y: DenseVector, z: DenseVector) -> float:
        return squared_loss(self.activation, y, z)

    def grad_z(self, y: DenseVector, z: DenseVector) -> DenseVector:
        return squared_loss_subgrad_z(self.activation, y, z)

    def __repr__(self):
        return f"SquaredLoss({self.activation.spec_string()})"
