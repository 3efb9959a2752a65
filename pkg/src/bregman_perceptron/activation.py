"""Proximal activation functions and the classic Heaviside step.

A proximal activation is the proximal map of a proper, lower semi-continuous
convex penalty: ``prox(z) = argmin_u 1/2 ||u - z||^2 + penalty(u)``. Three
kinds are provided:

* ``relu`` — penalty is the indicator of the nonnegative orthant, so the
  prox is the componentwise ramp ``max(0, z_j)``.
* ``identity`` — penalty is identically zero, so the prox is the identity.
* ``softshrink`` — penalty is ``theta * sum |u_j|``; the prox is the
  componentwise soft-threshold (shrinkage) map. Included beyond the two
  classic cases because its penalty has full domain but nonzero values,
  which exercises code paths the other two cannot.

Each kind also carries a one-sided ``subderivative`` rule. Only the
subgradient-descent baselines consume it; the Bregman-loss training path
never differentiates the activation, which is the whole point of that loss.

The Heaviside step is kept separate: no convex penalty generates it, so it
supports only the classic error-driven update, not any gradient-based path.
"""

from __future__ import annotations

import math
from array import array
from dataclasses import dataclass

from .tensor import DenseVector

RELU = "relu"
IDENTITY = "identity"
SOFTSHRINK = "softshrink"

_KINDS = (RELU, IDENTITY, SOFTSHRINK)


@dataclass(frozen=True)
class ProximalActivation:
    """An activation defined as the proximal map of a convex penalty."""

    kind: str
    theta: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown activation kind {self.kind!r}")
        if self.kind == SOFTSHRINK:
            if not (self.theta >= 0.0 and math.isfinite(self.theta)):
                raise ValueError("softshrink threshold must be finite and >= 0")
        elif self.theta != 0.0:
            raise ValueError(f"{self.kind} takes no threshold parameter")

    def prox(self, z: DenseVector) -> DenseVector:
        """Componentwise minimizer of 1/2 (u - z_j)^2 + penalty contribution."""
        zd = z._data
        out = array("d", bytes(8 * len(zd)))
        kind = self.kind
        if kind == RELU:
            for t in range(len(zd)):
                v = zd[t]
                out[t] = v if v > 0.0 else 0.0
        elif kind == IDENTITY:
            for t in range(len(zd)):
                out[t] = zd[t]
        else:
            th = self.theta
            for t in range(len(zd)):
                v = zd[t]
                if v > th:
                    out[t] = v - th
                elif v < -th:
                    out[t] = v + th
                else:
                    out[t] = 0.0
        return DenseVector._wrap(out)

    def output(self, z: DenseVector) -> DenseVector:
        """Forward-pass output; alias of :meth:`prox` for proximal kinds."""
        return self.prox(z)

    def penalty(self, u: DenseVector) -> float:
        """The generating convex penalty, as an extended real.

        Returns ``math.inf`` outside the domain (relu only); callers must
        branch on ``math.isfinite`` rather than compare against a sentinel.
        """
        kind = self.kind
        if kind == RELU:
            for v in u:
                if v < 0.0:
                    return math.inf
            return 0.0
        if kind == IDENTITY:
            return 0.0
        total = 0.0
        for v in u:
            total += abs(v)
        return self.theta * total

    def in_domain(self, y: DenseVector) -> bool:
        """True iff the penalty is finite at ``y``."""
        return math.isfinite(self.penalty(y))

    def subderivative(self, z: DenseVector) -> DenseVector:
        """Componentwise one-sided derivative used by subgradient baselines.

        Convention at kinks: the ramp takes slope one at zero, and the
        shrinkage map takes slope zero on the closed dead zone ``|z| <= theta``.
        """
        zd = z._data
        out = array("d", bytes(8 * len(zd)))
        kind = self.kind
        if kind == RELU:
            for t in range(len(zd)):
                out[t] = 1.0 if zd[t] >= 0.0 else 0.0
        elif kind == IDENTITY:
            for t in range(len(zd)):
                out[t] = 1.0
        else:
            th = self.theta
            for t in range(len(zd)):
                out[t] = 1.0 if abs(zd[t]) > th else 0.0
        return DenseVector._wrap(out)

    def spec_string(self) -> str:
        """Name usable in config files and CLI flags."""
        if self.kind == SOFTSHRINK:
            return f"softshrink:{self.theta!r}"
        return self.kind


@dataclass(frozen=True)
class HeavisideActivation:
    """Parameter-free step function with outputs in {0, 1}.

    Not a proximal activation (no convex penalty generates a discontinuous
    map), so it works only with the classic error-driven update rule.
    """

    def output(self, z: DenseVector) -> DenseVector:
        return heaviside(z)

    def spec_string(self) -> str:
        return "heaviside"


def rectifier() -> ProximalActivation:
    """Ramp activation max(0, z); prox of the nonnegative-orthant indicator."""
    return ProximalActivation(RELU)


def identity_activation() -> ProximalActivation:
    """Identity activation; prox of the zero penalty."""
    return ProximalActivation(IDENTITY)


def softshrink(theta: float) -> ProximalActivation:
    """Soft-threshold activation; prox of ``theta * l1``."""
    return ProximalActivation(SOFTSHRINK, theta)


def heaviside(z: DenseVector) -> DenseVector:
    """Componentwise step: 1 where z_j >= 0, else 0.

    The value 1 at zero mirrors the subderivative convention the ramp uses
    at its kink, keeping the two step-like rules consistent.
    """
    out = array("d", bytes(8 * len(z)))
    zd = z._data
    for t in range(len(zd)):
        out[t] = 1.0 if zd[t] >= 0.0 else 0.0
    return DenseVector._wrap(out)


def parse_activation(spec: str) -> ProximalActivation | HeavisideActivation:
    """Parse an activation name: relu | identity | softshrink:<theta> | heaviside."""
    name = spec.strip().lower()
    if name == RELU:
        return rectifier()
    if name == IDENTITY:
        return identity_activation()
    if name == "heaviside":
        return HeavisideActivation()
    if name.startswith(SOFTSHRINK + ":"):
        raw = name.split(":", 1)[1]
        try:
            theta = float(raw)
        except ValueError:
            raise ValueError(f"bad softshrink threshold {raw!r}") from None
        return softshrink(theta)
    raise ValueError(
        f"unknown activation {spec!r}; expected relu, identity, "
        "softshrink:<theta> or heaviside"
    )
