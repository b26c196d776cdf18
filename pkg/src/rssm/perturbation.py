"""Compactly supported perturbation laws with closed-form Fourier transforms.

Two families are provided: the uniform law on ``[-a, a]`` and its m-fold
self-convolution (a centred B-spline of order ``m``).  The characteristic
function of the spline is ``sinc(a x)**m``, so its decay order is exactly m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ifs import InvalidSystemError

UNIFORM = "uniform"
SPLINE = "spline"


@dataclass(frozen=True)
class PerturbationDistribution:
    kind: str
    half_width: float
    order: int = 1

    def __post_init__(self):
        if self.kind not in (UNIFORM, SPLINE):
            raise InvalidSystemError(f"unknown perturbation kind {self.kind!r}")
        if self.kind == UNIFORM and self.order != 1:
            raise InvalidSystemError("the uniform law has order 1")
        if self.kind == SPLINE and self.order < 2:
            raise InvalidSystemError(f"spline order must be >= 2, got {self.order}")
        if not (self.half_width >= 0.0 and math.isfinite(self.half_width)):
            raise InvalidSystemError(f"half_width must be >= 0, got {self.half_width}")

    @classmethod
    def uniform(cls, half_width: float) -> "PerturbationDistribution":
        return cls(UNIFORM, float(half_width), 1)

    @classmethod
    def spline(cls, order: int, half_width: float) -> "PerturbationDistribution":
        return cls(SPLINE, float(half_width), int(order))

    @property
    def support_radius(self) -> float:
        return self.order * self.half_width

    @property
    def decay_order(self) -> int:
        # half_width 0 is a point mass at 0, whose transform does not decay
        return self.order if self.half_width > 0 else 0

    @property
    def decay_constant(self) -> float:
        """``C`` with ``|transform(x)| <= C / (1 + |x|)**decay_order``."""
        if self.half_width == 0:
            return 1.0
        return (1.0 + 1.0 / self.half_width) ** self.order

    @property
    def variance(self) -> float:
        return self.order * self.half_width ** 2 / 3.0

    def pdf(self, x):
        """Density; only defined for ``half_width > 0``."""
        a, m = self.half_width, self.order
        if a == 0:
            raise InvalidSystemError("a point mass has no density")
        x = np.asarray(x, dtype=float)
        # Irwin-Hall density of the sum of m U(0,1), rescaled to [-m a, m a]
        u = (x + m * a) / (2.0 * a)
        out = np.zeros_like(u)
        inside = (u > 0) & (u < m)
        ui = u[inside]
        acc = np.zeros_like(ui)
        for k in range(m + 1):
            acc += (-1) ** k * math.comb(m, k) * np.where(ui > k, (ui - k) ** (m - 1), 0.0)
        out[inside] = acc / math.factorial(m - 1)
        return out / (2.0 * a)


def fourier_transform(dist: PerturbationDistribution, x):
    """``E exp(i x Theta)``; real because every law here is symmetric."""
    x = np.asarray(x, dtype=float)
    base = np.sinc(dist.half_width * x / np.pi)
    out = base ** dist.order
    return out if out.ndim else float(out)


def decay_exponent_estimate(dist: PerturbationDistribution, x_min: float,
                            x_max: float, samples: int = 20000) -> float:
    """Fitted polynomial decay order of ``|transform|``.

    ``|transform|`` vanishes at the zeros of the sinc factor, so the fit uses
    only the local maxima of ``|transform|`` on a log-spaced grid and regresses
    their logarithm against ``log x``.
    """
    if not (0.0 < x_min < x_max) or samples < 3:
        raise InvalidSystemError("need 0 < x_min < x_max and at least 3 samples")
    x = np.geomspace(x_min, x_max, samples)
    y = np.abs(fourier_transform(dist, x))
    peak = (y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:]) & (y[1:-1] > 0)
    xs, ys = x[1:-1][peak], y[1:-1][peak]
    if xs.size < 3:
        raise InvalidSystemError(
            f"only {xs.size} local maxima on [{x_min}, {x_max}]; widen or refine the grid")
    slope, _ = np.polyfit(np.log(xs), np.log(ys), 1)
    return -float(slope)


def sample_value(dist: PerturbationDistribution, rng: np.random.Generator,
                 size=None):
    a = dist.half_width
    if size is None:
        return float(rng.uniform(-a, a, size=dist.order).sum())
    shape = (size,) if np.isscalar(size) else tuple(size)
    return rng.uniform(-a, a, size=shape + (dist.order,)).sum(axis=-1)


def from_uniforms(dist: PerturbationDistribution, u: np.ndarray) -> np.ndarray:
    """Map U(0,1) draws with trailing axis ``order`` to perturbation values."""
    return dist.half_width * (2.0 * u - 1.0).sum(axis=-1)


def admissible_for(dist: PerturbationDistribution, s_prime: float) -> bool:
    """Whether the decay order is at least ``s_prime``."""
    return dist.decay_order >= s_prime
