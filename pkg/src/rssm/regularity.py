"""Density estimates and regularity diagnostics for one or many realizations."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .ifs import InvalidSystemError, SelfSimilarIFS
from .measure import BernoulliMeasure
from .perturbation import PerturbationDistribution
from .realization import (DEFAULT_ATOM_BUDGET, AtomicApproximation, Cover,
                          atomic_approximation, trial_seed)
from .spectral import truncated_inverse_densities

BALL = "ball"
SMOOTHED = "smoothed"
FOURIER = "fourier"


@dataclass(eq=False)
class DensityEstimate:
    grid: np.ndarray
    values: np.ndarray
    method: str
    parameter: float  # radius for ball/smoothed, cutoff for fourier
    seed: int | None = None
    depth: int | None = None

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.grid.shape != self.values.shape:
            raise InvalidSystemError("grid and values differ in shape")
        if np.any(np.diff(self.grid) <= 0):
            raise InvalidSystemError("grid must be strictly increasing")

    @property
    def label(self) -> str:
        name = "cutoff" if self.method == FOURIER else "r"
        return f"{self.method}({name}={self.parameter:.6g})"

    def write_csv(self, path, digest: str | None = None) -> None:
        with open(path, "w", newline="") as fh:
            if digest:
                fh.write(f"# config_sha256={digest}\n")
            fh.write(f"# method={self.label} seed={self.seed} depth={self.depth}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["x", "density"])
            for x, v in zip(self.grid, self.values):
                writer.writerow([f"{x:.16e}", f"{v:.16e}"])


class _SortedCloud:
    def __init__(self, atomic: AtomicApproximation):
        self.y, self.w = atomic.sorted()
        self.cum = np.concatenate([[0.0], np.cumsum(self.w)])

    def mass(self, x, radius):
        """Closed-ball masses ``nu(B(x, radius))``; boundary atoms count."""
        lo = np.searchsorted(self.y, x - radius, side="left")
        hi = np.searchsorted(self.y, x + radius, side="right")
        return self.cum[hi] - self.cum[lo], lo, hi


def ball_density(atomic: AtomicApproximation, x, r: float):
    if not r > 0:
        raise InvalidSystemError(f"radius must be positive, got {r}")
    cloud = _SortedCloud(atomic)
    m, _, _ = cloud.mass(np.asarray(x, dtype=float), r)
    out = m / (2.0 * r)
    return out if np.ndim(out) else float(out)


def smoothed_density(atomic: AtomicApproximation, x, r: float):
    """``(1/4r^3) * integral_{r(1-r)}^{r(1+r)} nu(B(x, l)) dl``, evaluated exactly.

    ``l -> nu(B(x, l))`` is a step function jumping at the atom distances, so
    an atom at distance ``d`` contributes its weight times the length of
    ``[max(d, r(1-r)), r(1+r)]``.
    """
    if not 0 < r < 1:
        raise InvalidSystemError(f"smoothing radius must lie in (0, 1), got {r}")
    cloud = _SortedCloud(atomic)
    inner, outer = r * (1.0 - r), r * (1.0 + r)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(xs.size)
    m_in, lo_in, hi_in = cloud.mass(xs, inner)
    _, lo_out, hi_out = cloud.mass(xs, outer)
    for k, xk in enumerate(xs):
        area = 2.0 * r * r * m_in[k]
        for a, b in ((lo_out[k], lo_in[k]), (hi_in[k], hi_out[k])):
            if b > a:
                d = np.abs(cloud.y[a:b] - xk)
                area += float(np.dot(cloud.w[a:b], outer - d))
        out[k] = area / (4.0 * r ** 3)
    return out if np.ndim(x) else float(out[0])


def density_estimate(atomic: AtomicApproximation, grid, method: str,
                     parameter: float) -> DensityEstimate:
    grid = np.asarray(grid, dtype=float)
    if method == BALL:
        values = ball_density(atomic, grid, parameter)
    elif method == SMOOTHED:
        values = smoothed_density(atomic, grid, parameter)
    elif method == FOURIER:
        values = truncated_inverse_densities(atomic, grid, [parameter])[0]
    else:
        raise InvalidSystemError(f"unknown density method {method!r}")
    return DensityEstimate(grid, values, method, parameter, atomic.seed, atomic.depth)


@dataclass
class HolderEstimate:
    exponent: float
    residual: float
    flat: bool
    scales: np.ndarray = field(repr=False)
    oscillations: np.ndarray = field(repr=False)


def hoelder_exponent_estimate(density: DensityEstimate) -> HolderEstimate:
    """Slope of ``log max_i |f(x_{i+k}) - f(x_i)|`` against ``log(k h)``.

    Lags ``k`` are powers of two up to a quarter of the grid.  A flat
    density has no finite exponent and is reported as ``inf`` with
    ``flat=True``.  The grid is assumed (close to) uniform.
    """
    f, x = density.values, density.grid
    if f.size < 16:
        raise InvalidSystemError(f"need at least 16 grid points, got {f.size}")
    h = (x[-1] - x[0]) / (x.size - 1)
    lags = 2 ** np.arange(int(math.log2(f.size // 4)) + 1)
    osc = np.array([np.max(np.abs(f[k:] - f[:-k])) for k in lags])
    scales = lags * h
    keep = osc > 0
    if keep.sum() < 2:
        return HolderEstimate(math.inf, 0.0, True, scales, osc)
    lx, ly = np.log(scales[keep]), np.log(osc[keep])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = float(np.sqrt(np.mean((ly - (slope * lx + intercept)) ** 2)))
    return HolderEstimate(float(slope), resid, False, scales, osc)


@dataclass
class MomentScaling:
    separations: np.ndarray
    moments: np.ndarray
    alpha: float
    intercept: float
    ci: tuple[float, float]
    samples: np.ndarray = field(repr=False)  # (trials, pairs) raw p-th powers


def _fit_slope(sep, mom):
    keep = (sep > 0) & (mom > 0)
    if keep.sum() < 2:
        return math.nan, math.nan
    slope, intercept = np.polyfit(np.log(sep[keep]), np.log(mom[keep]), 1)
    return float(slope), float(intercept)


def moment_scaling(ifs: SelfSimilarIFS, measure: BernoulliMeasure,
                   dist: PerturbationDistribution, pairs: Sequence[tuple[float, float]],
                   p: int, trials: int, depth: int, cutoff: float, seed: int = 0,
                   n_boot: int = 1000, budget: int = DEFAULT_ATOM_BUDGET) -> MomentScaling:
    """Monte Carlo ``E (f(a) - f(b))**p`` with ``f`` the truncated Fourier density.

    ``alpha`` is the regression slope of the log moment against the log
    separation over pairs with ``a != b``; ``ci`` is a 95% percentile
    bootstrap interval obtained by resampling whole trials.
    """
    if p < 2 or p % 2:
        raise InvalidSystemError(f"p must be an even integer >= 2, got {p}")
    if trials < 100:
        raise InvalidSystemError(f"at least 100 trials required, got {trials}")
    pairs = np.asarray(pairs, dtype=float)
    lo, hi = ifs.envelope(dist.support_radius)
    if pairs.min() < lo or pairs.max() > hi:
        raise InvalidSystemError(f"evaluation points must lie in the envelope [{lo}, {hi}]")
    points, inverse = np.unique(pairs.ravel(), return_inverse=True)
    inverse = inverse.reshape(pairs.shape)
    samples = np.empty((trials, len(pairs)))
    for k in range(trials):
        atomic = atomic_approximation(ifs, measure, dist, trial_seed(seed, k), depth, budget)
        f = truncated_inverse_densities(atomic, points, [cutoff])[0]
        samples[k] = (f[inverse[:, 0]] - f[inverse[:, 1]]) ** p
    sep = np.abs(pairs[:, 0] - pairs[:, 1])
    moments = samples.mean(axis=0)
    alpha, intercept = _fit_slope(sep, moments)
    rng = np.random.default_rng(seed)
    boot = np.empty(n_boot)
    for b in range(n_boot):
        idx = rng.integers(0, trials, trials)
        boot[b] = _fit_slope(sep, samples[idx].mean(axis=0))[0]
    ci = tuple(float(v) for v in np.nanpercentile(boot, [2.5, 97.5]))
    return MomentScaling(sep, moments, alpha, intercept, ci, samples)


def lebesgue_upper_bound(cover: Cover) -> float:
    """Total length of the merged cover, an upper bound for Leb of the attractor."""
    return cover.total_length


def _intersect(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = []
    i = j = 0
    while i < len(a) and j < len(b):
        lo = max(a[i, 0], b[j, 0])
        hi = min(a[i, 1], b[j, 1])
        if lo <= hi:
            out.append((lo, hi))
        if a[i, 1] < b[j, 1]:
            i += 1
        else:
            j += 1
    return np.array(out).reshape(-1, 2)


def interior_candidate(covers: Sequence[Cover], factor: float = 1.5):
    """Largest open interval lying in every supplied cover, or ``None``.

    Covers are processed in increasing depth.  At each depth the longest
    component of the running intersection must be longer than ``factor``
    times the longest cylinder image of that depth; anything shorter could
    be a single cylinder and is not counted as evidence of an interval.
    Returns ``(interval, certified_depth)`` where ``certified_depth`` is the
    deepest depth at which the candidate still qualified (0 if none did).
    The result is evidence at finite depth, never a proof.
    """
    if not covers:
        raise InvalidSystemError("no covers supplied")
    covers = sorted(covers, key=lambda c: c.depth)
    current = covers[0].intervals
    best = None
    certified = 0
    for cover in covers:
        current = _intersect(current, cover.intervals) if cover is not covers[0] else current
        if current.size == 0:
            return None, certified
        lengths = current[:, 1] - current[:, 0]
        k = int(np.argmax(lengths))
        if not lengths[k] > factor * cover.max_cylinder_length:
            return None, certified
        best = (float(current[k, 0]), float(current[k, 1]))
        certified = cover.depth
    return best, certified
