"""Characteristic functions of the random self-similar measure.

Conventions: ``nu_hat(xi) = integral of exp(i x xi) d nu(x)`` and no complex
conjugation is applied in pair products, so ``E|nu_hat(xi)|**2`` is
``pair_characteristic(..., xi, -xi, ...)``.

The averaged transforms follow from splitting the coding map at the root,
``Pi(w) = t_{w_0} + theta_root + lambda_{w_0} Pi'(sigma w)``, where ``Pi'`` is
the coding map of the independent subtree below ``w_0``:

    G(xi) = T(xi) * sum_i p_i exp(i xi t_i) G(lambda_i xi)

    H(a, b) = T(a + b) * [ sum_i p_i**2 exp(i (a+b) t_i) H(lambda_i a, lambda_i b)
                         + sum_{i != j} p_i p_j exp(i (a t_i + b t_j)) G(lambda_i a) G(lambda_j b) ]

with ``T`` the perturbation transform.  When two words split at the root
they share no vertex below it, hence the product of independent ``G``.
Recursion stops with value 1 once ``|frequency| * R < tol`` where ``R``
bounds ``|Pi|``; since ``|exp(i eta) - 1| <= |eta|`` and all weights are
convex, the truncation error is at most ``tol`` for ``G`` and ``2 tol``
for ``H``.  Arguments only depend on how often each symbol was used, so
memoizing on symbol counts keeps the recursion polynomial in depth.
"""

from __future__ import annotations

import csv
import sys
from dataclasses import dataclass

import numpy as np

from .ifs import InvalidSystemError, SelfSimilarIFS
from .measure import BernoulliMeasure
from .perturbation import PerturbationDistribution, fourier_transform
from .realization import AtomicApproximation

DEFAULT_TOL = 1e-8
MAX_RECURSION_DEPTH = 400


class RecursionDepthError(RuntimeError):
    pass


@dataclass(eq=False)
class SpectralProfile:
    frequencies: np.ndarray
    values: np.ndarray
    provenance: str

    def write_csv(self, path, digest: str | None = None) -> None:
        with open(path, "w", newline="") as fh:
            if digest:
                fh.write(f"# config_sha256={digest}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["xi", "re", "im", "provenance"])
            for xi, v in zip(self.frequencies, self.values):
                writer.writerow([f"{xi:.16e}", f"{v.real:.16e}", f"{v.imag:.16e}",
                                 self.provenance])


def empirical_characteristic(atomic: AtomicApproximation, xi, chunk: int = 8):
    """``sum_w weight_w exp(i xi x_w)`` for scalar or array ``xi``."""
    xi_arr = np.atleast_1d(np.asarray(xi, dtype=float))
    out = np.empty(xi_arr.size, dtype=complex)
    for start in range(0, xi_arr.size, chunk):
        block = xi_arr[start:start + chunk]
        out[start:start + chunk] = np.exp(1j * np.outer(block, atomic.positions)) @ atomic.weights
    return out if np.ndim(xi) else complex(out[0])


class _Recursion:
    """Shared state for the memoized G/H recursions of one system."""

    def __init__(self, ifs, measure, dist, tol, depth, max_depth):
        if measure.n_symbols != ifs.n_maps:
            raise InvalidSystemError("measure and IFS have different alphabets")
        if not tol > 0:
            raise InvalidSystemError(f"tol must be positive, got {tol}")
        self.lam = np.asarray(ifs.ratios)
        self.t = np.asarray(ifs.translations)
        self.p = np.asarray(measure.probabilities)
        self.dist = dist
        self.tol = tol
        self.depth = depth
        self.max_depth = max_depth
        lo, hi = ifs.envelope(dist.support_radius)
        self.bound = max(abs(lo), abs(hi))
        self.n = ifs.n_maps
        self._g_memo: dict[tuple[float, tuple], complex] = {}
        self._h_memo: dict[tuple, complex] = {}

    def _scale(self, counts):
        return float(np.prod(self.lam ** np.asarray(counts)))

    def _stop(self, level, freq_size):
        if self.depth is not None and level >= self.depth:
            return True
        if freq_size * self.bound < self.tol:
            return True
        if level >= self.max_depth:
            raise RecursionDepthError(
                f"no convergence after {level} levels (|xi| * R = {freq_size * self.bound:.3g})")
        return False

    def _child(self, counts, i):
        c = list(counts)
        c[i] += 1
        return tuple(c)

    def g(self, xi, counts):
        key = (xi, counts)
        hit = self._g_memo.get(key)
        if hit is not None:
            return hit
        level = sum(counts)
        eta = xi * self._scale(counts)
        if self._stop(level, abs(eta)):
            val = 1.0 + 0j
        else:
            acc = 0j
            for i in range(self.n):
                acc += self.p[i] * np.exp(1j * eta * self.t[i]) * self.g(xi, self._child(counts, i))
            val = complex(fourier_transform(self.dist, eta) * acc)
        self._g_memo[key] = val
        return val

    def h(self, xi1, xi2, counts):
        key = (xi1, xi2, counts)
        hit = self._h_memo.get(key)
        if hit is not None:
            return hit
        level = sum(counts)
        scale = self._scale(counts)
        e1, e2 = xi1 * scale, xi2 * scale
        if self._stop(level, abs(e1) + abs(e2)):
            val = 1.0 + 0j
        else:
            acc = 0j
            for i in range(self.n):
                ci = self._child(counts, i)
                acc += (self.p[i] ** 2 * np.exp(1j * (e1 + e2) * self.t[i])
                        * self.h(xi1, xi2, ci))
                g1 = self.g(xi1, ci)
                for j in range(self.n):
                    if j == i:
                        continue
                    cj = self._child(counts, j)
                    acc += (self.p[i] * self.p[j] * np.exp(1j * (e1 * self.t[i] + e2 * self.t[j]))
                            * g1 * self.g(xi2, cj))
            val = complex(fourier_transform(self.dist, e1 + e2) * acc)
        self._h_memo[key] = val
        return val


def _with_stack(fn):
    limit = sys.getrecursionlimit()
    if limit < 4 * MAX_RECURSION_DEPTH + 200:
        sys.setrecursionlimit(4 * MAX_RECURSION_DEPTH + 200)
    return fn()


def mean_characteristic(ifs: SelfSimilarIFS, measure: BernoulliMeasure,
                        dist: PerturbationDistribution, xi, tol: float = DEFAULT_TOL,
                        depth: int | None = None, max_depth: int = MAX_RECURSION_DEPTH):
    """``G(xi) = E_Theta E_mu exp(i xi Pi_Theta(w))``.

    With ``depth`` set, the recursion is cut after ``depth`` levels, which
    gives the exact mean of ``empirical_characteristic`` of the depth-``depth``
    atomic approximation (up to ``tol``).
    """
    rec = _Recursion(ifs, measure, dist, tol, depth, max_depth)
    root = (0,) * ifs.n_maps
    xs = np.atleast_1d(np.asarray(xi, dtype=float))
    vals = np.array([_with_stack(lambda x=x: rec.g(float(x), root)) for x in xs])
    return vals if np.ndim(xi) else complex(vals[0])


def pair_characteristic(ifs: SelfSimilarIFS, measure: BernoulliMeasure,
                        dist: PerturbationDistribution, xi1: float, xi2: float,
                        tol: float = DEFAULT_TOL, depth: int | None = None,
                        max_depth: int = MAX_RECURSION_DEPTH) -> complex:
    """``H(xi1, xi2) = E[nu_hat(xi1) * nu_hat(xi2)]`` (no conjugation)."""
    rec = _Recursion(ifs, measure, dist, tol, depth, max_depth)
    root = (0,) * ifs.n_maps
    return _with_stack(lambda: rec.h(float(xi1), float(xi2), root))


def mean_profile(ifs, measure, dist, frequencies, tol=DEFAULT_TOL, depth=None) -> SpectralProfile:
    freqs = np.asarray(frequencies, dtype=float)
    return SpectralProfile(freqs, mean_characteristic(ifs, measure, dist, freqs, tol, depth),
                           "mean_oracle")


def empirical_profile(atomic: AtomicApproximation, frequencies) -> SpectralProfile:
    freqs = np.asarray(frequencies, dtype=float)
    return SpectralProfile(freqs, empirical_characteristic(atomic, freqs),
                           f"empirical({atomic.seed})")


def dirichlet_kernel(u, cutoff: float):
    """``sin(n u) / (pi u)`` with value ``n / pi`` at 0."""
    return cutoff / np.pi * np.sinc(cutoff * np.asarray(u) / np.pi)


def truncated_inverse_densities(atomic: AtomicApproximation, x, cutoffs,
                                max_block: int = 1 << 22) -> np.ndarray:
    """Closed-form truncated inverse transforms for several cutoffs at once.

    For an atomic measure ``(1/2pi) * integral_{-n}^{n} exp(-i x xi) nu_hat(xi) d xi``
    equals ``sum_w weight_w D_n(x_w - x)`` with the Dirichlet kernel ``D_n``.
    Writing ``sin(n(y - x)) = sin(ny)cos(nx) - cos(ny)sin(nx)`` turns the sum
    into two products of the matrix ``1/(y - x)`` with per-atom vectors; the
    matrix does not depend on ``n`` and is shared by all cutoffs.  Pairs with
    ``n|y - x| < 1e-3`` are removed from the matrix and evaluated directly.
    Returns an array of shape ``(len(cutoffs), len(x))``.
    """
    cutoffs = np.atleast_1d(np.asarray(cutoffs, dtype=float))
    if np.any(cutoffs <= 0):
        raise InvalidSystemError(f"cutoffs must be positive, got {cutoffs}")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    y, w = atomic.positions, atomic.weights
    ny = np.outer(cutoffs, y)
    rhs = np.concatenate([w * np.sin(ny), w * np.cos(ny)]).T  # (atoms, 2 * cutoffs)
    near_gap = 1e-3 / cutoffs.max()
    k = len(cutoffs)
    out = np.empty((k, xs.size))
    chunk = max(1, max_block // max(1, y.size))
    for start in range(0, xs.size, chunk):
        block = xs[start:start + chunk]
        u = y[None, :] - block[:, None]
        near = np.abs(u) < near_gap
        u[near] = np.inf
        np.reciprocal(u, out=u)
        sums = u @ rhs  # (block, 2k)
        nx = np.outer(block, cutoffs)
        vals = (np.cos(nx) * sums[:, :k] - np.sin(nx) * sums[:, k:]) / np.pi
        if near.any():
            rows, cols = np.nonzero(near)
            du = y[cols] - block[rows]
            for j, n in enumerate(cutoffs):
                np.add.at(vals[:, j], rows, w[cols] * dirichlet_kernel(du, n))
        out[:, start:start + chunk] = vals.T
    return out


def truncated_inverse_density(atomic: AtomicApproximation, x, cutoff: float):
    """``f(n, x)``: the frequency-truncated inverse transform at cutoff ``n``.

    Exact for atomic input (no quadrature); see ``truncated_inverse_densities``.
    """
    out = truncated_inverse_densities(atomic, x, [cutoff])[0]
    return out if np.ndim(x) else float(out[0])
