"""Perturbation trees and finite-depth approximations of the random measure.

Every vertex ``w`` of the symbolic tree carries an independent perturbation
``theta_w``.  Its value is a pure function of ``(seed, w)``: a SplitMix64
style hash of the seed, the word length and the base-N index of the word
seeds a short counter stream of uniforms, which are turned into a draw of
the perturbation law.  Nothing depends on traversal order, so subtrees can
be evaluated in any order (or in parallel) with identical results.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .ifs import InvalidSystemError, SelfSimilarIFS, Word
from .measure import BernoulliMeasure
from .perturbation import PerturbationDistribution, from_uniforms

DEFAULT_ATOM_BUDGET = 2 ** 22

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


class BudgetExceededError(RuntimeError):
    pass


def _mix(z: np.ndarray) -> np.ndarray:
    # SplitMix64 finalizer; uint64 array arithmetic wraps modulo 2**64
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _node_keys(seed: int, length: int, limbs: Iterable[np.ndarray]) -> np.ndarray:
    h = np.full(1, (int(seed) + (length + 1) * int(_GOLDEN)) & _MASK64, dtype=np.uint64)
    h = _mix(h)
    for limb in limbs:
        h = _mix((h ^ limb) + _GOLDEN)
    return h


def _uniforms(keys: np.ndarray, count: int) -> np.ndarray:
    """``count`` uniforms on [0, 1) per key, shape ``keys.shape + (count,)``."""
    k = np.arange(1, count + 1, dtype=np.uint64) * _GOLDEN
    bits = _mix(keys[..., None] + k)
    return (bits >> np.uint64(11)).astype(np.float64) * 2.0 ** -53


def _word_limbs(word: Word, n_symbols: int) -> list[np.ndarray]:
    index = 0
    for w in word:
        index = index * n_symbols + w
    limbs = []
    while True:
        limbs.append(np.array([index & _MASK64], dtype=np.uint64))
        index >>= 64
        if not index:
            return limbs


def node_perturbation(seed: int, word: Iterable[int], dist: PerturbationDistribution,
                      n_symbols: int) -> float:
    """The perturbation attached to tree vertex ``word``."""
    word = tuple(int(w) for w in word)
    if any(not 0 <= w < n_symbols for w in word):
        raise InvalidSystemError(f"word {word} outside alphabet of size {n_symbols}")
    keys = _node_keys(seed, len(word), _word_limbs(word, n_symbols))
    return float(from_uniforms(dist, _uniforms(keys, dist.order))[0])


def level_perturbations(seed: int, length: int, indices: np.ndarray,
                        dist: PerturbationDistribution) -> np.ndarray:
    """Vectorized ``node_perturbation`` for words of one length given by base-N index."""
    keys = _node_keys(seed, length, [np.asarray(indices, dtype=np.uint64)])
    return from_uniforms(dist, _uniforms(keys, dist.order))


def trial_seed(base_seed: int, trial: int) -> int:
    """Seed of the ``trial``-th independent realization derived from ``base_seed``."""
    h = _mix(np.array([(int(base_seed) ^ 0x5851F42D4C957F2D) & _MASK64], dtype=np.uint64))
    step = np.array([((trial + 1) * int(_GOLDEN)) & _MASK64], dtype=np.uint64)
    return int(_mix(h + step)[0])


def _check_budget(n_symbols: int, depth: int, budget: int) -> None:
    if depth < 1:
        raise InvalidSystemError(f"depth must be >= 1, got {depth}")
    if n_symbols ** depth > budget:
        raise BudgetExceededError(
            f"{n_symbols}**{depth} = {n_symbols ** depth} atoms exceeds budget {budget}")


def _enumerate(ifs: SelfSimilarIFS, dist: PerturbationDistribution, seed: int,
               depth: int, probabilities=None):
    """Positions, cylinder ratios and (optionally) masses of all depth-``depth`` words.

    Words are in lexicographic order, i.e. atom ``k`` is the word whose
    base-N digits are those of ``k``.
    """
    t = np.asarray(ifs.translations)
    lam = np.asarray(ifs.ratios)
    pos = np.zeros(1)
    scale = np.ones(1)
    mass = None if probabilities is None else np.ones(1)
    for j in range(depth):
        if dist.half_width > 0:
            theta = level_perturbations(seed, j, np.arange(pos.size, dtype=np.uint64), dist)
        else:
            theta = np.zeros(pos.size)
        pos = (pos[:, None] + scale[:, None] * (theta[:, None] + t[None, :])).ravel()
        scale = (scale[:, None] * lam[None, :]).ravel()
        if mass is not None:
            mass = (mass[:, None] * probabilities[None, :]).ravel()
    return pos, scale, mass


@dataclass(eq=False)
class AtomicApproximation:
    """Depth-n weighted point cloud approximating the random measure.

    Every point of the realization coded by an extension of word ``w`` lies
    within ``tail_radius`` of the atom of ``w``.
    """

    depth: int
    n_symbols: int
    positions: np.ndarray
    weights: np.ndarray
    tail_radius: float
    seed: int | None = None
    _order: np.ndarray | None = field(default=None, repr=False)

    def __len__(self):
        return self.positions.size

    def word(self, k: int) -> Word:
        digits = []
        for _ in range(self.depth):
            k, d = divmod(k, self.n_symbols)
            digits.append(d)
        return tuple(reversed(digits))

    def words(self) -> Iterator[Word]:
        return (self.word(k) for k in range(len(self)))

    def sorted(self) -> tuple[np.ndarray, np.ndarray]:
        """Positions and weights sorted by position (cached)."""
        if self._order is None:
            self._order = np.argsort(self.positions, kind="stable")
        return self.positions[self._order], self.weights[self._order]


def atomic_approximation(ifs: SelfSimilarIFS, measure: BernoulliMeasure,
                         dist: PerturbationDistribution, seed: int, depth: int,
                         budget: int = DEFAULT_ATOM_BUDGET) -> AtomicApproximation:
    if measure.n_symbols != ifs.n_maps:
        raise InvalidSystemError(
            f"measure has {measure.n_symbols} symbols but IFS has {ifs.n_maps} maps")
    _check_budget(ifs.n_maps, depth, budget)
    p = np.asarray(measure.probabilities)
    pos, _, mass = _enumerate(ifs, dist, seed, depth, p)
    lam = ifs.ratio_max
    tail = lam ** depth * (ifs.translation_max + dist.support_radius) / (1.0 - lam)
    return AtomicApproximation(depth, ifs.n_maps, pos, mass, tail, seed)


@dataclass(eq=False)
class Cover:
    """Sorted, pairwise disjoint closed intervals covering one realization's attractor."""

    depth: int
    intervals: np.ndarray  # shape (k, 2)
    max_cylinder_length: float

    @property
    def total_length(self) -> float:
        return float(np.sum(self.intervals[:, 1] - self.intervals[:, 0]))


def merge_intervals(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    order = np.argsort(left, kind="stable")
    left, right = left[order], right[order]
    reach = np.maximum.accumulate(right)
    # a new component starts where the interval begins beyond everything before it
    starts = np.ones(left.size, dtype=bool)
    starts[1:] = left[1:] > reach[:-1]
    first = np.flatnonzero(starts)
    last = np.append(first[1:], left.size) - 1
    return np.column_stack([left[first], reach[last]])


def attractor_cover(ifs: SelfSimilarIFS, dist: PerturbationDistribution, seed: int,
                    depth: int, budget: int = DEFAULT_ATOM_BUDGET) -> Cover:
    """Merged union of the depth-n cylinder images of one realization.

    Every point coded by an extension of ``w`` equals
    ``x_w + lambda_w * y`` with ``y`` a point of a perturbed system, and all
    such ``y`` lie in the envelope ``[A, B]``.  Since the envelope is mapped
    into itself by every perturbed map, the depth-(n+1) cylinder images sit
    inside their parents and the covers are nested.
    """
    _check_budget(ifs.n_maps, depth, budget)
    pos, scale, _ = _enumerate(ifs, dist, seed, depth)
    lo, hi = ifs.envelope(dist.support_radius)
    intervals = merge_intervals(pos + scale * lo, pos + scale * hi)
    return Cover(depth, intervals, float(scale.max() * (hi - lo)))


def project_words(ifs: SelfSimilarIFS, dist: PerturbationDistribution, seed: int,
                  words: np.ndarray) -> np.ndarray:
    """Perturbed truncated coding map for a batch of equal-length words.

    ``words`` has shape ``(count, depth)``.  Used to sample deep points
    without enumerating the whole tree.
    """
    words = np.asarray(words, dtype=np.int64)
    count, depth = words.shape
    n = ifs.n_maps
    if depth and (n ** depth) > _MASK64:
        raise BudgetExceededError("word index does not fit a single 64-bit limb")
    t = np.asarray(ifs.translations)
    lam = np.asarray(ifs.ratios)
    pos = np.zeros(count)
    scale = np.ones(count)
    index = np.zeros(count, dtype=np.uint64)
    for j in range(depth):
        theta = level_perturbations(seed, j, index, dist) if dist.half_width > 0 else 0.0
        sym = words[:, j]
        pos = pos + scale * (theta + t[sym])
        scale = scale * lam[sym]
        index = index * np.uint64(n) + sym.astype(np.uint64)
    return pos


def write_atoms_csv(atomic: AtomicApproximation, path, digest: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if digest:
            fh.write(f"# config_sha256={digest}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["word", "position", "weight"])
        for k, word in enumerate(atomic.words()):
            writer.writerow([".".join(map(str, word)),
                             f"{atomic.positions[k]:.16e}", f"{atomic.weights[k]:.16e}"])
