"""Deterministic self-similar iterated function systems on the line.

Maps are ``f_i(x) = ratios[i] * x + translations[i]``.  Words are finite
sequences of symbol indices; symbols are 0-based throughout the package, so
an ``N``-map system uses the alphabet ``{0, ..., N-1}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

Word = tuple[int, ...]


class InvalidSystemError(ValueError):
    """Raised for malformed systems, measures, words or perturbation laws."""


@dataclass(frozen=True)
class SelfSimilarIFS:
    ratios: tuple[float, ...]
    translations: tuple[float, ...]

    def __init__(self, ratios: Sequence[float], translations: Sequence[float]):
        ratios = tuple(float(r) for r in ratios)
        translations = tuple(float(t) for t in translations)
        if len(ratios) != len(translations):
            raise InvalidSystemError(
                f"{len(ratios)} ratios but {len(translations)} translations")
        if len(ratios) < 2:
            raise InvalidSystemError("an IFS needs at least two maps")
        for r in ratios:
            if not (0.0 < r < 1.0):
                raise InvalidSystemError(f"contraction ratio {r} not in (0, 1)")
        for t in translations:
            if not math.isfinite(t):
                raise InvalidSystemError(f"non-finite translation {t}")
        object.__setattr__(self, "ratios", ratios)
        object.__setattr__(self, "translations", translations)

    @property
    def n_maps(self) -> int:
        return len(self.ratios)

    @property
    def ratio_max(self) -> float:
        return max(self.ratios)

    @property
    def translation_max(self) -> float:
        return max(abs(t) for t in self.translations)

    def envelope(self, perturbation_radius: float = 0.0) -> tuple[float, float]:
        """Smallest interval ``[A, B]`` invariant under every perturbed map.

        Each map ``x -> ratios[i] * x + translations[i] + theta`` with
        ``|theta| <= perturbation_radius`` sends ``[A, B]`` into itself, where
        ``A = min_i (t_i - c) / (1 - lambda_i)`` and
        ``B = max_i (t_i + c) / (1 - lambda_i)``.  Hence every coded point, of
        the unperturbed system (``c = 0``, where this is the exact convex hull
        of the attractor) or of any perturbed realization, lies in ``[A, B]``.
        """
        c = float(perturbation_radius)
        lo = min((t - c) / (1.0 - r) for r, t in zip(self.ratios, self.translations))
        hi = max((t + c) / (1.0 - r) for r, t in zip(self.ratios, self.translations))
        return lo, hi

    def check_word(self, word: Iterable[int]) -> Word:
        word = tuple(int(w) for w in word)
        for w in word:
            if not 0 <= w < self.n_maps:
                raise InvalidSystemError(
                    f"symbol {w} outside alphabet of size {self.n_maps}")
        return word


def similarity_dimension(ifs: SelfSimilarIFS) -> float:
    """Unique ``s > 0`` with ``sum(ratios**s) == 1``.

    Bisection on the strictly decreasing map ``s -> sum(ratios**s)`` over
    ``[0, N log N / log(1/ratio_max)]``, run until the bracket stops shrinking,
    followed by one Newton step.
    """
    lam = np.asarray(ifs.ratios)
    logs = np.log(lam)

    def excess(s):
        return float(np.sum(np.exp(s * logs))) - 1.0

    n = ifs.n_maps
    lo, hi = 0.0, n * math.log(n) / -math.log(ifs.ratio_max)
    while excess(hi) > 0.0:  # cannot happen for valid input; guards rounding
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if excess(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    s = 0.5 * (lo + hi)
    slope = float(np.sum(logs * np.exp(s * logs)))
    polished = s - excess(s) / slope
    if abs(excess(polished)) <= abs(excess(s)):
        s = polished
    return s


def cylinder_ratio(ifs: SelfSimilarIFS, word: Iterable[int]) -> float:
    word = ifs.check_word(word)
    out = 1.0
    for w in word:
        out *= ifs.ratios[w]
    return out


def deterministic_project(ifs: SelfSimilarIFS, word: Iterable[int],
                          depth: int) -> tuple[float, float]:
    """Truncated coding map of the unperturbed system.

    Returns ``(point, tail_radius)`` where ``point`` sums the first ``depth``
    terms of ``sum_j lambda_{w^j} t_{w_j}`` and every infinite continuation
    of ``word[:depth]`` projects within ``tail_radius`` of ``point``.
    """
    word = ifs.check_word(word)
    if depth < 0 or len(word) < depth:
        raise InvalidSystemError(
            f"need a word of length >= {depth}, got length {len(word)}")
    point, scale = 0.0, 1.0
    for w in word[:depth]:
        point += scale * ifs.translations[w]
        scale *= ifs.ratios[w]
    lam = ifs.ratio_max
    tail = lam ** depth * ifs.translation_max / (1.0 - lam)
    return point, tail


def typical_dimensions(ifs: SelfSimilarIFS, measure) -> tuple[float, float]:
    """Set and measure dimensions expected under exponential separation.

    No separation condition is checked; this is a reference calculator for
    ``min(1, s)`` and ``min(1, entropy / Lyapunov exponent)``.
    """
    p = np.asarray(measure.probabilities)
    if p.size != ifs.n_maps:
        raise InvalidSystemError("measure and IFS have different alphabets")
    lam = np.asarray(ifs.ratios)
    entropy = -float(np.sum(p * np.log(p)))
    lyapunov = -float(np.sum(p * np.log(lam)))
    return min(1.0, similarity_dimension(ifs)), min(1.0, entropy / lyapunov)
