"""Bernoulli measures on the symbolic space and their scaling exponents."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .ifs import InvalidSystemError, SelfSimilarIFS, Word, cylinder_ratio, similarity_dimension


@dataclass(frozen=True)
class BernoulliMeasure:
    probabilities: tuple[float, ...]

    def __init__(self, probabilities: Sequence[float]):
        p = tuple(float(x) for x in probabilities)
        if len(p) < 2:
            raise InvalidSystemError("a Bernoulli measure needs at least two symbols")
        if any(not (x > 0.0) for x in p):
            raise InvalidSystemError(f"probabilities must be positive, got {p}")
        if abs(math.fsum(p) - 1.0) > 1e-12:
            raise InvalidSystemError(f"probabilities sum to {math.fsum(p)!r}, not 1")
        object.__setattr__(self, "probabilities", p)

    @classmethod
    def natural(cls, ifs: SelfSimilarIFS) -> "BernoulliMeasure":
        """The measure with weights ``ratios**s``, ``s`` the similarity dimension."""
        s = similarity_dimension(ifs)
        p = np.asarray(ifs.ratios) ** s
        return cls(p / p.sum())

    @classmethod
    def uniform(cls, n: int) -> "BernoulliMeasure":
        return cls([1.0 / n] * n)

    @property
    def n_symbols(self) -> int:
        return len(self.probabilities)

    def check_word(self, word: Iterable[int]) -> Word:
        word = tuple(int(w) for w in word)
        for w in word:
            if not 0 <= w < self.n_symbols:
                raise InvalidSystemError(
                    f"symbol {w} outside alphabet of size {self.n_symbols}")
        return word


def _check_compatible(measure: BernoulliMeasure, ifs: SelfSimilarIFS) -> None:
    if measure.n_symbols != ifs.n_maps:
        raise InvalidSystemError(
            f"measure has {measure.n_symbols} symbols but IFS has {ifs.n_maps} maps")


def cylinder_mass(measure: BernoulliMeasure, word: Iterable[int]) -> float:
    word = measure.check_word(word)
    out = 1.0
    for w in word:
        out *= measure.probabilities[w]
    return out


def local_dimension_exponent(measure: BernoulliMeasure,
                             ifs: SelfSimilarIFS) -> tuple[float, bool]:
    """Largest ``s'`` with ``mu([w]) <= lambda_w**s'`` for all words.

    For a product measure the bound is checked symbol by symbol, so
    ``s' = min_i log p_i / log lambda_i`` and the constant is 1.  The flag
    reports whether ``s' > 1``.
    """
    _check_compatible(measure, ifs)
    s_prime = min(math.log(p) / math.log(r)
                  for p, r in zip(measure.probabilities, ifs.ratios))
    return s_prime, s_prime > 1.0


def satisfies_local_bound(measure: BernoulliMeasure, ifs: SelfSimilarIFS,
                          word: Iterable[int], s_prime: float, K: float = 1.0) -> bool:
    """Check ``mu([w]) <= K * lambda_w**s_prime`` for one word."""
    return cylinder_mass(measure, word) <= K * cylinder_ratio(ifs, word) ** s_prime


def lq_dimension(measure: BernoulliMeasure, ifs: SelfSimilarIFS, q: float) -> float:
    """Lower L^q dimension of a Bernoulli measure.

    The depth-n moment sum ``sum_w mu([w])**q * lambda_w**(D(1-q))`` equals
    ``F(D)**n`` with ``F(D) = sum_i p_i**q * lambda_i**(D(1-q))``, so the
    liminf in the definition vanishes exactly when ``F(D) = 1``.  ``F`` is
    strictly increasing in ``D`` with ``F(0) < 1``, and the root is found by
    bisection.
    """
    if not q > 1.0:
        raise InvalidSystemError(f"q must exceed 1, got {q}")
    _check_compatible(measure, ifs)
    log_p = np.log(np.asarray(measure.probabilities))
    log_l = np.log(np.asarray(ifs.ratios))

    def log_f(d):
        # log-sum-exp keeps large q finite
        e = q * log_p + d * (1.0 - q) * log_l
        m = e.max()
        return m + math.log(float(np.sum(np.exp(e - m))))

    lo, hi = 0.0, 1.0
    while log_f(hi) < 0.0:
        lo, hi = hi, 2.0 * hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if log_f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sample_word(measure: BernoulliMeasure, depth: int,
                rng: np.random.Generator) -> Word:
    if depth < 0:
        raise InvalidSystemError(f"negative depth {depth}")
    draws = rng.choice(measure.n_symbols, size=depth, p=measure.probabilities)
    return tuple(int(w) for w in draws)
