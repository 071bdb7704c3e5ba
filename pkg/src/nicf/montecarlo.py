"""Sharded Monte Carlo sampling of the invariant measures and of Lebesgue measure.

Samples are drawn in fixed-size blocks; block ``i`` always uses the generator
``default_rng([seed, i])``, so an estimate depends only on (seed, N) and not
on how many worker threads share the blocks.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _backend
from .maps import G, LOG_G, MapKind, conjugate_J_inverse
from .measures import DensityKind

DEFAULT_SEED = 20240917
SEED_ENV = "NICF_SEED"
BLOCK = 1 << 20


def default_seed() -> int:
    """The seed from ``NICF_SEED`` if set, else the package default."""
    raw = os.environ.get(SEED_ENV)
    return int(raw) if raw not in (None, "") else DEFAULT_SEED


def sample_measure(kind: DensityKind | str, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` samples of ``kind`` by inverting its closed-form CDF."""
    kind = DensityKind(kind) if isinstance(kind, str) else kind
    u = rng.random(n)
    if kind is DensityKind.LEBESGUE:
        raise ValueError("Lebesgue sampling needs an interval; use sample_uniform")
    if kind in (DensityKind.FOLDED_MU, DensityKind.ODD_MU):
        t = np.exp(u * LOG_G)
        x = G * (G + 1.0) * (t - 1.0) / (G + 1.0 + G * t)
        if kind is DensityKind.ODD_MU:
            x = np.where(rng.random(n) < 0.5, -x, x)
        return x
    if kind in (DensityKind.CONJUGATE_MU, DensityKind.EVEN_MU):
        x = G * np.expm1(u * LOG_G)
        return x if kind is DensityKind.CONJUGATE_MU else conjugate_J_inverse(x)
    raise ValueError(f"no sampler for {kind.value}")


def sample_uniform(lo: float, hi: float, n: int, rng: np.random.Generator) -> np.ndarray:
    return lo + (hi - lo) * rng.random(n)


@dataclass(frozen=True)
class FractionEstimate:
    """A Monte Carlo proportion with its binomial standard error."""
    p: float
    n: int
    hits: int

    @property
    def stderr(self) -> float:
        return math.sqrt(max(self.p * (1.0 - self.p), 0.0) / self.n)

    def z_score(self, value: float) -> float:
        se = self.stderr
        return abs(self.p - value) / se if se > 0 else (0.0 if self.p == value else math.inf)


def estimate_fraction(sampler: Callable[[int, np.random.Generator], np.ndarray],
                      event: Callable[[np.ndarray], np.ndarray],
                      n: int, seed: int | None = None, workers: int = 1) -> FractionEstimate:
    """Fraction of ``n`` samples satisfying ``event``, over fixed-size blocks."""
    if n < 1:
        raise ValueError("need at least one sample")
    seed = default_seed() if seed is None else int(seed)
    sizes = [min(BLOCK, n - s) for s in range(0, n, BLOCK)]

    def run(i: int) -> int:
        rng = np.random.default_rng([seed, i])
        return int(np.count_nonzero(event(sampler(sizes[i], rng))))

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            counts = list(pool.map(run, range(len(sizes))))
    else:
        counts = [run(i) for i in range(len(sizes))]
    hits = sum(counts)
    return FractionEstimate(hits / n, n, hits)


def orbit_event(kind: MapKind, n_iter: int, target, start=None) -> Callable:
    """Event ``x in start and T^n x in target`` for interval unions."""
    from .measures import IntervalUnion

    target = IntervalUnion.coerce(target)
    start = None if start is None else IntervalUnion.coerce(start)

    def event(x):
        ok = np.ones(x.shape, dtype=bool) if start is None else start.contains(x)
        y = _backend.iterate_map(kind.code, np.ascontiguousarray(x), int(n_iter))
        return ok & target.contains(y)

    return event
