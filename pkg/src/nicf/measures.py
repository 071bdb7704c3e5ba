"""Invariant densities of the NICF maps and closed-form measures of interval unions."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .maps import G, G_SQ_SMALL, LOG_G, DomainError, MapKind, g, inverse_branches

C_SHIFT = G - 2.0  # -1/G**2


class DensityKind(enum.Enum):
    FOLDED_MU = "mu"
    ODD_MU = "mu_o"
    EVEN_MU = "mu_e"
    CONJUGATE_MU = "mu_e_tilde"
    HURWITZ_NU = "nu"
    LEBESGUE = "lebesgue"

    @property
    def domain(self) -> tuple[float, float]:
        if self is DensityKind.LEBESGUE:
            return (-math.inf, math.inf)
        return _MAP_OF[self].domain

    @classmethod
    def for_map(cls, kind: MapKind | str) -> "DensityKind":
        kind = MapKind.parse(kind)
        return {v: k for k, v in _MAP_OF.items()}[kind]


_MAP_OF = {
    DensityKind.FOLDED_MU: MapKind.FOLDED,
    DensityKind.ODD_MU: MapKind.ODD,
    DensityKind.EVEN_MU: MapKind.EVEN,
    DensityKind.CONJUGATE_MU: MapKind.CONJUGATE,
    DensityKind.HURWITZ_NU: MapKind.HURWITZ,
}


# --------------------------------------------------------------------------
# interval unions

class IntervalUnion:
    """A finite union of closed intervals kept sorted and disjoint."""

    __slots__ = ("intervals",)

    def __init__(self, intervals: Iterable[tuple[float, float]] = ()):
        parts = sorted((float(a), float(b)) for a, b in intervals if b > a)
        merged: list[list[float]] = []
        for a, b in parts:
            if merged and a <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        self.intervals = tuple((a, b) for a, b in merged)

    @classmethod
    def coerce(cls, E) -> "IntervalUnion":
        if isinstance(E, IntervalUnion):
            return E
        if len(E) == 2 and np.isscalar(E[0]):
            return cls([tuple(E)])
        return cls(E)

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self):
        return len(self.intervals)

    def __eq__(self, other):
        return isinstance(other, IntervalUnion) and self.intervals == other.intervals

    def __repr__(self):
        return f"IntervalUnion({list(self.intervals)})"

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    def length(self) -> float:
        return sum(b - a for a, b in self.intervals)

    def intersect(self, lo: float, hi: float) -> "IntervalUnion":
        return IntervalUnion((max(a, lo), min(b, hi)) for a, b in self.intervals)

    def __neg__(self) -> "IntervalUnion":
        return IntervalUnion((-b, -a) for a, b in self.intervals)

    def union(self, other: "IntervalUnion") -> "IntervalUnion":
        return IntervalUnion(self.intervals + IntervalUnion.coerce(other).intervals)

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=bool)
        for a, b in self.intervals:
            out |= (x >= a) & (x <= b)
        return out

    def as_list(self):
        return [list(iv) for iv in self.intervals]


def J_image(E) -> IntervalUnion:
    """Image of a subset of [-1/2, 1/2] under the conjugation J."""
    E = IntervalUnion.coerce(E)
    pos = E.intersect(0.0, 0.5)
    neg = E.intersect(-0.5, 0.0)
    return IntervalUnion(list(pos) + [(a + 1.0, b + 1.0) for a, b in neg])


# --------------------------------------------------------------------------
# densities

def raw_density(kind: DensityKind, x):
    """Unnormalised density (h, h_o, h_e, h~_e, k) without the 1/log G factor."""
    x = np.asarray(x, dtype=float)
    if kind is DensityKind.FOLDED_MU:
        return 1.0 / (G + x) + 1.0 / (G + 1.0 - x)
    if kind is DensityKind.ODD_MU:
        ax = np.abs(x)
        return 1.0 / (G + ax) + 1.0 / (G + 1.0 - ax)
    if kind is DensityKind.EVEN_MU:
        return np.where(x >= 0.0, 1.0 / (G + x), 1.0 / (G + 1.0 + x))
    if kind is DensityKind.CONJUGATE_MU:
        return 1.0 / (G + x)
    if kind is DensityKind.HURWITZ_NU:
        return np.where(x < G_SQ_SMALL, 1.0 / (2.0 + x) + 1.0 / (2.0 - x), 1.0 / (2.0 + x))
    return np.ones_like(x)


NORMALISATION = {
    DensityKind.FOLDED_MU: 1.0 / LOG_G,
    DensityKind.ODD_MU: 1.0 / (2.0 * LOG_G),
    DensityKind.EVEN_MU: 1.0 / LOG_G,
    DensityKind.CONJUGATE_MU: 1.0 / LOG_G,
    DensityKind.HURWITZ_NU: 1.0 / LOG_G,
    DensityKind.LEBESGUE: 1.0,
}


def _check(kind: DensityKind, x) -> None:
    lo, hi = kind.domain
    arr = np.asarray(x, dtype=float)
    if np.any(arr < lo) or np.any(arr > hi):
        raise DomainError(f"argument outside the domain [{lo:.17g}, {hi:.17g}] of {kind.value}")


def density(kind: DensityKind | str, x):
    kind = DensityKind(kind) if isinstance(kind, str) else kind
    _check(kind, x)
    out = NORMALISATION[kind] * raw_density(kind, x)
    return float(out) if np.ndim(x) == 0 else out


def folded_H(y):
    """H = 1/h for the folded density, i.e. (G + y)(G + 1 - y)/G**3."""
    y = np.asarray(y, dtype=float)
    return (G + y) * (G + 1.0 - y) / G**3


def folded_H_prime(y):
    return (1.0 - 2.0 * np.asarray(y, dtype=float)) / G**3


def cdf(kind: DensityKind, x):
    """Measure of [left end of domain, x]; closed-form logarithms."""
    x = np.asarray(x, dtype=float)
    if kind is DensityKind.FOLDED_MU:
        return (np.log1p(x / G) - np.log1p(-x / (G + 1.0))) / LOG_G
    if kind is DensityKind.ODD_MU:
        ax = np.abs(x)
        half = (np.log1p(ax / G) - np.log1p(-ax / (G + 1.0))) / (2.0 * LOG_G)
        return 0.5 + np.sign(x) * half
    if kind is DensityKind.EVEN_MU:
        neg = np.log((G + 1.0 + np.minimum(x, 0.0)) / (G + 0.5)) / LOG_G
        pos = np.log1p(np.maximum(x, 0.0) / G) / LOG_G
        return neg + pos
    if kind is DensityKind.CONJUGATE_MU:
        return np.log1p(x / G) / LOG_G
    if kind is DensityKind.HURWITZ_NU:
        lo = np.minimum(x, G_SQ_SMALL)
        first = (np.log1p(lo / 2.0) - np.log1p(-lo / 2.0)) / LOG_G
        second = np.log((2.0 + np.maximum(x, G_SQ_SMALL)) / (2.0 + G_SQ_SMALL)) / LOG_G
        return first + second
    return x


@dataclass(frozen=True)
class MeasureValue:
    value: float
    kind: DensityKind
    set: IntervalUnion

    def __float__(self):
        return self.value


def measure_value(kind: DensityKind, E) -> float:
    E = IntervalUnion.coerce(E)
    if E.is_empty:
        return 0.0
    lo, hi = kind.domain
    if E.intervals[0][0] < lo or E.intervals[-1][1] > hi:
        raise DomainError(f"set {E} is not contained in the domain of {kind.value}")
    a = np.array([iv[0] for iv in E])
    b = np.array([iv[1] for iv in E])
    return float(np.sum(cdf(kind, b) - cdf(kind, a)))


def measure(kind: DensityKind | str, E) -> MeasureValue:
    kind = DensityKind(kind) if isinstance(kind, str) else kind
    E = IntervalUnion.coerce(E)
    return MeasureValue(measure_value(kind, E), kind, E)


# --------------------------------------------------------------------------
# preimages

# Telescoped tails of the branch measures: for k > K the branch contributions
# sum to  integral over (E ∩ range) of  coef / (K + shift + sign*y) dy.
# One entry per branch family of maps.inverse_branches, None when the
# family's tail is carried by a sibling family.
_TAILS = {
    MapKind.FOLDED: [(1.0 / LOG_G, 1.0 + C_SHIFT, 1.0), (1.0 / LOG_G, 1.0 + C_SHIFT, -1.0)],
    MapKind.ODD: [(0.5 / LOG_G, 1.0 + C_SHIFT, 1.0), (0.5 / LOG_G, 1.0 + C_SHIFT, -1.0), None, None],
    MapKind.EVEN: [(1.0 / LOG_G, 1.0 + C_SHIFT, 1.0), None, None, None],
    MapKind.CONJUGATE: [(1.0 / LOG_G, 1.0 + C_SHIFT, 1.0), None],
    MapKind.HURWITZ: [(1.0 / LOG_G, 0.5, 1.0), (1.0 / LOG_G, 0.5, -1.0)],
}


def _tail_integral(term, K: int, a: float, b: float) -> float:
    coef, shift, sign = term
    return coef / sign * math.log((K + shift + sign * b) / (K + shift + sign * a))


def preimage_measure(kind: MapKind | str, E, K: int = 10_000) -> float:
    """mu(T^{-1} E) summed over inverse branches k <= K plus the exact tail."""
    kind = MapKind.parse(kind)
    dens = DensityKind.for_map(kind)
    E = IntervalUnion.coerce(E)
    total = 0.0
    for fam, tail in zip(inverse_branches(kind), _TAILS[kind]):
        part = E.intersect(*fam.param_range)
        if part.is_empty:
            continue
        k = np.arange(fam.k_min, (K if fam.k_max is None else fam.k_max) + 1, dtype=float)
        for a, b in part:
            pa = fam.point(k, a)
            pb = fam.point(k, b)
            total += float(np.sum(np.abs(cdf(dens, pb) - cdf(dens, pa))))
            if tail is not None:
                total += _tail_integral(tail, K, a, b)
    return total


def pushforward_check(n_samples: int = 200, seed: int = 0) -> dict:
    """Compare mu(E) with 2 mu_o(E) on random E in [0, 1/2].

    mu is twice the push-forward of mu_o under x -> |x|; restricted to
    subsets of [0, 1/2] this reads mu(E) = 2 mu_o(E).
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_samples):
        a, b = np.sort(rng.uniform(0.0, 0.5, size=2))
        lhs = measure_value(DensityKind.FOLDED_MU, (a, b))
        rhs = 2.0 * measure_value(DensityKind.ODD_MU, (a, b))
        sym = measure_value(DensityKind.ODD_MU, IntervalUnion([(a, b), (-b, -a)]))
        worst = max(worst, abs(lhs - rhs), abs(lhs - sym))
    return {"n_samples": n_samples, "max_discrepancy": worst}
