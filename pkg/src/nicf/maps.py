"""The NICF interval maps, their digit expansions and inverse branches.

Five maps are provided:

* ``FOLDED``       T(x) = |1/x - [1/x + 1/2]| on [0, 1/2]
* ``ODD``          T_o(x) = 1/x - b(x) on [-1/2, 1/2], with b the rounded reciprocal
* ``EVEN``         T_e(x) = 1/|x| - [1/|x| + 1/2] on [-1/2, 1/2]
* ``CONJUGATE``    J T_e J^{-1} on [0, 1]; the Gauss map on (0, 1/2]
* ``HURWITZ``      the folded Hurwitz map S on [0, g]

Branch boundaries use the half-open convention ``2/(2k+1) < |x| <= 2/(2k-1)``,
i.e. ``k = floor(1/|x| + 1/2)``.  When a reciprocal lands exactly on an integer
the sign digit is taken as +1 and the expansion terminates.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _backend
from . import _kernels_py as _codes


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of a map or measure."""


class AdmissibilityError(ValueError):
    """Raised when a digit word violates the admissibility rules of its map."""


@dataclass(frozen=True)
class GoldenConstants:
    G: float = (math.sqrt(5.0) + 1.0) / 2.0
    g: float = (math.sqrt(5.0) - 1.0) / 2.0
    wirsing: float = 0.303663


GOLDEN = GoldenConstants()
G = GOLDEN.G
g = GOLDEN.g
G_SQ_SMALL = (3.0 - math.sqrt(5.0)) / 2.0  # g**2 = 1 - g
LOG_G = math.log(G)


class MapKind(enum.Enum):
    FOLDED = "folded"
    ODD = "odd"
    EVEN = "even"
    CONJUGATE = "conjugate"
    HURWITZ = "hurwitz"

    @property
    def domain(self) -> tuple[float, float]:
        return _DOMAINS[self]

    @property
    def code(self) -> int:
        return _CODE[self]

    @classmethod
    def parse(cls, name: "str | MapKind") -> "MapKind":
        if isinstance(name, MapKind):
            return name
        key = str(name).strip().lower().replace("-", "_")
        aliases = {"even_conjugate": "conjugate", "evenconjugate": "conjugate",
                   "hurwitz_dual": "hurwitz", "hurwitzdual": "hurwitz"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown map kind {name!r}; expected one of "
                             f"{[m.value for m in cls]}") from None


_DOMAINS = {
    MapKind.FOLDED: (0.0, 0.5),
    MapKind.ODD: (-0.5, 0.5),
    MapKind.EVEN: (-0.5, 0.5),
    MapKind.CONJUGATE: (0.0, 1.0),
    MapKind.HURWITZ: (0.0, g),
}

_CODE = {
    MapKind.FOLDED: _codes.FOLDED,
    MapKind.ODD: _codes.ODD,
    MapKind.EVEN: _codes.EVEN,
    MapKind.CONJUGATE: _codes.CONJUGATE,
    MapKind.HURWITZ: _codes.HURWITZ,
}


def check_domain(kind: MapKind, x, name: str = "x") -> None:
    lo, hi = kind.domain
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr < lo) or np.any(arr > hi):
        raise DomainError(f"{name} must lie in the {kind.value} domain "
                          f"[{lo:.17g}, {hi:.17g}]")


def apply_map(kind: MapKind | str, x, n: int = 1):
    """Apply ``kind`` to ``x`` (scalar or array) ``n`` times."""
    kind = MapKind.parse(kind)
    check_domain(kind, x)
    out = _backend.iterate_map(kind.code, np.asarray(x, dtype=np.float64), int(n))
    return float(out) if np.ndim(x) == 0 else out


# --------------------------------------------------------------------------
# digits

@dataclass(frozen=True)
class NicfDigit:
    """One digit of an expansion.

    ``a`` is the partial quotient (signed ``b`` for the odd map, where ``e`` is
    None); ``e`` is the sign in {-1, +1}.
    """
    a: int
    e: int | None = None

    def as_tuple(self):
        return self.a if self.e is None else (self.a, self.e)

    @classmethod
    def coerce(cls, kind: MapKind, d) -> "NicfDigit":
        if isinstance(d, NicfDigit):
            return d
        if kind is MapKind.ODD:
            if isinstance(d, (tuple, list)):
                raise AdmissibilityError("odd-map digits are single signed integers")
            return cls(int(d))
        a, e = d
        return cls(int(a), int(e))


def _check_pair(kind: MapKind, d: NicfDigit, nxt: NicfDigit | None) -> None:
    if kind is MapKind.ODD:
        if d.e is not None:
            raise AdmissibilityError("odd-map digits carry no sign component")
        if abs(d.a) < 2:
            raise AdmissibilityError(f"odd-map digit {d.a}: need |b| >= 2")
        if nxt is not None:
            if d.a == 2 and nxt.a < 2:
                raise AdmissibilityError(f"b_i = 2 requires b_(i+1) >= 2, got {nxt.a}")
            if d.a == -2 and nxt.a > -2:
                raise AdmissibilityError(f"b_i = -2 requires b_(i+1) <= -2, got {nxt.a}")
        return
    if d.e not in (-1, 1):
        raise AdmissibilityError(f"digit {d.as_tuple()}: sign must be +1 or -1")
    if d.a < 2:
        raise AdmissibilityError(f"digit {d.as_tuple()}: need a >= 2")
    if kind is MapKind.FOLDED and d.a + d.e < 2:
        raise AdmissibilityError(f"digit {d.as_tuple()}: need a + e >= 2")
    if kind is MapKind.EVEN and nxt is not None and d.a + nxt.e < 2:
        raise AdmissibilityError(
            f"digits {d.as_tuple()}, {nxt.as_tuple()}: need a_i + e_(i+1) >= 2")
    if kind is MapKind.HURWITZ and nxt is not None and d.e == -1 and nxt.a < 3:
        raise AdmissibilityError(
            f"digits {d.as_tuple()}, {nxt.as_tuple()}: e_i = -1 requires a_(i+1) >= 3")


def check_admissible(kind: MapKind, digits: Sequence[NicfDigit]) -> None:
    for i, d in enumerate(digits):
        _check_pair(kind, d, digits[i + 1] if i + 1 < len(digits) else None)


@dataclass(frozen=True)
class DigitSequence:
    kind: MapKind
    digits: tuple[NicfDigit, ...]
    terminated: bool = False

    def __post_init__(self):
        kind = MapKind.parse(self.kind)
        object.__setattr__(self, "kind", kind)
        digits = tuple(NicfDigit.coerce(kind, d) for d in self.digits)
        object.__setattr__(self, "digits", digits)
        check_admissible(kind, digits)

    def __len__(self):
        return len(self.digits)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return DigitSequence(self.kind, self.digits[item], False)
        return self.digits[item]

    def as_list(self):
        return [d.as_tuple() for d in self.digits]


def _first_digit(kind: MapKind, x: float) -> NicfDigit:
    if kind is MapKind.CONJUGATE:
        if x <= 0.5:
            return NicfDigit(int(math.floor(1.0 / x)), 1)
        return NicfDigit(int(math.floor(1.0 / (1.0 - x))), -1)
    u = 1.0 / abs(x)
    if kind is MapKind.HURWITZ:
        i = max(int(math.floor(u + G_SQ_SMALL + _codes.TIE * u)), 2)
        return NicfDigit(i, 1 if u - i >= 0.0 else -1)
    k = int(math.floor(u + 0.5))
    if kind is MapKind.FOLDED:
        return NicfDigit(k, 1 if u - k >= 0.0 else -1)
    if kind is MapKind.ODD:
        return NicfDigit(k if x > 0 else -k)
    return NicfDigit(k, 1 if x > 0 else -1)


def expand(kind: MapKind | str, x: float, n: int) -> DigitSequence:
    """First ``n`` digits of the ``kind``-expansion of ``x``.

    Fewer digits are returned, with ``terminated=True``, when the orbit hits 0.
    A nonzero ``x`` whose reciprocal overflows has no representable digit and
    raises DomainError.
    """
    kind = MapKind.parse(kind)
    check_domain(kind, x)
    if n < 1:
        raise ValueError("n must be >= 1")
    x = float(x)
    if 0.0 < abs(x) < _codes.TINY:
        raise DomainError(f"|x| = {abs(x):.3g} is too small: 1/|x| overflows")
    digits = []
    terminated = False
    for _ in range(n):
        if x == 0.0 or (kind is MapKind.CONJUGATE and x == 1.0):
            terminated = True
            break
        digits.append(_first_digit(kind, x))
        x = float(_backend.map_step(kind.code, np.float64(x)))
    if not terminated and x == 0.0:
        terminated = True
    return DigitSequence(kind, tuple(digits), terminated)


def branch(kind: MapKind, d: NicfDigit) -> Callable:
    """Inverse branch attached to digit ``d``: maps T(x) back to x."""
    if kind is MapKind.ODD:
        return lambda v: 1.0 / (d.a + v)
    if kind is MapKind.EVEN:
        return lambda v: d.e / (d.a + v)
    if kind is MapKind.CONJUGATE:
        if d.e == 1:
            return lambda v: 1.0 / (d.a + v)
        return lambda v: 1.0 - 1.0 / (d.a + v)
    return lambda v: 1.0 / (d.a + d.e * v)


def reconstruct(seq: DigitSequence, tail: float = 0.0) -> float:
    """Evaluate the finite continued fraction of ``seq`` with tail value ``tail``."""
    if len(seq) == 0:
        raise ValueError("cannot reconstruct an empty digit sequence")
    v = tail
    for d in reversed(seq.digits):
        v = branch(seq.kind, d)(v)
    return v


# --------------------------------------------------------------------------
# conjugation J : [-1/2, 1/2] -> [0, 1]

def conjugate_J(x):
    arr = np.asarray(x, dtype=float)
    if np.any(arr < -0.5) or np.any(arr > 0.5) or not np.all(np.isfinite(arr)):
        raise DomainError("J is defined on [-1/2, 1/2]")
    out = np.where(arr < 0.0, arr + 1.0, arr)
    return float(out) if np.ndim(x) == 0 else out


def conjugate_J_inverse(y):
    arr = np.asarray(y, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > 1.0) or not np.all(np.isfinite(arr)):
        raise DomainError("J^{-1} is defined on [0, 1]")
    out = np.where(arr > 0.5, arr - 1.0, arr)
    return float(out) if np.ndim(y) == 0 else out


# --------------------------------------------------------------------------
# inverse-branch families, used for preimage measures

@dataclass(frozen=True)
class BranchFamily:
    """Inverse branches ``y -> point(k, y)`` for ``k >= k_min``.

    Each branch is defined for ``y`` in ``param_range`` and is monotone there.
    ``k_max`` is None for an infinite family.
    """
    k_min: int
    point: Callable
    param_range: tuple[float, float]
    label: str
    k_max: int | None = None


def inverse_branches(kind: MapKind | str) -> list[BranchFamily]:
    kind = MapKind.parse(kind)
    half = (0.0, 0.5)
    full = (-0.5, 0.5)
    if kind is MapKind.FOLDED:
        return [
            BranchFamily(2, lambda k, y: 1.0 / (k + y), half, "e=+1"),
            BranchFamily(3, lambda k, y: 1.0 / (k - y), half, "e=-1"),
        ]
    if kind is MapKind.ODD:
        return [
            BranchFamily(3, lambda k, y: 1.0 / (k + y), full, "b>=3"),
            BranchFamily(3, lambda k, y: -1.0 / (k - y), full, "b<=-3"),
            BranchFamily(2, lambda k, y: 1.0 / (k + y), (0.0, 0.5), "b=2", k_max=2),
            BranchFamily(2, lambda k, y: -1.0 / (k - y), (-0.5, 0.0), "b=-2", k_max=2),
        ]
    if kind is MapKind.EVEN:
        return [
            BranchFamily(3, lambda k, y: 1.0 / (k + y), full, "a>=3,e=+1"),
            BranchFamily(3, lambda k, y: -1.0 / (k + y), full, "a>=3,e=-1"),
            BranchFamily(2, lambda k, y: 1.0 / (k + y), (0.0, 0.5), "a=2,e=+1", k_max=2),
            BranchFamily(2, lambda k, y: -1.0 / (k + y), (0.0, 0.5), "a=2,e=-1", k_max=2),
        ]
    if kind is MapKind.CONJUGATE:
        return [
            BranchFamily(2, lambda k, y: 1.0 / (k + y), (0.0, 1.0), "e=+1"),
            BranchFamily(2, lambda k, y: 1.0 - 1.0 / (k + y), (0.0, 1.0), "e=-1"),
        ]
    return [
        BranchFamily(2, lambda k, y: 1.0 / (k + y), (0.0, g), "e=+1"),
        BranchFamily(2, lambda k, y: 1.0 / (k - y), (0.0, G_SQ_SMALL), "e=-1"),
    ]
