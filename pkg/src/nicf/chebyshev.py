"""Chebyshev-Gauss-Lobatto collocation on an interval.

A :class:`SampledFunction` stores values at the CGL nodes of a degree-N
interpolant.  Evaluation uses the barycentric formula, derivatives use the
spectral differentiation matrix of the same interpolant.
"""
from __future__ import annotations

from functools import lru_cache
from typing import Callable

import numpy as np

from . import _backend

DEFAULT_DEGREE = 64


@lru_cache(maxsize=None)
def _reference(degree: int):
    """Nodes in increasing order on [-1, 1], barycentric weights, D on [-1, 1]."""
    if degree < 1:
        raise ValueError("degree must be >= 1")
    j = np.arange(degree + 1)
    nodes = -np.cos(np.pi * j / degree)
    if degree % 2 == 0:
        nodes[degree // 2] = 0.0
    w = (-1.0) ** j
    w[0] *= 0.5
    w[-1] *= 0.5
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    D = (w[None, :] / w[:, None]) / diff
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    nodes.setflags(write=False)
    w.setflags(write=False)
    D.setflags(write=False)
    return nodes, w, D


def cgl_nodes(a: float, b: float, degree: int) -> np.ndarray:
    ref, _, _ = _reference(degree)
    x = a + (b - a) * (ref + 1.0) / 2.0
    x[0], x[-1] = a, b
    return x


def differentiation_matrix(a: float, b: float, degree: int) -> np.ndarray:
    return _reference(degree)[2] * (2.0 / (b - a))


def barycentric_weights(degree: int) -> np.ndarray:
    return _reference(degree)[1]


class SampledFunction:
    """A smooth function on ``domain`` represented by values at CGL nodes."""

    __slots__ = ("domain", "values", "_nodes")

    def __init__(self, domain: tuple[float, float], values):
        a, b = float(domain[0]), float(domain[1])
        if not b > a:
            raise ValueError("domain must be a non-degenerate interval")
        values = np.ascontiguousarray(values, dtype=np.float64)
        if values.ndim != 1 or values.size < 2:
            raise ValueError("need at least two sample values")
        if not np.all(np.isfinite(values)):
            raise ValueError("sample values must be finite")
        values.setflags(write=False)
        self.domain = (a, b)
        self.values = values
        self._nodes = None

    @classmethod
    def from_function(cls, f: Callable, domain, degree: int = DEFAULT_DEGREE) -> "SampledFunction":
        x = cgl_nodes(domain[0], domain[1], degree)
        return cls(domain, np.broadcast_to(np.asarray(f(x), dtype=float), x.shape))

    @classmethod
    def constant(cls, c: float, domain, degree: int = DEFAULT_DEGREE) -> "SampledFunction":
        return cls(domain, np.full(degree + 1, float(c)))

    @property
    def degree(self) -> int:
        return self.values.size - 1

    @property
    def nodes(self) -> np.ndarray:
        if self._nodes is None:
            self._nodes = cgl_nodes(*self.domain, self.degree)
        return self._nodes

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        out = _backend.barycentric_eval(self.nodes, barycentric_weights(self.degree),
                                        self.values, x)
        return float(np.ravel(out)[0]) if x.ndim == 0 else out

    def derivative(self) -> "SampledFunction":
        D = differentiation_matrix(*self.domain, self.degree)
        return SampledFunction(self.domain, D @ self.values)

    def _coerce(self, other):
        if isinstance(other, SampledFunction):
            if other.domain != self.domain or other.degree != self.degree:
                raise ValueError("sampled functions live on different grids")
            return other.values
        return float(other)

    def __add__(self, other):
        return SampledFunction(self.domain, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return SampledFunction(self.domain, self.values - self._coerce(other))

    def __rsub__(self, other):
        return SampledFunction(self.domain, self._coerce(other) - self.values)

    def __mul__(self, other):
        return SampledFunction(self.domain, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __neg__(self):
        return SampledFunction(self.domain, -self.values)

    def multiply(self, f: Callable) -> "SampledFunction":
        """Pointwise product with a callable, resampled at the nodes."""
        return SampledFunction(self.domain, self.values * f(self.nodes))

    def fine_grid(self, n: int = 2001) -> np.ndarray:
        return np.linspace(self.domain[0], self.domain[1], n)

    def sup_norm(self, n: int = 2001) -> float:
        """Max of |f| over the nodes and a uniform grid of ``n`` points."""
        return float(max(np.max(np.abs(self.values)),
                         np.max(np.abs(self(self.fine_grid(n))))))

    def integrate(self, lo: float | None = None, hi: float | None = None,
                  weight: Callable | None = None, npts: int | None = None) -> float:
        """Integral of ``f * weight`` over [lo, hi] by Gauss-Legendre."""
        a, b = self.domain
        lo = a if lo is None else lo
        hi = b if hi is None else hi
        if lo < a or hi > b:
            raise ValueError("integration bounds outside the domain")
        if hi <= lo:
            return 0.0
        n = npts or self.degree + 32
        t, wts = _gauss_legendre(n)
        x = lo + (hi - lo) * (t + 1.0) / 2.0
        vals = self(x)
        if weight is not None:
            vals = vals * weight(x)
        return float(np.dot(wts, vals) * (hi - lo) / 2.0)


@lru_cache(maxsize=None)
def _gauss_legendre(n: int):
    return np.polynomial.legendre.leggauss(n)
