"""Cylinder sets, pushed indicators and mixing correlations.

A cylinder of rank r is the image of the last digit's parameter range under
the composed inverse branches w_(d_1) o ... o w_(d_r).  Pushing its indicator
forward r times with U gives the smooth function

    C_F(y) = prod_{i=1}^r W_(d_i)( w_(d_(i+1)) o ... o w_(d_r)(y) ),

which is then iterated as an ordinary sampled function.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .chebyshev import DEFAULT_DEGREE, SampledFunction
from .maps import (
    G_SQ_SMALL,
    AdmissibilityError,
    DigitSequence,
    MapKind,
    NicfDigit,
    branch,
    g,
)
from .measures import DensityKind, IntervalUnion, J_image, density, measure_value
from .transfer import (
    CONJUGATE_U,
    DEFAULT_TRUNCATION,
    FOLDED_U,
    OPERATORS,
    WeightFamily,
    apply_U,
    as_family,
)

MAX_RANK = 6


def parameter_range(kind: MapKind, d: NicfDigit) -> tuple[float, float]:
    """Values T^r x can take after the last digit ``d`` of a word."""
    if kind is MapKind.FOLDED:
        return (0.0, 0.5)
    if kind is MapKind.ODD:
        if d.a == 2:
            return (0.0, 0.5)
        if d.a == -2:
            return (-0.5, 0.0)
        return (-0.5, 0.5)
    if kind is MapKind.EVEN:
        return (0.0, 0.5) if d.a == 2 else (-0.5, 0.5)
    if kind is MapKind.CONJUGATE:
        return (0.0, 1.0)
    return (0.0, g) if d.e == 1 else (0.0, G_SQ_SMALL)


def branch_orientation(kind: MapKind, d: NicfDigit) -> int:
    """+1 if the inverse branch of ``d`` is increasing, -1 if decreasing."""
    if kind is MapKind.ODD:
        return -1
    if kind is MapKind.EVEN:
        return -d.e
    if kind is MapKind.CONJUGATE:
        return -d.e
    return -d.e


@dataclass(frozen=True)
class CylinderSpec:
    """The cylinder of an admissible finite word."""
    kind: MapKind
    word: DigitSequence

    def __post_init__(self):
        kind = MapKind.parse(self.kind)
        object.__setattr__(self, "kind", kind)
        word = self.word
        if not isinstance(word, DigitSequence):
            word = DigitSequence(kind, tuple(word))
        elif word.kind is not kind:
            raise ValueError(f"word belongs to {word.kind.value}, not {kind.value}")
        if len(word) == 0:
            raise AdmissibilityError("a cylinder needs at least one digit")
        if len(word) > MAX_RANK:
            raise ValueError(f"cylinder rank is limited to {MAX_RANK}")
        object.__setattr__(self, "word", word)

    @classmethod
    def of(cls, kind, digits: Sequence) -> "CylinderSpec":
        kind = MapKind.parse(kind)
        return cls(kind, DigitSequence(kind, tuple(digits)))

    @property
    def rank(self) -> int:
        return len(self.word)

    @property
    def orientation(self) -> int:
        s = 1
        for d in self.word.digits:
            s *= branch_orientation(self.kind, d)
        return s

    def compose(self, y):
        """w_(d_1) o ... o w_(d_r) applied to ``y``."""
        v = np.asarray(y, dtype=float)
        for d in reversed(self.word.digits):
            v = branch(self.kind, d)(v)
        return v

    @cached_property
    def interval(self) -> tuple[float, float]:
        lo, hi = parameter_range(self.kind, self.word.digits[-1])
        a, b = float(self.compose(lo)), float(self.compose(hi))
        return (a, b) if self.orientation > 0 else (b, a)

    def extend(self, d) -> "CylinderSpec":
        return CylinderSpec.of(self.kind, list(self.word.digits) + [d])


def cylinder_interval(spec: CylinderSpec) -> tuple[float, float]:
    return spec.interval


def rank_one_cylinders(kind, k_max: int) -> list[CylinderSpec]:
    """All admissible rank-one cylinders with partial quotient <= k_max."""
    kind = MapKind.parse(kind)
    out = []
    if kind is MapKind.ODD:
        for b in range(2, k_max + 1):
            out += [CylinderSpec.of(kind, [b]), CylinderSpec.of(kind, [-b])]
        return out
    for a in range(2, k_max + 1):
        for e in (1, -1):
            try:
                out.append(CylinderSpec.of(kind, [(a, e)]))
            except AdmissibilityError:
                pass
    return out


# --------------------------------------------------------------------------
# pushed indicators

def _family_for(kind: MapKind) -> WeightFamily:
    if kind is MapKind.FOLDED:
        return FOLDED_U
    if kind is MapKind.CONJUGATE:
        return CONJUGATE_U
    raise ValueError(f"no weight family for {kind.value} cylinders")


def _measure_kind(family: WeightFamily) -> DensityKind:
    return DensityKind.FOLDED_MU if family.folded else DensityKind.CONJUGATE_MU


def pushed_indicator_values(spec: CylinderSpec, family, y) -> np.ndarray:
    """C_F(y) = U^r chi_F(y) from the product of composed weights."""
    family = as_family(family)
    if _family_for(spec.kind) != family:
        raise ValueError(f"{spec.kind.value} cylinder does not match {family!r}")
    v = np.asarray(y, dtype=float)
    out = np.ones_like(v)
    for d in reversed(spec.word.digits):
        out = out * family.weight(d.a, d.e, v)
        v = family.point(d.a, d.e, v)
    return out


@dataclass(frozen=True)
class PushedIndicator:
    base: CylinderSpec
    family: WeightFamily
    function: SampledFunction

    def __call__(self, y):
        return pushed_indicator_values(self.base, self.family, y)


def pushed_indicator(spec: CylinderSpec, family=None,
                     degree: int = DEFAULT_DEGREE) -> PushedIndicator:
    family = _family_for(spec.kind) if family is None else as_family(family)
    f = SampledFunction.from_function(
        lambda y: pushed_indicator_values(spec, family, y), family.domain, degree)
    return PushedIndicator(spec, family, f)


def integrate_mu(f: SampledFunction, E, family) -> float:
    """int_E f dmu for the invariant probability of ``family``."""
    family = as_family(family)
    kind = _measure_kind(family)
    E = IntervalUnion.coerce(E)
    return sum(f.integrate(a, b, weight=lambda x: density(kind, x)) for a, b in E)


def indicator_iteration(spec: CylinderSpec, y, K: int = 400) -> np.ndarray:
    """U^r chi_F at points ``y`` by nested branch sums over the exact indicator.

    Branches k > K are lumped into one term with the indicator frozen at the
    cluster point; this is the route that does not use the product formula.
    """
    family = _family_for(spec.kind)
    a, b = spec.interval
    y = np.atleast_1d(np.asarray(y, dtype=float))

    # (sign, cluster point, tail weight) of every branch family
    if family.folded:
        tails = [(lambda v: family.tail(K, v), 0.0)]
    else:
        tails = [(lambda v, grp=grp: grp.tail_moments(K, v)[0], 1.0 if grp.cluster_at_end else 0.0)
                 for grp in OPERATORS["conjugate_U"].groups]

    def level(v, depth):
        if depth == 0:
            return ((v >= a) & (v <= b)).astype(float)
        flat = v.ravel()
        total = np.zeros_like(flat)
        for e in (1, -1):
            k = np.arange(family.k_min(e), K + 1, dtype=float)[:, None]
            pts = family.point(k, e, flat[None, :])
            total += np.sum(family.weight(k, e, flat[None, :]) * level(pts, depth - 1), axis=0)
        for weight, c in tails:
            total += weight(flat) * level(np.array([c]), depth - 1)[0]
        return total.reshape(v.shape)

    return level(y, spec.rank)


# --------------------------------------------------------------------------
# mixing

@dataclass
class MixingResult:
    """joint = mu(T^-n E cap F), product = mu(E) mu(F), deviation = joint - product.

    ``deviation`` is computed directly, not as a difference, so it keeps
    relative accuracy far below the rounding level of ``joint``.
    """
    n: int
    joint: float
    product: float
    gap: float
    deviation: float


def _centred_iterates(F: CylinderSpec, family: WeightFamily, ns, degree: int, K: int):
    """Yield (n, U^(n-r)(C_F - mu(F))) for sorted ``ns``.

    U preserves mu-means, so the mean of every iterate is exactly zero; it
    is re-projected after each step so that discretisation drift in the mean
    does not masquerade as correlation once the true gap is below 1e-14.
    """
    kind = _measure_kind(family)
    mass = measure_value(kind, F.interval)
    dom = [family.domain]
    f = pushed_indicator(F, family, degree).function - mass
    step = F.rank
    for n in ns:
        while step < n:
            f = apply_U(family, f, K)
            f = f - integrate_mu(f, dom, family)
            step += 1
        yield n, f


def mixing_sequence(E, F: CylinderSpec, ns: Sequence[int], family=None,
                    degree: int = DEFAULT_DEGREE,
                    K: int = DEFAULT_TRUNCATION) -> list[MixingResult]:
    """mu(T^-n E cap F) = int_E U^(n-r) C_F dmu and its gap to mu(E) mu(F)."""
    family = _family_for(F.kind) if family is None else as_family(family)
    kind = _measure_kind(family)
    E = IntervalUnion.coerce(E)
    ns = sorted(set(int(n) for n in ns))
    if ns[0] < F.rank:
        raise ValueError(f"n = {ns[0]} is below the cylinder rank {F.rank}")
    product = measure_value(kind, E) * measure_value(kind, F.interval)
    out = []
    for n, f in _centred_iterates(F, family, ns, degree, K):
        dev = integrate_mu(f, E, family)
        out.append(MixingResult(n, product + dev, product, abs(dev), dev))
    return out


def mixing_correlation(E, F: CylinderSpec, n: int, family=None,
                       degree: int = DEFAULT_DEGREE,
                       K: int = DEFAULT_TRUNCATION) -> MixingResult:
    return mixing_sequence(E, F, [n], family, degree, K)[0]


def uncentred_joint(E, F: CylinderSpec, n: int, family=None,
                    degree: int = DEFAULT_DEGREE, K: int = DEFAULT_TRUNCATION) -> float:
    """int_E U^(n-r) C_F dmu iterated without re-centring (cross-check route)."""
    family = _family_for(F.kind) if family is None else as_family(family)
    if n < F.rank:
        raise ValueError(f"n = {n} is below the cylinder rank {F.rank}")
    f = pushed_indicator(F, family, degree).function
    for _ in range(n - F.rank):
        f = apply_U(family, f, K)
    return integrate_mu(f, E, family)


def sampled_indicator_gap(F: CylinderSpec, degree: int = 256,
                          K: int = DEFAULT_TRUNCATION) -> dict:
    """Iterate U r times on the collocated indicator of F and compare with C_F.

    The collocated indicator carries Gibbs oscillations into every branch
    image of the jumps, so only the L1(mu) gap shrinks with the degree; the
    sup gap is reported for information.
    """
    family = _family_for(F.kind)
    a, b = F.interval
    f = SampledFunction.from_function(lambda y: ((y >= a) & (y <= b)).astype(float),
                                      family.domain, degree)
    for _ in range(F.rank):
        f = apply_U(family, f, K)
    exact = pushed_indicator(F, family, degree)
    x = np.linspace(*family.domain, 20001)
    diff = np.abs(f(x) - exact(x))
    kind = _measure_kind(family)
    l1 = float(np.trapezoid(diff * density(kind, x), x))
    return {"degree": degree, "l1_mu": l1, "sup": float(diff.max())}


# --------------------------------------------------------------------------
# odd-map cylinders through the folded map

def odd_to_folded(F: CylinderSpec) -> tuple[int, list[CylinderSpec]]:
    """Write |F| for an odd-map cylinder F as a union of folded cylinders.

    Returns the side sign(b_1) and one or two folded cylinders with
    a_i = |b_i| and e_i = sign(b_i) sign(b_(i+1)); the last sign is free
    unless |b_r| = 2 forces it.
    """
    if F.kind is not MapKind.ODD:
        raise ValueError("expected an odd-map cylinder")
    b = [d.a for d in F.word.digits]
    core = [(abs(b[i]), int(np.sign(b[i]) * np.sign(b[i + 1]))) for i in range(len(b) - 1)]
    parts = []
    for e in (1, -1):
        try:
            parts.append(CylinderSpec.of(MapKind.FOLDED, core + [(abs(b[-1]), e)]))
        except AdmissibilityError:
            pass
    return int(np.sign(b[0])), parts


def odd_mixing(E_half, F: CylinderSpec, n: int, degree: int = DEFAULT_DEGREE,
               K: int = DEFAULT_TRUNCATION) -> MixingResult:
    """mu_o(T_o^-n E cap F) for the symmetric set E = E_half u (-E_half).

    Since T_o is odd and E symmetric, the event reduces to the folded map on
    |F|, and mu_o of a one-sided set is half the folded measure of its mirror
    image in [0, 1/2].
    """
    _, parts = odd_to_folded(F)
    joint = dev = 0.0
    for P in parts:
        r = mixing_correlation(E_half, P, n, FOLDED_U, degree, K)
        joint += r.joint
        # mu_o(E) mu_o(F) = sum over parts of mu(E_half) mu(P) / 2, so the
        # gap is carried by the centred deviations without cancellation
        dev += r.deviation
    E_sym = IntervalUnion.coerce(E_half).union(-IntervalUnion.coerce(E_half))
    product = measure_value(DensityKind.ODD_MU, E_sym) * measure_value(DensityKind.ODD_MU, F.interval)
    return MixingResult(n, 0.5 * joint, product, 0.5 * abs(dev), 0.5 * dev)


def conjugate_mixing(E, F_tilde: CylinderSpec, n: int, degree: int = DEFAULT_DEGREE,
                     K: int = DEFAULT_TRUNCATION) -> MixingResult:
    """mu_e(T_e^-n E cap J^-1 F~) computed in the conjugated system on J E."""
    if F_tilde.kind is not MapKind.CONJUGATE:
        raise ValueError("F~ must be a cylinder of the conjugated even map")
    return mixing_correlation(J_image(E), F_tilde, n, CONJUGATE_U, degree, K)


def mixing_monte_carlo(F: CylinderSpec, E, n: int, samples: int = 10_000_000,
                       seed: int | None = None, workers: int = 1):
    """Estimate mu(T^-n E cap F) from orbits of points drawn from mu.

    For a conjugate cylinder ``E`` lives in [-1/2, 1/2] and is carried by J;
    for an odd cylinder ``E`` is used as given in [-1/2, 1/2].
    """
    from .montecarlo import estimate_fraction, orbit_event, sample_measure

    kind = F.kind
    E = IntervalUnion.coerce(E)
    if kind is MapKind.CONJUGATE:
        E = J_image(E)
    dens = DensityKind.for_map(kind)
    return estimate_fraction(lambda m, rng: sample_measure(dens, m, rng),
                             orbit_event(kind, n, E, [F.interval]), samples, seed, workers)
