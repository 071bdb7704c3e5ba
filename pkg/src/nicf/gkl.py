"""Gauss-Kuzmin-Levy decay: iterate gamma_n = U^n H and measure its convergence.

With nu = h dx and H = 1/h, the Lebesgue measure of T^-n E is
int_E gamma_n h dx.  gamma_n tends to a constant c, so
e(n) = sup |gamma_n h - c h| measures the distance to the limit law.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .chebyshev import DEFAULT_DEGREE, SampledFunction
from .maps import LOG_G, G, MapKind
from .measures import DensityKind, IntervalUnion, J_image, density, measure_value
from .montecarlo import estimate_fraction, orbit_event, sample_uniform
from .transfer import CONJUGATE_U, DEFAULT_TRUNCATION, FOLDED_U, WeightFamily, apply_U

WIRSING = 0.303663
FIT_WINDOW = (1e-12, 1e-2)
NOISE_FLOOR = 1e-13
STALL_RATIO = 0.5


class DegreeWarning(UserWarning):
    """The iteration reached the float noise floor before n_max."""


def _setup(kind: MapKind):
    """(family, h, c): density used for nu and the limit constant of gamma_n."""
    if kind is MapKind.FOLDED:
        h = lambda y: 1.0 / (G + y) + 1.0 / (G + 1.0 - y)
        # int_0^{1/2} h = log G, and the Lebesgue mass of [0, 1/2] is 1/2
        return FOLDED_U, h, 1.0 / (2.0 * LOG_G)
    if kind is MapKind.CONJUGATE:
        return CONJUGATE_U, (lambda x: 1.0 / ((G + x) * LOG_G)), 1.0
    raise ValueError("GKL iteration runs on the folded or the conjugated even map")


@dataclass
class DecayReport:
    map_kind: str
    n_range: tuple[int, int]
    errors: list[float]
    ratios: list[float]
    fitted_rate: float
    paper_rate: float
    verdict: bool
    fit_window: tuple[float, float]
    fit_points: list[int]
    max_ratio: float
    ratio_checked_range: tuple[int, int]
    noise_floor_n: int | None
    degree: int
    truncation: int
    method: str
    mass_residual: float
    derivative_norms: list[float]
    h_prime_norm: float
    warnings: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return asdict(self)


def _sup(f, x):
    return float(np.max(np.abs(f(x))))


def gamma_iterates(kind, n_max: int, degree: int = DEFAULT_DEGREE,
                   K: int = DEFAULT_TRUNCATION, centred: bool = True):
    """Yield (n, delta_n) with delta_n = gamma_n - c, for n = 0..n_max.

    With ``centred`` the iterate is kept at mu-mean zero after each step (the
    exact operator preserves the mean, the discretised one only to ~1e-14);
    otherwise gamma_n itself is iterated and c subtracted afterwards.
    """
    kind = MapKind.parse(kind)
    family, h, c = _setup(kind)
    H = SampledFunction.from_function(lambda y: 1.0 / h(y), family.domain, degree)
    dmu = _mu_density(family)
    f = H - c if centred else H
    for n in range(n_max + 1):
        if n > 0:
            f = apply_U(family, f, K)
            if centred:
                f = f - f.integrate(weight=dmu)
        yield n, (f if centred else f - c)


def _mu_density(family: WeightFamily):
    kind = DensityKind.FOLDED_MU if family.folded else DensityKind.CONJUGATE_MU
    return lambda x: density(kind, x)


def fit_rate(errors, window=FIT_WINDOW) -> tuple[float, list[int]]:
    """Least squares slope of log e(n) over the n with e(n) inside ``window``."""
    n = np.arange(len(errors))
    e = np.asarray(errors)
    mask = (e > window[0]) & (e < window[1])
    pts = n[mask]
    if pts.size < 2:
        return math.nan, pts.tolist()
    slope = np.polyfit(pts.astype(float), np.log(e[mask]), 1)[0]
    return float(math.exp(slope)), pts.tolist()


def _noise_floor(errors, ratios, centred: bool) -> int | None:
    """First n whose error is rounding noise.

    Uncentred iterates carry an O(1) constant, so errors below NOISE_FLOOR are
    noise; centred iterates keep relative accuracy and only a stalled ratio
    (decay slower than STALL_RATIO) marks the floor.
    """
    for n, e in enumerate(errors):
        if not centred and e < NOISE_FLOOR:
            return n
        if n >= 1 and ratios[n - 1] >= STALL_RATIO:
            return n
    return None


def gkl_iterate(kind, n_max: int = 20, degree: int = DEFAULT_DEGREE,
                K: int = DEFAULT_TRUNCATION, centred: bool = True,
                ratio_from: int = 3) -> DecayReport:
    """Iterate gamma_n to ``n_max`` and compare the decay with the target rate."""
    kind = MapKind.parse(kind)
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    family, h, c = _setup(kind)
    x = np.linspace(*family.domain, 4001)
    hx = h(x)
    errors, dnorms, masses = [], [], []
    for n, d in gamma_iterates(kind, n_max, degree, K, centred):
        errors.append(float(np.max(np.abs(d(x) * hx))))
        dnorms.append(_sup(d.derivative(), x))
        # int gamma_n h dx = lambda(domain)
        gam = d + c
        masses.append(gam.integrate(weight=h))
    lam = family.domain[1] - family.domain[0]
    mass_res = float(np.max(np.abs(np.asarray(masses) - lam)))
    ratios = [errors[n + 1] / errors[n] if errors[n] > 0 else math.nan for n in range(n_max)]
    floor = _noise_floor(errors, ratios, centred)
    notes = []
    if floor is not None and floor < n_max:
        notes.append(f"error below {NOISE_FLOOR:g} from n = {floor}; "
                     f"ratios beyond it are rounding noise, raise the degree or centre the iteration")
        warnings.warn(notes[-1], DegreeWarning, stacklevel=2)
    # ratio n compares e(n+1) with e(n), so both must sit above the floor
    last = n_max - 1 if floor is None else max(floor - 2, ratio_from)
    checked = [r for n, r in enumerate(ratios) if ratio_from <= n <= last]
    max_ratio = float(max(checked)) if checked else math.nan
    rate, pts = fit_rate(errors)
    paper = family.paper_rate
    verdict = bool(rate <= paper and max_ratio <= paper)
    h_prime = float(np.max(np.abs(SampledFunction.from_function(
        lambda y: 1.0 / h(y), family.domain, degree).derivative()(x))))
    return DecayReport(kind.value, (0, n_max), errors, ratios, rate, paper, verdict,
                       FIT_WINDOW, pts, max_ratio, (ratio_from, last), floor, degree, K,
                       "centred" if centred else "direct", mass_res, dnorms, h_prime, notes)


# --------------------------------------------------------------------------
# lambda(T^-n E) by the operator and by Monte Carlo

def _operator_measure(family_kind: MapKind, E: IntervalUnion, n: int, degree: int, K: int):
    """(lambda(T^-n E), limit, deviation) for E inside the folded or conjugate domain.

    The deviation int_E (gamma_n - c) h dx is integrated on its own so it
    stays accurate far below the rounding level of the measure itself.
    """
    family, h, c = _setup(family_kind)
    *_, (_, d) = gamma_iterates(family_kind, n, degree, K)
    dev = sum(d.integrate(a, b, weight=h) for a, b in E)
    dens = DensityKind.FOLDED_MU if family.folded else DensityKind.CONJUGATE_MU
    mu = measure_value(dens, E)
    # c int_E h dx equals the limit: mu/2 folded, mu conjugate
    limit = 0.5 * mu if family.folded else mu
    return limit + dev, limit, dev


def lebesgue_preimage(kind, E, n: int, degree: int = DEFAULT_DEGREE,
                      K: int = DEFAULT_TRUNCATION) -> dict:
    """lambda(kind^-n E) through the folded or the conjugated operator.

    Odd map: lambda(T_o^-n A) = lambda(T^-n A) for A in [0, 1/2] and T_o^-n(-A) = -T_o^-n A.
    Even map: J carries T_e^-n E to the conjugate preimage of J E, preserving length.
    """
    kind = MapKind.parse(kind)
    E = IntervalUnion.coerce(E)
    if kind is MapKind.FOLDED:
        val, lim, dev = _operator_measure(MapKind.FOLDED, E, n, degree, K)
        mu = 2.0 * lim
    elif kind is MapKind.ODD:
        val = lim = dev = 0.0
        for part in (E.intersect(0.0, 0.5), (-E).intersect(0.0, 0.5)):
            if not part.is_empty:
                v, l, d = _operator_measure(MapKind.FOLDED, part, n, degree, K)
                val, lim, dev = val + v, lim + l, dev + d
        mu = measure_value(DensityKind.ODD_MU, E)
    elif kind is MapKind.EVEN:
        val, lim, dev = _operator_measure(MapKind.CONJUGATE, J_image(E), n, degree, K)
        mu = measure_value(DensityKind.EVEN_MU, E)
    elif kind is MapKind.CONJUGATE:
        val, lim, dev = _operator_measure(MapKind.CONJUGATE, E, n, degree, K)
        mu = lim
    else:
        raise ValueError(f"no operator route for {kind.value}")
    return {"value": val, "limit": lim, "deviation": dev, "mu": mu}


def theorem1_check(kind, E, n: int, samples: int = 10_000_000, seed: int | None = None,
                   degree: int = DEFAULT_DEGREE, K: int = DEFAULT_TRUNCATION,
                   workers: int = 1) -> dict:
    """Operator route against the limit law and against a Monte Carlo orbit count."""
    kind = MapKind.parse(kind)
    if n < 1:
        raise ValueError("n must be >= 1")
    E = IntervalUnion.coerce(E)
    op = lebesgue_preimage(kind, E, n, degree, K)
    lo, hi = kind.domain
    est = estimate_fraction(lambda m, rng: sample_uniform(lo, hi, m, rng),
                            orbit_event(kind, n, E), samples, seed, workers) if samples else None
    out = {"kind": kind.value, "E": E.as_list(), "n": n,
           "operator": op["value"], "limit": op["limit"], "mu_E": op["mu"],
           "deviation": op["deviation"],
           "residual": abs(op["deviation"]) / op["mu"] if op["mu"] > 0 else 0.0}
    if est is not None:
        scale = hi - lo
        out.update({"monte_carlo": est.p * scale, "mc_stderr": est.stderr * scale,
                    "mc_samples": samples, "mc_z": est.z_score(op["value"] / scale)})
    return out


def levy_comparison(degree: int = DEFAULT_DEGREE, n_max: int = 20) -> list[dict]:
    """Target constants next to certified sups and fitted rates, plus Wirsing's constant."""
    from .bounds import conjugate_certificate, folded_certificate

    fc = folded_certificate()
    cc = conjugate_certificate()
    rows = []
    for kind, cert in ((MapKind.FOLDED, fc), (MapKind.CONJUGATE, cc)):
        rep = gkl_iterate(kind, n_max, degree)
        rows.append({"family": kind.value, "paper_constant": cert["paper_constant"],
                     "certified_sup": cert["certified_sup"],
                     "lemma_route_sup": cert.get("lemma_route_sup", cert["certified_sup"]),
                     "fitted_rate": rep.fitted_rate})
    rows.append({"family": "gauss (Wirsing)", "paper_constant": WIRSING,
                 "certified_sup": math.nan, "lemma_route_sup": math.nan,
                 "fitted_rate": math.nan})
    return rows
