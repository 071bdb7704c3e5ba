import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nicf.cylinders import (
    CylinderSpec, conjugate_mixing, indicator_iteration, integrate_mu, mixing_correlation,
    mixing_monte_carlo, mixing_sequence, odd_mixing, odd_to_folded, pushed_indicator,
    rank_one_cylinders, sampled_indicator_gap, uncentred_joint,
)
from nicf.maps import AdmissibilityError, MapKind, expand
from nicf.measures import DensityKind, J_image, measure_value

F2 = CylinderSpec.of("folded", [(3, -1), (2, 1)])


def test_rank_one_intervals():
    assert CylinderSpec.of("folded", [(2, 1)]).interval == pytest.approx((0.4, 0.5), abs=1e-16)
    assert CylinderSpec.of("conjugate", [(2, 1)]).interval == pytest.approx((1 / 3, 0.5), abs=1e-16)
    assert CylinderSpec.of("conjugate", [(2, -1)]).interval == pytest.approx((0.5, 2 / 3), abs=2e-16)


def test_rank_two_interval_by_hand():
    # x = 1/(3 - y) with y in (0.4, 0.5)
    assert F2.interval == pytest.approx((1 / 2.6, 1 / 2.5), abs=1e-16)


def test_rank_one_cylinders_enumerates_admissible_words():
    words = [c.word.as_list() for c in rank_one_cylinders("folded", 3)]
    assert words == [[(2, 1)], [(3, 1)], [(3, -1)]]
    assert len(rank_one_cylinders("odd", 4)) == 6


def test_cylinder_validation():
    with pytest.raises(AdmissibilityError):
        CylinderSpec.of("folded", [])
    with pytest.raises(AdmissibilityError):
        CylinderSpec.of("folded", [(2, -1)])
    with pytest.raises(ValueError):
        CylinderSpec.of("folded", [(3, 1)] * 7)


def _random_word(kind, draw):
    spec = None
    for _ in range(draw(st.integers(1, 4))):
        a, e = draw(st.integers(2, 9)), draw(st.sampled_from([1, -1]))
        try:
            spec = CylinderSpec.of(kind, [(a, e)]) if spec is None else spec.extend((a, e))
        except AdmissibilityError:
            continue
    return spec


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([MapKind.FOLDED, MapKind.CONJUGATE]), st.data())
def test_cylinders_nest_and_expand_to_their_word(kind, data):
    spec = _random_word(kind, data.draw)
    if spec is None:
        return
    a, b = spec.interval
    assert a < b
    mid = 0.5 * (a + b)
    assert expand(kind, mid, spec.rank).as_list()[:spec.rank] == spec.word.as_list()
    for d in ((2, 1), (5, -1), (7, 1)):
        try:
            child = spec.extend(d)
        except (AdmissibilityError, ValueError):
            continue
        c0, c1 = child.interval
        assert a - 1e-15 <= c0 < c1 <= b + 1e-15


@pytest.mark.parametrize("spec", [F2, CylinderSpec.of("conjugate", [(2, 1), (3, -1)])],
                         ids=["folded", "conjugate"])
def test_pushed_indicator_has_the_cylinder_mass(spec):
    pi = pushed_indicator(spec)
    kind = DensityKind.for_map(spec.kind)
    assert integrate_mu(pi.function, [pi.family.domain], pi.family) == pytest.approx(
        measure_value(kind, spec.interval), rel=1e-12)


@pytest.mark.parametrize("spec", [F2, CylinderSpec.of("conjugate", [(3, -1), (2, 1)])],
                         ids=["folded", "conjugate"])
def test_product_formula_against_branch_sums(spec):
    pi = pushed_indicator(spec)
    lo, hi = pi.family.domain
    # generic points, none of which is mapped onto a cylinder endpoint
    y = lo + (hi - lo) * (np.arange(40) + math.sqrt(2) / 3) / 40
    assert np.allclose(indicator_iteration(spec, y), pi(y), rtol=1e-13, atol=1e-16)


def test_centred_and_uncentred_routes_agree():
    E = [(0.1, 0.3)]
    for n in (2, 3, 5):
        r = mixing_correlation(E, F2, n)
        assert uncentred_joint(E, F2, n) == pytest.approx(r.joint, abs=1e-13)
        assert r.joint == pytest.approx(r.product + r.deviation, abs=1e-17)


def test_mixing_sequence_decays():
    rows = mixing_sequence([(0.1, 0.3)], F2, [2, 4, 6, 8])
    gaps = [r.gap for r in rows]
    assert all(b < 0.1 * a for a, b in zip(gaps, gaps[1:]))
    with pytest.raises(ValueError):
        mixing_sequence([(0.1, 0.3)], F2, [1])


def test_whole_domain_has_no_correlation():
    r = mixing_correlation([(0.0, 0.5)], F2, 4)
    assert abs(r.deviation) < 1e-15


def test_collocated_indicator_converges_in_L1_only():
    coarse = sampled_indicator_gap(CylinderSpec.of("folded", [(2, 1)]), degree=64)
    fine = sampled_indicator_gap(CylinderSpec.of("folded", [(2, 1)]), degree=256)
    assert fine["l1_mu"] < 0.25 * coarse["l1_mu"]
    # Gibbs overshoot keeps the sup gap of order 1e-2
    assert fine["sup"] > 1e-3


def test_odd_to_folded():
    side, parts = odd_to_folded(CylinderSpec.of("odd", [3, -2]))
    assert side == 1 and [p.word.as_list() for p in parts] == [[(3, -1), (2, 1)]]
    O = CylinderSpec.of("odd", [-3, 4])
    side, parts = odd_to_folded(O)
    assert side == -1 and len(parts) == 2
    # the folded parts tile the mirror image of the odd cylinder
    a, b = O.interval
    lo = min(p.interval[0] for p in parts)
    hi = max(p.interval[1] for p in parts)
    assert (lo, hi) == pytest.approx((-b, -a), abs=1e-16)
    with pytest.raises(ValueError):
        odd_to_folded(F2)


def test_odd_mixing_with_full_target_is_the_cylinder_measure():
    O = CylinderSpec.of("odd", [-3, 4])
    r = odd_mixing([(0.0, 0.5)], O, 4)
    assert r.joint == pytest.approx(measure_value(DensityKind.ODD_MU, O.interval), rel=1e-12)
    assert abs(r.deviation) < 1e-15


def test_conjugate_mixing_uses_the_J_image():
    Ft = CylinderSpec.of("conjugate", [(2, 1)])
    E = [(-0.25, 0.25)]
    r = conjugate_mixing(E, Ft, 3)
    direct = mixing_correlation(J_image(E), Ft, 3, "conjugate")
    assert r.joint == direct.joint
    assert r.product == pytest.approx(measure_value(DensityKind.EVEN_MU, E)
                                      * measure_value(DensityKind.CONJUGATE_MU, Ft.interval))


@pytest.mark.parametrize("spec, E", [
    (F2, [(0.1, 0.3)]),
    (CylinderSpec.of("conjugate", [(2, 1)]), [(-0.25, 0.25)]),
], ids=["folded", "conjugate"])
def test_mixing_against_monte_carlo(spec, E):
    n = 2 if spec.rank == 1 else 3
    if spec.kind is MapKind.CONJUGATE:
        op = conjugate_mixing(E, spec, n)
    else:
        op = mixing_correlation(E, spec, n)
    est = mixing_monte_carlo(spec, E, n, samples=2_000_000, seed=7)
    assert est.z_score(op.joint) < 4.5


def test_rank_two_cylinder_measure_by_monte_carlo():
    from nicf.montecarlo import estimate_fraction, sample_measure

    F = CylinderSpec.of("folded", [(2, 1), (3, -1)])
    mass = measure_value(DensityKind.FOLDED_MU, F.interval)
    pi = pushed_indicator(F)
    assert integrate_mu(pi.function, [(0.0, 0.5)], "folded") == pytest.approx(mass, abs=1e-8)
    a, b = F.interval
    est = estimate_fraction(lambda m, rng: sample_measure(DensityKind.FOLDED_MU, m, rng),
                            lambda x: (x >= a) & (x <= b), 10_000_000, seed=17, workers=4)
    assert est.p == pytest.approx(mass, rel=1e-2)
    assert est.z_score(mass) < 4.5
