import math
import warnings

import numpy as np
import pytest

from nicf.gkl import (
    WIRSING, DegreeWarning, fit_rate, gkl_iterate, lebesgue_preimage, levy_comparison,
    theorem1_check,
)
from nicf.measures import DensityKind, measure_value
from nicf.transfer import CONJUGATE_U, FOLDED_U, mu_operator


@pytest.fixture(scope="module", params=["folded", "conjugate"])
def report(request):
    return gkl_iterate(request.param, 20)


def test_verdict_and_rate(report):
    assert report.verdict
    assert report.fitted_rate < report.paper_rate
    assert report.max_ratio < report.paper_rate
    assert report.noise_floor_n is None and report.method == "centred"
    assert report.mass_residual < 1e-14
    assert len(report.errors) == 21 and len(report.ratios) == 20


def test_late_ratios_match_the_subdominant_eigenvalue(report):
    # dual route: the spectrum of the collocation matrix, not the iteration
    family = FOLDED_U if report.map_kind == "folded" else CONJUGATE_U
    ev = np.linalg.eigvals(mu_operator(family).matrix())
    lam2 = np.sort(np.abs(ev))[-2]
    assert lam2 == pytest.approx(0.0226937, abs=1e-6)
    assert report.ratios[15] == pytest.approx(lam2, rel=1e-6)
    assert report.max_ratio == pytest.approx(lam2, rel=1e-3)


def test_direct_mode_hits_the_noise_floor():
    with pytest.warns(DegreeWarning):
        rep = gkl_iterate("folded", 20, centred=False)
    assert rep.method == "direct" and rep.noise_floor_n is not None
    assert rep.warnings
    assert rep.verdict


def test_centred_mode_is_silent():
    with warnings.catch_warnings():
        warnings.simplefilter("error", DegreeWarning)
        gkl_iterate("conjugate", 20)


def test_gkl_rejects_other_maps():
    with pytest.raises(ValueError):
        gkl_iterate("hurwitz", 10)
    with pytest.raises(ValueError):
        gkl_iterate("folded", 1)


def test_fit_rate_of_exact_geometric_sequence():
    e = [0.5 * 0.03**n for n in range(12)]
    rate, pts = fit_rate(e)
    assert rate == pytest.approx(0.03, rel=1e-12)
    assert pts == [n for n in range(12) if 1e-12 < e[n] < 1e-2]
    assert math.isnan(fit_rate([1.0, 0.5])[0])


def _folded_preimage_length(a, b, K=2_000_000):
    # T^-1 [a, b] is the union of the branch images 1/(k +- y), y in [a, b]
    k = np.arange(2, K + 1, dtype=float)
    plus = np.sum(1.0 / (k + a) - 1.0 / (k + b))
    k = k[1:]
    minus = np.sum(1.0 / (k - b) - 1.0 / (k - a))
    # both tails are about (b - a) / K
    return plus + minus + 2.0 * (b - a) / K


def _conjugate_preimage_length(a, b, K=2_000_000):
    # each half contributes sum_k 1/(k + a) - 1/(k + b)
    k = np.arange(2, K + 1, dtype=float)
    return 2.0 * (np.sum(1.0 / (k + a) - 1.0 / (k + b)) + (b - a) / K)


def test_first_preimage_against_branch_sums():
    got = lebesgue_preimage("folded", [(0.1, 0.3)], 1)["value"]
    assert got == pytest.approx(_folded_preimage_length(0.1, 0.3), abs=1e-11)
    got = lebesgue_preimage("conjugate", [(0.2, 0.7)], 1)["value"]
    assert got == pytest.approx(_conjugate_preimage_length(0.2, 0.7), abs=1e-11)


@pytest.mark.parametrize("kind, E", [
    ("odd", [(-0.3, -0.1), (0.2, 0.25)]),
    ("even", [(-0.25, 0.25)]),
    ("conjugate", [(0.1, 0.6)]),
])
def test_lebesgue_preimage_tends_to_mu(kind, E):
    dens = DensityKind.for_map(kind)
    prev = math.inf
    for n in (2, 4, 6):
        res = lebesgue_preimage(kind, E, n)
        assert res["mu"] == pytest.approx(measure_value(dens, E), abs=1e-15)
        assert res["value"] == pytest.approx(res["limit"] + res["deviation"], abs=1e-16)
        assert abs(res["deviation"]) < 0.1 * prev
        prev = abs(res["deviation"])


def test_folded_limit_is_half_the_measure():
    # Lebesgue mass of [0, 1/2] is 1/2, so lambda(T^-n E) -> mu(E) / 2
    res = lebesgue_preimage("folded", [(0.1, 0.3)], 8)
    assert res["limit"] == pytest.approx(0.5 * res["mu"], rel=1e-15)


def test_theorem1_check_against_monte_carlo():
    out = theorem1_check("even", [(-0.25, 0.25)], 3, samples=1_000_000, seed=3)
    assert out["residual"] < 1e-6
    assert out["mc_z"] < 4.5
    assert out["mc_samples"] == 1_000_000
    no_mc = theorem1_check("odd", [(0.1, 0.2)], 2, samples=0)
    assert "monte_carlo" not in no_mc
    with pytest.raises(ValueError):
        theorem1_check("odd", [(0.1, 0.2)], 0, samples=0)


def test_odd_preimage_against_monte_carlo():
    out = theorem1_check("odd", [(-0.25, 0.125)], 8, samples=10_000_000, seed=21, workers=4)
    assert out["mc_z"] < 4.0
    assert out["residual"] < 1e-12


def test_levy_comparison_rows():
    rows = levy_comparison(n_max=12)
    assert [r["family"] for r in rows] == ["folded", "conjugate", "gauss (Wirsing)"]
    assert rows[0]["paper_constant"] == 0.288 and rows[1]["paper_constant"] == 0.234
    assert rows[2]["paper_constant"] == WIRSING
    for r in rows[:2]:
        assert r["fitted_rate"] < r["certified_sup"] <= r["paper_constant"]
    assert math.isnan(rows[2]["fitted_rate"])
