import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import multivariate_normal

from _oracles import mc_first_crossing
from gsperm.boundaries import (BoundarySet, CovarianceSchedule, crossing_probabilities,
                               normal_boundaries, subdensity, t_approx_boundaries)
from gsperm.design import SpendingFunction, spend_increments
from gsperm.errors import DomainError, ValidationError
from gsperm.special import std_normal_pdf


def test_single_look_is_normal_quantile(pocock):
    b = normal_boundaries(CovarianceSchedule([1.0]), pocock)
    assert b.values[0] == pytest.approx(1.959963984540054, abs=1e-9)
    assert b.attained_spend[0] == pytest.approx(0.025, abs=1e-12)


def test_single_look_two_sided():
    b = normal_boundaries(CovarianceSchedule([1.0]), SpendingFunction("pocock", 0.05), "two-sided")
    assert b.values[0] == pytest.approx(1.959963984540054, abs=1e-9)


def test_two_look_pocock_against_bivariate_normal(pocock):
    b = normal_boundaries(CovarianceSchedule([0.5, 1.0]), pocock)
    c1, c2 = b.values
    assert (c1, c2) == pytest.approx((2.157, 2.201), abs=1e-3)
    rho = math.sqrt(0.5)
    p1 = 1.0 - multivariate_normal.cdf([c1], mean=[0.0], cov=[[1.0]])
    cov = [[1.0, rho], [rho, 1.0]]
    p_neither = multivariate_normal.cdf([c1, c2], mean=[0, 0], cov=cov, abseps=1e-10,
                                        releps=1e-10)
    p2 = 1.0 - p1 - p_neither
    incs = spend_increments(pocock, [0.5, 1.0])
    assert p1 == pytest.approx(incs[0], abs=1e-7)
    assert p2 == pytest.approx(incs[1], abs=1e-6)


def test_two_look_obf_first_value(obf):
    b = normal_boundaries(CovarianceSchedule([0.5, 1.0]), obf)
    assert b.values[0] == pytest.approx(2.9626, abs=1e-3)
    assert sum(b.attained_spend) == pytest.approx(0.025, abs=1e-8)


@pytest.mark.slow
@pytest.mark.parametrize("kind", ["pocock", "obrien-fleming"])
def test_two_look_monte_carlo(kind):
    sf = SpendingFunction(kind, 0.025)
    fr = [0.5, 1.0]
    b = normal_boundaries(CovarianceSchedule(fr), sf)
    mc = mc_first_crossing(fr, b.values, 10_000_000, seed=2024)
    incs = spend_increments(sf, fr)
    # binomial SE at 1e7 draws is below 5e-5 for these probabilities
    assert mc == pytest.approx(incs, abs=2.5e-4)


def test_five_look_obf(obf):
    b = normal_boundaries(CovarianceSchedule([0.2, 0.4, 0.6, 0.8, 1.0]), obf)
    assert b.values == pytest.approx((4.877, 3.357, 2.680, 2.290, 2.031), abs=2e-3)


def test_attained_spend_matches_increments(pocock):
    fr = [0.25, 0.5, 0.75, 1.0]
    b = normal_boundaries(CovarianceSchedule(fr), pocock)
    assert b.attained_spend == pytest.approx(spend_increments(pocock, fr), abs=1e-9)
    again = crossing_probabilities(CovarianceSchedule(fr), b.values)
    assert again == pytest.approx(b.attained_spend, abs=1e-8)


def test_random_schedules_against_monte_carlo():
    rng = np.random.default_rng(99)
    for i in range(5):
        k = int(rng.integers(2, 6))
        fr = np.sort(rng.uniform(0.05, 0.95, size=k - 1)).tolist() + [1.0]
        sf = SpendingFunction(["pocock", "obrien-fleming"][i % 2], float(rng.uniform(0.01, 0.1)))
        b = normal_boundaries(CovarianceSchedule(fr), sf)
        mc = mc_first_crossing(fr, b.values, 400_000, seed=i)
        assert np.cumsum(mc) == pytest.approx(np.cumsum(spend_increments(sf, fr)), abs=0.005)


def test_subdensity_mass_is_conserved(pocock):
    fr = [0.3, 0.6, 1.0]
    sched = CovarianceSchedule(fr)
    b = normal_boundaries(sched, pocock)
    for look in (2, 3):
        def dens(z):
            return float(subdensity(sched, b.values, look, np.array([z]))[0])
        c = b.values[look - 1]
        mass = quad(dens, -8.0, c, limit=200)[0] + quad(dens, c, 8.0, limit=200)[0]
        tail = quad(dens, c, 8.0, limit=200)[0]
        assert mass == pytest.approx(1.0 - sum(b.attained_spend[:look - 1]), abs=1e-7)
        assert tail == pytest.approx(b.attained_spend[look - 1], abs=1e-8)


def test_first_look_subdensity_is_standard_normal():
    z = np.linspace(-3, 3, 13)
    dens = subdensity(CovarianceSchedule([0.5, 1.0]), [2.0, 2.0], 1, z)
    assert dens == pytest.approx(std_normal_pdf(z), abs=1e-12)


def test_boundaries_decrease_with_alpha():
    sched = CovarianceSchedule([0.4, 1.0])
    lo = normal_boundaries(sched, SpendingFunction("pocock", 0.01)).values
    hi = normal_boundaries(sched, SpendingFunction("pocock", 0.05)).values
    assert all(a > b for a, b in zip(lo, hi))


def test_two_sided_boundaries_exceed_one_sided_at_same_alpha(pocock):
    sched = CovarianceSchedule([0.5, 1.0])
    one = normal_boundaries(sched, pocock).values
    two = normal_boundaries(sched, SpendingFunction("pocock", 0.05), "two-sided").values
    assert two == pytest.approx(one, abs=2e-3)


def test_two_sided_monte_carlo():
    sf = SpendingFunction("obrien-fleming", 0.05)
    fr = [1 / 3, 2 / 3, 1.0]
    b = normal_boundaries(CovarianceSchedule(fr), sf, "two-sided")
    mc = mc_first_crossing(fr, b.values, 1_000_000, seed=5, two_sided=True)
    assert np.cumsum(mc) == pytest.approx(np.cumsum(spend_increments(sf, fr, "two-sided")),
                                          abs=0.002)


def test_frozen_values_are_kept(pocock):
    sched = CovarianceSchedule([0.5, 1.0])
    b = normal_boundaries(sched, pocock, frozen=[2.5])
    assert b.values[0] == 2.5
    # the frozen look spends less than planned; later looks still spend their own increment
    assert b.attained_spend[0] < spend_increments(pocock, [0.5, 1.0])[0]
    assert b.attained_spend[1] == pytest.approx(spend_increments(pocock, [0.5, 1.0])[1], abs=1e-9)


def test_zero_spend_gives_infinite_boundary():
    sf = SpendingFunction("custom", 0.025, ((0, 0), (0.5, 0), (1, 0.025)))
    b = normal_boundaries(CovarianceSchedule([0.5, 1.0]), sf)
    assert b.values[0] == math.inf
    assert b.values[1] == pytest.approx(1.959963984540054, abs=1e-7)


@pytest.mark.parametrize("fr", [[0.5, 0.5], [0.0, 1.0], [0.6, 0.3], [], [0.5, 1.2]])
def test_schedule_validation(fr):
    with pytest.raises(ValidationError):
        CovarianceSchedule(fr)


def test_correlations():
    corr = CovarianceSchedule([0.25, 1.0]).correlations
    assert corr[0, 1] == pytest.approx(0.5)


def test_t_approx_examples():
    normal = BoundarySet([2.157, math.inf, 1.96], [0.01, 0.0, 0.015], "normal")
    t = t_approx_boundaries(normal, [18.0, 18.0, 1e6])
    assert t.values[0] == pytest.approx(2.340, abs=1e-3)
    assert t.values[1] == math.inf
    assert t.values[2] == pytest.approx(1.96, abs=1e-4)
    assert t.method == "t-approx"
    from scipy import stats
    assert t.values[0] == pytest.approx(stats.t.isf(stats.norm.sf(2.157), 18), rel=1e-9)


def test_t_approx_rejects_bad_df():
    normal = BoundarySet([2.0], [0.02], "normal")
    with pytest.raises(DomainError):
        t_approx_boundaries(normal, [0.0])


def test_boundary_json_round_trip():
    b = BoundarySet([math.inf, 2.1], [0.0, 0.025], "permutation", "two-sided")
    doc = b.to_json()
    assert doc["values"][0] == "inf"
    assert BoundarySet.from_json(doc) == b
