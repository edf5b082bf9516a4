from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flashratchet.errors import ParameterError
from flashratchet.rw_approx import LatticeDistribution, propagate_flashing, to_density
from flashratchet.stats import (
    RatchetSetup,
    astumian_mean_approx,
    coarse_tv,
    find_kappa0,
    kappa0_limit,
    mean_displacement,
    normal_cdf,
    one_period_from_origin,
    peak_stats,
    row_stats,
    scaled_n_for,
    skewness,
    sweep,
)

SMALL = RatchetSetup(n=20)


def test_point_mass_statistics():
    d = LatticeDistribution.point_mass(100)
    assert mean_displacement(d) == 0.0
    assert skewness(d, 1, 4) == 0.0
    rep = peak_stats(to_density(d), d, 1, 4)
    assert rep.areas == [0.0, 1.0, 0.0]
    assert rep.heights == [0.0, 50.0, 0.0]
    assert rep.locations == [-4.0, 0.0, 4.0]
    assert peak_stats(to_density(d), d, 1, 4, height="basin_max").heights == [0.0, 50.0, 0.0]


def test_skewness_open_intervals():
    n = 10
    d = LatticeDistribution(n, 0, np.array([0.1, 0.2, 0, 0, 0, 0, 0, 0, 0, 0, 0.3, 0.4]), "mixed")
    # site 0 and site nl = 10 sit on boundaries; site 1 is steep, site 11 shallow
    assert skewness(d, 1, 4) == pytest.approx(0.2 - 0.4)
    assert mean_displacement(d, 0.5) == pytest.approx(d.mean() - 0.5)


@settings(max_examples=30, deadline=None)
@given(k=st.integers(-3, 3), theta=st.sampled_from([0.0, 1.0, 3.5]))
def test_skewness_and_areas_translate_with_period(k, theta):
    d = one_period_from_origin(SMALL, theta * 0.2748 / 2)
    moved = d.shifted(k * 80)
    assert skewness(moved, 1, 4) == pytest.approx(skewness(d, 1, 4), abs=1e-15)
    a = peak_stats(to_density(d), d, 1, 4, absorb_tails=False).areas
    b = peak_stats(to_density(moved), moved, 1, 4, peaks=(k - 1, k, k + 1), absorb_tails=False).areas
    assert np.allclose(a, b, atol=1e-15)


def test_peak_decomposition_is_complete():
    d = one_period_from_origin(RatchetSetup(), 4.5 * 0.2748 / 2)
    curve = to_density(d)
    strict = peak_stats(curve, d, 1, 4, absorb_tails=False)
    x = d.x
    outside = d.probs[(x < -7) | (x >= 5)].sum()
    assert sum(strict.areas) + outside == pytest.approx(1.0, abs=1e-9)
    assert sum(peak_stats(curve, d, 1, 4).areas) == pytest.approx(1.0, abs=1e-9)
    assert sum(strict.areas) <= 1 + 1e-9 and min(strict.heights) >= 0
    with pytest.raises(ParameterError):
        peak_stats(curve, d, 1, 4, height="mode")


def test_basin_max_dominates_value_at_minimum():
    d = one_period_from_origin(RatchetSetup(), 0.0)
    c = to_density(d)
    lo = peak_stats(c, d, 1, 4).heights
    hi = peak_stats(c, d, 1, 4, height="basin_max").heights
    assert all(h >= g for g, h in zip(lo, hi))


def test_kappa0_limit():
    assert kappa0_limit(Fraction(1, 4), 4, Fraction(12, 5)) == pytest.approx(5 / 12, abs=1e-15)
    assert kappa0_limit(Fraction(1, 2), 4, 2.4) == 0.0
    assert kappa0_limit(Fraction(1, 3), 3, 1) == pytest.approx(0.5, abs=1e-15)


def test_normal_cdf_table():
    table = {0.0: 0.5, 0.5: 0.6914624612740131, 1.0: 0.8413447460685429, -1.0: 0.15865525393145707,
             1.96: 0.9750021048517795, 2.0: 0.9772498680518208, 3.0: 0.9986501019683699,
             -3.0: 0.0013498980316301035, -5.0: 2.866515718791939e-07, -8.0: 6.22096057427178e-16}
    for x, v in table.items():
        assert normal_cdf(x) == pytest.approx(v, abs=1e-10, rel=1e-12)


def test_astumian_approximation():
    p0 = normal_cdf(1 / np.sqrt(2.4)) - normal_cdf(-3 / np.sqrt(2.4))
    assert p0 == pytest.approx(0.7142, abs=1e-4)
    assert astumian_mean_approx(0.25, 4, 0.0, 1e-8) == pytest.approx(0.0, abs=1e-12)
    # no tilt and a symmetric potential: symmetric cells, zero mean
    assert astumian_mean_approx(0.5, 4, 0.0, 2.4) == pytest.approx(0.0, abs=1e-12)
    # more tilt, more drift to the left
    assert astumian_mean_approx(0.25, 4, 0.3, 2.4) < astumian_mean_approx(0.25, 4, 0.0, 2.4)


def test_astumian_approximation_is_inaccurate():
    rw = one_period_from_origin(RatchetSetup(), 0.0).mean()
    assert abs(astumian_mean_approx(0.25, 4, 0.0, 2.4) - rw) > 0.01


def test_find_kappa0_small_lambda_and_monotone():
    assert abs(find_kappa0(1e-6, 20)) < 1e-4
    k1, k5 = find_kappa0(1.0, 50), find_kappa0(5.0, 50)
    assert 0 < k1 < k5 < 5 / 12


def test_find_kappa0_self_consistent():
    s = RatchetSetup(n=50)
    k = find_kappa0(5.0, 50, s, tol=1e-12, xtol=1e-12)
    assert abs(one_period_from_origin(s, k).mean()) < 1e-10


def test_scaled_n():
    assert scaled_n_for(5) == 100
    assert scaled_n_for(100) == 200
    assert scaled_n_for(101) == 205


def test_sweep_shapes_and_threads():
    g1 = sweep([1.0, 5.0], [0.0, 2.0, 4.0], setup=SMALL)
    g2 = sweep([1.0, 5.0], [0.0, 2.0, 4.0], setup=SMALL, workers=3)
    assert g1.mean_displacement.shape == (2, 3) == g1.skewness.shape
    assert np.array_equal(g1.mean_displacement, g2.mean_displacement)
    d = one_period_from_origin(SMALL.with_(lam=5.0), 2.0 * 0.2748 / 2)
    assert g1.mean_displacement[1, 1] == d.mean()


def test_row_stats_columns():
    d = one_period_from_origin(SMALL, 0.0)
    r = row_stats(0.0, d, 0.0, 1, 4)
    assert list(r) == ["theta", "area_m1", "area_0", "area_p1", "height_m1", "height_0", "height_p1",
                       "mean", "skewness"]


def test_coarse_tv():
    s = RatchetSetup(n=25)
    d = one_period_from_origin(s, 0.1)
    assert coarse_tv(d, d) == pytest.approx(0.0, abs=1e-15)
    ref = one_period_from_origin(s.with_(n=50), 0.1)
    assert 0 < coarse_tv(d, ref) < 0.2
    with pytest.raises(ParameterError):
        coarse_tv(d, one_period_from_origin(s.with_(n=30), 0.1))


def test_nearly_linear_in_kappa_stated_precisely(rows_from_origin):
    th = np.array(sorted(rows_from_origin))
    mean = np.array([rows_from_origin[t]["mean"] for t in th])
    resid = mean - np.polyval(np.polyfit(th, mean, 1), th)
    # clearly near-linear: residuals are a few percent of the 1.5-unit range
    assert np.max(np.abs(resid)) < 0.03


@pytest.mark.xfail(strict=True, reason="max residual of the least-squares line is about 0.02, above 0.01")
def test_nearly_linear_in_kappa_to_one_hundredth(rows_from_origin):
    th = np.array(sorted(rows_from_origin))
    mean = np.array([rows_from_origin[t]["mean"] for t in th])
    resid = mean - np.polyval(np.polyfit(th, mean, 1), th)
    assert np.max(np.abs(resid)) < 0.01
