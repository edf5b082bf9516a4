from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate

from oracles import wrapped_matrix_by_paths
from flashratchet.errors import NumericalError, ParameterError
from flashratchet.potential import RatchetParams, drift_mu, potential_M
from flashratchet.rw_approx import FlashingSchedule, LatticeDistribution, ScaledWalkParams, propagate_flashing
from flashratchet.wrapped import (
    PeriodMatrix,
    WrappedDistribution,
    analytic_stationary,
    build_period_matrix,
    lift_stationary,
    needs_parity_step,
    one_step_matrix,
    stationary_flashing_run,
    stationary_vector,
    wrap,
)

SCHED = FlashingSchedule(Fraction(12, 5), Fraction(12, 5))
SHAPES = [(1, 4), (1, 3), (2, 3)]
GAMMAS = [0.5, 1.875, 5.0]


def random_params(rng):
    l, L = SHAPES[rng.integers(3)]
    gamma = rng.uniform(0.1, 6.0)
    # keep the tilt inside the ratchet regime
    lo, hi = -gamma * L / l, gamma * L / (L - l)
    return RatchetParams(l, L, gamma, rng.uniform(0.8 * lo, 0.8 * hi))


def quad_pieces(f, p):
    return sum(integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-13)[0] for a, b in ((0, p.l), (p.l, p.L)))


@pytest.mark.parametrize("l,L", SHAPES)
@pytest.mark.parametrize("gamma", GAMMAS)
def test_untilted_skewness_is_2alpha_minus_1(l, L, gamma):
    st = analytic_stationary(RatchetParams(l, L, gamma))
    assert st.skewness() == pytest.approx(2 * l / L - 1, abs=1e-10)


def test_untilted_density_is_boltzmann():
    p = RatchetParams(1, 4, 1.875)
    st = analytic_stationary(p)
    x = np.linspace(0, 3.999, 500)
    ratio = st(x) / np.exp(2 * potential_M(x, p))
    assert np.ptp(ratio) < 1e-12 * ratio.mean()


def test_normalization_and_moments_against_quadrature():
    rng = np.random.default_rng(20)
    for _ in range(20):
        p = random_params(rng)
        st = analytic_stationary(p)
        assert quad_pieces(st, p) == pytest.approx(1.0, abs=1e-8)
        assert st.total() == pytest.approx(1.0, abs=1e-12)
        assert st.mean() == pytest.approx(quad_pieces(lambda x: x * st(x), p), abs=1e-8)
        assert st.piece_masses()[0] == pytest.approx(integrate.quad(st, 0, p.l, epsabs=1e-13)[0], abs=1e-8)


def test_periodic_and_nonnegative():
    rng = np.random.default_rng(21)
    for _ in range(20):
        p = random_params(rng)
        st = analytic_stationary(p)
        end = st.scale * st._unnormalized(1, st.widths[1])
        assert end == pytest.approx(st(0.0), rel=1e-10)
        assert np.all(st(np.linspace(0, p.L, 2001)) >= 0)


def test_constant_probability_current():
    # J = mu phi - phi'/2 must be the same everywhere on the circle
    p = RatchetParams(1, 4, 1.875, 0.6)
    st = analytic_stationary(p)
    h = 1e-5
    x = np.concatenate([np.linspace(0.05, 0.95, 20), np.linspace(1.05, 3.95, 40)])
    J = drift_mu(x, p) * st(x) - (st(x + h) - st(x - h)) / (4 * h)
    assert np.ptp(J) < 1e-7
    assert J.mean() < 0  # tilt kappa > 0 pushes the mass left


def test_proportional_to_shifted_window_integral():
    rng = np.random.default_rng(22)
    for _ in range(5):
        p = random_params(rng)
        ML = potential_M(float(p.L), p)

        def m_ext(y):
            return potential_M(y, p) if y <= p.L else potential_M(y - p.L, p) + ML

        def window_form(x):
            pts = sorted({x, x + p.L, *[b for b in (p.l, p.L, p.L + p.l) if x < b < x + p.L]})
            tot = sum(integrate.quad(lambda y: np.exp(-2 * m_ext(y)), a, b, epsabs=1e-14, epsrel=1e-13)[0]
                      for a, b in zip(pts[:-1], pts[1:]))
            return np.exp(2 * potential_M(x, p)) * tot

        x = np.linspace(0.01, p.L - 0.01, 25)
        ratio = np.array([analytic_stationary(p)(xi) / window_form(xi) for xi in x])
        assert np.max(np.abs(ratio / ratio[0] - 1)) < 1e-8


def test_no_potential_gives_uniform():
    for kappa in (0.0, 0.7, -2.0):
        st = analytic_stationary(RatchetParams(1, 4, 0.0, kappa))
        assert np.allclose(st(np.linspace(0, 3.99, 50)), 0.25, atol=1e-12)
        assert st.mean() == pytest.approx(2.0, abs=1e-12)


def test_overflow_is_reported():
    with pytest.raises(NumericalError):
        analytic_stationary(RatchetParams(1, 4, 200.0))


def test_period_matrix_matches_enumeration():
    # n = 2, l = 1, L = 4: 8 states; 3 steps mixing both phases
    w = ScaledWalkParams(RatchetParams.from_lambda(1, 4, 0.5, 0.3), 2)
    p, p0, p1 = w.probs()
    sched = FlashingSchedule(Fraction(1, 4), Fraction(1, 2))  # one free step, two ratchet steps
    P = build_period_matrix(w, sched, parity_fix=False)
    assert P.steps_used == 3
    ref = wrapped_matrix_by_paths([0, 1, 1], 2, 1, 4, p, p0, p1)
    assert np.max(np.abs(P.entries - ref)) < 1e-14


def test_parity_step_is_appended_to_ratchet_phase():
    w = ScaledWalkParams(RatchetParams.from_lambda(1, 4, 0.5, 0.3), 2)
    p, p0, p1 = w.probs()
    sched = FlashingSchedule(Fraction(1, 2), Fraction(1, 2))  # 2 + 2 steps, nL = 8 even
    assert needs_parity_step(2, 4, 4)
    P = build_period_matrix(w, sched)
    assert P.steps_used == 5 and P.extra_steps == 1
    ref = wrapped_matrix_by_paths([0, 0, 1, 1, 1], 2, 1, 4, p, p0, p1)
    assert np.max(np.abs(P.entries - ref)) < 1e-14


def test_row_stochastic_at_table_scale():
    w = ScaledWalkParams(RatchetParams.from_lambda(1, 4, 5.0, 0.2748), 100)
    P = build_period_matrix(w, SCHED)
    assert P.entries.shape == (400, 400) and P.steps_used == 48001
    assert np.max(np.abs(P.entries.sum(axis=1) - 1)) < 1e-10
    assert P.entries.min() >= 0


def test_symmetric_walk_has_uniform_stationary_law():
    w = ScaledWalkParams(RatchetParams(1, 4, 0.0, 0.0), 5)
    P = build_period_matrix(w, FlashingSchedule(1, 1))
    assert np.allclose(P.entries.sum(axis=0), 1, atol=1e-12)
    pi = stationary_vector(P)
    assert np.allclose(pi.probs, 1 / 20, atol=1e-12)


def test_two_state_chain():
    P = PeriodMatrix(1, 2, np.array([[0.9, 0.1], [0.2, 0.8]]), 1)
    pi = stationary_vector(P)
    assert np.allclose(pi.probs, [2 / 3, 1 / 3], atol=1e-12)


def test_lift_rules():
    n, l, L = 10, 1, 4
    e = np.zeros(40)
    e[n * l] = 1
    assert lift_stationary(WrappedDistribution(n, L, e), l).as_dict() == {n * l - n * L: 1.0}
    e = np.zeros(40)
    e[0] = 1
    assert lift_stationary(WrappedDistribution(n, L, e), l).as_dict() == {0: 1.0}
    u = lift_stationary(WrappedDistribution(n, L, np.full(40, 1 / 40)), l)
    assert u.sites.min() == -30 and u.sites.max() == 9
    assert u.mean() == pytest.approx((0.25 - 0.5) * 4 - 0.5 / n, abs=1e-12)
    assert wrap(u, L).probs == pytest.approx(np.full(40, 1 / 40))


def test_wrapped_distribution_shape_checked():
    with pytest.raises(ParameterError):
        WrappedDistribution(10, 4, np.ones(39) / 39)


def test_stationarity_round_trip():
    w = ScaledWalkParams(RatchetParams.from_lambda(1, 4, 5.0, 0.5 * 0.2748), 20)
    run = stationary_flashing_run(w, SCHED)
    back = wrap(run.end, 4)
    assert np.abs(back.probs - run.stationary.probs).sum() < 1e-10
    assert run.start.total() == pytest.approx(1.0, abs=1e-12)


def test_drift_only_mean_displacement():
    kappa = 0.3
    for n in (10, 20):
        w = ScaledWalkParams(RatchetParams(1, 4, 0.0, kappa), n)
        run = stationary_flashing_run(w, SCHED)
        # one extra (drifted) step for parity: 1/n^2 more time
        t = 4.8 + run.matrix.extra_steps / n ** 2
        assert run.mean_displacement == pytest.approx(-kappa * t, abs=1e-10)
        assert abs(run.mean_displacement + kappa * 4.8) <= 1 / n


def test_snapshot_at_end_of_free_phase():
    w = ScaledWalkParams(RatchetParams.from_lambda(1, 4, 5.0, 0.1), 10)
    run = stationary_flashing_run(w, SCHED)
    mid = propagate_flashing(run.start, w, SCHED, total_steps=240)
    assert np.array_equal(run.snapshots["free_end"].probs, mid.probs)
    assert isinstance(run.snapshots["start"], LatticeDistribution)
