import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flashratchet.errors import ParameterError
from flashratchet.potential import (
    LangevinParams,
    RatchetParams,
    drift_mu,
    from_langevin,
    potential_M,
    sawtooth_slope,
    sawtooth_V,
    tilted_potential,
)

P = RatchetParams(1, 4, 1.875, 0.0)
PK = RatchetParams(1, 4, 1.875, 0.2748)


def test_sawtooth_values():
    assert sawtooth_V(0.0, P) == 0.0
    assert sawtooth_V(1.0, P) == 4.0
    assert sawtooth_V(-3.0, P) == 4.0
    assert sawtooth_V(2.5, P) == pytest.approx(2.0)


def test_drift_values():
    assert drift_mu(0.5, P) == pytest.approx(-7.5)
    assert drift_mu(2.0, P) == pytest.approx(2.5)
    # the kink belongs to the shallow branch
    assert drift_mu(1.0, P) == pytest.approx(2.5)
    assert drift_mu(-3.0, P) == pytest.approx(2.5)
    assert drift_mu(4.0, P) == pytest.approx(-7.5)


def test_M_values():
    assert potential_M(0.0, PK) == 0.0
    assert potential_M(1.0, PK) == pytest.approx(-7.7748, abs=1e-12)
    assert potential_M(4.0, PK) == pytest.approx(-1.0992, abs=1e-12)


def test_tilted_potential_values():
    assert tilted_potential(0.0, PK) == 0.0
    assert tilted_potential(1.0, PK) == pytest.approx(7.7748)
    assert tilted_potential(4.0, P) == pytest.approx(0.0, abs=1e-15)


def test_from_langevin():
    assert from_langevin(LangevinParams(1.0, 2.0, 0.0, 1.0)) == (1.0, 0.0)
    assert from_langevin(LangevinParams(1.0, 0.0, 2.0, 1.0)) == (0.0, -1.0)
    g, k = from_langevin(LangevinParams(3.7, 0.9, 0.0, 0.4))
    assert k == 0.0


def test_lambda_constructor_and_predicates():
    p = RatchetParams.from_lambda(1, 4, 5.0, 0.1)
    assert p.gamma == pytest.approx(1.875)
    assert p.lam == 5.0
    assert p.is_asymmetric and p.is_ratchet
    assert not RatchetParams(1, 2, 1.0).is_asymmetric
    assert not RatchetParams(1, 4, 1.0, 10.0).is_ratchet


@pytest.mark.parametrize("args", [(0, 4, 1.0), (4, 4, 1.0), (2, 4, 1.0), (1, 4, -1.0), (1.5, 4, 1.0)])
def test_invalid_params(args):
    with pytest.raises(ParameterError):
        RatchetParams(*args)


def test_periodicity_random_sample():
    rng = np.random.default_rng(1)
    # dyadic points keep x + kL exact, so equality must be exact
    x = np.round(rng.uniform(-50, 50, 1000) * 1024) / 1024
    k = rng.integers(-20, 20, 1000)
    for p in (P, RatchetParams(1, 3, 0.7, 0.3)):
        assert np.array_equal(sawtooth_V(x + k * p.L, p), sawtooth_V(x, p))
        assert np.array_equal(drift_mu(x + k * p.L, p), drift_mu(x, p))


@settings(max_examples=200, deadline=None)
@given(x=st.floats(-40, 40), gamma=st.floats(0.1, 5), kappa=st.floats(-2, 2), lL=st.sampled_from([(1, 4), (1, 3), (2, 3), (3, 5)]))
def test_drift_is_minus_gradient(x, gamma, kappa, lL):
    p = RatchetParams(lL[0], lL[1], gamma, kappa)
    y = x % p.L
    if min(abs(y - p.l), y, p.L - y) < 1e-5:
        return
    h = 1e-7
    fd = (sawtooth_V(x + h, p) - sawtooth_V(x - h, p)) / (2 * h)
    assert fd == pytest.approx(sawtooth_slope(x, p), rel=1e-6)
    assert drift_mu(x, p) == pytest.approx(-(gamma * fd + kappa), rel=1e-6, abs=1e-6)


def test_M_continuous_and_derivative():
    x = np.linspace(0, 4, 4001)
    m = potential_M(x, PK)
    assert np.max(np.abs(np.diff(m))) < 0.01
    mid = x[1:-1]
    ok = np.abs(mid - 1.0) > 1e-3
    fd = (m[2:] - m[:-2]) / (x[2:] - x[:-2])
    assert np.allclose(fd[ok], drift_mu(mid[ok], PK), rtol=1e-6)
