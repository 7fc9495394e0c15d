import math

import numpy as np
import pytest

import microlaser as ml


def fig1(D, kappa=0.001):
    return ml.from_dimensionless(N=100, kappa_over_g=kappa, gamma_over_g=0.1, g_tau=D / 10)


def test_params_roundtrip():
    p = fig1(1.6)
    assert p.N == pytest.approx(100)
    assert p.D == pytest.approx(1.6)
    assert ml.validate(p) == []
    assert "Params(" in repr(p)


def test_regime_guard():
    with pytest.raises(ml.SingleAtomRegimeViolation):
        ml.from_dimensionless(100, 0.01, 0.1, 3.2)
    with pytest.raises(ValueError):
        ml.from_dimensionless(-1, 0.01, 0.1, 0.5)


def test_distribution_normalized():
    p = ml.photon_distribution(fig1(1.7))
    assert isinstance(p, np.ndarray)
    assert abs(p.sum() - 1) < 1e-10
    assert p[0] > p[1]
    assert 75 <= np.argmax(p[10:]) + 10 <= 125


def test_vacuum_at_zero_flight_time():
    s = ml.solve(fig1(0.0))
    assert s["mean_n"] == 0.0
    assert s["v"] is None
    assert s["classification"] == "undefined"
    assert s["p"][0] == 1.0


def test_trapping():
    assert ml.solve(fig1(10 * math.pi))["mean_n"] < 0.5


def test_moments_and_tv():
    m = ml.moments(np.array([0.5, 0, 0, 0, 0.5]))
    assert m["mean_n"] == pytest.approx(2)
    assert m["v"] == pytest.approx(math.sqrt(2))
    assert ml.total_variation([1.0], [0.0, 1.0]) == pytest.approx(1.0)


def test_lossless_differs():
    p = fig1(1.6)
    assert ml.total_variation(ml.photon_distribution(p), ml.lossless_baseline(p)) > 0.05


def test_coefficients():
    p = ml.from_dimensionless(5, 0.01, 0.1, 0.7)
    f1, f2, f3 = ml.fraction_terms(3, p)
    assert f3 <= 0 and f1 > 0
    assert ml.coeff_X(1, p) > 0
    with pytest.raises(ValueError):
        ml.coeff_X(0, p)


def test_oracle_small_run():
    p = ml.from_dimensionless(5, 0.01, 0.1, 0.0)
    est = ml.simulate_steady_state(p, n_atoms=60, burn_in=10, n_trajectories=2, n_fock=10, seed=3)
    assert est["p"][0] > 1 - 1e-6
    r = ml.validate_point(p, n_atoms=60, burn_in=10, n_trajectories=2, n_fock=10)
    assert r["pass"]
    with pytest.raises(ValueError):
        ml.simulate_steady_state(p, gap_law="sideways")


def test_sweep_csv():
    cfg = "[params]\nN = 100\nkappa_over_g = 0.001\ngamma_over_g = 0.1\n[sweep]\naxis = D\nvalues = 1, 60\n"
    lines = ml.sweep_csv(cfg, workers=1).splitlines()
    assert lines[0].startswith("axis_value,D,mean_n")
    assert len(lines) == 3
    assert ",true," in lines[2]
    with pytest.raises(ml.ConfigError):
        ml.sweep_csv("[sweep]\naxis = nowhere\n")


def test_exception_hierarchy():
    assert issubclass(ml.SingleAtomRegimeViolation, ml.InvalidParameter)
    assert issubclass(ml.TruncationLeak, ml.NumericalError)
    p = ml.from_dimensionless(20, 0.001, 0.1, 0.3)
    with pytest.raises(ml.TruncationLeak):
        ml.simulate_steady_state(p, n_atoms=200, burn_in=50, n_trajectories=2, n_fock=4)
