"""Spectral densities, calibrations, decay exponents, trajectory synthesis."""

import math

import numpy as np
import pytest

from dephasing_leakage.noise import (DephasingCalibration, NoiseKind,
                                     SpectralDensity, dephasing_exponent,
                                     log_cutoff_factor, oneoverf_from_t2,
                                     periodogram, synthesize_trajectory,
                                     white_from_t1)

TPHI1 = 1e5     # 100 us in ns
TPHI2 = 1e3     # 1 us in ns


def test_white_evaluate_constant():
    s = SpectralDensity(NoiseKind.WHITE, 2e-5)
    for w in (0.0, 1.0, -3.7, 1e4):
        assert s.evaluate(w) == 2e-5


def test_oneoverf_evaluate_arithmetic():
    s1 = (1.0 / 2.6) / TPHI2**2
    s = SpectralDensity(NoiseKind.ONE_OVER_F, s1)
    assert s.evaluate(0.1) == pytest.approx(s1 / 0.1, rel=1e-12)
    assert s.evaluate(0.1) == pytest.approx(3.85e-6, rel=1e-2)


def test_oneoverf_outside_cutoffs_is_zero():
    s = SpectralDensity(NoiseKind.ONE_OVER_F, 1e-7, f_min=1.0, f_max=1e9)
    assert s.evaluate(0.5 * s.omega_min) == 0.0
    assert s.evaluate(2.0 * s.omega_max) == 0.0
    assert s.evaluate(0.0) == 0.0


def test_evaluate_symmetric_in_omega():
    rng = np.random.default_rng(11)
    specs = [SpectralDensity(NoiseKind.WHITE, 3e-4),
             SpectralDensity(NoiseKind.ONE_OVER_F, 1e-7)]
    omegas = rng.uniform(-1e3, 1e3, size=100)
    for s in specs:
        assert np.array_equal(s.evaluate(omegas), s.evaluate(-omegas))


def test_invalid_parameters_raise():
    with pytest.raises(ValueError):
        SpectralDensity(NoiseKind.WHITE, -1.0)
    with pytest.raises(ValueError):
        SpectralDensity(NoiseKind.ONE_OVER_F, 1e-7, f_min=10.0, f_max=1.0)
    with pytest.raises(ValueError):
        DephasingCalibration(t_phi_1=-5.0)
    with pytest.raises(ValueError):
        DephasingCalibration(t_phi_1=1.0, qubit_multiplicity=3)


def test_white_from_t1_levels():
    assert white_from_t1(DephasingCalibration(t_phi_1=TPHI1)).amplitude \
        == pytest.approx(2e-5, rel=1e-12)
    assert white_from_t1(DephasingCalibration(t_phi_1=TPHI1, qubit_multiplicity=2)
                         ).amplitude == pytest.approx(4e-5, rel=1e-12)
    # no-dephasing limit
    assert white_from_t1(DephasingCalibration(t_phi_1=1e300)).amplitude \
        == pytest.approx(0.0, abs=1e-290)


def test_oneoverf_from_t2_levels():
    assert oneoverf_from_t2(DephasingCalibration(t_phi_2=TPHI2)).amplitude \
        == pytest.approx((1.0 / 2.6) / TPHI2**2, rel=1e-12)
    assert oneoverf_from_t2(DephasingCalibration(t_phi_2=TPHI2, qubit_multiplicity=2)
                            ).amplitude == pytest.approx((2.0 / 2.6) / TPHI2**2,
                                                         rel=1e-12)
    assert oneoverf_from_t2(DephasingCalibration(t_phi_2=1e200)).amplitude \
        == pytest.approx(0.0, abs=1e-300)


def test_missing_time_raises():
    with pytest.raises(ValueError):
        white_from_t1(DephasingCalibration(t_phi_2=1.0))
    with pytest.raises(ValueError):
        oneoverf_from_t2(DephasingCalibration(t_phi_1=1.0))


def test_dephasing_exponent_white_linear_law():
    s = white_from_t1(DephasingCalibration(t_phi_1=TPHI1))
    assert dephasing_exponent(s, 10.0) == pytest.approx(1e-4, rel=1e-12)
    assert dephasing_exponent(s, 0.0) == 0.0
    # exact linearity
    d1 = dephasing_exponent(s, 13.7)
    d2 = dephasing_exponent(s, 27.4)
    assert d2 == pytest.approx(2.0 * d1, rel=1e-12)


def test_white_roundtrip_unit_exponent():
    s = white_from_t1(DephasingCalibration(t_phi_1=TPHI1))
    assert dephasing_exponent(s, TPHI1) == pytest.approx(1.0, rel=1e-14)


def test_dephasing_exponent_monotone():
    ts = np.linspace(0.0, 40.0, 9)
    for s in (white_from_t1(DephasingCalibration(t_phi_1=TPHI1)),
              oneoverf_from_t2(DephasingCalibration(t_phi_2=TPHI2))):
        ds = [dephasing_exponent(s, t) for t in ts]
        assert all(b >= a for a, b in zip(ds, ds[1:]))


def test_oneoverf_log_factor_values():
    # ln c = 3/2 - gamma - ln 2 with x_min = pi f_min t
    assert log_cutoff_factor(20.0) == pytest.approx(16.81, abs=0.05)
    assert log_cutoff_factor(30.0) == pytest.approx(16.41, abs=0.05)
    assert log_cutoff_factor(20.0) > log_cutoff_factor(30.0)


def test_dephasing_exponent_oneoverf_matches_log_approximation():
    s = oneoverf_from_t2(DephasingCalibration(t_phi_2=TPHI2))
    for t in (20.0, 25.0, 30.0):
        d = dephasing_exponent(s, t)
        approx = s.amplitude * t**2 / (2.0 * np.pi) * log_cutoff_factor(t)
        assert d == pytest.approx(approx, rel=2e-3)


def _brute_force_exponent(s: SpectralDensity, t: float) -> float:
    # Direct trapezoid of (2/pi) int_0^inf S(w) sin^2(w t/2)/w^2 dw on a dense
    # log grid over the support; independent of the production quadrature.
    w = np.geomspace(s.omega_min, s.omega_max, 400001)
    integrand = s.evaluate(w) * np.sin(0.5 * w * t) ** 2 / w**2
    return (2.0 / np.pi) * np.trapz(integrand, w)


def test_dephasing_exponent_oneoverf_vs_brute_force():
    s = oneoverf_from_t2(DephasingCalibration(t_phi_2=TPHI2), f_max=1e9)
    for t in (5.0, 25.0):
        assert dephasing_exponent(s, t) == pytest.approx(
            _brute_force_exponent(s, t), rel=1e-4)


def test_oneoverf_quadratic_law_slowly_varying():
    s = oneoverf_from_t2(DephasingCalibration(t_phi_2=TPHI2))
    ratios = [dephasing_exponent(s, t) / t**2 for t in np.linspace(20.0, 30.0, 6)]
    assert (max(ratios) - min(ratios)) / max(ratios) < 0.03


def test_synthesize_deterministic():
    s = SpectralDensity(NoiseKind.WHITE, 4e-5)
    a = synthesize_trajectory(s, 10.0, 0.01, seed=123)
    b = synthesize_trajectory(s, 10.0, 0.01, seed=123)
    assert np.array_equal(a.samples, b.samples)
    c = synthesize_trajectory(s, 10.0, 0.01, seed=124)
    assert not np.array_equal(a.samples, c.samples)


def test_synthesize_zero_mean_ensemble():
    s = SpectralDensity(NoiseKind.WHITE, 4e-5)
    means = [synthesize_trajectory(s, 10.0, 0.05, seed=k).samples.mean()
             for k in range(200)]
    sigma = math.sqrt(4e-5 / 0.05) / math.sqrt(200 * 200)
    assert abs(np.mean(means)) < 5 * sigma


def test_white_periodogram_matches_level():
    s0 = 4e-5
    s = SpectralDensity(NoiseKind.WHITE, s0)
    acc = None
    n_traj = 400
    for k in range(n_traj):
        traj = synthesize_trajectory(s, 20.0, 0.02, seed=1000 + k)
        w, p = periodogram(traj)
        acc = p if acc is None else acc + p
    mean = acc / n_traj
    band = (w > 0.1 * w[-1]) & (w < 0.9 * w[-1])
    assert np.mean(mean[band]) == pytest.approx(s0, rel=0.05)


def test_oneoverf_periodogram_slope():
    s = SpectralDensity(NoiseKind.ONE_OVER_F, 1e-7, f_min=1.0, f_max=1e9)
    acc = None
    n_traj = 300
    for k in range(n_traj):
        traj = synthesize_trajectory(s, 200.0, 0.1, seed=2000 + k)
        w, p = periodogram(traj)
        acc = p if acc is None else acc + p
    mean = acc / n_traj
    inside = (w > 0) & (w >= 20 * w[1]) & (w <= 0.5 * s.omega_max)
    slope = np.polyfit(np.log(w[inside]), np.log(mean[inside]), 1)[0]
    assert slope == pytest.approx(-1.0, abs=0.1)


def test_synthesize_nyquist_guard():
    s = SpectralDensity(NoiseKind.ONE_OVER_F, 1e-7, f_min=1.0, f_max=1e11)
    with pytest.raises(ValueError, match="too coarse"):
        synthesize_trajectory(s, 10.0, 0.01, seed=1)
