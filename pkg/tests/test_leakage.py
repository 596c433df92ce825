"""Amplitude traces, spectra, peak frequencies, and the three leakage routes."""

import numpy as np
import pytest

from dephasing_leakage.evolution import interaction_frame_operator, propagate
from dephasing_leakage.gates import (RapidCZSpec, not_rotating_schedule,
                                     rapid_cz_analytic_trace, rapid_cz_schedule)
from dephasing_leakage.leakage import (AmplitudeTrace, FlatSpectrumError,
                                       Method, amplitude_traces, leakage_exact,
                                       leakage_monte_carlo, leakage_peaked,
                                       peak_frequency, spectral_amplitude,
                                       time_integral_abs2)
from dephasing_leakage.noise import (DephasingCalibration, NoiseKind,
                                     SpectralDensity, oneoverf_from_t2,
                                     white_from_t1)

from conftest import ETA, G_CZ, TPHI1, TPHI2

CAL2 = DephasingCalibration(t_phi_1=TPHI1, t_phi_2=TPHI2, qubit_multiplicity=2)


@pytest.fixture(scope="module")
def rapid_traces():
    spec = RapidCZSpec(G_CZ)
    tr = propagate(rapid_cz_schedule(spec), steps=4000)
    v1 = interaction_frame_operator(tr, np.diag([0.0, 1.0]).astype(complex))
    return amplitude_traces(v1, tr.projector_q, tr.projector_a)


def _rapid_spectrum_closed_form(omega):
    # 2g/(w^2 - 4g^2) e^{i w T/2} sin(w T/2), with the w = 2g limit T/4
    g = G_CZ
    T = np.pi / g
    omega = np.asarray(omega, dtype=float)
    # L'Hopital at omega = +-2g: the prefactor tends to -sign(omega) T/4
    limit = -np.sign(omega) * T / 4.0
    num = np.where(np.abs(np.abs(omega) - 2 * g) < 1e-12, limit,
                   2 * g / (omega**2 - 4 * g**2 + 1e-300)
                   * np.sin(omega * T / 2))
    return num * np.exp(1j * omega * T / 2)


def test_rapid_trace_is_single_sine(rapid_traces):
    assert len(rapid_traces) == 1
    tr = rapid_traces[0]
    expected = -0.5j * np.sin(2 * G_CZ * tr.times)
    assert np.max(np.abs(tr.values - expected)) < 1e-8


def test_identity_noise_operator_gives_zero_traces():
    spec = RapidCZSpec(G_CZ)
    tr = propagate(rapid_cz_schedule(spec), steps=500)
    v1 = interaction_frame_operator(tr, np.eye(2, dtype=complex))
    traces = amplitude_traces(v1, tr.projector_q, tr.projector_a)
    assert np.max(np.abs(traces[0].values)) < 1e-12


def test_trace_count_matches_subspace_dimensions():
    sch = not_rotating_schedule(ETA, 20.0)
    tr = propagate(sch, steps=1000)
    v1 = interaction_frame_operator(tr, np.diag([0.0, 1.0, 2.0]).astype(complex))
    traces = amplitude_traces(v1, tr.projector_q, tr.projector_a)
    assert len(traces) == 2  # d_Q = 2, d_A = 1
    assert {(t.source_index, t.target_index) for t in traces} == {(0, 0), (1, 0)}


def test_amplitude_bounded_by_operator_norm():
    rng = np.random.default_rng(21)
    sch = not_rotating_schedule(ETA, 15.0)
    tr = propagate(sch, steps=1000)
    diag = rng.standard_normal(3)
    v1 = interaction_frame_operator(tr, np.diag(diag).astype(complex))
    for trace in amplitude_traces(v1, tr.projector_q, tr.projector_a):
        assert np.max(np.abs(trace.values)) <= np.max(np.abs(diag)) + 1e-12


def test_incompatible_projectors_rejected(rapid_traces):
    sch = not_rotating_schedule(ETA, 15.0)
    tr = propagate(sch, steps=1000)
    v1 = interaction_frame_operator(tr, np.diag([0.0, 1.0, 2.0]).astype(complex))
    bad = np.diag([1.0, 1.0, 0.0]).astype(complex)
    with pytest.raises(ValueError, match="complementary"):
        amplitude_traces(v1, bad, bad)


def test_spectral_amplitude_matches_closed_form():
    trace = rapid_cz_analytic_trace(RapidCZSpec(G_CZ))
    rng = np.random.default_rng(7)
    omegas = np.concatenate([rng.uniform(-6 * G_CZ, 6 * G_CZ, 100), [2 * G_CZ, 0.0]])
    got = spectral_amplitude(trace, omegas)
    expected = _rapid_spectrum_closed_form(omegas)
    scale = np.max(np.abs(expected))
    assert np.max(np.abs(got - expected)) < 1e-6 * scale


def test_spectral_amplitude_zero_cases():
    trace = rapid_cz_analytic_trace(RapidCZSpec(G_CZ))
    assert abs(spectral_amplitude(trace, 0.0)) < 1e-12
    zero = AmplitudeTrace(0, 0, trace.times, np.zeros_like(trace.values))
    assert spectral_amplitude(zero, 1.3) == 0.0


def test_parseval_identity():
    # (1/2pi) int |A~|^2 dw = int |A|^2 dt, checked by wide-band quadrature
    from scipy.integrate import quad
    rng = np.random.default_rng(17)
    times = np.linspace(0.0, 8.0, 3001)
    for _ in range(3):
        coeffs = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        values = sum(c * np.sin((m + 1) * np.pi * times / 8.0)
                     for m, c in enumerate(coeffs))
        trace = AmplitudeTrace(0, 0, times, values)
        cap = 60.0
        freq = quad(lambda w: abs(spectral_amplitude(trace, w)) ** 2
                    + abs(spectral_amplitude(trace, -w)) ** 2,
                    0.0, cap, limit=400, epsrel=1e-9)[0] / (2 * np.pi)
        assert freq == pytest.approx(time_integral_abs2(trace), rel=2e-4)


def test_peak_frequency_rapid(rapid_traces):
    peak = peak_frequency(rapid_traces[0])
    assert peak / G_CZ == pytest.approx(1.675, abs=0.005)


def test_peak_frequency_not_traces():
    sch = not_rotating_schedule(ETA, 20.0)
    tr = propagate(sch, steps=8000)
    v1 = interaction_frame_operator(tr, np.diag([0.0, 1.0, 2.0]).astype(complex))
    for trace in amplitude_traces(v1, tr.projector_q, tr.projector_a):
        assert peak_frequency(trace) == pytest.approx(ETA, rel=0.1)


def test_peak_frequency_flat_spectrum():
    times = np.linspace(0.0, 5.0, 501)
    with pytest.raises(FlatSpectrumError):
        peak_frequency(AmplitudeTrace(0, 0, times, np.zeros(501, complex)))


def test_leakage_exact_white_value(rapid_traces):
    res = leakage_exact(rapid_traces, white_from_t1(CAL2), d_q=1)
    assert res.method is Method.EXACT_INTEGRAL
    assert res.probability == pytest.approx(5e-5, rel=1e-6)
    assert not res.validity_warning


def test_leakage_exact_oneoverf_constant(rapid_traces):
    spec = RapidCZSpec(G_CZ)
    res = leakage_exact(rapid_traces, oneoverf_from_t2(CAL2), d_q=1)
    c = res.probability / (spec.gate_time / TPHI2) ** 2
    assert c == pytest.approx(0.021, abs=0.001)
    assert res.probability == pytest.approx(2.1e-6, rel=0.05)
    assert res.peak_frequencies is not None


def test_leakage_peaked_oneoverf_constant(rapid_traces):
    spec = RapidCZSpec(G_CZ)
    res = leakage_peaked(rapid_traces, oneoverf_from_t2(CAL2), d_q=1)
    c = res.probability / (spec.gate_time / TPHI2) ** 2
    assert c == pytest.approx(0.018, abs=0.001)


def test_white_peaked_equals_exact(rapid_traces):
    s = white_from_t1(CAL2)
    pe = leakage_peaked(rapid_traces, s, d_q=1).probability
    ex = leakage_exact(rapid_traces, s, d_q=1).probability
    assert abs(pe - ex) <= 1e-10 * ex


def test_zero_spectrum_gives_zero(rapid_traces):
    for kind in (NoiseKind.WHITE, NoiseKind.ONE_OVER_F):
        s = SpectralDensity(kind, 0.0)
        assert leakage_exact(rapid_traces, s, d_q=1).probability == 0.0
        assert leakage_peaked(rapid_traces, s, d_q=1).probability == 0.0


def test_zero_traces_give_zero_peaked():
    times = np.linspace(0.0, 5.0, 501)
    traces = [AmplitudeTrace(0, 0, times, np.zeros(501, complex))]
    assert leakage_peaked(traces, white_from_t1(CAL2), d_q=1).probability == 0.0


def test_leakage_linear_in_amplitude(rapid_traces):
    s1 = oneoverf_from_t2(CAL2)
    s2 = SpectralDensity(NoiseKind.ONE_OVER_F, 2 * s1.amplitude,
                         f_min=s1.f_min, f_max=s1.f_max)
    p1 = leakage_exact(rapid_traces, s1, d_q=1).probability
    p2 = leakage_exact(rapid_traces, s2, d_q=1).probability
    assert p2 == pytest.approx(2 * p1, rel=1e-12)


def test_validity_warning_on_large_result(rapid_traces):
    s = SpectralDensity(NoiseKind.WHITE, 1.0)  # absurdly strong noise
    res = leakage_exact(rapid_traces, s, d_q=1)
    assert res.validity_warning


def test_monte_carlo_deterministic():
    spec = RapidCZSpec(G_CZ)
    s = white_from_t1(CAL2)
    kwargs = dict(steps=500, n_traj=128, seed=99)
    a = leakage_monte_carlo(rapid_cz_schedule(spec), np.diag([0.0, 1.0]), s, **kwargs)
    b = leakage_monte_carlo(rapid_cz_schedule(spec), np.diag([0.0, 1.0]), s, **kwargs)
    assert a.probability == b.probability
    assert a.stat_error == b.stat_error


def test_monte_carlo_zero_noise_floor():
    spec = RapidCZSpec(G_CZ)
    s = SpectralDensity(NoiseKind.WHITE, 0.0)
    res = leakage_monte_carlo(rapid_cz_schedule(spec), np.diag([0.0, 1.0]), s,
                              steps=500, n_traj=128, seed=1)
    assert res.probability < 1e-12


def test_monte_carlo_matches_white_prediction():
    spec = RapidCZSpec(G_CZ)
    s = white_from_t1(CAL2)
    res = leakage_monte_carlo(rapid_cz_schedule(spec), np.diag([0.0, 1.0]), s,
                              steps=1000, n_traj=1500, seed=2024)
    assert res.stat_error is not None
    assert abs(res.probability - 5e-5) < 4 * res.stat_error


def test_monte_carlo_requires_enough_trajectories():
    spec = RapidCZSpec(G_CZ)
    with pytest.raises(ValueError, match="100"):
        leakage_monte_carlo(rapid_cz_schedule(spec), np.diag([0.0, 1.0]),
                            white_from_t1(CAL2), steps=500, n_traj=10, seed=1)
