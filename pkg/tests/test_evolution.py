"""Propagator integration, interaction-frame conjugation, state traces."""

import numpy as np
import pytest

from dephasing_leakage.evolution import (HamiltonianSchedule, IntegrationError,
                                         evolve_state, interaction_frame_operator,
                                         propagate)
from dephasing_leakage.gates import (adiabatic_schedule, rapid_cz_schedule,
                                     RapidCZSpec)

from conftest import G_CZ


def _static(dim, matrix, duration):
    m = np.asarray(matrix, np.complex128)
    return HamiltonianSchedule(dim, lambda t: m, duration,
                               h_of_array=lambda ts: np.broadcast_to(
                                   m, (len(ts), dim, dim)).copy())


def _random_smooth_schedule(rng, dim, duration=2.0, scale=1.0):
    base = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    drive = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    h0 = scale * 0.5 * (base + base.conj().T)
    h1 = scale * 0.5 * (drive + drive.conj().T)

    def h_arr(ts):
        env = np.sin(np.pi * np.asarray(ts) / duration) ** 2
        return h0[None] + env[:, None, None] * h1[None]

    return HamiltonianSchedule(dim, lambda t: h_arr(np.array([t]))[0], duration,
                               h_of_array=h_arr)


def test_zero_hamiltonian_gives_identity():
    sch = _static(3, np.zeros((3, 3)), 7.0)
    tr = propagate(sch, steps=200)
    assert np.max(np.abs(tr.unitaries - np.eye(3))) < 1e-14


def test_rapid_cz_matches_closed_form_everywhere():
    spec = RapidCZSpec(G_CZ)
    tr = propagate(rapid_cz_schedule(spec), steps=2000)
    gt = G_CZ * tr.times
    exact = np.zeros_like(tr.unitaries)
    exact[:, 0, 0] = np.cos(gt)
    exact[:, 1, 1] = np.cos(gt)
    exact[:, 0, 1] = -1j * np.sin(gt)
    exact[:, 1, 0] = -1j * np.sin(gt)
    assert np.max(np.abs(tr.unitaries - exact)) < 1e-8
    # terminal unitary is -identity on the two-state block
    assert np.max(np.abs(tr.unitaries[-1] + np.eye(2))) < 1e-8


def test_rapid_cz_half_rotation_swaps_into_auxiliary():
    spec = RapidCZSpec(G_CZ)
    half = HamiltonianSchedule(2, rapid_cz_schedule(spec).h_of_t,
                               0.5 * spec.gate_time,
                               h_of_array=rapid_cz_schedule(spec).h_of_array)
    tr = propagate(half, steps=1000)
    psi = tr.unitaries[-1] @ np.array([1.0, 0.0])
    assert np.max(np.abs(psi - np.array([0.0, -1.0j]))) < 1e-8


def test_unitarity_on_random_schedules():
    rng = np.random.default_rng(5)
    for dim in (2, 3, 4):
        sch = _random_smooth_schedule(rng, dim)
        tr = propagate(sch, steps=400)
        assert tr.unitarity_defect() <= 1e-10


def test_convergence_is_fourth_order():
    rng = np.random.default_rng(9)
    sch = _random_smooth_schedule(rng, 3, duration=3.0, scale=2.0)
    ref = propagate(sch, steps=32000, keep_every=32000).unitaries[-1]
    errs = []
    for steps in (500, 1000):
        u = propagate(sch, steps=steps, keep_every=steps).unitaries[-1]
        errs.append(np.max(np.abs(u - ref)))
    assert errs[0] / errs[1] >= 8.0


def test_non_hermitian_schedule_rejected():
    bad = np.array([[0.0, 1.0], [0.5, 0.0]], np.complex128)
    with pytest.raises(ValueError, match="Hermitian"):
        propagate(_static(2, bad, 1.0), steps=100)


def test_step_floor_enforced():
    sch = _static(2, np.zeros((2, 2)), 1.0)
    with pytest.raises(ValueError):
        propagate(sch, steps=50)


def test_interaction_frame_identity_commutes():
    spec = RapidCZSpec(G_CZ)
    tr = propagate(rapid_cz_schedule(spec), steps=500)
    v1 = interaction_frame_operator(tr, np.eye(2, dtype=complex))
    assert np.max(np.abs(v1.matrices - np.eye(2))) < 1e-12


def test_interaction_frame_rapid_cz_element():
    spec = RapidCZSpec(G_CZ)
    tr = propagate(rapid_cz_schedule(spec), steps=2000)
    v1 = interaction_frame_operator(tr, np.diag([0.0, 1.0]).astype(complex))
    expected = -0.5j * np.sin(2 * G_CZ * tr.times)
    assert np.max(np.abs(v1.matrices[:, 1, 0] - expected)) < 1e-8


def test_interaction_frame_preserves_spectrum_and_trace():
    rng = np.random.default_rng(3)
    sch = _random_smooth_schedule(rng, 4)
    tr = propagate(sch, steps=300)
    v0 = np.diag(rng.standard_normal(4)).astype(complex)
    v1 = interaction_frame_operator(tr, v0)
    ref = np.sort(np.linalg.eigvalsh(v0))
    for k in range(0, len(tr.times), 37):
        m = v1.matrices[k]
        assert np.max(np.abs(m - m.conj().T)) < 1e-10
        assert np.max(np.abs(np.sort(np.linalg.eigvalsh(m)) - ref)) < 1e-8
        assert np.trace(m) == pytest.approx(np.trace(v0).real, abs=1e-10)


def test_interaction_frame_dimension_mismatch():
    spec = RapidCZSpec(G_CZ)
    tr = propagate(rapid_cz_schedule(spec), steps=200)
    with pytest.raises(ValueError, match="shape"):
        interaction_frame_operator(tr, np.eye(3, dtype=complex))


def test_evolve_state_static():
    sch = _static(2, np.zeros((2, 2)), 4.0)
    st = evolve_state(sch, np.array([1.0, 0.0]), steps=200)
    assert np.max(np.abs(st.states - np.array([1.0, 0.0]))) < 1e-14


def test_evolve_state_requires_normalization():
    sch = _static(2, np.zeros((2, 2)), 4.0)
    with pytest.raises(ValueError, match="normalized"):
        evolve_state(sch, np.array([1.0, 1.0]), steps=200)


def test_adiabatic_gate_follows_lower_eigenstate(adiabatic_spec_t20):
    spec = adiabatic_spec_t20
    sch = adiabatic_schedule(spec)
    psi_m0, _ = spec.initial_eigenstates()
    st = evolve_state(sch, psi_m0, steps=8000)
    p_q = np.abs(st.states[:, 0]) ** 2
    theta = spec.theta(st.times)
    psi_m_t = np.stack([np.cos(theta / 2), -np.sin(theta / 2)], axis=1)
    p_minus = np.abs(np.einsum("ki,ki->k", psi_m_t.conj(), st.states)) ** 2
    # nearly adiabatic: stays near the instantaneous eigenstate throughout
    # and returns to it exactly at the end...
    assert p_minus.min() > 0.95
    assert p_minus[-1] == pytest.approx(1.0, abs=1e-9)
    # ...while the bare-state population dips visibly mid-gate and returns
    assert p_q[len(p_q) // 2] < 0.7
    assert p_q[-1] > 0.99
