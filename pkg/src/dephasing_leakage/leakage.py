"""Leakage probabilities from interaction-frame transition amplitudes.

The first-order noise-averaged leakage out of the qubit subspace is

    P = (1/d_Q) sum_{j,k} (1/2pi) integral S(omega) |A~_{j->k}(omega)|^2

with A_{j->k}(t) the qubit-to-auxiliary matrix element of the
interaction-frame noise operator and A~ its finite-time Fourier transform.
This module computes the amplitude traces, their spectra and peak
frequencies, the exact frequency integral, the peaked (spectrum-at-peak)
approximation, and an independent stochastic-trajectory Monte-Carlo average
of the full (non-perturbative) dynamics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize_scalar

from ._kernels import rk4_unitary_noise_batch
from .evolution import HamiltonianSchedule, OperatorTrace, default_steps
from .noise import NoiseKind, SpectralDensity, synthesize_trajectory

PERTURBATIVE_VALIDITY_LIMIT = 0.1


class FlatSpectrumError(RuntimeError):
    """The amplitude spectrum has no distinguishable peak."""


class Method(Enum):
    EXACT_INTEGRAL = "exact-integral"
    PEAKED_APPROX = "peaked"
    MASTER_EQUATION = "master-eq"
    MONTE_CARLO = "monte-carlo"
    CLOSED_FORM = "closed-form"


@dataclass(frozen=True)
class AmplitudeTrace:
    """Complex transition amplitude A_{j->k}(t_k) on a uniform grid."""

    source_index: int
    target_index: int
    times: np.ndarray
    values: np.ndarray

    @property
    def duration(self) -> float:
        return float(self.times[-1])


@dataclass(frozen=True)
class LeakageResult:
    """A leakage probability with its provenance.

    peak_frequencies lists |omega_{j->k}| (rad/ns) when the computation
    located spectral peaks; stat_error is the standard error for
    Monte-Carlo results; validity_warning marks perturbative results large
    enough (>= 0.1) that first-order theory is suspect.
    """

    probability: float
    method: Method
    peak_frequencies: list[float] | None = None
    grid_meta: dict = field(default_factory=dict)
    stat_error: float | None = None
    validity_warning: bool = False
    extra: dict = field(default_factory=dict)


def _flag(p: float) -> bool:
    return p >= PERTURBATIVE_VALIDITY_LIMIT


def _basis_from_projector(p: np.ndarray) -> np.ndarray:
    """Columns spanning the range of an orthogonal projector.

    Diagonal 0/1 projectors yield canonical basis vectors in index order;
    general Hermitian idempotent projectors fall back to an
    eigendecomposition (basis fixed up to phases, which no |A| or |A~|^2
    downstream quantity depends on).
    """
    d = p.shape[0]
    diag = np.diagonal(p)
    if np.allclose(p, np.diag(diag), atol=1e-12) and np.allclose(
            np.sort(np.unique(np.round(diag.real, 6))), [0.0, 1.0]):
        idx = np.where(diag.real > 0.5)[0]
        basis = np.zeros((d, len(idx)), np.complex128)
        basis[idx, np.arange(len(idx))] = 1.0
        return basis
    vals, vecs = np.linalg.eigh(p)
    keep = vals > 0.5
    return vecs[:, keep].astype(np.complex128)


def _check_projectors(p_q, p_a):
    p_q = np.asarray(p_q, np.complex128)
    p_a = np.asarray(p_a, np.complex128)
    d = p_q.shape[0]
    if p_a.shape != p_q.shape:
        raise ValueError("projector shapes differ")
    if np.max(np.abs(p_q + p_a - np.eye(d))) > 1e-10:
        raise ValueError("projectors must be complementary (P_Q + P_A = I)")
    for p in (p_q, p_a):
        if np.max(np.abs(p @ p - p)) > 1e-10:
            raise ValueError("projectors must be idempotent")
    return p_q, p_a


def amplitude_traces(v1: OperatorTrace, projector_q, projector_a) -> list[AmplitudeTrace]:
    """All qubit-to-auxiliary transition amplitudes of an operator trace.

    Returns d_Q * d_A traces, one per (source j, target k) pair, with
    A_{j->k}(t) = <a_k| V1(t) |q_j>.
    """
    p_q, p_a = _check_projectors(projector_q, projector_a)
    if p_q.shape[0] != v1.dim:
        raise ValueError("projector dimension does not match operator trace")
    basis_q = _basis_from_projector(p_q)
    basis_a = _basis_from_projector(p_a)
    # values[t, k, j] = a_k^H V1(t) q_j
    vals = np.einsum("dk,tde,ej->tkj", basis_a.conj(), v1.matrices, basis_q,
                     optimize=True)
    traces = []
    for j in range(basis_q.shape[1]):
        for k in range(basis_a.shape[1]):
            traces.append(AmplitudeTrace(source_index=j, target_index=k,
                                         times=v1.times, values=vals[:, k, j]))
    return traces


def _quadrature_weights(times: np.ndarray) -> np.ndarray:
    """Composite-Simpson weights on a uniform grid (trapezoid on a leftover
    final interval when the interval count is odd)."""
    n = len(times)
    h = times[1] - times[0]
    w = np.zeros(n)
    m = n - 1
    last = m if m % 2 == 0 else m - 1
    if last > 0:
        w[0:last + 1:2] += 2.0 * h / 3.0
        w[1:last:2] += 4.0 * h / 3.0
        w[0] -= h / 3.0
        w[last] -= h / 3.0
    if last < m:
        w[-2] += 0.5 * h
        w[-1] += 0.5 * h
    return w


def time_integral_abs2(trace: AmplitudeTrace) -> float:
    """integral over [0, T] of |A(t)|^2 dt."""
    w = _quadrature_weights(trace.times)
    return float(np.real(np.dot(w, np.abs(trace.values) ** 2)))


def spectral_amplitude(trace: AmplitudeTrace, omega) -> complex | np.ndarray:
    """Finite-time Fourier transform A~(omega) = int_0^T e^{i omega t} A(t) dt.

    Composite-Simpson quadrature on the trace grid; accepts scalar or
    array omega.
    """
    w = _quadrature_weights(trace.times)
    wa = w * trace.values
    omega_arr = np.atleast_1d(np.asarray(omega, dtype=float))
    out = np.empty(len(omega_arr), np.complex128)
    block = max(1, int(4e6 // max(len(trace.times), 1)))
    for i in range(0, len(omega_arr), block):
        ph = np.exp(1j * np.outer(omega_arr[i:i + block], trace.times))
        out[i:i + block] = ph @ wa
    return out if np.ndim(omega) else complex(out[0])


def _symmetrized_power(trace: AmplitudeTrace, omega) -> np.ndarray:
    """|A~(omega)|^2 + |A~(-omega)|^2 for omega >= 0.

    This is the quantity paired with the (symmetric) spectral density in
    the leakage integral, and what "the" peak frequency refers to: traces
    with a phase that winds in either sense peak at the same |omega|.
    """
    omega_arr = np.atleast_1d(np.asarray(omega, dtype=float))
    both = spectral_amplitude(trace, np.concatenate([omega_arr, -omega_arr]))
    n = len(omega_arr)
    return np.abs(both[:n]) ** 2 + np.abs(both[n:]) ** 2


def _spectral_rms_frequency(trace: AmplitudeTrace) -> float:
    a = trace.values
    if not np.any(a):
        return 0.0
    da = np.gradient(a, trace.times)
    w = _quadrature_weights(trace.times)
    num = np.real(np.dot(w, np.abs(da) ** 2))
    den = np.real(np.dot(w, np.abs(a) ** 2))
    return float(np.sqrt(num / den)) if den > 0 else 0.0


def _decimated(trace: AmplitudeTrace, max_points: int = 2048) -> AmplitudeTrace:
    stride = max(1, (len(trace.times) - 1) // max_points)
    if stride == 1 or (len(trace.times) - 1) % stride != 0:
        usable = ((len(trace.times) - 1) // stride) * stride + 1
        return AmplitudeTrace(trace.source_index, trace.target_index,
                              trace.times[:usable:stride], trace.values[:usable:stride])
    return AmplitudeTrace(trace.source_index, trace.target_index,
                          trace.times[::stride], trace.values[::stride])


def peak_frequency(trace: AmplitudeTrace, omega_max: float | None = None,
                   rel_tol: float = 1e-4, scan_points: int = 1201) -> float:
    """Location |omega| of the global maximum of the amplitude spectrum.

    Coarse scan over [0, omega_max] of the symmetrized spectral power,
    followed by golden-section refinement of the bracketed maximum.
    omega_max defaults to a multiple of the trace's spectral content
    (max of 20 sweep harmonics 2pi/T and 3x the RMS frequency).

    Raises
    ------
    FlatSpectrumError
        If the spectrum carries no distinguishable peak (e.g. zero trace).
    """
    if not np.any(trace.values):
        raise FlatSpectrumError("zero amplitude trace has a flat spectrum")
    if omega_max is None:
        t = trace.duration
        omega_max = max(20.0 * 2.0 * np.pi / t, 3.0 * _spectral_rms_frequency(trace))
    coarse_trace = _decimated(trace)
    grid = np.linspace(0.0, omega_max, scan_points)
    power = _symmetrized_power(coarse_trace, grid)
    if power.max() <= 0 or (power.max() - power.min()) < 1e-12 * power.max():
        raise FlatSpectrumError("amplitude spectrum is flat over the search band")
    i = int(np.argmax(power))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(lambda w: -_symmetrized_power(trace, w)[0],
                          bracket=None, bounds=(lo, hi), method="bounded",
                          options={"xatol": rel_tol * max(grid[i], omega_max / scan_points)})
    return float(res.x)


def _frequency_integral_oneoverf(trace: AmplitudeTrace, s: SpectralDensity,
                                 omega_peak: float, rtol: float) -> tuple[float, float]:
    """integral over both signs of S(omega) |A~(omega)|^2 domega for 1/f noise."""
    t = trace.duration
    omega_cap = max(10.0 * omega_peak, 20.0 * 2.0 * np.pi / t)
    lo = s.omega_min
    hi = min(s.omega_max, omega_cap)
    if hi <= lo:
        return 0.0, omega_cap

    def integrand(w):
        return s.evaluate(w) * _symmetrized_power(trace, w)[0]

    # log-spaced breakpoints tame the 1/omega ramp toward the lower cutoff;
    # linear breakpoints resolve the sinc lobes around the peak.
    period = 2.0 * np.pi / t
    bp = set()
    w = lo
    while w < min(hi, period):
        bp.add(w)
        w *= 10.0
    bp.update(np.arange(period, hi, period))
    bp.add(lo)
    bp.add(hi)
    points = np.array(sorted(p for p in bp if lo <= p <= hi))
    total = 0.0
    for a, b in zip(points[:-1], points[1:]):
        val, _ = quad(integrand, a, b, epsrel=rtol, epsabs=0.0, limit=200)
        total += val
    return total, omega_cap


def leakage_exact(traces: list[AmplitudeTrace], s: SpectralDensity, d_q: int,
                  rtol: float = 1e-6) -> LeakageResult:
    """Leakage from the exact frequency integral of S(omega)|A~(omega)|^2.

    For white noise the spectral level factors out of the integral and
    Parseval converts it to the time-domain integral exactly, avoiding any
    frequency-band truncation.  For 1/f noise the integral runs over the
    spectrum's support, capped where the |A~|^2 ~ omega^-4 tails are
    negligible, by adaptive quadrature.
    """
    meta = {"steps": len(traces[0].times) - 1 if traces else 0, "rtol": rtol}
    if s.amplitude == 0.0:
        return LeakageResult(0.0, Method.EXACT_INTEGRAL, None, meta)
    if s.kind is NoiseKind.WHITE:
        p = s.amplitude * sum(time_integral_abs2(tr) for tr in traces) / d_q
        return LeakageResult(p, Method.EXACT_INTEGRAL, None, meta,
                             validity_warning=_flag(p))
    total = 0.0
    peaks = []
    for tr in traces:
        if not np.any(tr.values):
            continue
        peak = peak_frequency(tr)
        peaks.append(peak)
        # The adaptive quadrature samples A~ thousands of times; a few
        # thousand grid points already give it far more accuracy than rtol.
        val, cap = _frequency_integral_oneoverf(_decimated(tr, 4096), s, peak, rtol)
        meta["omega_cap"] = cap
        total += val
    p = total / (2.0 * np.pi * d_q)
    return LeakageResult(p, Method.EXACT_INTEGRAL, peaks, meta,
                         validity_warning=_flag(p))


def leakage_peaked(traces: list[AmplitudeTrace], s: SpectralDensity,
                   d_q: int) -> LeakageResult:
    """Peaked approximation: S evaluated at each trace's peak frequency
    times the time-averaged transition probability.

    Exact for white noise (constant spectrum), an approximation otherwise.
    Identically zero traces contribute nothing and need no peak.
    """
    meta = {"steps": len(traces[0].times) - 1 if traces else 0}
    total = 0.0
    peaks = []
    for tr in traces:
        if not np.any(tr.values) or s.amplitude == 0.0:
            continue
        peak = peak_frequency(tr)
        peaks.append(peak)
        total += s.evaluate(peak) * time_integral_abs2(tr)
    p = total / d_q
    return LeakageResult(p, Method.PEAKED_APPROX, peaks or None, meta,
                         validity_warning=_flag(p))


def _child_seeds(seed: int, n: int) -> np.ndarray:
    return np.random.SeedSequence(seed).generate_state(n, dtype=np.uint64)


def leakage_monte_carlo(schedule: HamiltonianSchedule, v0, s: SpectralDensity,
                        n_traj: int, seed: int, steps: int | None = None,
                        q_states: np.ndarray | None = None,
                        a_states: np.ndarray | None = None,
                        n_q: int | None = None,
                        batch: int = 4096,
                        project_every: int = 64) -> LeakageResult:
    """Monte-Carlo leakage: average the full noisy evolution over trajectories.

    Each trajectory draws a noise realization epsilon(t) with spectrum s,
    integrates dU/dt = -i [H0(t) + eps(t) V0] U with eps held constant per
    integrator step, and evaluates (1/d_Q) Tr[P_A U(T) P_Q U(T)^H].
    Returns the trajectory mean with its standard error; per-trajectory
    seeds derive deterministically from the master seed and the mean is
    accumulated in trajectory order, so results do not depend on batching.
    """
    if n_traj < 100:
        raise ValueError("need at least 100 trajectories")
    if steps is None:
        steps = default_steps(schedule)
    v0 = np.asarray(v0)
    v0_diag = np.ascontiguousarray(np.real(np.diagonal(v0) if v0.ndim == 2 else v0))
    if v0.ndim == 2 and np.max(np.abs(v0 - np.diag(np.diagonal(v0)))) > 1e-12:
        raise ValueError("Monte-Carlo noise operator must be diagonal")
    d = schedule.dim
    if q_states is None or a_states is None:
        from .evolution import default_projectors
        p_q, p_a = default_projectors(d, n_q)
        q_states = _basis_from_projector(p_q)
        a_states = _basis_from_projector(p_a)
    d_q = q_states.shape[1]
    dt = schedule.duration / steps
    h_nodes = schedule.sample(0.5 * dt * np.arange(2 * steps + 1))
    seeds = _child_seeds(seed, n_traj)
    probs = np.empty(n_traj)
    for start in range(0, n_traj, batch):
        stop = min(start + batch, n_traj)
        nb = stop - start
        eps = np.empty((nb, steps))
        for i in range(nb):
            traj = synthesize_trajectory(s, schedule.duration, dt,
                                         int(seeds[start + i]))
            eps[i] = traj.samples[:steps]
        u = np.broadcast_to(np.eye(d, dtype=np.complex128), (nb, d, d)).copy()
        rk4_unitary_noise_batch(h_nodes, dt, v0_diag, eps, u, project_every)
        # (1/d_Q) ||W_a^H U W_q||_F^2
        amp = np.einsum("da,bde,eq->baq", a_states.conj(), u, q_states,
                        optimize=True)
        probs[start:stop] = np.sum(np.abs(amp) ** 2, axis=(1, 2)) / d_q
    mean = float(np.mean(probs))
    stderr = float(np.std(probs, ddof=1) / np.sqrt(n_traj))
    return LeakageResult(mean, Method.MONTE_CARLO, None,
                         {"steps": steps, "n_traj": n_traj, "seed": seed},
                         stat_error=stderr)
