"""Markovian master-equation leg: density-matrix simulations of dephasing.

Integrates drho/dt = -i[H, rho] + lam (L rho L - (L^2 rho + rho L^2)/2)
for a single diagonal jump operator L, which reproduces white-noise
dephasing exactly (coherence rho_ij decays at lam (l_i - l_j)^2 / 2).
These simulations are the independent cross-check for the perturbative
frequency-integral results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import rk4_lindblad
from .evolution import HamiltonianSchedule, default_steps
from .gates import (AdiabaticCZSpec, NotGateSpec, RapidCZSpec,
                    _not_steps, adiabatic_schedule, not_dephasing_operator,
                    not_lab_schedule, rapid_cz_schedule)
from .leakage import LeakageResult, Method

TRACE_TOL = 1e-8
POSITIVITY_TOL = 1e-8


@dataclass(frozen=True)
class LindbladModel:
    """Hamiltonian schedule plus one diagonal dephasing channel of rate lam."""

    schedule: HamiltonianSchedule
    lindblad_op: np.ndarray
    rate: float

    def __post_init__(self):
        l = np.asarray(self.lindblad_op)
        diag = np.diagonal(l) if l.ndim == 2 else l
        if l.ndim == 2 and np.max(np.abs(l - np.diag(diag))) > 1e-12:
            raise ValueError("jump operator must be diagonal")
        if np.max(np.abs(np.imag(diag))) > 1e-12:
            raise ValueError("jump operator must be real diagonal")
        if self.rate < 0:
            raise ValueError("rate must be non-negative")

    @property
    def l_diag(self) -> np.ndarray:
        l = np.asarray(self.lindblad_op)
        return np.real(np.diagonal(l) if l.ndim == 2 else l).astype(float)


@dataclass(frozen=True)
class DensityMatrixTrace:
    times: np.ndarray
    rhos: np.ndarray

    def populations(self) -> np.ndarray:
        return np.real(np.diagonal(self.rhos, axis1=1, axis2=2))


def check_density_matrix(rho: np.ndarray, trace_tol: float = TRACE_TOL,
                         pos_tol: float = POSITIVITY_TOL):
    """Validate Hermiticity (1e-10), unit trace, and positivity to tolerance."""
    if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > trace_tol:
        raise ValueError(f"trace deviates from 1 by {abs(np.trace(rho).real - 1.0):.2e}")
    evals = np.linalg.eigvalsh(rho)
    if evals.min() < -pos_tol:
        raise ValueError(f"negative eigenvalue {evals.min():.2e}")


def solve(model: LindbladModel, rho0: np.ndarray, steps: int | None = None,
          keep_every: int | None = None,
          chunk_steps: int = 16384) -> DensityMatrixTrace:
    """Fixed-step RK4 integration of the master equation.

    rho is re-Hermitized every step; trace preservation (1e-8) and
    positivity (to -1e-8) are verified on the stored snapshots, failing
    with a step-count hint.  keep_every defaults to storing at most ~4000
    snapshots.
    """
    check_density_matrix(np.asarray(rho0, np.complex128))
    if steps is None:
        steps = max(1000, default_steps(model.schedule))
    if steps < 1000:
        raise ValueError("steps must be at least 1000")
    if keep_every is None:
        keep_every = max(1, steps // 4000)
        while steps % keep_every:
            keep_every -= 1
    if steps % keep_every != 0:
        raise ValueError("keep_every must divide steps")
    sch = model.schedule
    sch.validate()
    d = sch.dim
    dt = sch.duration / steps
    n_keep = steps // keep_every
    rhos = np.empty((n_keep + 1, d, d), np.complex128)
    rhos[0] = rho0
    rho = np.array(rho0, np.complex128)
    l_diag = model.l_diag
    done = 0
    while done < steps:
        m = min(chunk_steps - chunk_steps % keep_every or keep_every, steps - done)
        ts = (done + 0.5 * np.arange(2 * m + 1)) * dt
        h_nodes = sch.sample(ts)
        out = rhos[1 + done // keep_every: 1 + (done + m) // keep_every]
        rk4_lindblad(h_nodes, dt, l_diag, model.rate, rho, out, keep_every)
        done += m
    traces = np.real(np.trace(rhos, axis1=1, axis2=2))
    if np.max(np.abs(traces - 1.0)) > TRACE_TOL:
        raise RuntimeError(
            f"trace drifted by {np.max(np.abs(traces - 1.0)):.2e}; increase steps")
    min_eval = min(np.linalg.eigvalsh(r).min() for r in rhos[:: max(1, n_keep // 64)])
    if min_eval < -POSITIVITY_TOL:
        raise RuntimeError(
            f"positivity violated ({min_eval:.2e}); increase steps")
    times = np.linspace(0.0, sch.duration, n_keep + 1)
    return DensityMatrixTrace(times=times, rhos=rhos)


# ---------------------------------------------------------------------------
# Controlled-phase gate simulations (two-level model, L = diag(0, 1)).
# ---------------------------------------------------------------------------

def cz_rapid_exact(t_phi_1: float, gate_time: float) -> LeakageResult:
    """Exact rapid-CZ master-equation leakage, (1 - e^{-T/t_phi_1})/2.

    The two-level model with L = diag(0,1) and rate 4/t_phi_1 is solvable:
    the auxiliary population after the full rotation is
    (1 - e^{-lam T/4})/2, which reduces to T/(2 t_phi_1) at first order.
    """
    if t_phi_1 <= 0 or gate_time < 0:
        raise ValueError("t_phi_1 must be positive and gate_time non-negative")
    p = 0.5 * (1.0 - math.exp(-gate_time / t_phi_1))
    return LeakageResult(p, Method.CLOSED_FORM, None, {},
                         validity_warning=p >= 0.1)


def cz_leakage_sim(spec: RapidCZSpec | AdiabaticCZSpec, t_phi_1: float,
                   steps: int | None = None) -> LeakageResult:
    """Master-equation leakage of a CZ gate with dephasing rate 4/t_phi_1.

    The single channel L = diag(0, 1) at rate 4/t_phi_1 models both qubits'
    independent dephasing of the |11>/|20> pair.  For the rapid gate the
    computational state is the bare qubit state; for the adiabatic gate it
    is the lower t=0 eigenvector (the state the optimized trajectory
    transports), and leakage is the terminal population of the upper one.
    """
    lam = 4.0 / t_phi_1
    if isinstance(spec, RapidCZSpec):
        sch = rapid_cz_schedule(spec)
        psi_q = np.array([1.0, 0.0], np.complex128)
        psi_a = np.array([0.0, 1.0], np.complex128)
    else:
        sch = adiabatic_schedule(spec)
        psi_q, psi_a = spec.initial_eigenstates()
    model = LindbladModel(sch, np.diag([0.0, 1.0]), lam)
    if steps is None:
        steps = max(2000, default_steps(sch))
    rho0 = np.outer(psi_q, psi_q.conj())
    trace = solve(model, rho0, steps=steps, keep_every=steps)
    p = float(np.real(psi_a.conj() @ trace.rhos[-1] @ psi_a))
    return LeakageResult(max(p, 0.0), Method.MASTER_EQUATION, None,
                         {"steps": steps, "rate": lam},
                         validity_warning=p >= 0.1)


# ---------------------------------------------------------------------------
# NOT-gate simulation (four-level lab frame, L = diag(0, 1, 2, 3)).
# ---------------------------------------------------------------------------

def not_leakage_sim(spec: NotGateSpec, t_phi_1: float,
                    steps: int | None = None) -> LeakageResult:
    """Dephasing-induced NOT-gate leakage from the four-level master equation.

    Solves with L = diag(0,1,2,3) at rate 2/t_phi_1, averaged over the two
    computational initial states; leakage counts the terminal population of
    both auxiliary levels.  The noiseless (rate 0) intrinsic leakage of the
    same pulse is subtracted to isolate the dephasing-induced part (the
    cross term vanishes at first order in the noise); the raw and intrinsic
    values are reported alongside.
    """
    lam = 2.0 / t_phi_1
    sch = not_lab_schedule(spec)
    if steps is None:
        steps = _not_steps(spec.gate_time)
    model = LindbladModel(sch, not_dephasing_operator(), lam)
    baseline = LindbladModel(sch, not_dephasing_operator(), 0.0)
    totals = {}
    for tag, mdl in (("raw", model), ("intrinsic", baseline)):
        acc = 0.0
        for j in (0, 1):
            rho0 = np.zeros((4, 4), np.complex128)
            rho0[j, j] = 1.0
            tr = solve(mdl, rho0, steps=steps, keep_every=steps)
            acc += float(np.real(tr.rhos[-1, 2, 2] + tr.rhos[-1, 3, 3]))
        totals[tag] = 0.5 * acc
    p = totals["raw"] - totals["intrinsic"]
    return LeakageResult(max(p, 0.0), Method.MASTER_EQUATION, None,
                         {"steps": steps, "rate": lam},
                         validity_warning=p >= 0.1,
                         extra={"raw": totals["raw"],
                                "intrinsic": totals["intrinsic"]})
