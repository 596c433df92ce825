"""Schrodinger propagation for small time-dependent Hamiltonians.

Produces sampled propagators U0(t_k) on a uniform grid, interaction-frame
noise operators V1(t) = U0(t)^H V0 U0(t), and state traces.  Integration is
fixed-step classical RK4 with per-step renormalization to the unitary group,
so the grid is uniform (as the downstream quadratures require) and the
global error is O(steps^-4).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._kernels import rk4_unitary

# Hamiltonian entries are rad/ns; times ns.

UNITARITY_TOL = 1e-10
HERMITICITY_TOL = 1e-12

# Dimension -> number of leading computational basis states.
_DEFAULT_QUBIT_STATES = {2: 1, 3: 2, 4: 2}


class IntegrationError(RuntimeError):
    """Unitarity or normalization drifted beyond tolerance (step count too small)."""


@dataclass(frozen=True)
class HamiltonianSchedule:
    """Time-dependent Hermitian Hamiltonian on [0, duration].

    h_of_t maps a time (ns) to a dim x dim Hermitian complex matrix in
    rad/ns.  h_of_array, when given, must return the stacked (n, dim, dim)
    values for an array of times; it exists purely so integrators can avoid
    a Python call per grid node.
    """

    dim: int
    h_of_t: Callable[[float], np.ndarray]
    duration: float
    h_of_array: Callable[[np.ndarray], np.ndarray] | None = field(
        default=None, compare=False)

    def __post_init__(self):
        if self.dim not in (2, 3, 4):
            raise ValueError("dimension must be 2, 3, or 4 (dense small models)")
        if self.duration <= 0:
            raise ValueError("duration must be positive")

    def sample(self, times: np.ndarray) -> np.ndarray:
        """Hamiltonian values stacked over an array of times."""
        times = np.asarray(times, dtype=float)
        if self.h_of_array is not None:
            out = np.ascontiguousarray(self.h_of_array(times), dtype=np.complex128)
        else:
            out = np.empty((len(times), self.dim, self.dim), np.complex128)
            for i, t in enumerate(times):
                out[i] = self.h_of_t(t)
        return out

    def validate(self, n_check: int = 17):
        """Spot-check Hermiticity on a coarse grid."""
        ts = np.linspace(0.0, self.duration, n_check)
        hs = self.sample(ts)
        drift = np.max(np.abs(hs - hs.conj().transpose(0, 2, 1)))
        if drift > HERMITICITY_TOL * max(1.0, np.max(np.abs(hs))):
            raise ValueError(f"Hamiltonian is not Hermitian (drift {drift:.2e})")

    def max_norm(self, n_check: int = 33) -> float:
        """Largest spectral norm over a coarse time sample."""
        hs = self.sample(np.linspace(0.0, self.duration, n_check))
        return float(np.max(np.linalg.norm(hs, ord=2, axis=(1, 2))))


def default_steps(schedule: HamiltonianSchedule) -> int:
    """Step count resolving the fastest scale: max(1000, 200 * T * max||H||)."""
    return max(1000, int(np.ceil(200.0 * schedule.duration * schedule.max_norm())))


def default_projectors(dim: int, n_q: int | None = None):
    """Complementary diagonal projectors: first n_q basis states are the qubit."""
    if n_q is None:
        n_q = _DEFAULT_QUBIT_STATES[dim]
    if not 0 < n_q < dim:
        raise ValueError("qubit subspace must be a proper nonempty subset")
    p_q = np.zeros((dim, dim), np.complex128)
    p_q[np.arange(n_q), np.arange(n_q)] = 1.0
    p_a = np.eye(dim, dtype=np.complex128) - p_q
    return p_q, p_a


@dataclass(frozen=True)
class PropagatorTrace:
    """Noiseless propagator sampled on a uniform grid, with subspace projectors."""

    times: np.ndarray
    unitaries: np.ndarray
    projector_q: np.ndarray
    projector_a: np.ndarray

    @property
    def dim(self) -> int:
        return self.unitaries.shape[1]

    def unitarity_defect(self) -> float:
        """max_k || U_k^H U_k - I ||_max."""
        prod = np.matmul(self.unitaries.conj().transpose(0, 2, 1), self.unitaries)
        return float(np.max(np.abs(prod - np.eye(self.dim))))


@dataclass(frozen=True)
class OperatorTrace:
    """Hermitian operator sampled on a uniform grid (interaction-frame V1)."""

    times: np.ndarray
    matrices: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrices.shape[1]


@dataclass(frozen=True)
class StateTrace:
    times: np.ndarray
    states: np.ndarray

    def populations(self) -> np.ndarray:
        return np.abs(self.states) ** 2


def _node_hamiltonians(schedule, t0, dt, m):
    # H at t0, t0+dt/2, t0+dt, ..., t0+m*dt  (2m+1 nodes)
    ts = t0 + 0.5 * dt * np.arange(2 * m + 1)
    return schedule.sample(ts)


def propagate(schedule: HamiltonianSchedule, steps: int | None = None,
              n_q: int | None = None, keep_every: int = 1,
              chunk_steps: int = 16384) -> PropagatorTrace:
    """Integrate U0 on a uniform grid of `steps` steps over [0, duration].

    Parameters
    ----------
    steps : int, optional
        Number of RK4 steps (>= 100).  Defaults to default_steps(schedule).
    n_q : int, optional
        Leading basis states forming the qubit subspace (sets the stored
        projectors); defaults per dimension (2 -> 1, 3 and 4 -> 2).
    keep_every : int
        Store every keep_every-th grid point (must divide steps).  The
        initial point t=0 (U = identity) is always included.

    Raises
    ------
    IntegrationError
        If the post-projection unitarity defect still exceeds 1e-10,
        which signals that `steps` is too small for this schedule.
    """
    if steps is None:
        steps = default_steps(schedule)
    if steps < 100:
        raise ValueError("steps must be at least 100")
    if steps % keep_every != 0:
        raise ValueError("keep_every must divide steps")
    schedule.validate()
    d = schedule.dim
    dt = schedule.duration / steps
    n_keep = steps // keep_every
    unitaries = np.empty((n_keep + 1, d, d), np.complex128)
    unitaries[0] = np.eye(d)
    u = np.eye(d, dtype=np.complex128)
    done = 0
    while done < steps:
        m = min(chunk_steps - chunk_steps % keep_every or keep_every,
                steps - done)
        h_nodes = _node_hamiltonians(schedule, done * dt, dt, m)
        out = unitaries[1 + done // keep_every: 1 + (done + m) // keep_every]
        rk4_unitary(h_nodes, dt, u, out, keep_every, 1)
        done += m
    times = np.linspace(0.0, schedule.duration, n_keep + 1)
    p_q, p_a = default_projectors(d, n_q)
    trace = PropagatorTrace(times=times, unitaries=unitaries,
                            projector_q=p_q, projector_a=p_a)
    defect = trace.unitarity_defect()
    if defect > UNITARITY_TOL:
        raise IntegrationError(
            f"unitarity drift {defect:.2e} exceeds {UNITARITY_TOL}; "
            f"increase steps (used {steps})")
    return trace


def interaction_frame_operator(trace: PropagatorTrace, v0: np.ndarray) -> OperatorTrace:
    """Conjugate a static noise operator into the frame of the ideal evolution.

    V1(t_k) = U0(t_k)^H V0 U0(t_k).  v0 must be Hermitian and match the
    trace dimension; the typical dephasing operator is diagonal in the
    computational/auxiliary basis.
    """
    v0 = np.asarray(v0, dtype=np.complex128)
    if v0.shape != (trace.dim, trace.dim):
        raise ValueError(f"operator shape {v0.shape} does not match dim {trace.dim}")
    if np.max(np.abs(v0 - v0.conj().T)) > 1e-12 * max(1.0, np.max(np.abs(v0))):
        raise ValueError("noise operator must be Hermitian")
    u = trace.unitaries
    v1 = np.matmul(u.conj().transpose(0, 2, 1), np.matmul(v0, u))
    return OperatorTrace(times=trace.times, matrices=v1)


def evolve_state(schedule: HamiltonianSchedule, psi0: np.ndarray,
                 steps: int | None = None, keep_every: int = 1) -> StateTrace:
    """Evolve a normalized state, psi(t_k) = U0(t_k) psi0."""
    psi0 = np.asarray(psi0, dtype=np.complex128)
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-10:
        raise ValueError("initial state must be normalized")
    trace = propagate(schedule, steps=steps, keep_every=keep_every)
    states = np.einsum("kij,j->ki", trace.unitaries, psi0)
    norms = np.linalg.norm(states, axis=1)
    if np.max(np.abs(norms - 1.0)) > 1e-10:
        raise IntegrationError("state norm drifted beyond 1e-10")
    return StateTrace(times=trace.times, states=states)
