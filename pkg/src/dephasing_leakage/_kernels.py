"""Compiled fixed-step RK4 kernels for small dense quantum systems.

All kernels work on complex128 arrays with dimension <= 4 and a uniform
time step.  Hamiltonian values are supplied pre-evaluated on the half-step
node grid t0, t0+h/2, t1, t1+h/2, ..., tN (2*m+1 nodes for m steps), which
keeps the kernels independent of how schedules are parametrized.

Unitary integration renormalizes to the unitary group with Newton-Schulz
polar iterations, U <- U (3I - U^H U)/2, which is inverse-free and
quadratically convergent from the tiny per-step RK4 drift.
"""

import numpy as np
from numba import njit, prange


@njit(cache=True)
def _mm(a, b, out):
    d = a.shape[0]
    for i in range(d):
        for j in range(d):
            s = 0.0 + 0.0j
            for k in range(d):
                s += a[i, k] * b[k, j]
            out[i, j] = s


@njit(cache=True)
def _polar_newton_schulz(u, tmp1, tmp2, iters):
    d = u.shape[0]
    for _ in range(iters):
        # tmp1 = U^H U
        for i in range(d):
            for j in range(d):
                s = 0.0 + 0.0j
                for k in range(d):
                    s += np.conj(u[k, i]) * u[k, j]
                tmp1[i, j] = s
        # tmp1 = 3I - U^H U
        for i in range(d):
            for j in range(d):
                tmp1[i, j] = -tmp1[i, j]
            tmp1[i, i] += 3.0
        _mm(u, tmp1, tmp2)
        for i in range(d):
            for j in range(d):
                u[i, j] = 0.5 * tmp2[i, j]


@njit(cache=True)
def rk4_unitary(h_nodes, dt, u_init, out, keep_every, project_every):
    """Integrate dU/dt = -i H(t) U over m = (len(h_nodes)-1)//2 steps.

    Stores U after steps keep_every, 2*keep_every, ... into out (m//keep_every
    rows).  Returns the final U in u_init (updated in place).
    """
    d = u_init.shape[0]
    m = (h_nodes.shape[0] - 1) // 2
    u = u_init
    k1 = np.empty((d, d), np.complex128)
    k2 = np.empty((d, d), np.complex128)
    k3 = np.empty((d, d), np.complex128)
    k4 = np.empty((d, d), np.complex128)
    tmp = np.empty((d, d), np.complex128)
    t1 = np.empty((d, d), np.complex128)
    t2 = np.empty((d, d), np.complex128)
    for n in range(m):
        ha = h_nodes[2 * n]
        hb = h_nodes[2 * n + 1]
        hc = h_nodes[2 * n + 2]
        _mm(ha, u, k1)
        for i in range(d):
            for j in range(d):
                k1[i, j] *= -1j
                tmp[i, j] = u[i, j] + 0.5 * dt * k1[i, j]
        _mm(hb, tmp, k2)
        for i in range(d):
            for j in range(d):
                k2[i, j] *= -1j
                tmp[i, j] = u[i, j] + 0.5 * dt * k2[i, j]
        _mm(hb, tmp, k3)
        for i in range(d):
            for j in range(d):
                k3[i, j] *= -1j
                tmp[i, j] = u[i, j] + dt * k3[i, j]
        _mm(hc, tmp, k4)
        for i in range(d):
            for j in range(d):
                k4[i, j] *= -1j
                u[i, j] = u[i, j] + (dt / 6.0) * (k1[i, j] + 2.0 * k2[i, j]
                                                  + 2.0 * k3[i, j] + k4[i, j])
        if (n + 1) % project_every == 0:
            _polar_newton_schulz(u, t1, t2, 2)
        if (n + 1) % keep_every == 0:
            idx = (n + 1) // keep_every - 1
            for i in range(d):
                for j in range(d):
                    out[idx, i, j] = u[i, j]


@njit(cache=True, parallel=True)
def rk4_unitary_noise_batch(h_nodes, dt, v0_diag, eps, u_out, project_every):
    """Batched RK4 for dU/dt = -i [H(t) + eps_b(t) diag(v0)] U.

    eps has shape (B, m); eps[b, n] is held constant across step n.  u_out
    (B, d, d) must be initialized (identity for fresh evolutions) and is
    advanced in place.  Trajectories are independent, so the parallel loop
    cannot change results.
    """
    B = eps.shape[0]
    m = eps.shape[1]
    d = v0_diag.shape[0]
    for b in prange(B):
        u = u_out[b]
        k1 = np.empty((d, d), np.complex128)
        k2 = np.empty((d, d), np.complex128)
        k3 = np.empty((d, d), np.complex128)
        k4 = np.empty((d, d), np.complex128)
        tmp = np.empty((d, d), np.complex128)
        t1 = np.empty((d, d), np.complex128)
        t2 = np.empty((d, d), np.complex128)
        ha = np.empty((d, d), np.complex128)
        hb = np.empty((d, d), np.complex128)
        hc = np.empty((d, d), np.complex128)
        for n in range(m):
            e = eps[b, n]
            for i in range(d):
                for j in range(d):
                    ha[i, j] = h_nodes[2 * n, i, j]
                    hb[i, j] = h_nodes[2 * n + 1, i, j]
                    hc[i, j] = h_nodes[2 * n + 2, i, j]
                ha[i, i] += e * v0_diag[i]
                hb[i, i] += e * v0_diag[i]
                hc[i, i] += e * v0_diag[i]
            _mm(ha, u, k1)
            for i in range(d):
                for j in range(d):
                    k1[i, j] *= -1j
                    tmp[i, j] = u[i, j] + 0.5 * dt * k1[i, j]
            _mm(hb, tmp, k2)
            for i in range(d):
                for j in range(d):
                    k2[i, j] *= -1j
                    tmp[i, j] = u[i, j] + 0.5 * dt * k2[i, j]
            _mm(hb, tmp, k3)
            for i in range(d):
                for j in range(d):
                    k3[i, j] *= -1j
                    tmp[i, j] = u[i, j] + dt * k3[i, j]
            _mm(hc, tmp, k4)
            for i in range(d):
                for j in range(d):
                    k4[i, j] *= -1j
                    u[i, j] = u[i, j] + (dt / 6.0) * (k1[i, j] + 2.0 * k2[i, j]
                                                      + 2.0 * k3[i, j] + k4[i, j])
            if (n + 1) % project_every == 0:
                _polar_newton_schulz(u, t1, t2, 1)


@njit(cache=True)
def _lindblad_rhs(h, rho, damp, out, tmp):
    # out = -i(H rho - rho H) - damp .* rho, damp[i,j] = lam (l_i - l_j)^2 / 2
    d = rho.shape[0]
    _mm(h, rho, out)
    _mm(rho, h, tmp)
    for i in range(d):
        for j in range(d):
            out[i, j] = -1j * (out[i, j] - tmp[i, j]) - damp[i, j] * rho[i, j]


@njit(cache=True)
def rk4_lindblad(h_nodes, dt, l_diag, lam, rho, out, keep_every):
    """RK4 for the master equation with one diagonal jump operator.

    drho/dt = -i[H, rho] + lam (L rho L - (L^2 rho + rho L^2)/2) with
    L = diag(l_diag).  For diagonal L the dissipator is elementwise:
    -lam (l_i - l_j)^2 rho_ij / 2.  rho is advanced in place, Hermitized
    each step; snapshots stored as in rk4_unitary.
    """
    d = rho.shape[0]
    m = (h_nodes.shape[0] - 1) // 2
    damp = np.empty((d, d), np.float64)
    for i in range(d):
        for j in range(d):
            damp[i, j] = 0.5 * lam * (l_diag[i] - l_diag[j]) ** 2
    k1 = np.empty((d, d), np.complex128)
    k2 = np.empty((d, d), np.complex128)
    k3 = np.empty((d, d), np.complex128)
    k4 = np.empty((d, d), np.complex128)
    stage = np.empty((d, d), np.complex128)
    tmp = np.empty((d, d), np.complex128)
    for n in range(m):
        ha = h_nodes[2 * n]
        hb = h_nodes[2 * n + 1]
        hc = h_nodes[2 * n + 2]
        _lindblad_rhs(ha, rho, damp, k1, tmp)
        for i in range(d):
            for j in range(d):
                stage[i, j] = rho[i, j] + 0.5 * dt * k1[i, j]
        _lindblad_rhs(hb, stage, damp, k2, tmp)
        for i in range(d):
            for j in range(d):
                stage[i, j] = rho[i, j] + 0.5 * dt * k2[i, j]
        _lindblad_rhs(hb, stage, damp, k3, tmp)
        for i in range(d):
            for j in range(d):
                stage[i, j] = rho[i, j] + dt * k3[i, j]
        _lindblad_rhs(hc, stage, damp, k4, tmp)
        for i in range(d):
            for j in range(d):
                rho[i, j] = rho[i, j] + (dt / 6.0) * (k1[i, j] + 2.0 * k2[i, j]
                                                      + 2.0 * k3[i, j] + k4[i, j])
        # enforce Hermiticity
        for i in range(d):
            rho[i, i] = complex(rho[i, i].real, 0.0)
            for j in range(i + 1, d):
                avg = 0.5 * (rho[i, j] + np.conj(rho[j, i]))
                rho[i, j] = avg
                rho[j, i] = np.conj(avg)
        if (n + 1) % keep_every == 0:
            idx = (n + 1) // keep_every - 1
            for i in range(d):
                for j in range(d):
                    out[idx, i, j] = rho[i, j]
