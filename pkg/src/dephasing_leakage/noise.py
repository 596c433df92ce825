"""Classical dephasing-noise spectra and stochastic trajectory synthesis.

Internal units: time in ns, angular frequency in rad/ns.  White-noise
amplitudes are in 1/ns, 1/f amplitudes in 1/ns^2.  Cutoff frequencies are
specified in Hz (laboratory units) and converted internally.

The double-sided convention is used throughout: the autocorrelation of the
noise is C(tau) = (1/2pi) * integral S(omega) exp(i omega tau) domega.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.integrate import quad

# 1 Hz expressed as an angular frequency in rad/ns.
HZ_TO_RAD_PER_NS = 2.0 * np.pi * 1e-9

EULER_GAMMA = 0.5772156649015329


class QuadratureError(RuntimeError):
    """Raised when adaptive quadrature cannot reach the requested tolerance."""

    def __init__(self, message, value=None, error_estimate=None):
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate


class NoiseKind(Enum):
    WHITE = "white"
    ONE_OVER_F = "oneoverf"


@dataclass(frozen=True)
class SpectralDensity:
    """Double-sided noise spectral density S(omega).

    Parameters
    ----------
    kind : NoiseKind
        WHITE for a flat spectrum, ONE_OVER_F for amplitude/|omega| between
        hard cutoffs.
    amplitude : float
        Flat level in 1/ns (WHITE) or 1/f amplitude in 1/ns^2 (ONE_OVER_F).
        Zero is allowed as the noiseless limit.
    f_min, f_max : float
        Lower/upper cutoff in Hz; only meaningful for ONE_OVER_F.  The
        spectrum is zero outside 2*pi*f_min <= |omega| <= 2*pi*f_max.
    """

    kind: NoiseKind
    amplitude: float
    f_min: float = 1.0
    f_max: float = 1e11

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("spectral amplitude must be non-negative")
        if self.kind is NoiseKind.ONE_OVER_F and not 0 < self.f_min < self.f_max:
            raise ValueError("1/f cutoffs must satisfy 0 < f_min < f_max")

    @property
    def omega_min(self):
        """Lower cutoff as an angular frequency in rad/ns."""
        return self.f_min * HZ_TO_RAD_PER_NS

    @property
    def omega_max(self):
        """Upper cutoff as an angular frequency in rad/ns."""
        return self.f_max * HZ_TO_RAD_PER_NS

    def evaluate(self, omega):
        """Evaluate S(omega) at angular frequency omega (rad/ns).

        Symmetric in omega; accepts scalars or arrays.  For ONE_OVER_F the
        hard cutoffs give exactly zero outside the band.
        """
        omega = np.asarray(omega, dtype=float)
        if self.kind is NoiseKind.WHITE:
            out = np.full_like(omega, self.amplitude)
        else:
            a = np.abs(omega)
            inside = (a >= self.omega_min) & (a <= self.omega_max)
            with np.errstate(divide="ignore"):
                out = np.where(inside, self.amplitude / np.where(a > 0, a, 1.0), 0.0)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class DephasingCalibration:
    """Measured dephasing times used to fix spectral amplitudes.

    t_phi_1 is the exponential ("linear") dephasing time, t_phi_2 the
    Gaussian ("quadratic") one, both in ns.  qubit_multiplicity is 1 for
    single-qubit models and 2 when two independent qubits dephase (the
    spectral amplitude doubles).
    """

    t_phi_1: float | None = None
    t_phi_2: float | None = None
    qubit_multiplicity: int = 1

    def __post_init__(self):
        if self.qubit_multiplicity not in (1, 2):
            raise ValueError("qubit_multiplicity must be 1 or 2")
        for t in (self.t_phi_1, self.t_phi_2):
            if t is not None and t <= 0:
                raise ValueError("dephasing times must be positive")


@dataclass(frozen=True)
class NoiseTrajectory:
    """One realization of the stochastic dephasing frequency epsilon(t).

    samples[k] is the value (rad/ns) held on the interval
    [k*dt, (k+1)*dt).
    """

    dt: float
    samples: np.ndarray
    seed: int


def white_from_t1(cal: DephasingCalibration) -> SpectralDensity:
    """White spectral level from the exponential dephasing time.

    A single dephasing qubit with decay exp(-t/t_phi_1) corresponds to
    S0 = 2/t_phi_1; independent qubits add, so the level is multiplied by
    qubit_multiplicity.
    """
    if cal.t_phi_1 is None or cal.t_phi_1 <= 0:
        raise ValueError("white_from_t1 requires a positive t_phi_1")
    s0 = 2.0 * cal.qubit_multiplicity / cal.t_phi_1
    return SpectralDensity(NoiseKind.WHITE, s0)


def oneoverf_from_t2(cal: DephasingCalibration, f_min: float = 1.0,
                     f_max: float = 1e11) -> SpectralDensity:
    """1/f spectral amplitude from the Gaussian dephasing time.

    Uses S1 = (1/2.6) / t_phi_2^2 per qubit; the 2.6 folds in the slowly
    varying logarithmic factor of the Gaussian-decay integral for a 1 Hz
    lower cutoff on 20-30 ns timescales (see dephasing_exponent).
    """
    if cal.t_phi_2 is None or cal.t_phi_2 <= 0:
        raise ValueError("oneoverf_from_t2 requires a positive t_phi_2")
    s1 = (cal.qubit_multiplicity / 2.6) / cal.t_phi_2 / cal.t_phi_2
    return SpectralDensity(NoiseKind.ONE_OVER_F, s1, f_min=f_min, f_max=f_max)


def log_cutoff_factor(t: float, f_min: float = 1.0) -> float:
    """Slowly varying factor ln(c/x_min) of the 1/f Gaussian-decay exponent.

    Here x_min = pi*f_min*t (f_min in Hz, t in ns) and
    ln c = 3/2 - gamma - ln 2.
    """
    x_min = np.pi * (f_min * 1e-9) * t
    ln_c = 1.5 - EULER_GAMMA - math.log(2.0)
    return ln_c - math.log(x_min)


def _sin2_over_x3_integral(x_min: float, x_max: float, rtol: float) -> tuple[float, float]:
    """Integral of sin(x)^2/x^3 over [x_min, x_max] with error estimate.

    Split at x = 1: below, substitute u = ln x so the near-1/x behaviour
    becomes a bounded smooth integrand; above, write sin^2 = (1 - cos 2x)/2
    and hand the oscillatory cosine part to the dedicated weighted rule.
    """
    total = 0.0
    err = 0.0
    split = 1.0
    lo_hi = min(split, x_max)
    if x_min < lo_hi:
        val, e = quad(lambda u: np.sin(np.exp(u)) ** 2 * np.exp(-2.0 * u),
                      math.log(x_min), math.log(lo_hi), epsrel=rtol, epsabs=0.0,
                      limit=200)
        total += val
        err += e
    if x_max > split:
        a = max(split, x_min)
        total += 0.25 * (a**-2 - x_max**-2)
        val, e = quad(lambda x: 0.5 * x**-3, a, x_max, weight="cos", wvar=2.0,
                      epsrel=rtol, epsabs=0.0, limit=500)
        total -= val
        err += e
    return total, err


def dephasing_exponent(s: SpectralDensity, t: float, rtol: float = 1e-8) -> float:
    """Dimensionless phase-decay exponent D(t) for a freely idling qubit.

    D(t) = (1/pi) * integral over omega of S(omega) [sin(omega t/2)/omega]^2,
    so the noise-averaged coherence decays as exp(-D(t)).  White noise gives
    the exact linear law S0*t/2; the 1/f case is evaluated by adaptive
    quadrature after reducing to the dimensionless sin^2(x)/x^3 integral.
    """
    if t < 0:
        raise ValueError("time must be non-negative")
    if t == 0.0 or s.amplitude == 0.0:
        return 0.0
    if s.kind is NoiseKind.WHITE:
        return 0.5 * s.amplitude * t
    x_min = 0.5 * s.omega_min * t
    x_max = 0.5 * s.omega_max * t
    val, err = _sin2_over_x3_integral(x_min, x_max, rtol)
    d = s.amplitude * t**2 / (2.0 * np.pi) * val
    if err > 10 * rtol * abs(val) + 1e-300:
        raise QuadratureError(
            f"dephasing exponent quadrature did not converge "
            f"(estimate {err:.2e} on value {val:.6e})",
            value=d, error_estimate=err * s.amplitude * t**2 / (2.0 * np.pi))
    return d


def synthesize_trajectory(s: SpectralDensity, duration: float, dt: float,
                          seed: int) -> NoiseTrajectory:
    """Draw one Gaussian stationary noise realization with spectrum S.

    Spectral synthesis: independent complex-Gaussian Fourier coefficients
    sized so the ensemble-averaged periodogram (dt/N)|FFT|^2 equals
    S(omega_k) exactly on the discrete grid, then an inverse real FFT.
    The DC coefficient is zeroed, so each realization has zero sample mean.
    Deterministic for a fixed seed.
    """
    if duration <= 0 or dt <= 0:
        raise ValueError("duration and dt must be positive")
    n = int(round(duration / dt))
    if n < 8:
        raise ValueError("too few samples; decrease dt")
    nyquist = np.pi / dt
    if s.kind is NoiseKind.ONE_OVER_F and s.omega_max > nyquist:
        raise ValueError(
            f"dt={dt} ns too coarse to resolve f_max={s.f_max} Hz "
            f"(need dt <= {np.pi / s.omega_max:.3e} ns)")
    rng = np.random.default_rng(seed)
    omegas = 2.0 * np.pi * np.fft.rfftfreq(n, d=dt)
    target = np.asarray(s.evaluate(omegas), dtype=float)
    scale = np.sqrt(n * target / (2.0 * dt))
    coeffs = scale * (rng.standard_normal(len(omegas))
                      + 1j * rng.standard_normal(len(omegas)))
    coeffs[0] = 0.0
    if n % 2 == 0:
        # Nyquist bin must be real; fold its imaginary variance back in.
        coeffs[-1] = np.sqrt(2.0) * coeffs[-1].real
    samples = np.fft.irfft(coeffs, n=n)
    return NoiseTrajectory(dt=dt, samples=samples, seed=seed)


def periodogram(traj: NoiseTrajectory) -> tuple[np.ndarray, np.ndarray]:
    """One-sided periodogram (omega_k, (dt/N)|FFT|^2) of a trajectory.

    An unbiased estimator of the generating double-sided spectrum; average
    over an ensemble of trajectories before comparing with evaluate().
    """
    n = len(traj.samples)
    spec = np.abs(np.fft.rfft(traj.samples)) ** 2 * traj.dt / n
    omegas = 2.0 * np.pi * np.fft.rfftfreq(n, d=traj.dt)
    return omegas, spec
