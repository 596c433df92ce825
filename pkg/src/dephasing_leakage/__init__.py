"""Dephasing-induced leakage for superconducting-qubit gate models.

Transient population of auxiliary levels during a gate, combined with
classical dephasing noise on the level frequencies, leaks probability out
of the computational subspace.  This package computes that leakage three
independent ways: a perturbative spectral formula (exact frequency integral
and its spectrum-at-peak approximation), Lindblad master-equation
simulation, and stochastic-trajectory Monte Carlo, for a rapid and an
adiabatic two-qubit controlled-phase gate and a DRAG-shaped single-qubit
NOT gate.

Units: ns for times, rad/ns for angular frequencies and couplings.
"""

from .noise import (DephasingCalibration, NoiseKind, NoiseTrajectory,
                    QuadratureError, SpectralDensity, dephasing_exponent,
                    log_cutoff_factor, oneoverf_from_t2, periodogram,
                    synthesize_trajectory, white_from_t1)
from .evolution import (HamiltonianSchedule, IntegrationError, OperatorTrace,
                        PropagatorTrace, StateTrace, default_projectors,
                        evolve_state, interaction_frame_operator, propagate)
from .leakage import (AmplitudeTrace, FlatSpectrumError, LeakageResult, Method,
                      amplitude_traces, leakage_exact, leakage_monte_carlo,
                      leakage_peaked, peak_frequency, spectral_amplitude,
                      time_integral_abs2)
from .gates import (AdiabaticCZSpec, NotGateSpec, OptimizerError, RapidCZSpec,
                    adiabatic_amplitude_trace, adiabatic_leakage,
                    adiabatic_schedule, always_on_limit, eigenenergies,
                    mixing_angle, not_gate_closed_form, not_gate_metrics,
                    not_lab_schedule, not_rotating_schedule, optimize_adiabatic,
                    optimize_drag, phase_residual, rapid_cz_closed_form,
                    rapid_cz_lowf_constant, rapid_cz_schedule)
from .lindblad import (DensityMatrixTrace, LindbladModel, check_density_matrix,
                       cz_leakage_sim, cz_rapid_exact, not_leakage_sim, solve)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
