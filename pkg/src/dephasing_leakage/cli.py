"""Command-line front end: calibrations, single-point runs, and sweeps.

Physical inputs use laboratory units (MHz/GHz for frequencies divided by
2 pi, microseconds for dephasing times, ns for gate times) and are converted
to angular rad/ns internally.  Sweep outputs are one row per (gate time,
method) with stable CSV headers or JSON lines; reruns with identical flags,
seed, and cache state are byte-identical apart from the wall-time column
(suppress it with --no-timing for fully reproducible files).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time

import numpy as np

from . import gates, leakage, lindblad, noise
from .evolution import propagate, interaction_frame_operator
from .noise import DephasingCalibration, NoiseKind

MHZ = 2.0 * np.pi * 1e-3   # MHz -> rad/ns
GHZ = 2.0 * np.pi          # GHz -> rad/ns
US = 1e3                   # us -> ns

CSV_HEADER = ("gate_time_ns,method,leakage,peak_frequency_rad_per_ns,"
              "error_estimate,wall_time_ms")

DEFAULT_CACHE = ".dephasing_leakage_cache.json"

FIG_PRESETS = {
    "2b": dict(gate="cz-adiabatic", noise="white", g_mhz=50.0, delta0_ghz=1.0,
               tphi1_us=100.0, sweep="15:100:5", methods="peaked,master-eq"),
    "2c": dict(gate="cz-adiabatic", noise="oneoverf", g_mhz=50.0, delta0_ghz=1.0,
               tphi2_us=1.0, sweep="15:100:5", methods="peaked,exact-integral"),
    "3b": dict(gate="not", noise="white", eta_mhz=260.0, f01_ghz=6.0,
               tphi1_us=100.0, sweep="10:40:2", methods="closed-form,master-eq"),
    "3c": dict(gate="not", noise="oneoverf", eta_mhz=260.0, f01_ghz=6.0,
               tphi2_us=1.0, sweep="10:40:2", methods="closed-form,exact-integral"),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage problems exit 1 (argparse default is 2, reserved here for
    # all-points numeric failure)
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(self._exit_code(message))

    @staticmethod
    def _exit_code(message):
        print(f"error: {message}", file=sys.stderr)
        return 1


def _fmt(x) -> str:
    if x is None:
        return ""
    return f"{x:.12g}"


def parse_sweep(text: str) -> list[float]:
    try:
        start, stop, step = (float(p) for p in text.split(":"))
    except ValueError as exc:
        raise UsageError(f"bad sweep spec {text!r}; expected start:stop:step") from exc
    if not (start < stop and step > 0):
        raise UsageError("sweep must satisfy start < stop and step > 0")
    n = int(math.floor((stop - start) / step + 1e-9))
    return [start + k * step for k in range(n + 1)]


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON config file; flags override its entries")
    p.add_argument("--noise", choices=["white", "oneoverf"])
    p.add_argument("--tphi1-us", type=float, help="exponential dephasing time (us)")
    p.add_argument("--tphi2-us", type=float, help="Gaussian dephasing time (us)")
    p.add_argument("--fmin-hz", type=float, help="1/f lower cutoff (Hz), default 1")
    p.add_argument("--fmax-ghz", type=float, help="1/f upper cutoff (GHz), default 100")
    p.add_argument("--methods", help="comma list: closed-form,exact-integral,"
                                     "peaked,master-eq,monte-carlo")
    p.add_argument("--steps", type=int, help="integrator steps per point")
    p.add_argument("--n-traj", type=int, help="Monte-Carlo trajectories")
    p.add_argument("--seed", type=int, help="master random seed")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--format", choices=["csv", "jsonl"], dest="fmt")
    p.add_argument("--no-timing", action="store_true",
                   help="leave the wall-time column empty (byte-reproducible files)")
    p.add_argument("--cache", help=f"optimizer cache file (default {DEFAULT_CACHE})")
    p.add_argument("--no-cache", action="store_true", help="disable the optimizer cache")
    p.add_argument("--dry-run", action="store_true",
                   help="print the resolved config as JSON and exit")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dephasing-leakage",
                description="Dephasing-induced leakage for superconducting-qubit gates")
    sub = p.add_subparsers(dest="command", required=True)

    cal = sub.add_parser("calibrate", help="spectral amplitudes from dephasing times")
    cal.add_argument("--tphi1-us", type=float)
    cal.add_argument("--tphi2-us", type=float)
    cal.add_argument("--at-ns", help="comma list of times for the decay exponent")
    cal.add_argument("--fmin-hz", type=float, default=1.0)

    rapid = sub.add_parser("cz-rapid", help="resonantly tuned controlled-phase gate")
    rapid.add_argument("--g-mhz", type=float, help="coupling g/2pi (MHz)")
    rapid.add_argument("--variant", choices=["exact", "peaked"], default="exact",
                       help="closed-form 1/f constant variant")
    _add_common(rapid)

    adia = sub.add_parser("cz-adiabatic", help="adiabatically tuned controlled-phase gate")
    adia.add_argument("--g-mhz", type=float)
    adia.add_argument("--delta0-ghz", type=float, help="initial detuning /2pi (GHz)")
    adia.add_argument("--t-ns", type=float, help="single gate time (ns)")
    adia.add_argument("--sweep-ns", help="gate-time sweep start:stop:step (ns)")
    _add_common(adia)

    ngate = sub.add_parser("not", help="microwave NOT gate")
    ngate.add_argument("--eta-mhz", type=float, help="anharmonicity /2pi (MHz)")
    ngate.add_argument("--f01-ghz", type=float, help="qubit frequency /2pi (GHz)")
    ngate.add_argument("--t-ns", type=float)
    ngate.add_argument("--sweep-ns", help="gate-time sweep start:stop:step (ns)")
    _add_common(ngate)

    fig = sub.add_parser("fig", help="figure-reproduction dataset shortcuts")
    fig.add_argument("label", choices=sorted(FIG_PRESETS))
    _add_common(fig)
    return p


# ---------------------------------------------------------------------------
# Config resolution
# ---------------------------------------------------------------------------

_DEFAULTS = dict(noise="white", fmin_hz=1.0, fmax_ghz=100.0, n_traj=2000,
                 seed=1234, fmt="csv", steps=None, out=None,
                 tphi1_us=None, tphi2_us=None, g_mhz=None, delta0_ghz=None,
                 eta_mhz=None, f01_ghz=None, t_ns=None, sweep=None,
                 methods=None, variant="exact", no_timing=False,
                 cache=DEFAULT_CACHE, no_cache=False)

_DEFAULT_METHODS = {"cz-rapid": "closed-form", "cz-adiabatic": "peaked",
                    "not": "closed-form"}

KNOWN_METHODS = ("closed-form", "exact-integral", "peaked", "master-eq",
                 "monte-carlo")


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge defaults, config file, and flags (flags win) into one dict."""
    cfg = dict(_DEFAULTS)
    cfg["gate"] = args.command
    if getattr(args, "config", None):
        with open(args.config) as fh:
            file_cfg = json.load(fh)
        unknown = set(file_cfg) - set(_DEFAULTS) - {"gate"}
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(file_cfg)
    if args.command == "fig":
        preset = dict(FIG_PRESETS[args.label])
        cfg["gate"] = preset.pop("gate")
        cfg["sweep"] = preset.pop("sweep")
        cfg["methods"] = preset.pop("methods")
        cfg.update(preset)
    for key, dest in [("noise", "noise"), ("tphi1_us", "tphi1_us"),
                      ("tphi2_us", "tphi2_us"), ("fmin_hz", "fmin_hz"),
                      ("fmax_ghz", "fmax_ghz"), ("methods", "methods"),
                      ("steps", "steps"), ("n_traj", "n_traj"), ("seed", "seed"),
                      ("out", "out"), ("fmt", "fmt"), ("g_mhz", "g_mhz"),
                      ("delta0_ghz", "delta0_ghz"), ("eta_mhz", "eta_mhz"),
                      ("f01_ghz", "f01_ghz"), ("t_ns", "t_ns"),
                      ("variant", "variant"), ("cache", "cache")]:
        val = getattr(args, key, None)
        if val is not None:
            cfg[dest] = val
    if getattr(args, "sweep_ns", None):
        cfg["sweep"] = args.sweep_ns
    if getattr(args, "no_timing", False):
        cfg["no_timing"] = True
    if getattr(args, "no_cache", False):
        cfg["no_cache"] = True
    if cfg["methods"] is None:
        cfg["methods"] = _DEFAULT_METHODS[cfg["gate"]]
    if isinstance(cfg["methods"], str):
        cfg["methods"] = [m.strip() for m in cfg["methods"].split(",") if m.strip()]
    bad = [m for m in cfg["methods"] if m not in KNOWN_METHODS]
    if bad:
        raise UsageError(f"unknown methods: {bad}; choose from {KNOWN_METHODS}")
    if not cfg["methods"]:
        raise UsageError("at least one method must be selected")
    return cfg


def _gate_times(cfg: dict) -> list[float]:
    if cfg.get("sweep"):
        return parse_sweep(cfg["sweep"]) if isinstance(cfg["sweep"], str) else list(cfg["sweep"])
    if cfg["gate"] == "cz-rapid":
        if cfg["g_mhz"] is None:
            raise UsageError("cz-rapid requires --g-mhz")
        return [math.pi / (cfg["g_mhz"] * MHZ)]
    if cfg.get("t_ns") is None:
        raise UsageError("provide --t-ns or --sweep-ns")
    return [float(cfg["t_ns"])]


def _calibration(cfg: dict, multiplicity: int) -> DephasingCalibration:
    return DephasingCalibration(
        t_phi_1=cfg["tphi1_us"] * US if cfg["tphi1_us"] else None,
        t_phi_2=cfg["tphi2_us"] * US if cfg["tphi2_us"] else None,
        qubit_multiplicity=multiplicity)


def _spectrum(cfg: dict, multiplicity: int) -> noise.SpectralDensity:
    cal = _calibration(cfg, multiplicity)
    if cfg["noise"] == "white":
        if cal.t_phi_1 is None:
            raise UsageError("white noise requires --tphi1-us")
        return noise.white_from_t1(cal)
    if cal.t_phi_2 is None:
        raise UsageError("1/f noise requires --tphi2-us")
    return noise.oneoverf_from_t2(cal, f_min=cfg["fmin_hz"],
                                  f_max=cfg["fmax_ghz"] * 1e9)


def _noise_kind(cfg: dict) -> NoiseKind:
    return NoiseKind.WHITE if cfg["noise"] == "white" else NoiseKind.ONE_OVER_F


# ---------------------------------------------------------------------------
# Optimizer cache
# ---------------------------------------------------------------------------

class OptimizerCache:
    """Content-addressed store for optimized pulse parameters."""

    def __init__(self, path: str | None):
        self.path = path
        self.data = {}
        if path:
            try:
                with open(path) as fh:
                    self.data = json.load(fh)
            except (OSError, json.JSONDecodeError):
                self.data = {}

    @staticmethod
    def key(**kwargs) -> str:
        blob = json.dumps(kwargs, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()

    def get(self, key: str):
        return self.data.get(key)

    def put(self, key: str, value: dict):
        self.data[key] = value
        if self.path:
            try:
                with open(self.path, "w") as fh:
                    json.dump(self.data, fh, indent=0, sort_keys=True)
            except OSError:
                pass


def _optimized_adiabatic(cfg, g, delta0, t, cache, warm):
    key = OptimizerCache.key(gate="cz-adiabatic", g=g, delta0=delta0, t=t)
    hit = cache.get(key)
    if hit:
        return gates.AdiabaticCZSpec(g, delta0, t, hit["theta1"], hit["theta2"],
                                     residual=hit["residual"])
    spec = gates.optimize_adiabatic(g, delta0, t, seed=cfg["seed"],
                                    initial_guess=warm)
    cache.put(key, {"theta1": spec.theta1, "theta2": spec.theta2,
                    "residual": spec.residual})
    return spec


def _optimized_drag(cfg, omega01, eta, t, cache, warm):
    key = OptimizerCache.key(gate="not", omega01=omega01, eta=eta, t=t)
    hit = cache.get(key)
    if hit:
        return gates.NotGateSpec(omega01, eta, t, hit["drive_freq"],
                                 hit["amp_x"], hit["amp_y"],
                                 infidelity=hit["infidelity"],
                                 intrinsic_leakage=hit["intrinsic_leakage"])
    spec = gates.optimize_drag(omega01, eta, t, seed=cfg["seed"],
                               initial_guess=warm)
    cache.put(key, {"drive_freq": spec.drive_freq, "amp_x": spec.amp_x,
                    "amp_y": spec.amp_y, "infidelity": spec.infidelity,
                    "intrinsic_leakage": spec.intrinsic_leakage})
    return spec


# ---------------------------------------------------------------------------
# Per-gate method dispatch
# ---------------------------------------------------------------------------

def _perturbative_traces(schedule, v0, n_q, steps):
    tr = propagate(schedule, steps=steps)
    v1 = interaction_frame_operator(tr, v0)
    return leakage.amplitude_traces(v1, tr.projector_q, tr.projector_a)


def _run_point(cfg: dict, method: str, t: float, state: dict) -> leakage.LeakageResult:
    gate = cfg["gate"]
    kind = _noise_kind(cfg)
    if gate == "cz-rapid":
        g = cfg["g_mhz"] * MHZ
        spec = gates.RapidCZSpec(g)
        s2 = _spectrum(cfg, 2)
        if method == "closed-form":
            return gates.rapid_cz_closed_form(spec, _calibration(cfg, 2), kind,
                                              cfg["variant"])
        if method in ("exact-integral", "peaked"):
            traces = state.get("traces")
            if traces is None:
                traces = state["traces"] = _perturbative_traces(
                    gates.rapid_cz_schedule(spec), np.diag([0.0, 1.0]), None,
                    cfg["steps"] or 4000)
            fn = leakage.leakage_exact if method == "exact-integral" else leakage.leakage_peaked
            return fn(traces, s2, 1)
        if method == "master-eq":
            if kind is not NoiseKind.WHITE:
                raise RuntimeError("the master equation models white dephasing only")
            return lindblad.cz_leakage_sim(spec, _calibration(cfg, 2).t_phi_1,
                                           steps=cfg["steps"])
        if method == "monte-carlo":
            steps = cfg["steps"] or max(1000, _nyquist_steps(s2, spec.gate_time))
            return leakage.leakage_monte_carlo(
                gates.rapid_cz_schedule(spec), np.diag([0.0, 1.0]), s2,
                cfg["n_traj"], cfg["seed"], steps=steps)

    elif gate == "cz-adiabatic":
        g = cfg["g_mhz"] * MHZ
        delta0 = cfg["delta0_ghz"] * GHZ
        s2 = _spectrum(cfg, 2)
        if method == "closed-form":
            if kind is not NoiseKind.WHITE:
                raise RuntimeError("the always-on closed form is a white-noise law")
            return gates.always_on_limit(delta0, _calibration(cfg, 2).t_phi_1)
        spec = state.get("adiabatic_spec")
        if spec is None or spec.gate_time != t:
            warm = state.get("adiabatic_warm")
            spec = _optimized_adiabatic(cfg, g, delta0, t, state["cache"], warm)
            state["adiabatic_spec"] = spec
            state["adiabatic_warm"] = (spec.theta1, spec.theta2)
        if method == "peaked":
            res = gates.adiabatic_leakage(spec, s2, "analytic")
        elif method == "exact-integral":
            res = gates.adiabatic_leakage(spec, s2, "numeric", steps=cfg["steps"])
        elif method == "master-eq":
            if kind is not NoiseKind.WHITE:
                raise RuntimeError("the master equation models white dephasing only")
            res = lindblad.cz_leakage_sim(spec, _calibration(cfg, 2).t_phi_1,
                                          steps=cfg["steps"])
        elif method == "monte-carlo":
            psi_m, psi_p = spec.initial_eigenstates()
            steps = cfg["steps"] or max(2000, _nyquist_steps(s2, t))
            res = leakage.leakage_monte_carlo(
                gates.adiabatic_schedule(spec), np.diag([0.0, 1.0]), s2,
                cfg["n_traj"], cfg["seed"], steps=steps,
                q_states=psi_m[:, None], a_states=psi_p[:, None])
        res.extra["residual"] = spec.residual
        return res

    elif gate == "not":
        eta = cfg["eta_mhz"] * MHZ
        s1 = _spectrum(cfg, 1)
        if method == "closed-form":
            return gates.not_gate_closed_form(eta, t, _calibration(cfg, 1), kind)
        if method in ("exact-integral", "peaked", "monte-carlo"):
            sch = gates.not_rotating_schedule(eta, t)
            if method == "monte-carlo":
                steps = cfg["steps"] or max(1000, _nyquist_steps(s1, t))
                return leakage.leakage_monte_carlo(sch, np.diag([0.0, 1.0, 2.0]),
                                                   s1, cfg["n_traj"], cfg["seed"],
                                                   steps=steps)
            traces = state.get("not_traces")
            if traces is None:
                traces = state["not_traces"] = _perturbative_traces(
                    sch, np.diag([0.0, 1.0, 2.0]), None, cfg["steps"] or 8000)
            fn = leakage.leakage_exact if method == "exact-integral" else leakage.leakage_peaked
            return fn(traces, s1, 2)
        if method == "master-eq":
            if kind is not NoiseKind.WHITE:
                raise RuntimeError("the master equation models white dephasing only")
            if cfg["f01_ghz"] is None:
                raise UsageError("NOT master-eq requires --f01-ghz")
            omega01 = cfg["f01_ghz"] * GHZ
            warm = None
            prev = state.get("drag_prev")
            if prev is not None:
                t_prev, sp = prev
                r = t_prev / t
                warm = (sp.amp_x * r, sp.amp_y * r * r,
                        omega01 + (sp.drive_freq - omega01) * r * r)
            spec = _optimized_drag(cfg, omega01, eta, t, state["cache"], warm)
            state["drag_prev"] = (t, spec)
            res = lindblad.not_leakage_sim(spec, _calibration(cfg, 1).t_phi_1,
                                           steps=cfg["steps"])
            res.extra["infidelity"] = spec.infidelity
            res.extra["intrinsic_leakage"] = spec.intrinsic_leakage
            return res

    raise RuntimeError(f"method {method} is not available for gate {gate}")


def _nyquist_steps(s: noise.SpectralDensity, duration: float) -> int:
    if s.kind is NoiseKind.ONE_OVER_F:
        return int(math.ceil(duration * s.omega_max / math.pi)) + 1
    return 1000


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def _row_dict(t, method, res: leakage.LeakageResult | None, wall_ms, cfg):
    peak = None
    err = None
    leak = None
    if res is not None:
        leak = res.probability
        if res.peak_frequencies:
            peak = res.peak_frequencies[0]
        err = res.stat_error if res.stat_error is not None else res.extra.get("residual")
    return {"gate_time_ns": t, "method": method, "leakage": leak,
            "peak_frequency_rad_per_ns": peak, "error_estimate": err,
            "wall_time_ms": None if cfg["no_timing"] else wall_ms}


def _emit(cfg: dict, rows: list[dict], stream):
    if cfg["fmt"] == "csv":
        print(CSV_HEADER, file=stream)
        for r in rows:
            print(",".join(_fmt(r[k]) if not isinstance(r[k], str) else r[k]
                           for k in ("gate_time_ns", "method", "leakage",
                                     "peak_frequency_rad_per_ns",
                                     "error_estimate", "wall_time_ms")),
                  file=stream)
    else:
        echo = {k: v for k, v in sorted(cfg.items())}
        print(json.dumps({"config": echo}), file=stream)
        for r in rows:
            print(json.dumps(r), file=stream)


def cmd_run(args) -> int:
    cfg = resolve_config(args)
    if getattr(args, "dry_run", False):
        print(json.dumps({k: v for k, v in sorted(cfg.items())}, indent=2))
        return 0
    times = _gate_times(cfg)
    cache = OptimizerCache(None if cfg["no_cache"] else cfg["cache"])
    state = {"cache": cache}
    rows = []
    failures = 0
    total = 0
    for t in times:
        state.pop("adiabatic_spec", None)
        state.pop("traces", None)
        state.pop("not_traces", None)
        for method in cfg["methods"]:
            total += 1
            t0 = time.perf_counter()
            try:
                res = _run_point(cfg, method, t, state)
            except UsageError:
                raise
            except Exception as exc:  # per-point failures must not kill the sweep
                failures += 1
                print(f"point t={t} ns method={method} failed: {exc}",
                      file=sys.stderr)
                res = None
            wall = (time.perf_counter() - t0) * 1e3
            rows.append(_row_dict(t, method, res, wall, cfg))
    rows.sort(key=lambda r: (r["gate_time_ns"],
                             cfg["methods"].index(r["method"])))
    if cfg["out"]:
        with open(cfg["out"], "w", newline="") as fh:
            _emit(cfg, rows, fh)
    else:
        _emit(cfg, rows, sys.stdout)
    if failures == total:
        return 2
    return 0


def cmd_calibrate(args) -> int:
    given = [x for x in (args.tphi1_us, args.tphi2_us) if x is not None]
    if len(given) != 1:
        print("error: provide exactly one of --tphi1-us / --tphi2-us",
              file=sys.stderr)
        return 1
    at = []
    if args.at_ns:
        at = [float(x) for x in args.at_ns.split(",")]
    if args.tphi1_us is not None:
        t1 = args.tphi1_us * US
        for mult in (1, 2):
            s = noise.white_from_t1(DephasingCalibration(t_phi_1=t1,
                                                         qubit_multiplicity=mult))
            label = "single" if mult == 1 else "two-qubit"
            print(f"S0 ({label}) = {s.amplitude:.6g} 1/ns")
        s1q = noise.white_from_t1(DephasingCalibration(t_phi_1=t1))
        for t in at:
            d = noise.dephasing_exponent(s1q, t)
            print(f"D(t={t:g} ns) = {d:.6g}  (exp decay factor {math.exp(-d):.6g})")
    else:
        t2 = args.tphi2_us * US
        for mult in (1, 2):
            s = noise.oneoverf_from_t2(
                DephasingCalibration(t_phi_2=t2, qubit_multiplicity=mult),
                f_min=args.fmin_hz)
            label = "single" if mult == 1 else "two-qubit"
            print(f"S1 ({label}) = {s.amplitude:.6g} 1/ns^2")
        s1q = noise.oneoverf_from_t2(DephasingCalibration(t_phi_2=t2),
                                     f_min=args.fmin_hz)
        for t in at:
            d = noise.dephasing_exponent(s1q, t)
            lf = noise.log_cutoff_factor(t, f_min=args.fmin_hz)
            print(f"D(t={t:g} ns) = {d:.6g}  log factor = {lf:.6g}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        if args.command == "calibrate":
            return cmd_calibrate(args)
        return cmd_run(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
