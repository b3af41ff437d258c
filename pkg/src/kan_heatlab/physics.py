"""Analytical and numerical heat-transfer oracles for a homogeneous wall:
steady conduction, semi-infinite transient conduction, the harmonic
(frequency-domain transfer matrix) method, discrete-time response
factors, sol-air temperature synthesis, and a Crank-Nicolson reference
solver used for cross-validation.

Sign conventions: x runs from the exterior surface (x=0) to the interior
surface (x=L); flux is positive when heat flows into the room.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import solve_banded

from .errors import ConfigError, DomainError, SchemaError, TruncationError
from .numerics import erfc

__all__ = [
    "WallSpec",
    "concrete_wall",
    "HarmonicSpec",
    "WallHarmonicResponse",
    "ResponseFactorSet",
    "steady_temp",
    "transient_temp",
    "fourier_decompose",
    "reconstruct_harmonics",
    "wall_transfer_matrix",
    "interior_surface_transfer",
    "wall_harmonic_response",
    "wall_harmonic_response_series",
    "harmonic_heat_flow",
    "response_factors",
    "response_factor_heat_flow",
    "response_factor_flux_series",
    "sol_air_from_weather",
    "SyntheticSolAir",
    "sol_air_synthetic",
    "sol_air_profile",
    "synthetic_weather",
    "read_weather_csv",
    "write_weather_csv",
    "fd_reference_solve",
    "transfer_fd_oracle",
]

OMEGA_DAY = 2.0 * np.pi / 86400.0


# ---------------------------------------------------------------------------
# Wall description
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WallSpec:
    """Homogeneous wall: thickness L [m], conductivity [W/mK],
    diffusivity [m²/s], film coefficients [W/m²K].  The overall
    transmittance K is derived unless given, in which case it must be
    consistent with 1/K = 1/h_out + L/lambda + 1/h_in."""

    thickness: float
    conductivity: float
    diffusivity: float
    h_in: float
    h_out: float
    transmittance: float = None

    def __post_init__(self):
        for name in ("thickness", "conductivity", "diffusivity", "h_in", "h_out"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"WallSpec.{name} must be strictly positive")
        resistance = 1.0 / self.h_out + self.thickness / self.conductivity + 1.0 / self.h_in
        if self.transmittance is None:
            object.__setattr__(self, "transmittance", 1.0 / resistance)
        else:
            if self.transmittance <= 0:
                raise ConfigError("WallSpec.transmittance must be strictly positive")
            if abs(1.0 / self.transmittance - resistance) > 1e-9 * max(1.0, resistance):
                raise ConfigError(
                    "WallSpec: transmittance inconsistent with layer resistances "
                    "(invariant 1/K = 1/h_out + L/lambda + 1/h_in)")

    @property
    def K(self) -> float:
        return self.transmittance

    @property
    def rho_c(self) -> float:
        """Volumetric heat capacity lambda / a [J/m³K]."""
        return self.conductivity / self.diffusivity


def concrete_wall() -> WallSpec:
    """Default 0.24 m concrete wall (handbook properties, overridable)."""
    return WallSpec(thickness=0.24, conductivity=1.74,
                    diffusivity=1.74 / 2.112e6, h_in=8.7, h_out=23.0)


# ---------------------------------------------------------------------------
# Closed-form temperature fields
# ---------------------------------------------------------------------------

def steady_temp(x, T0: float, TL: float, L: float):
    """Linear steady-state profile T0 + (TL - T0) x / L on [0, L]."""
    if not L > 0:
        raise DomainError("steady_temp: L must be positive")
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(arr > L):
        raise DomainError(f"steady_temp: x outside [0, {L}]")
    out = T0 + (TL - T0) * arr / L
    return float(out) if np.isscalar(x) else out


def transient_temp(x, tau, T0: float, T1: float, alpha: float):
    """Semi-infinite solid after a surface step: T0 + (T1-T0) erfc(x / 2 sqrt(a tau))."""
    xa = np.asarray(x, dtype=float)
    ta = np.asarray(tau, dtype=float)
    if np.any(xa < 0):
        raise DomainError("transient_temp: x must be >= 0")
    if np.any(ta <= 0):
        raise DomainError("transient_temp: tau must be positive")
    if not alpha > 0:
        raise DomainError("transient_temp: alpha must be positive")
    eta = xa / (2.0 * np.sqrt(alpha * ta))
    out = T0 + (T1 - T0) * erfc(eta)
    return float(out) if (np.isscalar(x) and np.isscalar(tau)) else out


# ---------------------------------------------------------------------------
# Harmonic decomposition of a diurnal series
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HarmonicSpec:
    mean: float                 # t0
    indoor_mean: float          # t_in
    amplitudes: np.ndarray      # A_n [degC]
    omegas: np.ndarray          # rad/s, strictly increasing
    phases: np.ndarray          # rad

    def __post_init__(self):
        for name in ("amplitudes", "omegas", "phases"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if not (self.amplitudes.shape == self.omegas.shape == self.phases.shape):
            raise ConfigError("HarmonicSpec arrays must share a shape")
        if self.omegas.size and not np.all(np.diff(self.omegas) > 0):
            raise ConfigError("HarmonicSpec omegas must be strictly increasing")

    @property
    def n(self) -> int:
        return self.amplitudes.size


def fourier_decompose(series, n_harmonics: int, indoor_mean: float = 26.0,
                      sample_dt: float = 3600.0) -> HarmonicSpec:
    """Discrete Fourier analysis of an evenly sampled periodic series into
    mean + sum A_n sin(w_n tau + phi_n).  With n_harmonics = len/2 the
    reconstruction reproduces the samples exactly."""
    arr = np.asarray(series, dtype=float)
    m = arr.size
    if m < 2:
        raise ConfigError("fourier_decompose: series too short")
    if n_harmonics > m // 2:
        raise ConfigError(
            f"fourier_decompose: at most {m // 2} harmonics for {m} samples")
    spec = np.fft.rfft(arr)
    mean = spec[0].real / m
    amps, omegas, phases = [], [], []
    for n in range(1, n_harmonics + 1):
        omega = 2.0 * np.pi * n / (m * sample_dt)
        c = spec[n]
        if 2 * n == m:  # Nyquist bin carries half weight
            amp = abs(c.real) / m
            phase = np.pi / 2 if c.real >= 0 else -np.pi / 2
        else:
            amp = 2.0 * abs(c) / m
            phase = np.arctan2(c.real, -c.imag)
        amps.append(amp)
        omegas.append(omega)
        phases.append(phase)
    return HarmonicSpec(mean, indoor_mean, np.array(amps), np.array(omegas),
                        np.array(phases))


def reconstruct_harmonics(spec: HarmonicSpec, tau):
    tau = np.asarray(tau, dtype=float)
    out = np.full(tau.shape, spec.mean)
    for a, w, p in zip(spec.amplitudes, spec.omegas, spec.phases):
        out = out + a * np.sin(w * tau + p)
    return out


# ---------------------------------------------------------------------------
# Frequency-domain wall response (transfer matrix)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WallHarmonicResponse:
    omegas: np.ndarray
    attenuation: np.ndarray  # v_n >= 1
    phase_lag: np.ndarray    # psi_n in [0, 2 pi)

    def __post_init__(self):
        for name in ("omegas", "attenuation", "phase_lag"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))


def wall_transfer_matrix(wall: WallSpec, s: complex) -> np.ndarray:
    """Complex 2x2 transmission matrix of the bare wall at Laplace variable s,
    mapping exterior-surface (T, Q) to interior-surface (T, Q)."""
    q = np.sqrt(s / wall.diffusivity)
    ql = q * wall.thickness
    lam_q = wall.conductivity * q
    return np.array([
        [np.cosh(ql), -np.sinh(ql) / lam_q],
        [-lam_q * np.sinh(ql), np.cosh(ql)],
    ])


def _film(h: float) -> np.ndarray:
    return np.array([[1.0, -1.0 / h], [0.0, 1.0]])


def interior_surface_transfer(wall: WallSpec, omega: float) -> complex:
    """Complex ratio (interior surface temp fluctuation) / (exterior air temp
    fluctuation) with the indoor air held fixed."""
    if not omega > 0:
        raise DomainError("interior_surface_transfer: omega must be positive")
    m_wall = wall_transfer_matrix(wall, 1j * omega)
    u = _film(wall.h_in) @ m_wall @ _film(wall.h_out)
    w = m_wall @ _film(wall.h_out)
    q_over_t = -u[0, 0] / u[0, 1]
    return w[0, 0] + w[0, 1] * q_over_t


def wall_harmonic_response(wall: WallSpec, omega: float):
    """(attenuation v, phase lag psi) of the exterior-air-to-interior-surface
    transfer at angular frequency omega."""
    h = interior_surface_transfer(wall, omega)
    v = 1.0 / abs(h)
    psi = float(np.mod(-np.angle(h), 2.0 * np.pi))
    return v, psi


def wall_harmonic_response_series(wall: WallSpec, omegas) -> WallHarmonicResponse:
    omegas = np.asarray(omegas, dtype=float)
    pairs = [wall_harmonic_response(wall, w) for w in omegas]
    return WallHarmonicResponse(omegas, np.array([p[0] for p in pairs]),
                                np.array([p[1] for p in pairs]))


def harmonic_heat_flow(wall: WallSpec, spec: HarmonicSpec,
                       response: WallHarmonicResponse, tau):
    """Interior flux K [t0 - t_in + (h_in/K) sum_n (A_n/v_n) sin(w t + phi - psi)]."""
    if response.omegas.shape != spec.omegas.shape or \
            not np.allclose(response.omegas, spec.omegas, rtol=1e-12, atol=0.0):
        raise ConfigError("harmonic_heat_flow: response components do not match spec")
    tau = np.asarray(tau, dtype=float)
    out = np.full(tau.shape, wall.K * (spec.mean - spec.indoor_mean))
    for a, w, p, v, psi in zip(spec.amplitudes, spec.omegas, spec.phases,
                               response.attenuation, response.phase_lag):
        out = out + wall.h_in * (a / v) * np.sin(w * tau + p - psi)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Crank-Nicolson reference solver
# ---------------------------------------------------------------------------

def _assemble(wall: WallSpec, n_nodes: int):
    """Finite-volume operator: M dT/dt = A T + b_e * t_e + b_i * t_in.

    Node 0 is the exterior surface, node n-1 the interior surface, half
    cells at both faces; the discrete steady flux equals K dT exactly.
    """
    h = wall.thickness / (n_nodes - 1)
    lam_h = wall.conductivity / h
    m_diag = np.full(n_nodes, wall.rho_c * h)
    m_diag[0] = m_diag[-1] = wall.rho_c * h / 2.0
    main = np.full(n_nodes, -2.0 * lam_h)
    main[0] = -(wall.h_out + lam_h)
    main[-1] = -(wall.h_in + lam_h)
    lower = np.full(n_nodes - 1, lam_h)
    upper = np.full(n_nodes - 1, lam_h)
    b_e = np.zeros(n_nodes)
    b_e[0] = wall.h_out
    b_i = np.zeros(n_nodes)
    b_i[-1] = wall.h_in
    return m_diag, (lower, main, upper), b_e, b_i


@dataclass
class FdSolution:
    times: np.ndarray       # seconds, aligned with the boundary series origin
    flux: np.ndarray        # interior flux W/m² at each time
    temps: np.ndarray       # final temperature profile

    def sample(self, at_times):
        return np.interp(np.asarray(at_times, dtype=float), self.times, self.flux)


def fd_reference_solve(wall: WallSpec, t_e_series, t_in=26.0, *, series_dt=3600.0,
                       dt=60.0, n_nodes=201, init="steady",
                       t_in_series=None) -> FdSolution:
    """Crank-Nicolson solve of the wall with convective boundaries.

    t_e_series gives exterior sol-air temperature at series_dt spacing
    (linearly interpolated between samples); the indoor temperature is a
    constant or a series of the same shape.  init is "steady" (profile in
    equilibrium with the first samples) or "uniform" (all nodes at t_in).
    """
    t_e_series = np.asarray(t_e_series, dtype=float)
    n_steps = int(round((t_e_series.size - 1) * series_dt / dt))
    times = np.arange(n_steps + 1) * dt
    t_e = np.interp(times, np.arange(t_e_series.size) * series_dt, t_e_series)
    if t_in_series is not None:
        t_in_arr = np.interp(times, np.arange(len(t_in_series)) * series_dt,
                             np.asarray(t_in_series, dtype=float))
    else:
        t_in_arr = np.full(n_steps + 1, float(t_in))

    m_diag, (lower, main, upper), b_e, b_i = _assemble(wall, n_nodes)
    # banded LHS/RHS matrices for (M/dt -+ A/2)
    ab = np.zeros((3, n_nodes))
    ab[0, 1:] = -0.5 * upper
    ab[1, :] = m_diag / dt - 0.5 * main
    ab[2, :-1] = -0.5 * lower

    if init == "steady":
        q0 = wall.K * (t_e[0] - t_in_arr[0])
        surf = t_e[0] - q0 / wall.h_out
        x = np.linspace(0.0, wall.thickness, n_nodes)
        temps = surf - q0 * x / wall.conductivity
    elif init == "uniform":
        temps = np.full(n_nodes, t_in_arr[0])
    else:
        raise ConfigError(f"unknown init {init!r}")

    flux = np.empty(n_steps + 1)
    flux[0] = wall.h_in * (temps[-1] - t_in_arr[0])
    for n in range(n_steps):
        forcing_old = b_e * t_e[n] + b_i * t_in_arr[n]
        forcing_new = b_e * t_e[n + 1] + b_i * t_in_arr[n + 1]
        a_t = np.empty(n_nodes)
        a_t[1:-1] = lower[:-1] * temps[:-2] + main[1:-1] * temps[1:-1] + \
            upper[1:] * temps[2:]
        a_t[0] = main[0] * temps[0] + upper[0] * temps[1]
        a_t[-1] = lower[-1] * temps[-2] + main[-1] * temps[-1]
        rhs = (m_diag / dt) * temps + 0.5 * a_t + 0.5 * (forcing_old + forcing_new)
        temps = solve_banded((1, 1), ab, rhs)
        flux[n + 1] = wall.h_in * (temps[-1] - t_in_arr[n + 1])
    return FdSolution(times, flux, temps)


def transfer_fd_oracle(wall: WallSpec, omega: float, n_nodes: int = 2000) -> complex:
    """Interior-surface transfer computed from the complex-valued discrete
    heat equation (i w M - A) T = b_e; independent of the cosh formula."""
    if not omega > 0:
        raise DomainError("transfer_fd_oracle: omega must be positive")
    m_diag, (lower, main, upper), b_e, _ = _assemble(wall, n_nodes)
    ab = np.zeros((3, n_nodes), dtype=complex)
    ab[0, 1:] = -upper
    ab[1, :] = 1j * omega * m_diag - main
    ab[2, :-1] = -lower
    sol = solve_banded((1, 1), ab, b_e.astype(complex))
    return complex(sol[-1])


# ---------------------------------------------------------------------------
# Response factors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResponseFactorSet:
    delta: float                      # timestep, s
    factors: np.ndarray               # Y(j), W/m²K
    transmittance: float              # K of the wall
    interior_factors: Optional[np.ndarray] = None  # Z(j) when computed

    @property
    def truncation(self) -> int:
        return self.factors.size - 1


def _pulse_response(wall, delta, j_cap, dt, n_nodes, exterior: bool):
    """Interior flux at j*delta after a unit triangular pulse (base 2*delta)."""
    samples = np.zeros(j_cap + 2)
    samples[1] = 1.0  # ..., 0, 1, 0, 0, ... at delta spacing; sim starts at -delta
    kwargs = dict(series_dt=delta, dt=dt, n_nodes=n_nodes, init="uniform")
    if exterior:
        sol = fd_reference_solve(wall, samples, t_in=0.0, **kwargs)
    else:
        sol = fd_reference_solve(wall, np.zeros_like(samples), t_in=0.0,
                                 t_in_series=samples, **kwargs)
    at = (np.arange(j_cap + 1) + 1) * delta  # pulse peak sits at t = delta
    resp = sol.sample(at)
    return resp if exterior else -resp


def response_factors(wall: WallSpec, delta: float = 3600.0, j_max: int = 240, *,
                     dt: float = 60.0, n_nodes: int = 201, tol_frac: float = 1e-6,
                     include_interior: bool = False) -> ResponseFactorSet:
    """Exterior response factors Y(j) from triangular-pulse FD responses,
    truncated once |Y(j)| stays below tol_frac * K.  Raises TruncationError
    (with a suggested cap) if the tail has not decayed by j_max."""
    y = _pulse_response(wall, delta, j_max, dt, n_nodes, exterior=True)
    thresh = tol_frac * wall.K
    small = np.abs(y) < thresh
    # find the first index from which everything stays small
    j_trunc = None
    run = len(y)
    for j in range(len(y) - 1, -1, -1):
        if small[j]:
            run = j
        else:
            break
    if run < len(y) and abs(y[-1]) < thresh:
        j_trunc = max(run, 1)
    if j_trunc is None:
        raise TruncationError(
            f"response factor tail above {tol_frac:g}*K at j_max={j_max}",
            suggested=int(j_max * 1.5))
    y = y[: j_trunc + 1]
    z = None
    if include_interior:
        z = _pulse_response(wall, delta, j_trunc, dt, n_nodes, exterior=False)
    return ResponseFactorSet(delta, y, wall.K, z)


def response_factor_heat_flow(factors: ResponseFactorSet, history, t_in: float = 26.0):
    """Discrete convolution sum_j Y(j) t_a(tau - j delta) - K t_in.

    history[j] must hold the sol-air temperature j steps before tau.
    """
    history = np.asarray(history, dtype=float)
    n = factors.factors.size
    if history.size < n:
        raise ValueError(
            f"response_factor_heat_flow: history of length {history.size} "
            f"shorter than truncation {n}")
    return float(factors.factors @ history[:n] - factors.transmittance * t_in)


def response_factor_flux_series(factors: ResponseFactorSet, series, t_in: float = 26.0):
    """Flux at every series index with a full history; returns
    (start_index, flux array) where start_index = truncation J."""
    series = np.asarray(series, dtype=float)
    j = factors.truncation
    if series.size <= j:
        raise ValueError("series shorter than the response factor truncation")
    conv = np.convolve(series, factors.factors)
    return j, conv[j:series.size] - factors.transmittance * t_in


# ---------------------------------------------------------------------------
# Sol-air temperature
# ---------------------------------------------------------------------------

def sol_air_from_weather(t_out, irradiance, h_out: float = 23.0,
                         absorptance: float = 0.7, lw_correction_k: float = 0.0):
    """t_sa = t_out + a_s I / h_out - lw_correction_k (3.9 K horizontal, 0 vertical)."""
    t_out = np.asarray(t_out, dtype=float)
    irradiance = np.asarray(irradiance, dtype=float)
    return t_out + absorptance * irradiance / h_out - lw_correction_k


@dataclass(frozen=True)
class SyntheticSolAir:
    mean: float = 30.0
    amp1: float = 8.0
    phase1: float = -np.pi / 2
    amp2: float = 2.0
    phase2: float = 0.0


def sol_air_synthetic(hours, config: SyntheticSolAir = SyntheticSolAir()):
    """Documented two-harmonic synthetic sol-air profile."""
    tau = np.asarray(hours, dtype=float) * 3600.0
    return (config.mean
            + config.amp1 * np.sin(OMEGA_DAY * tau + config.phase1)
            + config.amp2 * np.sin(2.0 * OMEGA_DAY * tau + config.phase2))


def sol_air_profile(weather_csv: Optional[str] = None,
                    synthetic: Optional[SyntheticSolAir] = None,
                    n_hours: int = 24, lw_correction_k: float = 0.0,
                    h_out: float = 23.0):
    """Hourly sol-air series from a weather CSV or a synthetic config."""
    if weather_csv is not None:
        hour, t_out, irr = read_weather_csv(weather_csv)
        return sol_air_from_weather(t_out, irr, h_out=h_out,
                                    lw_correction_k=lw_correction_k)
    return sol_air_synthetic(np.arange(n_hours),
                             synthetic if synthetic is not None else SyntheticSolAir())


WEATHER_COLUMNS = ("hour", "t_out_C", "irradiance_Wm2")


def read_weather_csv(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in WEATHER_COLUMNS:
            if col not in header:
                raise SchemaError(f"weather CSV missing column {col!r}")
        rows = [(float(r["hour"]), float(r["t_out_C"]), float(r["irradiance_Wm2"]))
                for r in reader]
    if not rows:
        raise SchemaError("weather CSV has no data rows")
    arr = np.array(rows)
    return arr[:, 0], arr[:, 1], arr[:, 2]


def write_weather_csv(path, hour, t_out, irradiance):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(WEATHER_COLUMNS)
        for h, t, i in zip(hour, t_out, irradiance):
            writer.writerow([repr(float(h)), repr(float(t)), repr(float(i))])


def synthetic_weather(n_hours: int, seed: int = 0, *, mean_t: float = 24.0,
                      diurnal_amp: float = 6.0, peak_irradiance: float = 550.0,
                      drift_sd: float = 1.5, noise_sd: float = 0.3):
    """Seeded synthetic hourly weather (dry-bulb + global irradiance) with
    smooth day-to-day variation; writes cleanly to the weather CSV schema."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    hours = np.arange(n_hours, dtype=float)
    day = (hours // 24).astype(int)
    n_days = int(day.max()) + 1
    drift = np.zeros(n_days)
    for d in range(1, n_days):
        drift[d] = 0.7 * drift[d - 1] + rng.normal(0.0, drift_sd)
    amp_jitter = 1.0 + 0.15 * rng.standard_normal(n_days)
    noise = np.zeros(n_hours)
    for h in range(1, n_hours):
        noise[h] = 0.9 * noise[h - 1] + rng.normal(0.0, noise_sd)
    hod = hours % 24.0
    t_out = (mean_t + drift[day]
             + diurnal_amp * amp_jitter[day] * np.sin(OMEGA_DAY * hours * 3600.0 - np.pi * 3 / 4)
             + noise)
    sun = np.clip(np.sin(np.pi * (hod - 6.0) / 12.0), 0.0, None)
    irr = peak_irradiance * np.clip(amp_jitter[day], 0.5, None) * sun
    return hours, t_out, irr
