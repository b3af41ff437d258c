"""Case-study dataset generation, the Case-4 CSV loader and in-repo
surrogate, subsampling, task splitting, and normalization bookkeeping.

Datasets hold model-ready (normalized) values; the attached
NormalizationSpec records the affine maps back to physical units.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import ConfigError, DataError, SchemaError
from .physics import (
    OMEGA_DAY,
    ResponseFactorSet,
    WallSpec,
    concrete_wall,
    response_factor_flux_series,
    response_factors,
    sol_air_from_weather,
    steady_temp,
    synthetic_weather,
    transient_temp,
)

__all__ = [
    "NormalizationSpec",
    "Dataset",
    "SplitIndices",
    "split_indices",
    "gen_case1",
    "gen_case2",
    "gen_case3",
    "case3_sol_air",
    "case3_rows",
    "CASE4_COLUMNS",
    "load_case4",
    "generate_case4_surrogate",
    "subsample",
    "split_tasks",
    "normalize_by_task1",
]


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormalizationSpec:
    """Affine maps: normalized = (raw - offset) / scale, per feature and
    for the target.  scheme is "minmax" (offset=min, scale=max-min) or
    "zscore" (offset=mean, scale=std)."""

    input_offset: np.ndarray
    input_scale: np.ndarray
    target_offset: float
    target_scale: float
    scheme: str

    def __post_init__(self):
        object.__setattr__(self, "input_offset", np.asarray(self.input_offset, float))
        object.__setattr__(self, "input_scale", np.asarray(self.input_scale, float))
        if np.any(self.input_scale <= 0) or self.target_scale <= 0:
            raise ConfigError("normalization scales must be strictly positive")

    def normalize_inputs(self, raw):
        return (np.asarray(raw, float) - self.input_offset) / self.input_scale

    def denormalize_inputs(self, norm):
        return np.asarray(norm, float) * self.input_scale + self.input_offset

    def normalize_target(self, raw):
        return (np.asarray(raw, float) - self.target_offset) / self.target_scale

    def denormalize_target(self, norm):
        return np.asarray(norm, float) * self.target_scale + self.target_offset


@dataclass
class Dataset:
    inputs: np.ndarray
    targets: np.ndarray
    feature_names: list
    normalization: Optional[NormalizationSpec] = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=float)
        self.targets = np.asarray(self.targets, dtype=float)
        if self.inputs.ndim != 2 or self.inputs.shape[0] == 0:
            raise DataError("Dataset inputs must be a nonempty m x n matrix")
        if self.targets.shape != (self.inputs.shape[0],):
            raise DataError("Dataset targets must match the number of rows")
        if not (np.all(np.isfinite(self.inputs)) and np.all(np.isfinite(self.targets))):
            raise DataError("Dataset contains non-finite entries")
        if len(self.feature_names) != self.inputs.shape[1]:
            raise DataError("feature_names length must equal the feature count")

    @property
    def m(self):
        return self.inputs.shape[0]

    @property
    def n(self):
        return self.inputs.shape[1]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.inputs[idx], self.targets[idx], list(self.feature_names),
                       self.normalization, dict(self.provenance))

    def physical_targets(self):
        if self.normalization is None:
            return self.targets.copy()
        return self.normalization.denormalize_target(self.targets)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(list(self.feature_names) + ["target"])
            for row, t in zip(self.inputs, self.targets):
                writer.writerow([repr(float(v)) for v in row] + [repr(float(t))])

    @classmethod
    def from_csv(cls, path) -> "Dataset":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if not header or header[-1] != "target":
                raise SchemaError("dataset CSV must end with a 'target' column")
            rows = [[float(v) for v in row] for row in reader if row]
        if not rows:
            raise DataError("dataset CSV has no rows")
        arr = np.array(rows)
        return cls(arr[:, :-1], arr[:, -1], header[:-1])


@dataclass(frozen=True)
class SplitIndices:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray


def split_indices(m: int, fractions, seed: int) -> SplitIndices:
    """Seeded shuffle into train/val/test by the given fractions."""
    if len(fractions) != 3 or abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError("fractions must be three values summing to 1")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    perm = rng.permutation(m)
    n_train = int(round(fractions[0] * m))
    n_val = int(round(fractions[1] * m))
    return SplitIndices(perm[:n_train], perm[n_train:n_train + n_val],
                        perm[n_train + n_val:])


# ---------------------------------------------------------------------------
# Case 1: steady conduction through a wall
# ---------------------------------------------------------------------------

CASE1_L = 0.24
CASE1_T0 = 20.0
CASE1_TL = 40.0


def gen_case1(seed: int):
    """100 equally spaced wall positions; input x/L, target (T-T0)/(TL-T0)."""
    x = np.linspace(0.0, CASE1_L, 100)
    temps = steady_temp(x, CASE1_T0, CASE1_TL, CASE1_L)
    u = x / CASE1_L
    y = (temps - CASE1_T0) / (CASE1_TL - CASE1_T0)
    norm = NormalizationSpec([0.0], [CASE1_L], CASE1_T0, CASE1_TL - CASE1_T0, "minmax")
    ds = Dataset(u[:, None], y, ["x_over_L"], norm, {"case": "1", "seed": seed})
    return ds, split_indices(ds.m, (0.70, 0.15, 0.15), seed)


# ---------------------------------------------------------------------------
# Case 2: transient conduction into semi-infinite soil
# ---------------------------------------------------------------------------

CASE2_ALPHA = 2.5e-6
CASE2_T0 = 20.0
CASE2_T1 = 40.0
CASE2_DEPTH = 1.0      # spatial window, m
CASE2_TMAX = 86400.0   # 24 h


def gen_case2(seed: int):
    """50 depths x 100 times over 24 h (5000 rows); inputs (x/L, tau/tau_max)."""
    xs = np.linspace(0.0, CASE2_DEPTH, 50)
    taus = np.arange(1, 101) / 100.0 * CASE2_TMAX
    xx, tt = np.meshgrid(xs, taus, indexing="ij")
    temps = transient_temp(xx.ravel(), tt.ravel(), CASE2_T0, CASE2_T1, CASE2_ALPHA)
    y = (temps - CASE2_T0) / (CASE2_T1 - CASE2_T0)
    inputs = np.column_stack([xx.ravel() / CASE2_DEPTH, tt.ravel() / CASE2_TMAX])
    norm = NormalizationSpec([0.0, 0.0], [CASE2_DEPTH, CASE2_TMAX],
                             CASE2_T0, CASE2_T1 - CASE2_T0, "minmax")
    ds = Dataset(inputs, y, ["depth_over_L", "tau_over_max"], norm,
                 {"case": "2", "seed": seed})
    return ds, split_indices(ds.m, (0.60, 0.20, 0.20), seed)


# ---------------------------------------------------------------------------
# Case 3: dynamic wall heat flow from lagged sol-air temperatures
# ---------------------------------------------------------------------------

CASE3_TIN = 26.0
CASE3_WARMUP_DAYS = 5
CASE3_DAYS = 60


def case3_sol_air(seed: int, n_hours: int):
    """Synthetic two-harmonic sol-air profile with seeded smooth day-to-day
    variation (daily AR(1) mean drift, amplitude jitter, hourly AR residual)
    so consecutive days differ, as real weather does."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(3,)))
    hours = np.arange(n_hours, dtype=float)
    day = (hours // 24).astype(int)
    n_days = int(day.max()) + 1
    drift = np.zeros(n_days)
    for d in range(1, n_days):
        drift[d] = 0.7 * drift[d - 1] + rng.normal(0.0, 1.5)
    jitter = 1.0 + 0.15 * rng.standard_normal(n_days)
    noise = np.zeros(n_hours)
    for h in range(1, n_hours):
        noise[h] = 0.9 * noise[h - 1] + rng.normal(0.0, 0.4)
    tau = hours * 3600.0
    return (30.0 + drift[day]
            + 8.0 * jitter[day] * np.sin(OMEGA_DAY * tau - np.pi / 2)
            + 2.0 * np.sin(2.0 * OMEGA_DAY * tau)
            + noise)


def case3_rows(sol_air: np.ndarray, factors: ResponseFactorSet, variant: str,
               t_in: float = CASE3_TIN, start_hour: Optional[int] = None):
    """Raw (inputs, targets, start) rows: inputs are the lagged hourly
    sol-air temperatures (24 lags for 'naive', 25 for 'star'), the target
    is the response-factor interior flux at the row's hour."""
    if variant not in ("naive", "star"):
        raise ConfigError(f"unknown case-3 variant {variant!r}")
    n_lags = 24 if variant == "naive" else 25
    series = np.asarray(sol_air, dtype=float)
    j_start, flux = response_factor_flux_series(factors, series, t_in)
    first = max(j_start, n_lags - 1)
    if start_hour is not None:
        first = max(first, start_hour)
    if first >= series.size:
        raise DataError("sol-air series too short for the requested lags/warm-up")
    rows = np.arange(first, series.size)
    lags = np.arange(n_lags)
    inputs = series[rows[:, None] - lags[None, :]]
    targets = flux[rows - j_start]
    return inputs, targets, first


def gen_case3(seed: int, variant: str = "naive", *, days: int = CASE3_DAYS,
              warmup_days: int = CASE3_WARMUP_DAYS,
              wall: Optional[WallSpec] = None, sol_air: Optional[np.ndarray] = None,
              factors: Optional[ResponseFactorSet] = None):
    """Hourly rows over `days` simulated days after a warm-up; inputs are
    min-max normalized lags, target is the z-scored interior flux."""
    if wall is None:
        wall = concrete_wall()
    if factors is None:
        factors = response_factors(wall)
    n_hours = (days + warmup_days) * 24
    if sol_air is None:
        sol_air = case3_sol_air(seed, n_hours)
    else:
        sol_air = np.asarray(sol_air, dtype=float)
    inputs, targets, first = case3_rows(sol_air, factors, variant,
                                        start_hour=warmup_days * 24)
    in_min = inputs.min(axis=0)
    in_span = inputs.max(axis=0) - in_min
    if np.any(in_span <= 0):
        raise ConfigError("case 3 inputs are degenerate (constant sol-air?)")
    t_mean = float(targets.mean())
    t_std = float(targets.std())
    if t_std <= 0:
        raise ConfigError("case 3 targets are constant")
    norm = NormalizationSpec(in_min, in_span, t_mean, t_std, "minmax")
    names = [f"sol_air_lag{j}" for j in range(inputs.shape[1])]
    ds = Dataset(norm.normalize_inputs(inputs), norm.normalize_target(targets),
                 names, norm,
                 {"case": "3star" if variant == "star" else "3", "seed": seed,
                  "start_hour": int(first), "truncation": factors.truncation})
    return ds, split_indices(ds.m, (0.70, 0.15, 0.15), seed)


# ---------------------------------------------------------------------------
# Case 4: external benchmark schema, loader, and in-repo surrogate
# ---------------------------------------------------------------------------

CASE4_COLUMNS = ("temperature", "dew_point", "humidity", "pressure", "area",
                 "u_value", "heat_capacity", "heat_flow")


def load_case4(path) -> Dataset:
    """Load the Case-4 CSV (7 features + heat_flow target); rows with
    missing or unparseable values are dropped and counted."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in CASE4_COLUMNS:
            if col not in header:
                raise SchemaError(f"case-4 CSV missing column {col!r}")
        rows = []
        dropped = 0
        for record in reader:
            try:
                vals = [float(record[col]) for col in CASE4_COLUMNS]
            except (TypeError, ValueError):
                dropped += 1
                continue
            if not all(math.isfinite(v) for v in vals):
                dropped += 1
                continue
            rows.append(vals)
    if not rows:
        raise DataError(f"case-4 CSV {path}: no usable rows after cleaning")
    arr = np.array(rows)
    return Dataset(arr[:, :-1], arr[:, -1], list(CASE4_COLUMNS[:-1]),
                   provenance={"case": "4", "source": str(path), "dropped_rows": dropped})


def generate_case4_surrogate(path, *, n_buildings: int = 12, days: int = 14,
                             seed: int = 0) -> str:
    """Write a surrogate Case-4 CSV: per-building roof flux simulated with
    the response-factor oracle under seeded synthetic weather, features
    drawn from the schema, Gaussian noise at 5% of the flux std."""
    root = np.random.SeedSequence(seed, spawn_key=(4,))
    children = root.spawn(n_buildings)
    warmup_h = 24 * 10
    n_hours = warmup_h + days * 24
    records = []
    for b, child in enumerate(children):
        rng = np.random.default_rng(child)
        u_value = rng.uniform(0.8, 3.0)
        areal_hc = rng.uniform(1.0e5, 2.5e5)       # J/m²K
        area = rng.uniform(80.0, 400.0)
        thickness = 0.2
        resistance = 1.0 / u_value - 1.0 / 23.0 - 1.0 / 8.7
        conductivity = thickness / resistance
        rho_c = areal_hc / thickness
        roof = WallSpec(thickness, conductivity, conductivity / rho_c,
                        h_in=8.7, h_out=23.0)
        factors = response_factors(roof)
        hours, t_out, irr = synthetic_weather(n_hours, seed=int(rng.integers(2**31)))
        t_sa = sol_air_from_weather(t_out, irr, h_out=23.0, lw_correction_k=3.9)
        j_start, flux = response_factor_flux_series(factors, t_sa, t_in=26.0)
        spread = rng.uniform(2.0, 9.0)
        for h in range(max(warmup_h, j_start), n_hours):
            dew = t_out[h] - spread + rng.normal(0.0, 0.4)
            humidity = float(np.clip(100.0 * np.exp(-(t_out[h] - dew) / 6.0), 5.0, 100.0))
            pressure = 1013.0 + rng.normal(0.0, 2.5)
            records.append([t_out[h], dew, humidity, pressure, area, u_value,
                            areal_hc, flux[h - j_start] * area])
    arr = np.array(records)
    noise_rng = np.random.default_rng(root.spawn(n_buildings + 1)[-1])
    arr[:, -1] += noise_rng.normal(0.0, 0.05 * arr[:, -1].std(), size=arr.shape[0])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CASE4_COLUMNS)
        for row in arr:
            writer.writerow([repr(float(v)) for v in row])
    return str(path)


# ---------------------------------------------------------------------------
# Subsampling, task splitting, task-1 normalization
# ---------------------------------------------------------------------------

def subsample(ds: Dataset, rate: float, seed: int) -> Dataset:
    """Uniform subsample without replacement, ceil(rate * m) rows."""
    if not 0.0 < rate <= 1.0:
        raise ConfigError(f"subsample rate must lie in (0, 1], got {rate}")
    n = math.ceil(rate * ds.m)
    if n < 1:
        raise DataError("subsample would be empty")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(11,)))
    idx = rng.permutation(ds.m)[:n]
    out = ds.subset(idx)
    out.provenance["subsample_rate"] = rate
    return out


def split_tasks(ds: Dataset, k: int = 3, seed: int = 0):
    """Seeded partition into k near-equal disjoint tasks (remainder to the
    earliest tasks)."""
    if ds.m < k:
        raise DataError(f"cannot split {ds.m} rows into {k} tasks")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(12,)))
    perm = rng.permutation(ds.m)
    tasks = []
    for t, idx in enumerate(np.array_split(perm, k)):
        task = ds.subset(idx)
        task.provenance["task"] = t + 1
        tasks.append(task)
    return tasks


def normalize_by_task1(tasks):
    """Z-score every task's features and target with Task-1 statistics only
    (distribution shift in later tasks is preserved)."""
    first = tasks[0]
    mean = first.inputs.mean(axis=0)
    std = first.inputs.std(axis=0)
    bad = np.nonzero(std <= 0)[0]
    if bad.size:
        name = first.feature_names[bad[0]]
        raise ConfigError(f"Task-1 feature {name!r} has zero variance")
    t_mean = float(first.targets.mean())
    t_std = float(first.targets.std())
    if t_std <= 0:
        raise ConfigError("Task-1 target has zero variance")
    norm = NormalizationSpec(mean, std, t_mean, t_std, "zscore")
    out = []
    for task in tasks:
        ds = Dataset(norm.normalize_inputs(task.inputs),
                     norm.normalize_target(task.targets),
                     list(task.feature_names), norm, dict(task.provenance))
        out.append(ds)
    return out
