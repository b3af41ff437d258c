"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 numeric failure,
4 oracle validation failure.  The default output directory comes from
$KAN_HEATLAB_OUT (falling back to ./out).
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from pathlib import Path

import numpy as np

from .datasets import generate_case4_surrogate, load_case4
from .errors import ConfigError, DataError, DivergedError, SchemaError, TruncationError
from .experiments import (
    BenchSettings,
    bench_extreme,
    emit_report,
    run_case,
    run_continual,
    run_sparsity,
)
from .physics import (
    WallSpec,
    concrete_wall,
    fd_reference_solve,
    fourier_decompose,
    harmonic_heat_flow,
    interior_surface_transfer,
    response_factor_flux_series,
    response_factors,
    sol_air_synthetic,
    transfer_fd_oracle,
    wall_harmonic_response_series,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_VALIDATION = 4

_WALL_KEYS = {"thickness", "conductivity", "diffusivity", "h_in", "h_out",
              "transmittance"}


def _default_out() -> str:
    return os.environ.get("KAN_HEATLAB_OUT", "out")


def _load_wall(path) -> WallSpec:
    if path is None:
        return concrete_wall()
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"wall config {path!r} not found or unreadable")
    if "wall" not in parser:
        raise ConfigError("wall config must contain a [wall] section")
    section = parser["wall"]
    unknown = set(section) - _WALL_KEYS
    if unknown:
        raise ConfigError(f"unknown wall config keys: {', '.join(sorted(unknown))}")
    kwargs = {k: float(section[k]) for k in section}
    return WallSpec(**kwargs)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kan-heatlab",
        description="KAN formula rediscovery and building heat-transfer benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)

    p_case = sub.add_parser("case", help="formula-rediscovery case studies")
    case_sub = p_case.add_subparsers(dest="case_command", required=True)
    p_run = case_sub.add_parser("run", help="run one case study")
    p_run.add_argument("case", help="case id: 1, 2, 3 or 3star")
    p_run.add_argument("--seed", type=int, default=0,
                       help="base seed; the seed set is seed..seed+seeds-1 (default 0)")
    p_run.add_argument("--seeds", type=int, default=5,
                       help="number of seeds, best result reported (default 5)")
    p_run.add_argument("--out", default=None,
                       help="output directory (default $KAN_HEATLAB_OUT or ./out)")

    p_bench = sub.add_parser("bench", help="KAN-vs-MLP benchmark protocols")
    p_bench.add_argument("protocol", choices=["sparsity", "continual", "extreme"])
    p_bench.add_argument("--data", default=None, help="case-4 CSV path")
    p_bench.add_argument("--surrogate", action="store_true",
                         help="use the in-repo surrogate dataset")
    p_bench.add_argument("--seeds", type=int, default=10,
                         help="number of random runs per cell (default 10)")
    p_bench.add_argument("--master-seed", type=int, default=0)
    p_bench.add_argument("--out", default=None)
    p_bench.add_argument("--surrogate-buildings", type=int, default=12)
    p_bench.add_argument("--surrogate-days", type=int, default=14)
    p_bench.add_argument("--kan-steps", type=int, default=100,
                         help="L-BFGS step cap for the KAN (default 100)")
    p_bench.add_argument("--mlp-epochs", type=int, default=200)

    p_oracle = sub.add_parser("oracle", help="physics oracle cross-validation")
    oracle_sub = p_oracle.add_subparsers(dest="oracle_command", required=True)
    p_val = oracle_sub.add_parser("validate", help="run the cross-method checks")
    p_val.add_argument("--wall-config", default=None,
                       help="INI file with a [wall] section (default: concrete wall)")
    return parser


def _cmd_case(args) -> int:
    seeds = list(range(args.seed, args.seed + args.seeds))
    report = run_case(args.case, seeds)
    out = Path(args.out or _default_out()) / f"case{report.case}"
    files = emit_report(report, out)
    for r in report.results:
        status = f"r2={r.r2_formula:.6f} complexity={r.complexity}" \
            if r.error is None else f"failed: {r.error}"
        print(f"seed {r.seed}: {status}")
    if report.ols_r2 is not None:
        print(f"OLS linearity oracle r2={report.ols_r2:.6f}")
    if report.best is None:
        print("all seeds failed", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"best seed {report.best.seed}: r2={report.best.r2_formula:.6f}")
    print(f"formula: {report.best.formula_infix}")
    for f in files:
        print(f"wrote {f}")
    return EXIT_OK


def _bench_data(args):
    if args.data is not None:
        if not Path(args.data).exists():
            raise ConfigError(f"data file {args.data!r} does not exist")
        return load_case4(args.data)
    if not args.surrogate:
        raise ConfigError("bench needs --data PATH or --surrogate")
    out = Path(args.out or _default_out())
    out.mkdir(parents=True, exist_ok=True)
    path = out / (f"case4_surrogate_b{args.surrogate_buildings}"
                  f"_d{args.surrogate_days}_s{args.master_seed}.csv")
    if not path.exists():
        generate_case4_surrogate(path, n_buildings=args.surrogate_buildings,
                                 days=args.surrogate_days, seed=args.master_seed)
    return load_case4(path)


def _cmd_bench(args) -> int:
    data = _bench_data(args)
    settings = BenchSettings(kan_steps=args.kan_steps, mlp_epochs=args.mlp_epochs)
    seeds = range(args.seeds)
    out = Path(args.out or _default_out()) / args.protocol
    if args.protocol == "sparsity":
        report = run_sparsity(data, seeds=seeds, master_seed=args.master_seed,
                              settings=settings)
        for (kind, rate, seed), r2 in sorted(report.runs.items()):
            print(f"{kind} rate={rate} seed={seed}: r2={r2:.4f}")
        for rate, reason in report.skipped:
            print(f"rate {rate} skipped: {reason}")
    elif args.protocol == "continual":
        report = run_continual(data, seeds=seeds, master_seed=args.master_seed,
                               settings=settings)
        for kind in sorted(report.matrices):
            for rate in report.rates:
                mat = report.matrices[kind][rate]
                cells = ["after_task%d: %s" % (
                    s + 1, " ".join(f"{mat[s, t].mean:.3f}±{mat[s, t].std:.3f}"
                                    for t in range(3))) for s in range(3)]
                print(f"{kind} rate={rate}  " + " | ".join(cells))
    else:
        report = bench_extreme(data, seeds=seeds, master_seed=args.master_seed,
                               settings=settings)
        for kind in sorted(report.entries):
            for e in report.entries[kind]:
                print(f"{kind} top {e.threshold:.0%}: r2={e.r2:.4f} "
                      f"bias={e.mean_signed_error:.3f} n={e.count}")
    files = emit_report(report, out)
    for f in files:
        print(f"wrote {f}")
    return EXIT_OK


def _cmd_oracle(args) -> int:
    wall = _load_wall(args.wall_config)
    failures = []

    factors = response_factors(wall, include_interior=False)
    y_sum = float(np.sum(factors.factors))
    dev = abs(y_sum - wall.K) / wall.K
    print(f"sum(Y) = {y_sum:.6f} vs K = {wall.K:.6f}  deviation {dev:.3%} "
          f"(limit 0.5%)")
    if dev > 0.005:
        failures.append("steady consistency sum(Y)=K")

    # harmonic vs response factors vs Crank-Nicolson on the diurnal profile
    warm_h, cmp_h = 120, 48
    hours = np.arange(warm_h + cmp_h + 1)
    series = sol_air_synthetic(hours)
    spec = fourier_decompose(series[:24], 12, indoor_mean=26.0)
    response = wall_harmonic_response_series(wall, spec.omegas)
    window = np.arange(warm_h, warm_h + cmp_h)
    hf_harm = harmonic_heat_flow(wall, spec, response, window * 3600.0)
    j0, hf_rf_all = response_factor_flux_series(factors, series, t_in=26.0)
    hf_rf = hf_rf_all[window - j0]
    sol = fd_reference_solve(wall, series, t_in=26.0)
    hf_fd = sol.sample(window * 3600.0)
    p2p = float(hf_fd.max() - hf_fd.min())
    for name, a, b in [("harmonic vs response-factor", hf_harm, hf_rf),
                       ("harmonic vs finite-difference", hf_harm, hf_fd),
                       ("response-factor vs finite-difference", hf_rf, hf_fd)]:
        rms = float(np.sqrt(np.mean((a - b) ** 2))) / p2p
        print(f"{name}: RMS {rms:.3%} of peak-to-peak (limit 2%)")
        if rms > 0.02:
            failures.append(name)

    for n in (1, 2, 3):
        omega = n * 2.0 * np.pi / 86400.0
        analytic = interior_surface_transfer(wall, omega)
        numeric = transfer_fd_oracle(wall, omega)
        mag = abs(abs(analytic) - abs(numeric)) / abs(numeric)
        phase = abs(np.angle(analytic / numeric))
        print(f"harmonic {n}: transfer magnitude dev {mag:.3%} (limit 1%), "
              f"phase dev {phase:.4f} rad (limit 0.02)")
        if mag > 0.01 or phase > 0.02:
            failures.append(f"transfer matrix vs complex FD (harmonic {n})")

    if failures:
        print("FAILED: " + "; ".join(failures), file=sys.stderr)
        return EXIT_VALIDATION
    print("all physics cross-validation checks passed")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        if args.command == "case":
            return _cmd_case(args)
        if args.command == "bench":
            return _cmd_bench(args)
        return _cmd_oracle(args)
    except (ConfigError, SchemaError, DataError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (DivergedError, TruncationError, FloatingPointError) as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
