"""Command-line driver: sweeps, convergence studies, CSV export.

    floquet-ness <subcommand> [--config PATH] [--workers N] [--out DIR]
                 [--cache DIR]

Subcommands
-----------
rates       rate tables for every beta in the run config
ness        steady state vs beta, with the thermal reference
check       thermalization / detailed-balance diagnostics; ``--converge``
            adds an (e_cut x nu_cut) residual sweep
bound       thermal-domain estimate vs driving strength, all level pairs
lowt        zero-temperature limiting rates and the steady-state asymptote
ratesym     a^nu vs a^-nu along a geometric beta sequence
dump-solve  debug dump of the linear system, amplitudes and T row

Exit codes: 0 ok, 2 config error, 3 numerical failure, 4 convergence guard.
Identical configs produce bit-identical CSVs regardless of worker count.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import diagnostics as diag
from . import io as fio
from .cache import SolutionCache
from .config import RunConfig, config_hash, load_config
from .errors import ConfigError, ConvergenceError, FloquetNessError
from .model import SystemSpec, Truncation
from .ness import boltzmann, steady_state_of, thermal_domain_bound
from .rates import RateEngine, zero_temperature_rates
from .scattering import build_system, solve_amplitudes

__all__ = ["main", "run"]


def _comments(cfg: RunConfig, subcommand: str, extra=()) -> list:
    gap = cfg.spec.level_energy(2) - cfg.spec.level_energy(1)
    lines = [
        f"floquet-ness {subcommand}",
        f"config-hash: {config_hash(cfg)}",
        f"gap: {repr(abs(gap))}",
    ]
    lines += [f"config: {item}" for item in cfg.raw]
    lines += list(extra)
    return lines


def _engine(cfg: RunConfig, cache: SolutionCache | None,
            spec: SystemSpec | None = None,
            trunc: Truncation | None = None) -> RateEngine:
    return RateEngine(spec or cfg.spec, trunc or cfg.trunc, cache=cache)


def cmd_rates(cfg: RunConfig, out: Path, cache) -> list:
    engine = _engine(cfg, cache)
    tables = [engine.table(b) for b in sorted(cfg.beta_list)]
    for t in tables:
        t.validate()
    path = out / "rates.csv"
    fio.write_rate_csv(path, tables, _comments(cfg, "rates"))
    return [path]


def cmd_ness(cfg: RunConfig, out: Path, cache) -> list:
    engine = _engine(cfg, cache)
    rows = []
    for beta in sorted(cfg.beta_list):
        pop = steady_state_of(engine.table(beta))
        ref = boltzmann(cfg.spec, beta)
        for j in range(1, cfg.spec.n_levels + 1):
            rows.append((beta, j, pop[j], ref[j], pop[j] - ref[j]))
    path = out / "ness.csv"
    fio.write_csv(path, fio.NESS_COLUMNS, rows, _comments(cfg, "ness"))
    return [path]


def cmd_check(cfg: RunConfig, out: Path, cache, converge: bool = False) -> list:
    engine = _engine(cfg, cache)
    rows = []
    n = cfg.spec.n_levels
    for beta in sorted(cfg.beta_list):
        table = engine.table(beta)
        for j in range(1, n + 1):
            lhs, rhs = diag.thermalization_sums(table, j)
            rows.append((beta, "floquet_thermalization", j, None, None,
                         lhs, rhs, 2.0 * abs(lhs - rhs) / (lhs + rhs)))
        floor = diag.NOISE_FLOOR_FRACTION * table.max_rate()
        for j in range(1, n + 1):
            for jp in range(1, n + 1):
                if j == jp:
                    continue
                for nu in range(-cfg.trunc.nu_cut, cfg.trunc.nu_cut + 1):
                    num = table.rate(j, jp, -nu)
                    den = table.rate(jp, j, nu)
                    if num <= floor or den <= floor:
                        continue
                    ratio = diag.detailed_balance_ratio(table, jp, j, nu)
                    rows.append((beta, "detailed_balance", j, jp, nu,
                                 num, den, ratio - 1.0))
    paths = []
    path = out / "diagnostics.csv"
    fio.write_csv(path, fio.DIAG_COLUMNS, rows, _comments(cfg, "check"))
    paths.append(path)
    if converge:
        conv_rows = []
        for e_cut in cfg.e_cut_list:
            for nu_cut in cfg.nu_cut_list:
                trunc = dataclasses.replace(cfg.trunc, e_cut=float(e_cut),
                                            nu_cut=int(nu_cut))
                eng = _engine(cfg, cache, trunc=trunc)
                for beta in sorted(cfg.beta_list):
                    table = eng.table(beta)
                    for j in range(1, n + 1):
                        conv_rows.append(
                            (beta, float(e_cut), int(nu_cut), j,
                             diag.floquet_thermalization_residual(
                                 cfg.spec, table, j)))
        cpath = out / "convergence.csv"
        fio.write_csv(cpath, fio.CONVERGENCE_COLUMNS, conv_rows,
                      _comments(cfg, "check --converge"))
        paths.append(cpath)
    return paths


def cmd_bound(cfg: RunConfig, out: Path, cache, workers: int) -> list:
    lambdas = sorted(set(cfg.lambda_list))

    def one(lam: float):
        spec = dataclasses.replace(cfg.spec, lambda_drive=float(lam))
        engine = _engine(cfg, cache, spec=spec)
        vals = {}
        for j in range(1, spec.n_levels + 1):
            for jp in range(1, spec.n_levels + 1):
                if j != jp:
                    vals[(j, jp)] = thermal_domain_bound(
                        spec, cfg.trunc, j, jp, engine=engine)
        return vals

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = dict(zip(lambdas, pool.map(one, lambdas)))
    else:
        results = {lam: one(lam) for lam in lambdas}
    rows = []
    for j in range(1, cfg.spec.n_levels + 1):
        for jp in range(1, cfg.spec.n_levels + 1):
            if j == jp:
                continue
            for lam in lambdas:
                rows.append((j, jp, lam, results[lam][(j, jp)]))
    path = out / "bound.csv"
    fio.write_csv(path, fio.BOUND_COLUMNS, rows, _comments(cfg, "bound"))
    return [path]


def cmd_lowt(cfg: RunConfig, out: Path, cache) -> list:
    table = zero_temperature_rates(cfg.spec, cfg.trunc, p_min=cfg.p_min)
    rpath = out / "lowt_rates.csv"
    fio.write_rate_csv(rpath, [table], _comments(cfg, "lowt"))
    pop = steady_state_of(table)
    rows = []
    beta_inf = float("inf")
    ref = np.zeros(cfg.spec.n_levels)
    ref[int(np.argmin(cfg.spec.levels))] = 1.0
    for j in range(1, cfg.spec.n_levels + 1):
        rows.append((beta_inf, j, pop[j], float(ref[j - 1]),
                     pop[j] - float(ref[j - 1])))
    npath = out / "lowt_ness.csv"
    fio.write_csv(npath, fio.NESS_COLUMNS, rows, _comments(cfg, "lowt"))
    return [rpath, npath]


def cmd_ratesym(cfg: RunConfig, out: Path, cache) -> list:
    engine = _engine(cfg, cache)
    betas = diag.beta_zero_sequence(cfg.spec)
    tables = [engine.table(b) for b in sorted(betas)]
    path = out / "ratesym.csv"
    fio.write_rate_csv(path, tables, _comments(cfg, "ratesym"))
    return [path]


def cmd_dump_solve(cfg: RunConfig, out: Path, cache) -> list:
    spec, trunc = cfg.spec, cfg.trunc
    a = build_system(spec, trunc, cfg.solve_p, cfg.solve_j_in)
    sol = solve_amplitudes(spec, trunc, cfg.solve_p, cfg.solve_j_in)
    basis = sol.basis
    extra = [f"p: {repr(cfg.solve_p)}", f"j_in: {cfg.solve_j_in}",
             f"condition: {repr(sol.condition)}"]
    arows = [(i, k, float(a[i, k].real), float(a[i, k].imag))
             for i in range(basis.size) for k in range(basis.size)]
    apath = out / "solve_matrix.csv"
    fio.write_csv(apath, ["row", "col", "re", "im"], arows,
                  _comments(cfg, "dump-solve", extra))
    srows = []
    for k, ch in enumerate(basis.channels):
        srows.append((k, ch.j, ch.nu,
                      float(sol.psi[k].real), float(sol.psi[k].imag),
                      float(sol.t_row[k].real), float(sol.t_row[k].imag),
                      bool(sol.open_flags[k]),
                      float(sol.p_out[k]) if sol.open_flags[k] else None))
    spath = out / "solve_state.csv"
    fio.write_csv(spath, ["index", "j", "nu", "psi_re", "psi_im",
                          "t_re", "t_im", "open", "p_out"], srows,
                  _comments(cfg, "dump-solve", extra))
    return [apath, spath]


def run(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="floquet-ness",
        description="Steady states of a driven N-level system in a dilute gas")
    parser.add_argument("subcommand",
                        choices=["rates", "ness", "check", "bound", "lowt",
                                 "ratesym", "dump-solve"])
    parser.add_argument("--config", default=None, help="INI config file")
    parser.add_argument("--workers", type=int, default=0,
                        help="parallel workers (0 = all cores)")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--cache", default=None,
                        help="persistent solve-cache directory")
    parser.add_argument("--converge", action="store_true",
                        help="with 'check': sweep e_cut x nu_cut")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        workers = args.workers or cfg.workers or (os.cpu_count() or 1)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        cache = SolutionCache(args.cache) if args.cache else None
        if args.subcommand == "rates":
            paths = cmd_rates(cfg, out, cache)
        elif args.subcommand == "ness":
            paths = cmd_ness(cfg, out, cache)
        elif args.subcommand == "check":
            paths = cmd_check(cfg, out, cache, converge=args.converge)
        elif args.subcommand == "bound":
            paths = cmd_bound(cfg, out, cache, workers)
        elif args.subcommand == "lowt":
            paths = cmd_lowt(cfg, out, cache)
        elif args.subcommand == "ratesym":
            paths = cmd_ratesym(cfg, out, cache)
        else:
            paths = cmd_dump_solve(cfg, out, cache)
    except ConfigError as exc:
        _emit_error(args.subcommand, exc)
        return 2
    except ConvergenceError as exc:
        _emit_error(args.subcommand, exc)
        return 4
    except FloquetNessError as exc:
        _emit_error(args.subcommand, exc)
        return 3
    for p in paths:
        print(p)
    return 0


def _emit_error(subcommand: str, exc: Exception) -> None:
    record = {"error": type(exc).__name__, "message": str(exc),
              "subcommand": subcommand}
    print(json.dumps(record, sort_keys=True), file=sys.stderr)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
