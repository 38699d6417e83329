"""Run configuration: a flat INI-style file with typed sections.

Sections (all optional; defaults reproduce the built-in three-level model):

``[system]``   levels, omega, lambda, hbar, mass, density,
               coupling_strengths, drive_profile, coupling_vectors
``[truncation]`` nu_cut, e_cut, quad_points, degeneracy_tol
``[run]``      beta_list (or beta_start/beta_ratio/beta_count), lambda_list,
               workers
``[sweep]``    e_cut_list, nu_cut_list         (check --converge)
``[solve]``    p, j_in                         (dump-solve)
``[lowt]``     p_min

``coupling_vectors`` is either the sentinel ``paper3`` or rows separated by
';' with complex entries separated by ','.  Canonicalization sorts keys and
renders floats with shortest round-trip decimals; its hash stamps every
emitted CSV.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field

from .errors import ConfigError
from .model import SystemSpec, Truncation, paper_coupling_vectors

__all__ = [
    "RunConfig",
    "load_config",
    "canonical_items",
    "config_hash",
    "spec_id",
    "trunc_id",
]


def _floats(text: str) -> tuple:
    return tuple(float(tok) for tok in text.replace(";", ",").split(",") if tok.strip())


def _ints(text: str) -> tuple:
    vals = _floats(text)
    if any(v != int(v) for v in vals):
        raise ConfigError(f"expected integers, got {text!r}")
    return tuple(int(v) for v in vals)


def _complex_rows(text: str) -> tuple:
    text = text.strip()
    if text == "paper3":
        return paper_coupling_vectors()
    rows = []
    for row in text.split(";"):
        entries = [tok.strip() for tok in row.split(",") if tok.strip()]
        try:
            rows.append(tuple(complex(tok) for tok in entries))
        except ValueError as exc:
            raise ConfigError(f"bad complex entry in coupling_vectors: {exc}")
    return tuple(rows)


@dataclass(frozen=True)
class RunConfig:
    spec: SystemSpec
    trunc: Truncation
    beta_list: tuple
    lambda_list: tuple
    workers: int = 0
    e_cut_list: tuple = ()
    nu_cut_list: tuple = ()
    solve_p: float = 0.9
    solve_j_in: int = 1
    p_min: float = 1e-3
    raw: tuple = field(default=(), repr=False)


_DEFAULT_BETAS = (0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 40.0)
_DEFAULT_LAMBDAS = (0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0)


def load_config(path=None) -> RunConfig:
    """Parse and validate a config file; None loads the built-in defaults."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    if path is not None:
        read = parser.read(str(path))
        if not read:
            raise ConfigError(f"config file {path} not found")
    sysq = parser["system"] if parser.has_section("system") else {}
    try:
        spec = SystemSpec(
            levels=_floats(sysq.get("levels", "-0.5, 0.0, 0.4")),
            omega=float(sysq.get("omega", "1.35")),
            lambda_drive=float(sysq.get("lambda", "0.5")),
            hbar=float(sysq.get("hbar", "1.0")),
            mass=float(sysq.get("mass", "1.0")),
            density=float(sysq.get("density", "1.0")),
            coupling_strengths=_floats(sysq.get("coupling_strengths", "1.0, 0.7, 1.5")),
            drive_profile=_ints(sysq.get("drive_profile", "-1, 0, 1")),
            coupling_vectors=_complex_rows(sysq.get("coupling_vectors", "paper3")),
        )
        tr = parser["truncation"] if parser.has_section("truncation") else {}
        trunc = Truncation(
            nu_cut=int(tr.get("nu_cut", "8")),
            e_cut=float(tr.get("e_cut", "150.0")),
            quad_points=int(tr.get("quad_points", "40")),
            degeneracy_tol=float(tr.get("degeneracy_tol", "1e-9")),
        )
        run = parser["run"] if parser.has_section("run") else {}
        if "beta_list" in run:
            betas = _floats(run["beta_list"])
        elif "beta_start" in run:
            start = float(run["beta_start"])
            ratio = float(run.get("beta_ratio", "0.5"))
            count = int(run.get("beta_count", "9"))
            betas = tuple(start * ratio ** k for k in range(count))
        else:
            betas = _DEFAULT_BETAS
        lambdas = _floats(run.get("lambda_list", "")) or _DEFAULT_LAMBDAS
        workers = int(run.get("workers", "0"))
        sweep = parser["sweep"] if parser.has_section("sweep") else {}
        e_cut_list = _floats(sweep.get("e_cut_list", "4, 8, 16, 32"))
        nu_cut_list = _ints(sweep.get("nu_cut_list", "1, 2, 3, 4"))
        solve = parser["solve"] if parser.has_section("solve") else {}
        solve_p = float(solve.get("p", "0.9"))
        solve_j_in = int(solve.get("j_in", "1"))
        lowt = parser["lowt"] if parser.has_section("lowt") else {}
        p_min = float(lowt.get("p_min", "1e-3"))
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc
    if any(b <= 0 for b in betas):
        raise ConfigError("beta_list entries must be positive")
    if any(l < 0 for l in lambdas):
        raise ConfigError("lambda_list entries must be nonnegative")
    cfg = RunConfig(spec=spec, trunc=trunc, beta_list=betas,
                    lambda_list=lambdas, workers=workers,
                    e_cut_list=e_cut_list, nu_cut_list=nu_cut_list,
                    solve_p=solve_p, solve_j_in=solve_j_in, p_min=p_min)
    object.__setattr__(cfg, "raw", tuple(canonical_items(cfg)))
    return cfg


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, complex):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return "(" + ",".join(_fmt(x) for x in v) + ")"
    return str(v)


def spec_items(spec: SystemSpec) -> list:
    return [
        f"levels={_fmt(spec.levels)}",
        f"omega={_fmt(spec.omega)}",
        f"lambda={_fmt(spec.lambda_drive)}",
        f"hbar={_fmt(spec.hbar)}",
        f"mass={_fmt(spec.mass)}",
        f"density={_fmt(spec.density)}",
        f"coupling_strengths={_fmt(spec.coupling_strengths)}",
        f"drive_profile={_fmt(spec.drive_profile)}",
        f"coupling_vectors={_fmt(spec.coupling_vectors)}",
    ]


def trunc_items(trunc: Truncation) -> list:
    return [
        f"nu_cut={trunc.nu_cut}",
        f"e_cut={_fmt(trunc.e_cut)}",
        f"quad_points={trunc.quad_points}",
        f"degeneracy_tol={_fmt(trunc.degeneracy_tol)}",
    ]


def spec_id(spec: SystemSpec) -> str:
    return hashlib.sha256("\n".join(spec_items(spec)).encode()).hexdigest()


def trunc_id(trunc: Truncation) -> str:
    return hashlib.sha256("\n".join(trunc_items(trunc)).encode()).hexdigest()


def canonical_items(cfg: RunConfig) -> list:
    items = sorted(
        spec_items(cfg.spec) + trunc_items(cfg.trunc) + [
            f"beta_list={_fmt(cfg.beta_list)}",
            f"lambda_list={_fmt(cfg.lambda_list)}",
            f"e_cut_list={_fmt(cfg.e_cut_list)}",
            f"nu_cut_list={_fmt(cfg.nu_cut_list)}",
            f"solve_p={_fmt(cfg.solve_p)}",
            f"solve_j_in={cfg.solve_j_in}",
            f"p_min={_fmt(cfg.p_min)}",
        ])
    return items


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256("\n".join(canonical_items(cfg)).encode()).hexdigest()
